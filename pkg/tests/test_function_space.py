import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from latlip.errors import EmptyList, SpaceMismatch
from latlip.function_space import (
    MeasurableFn,
    SpaceSpec,
    bfs_norm,
    constant,
    indicator,
    pointwise_max,
    pointwise_min,
    pointwise_product,
    restrict,
    seq_inf,
)
from latlip.measure_space import make_space, unit_grid

L1, L2, LINF = SpaceSpec.lp(1), SpaceSpec.lp(2), SpaceSpec.linf()
SPECS = [SpaceSpec.lp(1), SpaceSpec.lp(1.5), SpaceSpec.lp(2), SpaceSpec.lp(3), SpaceSpec.linf()]


def test_norm_examples():
    sp = unit_grid(4)
    assert bfs_norm(sp, L2, constant(sp, 1.0)) == pytest.approx(1.0, abs=1e-15)
    half = make_space([0.5, 0.5])
    assert bfs_norm(half, L1, MeasurableFn(half, [1, -1])) == 1.0
    # (0.5 * 9 + 0.5 * 16) ** 0.5
    assert bfs_norm(half, L2, MeasurableFn(half, [3, 4])) == pytest.approx(12.5**0.5, rel=1e-15)
    assert bfs_norm(half, LINF, MeasurableFn(half, [3, -4])) == 4.0


def test_norm_space_mismatch():
    with pytest.raises(SpaceMismatch):
        bfs_norm(unit_grid(3), L1, constant(unit_grid(4), 1.0))
    with pytest.raises(SpaceMismatch):
        constant(unit_grid(3), 1.0) + constant(unit_grid(4), 1.0)


def test_spacespec_exponents():
    assert SpaceSpec.lp(1.5).p.numerator == 3
    assert SpaceSpec.lp(2).conjugate == SpaceSpec.lp(2)
    assert SpaceSpec.lp(1).conjugate == LINF
    assert LINF.inverse == 0
    assert SpaceSpec.from_exponent("inf") == LINF
    with pytest.raises(ValueError):
        SpaceSpec.lp(0.5)
    with pytest.raises(ValueError):
        SpaceSpec(LINF.kind, 2)


def test_lattice_examples(rng):
    sp = unit_grid(6)
    chi = constant(sp, 1.0)
    assert restrict(chi, []) == constant(sp, 0.0)
    f = MeasurableFn(sp, rng.normal(size=6))
    assert pointwise_min(f, f) == f
    A = [0, 2, 3]
    Ac = [1, 4, 5]
    assert restrict(f, A) + restrict(f, Ac) == f
    assert restrict(f, A) == f * indicator(sp, A)


def test_seq_inf_examples():
    sp = make_space([1.0, 1.0])
    f = MeasurableFn(sp, [1, 2])
    assert seq_inf([f]) == f
    assert seq_inf([f, MeasurableFn(sp, [2, 1])]).values.tolist() == [1, 1]
    dec = [MeasurableFn(sp, [5 - k, 7 - 2 * k]) for k in range(4)]
    assert seq_inf(dec) == dec[-1]
    with pytest.raises(EmptyList):
        seq_inf([])


vecs = arrays(np.float64, 8, elements=st.floats(-1e3, 1e3))
weights = arrays(np.float64, 8, elements=st.floats(1e-3, 10.0))


@given(vecs, arrays(np.float64, 8, elements=st.floats(0, 1)), weights)
def test_ideal_property(g, shrink, w):
    sp = make_space(w)
    G = MeasurableFn(sp, g)
    F = MeasurableFn(sp, g * shrink * np.sign(np.cos(g)))
    for spec in SPECS:
        assert bfs_norm(sp, spec, F) <= bfs_norm(sp, spec, G) * (1 + 1e-12)


@given(vecs, vecs, weights, st.sampled_from([1.25, 1.5, 2.0, 3.0, 4.0]))
def test_holder(f, g, w, p):
    sp = make_space(w)
    F, G = MeasurableFn(sp, f), MeasurableFn(sp, g)
    spec = SpaceSpec.lp(p)
    lhs = bfs_norm(sp, L1, F * G)
    rhs = bfs_norm(sp, spec, F) * bfs_norm(sp, spec.conjugate, G)
    assert lhs <= rhs * (1 + 1e-12) + 1e-300


@settings(max_examples=50)
@given(arrays(np.float64, 8, elements=st.floats(0, 10)), weights)
def test_monotone_limit(target, w):
    # increasing sequence converging to target: norm of limit = sup of norms
    sp = make_space(w)
    lim = MeasurableFn(sp, target)
    seq = [MeasurableFn(sp, target * (1 - 2.0**-k)) for k in range(1, 60)]
    for spec in SPECS:
        sup = max(bfs_norm(sp, spec, f) for f in seq)
        assert abs(sup - bfs_norm(sp, spec, lim)) <= 1e-9 * max(1.0, bfs_norm(sp, spec, lim))


def test_pointwise_ops(rng):
    sp = unit_grid(5)
    f = MeasurableFn(sp, rng.normal(size=5))
    g = MeasurableFn(sp, rng.normal(size=5))
    assert pointwise_max(f, g).values.tolist() == np.maximum(f.values, g.values).tolist()
    assert pointwise_product(f, g).values.tolist() == (f.values * g.values).tolist()
    assert abs(f) >= constant(sp, 0.0)
