import numpy as np
import pytest

from latlip.errors import (
    DegenerateGrid,
    GridTooCoarse,
    IncompatibleSamples,
    NonzeroAtZero,
    NotIndicator,
    SpaceMismatch,
)
from latlip.free_space import Molecule, weak_probe
from latlip.function_space import MeasurableFn, constant
from latlip.lip_field import constant_field, lip_profile, per_atom_field, simple_field
from latlip.lipschitz import PwLinear, constant_fn, identity, inv_one_plus_abs, linear, pl_min
from latlip.measure_space import unit_grid
from latlip.superposition import (
    FieldOp,
    MatrixOp,
    Opaque,
    SamplerConfig,
    SimpleTensor,
    apply,
    best_bound_estimate,
    check_lattice_lipschitz,
    disjointness_check,
    inf_f2_invsqrt,
    linear_diag_detect,
    nonlipschitz_demo,
    recover_field,
    tensor_apply,
    tensor_canonicalize,
)
from latlip.suite import random_indicator_tensor, random_pl_field


def test_apply_example():
    sp = unit_grid(3)
    T = FieldOp(per_atom_field(sp, [identity(), linear(2.0), pl_min(identity(), constant_fn(1.0))]))
    assert apply(T, MeasurableFn(sp, [3.0, 3.0, 3.0])).values.tolist() == [3.0, 6.0, 1.0]
    with pytest.raises(SpaceMismatch):
        apply(T, constant(unit_grid(2), 1.0))


def test_verification_sound_for_minimal_bound(rng):
    for _ in range(10):
        sp = unit_grid(int(rng.integers(2, 10)))
        phi = random_pl_field(rng, sp)
        rep = check_lattice_lipschitz(FieldOp(phi), lip_profile(phi), SamplerConfig(samples=120, seed=1))
        assert rep.passed and rep.witness is None and rep.violations == 0
        assert rep.worst_margin >= -1e-9


def test_verification_tight_below_minimal_bound(rng):
    # any bound strictly below the Lipschitz profile at some atom is caught
    for _ in range(10):
        sp = unit_grid(int(rng.integers(2, 10)))
        phi = random_pl_field(rng, sp)
        K = lip_profile(phi)
        i = int(np.argmax(K.values))
        low = K.values.copy()
        low[i] *= 0.9
        rep = check_lattice_lipschitz(FieldOp(phi), MeasurableFn(sp, low), SamplerConfig(samples=40, seed=2))
        assert not rep.passed
        w = rep.witness
        assert w["atom"] == i or low[w["atom"]] < K.values[w["atom"]]
        f, g = np.array(w["f"]), np.array(w["g"])
        T = FieldOp(phi)
        a = w["atom"]
        assert abs(T._apply(f)[a] - T._apply(g)[a]) > low[a] * abs(f[a] - g[a])


def test_simple_field_bound():
    sp = unit_grid(6)
    phi = simple_field(sp, [([0, 1], linear(3.0)), ([2, 3, 4], pl_min(identity(), constant_fn(0.5))), ([5], PwLinear([0.0], [0.0]))])
    K = lip_profile(phi)
    assert K.values.tolist() == [3.0, 3.0, 1.0, 1.0, 1.0, 0.0]
    assert check_lattice_lipschitz(FieldOp(phi), K).passed


def test_closed_form_field_verifies():
    sp = unit_grid(5)
    field = constant_field(sp, inv_one_plus_abs(), affine=True)
    rep = check_lattice_lipschitz(FieldOp(field), constant(sp, 1.0), SamplerConfig(samples=200, seed=4))
    assert rep.passed


def test_best_bound_estimate(rng):
    sp = unit_grid(4)
    phi = random_pl_field(rng, sp)
    grid = np.union1d(np.concatenate([f.xs for f in phi.fns]), [-50.0, 50.0])
    est = best_bound_estimate(FieldOp(phi), grid)
    assert np.allclose(est.values, lip_profile(phi).values, rtol=1e-12)
    coarse = best_bound_estimate(FieldOp(phi), [-1.0, 0.0, 1.0])
    assert np.all(coarse.values <= lip_profile(phi).values * (1 + 1e-12))
    with pytest.raises(DegenerateGrid):
        best_bound_estimate(FieldOp(phi), [1.0, 1.0])


def test_disjointness(rng):
    sp = unit_grid(6)
    T = FieldOp(random_pl_field(rng, sp))
    f = MeasurableFn(sp, rng.normal(size=6))
    g = MeasurableFn(sp, rng.normal(size=6))
    assert disjointness_check(T, f, [0, 2], [3, 5], g).passed
    M = MatrixOp(sp, np.eye(6) + np.diag(np.ones(5), 1))
    rep = disjointness_check(M, f, [0, 1, 2], [3, 4, 5])
    assert not rep.passed and rep.witness["check"] in ("restriction", "additivity")
    shifted = FieldOp(constant_field(sp, inv_one_plus_abs(), affine=True))
    with pytest.raises(NonzeroAtZero):
        disjointness_check(shifted, f, [0], [1])
    with pytest.raises(ValueError):
        disjointness_check(T, f, [0, 1], [1, 2])


def test_linear_coincidence(rng):
    n = 7
    sp = unit_grid(n)
    h = rng.normal(size=n)
    field_op = FieldOp(per_atom_field(sp, [linear(c) for c in h]))
    mat = MatrixOp(sp, np.diag(h))
    for _ in range(10):
        f = MeasurableFn(sp, rng.normal(size=n))
        assert np.array_equal(field_op(f).values, mat(f).values)
    dec = linear_diag_detect(mat)
    assert dec.is_diagonal and np.array_equal(dec.h, h)
    assert check_lattice_lipschitz(mat, MeasurableFn(sp, np.abs(h))).passed


def test_diag_rejection_witness():
    A = np.diag([1.0, 2.0, 3.0])
    A[2, 0] = 1e-6
    dec = linear_diag_detect(A)
    assert dec.kind == "NotLatticeLipschitz"
    assert dec.witness == {"basis_vector": 0, "atom": 2, "value": 1e-6}
    assert linear_diag_detect(A, tol=1e-5).is_diagonal
    with pytest.raises(ValueError):
        linear_diag_detect(np.ones((2, 3)))


def test_recovery_consistent_through_probes(rng):
    sp = unit_grid(5)
    phi = random_pl_field(rng, sp)
    grid = np.arange(-40, 41) * 0.05
    rec = recover_field(FieldOp(phi), grid, lip_profile(phi))
    assert np.all(lip_profile(rec).values <= lip_profile(phi).values * (1 + 1e-12))
    for _ in range(10):
        pts = rng.choice(grid[grid != 0], 4, replace=False)
        m = Molecule(pts, rng.normal(size=4))
        assert np.allclose(weak_probe(rec, m).values, weak_probe(phi, m).values, atol=1e-12)


def test_recovery_errors(rng):
    sp = unit_grid(3)
    T = FieldOp(per_atom_field(sp, [identity(), linear(2.0), linear(-1.0)]))
    with pytest.raises(DegenerateGrid):
        recover_field(T, [0.5, 1.0], constant(sp, 2.0))
    with pytest.raises(IncompatibleSamples, match="atom 1"):
        recover_field(T, [-1, 0, 1], MeasurableFn(sp, [1.0, 1.5, 1.0]))
    with pytest.raises(ValueError):
        recover_field(T, [-1, 0, 1], constant(sp, 2.0), tails="middle")


def test_recovery_lower_tails():
    sp = unit_grid(1)
    T = FieldOp(per_atom_field(sp, [pl_min(identity(), constant_fn(1.0))]))
    rec = recover_field(T, [-1.0, 0.0, 1.0], constant(sp, 1.0), tails="lower")
    assert rec[0](3.0) == -1.0 and rec[0](-2.0) == -2.0


def test_tensor_overlapping_indicators(rng):
    for _ in range(50):
        sp = unit_grid(int(rng.integers(1, 12)))
        t = random_indicator_tensor(rng, sp, disjoint=False)
        canon = tensor_canonicalize(t)
        f = MeasurableFn(sp, rng.uniform(-3, 3, sp.size))
        assert np.allclose(tensor_apply(t, f).values, FieldOp(canon)(f).values, atol=1e-12)


def test_tensor_errors(rng):
    sp = unit_grid(3)
    with pytest.raises(NotIndicator):
        tensor_canonicalize(SimpleTensor([(identity(), MeasurableFn(sp, [0.5, 1.0, 0.0]))]))
    with pytest.raises(ValueError):
        SimpleTensor([])
    empty = tensor_canonicalize(SimpleTensor([], sp))
    assert FieldOp(empty)(constant(sp, 4.0)).values.tolist() == [0.0] * 3
    with pytest.raises(SpaceMismatch):
        SimpleTensor([(identity(), constant(sp, 1.0)), (identity(), constant(unit_grid(2), 1.0))])


def test_nonlipschitz_demo_exact_ratios():
    rows = nonlipschitz_demo([2, 3, 4, 5])
    for r in rows:
        assert r["numerator"] == pytest.approx(r["n"] ** -2.0, rel=1e-12)
        assert r["denominator"] == pytest.approx(r["n"] ** -3.0, rel=1e-12)
    assert [round(r["ratio"], 9) for r in rows] == [2, 3, 4, 5]
    with pytest.raises(GridTooCoarse):
        nonlipschitz_demo([2, 3], grid_size=100)


def test_opaque_operator_and_shape():
    sp = unit_grid(4)
    T = inf_f2_invsqrt(sp)
    assert np.array_equal(T.at_zero(), np.zeros(4))
    bad = Opaque(sp, lambda v: v[:2])
    with pytest.raises(SpaceMismatch):
        bad(constant(sp, 1.0))
    K = MeasurableFn(sp, 2.0 / np.sqrt(sp.atoms))
    assert check_lattice_lipschitz(T, K, SamplerConfig(samples=100, scale=3.0)).passed
