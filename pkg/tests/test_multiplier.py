from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from latlip.errors import ExponentOrder, SpaceMismatch, ZeroMultiplier
from latlip.function_space import MeasurableFn, SpaceSpec, bfs_norm
from latlip.measure_space import make_space, unit_grid
from latlip.multiplier import (
    MultiplierSpec,
    extremizer,
    mult_apply,
    mult_norm,
    mult_norm_oracle,
    operator_ratio,
)

PAIRS = [(2, 1), (3, 1.5), (2, 2), (4, 1), ("inf", 2), ("inf", "inf"), (3, 3)]


def test_exponent_arithmetic():
    assert MultiplierSpec(2, 1).r == SpaceSpec.lp(2)
    assert MultiplierSpec(3, 1.5).r == SpaceSpec.lp(3)
    assert MultiplierSpec(2, 2).r == SpaceSpec.linf()
    assert MultiplierSpec("inf", 2).r == SpaceSpec.lp(2)
    assert MultiplierSpec(4, 2).inverse_r == Fraction(1, 4)
    with pytest.raises(ExponentOrder):
        MultiplierSpec(1, 2).r
    assert MultiplierSpec(2, 1).to_json() == {"p": 2, "q": 1, "r": 2}


def test_norm_examples():
    sp = unit_grid(2)
    h = MeasurableFn(sp, [1.0, 3.0])
    # r = 2: (0.5 * 1 + 0.5 * 9) ** 0.5
    assert mult_norm(sp, h, MultiplierSpec(2, 1)) == pytest.approx(5**0.5, rel=1e-15)
    assert mult_norm(sp, h, MultiplierSpec(2, 2)) == 3.0
    assert mult_apply(h, MeasurableFn(sp, [2.0, -1.0])).values.tolist() == [2.0, -3.0]
    with pytest.raises(SpaceMismatch):
        mult_norm(unit_grid(3), h, MultiplierSpec(2, 1))


@pytest.mark.parametrize("p, q", PAIRS)
def test_extremizer_attains_norm(rng, p, q):
    sp = make_space(rng.uniform(0.1, 1.0, 20))
    h = MeasurableFn(sp, rng.normal(size=20))
    spec = MultiplierSpec(p, q)
    f = extremizer(sp, h, spec)
    assert bfs_norm(sp, spec.p, f) == pytest.approx(1.0, abs=1e-12)
    assert operator_ratio(sp, h, f, spec) == pytest.approx(mult_norm(sp, h, spec), rel=1e-10)


@pytest.mark.parametrize("p, q", PAIRS)
def test_oracle_matches(rng, p, q):
    sp = unit_grid(32)
    h = MeasurableFn(sp, rng.normal(size=32))
    spec = MultiplierSpec(p, q)
    exact = mult_norm(sp, h, spec)
    oracle = mult_norm_oracle(sp, h, spec, trials=8, seed=3)
    assert oracle <= exact * (1 + 1e-12)
    assert exact - oracle <= 1e-4


def test_oracle_monotone_in_trials(rng):
    sp = unit_grid(16)
    h = MeasurableFn(sp, rng.normal(size=16))
    spec = MultiplierSpec(3, 1.5)
    vals = [mult_norm_oracle(sp, h, spec, trials=t, seed=7) for t in (0, 1, 2, 4, 8)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_zero_multiplier():
    sp = unit_grid(4)
    z = MeasurableFn(sp, np.zeros(4))
    assert mult_norm(sp, z, MultiplierSpec(2, 1)) == 0.0
    assert mult_norm_oracle(sp, z, MultiplierSpec(2, 1)) == 0.0
    with pytest.raises(ZeroMultiplier):
        extremizer(sp, z, MultiplierSpec(2, 1))


vec = arrays(np.float64, 6, elements=st.floats(-50, 50))


@settings(max_examples=60)
@given(vec, vec, st.floats(-4, 4), st.sampled_from(PAIRS))
def test_homogeneity_and_domination(h, f, c, pq):
    sp = unit_grid(6)
    spec = MultiplierSpec(*pq)
    H = MeasurableFn(sp, h)
    norm = mult_norm(sp, H, spec)
    assert mult_norm(sp, H * c, spec) == pytest.approx(abs(c) * norm, rel=1e-12, abs=1e-300)
    F = MeasurableFn(sp, f)
    fp = bfs_norm(sp, spec.p, F)
    if fp > 0:
        assert operator_ratio(sp, H, F, spec) <= norm * (1 + 1e-12) + 1e-300
