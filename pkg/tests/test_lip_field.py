import numpy as np
import pytest
from hypothesis import given, strategies as st

from latlip.errors import DepthOverflow, SOutOfRange, SpaceMismatch
from latlip.function_space import SpaceSpec
from latlip.lip_field import (
    binary_digit_field,
    binary_digits,
    constant_field,
    digit_distance,
    dyadic_preimage,
    field_distance_profile,
    kb_norm,
    lip_profile,
    per_atom_field,
    running_inf_profiles,
    simple_field,
    sll_norm,
    truncate_field,
    zero_field,
)
from latlip.lipschitz import constant_fn, identity, inv_one_plus_abs, linear, pl_min
from latlip.measure_space import DiscreteMeasureSpace, interval_contains, interval_measure, make_space, unit_grid
from latlip.suite import random_pl_field

L2 = SpaceSpec.lp(2)


def test_kb_norm_example():
    sp = make_space([0.5, 0.5])
    field = per_atom_field(sp, [identity(), linear(2.0)])
    assert lip_profile(field).values.tolist() == [1.0, 2.0]
    assert kb_norm(field, L2) == pytest.approx(2.5**0.5, rel=1e-15)
    assert kb_norm(field, SpaceSpec.linf()) == 2.0


def test_sll_norm_uses_r():
    sp = make_space([0.5, 0.5])
    field = per_atom_field(sp, [identity(), linear(2.0)])
    assert sll_norm(field, 2, 1) == pytest.approx(2.5**0.5, rel=1e-15)
    assert sll_norm(field, 2, 2) == 2.0
    assert sll_norm(field, 4, 2) == pytest.approx((0.5 * 1 + 0.5 * 16) ** 0.25, rel=1e-14)


def test_constant_field_example():
    field = constant_field(unit_grid(4), pl_min(identity(), constant_fn(1.0)))
    assert lip_profile(field).values.tolist() == [1.0] * 4
    assert field.evaluate_at(3.0).tolist() == [1.0] * 4


def test_fields_must_vanish_at_zero():
    sp = unit_grid(2)
    with pytest.raises(ValueError):
        per_atom_field(sp, [inv_one_plus_abs(), identity()])
    aff = per_atom_field(sp, [inv_one_plus_abs(), identity()], affine=True)
    assert aff.affine_shifted
    assert aff.evaluate([0.0, 2.0]).tolist() == [1.0, 2.0]
    assert aff.evaluate([1.0, 0.0]).tolist() == [0.5, 0.0]
    assert not aff.normalized().affine_shifted
    with pytest.raises(SpaceMismatch):
        per_atom_field(sp, [identity()])


def test_simple_field_blocks():
    sp = unit_grid(4)
    f = simple_field(sp, [([0, 2], linear(3.0)), ([1, 3], identity())])
    assert lip_profile(f).values.tolist() == [3.0, 1.0, 3.0, 1.0]
    with pytest.raises(ValueError):
        simple_field(sp, [([0, 1], identity()), ([1, 2, 3], identity())])
    with pytest.raises(ValueError):
        simple_field(sp, [([0, 1], identity())])


def test_truncation_profile_and_bound(rng):
    sp = unit_grid(6)
    for _ in range(20):
        phi = random_pl_field(rng, sp)
        other = random_pl_field(rng, sp)
        psi = truncate_field(phi, other)
        want = np.minimum(lip_profile(phi).values, lip_profile(other).values)
        assert np.array_equal(lip_profile(psi).values, want)
        for spec in (SpaceSpec.lp(1), L2, SpaceSpec.linf()):
            assert kb_norm(psi, spec) <= kb_norm(phi, spec)


def test_running_inf_nondecreasing(rng):
    sp = unit_grid(5)
    phi = random_pl_field(rng, sp)
    seq = [random_pl_field(rng, sp) for _ in range(6)]
    taus = running_inf_profiles(phi, seq)
    cap = lip_profile(phi).values
    for a, b in zip(taus, taus[1:]):
        assert np.all(a.values <= b.values)
    assert all(np.all(t.values <= cap) for t in taus)


def test_field_distance_profile():
    sp = unit_grid(2)
    a = per_atom_field(sp, [identity(), linear(2.0)])
    b = per_atom_field(sp, [linear(-1.0), linear(2.0)])
    assert field_distance_profile(a, b).values.tolist() == [2.0, 0.0]
    assert zero_field(sp).evaluate([5.0, -5.0]).tolist() == [0.0, 0.0]


def test_binary_digits_examples():
    assert binary_digits(0.75, 4).tolist() == [[1, 1, 0, 0]]
    assert binary_digits(0.5, 3).tolist() == [[1, 0, 0]]
    assert binary_digits(1.0, 3).tolist() == [[1, 1, 1]]
    assert binary_digits(0.0, 2).tolist() == [[0, 0]]
    with pytest.raises(DepthOverflow):
        binary_digits(0.5, 41)


@given(st.integers(0, 2**12 - 1))
def test_binary_digits_reconstruct(k):
    w = k / 2**12
    digits = binary_digits(w, 12)[0]
    assert sum(int(c) * 2.0 ** -(i + 1) for i, c in enumerate(digits)) == w


def test_preimage_examples():
    pre = dyadic_preimage(1.0, 0.1, 30)
    assert pre.intervals == ((0.0, 0.5),)
    pre = dyadic_preimage(2.05, 0.1, 30)
    assert pre.intervals == ((0.0, 0.25), (0.5, 0.75))
    assert interval_measure(pre) == 0.5
    assert len(dyadic_preimage(3.3, 0.2, 30)) == 0
    assert len(dyadic_preimage(2.0, 0.1, 1)) == 0
    assert dyadic_preimage(0.05, 0.1, 30).intervals == ((0.0, 1.0),)
    assert dyadic_preimage(-0.3, 0.2, 30).intervals == ()
    with pytest.raises(SOutOfRange):
        dyadic_preimage(1.0, 0.5, 30)
    with pytest.raises(SOutOfRange):
        dyadic_preimage(1.0, 0.0, 30)


@given(st.floats(-2.0, 12.5), st.floats(0.01, 0.49))
def test_preimage_matches_direct(lam, s):
    w = np.linspace(0, 1, 4097)[:-1] + 1 / 8194
    pre = dyadic_preimage(lam, s, 30)
    assert np.array_equal(interval_contains(pre, w), digit_distance(w, lam, 30) < s)


def test_digit_field_agrees_with_digit_distance(rng):
    w = rng.random(500)
    sp = DiscreteMeasureSpace(w, np.full(500, 1 / 500))
    field = binary_digit_field(sp, 20)
    for lam in (0.3, 1.0, 2.5, 7.1, 25.0):
        assert np.allclose(field.evaluate_at(lam), digit_distance(w, lam, 20), atol=1e-15)
    assert lip_profile(field).values.max() == 1.0
