import numpy as np
import pytest
from hypothesis import given, strategies as st

from latlip.errors import EmptySpace, NonpositiveWeight
from latlip.measure_space import (
    IntervalSet,
    interval_contains,
    interval_measure,
    make_space,
    partition_grid,
    unit_grid,
)


@pytest.mark.parametrize(
    "weights, total, n",
    [([1.0], 1.0, 1), ([0.5, 0.5], 1.0, 2), ([0.1, 0.2, 0.7], 1.0, 3)],
)
def test_make_space(weights, total, n):
    sp = make_space(weights)
    assert sp.size == n
    assert sp.total_mass == pytest.approx(total, abs=1e-15)
    assert list(sp.atoms) == list(range(n))


def test_make_space_errors():
    with pytest.raises(EmptySpace):
        make_space([])
    with pytest.raises(NonpositiveWeight):
        make_space([0.5, 0.0])
    with pytest.raises(NonpositiveWeight):
        make_space([1.0, -1.0])


def test_unit_grid_small():
    sp = unit_grid(1)
    assert sp.atoms.tolist() == [0.5] and sp.weights.tolist() == [1.0]
    sp = unit_grid(4)
    assert sp.atoms.tolist() == [0.125, 0.375, 0.625, 0.875]
    assert sp.weights.tolist() == [0.25] * 4
    assert abs(unit_grid(10).total_mass - 1.0) <= 1e-15
    with pytest.raises(EmptySpace):
        unit_grid(0)


@pytest.mark.parametrize("n", [1, 7, 64, 1000, 10**6])
def test_unit_grid_invariants(n):
    sp = unit_grid(n)
    assert np.all(np.diff(sp.atoms) > 0)
    assert abs(sp.total_mass - 1.0) <= 1e-12


def test_space_is_immutable():
    sp = unit_grid(3)
    with pytest.raises(ValueError):
        sp.weights[0] = 2.0


def test_partition_grid_midpoints():
    sp = partition_grid([0.0, 0.25, 1.0])
    assert sp.atoms.tolist() == [0.125, 0.625]
    assert sp.weights.tolist() == [0.25, 0.75]


def test_interval_examples():
    assert interval_contains(IntervalSet(((0.0, 0.5),)), 0.5) is False
    assert interval_measure(IntervalSet(((0.0, 0.25), (0.5, 0.75)))) == 0.5
    assert interval_contains(IntervalSet(((0.25, 0.5),)), 0.3) is True
    assert interval_contains(IntervalSet(((0.25, 0.5),)), 0.25) is True
    assert interval_contains(IntervalSet(()), 0.1) is False


def test_interval_validation():
    with pytest.raises(ValueError):
        IntervalSet(((0.0, 0.5), (0.4, 0.6)))
    with pytest.raises(ValueError):
        IntervalSet(((0.5, 0.5),))


@given(st.lists(st.integers(0, 99), min_size=1, max_size=30, unique=True), st.randoms())
def test_interval_measure_additive_and_order_free(starts, rnd):
    ivs = [(k / 100, (k + 1) / 100) for k in starts]
    shuffled = list(ivs)
    rnd.shuffle(shuffled)
    s = IntervalSet(tuple(shuffled))
    assert interval_measure(s) == pytest.approx(sum(b - a for a, b in ivs), abs=1e-12)
    assert s == IntervalSet(tuple(ivs))
    half = len(ivs) // 2
    parts = interval_measure(IntervalSet(tuple(ivs[:half]))) + interval_measure(IntervalSet(tuple(ivs[half:])))
    assert interval_measure(s) == pytest.approx(parts, abs=1e-12)


def test_interval_contains_vectorised():
    s = IntervalSet(((0.0, 0.25), (0.5, 0.75)))
    w = np.array([0.0, 0.1, 0.25, 0.3, 0.5, 0.74, 0.75, 0.99])
    assert interval_contains(s, w).tolist() == [True, True, False, False, True, True, False, False]
