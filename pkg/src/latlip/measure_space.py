"""Finite discrete measure spaces and half-open interval sets on [0, 1]."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptySpace, NonpositiveWeight

__all__ = [
    "DiscreteMeasureSpace",
    "IntervalSet",
    "make_space",
    "unit_grid",
    "partition_grid",
    "interval_measure",
    "interval_contains",
]


@dataclass(frozen=True, eq=False)
class DiscreteMeasureSpace:
    """Finitely many atoms, each carrying a strictly positive mass.

    ``atoms`` are real labels. Spaces built by :func:`unit_grid` or
    :func:`partition_grid` use the cell midpoint in [0, 1] as label, so
    formulas in the coordinate ``w`` can be evaluated directly.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 1 or weights.size == 0:
            raise EmptySpace("a measure space needs at least one atom")
        if atoms.shape != weights.shape:
            raise ValueError("atoms and weights must have the same length")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise NonpositiveWeight("every atom weight must be finite and > 0")
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return self.weights.size

    def __len__(self) -> int:
        return self.size

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, DiscreteMeasureSpace):
            return NotImplemented
        return np.array_equal(self.atoms, other.atoms) and np.array_equal(
            self.weights, other.weights
        )

    def __hash__(self):
        return hash((self.atoms.tobytes(), self.weights.tobytes()))

    def __repr__(self):
        return f"DiscreteMeasureSpace(n={self.size}, total_mass={self.total_mass:g})"


def make_space(weights: Sequence[float]) -> DiscreteMeasureSpace:
    """Space with the given atom masses, atoms labelled 0..n-1."""
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1 or weights.size == 0:
        raise EmptySpace("weights must be a non-empty list")
    return DiscreteMeasureSpace(np.arange(weights.size, dtype=float), weights)


def unit_grid(n: int) -> DiscreteMeasureSpace:
    """Midpoint discretisation of Lebesgue measure on [0, 1] with ``n`` cells."""
    if n < 1:
        raise EmptySpace("unit_grid needs n >= 1")
    atoms = (np.arange(1, n + 1) - 0.5) / n
    return DiscreteMeasureSpace(atoms, np.full(n, 1.0 / n))


def partition_grid(edges: Iterable[float]) -> DiscreteMeasureSpace:
    """Midpoint discretisation of Lebesgue measure for an arbitrary partition.

    ``edges`` is a strictly increasing list of cell boundaries. Used for
    adaptive grids that must resolve cells of very different lengths.
    """
    edges = np.asarray(sorted(set(float(e) for e in edges)))
    if edges.size < 2:
        raise EmptySpace("a partition needs at least two edges")
    widths = np.diff(edges)
    return DiscreteMeasureSpace(edges[:-1] + widths / 2, widths)


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of disjoint half-open intervals ``[a, b)``, kept sorted."""

    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        ivs = sorted((float(a), float(b)) for a, b in self.intervals)
        for a, b in ivs:
            if not a < b:
                raise ValueError(f"empty or reversed interval [{a}, {b})")
        for (_, b0), (a1, _) in zip(ivs, ivs[1:]):
            if a1 < b0:
                raise ValueError("intervals overlap")
        object.__setattr__(self, "intervals", tuple(ivs))

    def __len__(self):
        return len(self.intervals)

    @property
    def measure(self) -> float:
        return interval_measure(self)

    def contains(self, w):
        return interval_contains(self, w)


def interval_measure(s: IntervalSet) -> float:
    return float(sum(b - a for a, b in s.intervals))


def interval_contains(s: IntervalSet, w):
    """Membership under the ``[a, b)`` convention; vectorised over ``w``."""
    w = np.asarray(w, dtype=float)
    if not s.intervals:
        out = np.zeros(w.shape, dtype=bool)
    else:
        lo = np.array([a for a, _ in s.intervals])
        hi = np.array([b for _, b in s.intervals])
        k = np.searchsorted(lo, w, side="right") - 1
        ok = k >= 0
        out = np.zeros(w.shape, dtype=bool)
        out[ok] = w[ok] < hi[k[ok]]
    return bool(out) if out.ndim == 0 else out
