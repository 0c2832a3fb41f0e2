"""Measurable functions on a discrete space and Banach function space norms."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyList, SpaceMismatch
from .measure_space import DiscreteMeasureSpace

__all__ = [
    "MeasurableFn",
    "NormKind",
    "SpaceSpec",
    "bfs_norm",
    "fn",
    "indicator",
    "constant",
    "absolute",
    "pointwise_min",
    "pointwise_max",
    "pointwise_product",
    "restrict",
    "seq_inf",
]


class MeasurableFn:
    """Real values indexed by the atoms of a :class:`DiscreteMeasureSpace`."""

    __slots__ = ("space", "values")

    def __init__(self, space: DiscreteMeasureSpace, values):
        values = np.array(values, dtype=float)
        if values.shape != (space.size,):
            raise SpaceMismatch(
                f"expected {space.size} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("measurable functions must be finite at every atom")
        values.setflags(write=False)
        self.space = space
        self.values = values

    def _check(self, other: "MeasurableFn"):
        if not isinstance(other, MeasurableFn):
            raise TypeError(f"expected MeasurableFn, got {type(other).__name__}")
        if other.space != self.space:
            raise SpaceMismatch("functions live on different measure spaces")

    def _combine(self, other, op):
        if isinstance(other, MeasurableFn):
            self._check(other)
            return MeasurableFn(self.space, op(self.values, other.values))
        return MeasurableFn(self.space, op(self.values, float(other)))

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __rsub__(self, other):
        return MeasurableFn(self.space, float(other) - self.values)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return MeasurableFn(self.space, -self.values)

    def __abs__(self):
        return MeasurableFn(self.space, np.abs(self.values))

    def __len__(self):
        return self.values.size

    def __getitem__(self, i):
        return self.values[i]

    def __eq__(self, other):
        if not isinstance(other, MeasurableFn):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.values, other.values)

    __hash__ = None

    def __le__(self, other):
        self._check(other)
        return bool(np.all(self.values <= other.values))

    def __ge__(self, other):
        self._check(other)
        return bool(np.all(self.values >= other.values))

    def __repr__(self):
        return f"MeasurableFn({np.array2string(self.values, threshold=8)})"


def fn(space: DiscreteMeasureSpace, values) -> MeasurableFn:
    return MeasurableFn(space, values)


def constant(space: DiscreteMeasureSpace, c: float) -> MeasurableFn:
    """The function ``c * chi_Omega``."""
    return MeasurableFn(space, np.full(space.size, float(c)))


def indicator(space: DiscreteMeasureSpace, atoms: Iterable[int]) -> MeasurableFn:
    v = np.zeros(space.size)
    v[list(atoms)] = 1.0
    return MeasurableFn(space, v)


class NormKind(enum.Enum):
    LP = "Lp"
    LINF = "Linf"


@dataclass(frozen=True)
class SpaceSpec:
    """Either ``L^p`` with finite ``p >= 1`` or ``L^infinity``.

    ``p`` is kept as a :class:`Fraction` so exponent arithmetic stays exact;
    ``L^infinity`` is its own kind and carries no exponent at all.
    """

    kind: NormKind
    p: Fraction | None = None

    def __post_init__(self):
        if self.kind is NormKind.LINF:
            if self.p is not None:
                raise ValueError("Linf carries no exponent")
            return
        if self.p is None:
            raise ValueError("Lp needs an exponent")
        p = as_fraction(self.p)
        if p < 1:
            raise ValueError(f"Lp exponent must be >= 1, got {p}")
        object.__setattr__(self, "p", p)

    @classmethod
    def lp(cls, p) -> "SpaceSpec":
        return cls(NormKind.LP, as_fraction(p))

    @classmethod
    def linf(cls) -> "SpaceSpec":
        return cls(NormKind.LINF)

    @classmethod
    def from_exponent(cls, p) -> "SpaceSpec":
        """Accepts a number or one of ``inf``/``"inf"``/``"Linf"``."""
        if isinstance(p, SpaceSpec):
            return p
        if isinstance(p, str) and p.strip().lower() in ("inf", "infinity", "linf"):
            return cls.linf()
        if isinstance(p, float) and np.isinf(p):
            return cls.linf()
        return cls.lp(p)

    @property
    def is_inf(self) -> bool:
        return self.kind is NormKind.LINF

    @property
    def inverse(self) -> Fraction:
        """``1/p`` with ``1/infinity = 0``."""
        return Fraction(0) if self.is_inf else 1 / self.p

    @classmethod
    def from_inverse(cls, inv: Fraction) -> "SpaceSpec":
        return cls.linf() if inv == 0 else cls.lp(1 / inv)

    @property
    def conjugate(self) -> "SpaceSpec":
        return SpaceSpec.from_inverse(1 - self.inverse)

    def to_json(self) -> dict:
        if self.is_inf:
            return {"kind": "Linf"}
        p = self.p
        return {"kind": "Lp", "p": int(p) if p.denominator == 1 else float(p)}

    def __str__(self):
        return "Linf" if self.is_inf else f"L^{float(self.p):g}"


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    # decimal reading keeps 1.5 -> 3/2 and 0.1 -> 1/10
    return Fraction(repr(float(x)))


def bfs_norm(space: DiscreteMeasureSpace, spec: SpaceSpec, f: MeasurableFn) -> float:
    """Lattice norm of ``f``; on atoms of positive mass ess sup is the max."""
    if f.space != space:
        raise SpaceMismatch("function is not defined on this space")
    a = np.abs(f.values)
    if spec.is_inf:
        return float(a.max())
    p = float(spec.p)
    if p == 1.0:
        return float(np.dot(a, space.weights))
    scale = a.max()
    if scale == 0.0:
        return 0.0
    # rescale before powering to keep large p from overflowing
    return float(scale * np.dot((a / scale) ** p, space.weights) ** (1.0 / p))


def absolute(f: MeasurableFn) -> MeasurableFn:
    return abs(f)


def pointwise_min(f: MeasurableFn, g: MeasurableFn) -> MeasurableFn:
    return f._combine(g, np.minimum)


def pointwise_max(f: MeasurableFn, g: MeasurableFn) -> MeasurableFn:
    return f._combine(g, np.maximum)


def pointwise_product(f: MeasurableFn, g: MeasurableFn) -> MeasurableFn:
    return f._combine(g, np.multiply)


def _mask(space: DiscreteMeasureSpace, atoms) -> np.ndarray:
    a = np.asarray(atoms)
    if a.dtype == bool:
        if a.shape != (space.size,):
            raise SpaceMismatch("boolean atom mask has the wrong length")
        return a
    m = np.zeros(space.size, dtype=bool)
    m[a.astype(int)] = True
    return m


def restrict(f: MeasurableFn, atoms) -> MeasurableFn:
    """``f * chi_A``: zero outside the atom subset ``A`` (indices or mask)."""
    m = _mask(f.space, atoms)
    return MeasurableFn(f.space, np.where(m, f.values, 0.0))


def seq_inf(fs: Sequence[MeasurableFn]) -> MeasurableFn:
    if len(fs) == 0:
        raise EmptyList("seq_inf needs at least one function")
    head = fs[0]
    for g in fs[1:]:
        head._check(g)
    return MeasurableFn(head.space, np.min(np.stack([g.values for g in fs]), axis=0))
