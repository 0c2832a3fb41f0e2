"""Fields of scalar Lipschitz functions over a discrete measure space.

A :class:`LipField` assigns to every atom ``w`` a function ``Phi(w)`` in
``Lip_0(R)``. Storage is by blocks: a list of distinct functions plus, per
atom, the index of its function. Simple fields are then the case of few
blocks and general fields the case of one block per atom.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DepthOverflow, SOutOfRange, SpaceMismatch
from .function_space import MeasurableFn, SpaceSpec, bfs_norm, seq_inf
from .lipschitz import (
    PwLinear,
    ScalarLip,
    dist_set_fn,
    normalize_lip0,
    pl_approx,
    pl_sub,
)
from .measure_space import DiscreteMeasureSpace, IntervalSet
from .multiplier import MultiplierSpec, mult_norm

__all__ = [
    "LipField",
    "constant_field",
    "simple_field",
    "per_atom_field",
    "zero_field",
    "lip_profile",
    "kb_norm",
    "sll_norm",
    "field_distance_profile",
    "truncate_field",
    "running_inf_profiles",
    "binary_digits",
    "binary_digit_field",
    "digit_distance",
    "dyadic_preimage",
]

MAX_DIGIT_DEPTH = 40
MAX_PREIMAGE_DIGIT = 24
LIP0_ATOL = 1e-12


class LipField:
    """``w -> Phi(w)`` with every ``Phi(w)`` vanishing at 0.

    ``shift`` (optional, one value per atom) marks an affine-shifted field:
    the operator acts by ``Phi(w)(v) + shift(w)`` while all norms and
    Lipschitz data refer to the normalised part ``Phi``.
    """

    __slots__ = ("space", "fns", "index", "shift")

    def __init__(
        self,
        space: DiscreteMeasureSpace,
        fns: Sequence[ScalarLip],
        index=None,
        shift=None,
    ):
        fns = tuple(fns)
        if index is None:
            if len(fns) != space.size:
                raise SpaceMismatch(f"{len(fns)} functions for {space.size} atoms")
            index = np.arange(space.size)
        index = np.asarray(index, dtype=np.intp)
        if index.shape != (space.size,):
            raise SpaceMismatch("block index must have one entry per atom")
        if index.size and (index.min() < 0 or index.max() >= len(fns)):
            raise ValueError("block index out of range")
        for f in fns:
            if abs(f(0.0)) > LIP0_ATOL:
                raise ValueError(
                    f"{f!r} does not vanish at 0; build the field with affine=True"
                )
            if not np.isfinite(f.lip):
                raise ValueError("field entries must be Lipschitz")
        if shift is not None:
            shift = np.asarray(shift, dtype=float)
            if shift.shape != (space.size,):
                raise SpaceMismatch("shift must have one value per atom")
            shift.setflags(write=False)
        index.setflags(write=False)
        self.space = space
        self.fns = fns
        self.index = index
        self.shift = shift

    @classmethod
    def affine(cls, space, fns, index=None) -> "LipField":
        """Split arbitrary Lipschitz entries into a ``Lip_0`` part plus ``Phi(w)(0)``."""
        fns = tuple(fns)
        zeros = np.array([float(f(0.0)) for f in fns])
        idx = np.arange(space.size) if index is None else np.asarray(index)
        return cls(space, [normalize_lip0(f) for f in fns], idx, zeros[idx])

    @property
    def affine_shifted(self) -> bool:
        return self.shift is not None and bool(np.any(self.shift))

    def __len__(self):
        return self.space.size

    def __getitem__(self, i: int) -> ScalarLip:
        return self.fns[self.index[i]]

    def groups(self) -> Iterator[tuple[ScalarLip, np.ndarray]]:
        """``(function, atom indices)`` for every block that owns atoms."""
        order = np.argsort(self.index, kind="stable")
        keys = self.index[order]
        cuts = np.flatnonzero(np.diff(keys)) + 1
        for chunk in np.split(order, cuts):
            if chunk.size:
                yield self.fns[self.index[chunk[0]]], chunk

    def evaluate(self, values) -> np.ndarray:
        """``Phi(w_i)(values_i) + shift_i`` for every atom ``i``."""
        v = np.asarray(values, dtype=float)
        out = np.empty(self.space.size)
        for f, idx in self.groups():
            out[idx] = f(v[idx])
        if self.shift is not None:
            out += self.shift
        return out

    def evaluate_at(self, lam: float) -> np.ndarray:
        return self.evaluate(np.full(self.space.size, float(lam)))

    def scaled(self, c: float) -> "LipField":
        shift = None if self.shift is None else c * self.shift
        return LipField(self.space, [c * f for f in self.fns], self.index, shift)

    def normalized(self) -> "LipField":
        """The ``Lip_0`` part, dropping any affine shift."""
        return LipField(self.space, self.fns, self.index)

    def to_pl(self, range_=(-10.0, 10.0), n: int = 2000) -> "LipField":
        """Replace closed-form entries by interpolants on ``range_``."""
        if all(isinstance(f, PwLinear) for f in self.fns):
            return self
        fns = [normalize_lip0(pl_approx(f, range_, n)) for f in self.fns]
        return LipField(self.space, fns, self.index, self.shift)

    def __repr__(self):
        kind = "affine " if self.affine_shifted else ""
        return f"LipField({kind}{len(self.fns)} blocks over {self.space.size} atoms)"


def constant_field(space: DiscreteMeasureSpace, phi: ScalarLip, affine: bool = False) -> LipField:
    idx = np.zeros(space.size, dtype=np.intp)
    if affine:
        return LipField.affine(space, [phi], idx)
    return LipField(space, [phi], idx)


def zero_field(space: DiscreteMeasureSpace) -> LipField:
    return constant_field(space, PwLinear([0.0], [0.0], 0.0, 0.0))


def simple_field(
    space: DiscreteMeasureSpace,
    blocks: Sequence[tuple[Iterable[int], ScalarLip]],
    affine: bool = False,
) -> LipField:
    """``sum chi_{A_i} phi_i`` from disjoint blocks covering every atom."""
    idx = np.full(space.size, -1, dtype=np.intp)
    fns = []
    for k, (atoms, phi) in enumerate(blocks):
        atoms = np.asarray(list(atoms), dtype=np.intp)
        if np.any(idx[atoms] >= 0):
            raise ValueError(f"block {k} overlaps an earlier block")
        idx[atoms] = k
        fns.append(phi)
    if np.any(idx < 0):
        missing = np.flatnonzero(idx < 0)[:5].tolist()
        raise ValueError(f"blocks do not cover atoms {missing}")
    if affine:
        return LipField.affine(space, fns, idx)
    return LipField(space, fns, idx)


def per_atom_field(space: DiscreteMeasureSpace, fns: Sequence[ScalarLip], affine: bool = False) -> LipField:
    if affine:
        return LipField.affine(space, fns)
    return LipField(space, fns)


def lip_profile(field: LipField) -> MeasurableFn:
    lips = np.array([f.lip for f in field.fns])
    return MeasurableFn(field.space, lips[field.index])


def kb_norm(field: LipField, spec: SpaceSpec) -> float:
    """Koethe-Bochner norm: the lattice norm of ``w -> Lip(Phi(w))``."""
    return bfs_norm(field.space, spec, lip_profile(field))


def sll_norm(field: LipField, p, q) -> float:
    """Norm of the superposition operator in ``SLL(L^p, L^q)``."""
    return mult_norm(field.space, lip_profile(field), MultiplierSpec(p, q))


def field_distance_profile(
    phi: LipField, psi: LipField, approx_range=(-10.0, 10.0), approx_n: int = 2000
) -> MeasurableFn:
    """``w -> Lip(Phi(w) - Psi(w))``, exact for piecewise linear entries."""
    if phi.space != psi.space:
        raise SpaceMismatch("fields live on different spaces")
    a = phi.to_pl(approx_range, approx_n)
    b = psi.to_pl(approx_range, approx_n)
    out = np.empty(phi.space.size)
    pairs = a.index * len(b.fns) + b.index
    cache: dict[int, float] = {}
    for i, key in enumerate(pairs):
        key = int(key)
        if key not in cache:
            cache[key] = pl_sub(a.fns[a.index[i]], b.fns[b.index[i]]).lip
        out[i] = cache[key]
    return MeasurableFn(phi.space, out)


def truncate_field(phi: LipField, phi_n: LipField) -> LipField:
    """Take ``Phi_n(w)`` where it is strictly less Lipschitz than ``Phi(w)``.

    The resulting profile is the pointwise minimum of the two profiles.
    """
    if phi.space != phi_n.space:
        raise SpaceMismatch("fields live on different spaces")
    take = lip_profile(phi_n).values < lip_profile(phi).values
    fns = phi.fns + phi_n.fns
    index = np.where(take, phi_n.index + len(phi.fns), phi.index)
    if phi.shift is None and phi_n.shift is None:
        shift = None
    else:
        s0 = np.zeros(phi.space.size) if phi.shift is None else phi.shift
        s1 = np.zeros(phi.space.size) if phi_n.shift is None else phi_n.shift
        shift = np.where(take, s1, s0)
    return LipField(phi.space, fns, index, shift)


def running_inf_profiles(phi: LipField, sequence: Sequence[LipField]) -> list[MeasurableFn]:
    """``tau_n = inf_{k >= n} Lip(psi_k)`` where ``psi_k`` truncates ``Phi`` by ``Phi_k``.

    For a finite sequence the infimum runs to the last term, so the list is
    pointwise nondecreasing and bounded above by ``lip_profile(phi)``.
    """
    profiles = [lip_profile(truncate_field(phi, pk)) for pk in sequence]
    out = []
    for n in range(len(profiles)):
        out.append(seq_inf(profiles[n:]))
    return out


def binary_digits(w, depth: int) -> np.ndarray:
    """Digits ``c_1..c_depth`` of ``w`` in [0, 1], shape ``(len(w), depth)``.

    The terminating expansion is used for dyadic rationals. ``w = 1`` has
    no terminating expansion and gets all digits 1.
    """
    if depth > MAX_DIGIT_DEPTH:
        raise DepthOverflow(f"depth {depth} exceeds {MAX_DIGIT_DEPTH}")
    if depth < 1:
        raise DepthOverflow("depth must be at least 1")
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if np.any((w < 0) | (w > 1)):
        raise ValueError("binary digits are defined for w in [0, 1]")
    # scaling by 2^i is exact in binary floating point
    scaled = np.floor(w[:, None] * 2.0 ** np.arange(1, depth + 1)[None, :])
    digits = np.mod(scaled, 2.0).astype(np.int8)
    digits[w == 1.0] = 1
    return digits


def binary_digit_field(space: DiscreteMeasureSpace, depth: int = 30) -> LipField:
    """``w -> (lam -> min(1/2, |lam|, d(lam, {i <= depth : c_i(w) = 0})))``."""
    digits = binary_digits(space.atoms, depth)
    patterns, index = np.unique(digits, axis=0, return_inverse=True)
    positions = np.arange(1, depth + 1)
    fns = [dist_set_fn(positions[row == 0].tolist(), 0.5) for row in patterns]
    return LipField(space, fns, index.ravel())


def digit_distance(w, lam: float, depth: int) -> np.ndarray:
    """``min({1/2, |lam|} U {|lam - i| : c_i(w) = 0, i <= depth})`` per point ``w``."""
    digits = binary_digits(w, depth)
    d = np.abs(lam - np.arange(1, depth + 1, dtype=float))
    d = np.where(digits == 0, d[None, :], np.inf)
    return np.minimum(min(0.5, abs(lam)), d.min(axis=1))


def dyadic_preimage(lam: float, s: float, depth: int) -> IntervalSet:
    """Points ``w`` of [0, 1) where the digit distance at ``lam`` is below ``s``.

    With ``i0`` the natural number nearest ``lam``, this is the set of ``w``
    whose digit ``c_{i0}`` vanishes: the union over ``j < 2^(i0-1)`` of
    ``[2j / 2^i0, (2j+1) / 2^i0)``. It is empty when ``d(lam, N) >= s`` or
    when ``i0`` lies beyond the tracked ``depth``, and all of [0, 1) when
    ``|lam| < s`` (every field value vanishes at the base point).
    """
    if not 0 < s < 0.5:
        raise SOutOfRange(f"s must lie in (0, 1/2), got {s}")
    if abs(lam) < s:
        return IntervalSet(((0.0, 1.0),))
    i0 = max(1, int(np.floor(lam + 0.5)))
    if abs(lam - i0) >= s or i0 > depth:
        return IntervalSet(())
    if i0 > MAX_PREIMAGE_DIGIT:
        raise DepthOverflow(f"preimage for digit {i0} has 2^{i0 - 1} intervals")
    scale = 2.0**i0
    j = np.arange(2 ** (i0 - 1), dtype=float)
    return IntervalSet(tuple(zip(2 * j / scale, (2 * j + 1) / scale)))
