"""Finitely supported molecules in the Lipschitz-free space over R.

A molecule ``sum a_i delta_{x_i}`` acts on ``Lip_0(R)`` by evaluation. Since
``phi(x) = integral of phi' from 0 to x``, the pairing equals
``integral phi'(t) G(t) dt`` with the piecewise constant

    G(t) = sum_{x_i > t > 0} a_i - sum_{x_i < t < 0} a_i,

so the dual norm is ``integral |G|``: the optimal ``phi`` has slope
``sign(G)`` everywhere.
"""

from __future__ import annotations

import itertools
from typing import Iterable

import numpy as np

from .errors import SpaceMismatch, SupportTooLarge
from .function_space import MeasurableFn
from .lipschitz import PwLinear, ScalarLip, normalize_lip0

__all__ = ["Molecule", "delta", "pair", "free_norm", "free_norm_oracle", "weak_probe"]

ORACLE_MAX_SUPPORT = 12


class Molecule:
    """``sum a_i delta_{x_i}`` with distinct nonzero ``x_i`` and nonzero ``a_i``.

    Repeated points are merged, zero coefficients dropped, and any mass at the
    base point 0 is discarded because ``delta_0`` is the zero functional.
    """

    __slots__ = ("support", "coeffs")

    def __init__(self, support: Iterable[float] = (), coeffs: Iterable[float] = ()):
        support = np.asarray(list(support), dtype=float)
        coeffs = np.asarray(list(coeffs), dtype=float)
        if support.shape != coeffs.shape:
            raise ValueError("support and coeffs must have the same length")
        acc: dict[float, float] = {}
        for x, a in zip(support, coeffs):
            if x != 0.0:
                acc[float(x)] = acc.get(float(x), 0.0) + float(a)
        xs = sorted(x for x, a in acc.items() if a != 0.0)
        self.support = np.array(xs, dtype=float)
        self.coeffs = np.array([acc[x] for x in xs], dtype=float)

    def __len__(self):
        return self.support.size

    def __add__(self, other: "Molecule") -> "Molecule":
        return Molecule(
            np.concatenate((self.support, other.support)),
            np.concatenate((self.coeffs, other.coeffs)),
        )

    def __sub__(self, other: "Molecule") -> "Molecule":
        return self + (-1.0) * other

    def __mul__(self, c: float) -> "Molecule":
        return Molecule(self.support, float(c) * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def to_json(self) -> dict:
        return {"support": self.support.tolist(), "coeffs": self.coeffs.tolist()}

    def __repr__(self):
        terms = " + ".join(f"{a:g}*d({x:g})" for x, a in zip(self.support, self.coeffs))
        return f"Molecule({terms or '0'})"


def delta(x: float) -> Molecule:
    return Molecule([x], [1.0])


def pair(m: Molecule, phi: ScalarLip) -> float:
    if len(m) == 0:
        return 0.0
    phi = normalize_lip0(phi)
    return float(np.dot(m.coeffs, phi(m.support)))


def _cumulative(m: Molecule):
    """Breakpoints {0} U support and the value of G on each gap between them."""
    pts = np.union1d(m.support, [0.0])
    z = int(np.searchsorted(pts, 0.0))
    coeff = np.zeros(pts.size)
    coeff[np.searchsorted(pts, m.support)] = m.coeffs
    g = np.zeros(pts.size - 1)
    # right of 0: mass of points beyond t
    right = coeff[z + 1 :]
    g[z:] = np.cumsum(right[::-1])[::-1]
    # left of 0: minus mass of points before t
    left = coeff[:z]
    g[:z] = -np.cumsum(left)
    return pts, g


def free_norm(m: Molecule) -> float:
    if len(m) == 0:
        return 0.0
    pts, g = _cumulative(m)
    return float(np.dot(np.abs(g), np.diff(pts)))


def free_norm_oracle(m: Molecule) -> float:
    """Brute force: best pairing over all unit-slope sign patterns on the gaps.

    Each candidate is an honest 1-Lipschitz ``Lip_0`` function built as a
    :class:`PwLinear`; nothing from :func:`free_norm` is reused.
    """
    k = len(m)
    if k > ORACLE_MAX_SUPPORT:
        raise SupportTooLarge(f"oracle limited to {ORACLE_MAX_SUPPORT} points, got {k}")
    if k == 0:
        return 0.0
    pts = np.union1d(m.support, [0.0])
    z = int(np.searchsorted(pts, 0.0))
    gaps = np.diff(pts)
    # row r holds the breakpoint values of candidate r (slope +-1 per gap,
    # tails continuing the outer slopes, value 0 at the base point)
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=gaps.size)))
    ys = np.concatenate((np.zeros((signs.shape[0], 1)), np.cumsum(signs * gaps, axis=1)), axis=1)
    ys -= ys[:, [z]]
    at = np.searchsorted(pts, m.support)
    pairings = ys[:, at] @ m.coeffs
    return float(pairings.max())


def oracle_candidate(m: Molecule, signs) -> PwLinear:
    """The 1-Lipschitz candidate for one sign pattern, as a function."""
    pts = np.union1d(m.support, [0.0])
    z = int(np.searchsorted(pts, 0.0))
    s = np.asarray(signs, dtype=float)
    ys = np.concatenate(([0.0], np.cumsum(s * np.diff(pts))))
    return PwLinear(pts, ys - ys[z], s[0], s[-1])


def weak_probe(field, m: Molecule) -> MeasurableFn:
    """``w -> <m, field(w)>``, one scalar per atom."""
    from .lip_field import LipField

    if not isinstance(field, LipField):
        raise SpaceMismatch("weak_probe needs a LipField")
    vals = np.zeros(field.space.size)
    if len(m):
        # affine-shifted fields pair through their normalised part only
        for fi, idx in field.groups():
            vals[idx] = pair(m, fi)
    return MeasurableFn(field.space, vals)
