"""Multiplication operators between L^p spaces on a finite atomic space."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ExponentOrder, SpaceMismatch, ZeroMultiplier
from .function_space import MeasurableFn, SpaceSpec, bfs_norm
from .measure_space import DiscreteMeasureSpace

__all__ = [
    "MultiplierSpec",
    "mult_apply",
    "mult_norm",
    "extremizer",
    "mult_norm_oracle",
    "operator_ratio",
]


@dataclass(frozen=True)
class MultiplierSpec:
    """Source ``L^p``, target ``L^q``; ``r`` solves ``1/r = 1/q - 1/p``."""

    p: SpaceSpec
    q: SpaceSpec

    def __init__(self, p, q):
        object.__setattr__(self, "p", SpaceSpec.from_exponent(p))
        object.__setattr__(self, "q", SpaceSpec.from_exponent(q))

    @property
    def inverse_r(self) -> Fraction:
        return self.q.inverse - self.p.inverse

    @property
    def ordered(self) -> bool:
        """True in the inclusion regime ``q <= p``."""
        return self.inverse_r >= 0

    @property
    def r(self) -> SpaceSpec:
        if not self.ordered:
            raise ExponentOrder(f"q={self.q} exceeds p={self.p}; no L^r identity")
        return SpaceSpec.from_inverse(self.inverse_r)

    def to_json(self) -> dict:
        out = {"p": _exp_json(self.p), "q": _exp_json(self.q)}
        if self.ordered:
            out["r"] = _exp_json(self.r)
        return out


def _exp_json(s: SpaceSpec):
    if s.is_inf:
        return "inf"
    return int(s.p) if s.p.denominator == 1 else float(s.p)


def mult_apply(h: MeasurableFn, f: MeasurableFn) -> MeasurableFn:
    return h * f


def mult_norm(space: DiscreteMeasureSpace, h: MeasurableFn, spec: MultiplierSpec) -> float:
    """Norm of ``f -> h f`` from ``L^p`` to ``L^q``, which is ``||h||_r``."""
    if h.space != space:
        raise SpaceMismatch("multiplier is not defined on this space")
    return bfs_norm(space, spec.r, h)


def operator_ratio(space, h: MeasurableFn, f: MeasurableFn, spec: MultiplierSpec) -> float:
    """``||h f||_q / ||f||_p``."""
    return bfs_norm(space, spec.q, h * f) / bfs_norm(space, spec.p, f)


def extremizer(space: DiscreteMeasureSpace, h: MeasurableFn, spec: MultiplierSpec) -> MeasurableFn:
    """Unit vector of ``L^p`` on which ``f -> h f`` attains its norm.

    For ``q < p < inf`` this is ``|h|^(r/p)`` rescaled (equality in Hoelder).
    For ``p = q`` the norm is ``max |h|`` and is attained at an indicator of
    an atom where the maximum occurs; for ``p = inf`` at ``chi_Omega``.
    """
    if h.space != space:
        raise SpaceMismatch("multiplier is not defined on this space")
    r = spec.r  # raises ExponentOrder for q > p
    a = np.abs(h.values)
    if not np.any(a):
        raise ZeroMultiplier("the zero multiplier has no extremal function")
    if spec.p.is_inf:
        f = np.ones(space.size)
    elif r.is_inf:
        f = np.zeros(space.size)
        f[int(np.argmax(a))] = 1.0
    else:
        f = (a / a.max()) ** float(r.p / spec.p.p)
    f = MeasurableFn(space, f)
    return f * (1.0 / bfs_norm(space, spec.p, f))


def _ratios(F: np.ndarray, H: np.ndarray, w: np.ndarray, p: SpaceSpec, q: SpaceSpec) -> np.ndarray:
    """Row-wise ``||H F||_q / ||F||_p`` for a batch of nonnegative candidates."""

    def norm(X, s):
        if s.is_inf:
            return X.max(axis=1)
        e = float(s.p)
        m = X.max(axis=1, keepdims=True)
        m[m == 0] = 1.0
        return m[:, 0] * ((X / m) ** e @ w) ** (1.0 / e)

    den = norm(F, p)
    num = norm(F * H, q)
    out = np.zeros_like(den)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def mult_norm_oracle(
    space: DiscreteMeasureSpace,
    h: MeasurableFn,
    spec: MultiplierSpec,
    trials: int = 8,
    seed: int = 0,
) -> float:
    """Lower bound for ``sup ||h f||_q / ||f||_p`` found by search.

    Candidates are the atom indicators plus ``trials`` random positive starts,
    each pushed through the nonlinear power iteration

        f <- (|h|^q f^(q-1))^(1/(p-1)),

    the fixed-point form of the stationarity condition. In log coordinates
    the iteration is affine, so iterate ``k`` is formed directly and ``k``
    runs over ``1..64`` and then powers of two up to ``2^60``. The best ratio
    seen over all actual candidates is returned, so the value never exceeds
    the true norm and is nondecreasing in ``trials`` for a fixed seed.
    """
    if h.space != space:
        raise SpaceMismatch("multiplier is not defined on this space")
    H = np.abs(h.values)
    if not np.any(H):
        return 0.0
    w = space.weights
    n = space.size
    p, q = spec.p, spec.q
    best = float(_ratios(np.eye(n), H, w, p, q).max())

    rng = np.random.default_rng(seed)
    starts = rng.random((max(int(trials), 0), n)) + 1e-3
    if starts.shape[0] == 0:
        return best
    best = max(best, float(_ratios(starts, H, w, p, q).max()))
    if p.is_inf:
        return max(best, float(_ratios(np.ones((1, n)), H, w, p, q)[0]))
    if q.is_inf or p.p == 1:
        return best

    pf, qf = float(p.p), float(q.p)
    a = (qf - 1.0) / (pf - 1.0)
    with np.errstate(divide="ignore"):
        c = qf * np.log(H) / (pf - 1.0)
    l0 = np.log(starts)
    ks = list(range(1, 65)) + [2**j for j in range(7, 61)]
    for k in ks:
        if a == 1.0:
            gain = float(k)
            ak = 1.0
        else:
            ak = a**k
            gain = (1.0 - ak) / (1.0 - a) if np.isfinite(ak) else np.inf
        if not np.isfinite(gain) or not np.isfinite(ak):
            break
        with np.errstate(invalid="ignore"):
            L = ak * l0 + gain * c
        L -= L.max(axis=1, keepdims=True)
        F = np.exp(L)
        best = max(best, float(_ratios(F, H, w, p, q).max()))
    return best
