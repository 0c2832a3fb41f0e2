"""Exact scalar Lipschitz calculus on the real line.

The canonical representation is :class:`PwLinear`, a continuous piecewise
linear function given by its breakpoints plus the two tail slopes. Sums,
differences, scalings, pointwise minima and maxima of such functions are again
piecewise linear, so every Lipschitz constant in this module is the exact
maximum absolute slope rather than an estimate.

Functions that are not piecewise linear (``1/(1+|v|)``) are wrapped as
:class:`ClosedForm` with a certified Lipschitz bound; :func:`pl_approx` turns
them into interpolants when algebra is needed.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import EmptySamples, IncompatibleSamples, NotPiecewiseLinear

__all__ = [
    "PwLinear",
    "ClosedForm",
    "ScalarLip",
    "identity",
    "zero",
    "constant_fn",
    "linear",
    "inv_one_plus_abs",
    "eval_fn",
    "lip_const",
    "pl_add",
    "pl_sub",
    "pl_scale",
    "pl_min",
    "pl_max",
    "normalize_lip0",
    "mcshane_extend",
    "dist_set_fn",
    "pl_approx",
    "as_pl",
]

SLOPE_RTOL = 1e-12
# crossings closer than this (relative to their segment) to a breakpoint are dropped
SNAP_RTOL = 1e-9


class PwLinear:
    """Continuous piecewise linear ``R -> R``.

    Parameters
    ----------
    xs : strictly increasing breakpoints (at least one)
    ys : values at the breakpoints
    left_slope, right_slope : slopes on ``(-inf, xs[0]]`` and ``[xs[-1], inf)``
    """

    __slots__ = ("xs", "ys", "left_slope", "right_slope")

    def __init__(self, xs, ys, left_slope: float = 0.0, right_slope: float = 0.0):
        xs = np.array(xs, dtype=float).ravel()
        ys = np.array(ys, dtype=float).ravel()
        if xs.size == 0:
            raise ValueError("a piecewise linear function needs a breakpoint")
        if xs.shape != ys.shape:
            raise ValueError("xs and ys must have the same length")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("breakpoints and values must be finite")
        if not (math.isfinite(left_slope) and math.isfinite(right_slope)):
            raise ValueError("tail slopes must be finite")
        xs.setflags(write=False)
        ys.setflags(write=False)
        self.xs = xs
        self.ys = ys
        self.left_slope = float(left_slope)
        self.right_slope = float(right_slope)

    @classmethod
    def from_points(cls, points, left_slope=0.0, right_slope=0.0) -> "PwLinear":
        pts = sorted((float(x), float(y)) for x, y in points)
        return cls([p[0] for p in pts], [p[1] for p in pts], left_slope, right_slope)

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        out = np.interp(v, self.xs, self.ys)
        lo = v < self.xs[0]
        hi = v > self.xs[-1]
        if np.any(lo):
            out = np.where(lo, self.ys[0] + self.left_slope * (v - self.xs[0]), out)
        if np.any(hi):
            out = np.where(hi, self.ys[-1] + self.right_slope * (v - self.xs[-1]), out)
        return float(out) if out.ndim == 0 else out

    @property
    def segment_slopes(self) -> np.ndarray:
        return np.diff(self.ys) / np.diff(self.xs)

    @property
    def slopes(self) -> np.ndarray:
        """Tail and interior slopes, left to right."""
        return np.concatenate(([self.left_slope], self.segment_slopes, [self.right_slope]))

    @property
    def lip(self) -> float:
        return float(np.max(np.abs(self.slopes)))

    @property
    def breakpoints(self) -> np.ndarray:
        return self.xs

    def shifted(self, c: float) -> "PwLinear":
        return PwLinear(self.xs, self.ys + c, self.left_slope, self.right_slope)

    def simplify(self) -> "PwLinear":
        """Drop breakpoints where the slope does not change."""
        s = self.slopes
        keep = np.ones(self.xs.size, dtype=bool)
        keep[:] = s[:-1] != s[1:]
        if not keep.any():
            keep[0] = True
        return PwLinear(self.xs[keep], self.ys[keep], self.left_slope, self.right_slope)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            return self.shifted(float(other))
        return pl_add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            return self.shifted(-float(other))
        return pl_sub(self, other)

    def __mul__(self, c):
        if not isinstance(c, (int, float, np.floating, np.integer)):
            return NotImplemented
        return pl_scale(self, float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return pl_scale(self, -1.0)

    def __eq__(self, other):
        if not isinstance(other, PwLinear):
            return NotImplemented
        return (
            np.array_equal(self.xs, other.xs)
            and np.array_equal(self.ys, other.ys)
            and self.left_slope == other.left_slope
            and self.right_slope == other.right_slope
        )

    __hash__ = None

    def to_json(self) -> dict:
        return {
            "type": "pl",
            "points": [[float(x), float(y)] for x, y in zip(self.xs, self.ys)],
            "left_slope": self.left_slope,
            "right_slope": self.right_slope,
        }

    def __repr__(self):
        pts = ", ".join(f"({x:g}, {y:g})" for x, y in zip(self.xs[:6], self.ys[:6]))
        more = ", ..." if self.xs.size > 6 else ""
        return f"PwLinear([{pts}{more}], left={self.left_slope:g}, right={self.right_slope:g})"


class ClosedForm:
    """A Lipschitz function given by a vectorised evaluator.

    ``lip`` must be a true upper bound for the Lipschitz constant of
    ``func``. ``offset`` is subtracted from every value (used to move a
    function into ``Lip_0`` without losing the closed form).
    """

    __slots__ = ("name", "func", "lip", "params", "offset")

    def __init__(self, name: str, func: Callable, lip: float, params=None, offset=0.0):
        self.name = name
        self.func = func
        self.lip = float(lip)
        self.params = dict(params or {})
        self.offset = float(offset)

    def __call__(self, v):
        out = self.func(np.asarray(v, dtype=float)) - self.offset
        return float(out) if np.ndim(out) == 0 else out

    def shifted(self, c: float) -> "ClosedForm":
        return ClosedForm(self.name, self.func, self.lip, self.params, self.offset - c)

    def __mul__(self, c):
        if not isinstance(c, (int, float, np.floating, np.integer)):
            return NotImplemented
        c = float(c)
        base = self.func
        params = {**self.params, "scale": c * self.params.get("scale", 1.0)}
        return ClosedForm(self.name, lambda v: c * base(v), abs(c) * self.lip, params, c * self.offset)

    __rmul__ = __mul__

    def to_json(self) -> dict:
        d = {"type": self.name, **self.params}
        if self.offset:
            d["offset"] = self.offset
        return d

    def __repr__(self):
        off = f", offset={self.offset:g}" if self.offset else ""
        return f"ClosedForm({self.name}, lip<={self.lip:g}{off})"


ScalarLip = Union[PwLinear, ClosedForm]


def identity() -> PwLinear:
    return PwLinear([0.0], [0.0], 1.0, 1.0)


def zero() -> PwLinear:
    return PwLinear([0.0], [0.0], 0.0, 0.0)


def constant_fn(c: float) -> PwLinear:
    return PwLinear([0.0], [float(c)], 0.0, 0.0)


def linear(c: float) -> PwLinear:
    """``v -> c v``."""
    return PwLinear([0.0], [0.0], float(c), float(c))


def _inv_one_plus_abs(v):
    return 1.0 / (1.0 + np.abs(v))


def inv_one_plus_abs() -> ClosedForm:
    # |1/(1+|a|) - 1/(1+|b|)| <= ||a|-|b|| <= |a-b|
    return ClosedForm("inv_one_plus_abs", _inv_one_plus_abs, 1.0)


def eval_fn(phi: ScalarLip, v):
    return phi(v)


def lip_const(phi: ScalarLip) -> float:
    return phi.lip


def as_pl(phi: ScalarLip) -> PwLinear:
    if not isinstance(phi, PwLinear):
        raise NotPiecewiseLinear(
            f"{phi!r} is not piecewise linear; convert it with pl_approx first"
        )
    return phi


def _merged(a: PwLinear, b: PwLinear) -> np.ndarray:
    return np.union1d(a.xs, b.xs)


def pl_add(a: ScalarLip, b: ScalarLip) -> PwLinear:
    a, b = as_pl(a), as_pl(b)
    xs = _merged(a, b)
    return PwLinear(xs, a(xs) + b(xs), a.left_slope + b.left_slope, a.right_slope + b.right_slope)


def pl_sub(a: ScalarLip, b: ScalarLip) -> PwLinear:
    a, b = as_pl(a), as_pl(b)
    xs = _merged(a, b)
    return PwLinear(xs, a(xs) - b(xs), a.left_slope - b.left_slope, a.right_slope - b.right_slope)


def pl_scale(a: ScalarLip, c: float) -> PwLinear:
    a = as_pl(a)
    return PwLinear(a.xs, c * a.ys, c * a.left_slope, c * a.right_slope)


def _envelope(a: PwLinear, b: PwLinear, take_min: bool) -> PwLinear:
    xs = _merged(a, b)
    d = a(xs) - b(xs)
    new = [xs]

    # interior crossings: sign change of a-b between consecutive breakpoints
    sc = d[:-1] * d[1:] < 0
    if np.any(sc):
        i = np.nonzero(sc)[0]
        t = d[i] / (d[i] - d[i + 1])
        # a crossing within rounding of a breakpoint would create a sliver
        keep = (t > SNAP_RTOL) & (t < 1 - SNAP_RTOL)
        new.append(xs[i[keep]] + t[keep] * (xs[i[keep] + 1] - xs[i[keep]]))

    span = max(1.0, float(xs[-1] - xs[0]))
    dl = a.left_slope - b.left_slope
    dr = a.right_slope - b.right_slope
    # distance from the outer breakpoint to the tail crossing, if any
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        tl = d[0] / dl if dl != 0 else np.inf
        tr = -d[-1] / dr if dr != 0 else np.inf
    # past the tail crossing (or when the tails touch at the breakpoint) the
    # slopes pick the winner; otherwise the sign of the gap persists
    left_by_slope = d[0] == 0 or (0 < tl < np.inf)
    right_by_slope = d[-1] == 0 or (0 < tr < np.inf)
    if 0 < tl < np.inf and tl > SNAP_RTOL * span:
        new.append([xs[0] - tl])
    if 0 < tr < np.inf and tr > SNAP_RTOL * span:
        new.append([xs[-1] + tr])

    pts = np.unique(np.concatenate(new))
    pick = np.minimum if take_min else np.maximum
    ys = pick(a(pts), b(pts))

    if left_by_slope and dl != 0:
        a_below = dl > 0
    else:
        a_below = d[0] <= 0
    left = a.left_slope if a_below == take_min else b.left_slope
    if right_by_slope and dr != 0:
        a_below = dr < 0
    else:
        a_below = d[-1] <= 0
    right = a.right_slope if a_below == take_min else b.right_slope
    return PwLinear(pts, ys, left, right)


def pl_min(a: ScalarLip, b: ScalarLip) -> PwLinear:
    """Pointwise minimum.

    Crossings closer than ``SNAP_RTOL`` (relative to their segment) to an
    existing breakpoint are not inserted, which keeps rounding from creating
    sliver pieces with spurious slopes; the value error this allows is at most
    ``|slope difference| * SNAP_RTOL * segment length``.
    """
    return _envelope(as_pl(a), as_pl(b), take_min=True)


def pl_max(a: ScalarLip, b: ScalarLip) -> PwLinear:
    return _envelope(as_pl(a), as_pl(b), take_min=False)


def normalize_lip0(phi: ScalarLip) -> ScalarLip:
    """``phi - phi(0)``; same Lipschitz constant, vanishes at the base point."""
    c = phi(0.0)
    if c == 0.0:
        return phi
    return phi.shifted(-c)


def mcshane_extend(samples: Iterable[Sequence[float]], K: float, mode: str = "upper") -> PwLinear:
    """Extend K-Lipschitz data from finitely many points to all of R.

    ``upper`` gives ``x -> min_j (y_j + K|x - x_j|)``, ``lower`` gives
    ``x -> max_j (y_j - K|x - x_j|)``. Both interpolate the samples and keep
    the Lipschitz constant at most ``K``.
    """
    if mode not in ("upper", "lower"):
        raise ValueError(f"mode must be 'upper' or 'lower', got {mode!r}")
    pts = sorted((float(x), float(y)) for x, y in samples)
    if not pts:
        raise EmptySamples("mcshane_extend needs at least one sample")
    K = float(K)
    if K < 0:
        raise ValueError("K must be non-negative")
    xs, ys = [], []
    for x, y in pts:
        if xs and x == xs[-1]:
            if y != ys[-1]:
                raise IncompatibleSamples(f"two values at x={x}: {ys[-1]} and {y}")
            continue
        xs.append(x)
        ys.append(y)
    xs = np.array(xs)
    ys = np.array(ys)
    if xs.size > 1:
        # the largest chord slope is attained between neighbours
        s = np.abs(np.diff(ys) / np.diff(xs))
        j = int(np.argmax(s))
        if s[j] > K * (1 + SLOPE_RTOL) + SLOPE_RTOL * (K == 0):
            raise IncompatibleSamples(
                f"samples at x={xs[j]} and x={xs[j + 1]} have slope {s[j]:.17g} > K={K:.17g}"
            )
    if mode == "lower":
        up = mcshane_extend(zip(xs, -ys), K, "upper")
        return PwLinear(up.xs, -up.ys, -up.left_slope, -up.right_slope)

    if K == 0 or xs.size == 1:
        return PwLinear(xs[:1] if K == 0 else xs, ys[:1] if K == 0 else ys, -K, K)
    # between neighbours the upper envelope is the min of two cones
    cross = (ys[1:] - ys[:-1] + K * (xs[:-1] + xs[1:])) / (2 * K)
    gap = xs[1:] - xs[:-1]
    inside = (cross - xs[:-1] > SNAP_RTOL * gap) & (xs[1:] - cross > SNAP_RTOL * gap)
    allx = np.unique(np.concatenate((xs, cross[inside])))
    # evaluate the envelope only through neighbouring cones
    k = np.clip(np.searchsorted(xs, allx, side="right") - 1, 0, xs.size - 1)
    k1 = np.minimum(k + 1, xs.size - 1)
    vals = np.minimum(ys[k] + K * np.abs(allx - xs[k]), ys[k1] + K * np.abs(allx - xs[k1]))
    return PwLinear(allx, vals, -K, K)


def dist_set_fn(S: Iterable[float], cap: float) -> PwLinear:
    """``r -> min(cap, |r|, d(r, S))`` as an exact piecewise linear function."""
    cap = float(cap)
    if cap <= 0:
        raise ValueError("cap must be positive")
    zeros = sorted({0.0, *(float(s) for s in S)})
    xs = [zeros[0] - cap]
    ys = [cap]
    for a, b in zip(zeros, zeros[1:]):
        xs.append(a)
        ys.append(0.0)
        if b - a >= 2 * cap:
            xs += [a + cap, b - cap]
            ys += [cap, cap]
        else:
            xs.append((a + b) / 2)
            ys.append((b - a) / 2)
    xs += [zeros[-1], zeros[-1] + cap]
    ys += [0.0, cap]
    # a + cap == b - cap produces a duplicate breakpoint
    out_x, out_y = [xs[0]], [ys[0]]
    for x, y in zip(xs[1:], ys[1:]):
        if x != out_x[-1]:
            out_x.append(x)
            out_y.append(y)
    return PwLinear(out_x, out_y, 0.0, 0.0)


def pl_approx(phi: ScalarLip, range_: tuple[float, float], n: int) -> PwLinear:
    """Interpolant of ``phi`` on ``n + 1`` equispaced nodes of ``[a, b]``.

    Tails are flat, so the Lipschitz constant never exceeds that of ``phi``.
    The sup error on ``[a, b]`` is at most ``lip(phi) * (b - a) / n``.
    """
    a, b = map(float, range_)
    if n < 1 or not a < b:
        raise ValueError("pl_approx needs n >= 1 and a < b")
    if isinstance(phi, PwLinear):
        return phi
    xs = np.linspace(a, b, n + 1)
    return PwLinear(xs, phi(xs), 0.0, 0.0)


def approx_error_bound(phi: ScalarLip, range_: tuple[float, float], n: int) -> float:
    if isinstance(phi, PwLinear):
        return 0.0
    a, b = range_
    return phi.lip * (b - a) / n
