"""Superposition operators and the checks built around them.

``T_Phi(f)(w) = Phi(w)(f(w))``. Besides applying such operators, this module
verifies the pointwise inequality ``|Tf - Tg| <= K |f - g|`` on sampled pairs,
estimates the smallest admissible ``K`` from constant probes, rebuilds a field
from the values ``T(lam chi_Omega)``, recognises which linear maps are
multiplication operators, and evaluates simple tensors.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    DegenerateGrid,
    GridTooCoarse,
    IncompatibleSamples,
    NonzeroAtZero,
    NotIndicator,
    NotPiecewiseLinear,
    SpaceMismatch,
)
from .function_space import MeasurableFn, SpaceSpec, bfs_norm
from .lip_field import LipField
from .lipschitz import PwLinear, ScalarLip, pl_add, SLOPE_RTOL
from .measure_space import DiscreteMeasureSpace, partition_grid, unit_grid

__all__ = [
    "SuperOp",
    "FieldOp",
    "Opaque",
    "MatrixOp",
    "inf_f2_invsqrt",
    "apply",
    "SamplerConfig",
    "VerifyReport",
    "check_lattice_lipschitz",
    "best_bound_estimate",
    "disjointness_check",
    "DiagDecision",
    "linear_diag_detect",
    "recover_field",
    "SimpleTensor",
    "tensor_apply",
    "tensor_canonicalize",
    "nonlipschitz_demo",
]

DEFAULT_TOL = 1e-9


class SuperOp:
    """Operator acting on measurable functions over a fixed space."""

    space: DiscreteMeasureSpace
    name = "operator"

    def __call__(self, f: MeasurableFn) -> MeasurableFn:
        return apply(self, f)

    def _apply(self, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def at_zero(self) -> np.ndarray:
        return self._apply(np.zeros(self.space.size))


class FieldOp(SuperOp):
    """``f -> (w -> Phi(w)(f(w)))``."""

    name = "field"

    def __init__(self, field: LipField):
        self.field = field
        self.space = field.space

    def _apply(self, values):
        return self.field.evaluate(values)


class Opaque(SuperOp):
    """An operator known only through an evaluator on value vectors.

    ``zero_preserving`` records whether the operator claims ``T(0) = 0``
    (``None`` when no claim is made); checks that need the property test it
    rather than trust it.
    """

    def __init__(
        self,
        space: DiscreteMeasureSpace,
        evaluator: Callable[[np.ndarray], np.ndarray],
        name: str = "opaque",
        zero_preserving: Optional[bool] = None,
        serial_only: bool = False,
    ):
        self.space = space
        self.evaluator = evaluator
        self.name = name
        self.zero_preserving = zero_preserving
        self.serial_only = serial_only

    def _apply(self, values):
        out = np.asarray(self.evaluator(np.asarray(values, dtype=float)), dtype=float)
        if out.shape != (self.space.size,):
            raise SpaceMismatch(f"{self.name} returned shape {out.shape}")
        return out


class MatrixOp(Opaque):
    """The linear operator ``f -> A f`` in the atom basis."""

    def __init__(self, space: DiscreteMeasureSpace, matrix):
        A = np.array(matrix, dtype=float)
        if A.shape != (space.size, space.size):
            raise SpaceMismatch(f"matrix shape {A.shape} does not match {space.size} atoms")
        A.setflags(write=False)
        self.matrix = A
        super().__init__(space, lambda v: A @ v, "matrix", zero_preserving=True)


def inf_f2_invsqrt(space: DiscreteMeasureSpace) -> Opaque:
    """``T(f)(w) = min(f(w)^2, 1/sqrt(w))``; atoms must be coordinates in (0, 1]."""
    w = space.atoms
    if np.any(w <= 0):
        raise ValueError("inf_f2_invsqrt needs atoms with positive coordinates")
    cap = 1.0 / np.sqrt(w)
    return Opaque(space, lambda v: np.minimum(v * v, cap), "inf_f2_invsqrt", zero_preserving=True)


def apply(T: SuperOp, f: MeasurableFn) -> MeasurableFn:
    if f.space != T.space:
        raise SpaceMismatch("function and operator live on different spaces")
    return MeasurableFn(T.space, T._apply(f.values))


# ----------------------------------------------------------------------------
# verification


@dataclass
class SamplerConfig:
    """Pair sampler for :func:`check_lattice_lipschitz`.

    Pairs cycle through four families: constants ``lam chi_Omega``, smooth
    random functions, independent per-atom noise, and pairs masked by a
    random indicator. ``scale`` bounds the sampled values; by default it
    covers the breakpoints of a piecewise linear field.
    """

    samples: int = 200
    seed: int = 0
    scale: Optional[float] = None
    breakpoint_probes: bool = True
    max_breakpoint_probes: int = 512


@dataclass
class VerifyReport:
    passed: bool
    worst_margin: float
    witness: Optional[dict] = None
    samples_used: int = 0
    violations: int = 0

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "worst_margin": self.worst_margin,
            "witness": self.witness,
            "samples_used": self.samples_used,
            "violations": self.violations,
        }


def _field_breakpoints(T: SuperOp) -> np.ndarray:
    if not isinstance(T, FieldOp):
        return np.zeros(0)
    pts = [f.xs for f in T.field.fns if isinstance(f, PwLinear)]
    return np.unique(np.concatenate(pts)) if pts else np.zeros(0)


def _constant_probes(T: SuperOp, cfg: SamplerConfig) -> list[tuple[float, float]]:
    """Constant pairs straddling each piece of a piecewise linear field."""
    if not cfg.breakpoint_probes:
        return []
    bp = _field_breakpoints(T)
    if bp.size == 0:
        return []
    if bp.size > cfg.max_breakpoint_probes:
        bp = bp[np.linspace(0, bp.size - 1, cfg.max_breakpoint_probes).round().astype(int)]
    pairs = [(bp[0] - 1.0, bp[0])]
    pairs += list(zip(bp[:-1], bp[1:]))
    pairs.append((bp[-1], bp[-1] + 1.0))
    return pairs


def _default_scale(T: SuperOp) -> float:
    bp = _field_breakpoints(T)
    return float(np.max(np.abs(bp)) + 1.0) if bp.size else 2.0


def sample_pairs(T: SuperOp, cfg: SamplerConfig):
    """Yield ``(family, f_values, g_values)`` pairs for verification."""
    n = T.space.size
    rng = np.random.default_rng(cfg.seed)
    R = cfg.scale if cfg.scale is not None else _default_scale(T)
    for a, b in _constant_probes(T, cfg):
        yield "breakpoint", np.full(n, a), np.full(n, b)
    t = np.linspace(0.0, 1.0, n)
    for k in range(cfg.samples):
        fam = k % 4
        if fam == 0:
            a, b = rng.uniform(-R, R, 2)
            yield "constant", np.full(n, a), np.full(n, b)
        elif fam == 1:
            pair = []
            for _ in range(2):
                modes = rng.integers(1, 6, size=3)
                amp = rng.normal(size=3) * R / 3
                phase = rng.uniform(0, 2 * np.pi, 3)
                v = (amp[:, None] * np.sin(2 * np.pi * modes[:, None] * t[None, :] + phase[:, None])).sum(0)
                pair.append(v)
            yield "smooth", pair[0], pair[1]
        elif fam == 2:
            yield "noise", rng.uniform(-R, R, n), rng.uniform(-R, R, n)
        else:
            mask = rng.random(n) < 0.5
            f = rng.uniform(-R, R, n)
            g = rng.uniform(-R, R, n) if rng.random() < 0.5 else np.zeros(n)
            yield "masked", np.where(mask, f, 0.0), np.where(mask, g, 0.0)


def check_lattice_lipschitz(
    T: SuperOp,
    K: MeasurableFn,
    config: Optional[SamplerConfig] = None,
    tol: float = DEFAULT_TOL,
) -> VerifyReport:
    """Test ``|Tf - Tg| <= K |f - g| + tol`` pointwise on sampled pairs.

    ``worst_margin`` is the smallest slack ``K|f-g| - |Tf-Tg|`` seen. A
    witness ``(f, g, atom)`` is attached exactly when some slack is below
    ``-tol``.
    """
    cfg = config or SamplerConfig()
    if K.space != T.space:
        raise SpaceMismatch("bound function lives on a different space")
    Kv = K.values
    if np.any(Kv < 0):
        raise ValueError("bound function must be non-negative")
    worst = np.inf
    worst_case = None
    used = 0
    violations = 0
    for fam, f, g in sample_pairs(T, cfg):
        used += 1
        slack = Kv * np.abs(f - g) - np.abs(T._apply(f) - T._apply(g))
        i = int(np.argmin(slack))
        if slack[i] < -tol:
            violations += 1
        if slack[i] < worst:
            worst = float(slack[i])
            worst_case = (fam, f, g, i)
    passed = violations == 0
    witness = None
    if not passed:
        fam, f, g, i = worst_case
        witness = {
            "family": fam,
            "atom": i,
            "f": f.tolist(),
            "g": g.tolist(),
            "f_at_atom": float(f[i]),
            "g_at_atom": float(g[i]),
            "K_at_atom": float(Kv[i]),
        }
    return VerifyReport(passed, float(worst), witness, used, violations)


def best_bound_estimate(T: SuperOp, lam_grid: Sequence[float]) -> MeasurableFn:
    """Largest difference quotient over constant probes, atom by atom.

    Every admissible bound function dominates the result pointwise.
    """
    lam = np.unique(np.asarray(lam_grid, dtype=float))
    if lam.size < 2:
        raise DegenerateGrid("need at least two distinct grid values")
    n = T.space.size
    vals = np.stack([T._apply(np.full(n, x)) for x in lam])
    best = np.zeros(n)
    for i in range(lam.size - 1):
        q = np.abs(vals[i + 1 :] - vals[i]) / (lam[i + 1 :] - lam[i])[:, None]
        best = np.maximum(best, q.max(axis=0))
    return MeasurableFn(T.space, best)


def _zero_check(T: SuperOp, tol: float) -> np.ndarray:
    t0 = T.at_zero()
    if np.max(np.abs(t0)) > tol:
        raise NonzeroAtZero(f"|T(0)| reaches {np.max(np.abs(t0)):.3g} > {tol:g}")
    return t0


def disjointness_check(
    T: SuperOp,
    f: MeasurableFn,
    A,
    B,
    g: Optional[MeasurableFn] = None,
    tol: float = DEFAULT_TOL,
) -> VerifyReport:
    """Check ``T(f chi_A) = T(f) chi_A`` and additivity over disjoint ``A``, ``B``."""
    _zero_check(T, tol)
    n = T.space.size
    a = np.zeros(n, dtype=bool)
    b = np.zeros(n, dtype=bool)
    a[np.asarray(list(A), dtype=int)] = True
    b[np.asarray(list(B), dtype=int)] = True
    if np.any(a & b):
        raise ValueError("A and B must be disjoint")
    g = f if g is None else g
    fA = np.where(a, f.values, 0.0)
    gB = np.where(b, g.values, 0.0)
    T_fA = T._apply(fA)
    dev1 = np.abs(T_fA - np.where(a, T._apply(f.values), 0.0))
    dev2 = np.abs(T._apply(fA + gB) - (T_fA + T._apply(gB)))
    dev = np.maximum(dev1, dev2)
    i = int(np.argmax(dev))
    passed = bool(dev[i] <= tol)
    witness = None
    if not passed:
        which = "restriction" if dev1[i] >= dev2[i] else "additivity"
        witness = {"check": which, "atom": i, "deviation": float(dev[i])}
    return VerifyReport(passed, float(-dev[i]), witness, 2, int(np.sum(dev > tol)))


@dataclass
class DiagDecision:
    """Outcome of :func:`linear_diag_detect`.

    ``kind`` is ``"Diagonal"`` (then ``h`` holds ``A chi_Omega``) or
    ``"NotLatticeLipschitz"`` (then ``witness`` names a basis vector ``e_j``
    and an atom ``i != j`` where ``(A e_j)(i) != 0 = e_j(i)``).
    """

    kind: str
    h: Optional[np.ndarray] = None
    witness: Optional[dict] = None

    @property
    def is_diagonal(self) -> bool:
        return self.kind == "Diagonal"

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.h is not None:
            out["h"] = self.h.tolist()
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def linear_diag_detect(A, tol: float = 0.0) -> DiagDecision:
    """Decide whether the linear map ``A`` is a multiplication operator.

    Off-diagonal entries with magnitude above ``tol`` rule it out: ``A e_j``
    is then nonzero at an atom where ``e_j`` vanishes, so no finite bound
    function exists.
    """
    if isinstance(A, MatrixOp):
        A = A.matrix
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    off = np.abs(A - np.diag(np.diag(A)))
    i, j = np.unravel_index(int(np.argmax(off)), off.shape)
    if off[i, j] > tol:
        return DiagDecision(
            "NotLatticeLipschitz",
            witness={"basis_vector": int(j), "atom": int(i), "value": float(A[i, j])},
        )
    return DiagDecision("Diagonal", h=A @ np.ones(A.shape[1]))


def recover_field(
    T: SuperOp,
    lam_grid: Sequence[float],
    K: MeasurableFn,
    tails: str = "upper",
    tol: float = DEFAULT_TOL,
) -> LipField:
    """Rebuild the field of ``T`` from the constant responses ``T(lam chi_Omega)``.

    At each atom the samples ``(lam, T(lam chi_Omega)(w))`` are joined
    piecewise linearly across the grid. Outside the grid's hull the upper
    McShane extension continues with slopes ``-K(w)`` (left) and ``+K(w)``
    (right); ``tails="lower"`` selects the lower extension instead.
    """
    if tails not in ("upper", "lower"):
        raise ValueError("tails must be 'upper' or 'lower'")
    lam = np.unique(np.asarray(lam_grid, dtype=float))
    if lam.size < 2:
        raise DegenerateGrid("need at least two distinct grid values")
    if 0.0 not in lam:
        raise DegenerateGrid("the grid must contain 0")
    _zero_check(T, tol)
    n = T.space.size
    vals = np.stack([T._apply(np.full(n, x)) for x in lam])
    slopes = np.abs(np.diff(vals, axis=0)) / np.diff(lam)[:, None]
    Kv = K.values
    over = slopes > Kv[None, :] * (1 + SLOPE_RTOL) + SLOPE_RTOL
    if np.any(over):
        seg, atom = map(int, np.argwhere(over)[0])
        raise IncompatibleSamples(
            f"atom {atom}: samples at {lam[seg]} and {lam[seg + 1]} have slope "
            f"{slopes[seg, atom]:.17g} > K = {Kv[atom]:.17g}"
        )
    sign = 1.0 if tails == "upper" else -1.0
    fns = [PwLinear(lam, vals[:, i], -sign * Kv[i], sign * Kv[i]) for i in range(n)]
    return LipField(T.space, fns)


# ----------------------------------------------------------------------------
# simple tensors


@dataclass
class SimpleTensor:
    """``sum_i phi_i (x) h_i`` acting by ``f -> sum_i phi_i(f) h_i``."""

    terms: list = dc_field(default_factory=list)
    space: Optional[DiscreteMeasureSpace] = None

    def __post_init__(self):
        self.terms = [(phi, h) for phi, h in self.terms]
        for _, h in self.terms:
            if self.space is None:
                self.space = h.space
            elif h.space != self.space:
                raise SpaceMismatch("tensor terms live on different spaces")
        if self.space is None:
            raise ValueError("an empty tensor needs an explicit space")


def tensor_apply(t: SimpleTensor, f: MeasurableFn) -> MeasurableFn:
    if f.space != t.space:
        raise SpaceMismatch("function and tensor live on different spaces")
    out = np.zeros(t.space.size)
    for phi, h in t.terms:
        out = out + phi(f.values) * h.values
    return MeasurableFn(t.space, out)


def tensor_canonicalize(t: SimpleTensor) -> LipField:
    """Rewrite an indicator tensor as a field over a disjoint partition.

    Atoms are grouped by which indicators contain them; each group carries
    the sum of the corresponding ``phi_i`` (the zero function if none).
    """
    n = t.space.size
    if not t.terms:
        return LipField(t.space, [PwLinear([0.0], [0.0])], np.zeros(n, dtype=np.intp))
    H = np.stack([h.values for _, h in t.terms])
    if not np.all((H == 0.0) | (H == 1.0)):
        raise NotIndicator("tensor_canonicalize needs every h_i to be an indicator")
    cells, index = np.unique(H.T.astype(bool), axis=0, return_inverse=True)
    fns: list[ScalarLip] = []
    for cell in cells:
        members = [t.terms[i][0] for i in np.flatnonzero(cell)]
        if not members:
            fns.append(PwLinear([0.0], [0.0]))
        elif len(members) == 1:
            fns.append(members[0])
        else:
            acc = members[0]
            try:
                for phi in members[1:]:
                    acc = pl_add(acc, phi)
            except NotPiecewiseLinear:
                raise NotPiecewiseLinear(
                    "overlapping closed-form terms cannot be summed exactly"
                ) from None
            fns.append(acc)
    return LipField(t.space, fns, index.ravel())


# ----------------------------------------------------------------------------
# lattice Lipschitz but not Lipschitz


def nonlipschitz_space(n_values: Sequence[int], grid_size: Optional[int] = None, base_cells: int = 64):
    """Grid on [0, 1] resolving every ``[0, 1/n^4]``.

    With ``grid_size`` a uniform midpoint grid is used and must have at least
    ``4 max(n)^4`` cells; otherwise an adaptive partition puts an edge at each
    ``1/n^4`` on top of ``base_cells`` uniform cells.
    """
    top = max(n_values)
    if grid_size is not None:
        if grid_size < 4 * top**4:
            raise GridTooCoarse(f"grid_size {grid_size} < 4 * {top}^4")
        return unit_grid(grid_size)
    edges = set(np.linspace(0.0, 1.0, base_cells + 1).tolist())
    for n in n_values:
        c = 1.0 / n**4
        edges.update([c, c / 2, 2 * c if 2 * c < 1 else 1.0])
    return partition_grid(edges)


def nonlipschitz_demo(n_values: Sequence[int], grid_size: Optional[int] = None) -> list[dict]:
    """Ratios ``||T f_n - T 0||_1 / ||f_n||_1`` for ``f_n = n chi_[0, 1/n^4]``.

    ``T(f) = min(f^2, 1/sqrt(w))``. The numerator is ``n^-2`` and the
    denominator ``n^-3``, so the ratio is ``n`` and grows without bound.
    """
    n_values = [int(n) for n in n_values]
    if not n_values or min(n_values) < 1:
        raise ValueError("n_values must be positive integers")
    space = nonlipschitz_space(n_values, grid_size)
    T = inf_f2_invsqrt(space)
    L1 = SpaceSpec.lp(1)
    t0 = T._apply(np.zeros(space.size))
    rows = []
    for n in n_values:
        inside = space.atoms < 1.0 / n**4
        if not inside.any():
            raise GridTooCoarse(f"no atom inside [0, 1/{n}^4]")
        fn_ = MeasurableFn(space, np.where(inside, float(n), 0.0))
        num = bfs_norm(space, L1, MeasurableFn(space, T._apply(fn_.values) - t0))
        den = bfs_norm(space, L1, fn_)
        rows.append({"n": n, "numerator": num, "denominator": den, "ratio": num / den})
    return rows
