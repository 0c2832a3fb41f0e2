"""Bundled reproduction suite for the worked examples and identities.

Every check is a function ``check_<name>(rng) -> dict`` returning a
``passed`` flag plus the measured quantities. :func:`paper_suite` runs a
selection of them and assembles a report.
"""

from __future__ import annotations

import csv
import time
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .free_space import Molecule, delta, free_norm, free_norm_oracle
from .function_space import MeasurableFn, SpaceSpec, bfs_norm
from .lip_field import (
    LipField,
    binary_digit_field,
    dyadic_preimage,
    kb_norm,
    lip_profile,
    running_inf_profiles,
    sll_norm,
    truncate_field,
)
from .lipschitz import PwLinear, dist_set_fn, pl_add, pl_scale, pl_sub
from .measure_space import DiscreteMeasureSpace, interval_contains, make_space, unit_grid
from .multiplier import MultiplierSpec, extremizer, mult_apply, mult_norm, mult_norm_oracle, operator_ratio
from .superposition import (
    FieldOp,
    SamplerConfig,
    SimpleTensor,
    apply,
    check_lattice_lipschitz,
    inf_f2_invsqrt,
    linear_diag_detect,
    nonlipschitz_demo,
    nonlipschitz_space,
    recover_field,
    tensor_apply,
    tensor_canonicalize,
)

__all__ = ["CHECKS", "paper_suite", "random_pl", "random_pl_field", "pl_sup_distance"]

EPS = np.finfo(float).eps


# ----------------------------------------------------------------------------
# random generators shared with the tests


def random_pl(rng: np.random.Generator, span: float = 2.0, max_breaks: int = 6, max_slope: float = 3.0) -> PwLinear:
    """Random piecewise linear function vanishing at 0."""
    k = int(rng.integers(1, max_breaks + 1))
    xs = np.unique(rng.uniform(-span, span, k))
    slopes = rng.uniform(-max_slope, max_slope, xs.size + 1)
    ys = np.concatenate(([0.0], np.cumsum(slopes[1:-1] * np.diff(xs))))
    phi = PwLinear(xs, ys, slopes[0], slopes[-1])
    return phi.shifted(-phi(0.0))


def random_pl_field(rng: np.random.Generator, space: DiscreteMeasureSpace, **kw) -> LipField:
    return LipField(space, [random_pl(rng, **kw) for _ in range(space.size)])


def pl_sup_distance(a: PwLinear, b: PwLinear, lo: float, hi: float) -> float:
    """Exact ``sup_{[lo, hi]} |a - b|``: the difference is linear between breakpoints."""
    xs = np.union1d(a.xs, b.xs)
    xs = np.concatenate(([lo, hi], xs[(xs > lo) & (xs < hi)]))
    return float(np.max(np.abs(a(xs) - b(xs))))


def _random_subset(rng, top=20) -> frozenset:
    return frozenset(int(i) for i in np.flatnonzero(rng.random(top) < 0.5) + 1)


# ----------------------------------------------------------------------------
# checks


def check_multiplier(rng, n_h: int = 100, n_atoms: int = 64) -> dict:
    space = unit_grid(n_atoms)
    specs = [(2, 1), (3, 1.5), (2, 2)]
    oracle_gap = 0.0
    extremal_gap = 0.0
    for _ in range(n_h):
        h = MeasurableFn(space, rng.normal(size=n_atoms) * rng.uniform(0.1, 5.0))
        for p, q in specs:
            spec = MultiplierSpec(p, q)
            exact = mult_norm(space, h, spec)
            oracle = mult_norm_oracle(space, h, spec, trials=8, seed=int(rng.integers(2**31)))
            oracle_gap = max(oracle_gap, abs(exact - oracle))
            fstar = extremizer(space, h, spec)
            extremal_gap = max(extremal_gap, abs(operator_ratio(space, h, fstar, spec) - exact))
    return {
        "passed": oracle_gap <= 1e-4 and extremal_gap <= 1e-10,
        "max_oracle_gap": oracle_gap,
        "max_extremizer_gap": extremal_gap,
        "cases": n_h * len(specs),
    }


def check_free_isometry(rng, n_pairs: int = 1000, n_molecules: int = 200) -> dict:
    iso_err = 0.0
    for _ in range(n_pairs):
        x, y = rng.uniform(-10, 10, 2)
        iso_err = max(iso_err, abs(free_norm(delta(x) - delta(y)) - abs(x - y)))
    oracle_err = 0.0
    for _ in range(n_molecules):
        k = int(rng.integers(1, 9))
        m = Molecule(rng.uniform(-5, 5, k), rng.normal(size=k))
        oracle_err = max(oracle_err, abs(free_norm(m) - free_norm_oracle(m)))
    return {
        "passed": iso_err <= 1e-12 and oracle_err <= 1e-12,
        "max_isometry_error": iso_err,
        "max_oracle_error": oracle_err,
    }


def check_separation_family(rng, n_pairs: int = 100) -> dict:
    grid = np.arange(-64, 21 * 64 + 1) / 64.0
    lips = []
    min_sup = np.inf
    for _ in range(n_pairs):
        S = _random_subset(rng)
        D = _random_subset(rng)
        while D == S:
            D = _random_subset(rng)
        diff = pl_sub(dist_set_fn(S, 0.25), dist_set_fn(D, 0.25))
        lips.append(diff.lip)
        min_sup = min(min_sup, float(np.max(np.abs(diff(grid)))))
    exact = all(l == 1.0 for l in lips)
    return {
        "passed": exact and min_sup >= 0.25 - 1e-12,
        "all_lip_exactly_one": exact,
        "min_grid_sup": min_sup,
    }


def check_dyadic_preimage(rng, n_samples: int = 10_000, depth: int = 30) -> dict:
    w = rng.random(n_samples)
    space = DiscreteMeasureSpace(w, np.full(n_samples, 1.0 / n_samples))
    field = binary_digit_field(space, depth)
    mismatches = 0
    table = []
    for lam in (1.0, 2.05, 3.3):
        values = field.evaluate_at(lam)
        for s in (0.05, 0.1, 0.2):
            pre = dyadic_preimage(lam, s, depth)
            direct = values < s
            bad = int(np.sum(interval_contains(pre, w) != direct))
            mismatches += bad
            table.append({"lambda": lam, "s": s, "intervals": len(pre), "mismatches": bad})
    return {"passed": mismatches == 0, "mismatches": mismatches, "cases": table}


def check_non_lipschitz(rng, n_values: Sequence[int] = (2, 3, 4, 5), samples: int = 200) -> dict:
    rows = nonlipschitz_demo(list(n_values))
    close = all(abs(r["ratio"] - r["n"]) <= 0.05 * r["n"] for r in rows)
    ratios = [r["ratio"] for r in rows]
    increasing = all(a < b for a, b in zip(ratios, ratios[1:]))
    space = nonlipschitz_space(list(n_values))
    T = inf_f2_invsqrt(space)
    K = MeasurableFn(space, 2.0 / np.sqrt(space.atoms))
    rep = check_lattice_lipschitz(T, K, SamplerConfig(samples=samples, seed=int(rng.integers(2**31)), scale=3.0))
    return {
        "passed": close and increasing and rep.passed,
        "ratios": rows,
        "strictly_increasing": increasing,
        "verify": {"passed": rep.passed, "worst_margin": rep.worst_margin, "samples_used": rep.samples_used},
    }


def check_diagonal(rng, n_each: int = 100) -> dict:
    wrong = 0
    for _ in range(n_each):
        n = int(rng.integers(2, 17))
        d = rng.normal(size=n)
        A = np.diag(d)
        dec = linear_diag_detect(A)
        f = rng.normal(size=n)
        space = make_space(np.ones(n))
        ok = (
            dec.is_diagonal
            and np.array_equal(dec.h, A @ np.ones(n))
            and np.array_equal(dec.h, d)
            and np.array_equal(mult_apply(MeasurableFn(space, dec.h), MeasurableFn(space, f)).values, A @ f)
        )
        wrong += not ok
    for _ in range(n_each):
        n = int(rng.integers(2, 17))
        A = np.diag(rng.normal(size=n))
        if rng.random() < 0.5:
            i, j = rng.choice(n, 2, replace=False)
            A[i, j] = rng.choice([-1, 1]) * 10 ** rng.uniform(-6, 0)
        else:
            A = A + rng.normal(size=(n, n))
            i, j = rng.choice(n, 2, replace=False)
            A[i, j] = 1e-6
        dec = linear_diag_detect(A)
        ok = not dec.is_diagonal and dec.witness is not None
        if ok:
            wi, wj = dec.witness["atom"], dec.witness["basis_vector"]
            # e_j vanishes at atom i yet (A e_j)(i) does not
            ok = wi != wj and A[wi, wj] != 0
        wrong += not ok
    return {"passed": wrong == 0, "misclassified": wrong, "cases": 2 * n_each}


def check_recovery(rng, n_fields: int = 20, deltas=(0.2, 0.1, 0.05), span: float = 2.0) -> dict:
    worst_ratio = 0.0
    grid_err = 0.0
    rows = []
    for delta_ in deltas:
        k = int(round(span / delta_))
        grid = np.arange(-k, k + 1) * delta_
        max_err = 0.0
        for _ in range(n_fields):
            space = unit_grid(int(rng.integers(2, 9)))
            phi = random_pl_field(rng, space, span=span)
            K = lip_profile(phi)
            rec = recover_field(FieldOp(phi), grid, K)
            for i in range(space.size):
                err = pl_sup_distance(rec[i], phi[i], grid[0], grid[-1])
                max_err = max(max_err, err)
                bound = K.values[i] * delta_
                worst_ratio = max(worst_ratio, err / bound if bound > 0 else (np.inf if err > 0 else 0.0))
                grid_err = max(grid_err, float(np.max(np.abs(rec[i](grid) - phi[i](grid)))))
        rows.append({"delta": delta_, "max_error": max_err})
    return {
        "passed": worst_ratio <= 1.0 and grid_err == 0.0,
        "max_error_over_bound": worst_ratio,
        "max_grid_error": grid_err,
        "convergence": rows,
    }


def _perturbed_sequence(rng, phi: LipField, length: int) -> list[LipField]:
    seq = []
    for k in range(1, length + 1):
        eps = 2.0**-k
        fns = [pl_add(phi[i], pl_scale(random_pl(rng), eps)) for i in range(phi.space.size)]
        seq.append(LipField(phi.space, fns))
    return seq


def check_truncation(rng, n_sequences: int = 20, length: int = 48) -> dict:
    specs = [SpaceSpec.lp(1), SpaceSpec.lp(2), SpaceSpec.linf()]
    mult_specs = [(2, 1), (3, 1.5), (2, 2)]
    profile_exact = True
    monotone = True
    sll_ok = True
    recovery_gap = 0.0
    for _ in range(n_sequences):
        space = unit_grid(int(rng.integers(2, 9)))
        phi = random_pl_field(rng, space)
        seq = _perturbed_sequence(rng, phi, length)
        for pk in seq:
            psi = truncate_field(phi, pk)
            want = np.minimum(lip_profile(phi).values, lip_profile(pk).values)
            profile_exact &= np.array_equal(lip_profile(psi).values, want)
            for p, q in mult_specs:
                sll_ok &= sll_norm(psi, p, q) <= sll_norm(phi, p, q)
        taus = running_inf_profiles(phi, seq)
        for spec in specs:
            norms = [bfs_norm(space, spec, t) for t in taus]
            monotone &= all(a <= b for a, b in zip(norms, norms[1:]))
            recovery_gap = max(recovery_gap, abs(max(norms) - kb_norm(phi, spec)))
        for a, b in zip(taus, taus[1:]):
            monotone &= bool(np.all(a.values <= b.values))
    return {
        "passed": bool(profile_exact and monotone and sll_ok and recovery_gap <= 1e-9),
        "profile_is_pointwise_min": bool(profile_exact),
        "running_inf_nondecreasing": bool(monotone),
        "sll_truncation_bounded": bool(sll_ok),
        "max_norm_recovery_gap": recovery_gap,
    }


def random_indicator_tensor(rng, space: DiscreteMeasureSpace, disjoint: bool = True) -> SimpleTensor:
    n = space.size
    k = int(rng.integers(0, 5))
    if disjoint:
        labels = rng.integers(-1, k, n) if k else np.full(n, -1)
        blocks = [np.flatnonzero(labels == b) for b in range(k)]
    else:
        blocks = [np.flatnonzero(rng.random(n) < 0.5) for _ in range(k)]
    terms = []
    for atoms in blocks:
        h = np.zeros(n)
        h[atoms] = 1.0
        terms.append((random_pl(rng), MeasurableFn(space, h)))
    return SimpleTensor(terms, space)


def check_tensor(rng, n_tensors: int = 1000) -> dict:
    max_dev = 0.0
    norm_gap = 0.0
    for _ in range(n_tensors):
        space = unit_grid(int(rng.integers(1, 17)))
        t = random_indicator_tensor(rng, space)
        canon = tensor_canonicalize(t)
        f = MeasurableFn(space, rng.uniform(-3, 3, space.size))
        a = tensor_apply(t, f).values
        b = apply(FieldOp(canon), f).values
        max_dev = max(max_dev, float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a)))))
        lips = lip_profile(canon).values
        direct = float(np.sum(lips**2 * space.weights) ** 0.5)
        norm_gap = max(norm_gap, abs(sll_norm(canon, 2, 1) - direct))
    return {
        "passed": max_dev <= EPS and norm_gap <= 1e-12,
        "max_relative_deviation": max_dev,
        "max_sll_norm_gap": norm_gap,
    }


CHECKS: dict[str, Callable] = {
    "multiplier": check_multiplier,
    "free-isometry": check_free_isometry,
    "separation-family": check_separation_family,
    "dyadic-preimage": check_dyadic_preimage,
    "non-lipschitz": check_non_lipschitz,
    "diagonal": check_diagonal,
    "recovery": check_recovery,
    "truncation": check_truncation,
    "tensor": check_tensor,
}


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def paper_suite(seed: int = 0, only: Optional[Sequence[str]] = None, csv_dir: Optional[str] = None) -> dict:
    """Run the bundled checks; returns a report dict (``status`` pass/fail)."""
    names = list(CHECKS) if not only else list(only)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown check(s) {unknown}; choose from {sorted(CHECKS)}")
    seeds = np.random.SeedSequence(seed).spawn(len(CHECKS))
    seed_of = dict(zip(CHECKS, seeds))
    results = []
    timing = {}
    for name in names:
        t0 = time.perf_counter()
        out = CHECKS[name](np.random.default_rng(seed_of[name]))
        timing[name] = time.perf_counter() - t0
        results.append({"check": name, **_jsonable(out)})
    if csv_dir is not None:
        write_csvs(results, csv_dir)
    return {
        "seed": seed,
        "status": "pass" if all(r["passed"] for r in results) else "fail",
        "checks": results,
        "timing": timing,
    }


def write_csvs(results: list[dict], csv_dir) -> list[Path]:
    out = Path(csv_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    by_name = {r["check"]: r for r in results}
    if "recovery" in by_name:
        path = out / "recovery_error_vs_delta.csv"
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["delta", "max_error"])
            for row in by_name["recovery"]["convergence"]:
                wr.writerow([row["delta"], repr(row["max_error"])])
        written.append(path)
    if "non-lipschitz" in by_name:
        path = out / "nonlipschitz_ratio_vs_n.csv"
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["n", "numerator", "denominator", "ratio"])
            for row in by_name["non-lipschitz"]["ratios"]:
                wr.writerow([row["n"], repr(row["numerator"]), repr(row["denominator"]), repr(row["ratio"])])
        written.append(path)
    return written
