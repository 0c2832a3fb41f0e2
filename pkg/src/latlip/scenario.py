"""Scenario files: parsing descriptors, running tasks, assembling reports."""

from __future__ import annotations

import hashlib
import json
import os
import time
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np

from . import __version__
from .errors import ConfigError, LatlipError
from .free_space import delta, weak_probe
from .function_space import MeasurableFn, SpaceSpec
from .lip_field import (
    LipField,
    binary_digit_field,
    constant_field,
    kb_norm,
    lip_profile,
    per_atom_field,
    simple_field,
)
from .lipschitz import PwLinear, dist_set_fn, identity, inv_one_plus_abs, linear, zero
from .measure_space import DiscreteMeasureSpace, make_space, partition_grid, unit_grid
from .multiplier import MultiplierSpec, mult_norm, mult_norm_oracle
from .superposition import (
    FieldOp,
    MatrixOp,
    SamplerConfig,
    SimpleTensor,
    SuperOp,
    apply,
    best_bound_estimate,
    check_lattice_lipschitz,
    disjointness_check,
    inf_f2_invsqrt,
    linear_diag_detect,
    nonlipschitz_demo,
    recover_field,
    tensor_apply,
    tensor_canonicalize,
)

SCENARIO_SCHEMA_ID = "latlip/scenario-v1"
REPORT_SCHEMA_ID = "latlip/report-v1"
ORACLE_GAP = 1e-4

EXIT_PASS = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2


def load_schema(name: str) -> dict:
    text = resources.files("latlip").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _validate(doc: Any, schema_name: str):
    schema = load_schema(schema_name)
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/" + "/".join(str(p) for p in e.absolute_path)
        raise ConfigError(e.message, where)


def validate_report(report: dict):
    _validate(report, "report")


# ----------------------------------------------------------------------------
# descriptors


def parse_space(desc: dict) -> DiscreteMeasureSpace:
    kind = desc.get("type")
    if kind == "grid":
        return unit_grid(int(desc["n"]))
    if kind == "atoms":
        return make_space(desc["weights"])
    if kind == "partition":
        return partition_grid(desc["edges"])
    raise ConfigError(f"unknown space type {kind!r}", "space/type")


def parse_spacespec(desc: Optional[dict], default: SpaceSpec) -> SpaceSpec:
    if desc is None:
        return default
    if desc.get("kind") == "Linf":
        return SpaceSpec.linf()
    return SpaceSpec.lp(desc["p"])


def parse_scalar(desc: dict, where: str = "fn"):
    kind = desc.get("type")
    if kind == "pl":
        pts = desc["points"]
        xs = [p[0] for p in pts]
        if len(set(xs)) != len(xs):
            raise ConfigError("duplicate x in points", where)
        return PwLinear.from_points(pts, desc.get("left_slope", 0.0), desc.get("right_slope", 0.0))
    if kind == "dist_set":
        return dist_set_fn(desc["S"], desc.get("cap", 0.25))
    if kind == "inv_one_plus_abs":
        return inv_one_plus_abs()
    if kind == "identity":
        return identity()
    if kind == "scale":
        return linear(desc["c"])
    if kind == "zero":
        return zero()
    raise ConfigError(f"unknown scalar function type {kind!r}", where)


def parse_field(desc: dict, space: DiscreteMeasureSpace, where: str = "field") -> LipField:
    kind = desc.get("type")
    affine = bool(desc.get("affine", False))
    try:
        if kind == "constant":
            return constant_field(space, parse_scalar(desc["fn"], f"{where}/fn"), affine=affine)
        if kind == "simple":
            blocks = [
                (b["atoms"], parse_scalar(b["fn"], f"{where}/blocks/{i}/fn"))
                for i, b in enumerate(desc["blocks"])
            ]
            return simple_field(space, blocks, affine=affine)
        if kind == "binary_digit":
            return binary_digit_field(space, int(desc.get("depth", 30)))
        if kind == "per_atom":
            fns = [parse_scalar(d, f"{where}/fns/{i}") for i, d in enumerate(desc["fns"])]
            return per_atom_field(space, fns, affine=affine)
    except ConfigError:
        raise
    except (LatlipError, ValueError, IndexError, KeyError) as exc:
        raise ConfigError(str(exc), where) from exc
    raise ConfigError(f"unknown field type {kind!r}", where)


def parse_operator(desc: dict, space: DiscreteMeasureSpace, where: str = "operator") -> SuperOp:
    kind = desc.get("type")
    try:
        if kind == "field":
            return FieldOp(parse_field(desc["field"], space, f"{where}/field"))
        if kind == "matrix":
            return MatrixOp(space, desc["rows"])
        if kind == "builtin" and desc.get("name") == "inf_f2_invsqrt":
            return inf_f2_invsqrt(space)
    except ConfigError:
        raise
    except (LatlipError, ValueError) as exc:
        raise ConfigError(str(exc), where) from exc
    raise ConfigError(f"unknown operator descriptor {desc!r}", where)


def parse_bound(desc, op: SuperOp, where: str) -> MeasurableFn:
    space = op.space
    if desc == "lip_profile" or (isinstance(desc, dict) and desc.get("type") == "lip_profile"):
        if not isinstance(op, FieldOp):
            raise ConfigError("lip_profile needs a field operator", where)
        scale = desc.get("scale", 1.0) if isinstance(desc, dict) else 1.0
        return lip_profile(op.field) * float(scale)
    kind = desc.get("type")
    if kind == "values":
        vals = desc["values"]
        if len(vals) != space.size:
            raise ConfigError(f"{len(vals)} values for {space.size} atoms", where)
        return MeasurableFn(space, vals)
    if kind == "constant":
        return MeasurableFn(space, np.full(space.size, float(desc["c"])))
    if kind == "power":
        # c * w^exponent in the atom coordinates
        if np.any(space.atoms <= 0):
            raise ConfigError("power bound needs positive atom coordinates", where)
        return MeasurableFn(space, float(desc.get("c", 1.0)) * space.atoms ** float(desc["exponent"]))
    raise ConfigError(f"unknown bound descriptor {desc!r}", where)


def parse_grid(desc, where: str = "grid") -> np.ndarray:
    """``"a:step:b"`` (inclusive, exact multiples of step) or an explicit list."""
    if isinstance(desc, str):
        try:
            a, step, b = (float(x) for x in desc.split(":"))
        except ValueError:
            raise ConfigError(f"bad grid {desc!r}; expected a:step:b", where) from None
        if step <= 0 or b < a:
            raise ConfigError(f"bad grid {desc!r}", where)
        lo = int(round(a / step)) if abs(a / step - round(a / step)) < 1e-9 else None
        hi = int(round(b / step)) if abs(b / step - round(b / step)) < 1e-9 else None
        if lo is not None and hi is not None:
            return np.arange(lo, hi + 1) * step
        k = int(np.floor((b - a) / step + 1e-9))
        return a + np.arange(k + 1) * step
    return np.asarray(desc, dtype=float)


# ----------------------------------------------------------------------------
# tasks


def _field_of(op: SuperOp, where: str) -> LipField:
    if not isinstance(op, FieldOp):
        raise ConfigError("this task needs a field operator", where)
    return op.field


def _exp(x, default: SpaceSpec) -> SpaceSpec:
    return default if x is None else SpaceSpec.from_exponent(x)


def task_verify(t, op, ctx, where):
    K = parse_bound(t["K"], op, f"{where}/K")
    cfg = SamplerConfig(samples=int(t.get("samples", 200)), seed=ctx["seed"], scale=t.get("scale"))
    rep = check_lattice_lipschitz(op, K, cfg, float(t.get("tol", ctx["tol"])))
    return rep.to_json()


def task_norm(t, op, ctx, where):
    field = _field_of(op, where)
    p = _exp(t.get("p"), ctx["domain"])
    q = _exp(t.get("q"), ctx["codomain"])
    spec = MultiplierSpec(p, q)
    prof = lip_profile(field)
    oracle = mult_norm_oracle(field.space, prof, spec, trials=int(t.get("trials", 8)), seed=ctx["seed"])
    out = {
        "p": spec.to_json()["p"],
        "q": spec.to_json()["q"],
        "kb_norm_domain": kb_norm(field, p),
        "lip_profile_max": float(prof.values.max()),
        "oracle_norm": oracle,
        "affine_shifted": field.affine_shifted,
    }
    if spec.ordered:
        exact = mult_norm(field.space, prof, spec)
        out.update(r=spec.to_json()["r"], sll_norm=exact, gap=abs(exact - oracle))
        out["passed"] = bool(abs(exact - oracle) <= ORACLE_GAP)
        if not out["passed"]:
            out["witness"] = {"sll_norm": exact, "oracle_norm": oracle}
    else:
        out.update(r=None, sll_norm=None, passed=True, note="q > p: only the search bound applies")
    return out


def task_recover(t, op, ctx, where):
    grid = parse_grid(t["grid"], f"{where}/grid")
    if "K" in t:
        K = parse_bound(t["K"], op, f"{where}/K")
    else:
        K = parse_bound("lip_profile", op, f"{where}/K")
    tails = t.get("tails", "upper")
    try:
        rec = recover_field(op, grid, K, tails=tails, tol=ctx["tol"])
    except LatlipError as exc:
        return {"passed": False, "witness": {"error": type(exc).__name__, "message": str(exc)}}
    lam = np.unique(grid)
    # the rebuilt field must reproduce every constant response exactly
    probe_dev = 0.0
    for x in lam:
        probe = weak_probe(rec, delta(x)).values
        probe_dev = max(probe_dev, float(np.max(np.abs(probe - op._apply(np.full(op.space.size, x))))))
    lips = lip_profile(rec).values
    lip_ok = bool(np.all(lips <= K.values * (1 + 1e-9) + 1e-12))
    out = {
        "grid_points": int(lam.size),
        "hull": [float(lam[0]), float(lam[-1])],
        "tails": tails,
        "extension": f"{tails} McShane outside the hull, linear interpolation inside",
        "max_probe_deviation": probe_dev,
        "recovered_lip_profile": lips.tolist(),
        "lip_within_K": lip_ok,
    }
    if isinstance(op, FieldOp):
        from .suite import pl_sup_distance

        field = op.field.to_pl((float(lam[0]), float(lam[-1])), 4096)
        spacing = float(np.max(np.diff(lam)))
        errs = [pl_sup_distance(rec[i], field[i], lam[0], lam[-1]) for i in range(op.space.size)]
        out["max_hull_error"] = float(max(errs))
        out["error_bound"] = float(np.max(K.values) * spacing)
    out["passed"] = bool(probe_dev == 0.0 and lip_ok)
    if not out["passed"]:
        out["witness"] = {"max_probe_deviation": probe_dev, "lip_within_K": lip_ok}
    return out


def task_bound(t, op, ctx, where):
    grid = parse_grid(t["grid"], f"{where}/grid")
    est = best_bound_estimate(op, grid)
    out = {"estimate": est.values.tolist(), "passed": True}
    if isinstance(op, FieldOp):
        prof = lip_profile(op.field).values
        out["lip_profile"] = prof.tolist()
        out["max_deficit"] = float(np.max(prof - est.values))
        # constant probes can never exceed the true bound function
        excess = float(np.max(est.values - prof))
        out["passed"] = bool(excess <= 1e-9)
        if not out["passed"]:
            out["witness"] = {"atom": int(np.argmax(est.values - prof)), "excess": excess}
    return out


def task_tensor(t, op, ctx, where):
    space = op.space
    terms = []
    for i, term in enumerate(t["terms"]):
        h = np.zeros(space.size)
        atoms = term["atoms"]
        if any(a >= space.size for a in atoms):
            raise ConfigError("atom index out of range", f"{where}/terms/{i}/atoms")
        h[atoms] = 1.0
        terms.append((parse_scalar(term["fn"], f"{where}/terms/{i}/fn"), MeasurableFn(space, h)))
    tensor = SimpleTensor(terms, space)
    canon = tensor_canonicalize(tensor)
    rng = np.random.default_rng(ctx["seed"])
    dev = 0.0
    worst = None
    for _ in range(int(t.get("samples", 100))):
        f = MeasurableFn(space, rng.uniform(-3, 3, space.size))
        a = tensor_apply(tensor, f).values
        b = apply(FieldOp(canon), f).values
        d = float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a))))
        if d > dev:
            dev, worst = d, f.values.tolist()
    p = _exp(t.get("p"), ctx["domain"])
    q = _exp(t.get("q"), ctx["codomain"])
    spec = MultiplierSpec(p, q)
    out = {
        "cells": len(set(canon.index.tolist())),
        "max_relative_deviation": dev,
        "sll_norm": mult_norm(space, lip_profile(canon), spec) if spec.ordered else None,
        "passed": dev <= 4 * np.finfo(float).eps,
    }
    if not out["passed"]:
        out["witness"] = {"f": worst, "deviation": dev}
    return out


def task_demo(t, op, ctx, where):
    rows = nonlipschitz_demo(t.get("n", [2, 3, 4, 5]), t.get("grid_size"))
    ratios = [r["ratio"] for r in rows]
    close = all(abs(r["ratio"] - r["n"]) <= 0.05 * r["n"] for r in rows)
    inc = all(a < b for a, b in zip(ratios, ratios[1:]))
    out = {"ratios": rows, "strictly_increasing": inc, "passed": bool(close and inc)}
    if not out["passed"]:
        out["witness"] = {"ratios": rows}
    return out


def task_disjointness(t, op, ctx, where):
    space = op.space
    rng = np.random.default_rng(ctx["seed"])
    vals = t.get("f")
    f = MeasurableFn(space, vals if vals is not None else rng.uniform(-2, 2, space.size))
    try:
        rep = disjointness_check(op, f, t["A"], t["B"], tol=float(t.get("tol", ctx["tol"])))
    except LatlipError as exc:
        return {"passed": False, "witness": {"error": type(exc).__name__, "message": str(exc)}}
    return rep.to_json()


def task_diag(t, op, ctx, where):
    if not isinstance(op, MatrixOp):
        raise ConfigError("diag needs a matrix operator", where)
    dec = linear_diag_detect(op.matrix)
    out = dec.to_json()
    expect = t.get("expect")
    out["passed"] = expect is None or expect == dec.kind
    if not out["passed"]:
        out["witness"] = dec.witness or {"h": out.get("h")}
    return out


TASKS = {
    "verify": task_verify,
    "norm": task_norm,
    "recover": task_recover,
    "bound": task_bound,
    "tensor": task_tensor,
    "demo": task_demo,
    "disjointness": task_disjointness,
    "diag": task_diag,
}


# ----------------------------------------------------------------------------
# reports


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not np.isfinite(x):
            return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
        return x
    return x


def make_report(kind: str, seed: int, results: list[dict], timing: dict, scenario_hash=None) -> dict:
    results = _clean(results)
    body = {
        "$schema": REPORT_SCHEMA_ID,
        "tool": {"name": "latlip", "version": __version__},
        "kind": kind,
        "seed": int(seed),
        "scenario_hash": scenario_hash,
        "status": "pass" if all(r["passed"] for r in results) else "fail",
        "results": results,
    }
    body["report_hash"] = hashlib.sha256(canonical_json(body).encode()).hexdigest()
    body["timing"] = {k: float(v) for k, v in timing.items()}
    return body


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def seed_override(seed: int) -> int:
    env = os.environ.get("LATLIP_SEED")
    if env is None or env == "":
        return seed
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"LATLIP_SEED must be an integer, got {env!r}") from None


def load_scenario(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}", str(path)) from None
    _validate(doc, "scenario")
    return doc


def run_scenario(doc: dict, timed: bool = True) -> dict:
    """Execute a validated scenario document and return its report."""
    _validate(doc, "scenario")
    seed = seed_override(int(doc.get("seed", 0)))
    space = parse_space(doc["space"])
    if "operator" in doc and "field" in doc:
        raise ConfigError("give either 'operator' or 'field', not both")
    if "operator" in doc:
        op = parse_operator(doc["operator"], space)
    elif "field" in doc:
        op = FieldOp(parse_field(doc["field"], space))
    else:
        op = FieldOp(constant_field(space, identity()))
    tol = float(doc.get("tolerances", {}).get("tol", 1e-9))
    domain = parse_spacespec(doc.get("domain"), SpaceSpec.lp(1))
    codomain = parse_spacespec(doc.get("codomain"), domain)
    tasks = doc["tasks"]
    task_seeds = np.random.SeedSequence(seed).spawn(len(tasks))
    results, timing = [], {}
    for i, (t, ss) in enumerate(zip(tasks, task_seeds)):
        where = f"tasks/{i}"
        ctx = {"seed": int(ss.generate_state(1)[0]), "tol": tol, "domain": domain, "codomain": codomain}
        t0 = time.perf_counter()
        out = TASKS[t["task"]](t, op, ctx, where)
        name = f"{i}:{t['task']}"
        timing[name] = time.perf_counter() - t0 if timed else 0.0
        results.append({"name": name, **out})
    return make_report("scenario", seed, results, timing, scenario_hash(doc))


def scenario_hash(doc: dict) -> str:
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


def exit_code(report: dict) -> int:
    return EXIT_PASS if report["status"] == "pass" else EXIT_VIOLATION
