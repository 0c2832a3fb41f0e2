"""``latlip`` command line interface.

Exit codes: 0 every check passed, 1 a check failed (the report carries a
witness), 2 the input could not be used.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .errors import ConfigError
from .scenario import (
    EXIT_CONFIG,
    dump_report,
    exit_code,
    load_scenario,
    make_report,
    run_scenario,
    seed_override,
    validate_report,
)
from .suite import CHECKS, paper_suite

# options whose values may start with '-'
_VALUE_OPTIONS = ("--grid",)


def _emit(report: dict, out: Optional[str]):
    validate_report(report)
    text = dump_report(report)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}", path) from None


def _space_of(doc: dict, n: int) -> dict:
    return doc.get("space", {"type": "grid", "n": n})


def cmd_run(args) -> int:
    doc = load_scenario(args.scenario)
    report = run_scenario(doc, timed=not args.no_timing)
    _emit(report, args.out)
    return exit_code(report)


def cmd_paper_suite(args) -> int:
    only = args.only or None
    if only:
        unknown = [o for o in only if o not in CHECKS]
        if unknown:
            raise ConfigError(f"unknown anchor(s) {unknown}; choose from {', '.join(CHECKS)}", "--only")
    seed = seed_override(args.seed)
    raw = paper_suite(seed=seed, only=only, csv_dir=args.csv)
    results = []
    for r in raw["checks"]:
        entry = {"name": r["check"], **{k: v for k, v in r.items() if k != "check"}}
        if not entry["passed"]:
            entry["witness"] = {k: v for k, v in r.items() if k not in ("check", "passed")}
        results.append(entry)
    timing = {} if args.no_timing else raw["timing"]
    report = make_report("paper-suite", seed, results, timing)
    _emit(report, args.out)
    if not args.quiet:
        for r in results:
            print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['name']}", file=sys.stderr)
    return exit_code(report)


def cmd_norm(args) -> int:
    doc = _read_json(args.field)
    field = doc["field"] if "field" in doc else doc
    scenario = {
        "space": _space_of(doc, args.n),
        "field": field,
        "tasks": [{"task": "norm", "p": args.p, "q": args.q, "trials": args.trials}],
    }
    report = run_scenario(scenario, timed=not args.no_timing)
    report["kind"] = "norm"
    _emit(report, args.out)
    return exit_code(report)


def cmd_recover(args) -> int:
    doc = _read_json(args.op)
    op = doc["operator"] if "operator" in doc else doc
    task = {"task": "recover", "grid": args.grid, "tails": args.tails}
    if args.K != "lip_profile":
        task["K"] = json.loads(args.K)
    else:
        task["K"] = "lip_profile"
    scenario = {"space": _space_of(doc, args.n), "operator": op, "tasks": [task]}
    report = run_scenario(scenario, timed=not args.no_timing)
    report["kind"] = "recover"
    _emit(report, args.out)
    return exit_code(report)


def _exponent(text: str):
    if text.lower() in ("inf", "linf"):
        return "inf"
    value = float(text)
    return int(value) if value.is_integer() else value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latlip", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"latlip {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.add_argument("--no-timing", action="store_true", help="omit wall-clock timings")

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("scenario")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("paper-suite", help="run the bundled reproduction checks")
    p.add_argument("--only", action="append", metavar="ANCHOR", help=f"one of: {', '.join(CHECKS)}")
    p.add_argument("--csv", metavar="DIR", help="write convergence tables as CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quiet", action="store_true")
    common(p)
    p.set_defaults(func=cmd_paper_suite)

    p = sub.add_parser("norm", help="Koethe-Bochner and SLL norms of a field")
    p.add_argument("--field", required=True, help="JSON with 'space' and 'field', or a bare field")
    p.add_argument("--p", type=_exponent, default=2)
    p.add_argument("--q", type=_exponent, default=1)
    p.add_argument("--n", type=int, default=64, help="grid size when the file has no space")
    p.add_argument("--trials", type=int, default=8)
    common(p)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("recover", help="rebuild a field from constant responses")
    p.add_argument("--op", required=True, help="JSON with 'space' and 'operator', or a bare operator")
    p.add_argument("--grid", required=True, help="a:step:b")
    p.add_argument("--K", default="lip_profile", help="'lip_profile' or a JSON bound descriptor")
    p.add_argument("--tails", choices=("upper", "lower"), default="upper")
    p.add_argument("--n", type=int, default=64)
    common(p)
    p.set_defaults(func=cmd_recover)
    return parser


def _join_values(argv: Sequence[str]) -> list[str]:
    out = []
    it = iter(argv)
    for a in it:
        if a in _VALUE_OPTIONS:
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = _join_values(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"latlip: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(f"latlip: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
