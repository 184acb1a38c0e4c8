"""Command line entry point: ``tcdirac run | verify | catalog``.

Exit codes: 0 ok, 2 bad config, 3 domain error, 4 numerical failure or a
failed check, 5 unwritable output.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import OutputError, TcdiracError


def _suite_list(text: str):
    return [s.strip() for s in text.split(",") if s.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tcdirac", description="Trajectory-coherent Dirac states toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("--config", required=True, help="scenario JSON file")
    r.add_argument("--out", default="tcdirac_out", help="output directory (default: %(default)s)")
    r.add_argument("--hbar", type=float, default=None, help="override constants.hbar")
    r.add_argument("--order", type=int, choices=(0, 1), default=None, help="wavepacket order")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--reproducible", action="store_true",
                   help="omit wall times so identical inputs give identical bytes")

    v = sub.add_parser("verify", help="run invariant suites")
    v.add_argument("--suite", type=_suite_list, default=None,
                   help="comma separated subset of appendixA,appendixB,germ,coherence,moments,green (default: all)")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--count", type=int, default=200, help="random draws for the appendixA suite")
    v.add_argument("--out", default=None, help="directory for verify.json / verify.csv")
    v.add_argument("--reproducible", action="store_true")

    c = sub.add_parser("catalog", help="list the built-in field models")
    c.add_argument("--out", default=None, help="also write catalog.json here")
    return p


def cmd_run(args) -> int:
    from .config import load_scenario
    from .pipeline import run_scenario

    sc = load_scenario(args.config, hbar=args.hbar, order=args.order, seed=args.seed)
    report = run_scenario(sc, args.out, reproducible=args.reproducible)
    for s in report.stages:
        wt = "" if args.reproducible else f" ({s.wall_time_s:.2f}s)"
        print(f"{s.name:<14s} {s.status}{wt}")
    print(f"wrote {len(report.outputs)} files to {args.out}")
    return 0


def cmd_verify(args) -> int:
    from .io import StagingDir, write_csv, write_json
    from .verify import SUITES, verify_suites

    selection = SUITES if args.suite is None else args.suite
    rows, verdict = verify_suites(selection, seed=args.seed, count=args.count)
    for r in rows:
        mark = "PASS" if r.passed else ("info" if r.passed is None else "FAIL")
        print(f"{mark:4s}  {r.suite:<10s} {r.id:<48s} {r.value:12.4e}  {r.note}")
    print(f"verdict: {'PASS' if verdict else 'FAIL'} ({len(rows)} rows)")
    if args.out:
        report = {"seed": args.seed, "count": args.count, "suites": list(selection), "verdict": verdict,
                  "rows": [r.as_dict() for r in rows]}
        with StagingDir(args.out) as st:
            write_json(st.file("verify.json"), report)
            write_csv(st.file("verify.csv"), ("suite", "id", "value", "tol", "passed"),
                      [[r.suite, r.id, r.value, "" if r.tol is None else r.tol,
                        "" if r.passed is None else int(r.passed)] for r in rows]
                      if rows else [])
    return 0 if verdict else 4


def cmd_catalog(args) -> int:
    from .emfield import builtin_catalog

    entries = builtin_catalog()
    for kind, params, desc in entries:
        print(f"{kind:<18s} params=({', '.join(params)})\n    {desc}")
    if args.out:
        from .io import StagingDir, write_json
        with StagingDir(args.out) as st:
            write_json(st.file("catalog.json"),
                       [{"kind": k, "params": list(p), "description": d} for k, p, d in entries])
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "verify": cmd_verify, "catalog": cmd_catalog}[args.command]
    try:
        return handler(args)
    except TcdiracError as err:
        print(f"error ({type(err).__name__}): {err}", file=sys.stderr)
        return err.exit_code
    except ArithmeticError as err:
        print(f"numerical error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
