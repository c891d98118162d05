"""Command-line entry point.

Subcommands::

    run <config> [--p ...] [--case N] [--element E] [--levels L] [--dim D]
                 [--threads T] [--rhs-mode M] [--no-convection] [--out DIR] [--deep]
    tables <result.json> [--out DIR]
    figure <result.json> [--out DIR] [--vtk]

Exit status is 0 on success, 2 when some ``p`` stopped early (partial
result) and 1 on any error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .experiment import RunResult, emit_figure_data, emit_tables, load_config, run

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2


def _plist(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pnse", description="p-Navier-Stokes convergence studies")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a convergence study from a config file")
    r.add_argument("config")
    r.add_argument("--p", type=_plist, help="comma separated list of p values")
    r.add_argument("--case", type=int, choices=(1, 2))
    r.add_argument("--element")
    r.add_argument("--levels", type=int, help="finest refinement level")
    r.add_argument("--dim", type=int, choices=(2, 3))
    r.add_argument("--threads", type=int)
    r.add_argument("--rhs-mode", choices=("weak", "strong"))
    r.add_argument("--no-convection", action="store_true")
    r.add_argument("--out")
    r.add_argument("--deep", action="store_true", help="allow 3D levels above 3")

    t = sub.add_parser("tables", help="write EOC tables from a result archive")
    t.add_argument("result")
    t.add_argument("--out")

    f = sub.add_parser("figure", help="write A2 diagnostic data from a 3D result archive")
    f.add_argument("result")
    f.add_argument("--out")
    f.add_argument("--vtk", action="store_true")
    return ap


def _overrides(args) -> dict:
    return {
        "p_list": args.p,
        "case": args.case,
        "element": args.element,
        "max_level": args.levels,
        "dim": args.dim,
        "threads": args.threads,
        "rhs_mode": args.rhs_mode,
        "enable_convection": False if args.no_convection else None,
        "output_dir": args.out,
        "deep": True if args.deep else None,
    }


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            cfg = load_config(args.config, _overrides(args))
            result = run(cfg)
            print(f"wrote {cfg.output_dir}/result.json (config {cfg.config_hash()})")
            return EXIT_PARTIAL if result.partial else EXIT_OK
        result = RunResult.load(args.result)
        if args.command == "tables":
            paths = emit_tables(result, args.out)
        else:
            paths = emit_figure_data(result, args.out, vtk=args.vtk)
        for p in paths:
            print(p)
        return EXIT_PARTIAL if result.partial else EXIT_OK
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
