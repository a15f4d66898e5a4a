"""Command-line front end.

Subcommands:
    run <config> [--out results.csv] [--workers N]   Monte-Carlo batch -> CSV
    ctime <config> [--out ctime.csv]                 characteristic-time report -> CSV
    validate <config>                                parse + validate only

Exit codes: 0 success, 2 config/validation error, 3 solver non-convergence,
4 I/O error.  The environment variable MEDIATOR_BAI_BASE_SEED overrides the
config's base seed (logged when applied).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness import (
    ConfigError,
    bundled_config_path,
    characteristic_time_report,
    parse_config,
    run_experiment,
    write_csv,
    write_ctime_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _resolve_config(arg: str) -> Path:
    p = Path(arg)
    if p.exists():
        return p
    try:
        bundled = bundled_config_path(arg)
        if bundled.exists():
            return bundled
    except (FileNotFoundError, ModuleNotFoundError):
        pass
    return p  # let parse_config produce the diagnostic


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mediator-bai",
        description="Best-arm identification under mediators' feedback: "
        "experiments and characteristic-time reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the Monte-Carlo experiment of a config")
    p_run.add_argument("config", help="config file path or bundled name (table1.cfg, table2.cfg)")
    p_run.add_argument("--out", default="results.csv", help="output CSV path")
    p_run.add_argument("--workers", type=int, default=1, help="parallel trial workers")

    p_ct = sub.add_parser("ctime", help="characteristic times, oracle weights, lower bounds")
    p_ct.add_argument("config", help="config file path or bundled name")
    p_ct.add_argument("--out", default="ctime.csv", help="output CSV path")

    p_val = sub.add_parser("validate", help="parse and validate a config")
    p_val.add_argument("config", help="config file path or bundled name")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(_resolve_config(args.config))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        model = cfg.model()
        print(
            f"ok: {model.n_arms} arms ({cfg.family.value}), "
            f"{cfg.mediators().n_mediators} mediators, "
            f"{len(cfg.algorithms)} algorithms x {len(cfg.deltas)} deltas x {cfg.runs} runs"
        )
        return EXIT_OK

    if args.command == "run":
        rows = run_experiment(cfg, workers=args.workers)
        try:
            write_csv(rows, args.out)
        except OSError as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"wrote {len(rows)} rows to {args.out}")
        return EXIT_OK

    if args.command == "ctime":
        rows = characteristic_time_report(cfg)
        try:
            write_ctime_csv(rows, args.out)
        except OSError as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"wrote {len(rows)} rows to {args.out}")
        if rows and not rows[0].solution.converged:
            print(
                f"solver did not converge: gap {rows[0].solution.solver_gap:g} "
                f"exceeds tol {cfg.solver_tol:g}",
                file=sys.stderr,
            )
            return EXIT_SOLVER
        return EXIT_OK

    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
