# Command line front end.
#
#   dregsim run      --config FILE [--out DIR] [--threads K] [--seed U64]
#   dregsim bounds   --config FILE          (bound table, no simulation)
#   dregsim validate --config FILE          (parse and check only)
#
# Exit codes: 0 success, 1 configuration error, 2 runtime/divergence error.
# DREGSIM_THREADS is the fallback for --threads.

from __future__ import annotations

import argparse
import os
import sys

from ..sgd import DivergenceError
from .config import ConfigError, config_help, parse_config, with_overrides
from .output import emit_outputs
from .runner import run_bounds_overlay, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dregsim",
        description="One-shot distributed SGD / ridge regression experiments.",
        epilog=config_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment and write CSV/plots",
                           epilog=config_help(),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
    run_p.add_argument("--config", required=True, help="experiment config file")
    run_p.add_argument("--out", help="output directory (overrides out_dir)")
    run_p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: DREGSIM_THREADS or 1)")
    run_p.add_argument("--seed", type=int, default=None,
                       help="master seed (overrides the config)")

    bounds_p = sub.add_parser("bounds", help="print the bound table for a config")
    bounds_p.add_argument("--config", required=True)
    bounds_p.add_argument("--seed", type=int, default=None)

    val_p = sub.add_parser("validate", help="parse and validate a config file")
    val_p.add_argument("--config", required=True)
    return parser


def _resolve_threads(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get("DREGSIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            print(f"dregsim: ignoring non-integer DREGSIM_THREADS={env!r}",
                  file=sys.stderr)
    return 1


def _print_bounds_table(cfg) -> None:
    from dataclasses import replace
    table_cfg = cfg if cfg.kind == "bounds_overlay" else replace(cfg, kind="bounds_overlay")
    try:
        rows = run_bounds_overlay(table_cfg)
    except ValueError as err:
        raise ConfigError("kind", f"cannot build a bound table: {err}") from None
    header = f"{'alpha':>8} {'beta':>6} {'M':>6} {'gamma':>12} {'k_star':>7} {'upper':>14} {'lower':>14}"
    print(header)
    for row in rows:
        beta = f"{row.beta:.3g}" if row.beta is not None else "-"
        upper = f"{row.upper_bound:.6g}" if row.upper_bound is not None else "-"
        lower = f"{row.lower_bound:.6g}" if row.lower_bound is not None else "-"
        print(f"{row.alpha:>8.3g} {beta:>6} {row.nodes:>6d} {row.gamma:>12.6g} "
              f"{row.k_star:>7d} {upper:>14} {lower:>14}")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config)
    except ConfigError as err:
        print(f"dregsim: {err}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(f"ok: {cfg.kind} experiment, seed {cfg.seed}")
        return EXIT_OK

    try:
        cfg = with_overrides(cfg, seed=getattr(args, "seed", None),
                             out_dir=getattr(args, "out", None))

        if args.command == "bounds":
            _print_bounds_table(cfg)
            return EXIT_OK

        threads = _resolve_threads(args.threads)
        rows, extras = run_experiment(cfg, threads=threads)
        written = emit_outputs(rows, cfg, extras)
        for label, path in sorted(written.items()):
            print(f"{label}: {path}")
        for key, value in sorted(extras.items()):
            print(f"{key}: {value}")
        return EXIT_OK
    except ConfigError as err:
        print(f"dregsim: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as err:
        print(f"dregsim: divergence: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, OSError) as err:
        print(f"dregsim: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
