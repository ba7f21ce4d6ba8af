"""Command line entry point: ``wptopt run | check | single``."""

from __future__ import annotations

import argparse
import logging
import sys

from wptopt.checks import run_checks
from wptopt.experiments import (
    STRATEGIES,
    BudgetConfig,
    ExperimentConfig,
    SspaConfig,
    TonesConfig,
    emit_results,
    records_to_csv,
    records_to_json,
    run_cell,
    run_sweep,
    summarize,
)


def _strategies(text: str) -> list[str]:
    names = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in names if s not in STRATEGIES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown strategies {bad}; choose from {','.join(STRATEGIES)}")
    return names


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wptopt", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sweep described by a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=_u64)
    run.add_argument("--out", help="output file (default: config output_path, else stdout)")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--strategies", type=_strategies)
    run.add_argument("--jobs", type=int, default=1)

    check = sub.add_parser("check", help="run the oracle and gradient self-tests")
    check.add_argument("--seed", type=_u64, default=0)

    single = sub.add_parser("single", help="run one (channel, budget) cell and print its records")
    single.add_argument("--n", type=int, default=8)
    single.add_argument("--m", type=int, default=1)
    single.add_argument("--ptr-dbw", type=float, default=-40.0)
    single.add_argument("--pin-dbw", type=float, default=-20.0)
    single.add_argument("--as-dbv", type=float, default=-35.0)
    single.add_argument("--beta", type=float, default=1.0)
    single.add_argument("--seed", type=_u64, default=0)
    single.add_argument("--channel", type=int, default=0)
    single.add_argument("--strategies", type=_strategies, default=list(STRATEGIES))
    single.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "check":
        return 0 if run_checks(args.seed) else 1

    if args.command == "single":
        cfg = ExperimentConfig(
            tones=TonesConfig(N=[args.n], M=args.m),
            sspa=SspaConfig(A_s_dbv=args.as_dbv, beta=args.beta),
            budgets=BudgetConfig(p_in_max_dbw=args.pin_dbw, p_tr_max_dbw=[args.ptr_dbw]),
            strategies=args.strategies,
            num_channels=1,
            seed=args.seed,
        )
        records = run_cell(cfg, args.n, args.ptr_dbw, args.channel)
        text = records_to_csv(records) if args.format == "csv" else records_to_json(records, cfg)
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return 0 if all(r.error is None for r in records) else 1

    try:
        cfg = ExperimentConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.strategies:
            cfg.strategies = args.strategies
        cfg.__post_init__()
    except (OSError, ValueError, TypeError) as exc:
        print(f"wptopt: bad config {args.config}: {exc}", file=sys.stderr)
        return 2
    records = run_sweep(cfg, jobs=args.jobs)
    out = args.out or cfg.output_path
    if out:
        emit_results(records, out, args.format, cfg)
        for row in summarize(records):
            print(f"{row['strategy']:>10}  N={row['N']:<3} p_tr={row['p_tr_dbw']:>6.1f} dBW  mean zdc={row['mean_zdc']:.6e}  n={row['count']}", file=sys.stderr)
    else:
        sys.stdout.write(records_to_csv(records) if args.format == "csv" else records_to_json(records, cfg) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
