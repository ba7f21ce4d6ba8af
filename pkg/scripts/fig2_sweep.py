"""Mean zdc against the transmit budget for each strategy (N=8, M=1).

    python scripts/fig2_sweep.py [--config configs/fig2.json] [--channels 50] [--jobs 1]

Writes the raw records as CSV and prints one row per budget.
"""

import argparse
import sys
from pathlib import Path

from wptopt.experiments import ExperimentConfig, emit_results, run_sweep, summarize

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", default=ROOT / "configs" / "fig2.json")
    parser.add_argument("--channels", type=int, help="override num_channels")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--out", help="CSV path (default: the config's output_path)")
    args = parser.parse_args(argv)

    cfg = ExperimentConfig.load(args.config)
    if args.channels:
        cfg.num_channels = args.channels
    records = run_sweep(cfg, jobs=args.jobs)
    out = Path(args.out or cfg.output_path or "fig2.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    emit_results(records, out, "csv", cfg)

    means = {(s["strategy"], s["p_tr_dbw"]): s["mean_zdc"] for s in summarize(records)}
    print("p_tr_dbw " + " ".join(f"{s:>12}" for s in cfg.strategies))
    for p in cfg.budgets.p_tr_max_dbw:
        print(f"{p:8.1f} " + " ".join(f"{means[(s, p)]:12.4e}" for s in cfg.strategies))
    failures = sum(r.error is not None for r in records)
    print(f"{len(records)} records, {failures} failed, written to {out}")
    return 0 if failures == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
