"""Mean zdc against the number of sub-carriers at a fixed budget, for a wide and a narrow SSPA.

    python scripts/fig3_sweep.py [--channels 20] [--jobs 1]

Runs configs/fig3_wide_sspa.json and configs/fig3_narrow_sspa.json, writes
their CSVs and prints one table per saturation level.
"""

import argparse
import sys
from pathlib import Path

from wptopt.experiments import ExperimentConfig, emit_results, run_sweep, summarize

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ("fig3_wide_sspa.json", "fig3_narrow_sspa.json")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--channels", type=int, help="override num_channels")
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args(argv)

    failures = 0
    for name in CONFIGS:
        cfg = ExperimentConfig.load(ROOT / "configs" / name)
        if args.channels:
            cfg.num_channels = args.channels
        records = run_sweep(cfg, jobs=args.jobs)
        out = ROOT / cfg.output_path
        out.parent.mkdir(parents=True, exist_ok=True)
        emit_results(records, out, "csv", cfg)
        failures += sum(r.error is not None for r in records)

        means = {(s["strategy"], s["N"]): s["mean_zdc"] for s in summarize(records)}
        print(f"A_s = {cfg.sspa.A_s_dbv:g} dBV, p_tr = {cfg.budgets.p_tr_max_dbw[0]:g} dBW  ({out.name})")
        print("   N " + " ".join(f"{s:>12}" for s in cfg.strategies))
        for n in cfg.tones.N:
            print(f"{n:4d} " + " ".join(f"{means[(s, n)]:12.4e}" for s in cfg.strategies))
        print()
    return 0 if failures == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
