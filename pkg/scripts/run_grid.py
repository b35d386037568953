#!/usr/bin/env python3
"""Desk-scale density grid: every backend at 20/40/60 nodes, 10 seeds each.

Writes one CSV row per run and prints the per-configuration summary table.
"""
import argparse
import sys

from llnsim.experiment import expand_sweep, format_summary, run_sweep, summarize, write_csv
from llnsim.scenario import ScenarioConfig


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="grid.csv", metavar="CSV")
    parser.add_argument("--seeds", type=int, default=10, metavar="N")
    parser.add_argument("--duration", type=float, default=1800.0,
                        metavar="SECONDS")
    args = parser.parse_args()

    base = ScenarioConfig(duration=args.duration)
    configs = expand_sweep(base, {"backend": "loadng,loadng-ctp,rpl",
                                  "node_count": "20,40,60",
                                  "seeds": str(args.seeds)})

    def progress(done, total, result):
        r = result.report
        print(f"[{done}/{total}] {r.backend} n={r.node_count} seed={r.seed} "
              f"pdr_up={r.pdr_up:.4f} overhead={r.overhead_bps:.1f} B/s",
              file=sys.stderr)

    results = run_sweep(configs, progress)
    reports = [r.report for r in results]
    write_csv(args.out, reports)
    print(format_summary(summarize(reports)))
    print(f"\nwrote {len(reports)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
