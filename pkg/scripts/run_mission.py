#!/usr/bin/env python3
"""Run a mission preset end to end and summarize it.

Usage: python scripts/run_mission.py [mission1|mission6|config.json] [seed]

Writes the log, the error-statistics table against truth and LBL, and the
replay report (CSV series + report.json) under ./out/<name>_seed<seed>/.
"""

import os
import sys
import time

from relnav import mission as ms


def main():
    source = sys.argv[1] if len(sys.argv) > 1 else "mission6"
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0
    config = ms.load_config(source)
    out_dir = os.path.join("out", f"{config.name}_seed{seed}")
    os.makedirs(out_dir, exist_ok=True)

    t0 = time.perf_counter()
    rows = ms.run_mission(config, seed, out_path=os.path.join(out_dir, "log.jsonl.gz"))
    print(f"{config.name}: {config.duration_s} sim seconds in "
          f"{time.perf_counter() - t0:.0f} s wall")

    print("\nerror vs truth:")
    print(ms.format_stats_table(ms.compute_error_stats(rows, "truth")))
    try:
        print("\nerror vs LBL:")
        print(ms.format_stats_table(ms.compute_error_stats(rows, "lbl")))
    except ms.InsufficientDataError:
        print("  (no LBL fixes in log)")

    report = ms.replay_validation(rows, out_dir=out_dir)
    print(f"\nreplay report in {out_dir}/")
    for phase in report["phases"]:
        print(f"  mode {phase['mode']}: t {phase['t0']:.0f}..{phase['t1']:.0f}, "
              f"footprint {phase['extent_major_m']:.0f} x {phase['extent_minor_m']:.0f} m")
    for name, v in report["vehicles"].items():
        print(f"  {name}: p68 {v['p68_vs_truth']} m, DR terminal "
              f"{v['dr_terminal_error_m']} m ({100 * v['dr_error_fraction']:.1f}% of "
              f"{v['dr_distance_m']:.0f} m)")


if __name__ == "__main__":
    main()
