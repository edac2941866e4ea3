"""Command-line interface: run missions, summarize logs, replay, calibrate.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .mission import (ConfigError, InsufficientDataError, calibrate_receiver,
                      compute_error_stats, format_stats_table, load_config,
                      replay_validation, run_mission)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relnav",
        description="Single-beacon relative acoustic navigation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a mission preset or config file")
    run_p.add_argument("config", help="preset name (mission1, mission6) or JSON path")
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--out", default=None, help="log path (.jsonl or .jsonl.gz)")
    run_p.add_argument("--bridge", default=None, metavar="HOST:PORT",
                       help="serve the operator bridge while running")
    run_p.add_argument("--duration", type=int, default=None,
                       help="override the configured duration in seconds")

    stats_p = sub.add_parser("stats", help="navigation error statistics from a log")
    stats_p.add_argument("log")
    stats_p.add_argument("--ref", choices=("truth", "lbl"), default="truth")

    replay_p = sub.add_parser("replay", help="reconstruct trajectories and report")
    replay_p.add_argument("log")
    replay_p.add_argument("--out", required=True, help="report output directory")

    cal_p = sub.add_parser("calibrate", help="simulated rotational calibration")
    cal_p.add_argument("config")
    cal_p.add_argument("--seed", type=int, default=0)
    cal_p.add_argument("--out", default="bias_table.csv")
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.duration is not None:
        config.duration_s = args.duration
    bridge = None
    if args.bridge:
        from .bridge import BridgeServer
        host, _, port = args.bridge.rpartition(":")
        bridge = BridgeServer(host or "127.0.0.1", int(port))
        bridge.start()
    try:
        rows = run_mission(config, args.seed, out_path=args.out, bridge=bridge)
    finally:
        if bridge is not None:
            bridge.stop()
    print(f"{config.name}: {len(rows) - 1} ticks, seed {args.seed}"
          + (f", log written to {args.out}" if args.out else ""))
    return EXIT_OK


def _cmd_stats(args) -> int:
    stats = compute_error_stats(args.log, reference=args.ref)
    print(format_stats_table(stats))
    return EXIT_OK


def _cmd_replay(args) -> int:
    report = replay_validation(args.log, out_dir=args.out)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    result = calibrate_receiver(load_config(args.config), seed=args.seed)
    result.table.to_csv(args.out)
    print(f"bias table written to {args.out}")
    print(f"range error p68: {result.p68_range:.3f} m")
    print(f"azimuth error p68 (raw): "
          f"{np.percentile(np.abs(result.raw_azimuth_errors), 68):.2f} deg")
    print(f"azimuth error p68 (corrected): {result.p68_azimuth:.2f} deg")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "stats": _cmd_stats,
                "replay": _cmd_replay, "calibrate": _cmd_calibrate}
    try:
        return handlers[args.command](args)
    except (ConfigError,) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (InsufficientDataError, OSError, ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
