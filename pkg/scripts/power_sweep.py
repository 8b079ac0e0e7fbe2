#!/usr/bin/env python3
"""Sum rate versus transmit power for NOMA and OMA policies.

Trains one agent per seed and policy at the config's power, then evaluates
the frozen agents across the requested power range.  The aggregate CSVs give
the sum-rate-vs-power curves.
"""

import argparse
from pathlib import Path

from arisrl.cli import main as cli_main


def run(args: argparse.Namespace) -> None:
    seeds = [str(s) for s in args.seeds]
    powers = [str(p) for p in args.power_dbm]
    for policy in ("moppo", "oma"):
        print(f"=== {policy} ===")
        cli_main(
            [
                "sweep-power",
                "--config",
                args.config,
                "--policy",
                policy,
                "--episodes",
                str(args.episodes),
                "--seed",
                *seeds,
                "--power-dbm",
                *powers,
                "--eval-episodes",
                str(args.eval_episodes),
                "--out",
                str(args.out),
            ]
        )


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(Path(__file__).resolve().parents[1] / "configs" / "desk.yaml"))
    parser.add_argument("--episodes", type=int, default=100)
    parser.add_argument("--eval-episodes", type=int, default=10)
    parser.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2, 3, 4])
    parser.add_argument("--power-dbm", nargs="+", type=float, default=[0.0, 5.0, 10.0, 15.0, 20.0])
    parser.add_argument("--out", type=Path, default=Path("runs/power_sweep"))
    run(parser.parse_args())
