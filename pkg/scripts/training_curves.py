#!/usr/bin/env python3
"""Reward-convergence data: train every policy variant at desk scale.

Produces per-seed and aggregate training curves for the full agent and the
three comparators (hover-only, random phases, orthogonal access).  Plot
cum_reward or mean_sum_rate against episode from the emitted CSVs.
"""

import argparse
from pathlib import Path

from arisrl.cli import main as cli_main

POLICIES = ("moppo", "hppo", "random-ps", "oma")


def run(args: argparse.Namespace) -> None:
    seeds = [str(s) for s in args.seeds]
    for policy in POLICIES:
        print(f"=== {policy} ===")
        cli_main(
            [
                "baseline",
                "--config",
                args.config,
                "--policy",
                policy,
                "--episodes",
                str(args.episodes),
                "--seed",
                *seeds,
                "--out",
                str(args.out),
            ]
        )


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(Path(__file__).resolve().parents[1] / "configs" / "desk.yaml"))
    parser.add_argument("--episodes", type=int, default=150)
    parser.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2])
    parser.add_argument("--out", type=Path, default=Path("runs/training_curves"))
    run(parser.parse_args())
