#!/usr/bin/env python3
"""Sum rate versus RIS element count at fixed transmit power (10 dBm).

Retrains per element count (the action space changes with K) and reports the
exhaustive-oracle mean where the enumeration budget allows, so the aggregate
CSV carries both the learned rates and the oracle gap.
"""

import argparse
from pathlib import Path

from arisrl.cli import main as cli_main


def run(args: argparse.Namespace) -> None:
    cli_main(
        [
            "sweep-elements",
            "--config",
            args.config,
            "--elements",
            *[str(k) for k in args.elements],
            "--power-dbm",
            str(args.power_dbm),
            "--episodes",
            str(args.episodes),
            "--eval-episodes",
            str(args.eval_episodes),
            "--seed",
            *[str(s) for s in args.seeds],
            "--out",
            str(args.out),
        ]
    )


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(Path(__file__).resolve().parents[1] / "configs" / "desk.yaml"))
    parser.add_argument("--elements", nargs="+", type=int, default=[8, 16, 32])
    parser.add_argument("--power-dbm", type=float, default=10.0)
    parser.add_argument("--episodes", type=int, default=100)
    parser.add_argument("--eval-episodes", type=int, default=10)
    parser.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2, 3, 4])
    parser.add_argument("--out", type=Path, default=Path("runs/element_sweep"))
    run(parser.parse_args())
