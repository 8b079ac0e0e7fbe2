#!/usr/bin/env python3
"""Mean UAV trajectory of a trained agent, sampled every 25 slots.

Trains one agent (or reuses --checkpoint), evaluates it over 10 episodes, and
writes trajectory traces plus the per-slot mean path.  Overlay the JSONL
records on the scenario geometry to draw the movement map.
"""

import argparse
from pathlib import Path

from arisrl.cli import main as cli_main


def run(args: argparse.Namespace) -> None:
    checkpoint = args.checkpoint
    if checkpoint is None:
        cli_main(
            [
                "train",
                "--config",
                args.config,
                "--episodes",
                str(args.episodes),
                "--seed",
                str(args.seed),
                "--out",
                str(args.out),
            ]
        )
        checkpoint = str(Path(args.out) / f"agent_moppo_seed{args.seed}.ckpt")
    cli_main(
        [
            "eval",
            "--config",
            args.config,
            "--checkpoint",
            checkpoint,
            "--episodes",
            "10",
            "--seed",
            str(args.seed),
            "--trajectory-every",
            str(args.every),
            "--out",
            str(args.out),
        ]
    )


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(Path(__file__).resolve().parents[1] / "configs" / "desk.yaml"))
    parser.add_argument("--checkpoint", help="reuse an existing checkpoint instead of training")
    parser.add_argument("--episodes", type=int, default=150)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--every", type=int, default=25)
    parser.add_argument("--out", type=Path, default=Path("runs/trajectory_map"))
    run(parser.parse_args())
