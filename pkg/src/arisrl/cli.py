"""Experiment runner: training, evaluation, sweeps, and the oracle as files.

Every command writes plot-ready text outputs into --out: per-seed metrics CSVs
with config-embedding headers, a mean/std aggregate when several seeds are
given, JSON-line trajectory traces on request, and binary checkpoints.  Reruns
with the same arguments produce byte-identical files.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import baselines, moppo, reporting
from .moppo import EpisodeMetrics, PolicyVariant, TrainConfig
from .scenario import Scenario, load_scenario, make_scenario, scenario_to_dict

POLICY_VARIANTS = {
    "moppo": PolicyVariant(),
    "hppo": PolicyVariant(hover_only=True),
    "random-ps": PolicyVariant(random_phases=True),
    "oma": PolicyVariant(),  # distinguished by the scenario's access mode
}

EVAL_FIELDS = (
    "episode",
    "cum_reward",
    "mean_sum_rate",
    "qos_violation_frac",
    "safety_violations",
)
SWEEP_POWER_FIELDS = (
    "power_dbm",
    "mean_sum_rate",
    "mean_cum_reward",
    "qos_violation_frac",
    "safety_violations",
)
SWEEP_ELEMENTS_FIELDS = (
    "elements",
    "mean_sum_rate",
    "mean_cum_reward",
    "oracle_mean_sum_rate",
    "oracle_gap",
)
ORACLE_FIELDS = ("slot", "sum_rate", "feasible", "upper_bound", "x", "y", "lam")


@dataclass(frozen=True)
class ExperimentSpec:
    """Resolved command-line request."""

    command: str
    config_path: str | None
    seeds: tuple[int, ...]
    out_dir: Path
    policy: str = "moppo"
    episodes: int | None = None
    eval_episodes: int = 10
    power_dbm: tuple[float, ...] = ()
    elements: tuple[int, ...] = ()
    checkpoints: tuple[str, ...] = ()
    deterministic_eval: bool = False
    trajectory_every: int | None = None
    slots: int = 50
    phase_levels: int = 4
    position_axis: int = 3
    position_extent: float = 30.0
    lambda_levels: tuple[float, ...] = (0.6, 0.75, 0.9)

    def validate(self) -> None:
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.policy not in POLICY_VARIANTS:
            raise ValueError(f"unknown policy {self.policy!r}")


def _scenario(spec: ExperimentSpec) -> Scenario:
    if spec.config_path is not None:
        scenario = load_scenario(Path(spec.config_path).read_text())
    else:
        scenario = make_scenario()
    if spec.policy == "oma":
        scenario = replace(scenario, access_mode="oma")
    if spec.command in ("train", "baseline") and len(spec.elements) == 1:
        scenario = replace(scenario, ris_elements=int(spec.elements[0]))
    return scenario


def _train_config(spec: ExperimentSpec) -> TrainConfig:
    config = TrainConfig()
    if spec.episodes is not None:
        config = replace(config, episodes=int(spec.episodes))
    return config


def _meta(spec: ExperimentSpec, scenario: Scenario, seed: int, **extra) -> dict:
    meta = {
        "command": spec.command,
        "policy": spec.policy,
        "seed": seed,
        "scenario": scenario_to_dict(scenario),
        "config_hash": reporting.config_hash(
            {"scenario": scenario_to_dict(scenario), "seed": seed, **extra}
        ),
    }
    meta.update(extra)
    return meta


def _aggregate(paths: list[Path], out_path: Path, key_field: str) -> None:
    fields, rows = reporting.aggregate_metrics([str(p) for p in paths], key_field)
    reporting.write_metrics_csv(
        out_path, fields, rows, {"aggregated_from": [p.name for p in paths]}
    )
    print(f"wrote {out_path}")


def _write_trajectories(path: Path, report: moppo.EvalReport, every: int, meta: dict) -> None:
    records = []
    slots = range(0, report.trajectories.shape[1], every)
    for ep in range(report.trajectories.shape[0]):
        for t in slots:
            records.append(
                {
                    "kind": "episode",
                    "episode": ep,
                    "slot": t,
                    "x": float(report.trajectories[ep, t, 0]),
                    "y": float(report.trajectories[ep, t, 1]),
                }
            )
    for t in slots:
        records.append(
            {
                "kind": "mean",
                "slot": t,
                "x": float(report.mean_trajectory[t, 0]),
                "y": float(report.mean_trajectory[t, 1]),
            }
        )
    reporting.write_records_jsonl(path, records, meta)
    print(f"wrote {path}")


# ---- commands -----------------------------------------------------------------


def cmd_train(spec: ExperimentSpec) -> int:
    scenario = _scenario(spec)
    config = _train_config(spec)
    variant = POLICY_VARIANTS[spec.policy]
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for seed in spec.seeds:
        result = moppo.train(scenario, config, seed=seed, variant=variant)
        stem = f"train_{spec.policy}_seed{seed}"
        path = spec.out_dir / f"{stem}.csv"
        meta = _meta(spec, scenario, seed, train_config=vars(config))
        reporting.write_metrics_csv(
            path, EpisodeMetrics.FIELDS, [m.row() for m in result.metrics], meta
        )
        ckpt = spec.out_dir / f"agent_{spec.policy}_seed{seed}.ckpt"
        moppo.save_agent(ckpt, result)
        paths.append(path)
        last = result.metrics[-1]
        print(
            f"seed {seed}: reward {last.cum_reward:.1f}, "
            f"sum rate {last.mean_sum_rate:.3f}; wrote {path} and {ckpt}"
        )
    if len(paths) > 1:
        _aggregate(paths, spec.out_dir / f"train_{spec.policy}_aggregate.csv", "episode")
    return 0


def cmd_baseline(spec: ExperimentSpec) -> int:
    return cmd_train(spec)


def _eval_rows(report: moppo.EvalReport) -> list[list]:
    rows = []
    for ep in range(report.episode_rewards.size):
        rows.append(
            [
                ep,
                float(report.episode_rewards[ep]),
                float(report.episode_sum_rates[ep]),
                report.qos_violation_frac,
                report.safety_violations,
            ]
        )
    return rows


def cmd_eval(spec: ExperimentSpec) -> int:
    if not spec.checkpoints:
        raise ValueError("eval requires at least one --checkpoint")
    scenario = _scenario(spec)
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    episodes = spec.eval_episodes if spec.episodes is None else int(spec.episodes)
    for ckpt in spec.checkpoints:
        agent, ckpt_meta = moppo.load_agent(ckpt)
        stem = Path(ckpt).stem
        paths = []
        for seed in spec.seeds:
            report = moppo.evaluate(
                agent,
                scenario,
                episodes=episodes,
                deterministic=spec.deterministic_eval,
                seed=seed,
            )
            meta = _meta(
                spec,
                scenario,
                seed,
                checkpoint=str(ckpt),
                checkpoint_hash=ckpt_meta.get("config_hash"),
                deterministic=spec.deterministic_eval,
            )
            path = spec.out_dir / f"eval_{stem}_s{seed}.csv"
            reporting.write_metrics_csv(path, EVAL_FIELDS, _eval_rows(report), meta)
            paths.append(path)
            print(
                f"{stem} seed {seed}: mean reward {report.mean_cum_reward:.1f}, "
                f"mean sum rate {report.mean_sum_rate:.3f}; wrote {path}"
            )
            if spec.trajectory_every is not None:
                _write_trajectories(
                    spec.out_dir / f"eval_{stem}_s{seed}_traj.jsonl",
                    report,
                    spec.trajectory_every,
                    meta,
                )
        if len(paths) > 1:
            _aggregate(paths, spec.out_dir / f"eval_{stem}_aggregate.csv", "episode")
    return 0


def cmd_sweep_power(spec: ExperimentSpec) -> int:
    if not spec.power_dbm:
        raise ValueError("sweep-power requires --power-dbm values")
    scenario = _scenario(spec)
    config = _train_config(spec)
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    agents: list[tuple[str, object, int]] = []
    if spec.checkpoints:
        for ckpt in spec.checkpoints:
            agent, meta = moppo.load_agent(ckpt)
            agents.append((Path(ckpt).stem, agent, int(meta.get("seed", scenario.seed))))
    else:
        variant = POLICY_VARIANTS[spec.policy]
        for seed in spec.seeds:
            result = moppo.train(scenario, config, seed=seed, variant=variant)
            agents.append((f"{spec.policy}_seed{seed}", result.agent, seed))
    paths = []
    for label, agent, seed in agents:
        rows = []
        for p in spec.power_dbm:
            sc_p = replace(scenario, tx_power_dbm=float(p))
            report = moppo.evaluate(
                agent,
                sc_p,
                episodes=spec.eval_episodes,
                deterministic=spec.deterministic_eval,
                seed=seed,
            )
            rows.append(
                [
                    float(p),
                    report.mean_sum_rate,
                    report.mean_cum_reward,
                    report.qos_violation_frac,
                    report.safety_violations,
                ]
            )
        path = spec.out_dir / f"sweep_power_{spec.policy}_{label}.csv"
        meta = _meta(spec, scenario, seed, power_dbm=list(spec.power_dbm), source=label)
        reporting.write_metrics_csv(path, SWEEP_POWER_FIELDS, rows, meta)
        paths.append(path)
        print(f"wrote {path}")
    if len(paths) > 1:
        _aggregate(
            paths, spec.out_dir / f"sweep_power_{spec.policy}_aggregate.csv", "power_dbm"
        )
    return 0


def _default_grids(scenario: Scenario, spec: ExperimentSpec) -> baselines.OracleGrids:
    axis = np.linspace(-spec.position_extent, spec.position_extent, spec.position_axis)
    positions = np.array([[x, y] for x in axis for y in axis])
    keep = []
    for x, y in positions:
        clearance = scenario.obstacle_clearance(x, y)
        if scenario.inside_area(x, y) and (
            clearance.size == 0 or clearance.min() >= scenario.d_min
        ):
            keep.append((x, y))
    if not keep:
        raise ValueError("no oracle grid position satisfies the safety constraints")
    return baselines.OracleGrids(
        positions=np.array(keep),
        phase_levels=spec.phase_levels,
        lambda_levels=np.array(spec.lambda_levels),
    )


def cmd_sweep_elements(spec: ExperimentSpec) -> int:
    if not spec.elements:
        raise ValueError("sweep-elements requires --elements values")
    base = _scenario(spec)
    config = _train_config(spec)
    variant = POLICY_VARIANTS[spec.policy]
    power = spec.power_dbm[0] if spec.power_dbm else 10.0
    spec.out_dir.mkdir(parents=True, exist_ok=True)

    oracle_mean: dict[int, float] = {}
    for k in spec.elements:
        sc_k = replace(base, ris_elements=int(k), tx_power_dbm=float(power))
        grids = _default_grids(sc_k, spec)
        if grids.combo_count(sc_k.ris_elements) <= grids.budget:
            run = baselines.run_oracle(sc_k, grids, slots=spec.slots, seed=spec.seeds[0])
            oracle_mean[k] = run.mean_sum_rate
            print(f"K={k}: oracle mean sum rate {run.mean_sum_rate:.3f}")
        else:
            oracle_mean[k] = float("nan")
            print(f"K={k}: oracle budget exceeded, gap not reported")

    paths = []
    for seed in spec.seeds:
        rows = []
        for k in spec.elements:
            sc_k = replace(base, ris_elements=int(k), tx_power_dbm=float(power))
            result = moppo.train(sc_k, config, seed=seed, variant=variant)
            report = moppo.evaluate(
                result.agent,
                sc_k,
                episodes=spec.eval_episodes,
                deterministic=spec.deterministic_eval,
                seed=seed,
            )
            gap = oracle_mean[k] - report.mean_sum_rate
            rows.append(
                [int(k), report.mean_sum_rate, report.mean_cum_reward, oracle_mean[k], gap]
            )
            print(
                f"K={k} seed {seed}: mean sum rate {report.mean_sum_rate:.3f}"
            )
        path = spec.out_dir / f"sweep_elements_{spec.policy}_seed{seed}.csv"
        meta = _meta(
            spec, base, seed, elements=list(spec.elements), power_dbm=float(power)
        )
        reporting.write_metrics_csv(path, SWEEP_ELEMENTS_FIELDS, rows, meta)
        paths.append(path)
        print(f"wrote {path}")
    if len(paths) > 1:
        _aggregate(
            paths, spec.out_dir / f"sweep_elements_{spec.policy}_aggregate.csv", "elements"
        )
    return 0


def cmd_oracle(spec: ExperimentSpec) -> int:
    scenario = _scenario(spec)
    grids = _default_grids(scenario, spec)
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    seed = spec.seeds[0]
    run = baselines.run_oracle(scenario, grids, slots=spec.slots, seed=seed)
    rows = [
        [t, r.sum_rate, int(r.feasible), r.upper_bound, r.position[0], r.position[1], r.lam]
        for t, r in enumerate(run.slots)
    ]
    meta = _meta(
        spec,
        scenario,
        seed,
        phase_levels=spec.phase_levels,
        lambda_levels=list(spec.lambda_levels),
        positions=[list(map(float, p)) for p in grids.positions],
    )
    path = spec.out_dir / "oracle.csv"
    reporting.write_metrics_csv(path, ORACLE_FIELDS, rows, meta)
    controls = [
        {
            "slot": t,
            "phases": [float(v) for v in r.phases],
            "lam": r.lam,
            "x": float(r.position[0]),
            "y": float(r.position[1]),
            "feasible": bool(r.feasible),
        }
        for t, r in enumerate(run.slots)
    ]
    cpath = spec.out_dir / "oracle_controls.jsonl"
    reporting.write_records_jsonl(cpath, controls, meta)
    print(
        f"oracle over {spec.slots} slots: mean sum rate {run.mean_sum_rate:.3f}, "
        f"upper bound {run.mean_upper_bound:.3f}; wrote {path} and {cpath}"
    )
    return 0


# ---- argument parsing ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arisrl",
        description="Aerial-RIS CoMP-NOMA experiments: train, evaluate, sweep, oracle.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML scenario file (defaults used if omitted)")
        p.add_argument("--seed", nargs="+", type=int, default=[0], help="run seeds")
        p.add_argument("--out", type=Path, default=Path("runs"), help="output directory")

    p_train = sub.add_parser("train", help="train MO-PPO (or a variant) per seed")
    common(p_train)
    p_train.add_argument("--episodes", type=int, help="training episodes override")
    p_train.add_argument("--policy", choices=sorted(POLICY_VARIANTS), default="moppo")
    p_train.add_argument(
        "--elements", nargs="+", type=int, default=[], help="RIS element count override"
    )

    p_base = sub.add_parser("baseline", help="train a comparator policy per seed")
    common(p_base)
    p_base.add_argument("--episodes", type=int, help="training episodes override")
    p_base.add_argument("--policy", choices=sorted(POLICY_VARIANTS), required=True)
    p_base.add_argument("--elements", nargs="+", type=int, default=[])

    p_eval = sub.add_parser("eval", help="evaluate checkpoints over frozen rollouts")
    common(p_eval)
    p_eval.add_argument("--checkpoint", nargs="+", required=True, dest="checkpoints")
    p_eval.add_argument("--episodes", type=int, help="evaluation episodes (default 10)")
    p_eval.add_argument("--policy", choices=sorted(POLICY_VARIANTS), default="moppo")
    p_eval.add_argument("--deterministic-eval", action="store_true")
    p_eval.add_argument(
        "--trajectory-every",
        type=int,
        help="emit trajectory traces sampled every this many slots",
    )

    p_sp = sub.add_parser("sweep-power", help="evaluated sum rate vs transmit power")
    common(p_sp)
    p_sp.add_argument("--power-dbm", nargs="+", type=float, required=True)
    p_sp.add_argument("--checkpoint", nargs="+", default=[], dest="checkpoints")
    p_sp.add_argument("--episodes", type=int, help="training episodes when no checkpoint")
    p_sp.add_argument("--eval-episodes", type=int, default=10)
    p_sp.add_argument("--policy", choices=sorted(POLICY_VARIANTS), default="moppo")
    p_sp.add_argument("--deterministic-eval", action="store_true")

    p_se = sub.add_parser("sweep-elements", help="sum rate vs RIS element count")
    common(p_se)
    p_se.add_argument("--elements", nargs="+", type=int, required=True)
    p_se.add_argument("--power-dbm", nargs="+", type=float, default=[10.0])
    p_se.add_argument("--episodes", type=int, help="training episodes per point")
    p_se.add_argument("--eval-episodes", type=int, default=10)
    p_se.add_argument("--policy", choices=sorted(POLICY_VARIANTS), default="moppo")
    p_se.add_argument("--deterministic-eval", action="store_true")
    p_se.add_argument("--slots", type=int, default=50, help="oracle slots per K")

    p_or = sub.add_parser("oracle", help="per-slot exhaustive search on a control grid")
    common(p_or)
    p_or.add_argument("--slots", type=int, default=50)
    p_or.add_argument("--phase-levels", type=int, default=4)
    p_or.add_argument("--position-axis", type=int, default=3, help="grid points per axis")
    p_or.add_argument("--position-extent", type=float, default=30.0)
    p_or.add_argument("--lambda-levels", nargs="+", type=float, default=[0.6, 0.75, 0.9])

    return parser


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    get = lambda name, default: getattr(args, name, None) if getattr(args, name, None) is not None else default
    spec = ExperimentSpec(
        command=args.command,
        config_path=getattr(args, "config", None),
        seeds=tuple(args.seed),
        out_dir=args.out,
        policy=getattr(args, "policy", "moppo") or "moppo",
        episodes=getattr(args, "episodes", None),
        eval_episodes=get("eval_episodes", 10),
        power_dbm=tuple(getattr(args, "power_dbm", []) or []),
        elements=tuple(getattr(args, "elements", []) or []),
        checkpoints=tuple(getattr(args, "checkpoints", []) or []),
        deterministic_eval=bool(getattr(args, "deterministic_eval", False)),
        trajectory_every=getattr(args, "trajectory_every", None),
        slots=get("slots", 50),
        phase_levels=get("phase_levels", 4),
        position_axis=get("position_axis", 3),
        position_extent=get("position_extent", 30.0),
        lambda_levels=tuple(get("lambda_levels", (0.6, 0.75, 0.9))),
    )
    spec.validate()
    return spec


_HANDLERS = {
    "train": cmd_train,
    "baseline": cmd_baseline,
    "eval": cmd_eval,
    "sweep-power": cmd_sweep_power,
    "sweep-elements": cmd_sweep_elements,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = spec_from_args(args)
    try:
        return _HANDLERS[spec.command](spec)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
