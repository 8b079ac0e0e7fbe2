"""Multi-output PPO: one categorical head for the maneuver, one Gaussian head
for phases and power splits, optimized by decoupled clipped surrogates.

Training runs episode by episode.  Within an episode, transitions are
collected in fixed-length segments; each segment's advantages use the n-step
return truncated at the segment boundary with a critic bootstrap (zero at the
episode end).  After the episode, several epochs of shuffled mini-batches
update both actors, the critic, and the entropy bonus with a single Adam
instance, then the buffer is cleared.  The sampling policy is synchronized
implicitly: log-probabilities are recorded at collection time, so the first
update of every episode starts from importance ratio one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import neural
from .env import AerialRisEnv, HybridAction, decode_action
from .neural import (
    AdamOptimizer,
    PolicyNetwork,
    ValueNetwork,
    categorical_entropy,
    categorical_entropy_grad,
    categorical_logp,
    categorical_logp_grad,
    gaussian_entropy,
    gaussian_logp,
    gaussian_logp_grad,
    softmax,
)
from .reporting import config_hash
from .scenario import HOVER_INDEX, Scenario, scenario_to_dict, substream


@dataclass
class Transition:
    """One slot of experience, recorded under the sampling policy."""

    obs: np.ndarray
    raw_index: int
    raw_continuous: np.ndarray
    logp_d_old: float
    logp_c_old: float
    reward: float
    value: float
    done: bool
    advantage: float = 0.0
    target: float = 0.0


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 750
    epochs: int = 20
    batch_size: int = 128
    segment_len: int = 50
    clip_ratio: float = 0.1
    discount: float = 0.98
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    learning_rate: float = 2.75e-4
    adv_normalization: bool = True
    grad_clip: float | None = 0.5
    hidden_width: int = 64
    critic_mode: str = "separate"  # or "shared" (critic rides the actor trunk)

    def validate(self, scenario: Scenario | None = None) -> None:
        if self.episodes < 1:
            raise ValueError(f"episodes must be >= 1, got {self.episodes}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 < self.clip_ratio < 1.0:
            raise ValueError(f"clip_ratio must be in (0, 1), got {self.clip_ratio}")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError(f"discount must be in (0, 1], got {self.discount}")
        if self.segment_len < 1:
            raise ValueError(f"segment_len must be >= 1, got {self.segment_len}")
        if self.learning_rate < 0.0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.hidden_width < 1:
            raise ValueError(f"hidden_width must be >= 1, got {self.hidden_width}")
        if self.critic_mode not in ("separate", "shared"):
            raise ValueError(f"critic_mode must be 'separate' or 'shared', got {self.critic_mode!r}")
        if self.grad_clip is not None and self.grad_clip <= 0:
            raise ValueError(f"grad_clip must be positive or None, got {self.grad_clip}")
        if scenario is not None and self.segment_len > scenario.slots_per_episode:
            raise ValueError(
                f"segment_len {self.segment_len} exceeds episode length "
                f"{scenario.slots_per_episode}"
            )


@dataclass(frozen=True)
class PolicyVariant:
    """Baseline switches: draw phases at random, or pin the UAV in place."""

    random_phases: bool = False
    hover_only: bool = False

    @property
    def tag(self) -> str:
        if self.random_phases and self.hover_only:
            return "hppo-random-ps"
        if self.random_phases:
            return "random-ps"
        if self.hover_only:
            return "hppo"
        return "moppo"


@dataclass(frozen=True)
class EpisodeMetrics:
    episode: int
    cum_reward: float
    mean_sum_rate: float
    qos_violation_frac: float
    safety_violations: int
    loss_discrete: float
    loss_continuous: float
    loss_value: float
    entropy_discrete: float
    entropy_continuous: float

    FIELDS = (
        "episode",
        "cum_reward",
        "mean_sum_rate",
        "qos_violation_frac",
        "safety_violations",
        "loss_discrete",
        "loss_continuous",
        "loss_value",
        "entropy_discrete",
        "entropy_continuous",
    )

    def row(self) -> list:
        return [getattr(self, f) for f in self.FIELDS]


# ---- advantage and surrogate -------------------------------------------------


def advantage_nstep(
    rewards: np.ndarray, values: np.ndarray, bootstrap: float, gamma: float
) -> np.ndarray:
    """Truncated n-step advantages for one contiguous segment.

    Entry t gets the discounted reward sum to the segment end plus the
    discounted bootstrap, minus the stored value estimate.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    if rewards.size == 0:
        raise ValueError("advantage_nstep: empty segment")
    if rewards.shape != values.shape:
        raise ValueError(
            f"advantage_nstep: rewards {rewards.shape} vs values {values.shape}"
        )
    returns = np.empty_like(rewards)
    acc = float(bootstrap)
    for t in range(rewards.size - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        returns[t] = acc
    return returns - values


def clipped_loss(
    logp_new: np.ndarray, logp_old: np.ndarray, adv: np.ndarray, epsilon: float
) -> np.ndarray:
    """Per-sample negated clipped surrogate: -min(r*A, clip(r, 1-eps, 1+eps)*A)."""
    ratio = np.exp(np.asarray(logp_new) - np.asarray(logp_old))
    adv = np.asarray(adv, dtype=float)
    clipped = np.clip(ratio, 1.0 - epsilon, 1.0 + epsilon)
    return -np.minimum(ratio * adv, clipped * adv)


def clipped_loss_grad(
    logp_new: np.ndarray, logp_old: np.ndarray, adv: np.ndarray, epsilon: float
) -> np.ndarray:
    """d(per-sample loss)/d logp_new: -r*A on the unclipped branch, else 0."""
    ratio = np.exp(np.asarray(logp_new) - np.asarray(logp_old))
    adv = np.asarray(adv, dtype=float)
    clipped = np.clip(ratio, 1.0 - epsilon, 1.0 + epsilon)
    unclipped_active = ratio * adv <= clipped * adv
    return np.where(unclipped_active, -ratio * adv, 0.0)


# ---- agent --------------------------------------------------------------------


@dataclass(frozen=True)
class RawAction:
    """Pre-squash policy sample plus bookkeeping for the update."""

    index: int
    continuous: np.ndarray
    logp_d: float
    logp_c: float
    value: float


class MoPpoAgent:
    """Policy + critic pair with hybrid-action sampling and decoding."""

    def __init__(
        self,
        obs_dim: int,
        num_elements: int,
        num_cells: int,
        config: TrainConfig,
        variant: PolicyVariant,
        init_rng: np.random.Generator,
    ):
        self.obs_dim = obs_dim
        self.num_elements = num_elements
        self.num_cells = num_cells
        self.config = config
        self.variant = variant
        # The random-phase variant learns power splits only.
        self.cont_dim = num_cells if variant.random_phases else num_elements + num_cells
        shared = config.critic_mode == "shared"
        self.policy = PolicyNetwork(
            obs_dim,
            self.cont_dim,
            init_rng,
            hidden=config.hidden_width,
            include_value_head=shared,
        )
        self.critic = None if shared else ValueNetwork(
            obs_dim, init_rng, hidden=config.hidden_width
        )

    @property
    def params(self) -> dict[str, np.ndarray]:
        out = {f"policy.{k}": v for k, v in self.policy.params.items()}
        if self.critic is not None:
            out.update(self.critic.params)
        return out

    def state_values(self, obs: np.ndarray) -> np.ndarray:
        obs = np.atleast_2d(obs)
        if self.critic is not None:
            return self.critic.forward(obs)[0]
        _, cache = self.policy.forward(obs)
        return self.policy.values_from_cache(cache)

    def act(
        self, obs: np.ndarray, rng: np.random.Generator, deterministic: bool = False
    ) -> RawAction:
        out, cache = self.policy.forward(obs[None, :])
        if self.variant.hover_only:
            index, logp_d = HOVER_INDEX, 0.0
        elif deterministic:
            index = int(np.argmax(out.logits[0]))
            logp_d = float(categorical_logp(out.logits, index)[0])
        else:
            cdf = np.cumsum(softmax(out.logits)[0])
            index = int(np.searchsorted(cdf, rng.random()))
            index = min(index, out.logits.shape[1] - 1)
            logp_d = float(categorical_logp(out.logits, index)[0])
        std = np.exp(out.log_std)
        if deterministic:
            cont = out.mean[0].copy()
        else:
            cont = out.mean[0] + std * rng.standard_normal(self.cont_dim)
        logp_c = float(gaussian_logp(cont, out.mean, out.log_std)[0])
        if self.critic is not None:
            value = float(self.critic.forward(obs[None, :])[0][0])
        else:
            value = float(self.policy.values_from_cache(cache)[0])
        return RawAction(index, cont, logp_d, logp_c, value)

    def hybrid_action(
        self, raw: RawAction, phase_rng: np.random.Generator | None
    ) -> HybridAction:
        if self.variant.random_phases:
            if phase_rng is None:
                raise ValueError("random-phase variant needs a phase generator")
            decoded = decode_action(raw.index, raw.continuous, 0, self.num_cells)
            phases = phase_rng.uniform(-np.pi, np.pi, self.num_elements)
            return HybridAction(raw.index, phases, decoded.splits)
        return decode_action(raw.index, raw.continuous, self.num_elements, self.num_cells)


# ---- training loop --------------------------------------------------------------


@dataclass
class TrainResult:
    agent: MoPpoAgent
    optimizer: AdamOptimizer
    metrics: list[EpisodeMetrics]
    config: TrainConfig
    scenario: Scenario
    seed: int
    variant: PolicyVariant


def _global_grad_norm(grads: dict[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def _update(
    agent: MoPpoAgent,
    optimizer: AdamOptimizer,
    buffer: list[Transition],
    config: TrainConfig,
    shuffle_rng: np.random.Generator,
    episode: int,
) -> dict[str, float]:
    """Run E epochs of shuffled mini-batches over one episode's buffer."""
    n = len(buffer)
    obs = np.stack([tr.obs for tr in buffer])
    idx = np.array([tr.raw_index for tr in buffer], dtype=int)
    cont = np.stack([tr.raw_continuous for tr in buffer])
    lpd_old = np.array([tr.logp_d_old for tr in buffer])
    lpc_old = np.array([tr.logp_c_old for tr in buffer])
    adv = np.array([tr.advantage for tr in buffer])
    target = np.array([tr.target for tr in buffer])
    if config.adv_normalization and n > 1:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)

    eps = config.clip_ratio
    totals = {k: 0.0 for k in ("loss_d", "loss_c", "loss_v", "ent_d", "ent_c")}
    updates = 0
    for _ in range(config.epochs):
        perm = shuffle_rng.permutation(n)
        for start in range(0, n, config.batch_size):
            mb = perm[start : start + config.batch_size]
            m = mb.size
            out, cache = agent.policy.forward(obs[mb])

            # Continuous surrogate.
            lpc_new = gaussian_logp(cont[mb], out.mean, out.log_std)
            loss_c = float(clipped_loss(lpc_new, lpc_old[mb], adv[mb], eps).mean())
            dlpc = clipped_loss_grad(lpc_new, lpc_old[mb], adv[mb], eps) / m
            d_mean_per, d_lstd_per = gaussian_logp_grad(cont[mb], out.mean, out.log_std)
            d_mean = dlpc[:, None] * d_mean_per
            ent_c = gaussian_entropy(out.log_std)
            # Gaussian entropy is state-independent: d ent / d log_std = 1.
            d_log_std = (dlpc[:, None] * d_lstd_per).sum(axis=0) - config.entropy_coef

            # Discrete surrogate (absent for the hover-only variant).
            if agent.variant.hover_only:
                loss_d, ent_d = 0.0, 0.0
                d_logits = np.zeros_like(out.logits)
            else:
                lpd_new = categorical_logp(out.logits, idx[mb])
                loss_d = float(clipped_loss(lpd_new, lpd_old[mb], adv[mb], eps).mean())
                dlpd = clipped_loss_grad(lpd_new, lpd_old[mb], adv[mb], eps) / m
                ent_d = float(categorical_entropy(out.logits).mean())
                d_logits = dlpd[:, None] * categorical_logp_grad(out.logits, idx[mb])
                d_logits -= (config.entropy_coef / m) * categorical_entropy_grad(out.logits)

            # Critic regression to the n-step return.
            if agent.critic is not None:
                values, vcache = agent.critic.forward(obs[mb])
                d_values_policy = None
            else:
                values = agent.policy.values_from_cache(cache)
                vcache = None
            loss_v = float(np.mean((values - target[mb]) ** 2))
            d_values = 2.0 * config.value_coef * (values - target[mb]) / m

            total = (
                loss_d
                + loss_c
                + config.value_coef * loss_v
                - config.entropy_coef * (ent_d + ent_c)
            )
            if not math.isfinite(total):
                raise RuntimeError(
                    f"non-finite loss at episode {episode}: "
                    f"discrete {loss_d}, continuous {loss_c}, value {loss_v}"
                )

            if vcache is None:
                d_values_policy = d_values
            grads = agent.policy.backward(
                cache, d_logits, d_mean, d_log_std, d_values=d_values_policy
            )
            grads = {f"policy.{k}": v for k, v in grads.items()}
            if agent.critic is not None:
                grads.update(agent.critic.backward(vcache, d_values))

            if config.grad_clip is not None:
                norm = _global_grad_norm(grads)
                if norm > config.grad_clip:
                    scale = config.grad_clip / norm
                    for g in grads.values():
                        g *= scale
            optimizer.step(grads)

            totals["loss_d"] += loss_d
            totals["loss_c"] += loss_c
            totals["loss_v"] += loss_v
            totals["ent_d"] += ent_d
            totals["ent_c"] += ent_c
            updates += 1
    return {k: v / updates for k, v in totals.items()}


def train(
    scenario: Scenario,
    config: TrainConfig | None = None,
    seed: int | None = None,
    variant: PolicyVariant | None = None,
    callback=None,
) -> TrainResult:
    """Run the full training loop; deterministic given (scenario, config, seed)."""
    config = config or TrainConfig()
    variant = variant or PolicyVariant()
    config.validate(scenario)
    seed = scenario.seed if seed is None else int(seed)

    agent = MoPpoAgent(
        scenario.obs_dim,
        scenario.ris_elements,
        scenario.num_cells,
        config,
        variant,
        substream(seed, "init"),
    )
    optimizer = AdamOptimizer(agent.params, lr=config.learning_rate)
    env = AerialRisEnv(scenario, seed=seed)
    policy_rng = substream(seed, "policy")
    shuffle_rng = substream(seed, "shuffle")
    phase_rng = substream(seed, "random-phases") if variant.random_phases else None

    metrics: list[EpisodeMetrics] = []
    for episode in range(config.episodes):
        obs = env.reset()
        buffer: list[Transition] = []
        seg_start = 0
        cum_reward = 0.0
        sum_rates = 0.0
        qos_frac = 0.0
        safety = 0
        for t in range(scenario.slots_per_episode):
            raw = agent.act(obs, policy_rng)
            outcome = env.step(agent.hybrid_action(raw, phase_rng))
            buffer.append(
                Transition(
                    obs=obs,
                    raw_index=raw.index,
                    raw_continuous=raw.continuous,
                    logp_d_old=raw.logp_d,
                    logp_c_old=raw.logp_c,
                    reward=outcome.reward,
                    value=raw.value,
                    done=outcome.done,
                )
            )
            obs = outcome.next_obs
            cum_reward += outcome.reward
            sum_rates += outcome.rate_report.sum_rate
            qos_frac += outcome.qos_flags.mean()
            safety += int(outcome.safety_flag)

            segment_full = len(buffer) - seg_start == config.segment_len
            if segment_full or outcome.done:
                segment = buffer[seg_start:]
                bootstrap = 0.0 if outcome.done else float(agent.state_values(obs)[0])
                adv = advantage_nstep(
                    [tr.reward for tr in segment],
                    [tr.value for tr in segment],
                    bootstrap,
                    config.discount,
                )
                for tr, a in zip(segment, adv):
                    tr.advantage = float(a)
                    tr.target = float(a) + tr.value
                seg_start = len(buffer)

        stats = _update(agent, optimizer, buffer, config, shuffle_rng, episode)
        t_count = scenario.slots_per_episode
        record = EpisodeMetrics(
            episode=episode,
            cum_reward=cum_reward,
            mean_sum_rate=sum_rates / t_count,
            qos_violation_frac=qos_frac / t_count,
            safety_violations=safety,
            loss_discrete=stats["loss_d"],
            loss_continuous=stats["loss_c"],
            loss_value=stats["loss_v"],
            entropy_discrete=stats["ent_d"],
            entropy_continuous=stats["ent_c"],
        )
        metrics.append(record)
        if callback is not None:
            callback(record)
    return TrainResult(agent, optimizer, metrics, config, scenario, seed, variant)


# ---- evaluation ------------------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    mean_cum_reward: float
    mean_sum_rate: float
    episode_rewards: np.ndarray  # (episodes,)
    episode_sum_rates: np.ndarray  # (episodes,)
    qos_violation_frac: float
    safety_violations: float  # mean per episode
    trajectories: np.ndarray  # (episodes, T+1, 2) UAV xy per slot
    mean_trajectory: np.ndarray  # (T+1, 2)


def evaluate(
    agent: MoPpoAgent,
    scenario: Scenario,
    episodes: int = 10,
    deterministic: bool = True,
    seed: int | None = None,
) -> EvalReport:
    """Frozen-policy rollouts; greedy actions by default."""
    if agent.obs_dim != scenario.obs_dim:
        raise ValueError(
            f"agent expects observations of length {agent.obs_dim}, "
            f"scenario produces {scenario.obs_dim}"
        )
    if agent.num_elements != scenario.ris_elements or agent.num_cells != scenario.num_cells:
        raise ValueError(
            f"agent built for K={agent.num_elements}, I={agent.num_cells}; "
            f"scenario has K={scenario.ris_elements}, I={scenario.num_cells}"
        )
    if episodes < 1:
        raise ValueError(f"episodes must be >= 1, got {episodes}")
    seed = scenario.seed if seed is None else int(seed)
    env = AerialRisEnv(scenario, seed=seed)
    policy_rng = substream(seed, "eval-policy")
    phase_rng = (
        substream(seed, "eval-random-phases") if agent.variant.random_phases else None
    )

    t_count = scenario.slots_per_episode
    rewards = np.zeros(episodes)
    rates = np.zeros(episodes)
    qos = np.zeros(episodes)
    safety = np.zeros(episodes)
    trajectories = np.zeros((episodes, t_count + 1, 2))
    for ep in range(episodes):
        obs = env.reset()
        trajectories[ep, 0] = env.uav_xy
        for t in range(t_count):
            raw = agent.act(obs, policy_rng, deterministic=deterministic)
            outcome = env.step(agent.hybrid_action(raw, phase_rng))
            obs = outcome.next_obs
            rewards[ep] += outcome.reward
            rates[ep] += outcome.rate_report.sum_rate
            qos[ep] += outcome.qos_flags.mean()
            safety[ep] += int(outcome.safety_flag)
            trajectories[ep, t + 1] = env.uav_xy
        rates[ep] /= t_count
        qos[ep] /= t_count
    return EvalReport(
        mean_cum_reward=float(rewards.mean()),
        mean_sum_rate=float(rates.mean()),
        episode_rewards=rewards,
        episode_sum_rates=rates,
        qos_violation_frac=float(qos.mean()),
        safety_violations=float(safety.mean()),
        trajectories=trajectories,
        mean_trajectory=trajectories.mean(axis=0),
    )


# ---- persistence ------------------------------------------------------------------


def save_agent(
    path,
    result_or_agent,
    optimizer: AdamOptimizer | None = None,
    extra_meta: dict | None = None,
) -> None:
    """Write a checkpoint: parameters, Adam moments, dims, variant, hashes."""
    if isinstance(result_or_agent, TrainResult):
        agent = result_or_agent.agent
        optimizer = result_or_agent.optimizer if optimizer is None else optimizer
        meta_extra = {
            "seed": result_or_agent.seed,
            "episodes_trained": len(result_or_agent.metrics),
            "scenario_hash": config_hash(scenario_to_dict(result_or_agent.scenario)),
        }
    else:
        agent = result_or_agent
        meta_extra = {}
    arrays = {f"param.{k}": v for k, v in agent.params.items()}
    meta = {
        "format": 1,
        "obs_dim": agent.obs_dim,
        "num_elements": agent.num_elements,
        "num_cells": agent.num_cells,
        "cont_dim": agent.cont_dim,
        "hidden": agent.config.hidden_width,
        "critic_mode": agent.config.critic_mode,
        "variant": {
            "random_phases": agent.variant.random_phases,
            "hover_only": agent.variant.hover_only,
        },
        "config_hash": config_hash(vars(agent.config)),
    }
    meta.update(meta_extra)
    if optimizer is not None:
        arrays.update(optimizer.state_arrays())
        meta["adam_step"] = optimizer.step_count
        meta["learning_rate"] = optimizer.lr
    if extra_meta:
        meta.update(extra_meta)
    neural.save_checkpoint(path, arrays, meta)


def load_agent(path, config: TrainConfig | None = None) -> tuple[MoPpoAgent, dict]:
    """Rebuild an agent (and meta) from a checkpoint written by save_agent."""
    arrays, meta = neural.load_checkpoint(path)
    config = config or TrainConfig()
    config = replace(
        config, hidden_width=int(meta["hidden"]), critic_mode=str(meta["critic_mode"])
    )
    variant = PolicyVariant(
        random_phases=bool(meta["variant"]["random_phases"]),
        hover_only=bool(meta["variant"]["hover_only"]),
    )
    agent = MoPpoAgent(
        int(meta["obs_dim"]),
        int(meta["num_elements"]),
        int(meta["num_cells"]),
        config,
        variant,
        substream(0, "init"),
    )
    params = agent.params
    for key, value in arrays.items():
        if key.startswith("param."):
            name = key[len("param.") :]
            if name not in params:
                raise ValueError(f"checkpoint parameter {name!r} has no slot in the agent")
            if params[name].shape != value.shape:
                raise ValueError(
                    f"checkpoint parameter {name!r} shape {value.shape} != {params[name].shape}"
                )
            params[name][...] = value
    return agent, meta
