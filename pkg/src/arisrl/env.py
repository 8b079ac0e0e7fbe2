"""Episodic control environment around the channel and rate models.

One episode is a fixed number of slots.  Each slot the agent picks a hybrid
action: a discrete xy maneuver for the RIS-carrying UAV plus continuous RIS
phases and per-cell power splits.  Moves that would leave the service area or
enter an obstacle's protection radius are cancelled and penalized.  Fading is
redrawn every slot from a generator that persists across episodes, so
consecutive episodes see fresh channels while the whole run stays a pure
function of the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import phy
from .channel import (
    SlotFading,
    compose_realization,
    draw_slot_fading,
    wrap_phase,
)
from .scenario import (
    HOVER_INDEX,
    MANEUVER_DELTAS,
    Position3,
    Scenario,
    substream,
)

_SPLIT_EPS = 1e-12


@dataclass(frozen=True)
class HybridAction:
    """Decoded action: maneuver index, RIS phases (rad), power splits."""

    maneuver: int
    phases: np.ndarray  # (K,) in [-pi, pi)
    splits: np.ndarray  # (num_cells,) in (0.5, 1)


@dataclass(frozen=True)
class StepOutcome:
    next_obs: np.ndarray
    reward: float
    rate_report: phy.RateReport
    qos_flags: np.ndarray  # (num_users,) 1.0 where the minimum rate is not met
    safety_flag: bool  # True when the attempted move was cancelled
    done: bool


def shaped_reward(
    sum_rate: float,
    qos_flags: np.ndarray,
    safety_violation: bool,
    penalty_viol: float,
) -> float:
    """Sum rate scaled down by the violated-user fraction, minus the safety fine."""
    qos_flags = np.asarray(qos_flags, dtype=float)
    reward = sum_rate * (1.0 - qos_flags.mean())
    if safety_violation:
        reward -= penalty_viol
    return float(reward)


def decode_action(
    raw_index: int, raw_continuous: np.ndarray, num_elements: int, num_cells: int
) -> HybridAction:
    """Map a raw policy output onto the feasible action set.

    Phases are squashed through pi*tanh and wrapped; splits through a sigmoid
    shifted into (0.5, 1), clipped a hair inside the open interval so float
    saturation can never produce an exactly-closed endpoint.  A raw zero
    vector decodes to zero phases and even 0.75 splits.
    """
    raw_index = int(raw_index)
    if not 0 <= raw_index < len(MANEUVER_DELTAS):
        raise ValueError(f"maneuver index out of range: {raw_index}")
    raw_continuous = np.asarray(raw_continuous, dtype=float)
    expected = num_elements + num_cells
    if raw_continuous.shape != (expected,):
        raise ValueError(
            f"continuous action: expected shape ({expected},), got {raw_continuous.shape}"
        )
    phases = wrap_phase(np.pi * np.tanh(raw_continuous[:num_elements]))
    raw_splits = raw_continuous[num_elements:]
    # Logistic via exp of a non-positive argument only, so it never overflows.
    e = np.exp(-np.abs(raw_splits))
    sig = np.where(raw_splits >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    splits = np.clip(0.5 + 0.5 * sig, 0.5 + _SPLIT_EPS, 1.0 - _SPLIT_EPS)
    return HybridAction(maneuver=raw_index, phases=phases, splits=splits)


class AerialRisEnv:
    """Two-cell downlink with an aerial RIS, fixed-length episodes."""

    def __init__(self, scenario: Scenario, seed: int | None = None):
        self.scenario = scenario
        self._rng = substream(scenario.seed if seed is None else seed, "env-channel")
        self.last_fading: SlotFading | None = None
        self.reset()

    # ---- episode control -----------------------------------------------

    def reset(self, reseed: int | None = None) -> np.ndarray:
        """Start a new episode; fading continues from the same stream.

        Pass `reseed` to rewind the channel stream instead, which makes two
        resets byte-identical (used for paired comparisons and replays).
        """
        if reseed is not None:
            self._rng = substream(reseed, "env-channel")
        s = self.scenario
        self.uav_xy = np.array([s.uav_initial.x, s.uav_initial.y])
        self.slot = 0
        self.done = False
        self._splits = np.full(s.num_cells, 0.75)
        # Seed the rate fields of the first observation with a neutral slot:
        # zero phases, even splits, current (initial) position.
        report = self._realize_and_rate(np.zeros(s.ris_elements), self._splits)
        self._last_rates = report.all_rates()
        return self.observe()

    def _uav_position(self) -> Position3:
        return Position3(
            float(self.uav_xy[0]), float(self.uav_xy[1]), self.scenario.uav_altitude
        )

    def _realize_and_rate(
        self, phases: np.ndarray, splits: np.ndarray
    ) -> phy.RateReport:
        self.last_fading = draw_slot_fading(self.scenario, self._rng)
        real = compose_realization(self.scenario, self._uav_position(), self.last_fading)
        return phy.slot_rates(self.scenario, real, phases, splits)

    def step(self, action: HybridAction) -> StepOutcome:
        if self.done:
            raise RuntimeError("episode finished; call reset() before stepping again")
        s = self.scenario
        dx, dy = MANEUVER_DELTAS[action.maneuver]
        candidate = self.uav_xy + s.uav_step * np.array([dx, dy], dtype=float)

        clearance = s.obstacle_clearance(candidate[0], candidate[1])
        violates = not s.inside_area(candidate[0], candidate[1]) or bool(
            clearance.size and clearance.min() < s.d_min
        )
        if not violates:
            self.uav_xy = candidate

        report = self._realize_and_rate(action.phases, action.splits)
        self._splits = np.asarray(action.splits, dtype=float)
        self._last_rates = report.all_rates()

        # A user counts as violated when its rate does not exceed the minimum.
        qos_flags = (self._last_rates <= s.qos_thresholds()).astype(float)
        reward = shaped_reward(report.sum_rate, qos_flags, violates, s.penalty_viol)

        self.slot += 1
        self.done = self.slot >= s.slots_per_episode
        return StepOutcome(
            next_obs=self.observe(),
            reward=reward,
            rate_report=report,
            qos_flags=qos_flags,
            safety_flag=violates,
            done=self.done,
        )

    # ---- observation ------------------------------------------------------

    def observe(self) -> np.ndarray:
        """[uav xy, obstacle distances, power splits, previous rates]."""
        s = self.scenario
        clearance = s.obstacle_clearance(self.uav_xy[0], self.uav_xy[1])
        obs = np.concatenate(
            [self.uav_xy, clearance, self._splits, self._last_rates]
        )
        if not s.normalize_obs:
            return obs
        scale = np.concatenate(
            [
                np.full(2, s.area_half_extent),
                np.full(s.num_obstacles, 2.0 * np.sqrt(2.0) * s.area_half_extent),
                np.ones(s.num_cells),
                np.full(s.num_users, s.rate_scale),
            ]
        )
        return obs / scale


def hover_action(scenario: Scenario, phases: np.ndarray, splits: np.ndarray) -> HybridAction:
    """Convenience for baselines that never move the UAV."""
    return HybridAction(maneuver=HOVER_INDEX, phases=phases, splits=splits)
