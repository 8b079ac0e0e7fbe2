"""Comparator policies and a small-scale exhaustive-search oracle.

The oracle enumerates a finite grid of UAV positions, quantized phase
profiles, and power splits (tied across cells) for a single slot's fading,
returning the best QoS-feasible sum rate.  Exhaustive search at full scale is
out of reach, so the grid is configurable and guarded by an enumeration
budget.  Because the search treats each slot independently and ignores
movement constraints between slots, it upper-bounds any causal policy whose
controls are restricted to the same grid.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import moppo, phy
from .channel import SlotFading, compose_realization, draw_slot_fading
from .scenario import Position3, Scenario, substream


@dataclass(frozen=True)
class OracleGrids:
    """Finite control grid: UAV xy positions, phase levels, tied power splits."""

    positions: np.ndarray  # (P, 2)
    phase_levels: int
    lambda_levels: np.ndarray  # (L,) values in (0.5, 1)
    budget: int = 2_000_000

    def combo_count(self, num_elements: int) -> int:
        return (
            self.phase_levels**num_elements
            * self.positions.shape[0]
            * self.lambda_levels.size
        )


def phase_grid(levels: int) -> np.ndarray:
    """Evenly spaced phases on [-pi, pi): -pi + 2*pi*i/levels."""
    if levels < 1:
        raise ValueError(f"need at least one phase level, got {levels}")
    return -np.pi + 2.0 * np.pi * np.arange(levels) / levels


def phase_combinations(num_elements: int, levels: int) -> np.ndarray:
    """All levels**K phase profiles, lexicographic with element 0 slowest."""
    grid = phase_grid(levels)
    idx = np.indices((levels,) * num_elements).reshape(num_elements, -1).T
    return grid[idx]


def validate_grids(scenario: Scenario, grids: OracleGrids) -> None:
    positions = np.asarray(grids.positions, dtype=float)
    if positions.ndim != 2 or positions.shape[1] != 2:
        raise ValueError(f"positions must be (P, 2), got {positions.shape}")
    for x, y in positions:
        if not scenario.inside_area(x, y):
            raise ValueError(f"grid position ({x}, {y}) lies outside the area")
        clearance = scenario.obstacle_clearance(x, y)
        if clearance.size and clearance.min() < scenario.d_min:
            raise ValueError(f"grid position ({x}, {y}) lies inside a forbidden zone")
    lam = np.asarray(grids.lambda_levels, dtype=float)
    if not np.all((lam > 0.5) & (lam < 1.0)):
        raise ValueError(f"lambda levels must lie in (0.5, 1), got {lam.tolist()}")
    count = grids.combo_count(scenario.ris_elements)
    if count > grids.budget:
        raise ValueError(
            f"enumeration of {count} combinations exceeds the budget {grids.budget}"
        )


@dataclass(frozen=True)
class OracleSlotResult:
    """Best grid controls for one slot's fading."""

    sum_rate: float  # best QoS-feasible value (unconstrained max if none feasible)
    feasible: bool
    best_any: float  # unconstrained grid maximum
    position: np.ndarray  # (2,)
    phases: np.ndarray  # (K,)
    lam: float
    position_index: int
    phase_index: int
    lambda_index: int
    upper_bound: float  # continuous-phase alignment bound, same position/lambda grid


def _alignment_upper_bound(
    scenario: Scenario, real, lambda_levels: np.ndarray
) -> float:
    """Sum rate with every |effective channel| replaced by its alignment bound.

    Per link, |sum_k a_k e^{j theta_k} b_k| <= sum_k |a_k||b_k|; maximizing
    each user's magnitude independently (phases cannot generally do this
    simultaneously) and taking the best tied split gives an upper bound for
    any phase profile on this position.
    """
    cell_of = scenario.center_cell_index()
    amp_center = np.abs(real.direct_center) + np.sum(
        np.abs(real.ris_to_center) * np.abs(real.bs_to_ris[cell_of]), axis=1
    )
    amp_edge = np.sum(
        np.abs(real.ris_to_edge)[None, :, :] * np.abs(real.bs_to_ris)[:, None, :],
        axis=2,
    )  # (num_cells, num_edge)
    ici = np.sum(np.abs(real.interference) ** 2, axis=1)
    inv_rho = 1.0 / scenario.transmit_snr
    p_center = amp_center**2
    p_edge_total = (amp_edge**2).sum(axis=0)
    best = -np.inf
    for lam in lambda_levels:
        center = np.log2(1.0 + (1.0 - lam) * p_center / (ici + inv_rho))
        edge = np.log2(
            1.0 + lam * p_edge_total / ((1.0 - lam) * p_edge_total + inv_rho)
        )
        best = max(best, float(center.sum() + edge.sum()))
    return best


def oracle_slot_max(
    scenario: Scenario, fading: SlotFading, grids: OracleGrids
) -> OracleSlotResult:
    """Enumerate the grid for one slot; deterministic lowest-index tie-break.

    The enumeration order is position-major, then lambda, then phase profile;
    strict improvement is required to displace an earlier candidate.
    """
    validate_grids(scenario, grids)
    combos = phase_combinations(scenario.ris_elements, grids.phase_levels)
    unit = np.exp(1j * combos)  # (M, K)
    lam_grid = np.asarray(grids.lambda_levels, dtype=float)
    thresholds = scenario.qos_thresholds()
    n_center = scenario.num_center_users
    cell_of = scenario.center_cell_index()
    inv_rho = 1.0 / scenario.transmit_snr

    best = None
    best_key = (-np.inf, False)
    best_any = -np.inf
    upper = -np.inf
    for p_idx, (x, y) in enumerate(np.asarray(grids.positions, dtype=float)):
        pos = Position3(float(x), float(y), scenario.uav_altitude)
        real = compose_realization(scenario, pos, fading)
        upper = max(upper, _alignment_upper_bound(scenario, real, lam_grid))

        prod_center = real.ris_to_center * real.bs_to_ris[cell_of]  # (u, K)
        h_center = real.direct_center[None, :] + unit @ prod_center.T  # (M, u)
        p_center = np.abs(h_center) ** 2
        # (i, f, K) -> (M, i, f)
        prod_edge = real.ris_to_edge[None, :, :] * real.bs_to_ris[:, None, :]
        h_edge = np.einsum("mk,ifk->mif", unit, prod_edge)
        p_edge_total = (np.abs(h_edge) ** 2).sum(axis=1)  # (M, f)
        ici = np.sum(np.abs(real.interference) ** 2, axis=1)

        for l_idx, lam in enumerate(lam_grid):
            center_rates = np.log2(1.0 + (1.0 - lam) * p_center / (ici + inv_rho))
            edge_rates = np.log2(
                1.0 + lam * p_edge_total / ((1.0 - lam) * p_edge_total + inv_rho)
            )
            sums = center_rates.sum(axis=1) + edge_rates.sum(axis=1)  # (M,)
            feas = np.all(center_rates > thresholds[:n_center], axis=1) & np.all(
                edge_rates > thresholds[n_center:], axis=1
            )
            best_any = max(best_any, float(sums.max()))
            # Prefer feasible; within a class, higher sum rate; ties keep the
            # earliest (position, phase, lambda) index.
            order = np.where(feas, sums, -np.inf)
            m_idx = int(np.argmax(order)) if feas.any() else int(np.argmax(sums))
            cand_feas = bool(feas[m_idx])
            cand_rate = float(sums[m_idx])
            key = (cand_rate, cand_feas)
            if (cand_feas and not best_key[1]) or (
                cand_feas == best_key[1] and cand_rate > best_key[0]
            ):
                best_key = key
                best = (p_idx, m_idx, l_idx, cand_rate, cand_feas, np.array([x, y]))
    p_idx, m_idx, l_idx, rate, feas, xy = best
    return OracleSlotResult(
        sum_rate=rate,
        feasible=feas,
        best_any=best_any,
        position=xy,
        phases=combos[m_idx].copy(),
        lam=float(lam_grid[l_idx]),
        position_index=p_idx,
        phase_index=m_idx,
        lambda_index=l_idx,
        upper_bound=upper,
    )


@dataclass(frozen=True)
class OracleRun:
    slots: list[OracleSlotResult]
    mean_sum_rate: float
    mean_upper_bound: float
    feasible_fraction: float


def run_oracle(
    scenario: Scenario, grids: OracleGrids, slots: int, seed: int | None = None
) -> OracleRun:
    """Per-slot exhaustive search over `slots` independent fading draws."""
    if slots < 1:
        raise ValueError(f"slots must be >= 1, got {slots}")
    seed = scenario.seed if seed is None else int(seed)
    rng = substream(seed, "oracle")
    results = [
        oracle_slot_max(scenario, draw_slot_fading(scenario, rng), grids)
        for _ in range(slots)
    ]
    return OracleRun(
        slots=results,
        mean_sum_rate=float(np.mean([r.sum_rate for r in results])),
        mean_upper_bound=float(np.mean([r.upper_bound for r in results])),
        feasible_fraction=float(np.mean([r.feasible for r in results])),
    )


# ---- projecting learned controls onto the oracle grid ---------------------------


def project_to_grid(
    scenario: Scenario,
    grids: OracleGrids,
    xy: np.ndarray,
    phases: np.ndarray,
    splits: np.ndarray,
) -> tuple[int, np.ndarray, int]:
    """Nearest grid point: Euclidean for position, circular for each phase,
    nearest tied lambda for the mean split."""
    positions = np.asarray(grids.positions, dtype=float)
    p_idx = int(np.argmin(np.linalg.norm(positions - np.asarray(xy)[None, :], axis=1)))
    grid = phase_grid(grids.phase_levels)
    diff = np.angle(np.exp(1j * (np.asarray(phases)[:, None] - grid[None, :])))
    phase_idx = np.argmin(np.abs(diff), axis=1)
    lam_idx = int(
        np.argmin(np.abs(np.asarray(grids.lambda_levels) - float(np.mean(splits))))
    )
    return p_idx, phase_idx, lam_idx


def grid_projected_rate(
    scenario: Scenario,
    fading: SlotFading,
    grids: OracleGrids,
    xy: np.ndarray,
    phases: np.ndarray,
    splits: np.ndarray,
) -> float:
    """Sum rate the controls achieve after snapping them onto the grid."""
    p_idx, phase_idx, lam_idx = project_to_grid(scenario, grids, xy, phases, splits)
    pos = Position3(
        float(grids.positions[p_idx][0]),
        float(grids.positions[p_idx][1]),
        scenario.uav_altitude,
    )
    real = compose_realization(scenario, pos, fading)
    snapped_phases = phase_grid(grids.phase_levels)[phase_idx]
    lam = float(grids.lambda_levels[lam_idx])
    report = phy.rates(
        scenario, real, snapped_phases, np.full(scenario.num_cells, lam)
    )
    return report.sum_rate


# ---- training-based comparators ---------------------------------------------------


def run_random_ps(
    scenario: Scenario, config: moppo.TrainConfig, seed: int | None = None
) -> moppo.TrainResult:
    """MO-PPO with phases drawn uniformly per slot; learns maneuver + splits."""
    return train_variant(scenario, config, moppo.PolicyVariant(random_phases=True), seed)


def run_hover(
    scenario: Scenario, config: moppo.TrainConfig, seed: int | None = None
) -> moppo.TrainResult:
    """MO-PPO with the UAV pinned at its initial position."""
    return train_variant(scenario, config, moppo.PolicyVariant(hover_only=True), seed)


def run_oma(
    scenario: Scenario, config: moppo.TrainConfig, seed: int | None = None
) -> moppo.TrainResult:
    """Full MO-PPO but on the orthogonal-access rate model."""
    return train_variant(
        replace(scenario, access_mode="oma"), config, moppo.PolicyVariant(), seed
    )


def train_variant(
    scenario: Scenario,
    config: moppo.TrainConfig,
    variant: moppo.PolicyVariant,
    seed: int | None = None,
) -> moppo.TrainResult:
    return moppo.train(scenario, config, seed=seed, variant=variant)
