"""Sum-rate model for the two-cell CoMP-NOMA downlink through the RIS.

Each base station splits its unit transmit power between the shared cell-edge
message (fraction ``lambda_i``, strictly above one half) and its own cell-center
message.  Edge users are reached only through the RIS and combine the joint
transmission from all cells; center users first cancel the stronger edge
message via SIC and then decode their own, with the neighbouring cell's
transmission as residual interference.  All SINRs are normalized by the
per-station transmit power, so noise enters as 1/rho with rho the transmit
SNR.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .scenario import Scenario


@dataclass(frozen=True)
class RateReport:
    """Per-user SINRs and spectral efficiencies for one slot."""

    center_rates: np.ndarray  # (num_center,) bits/s/Hz
    edge_rates: np.ndarray  # (num_edge,) bits/s/Hz
    sum_rate: float
    sinr_center: np.ndarray  # (num_center,) own-message SINR after SIC
    sinr_sic: np.ndarray  # (num_center,) edge-message SINR during SIC
    sinr_edge: np.ndarray  # (num_edge,)

    def all_rates(self) -> np.ndarray:
        """Center users first, then edge users (matches QoS threshold order)."""
        return np.concatenate([self.center_rates, self.edge_rates])


def validate_splits(splits: np.ndarray, num_cells: int) -> np.ndarray:
    """Check power splits: one per cell, each strictly inside (0.5, 1)."""
    splits = np.asarray(splits, dtype=float)
    if splits.shape != (num_cells,):
        raise ValueError(
            f"power splits: expected shape ({num_cells},), got {splits.shape}"
        )
    if not np.all((splits > 0.5) & (splits < 1.0)):
        raise ValueError(
            f"power splits must lie strictly in (0.5, 1), got {splits.tolist()}"
        )
    return splits


def effective_channels(
    scenario: Scenario, real: ChannelRealization, phases: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Combine direct and reflected paths under the given phase profile.

    Returns (center (num_center,), edge (num_cells, num_edge), ici (num_center,))
    where `center` is each center user's serving-cell gain, `edge` holds each
    cell's reflected gain toward each edge user, and `ici` is the received
    inter-cell interference power at each center user.
    """
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (scenario.ris_elements,):
        raise ValueError(
            f"phases: expected shape ({scenario.ris_elements},), got {phases.shape}"
        )
    unit = np.exp(1j * phases)
    cell_of = scenario.center_cell_index()
    serving_bs_ris = real.bs_to_ris[cell_of]  # (num_center, K)
    h_center = real.direct_center + np.einsum(
        "uk,k,uk->u", real.ris_to_center, unit, serving_bs_ris
    )
    h_edge = real.direct_edge + np.einsum(
        "fk,k,ik->if", real.ris_to_edge, unit, real.bs_to_ris
    )
    ici = np.sum(np.abs(real.interference) ** 2, axis=1)
    return h_center, h_edge, ici


def rates(
    scenario: Scenario,
    real: ChannelRealization,
    phases: np.ndarray,
    splits: np.ndarray,
) -> RateReport:
    """NOMA spectral efficiencies for one slot."""
    splits = validate_splits(splits, scenario.num_cells)
    h_center, h_edge, ici = effective_channels(scenario, real, phases)
    inv_rho = 1.0 / scenario.transmit_snr
    cell_of = scenario.center_cell_index()
    lam = splits[cell_of]  # (num_center,)

    p_center = np.abs(h_center) ** 2
    p_edge = np.abs(h_edge) ** 2  # (num_cells, num_edge)

    # Edge users combine every cell's joint transmission; the center-message
    # fraction of each cell's power is unresolvable interference to them.
    signal = splits @ p_edge
    residual = (1.0 - splits) @ p_edge
    sinr_edge = signal / (residual + inv_rho)

    # Center users: SIC stage sees the edge message at full split power, the
    # own-message stage runs on what remains after cancellation.
    sinr_sic = lam * p_center / ((1.0 - lam) * p_center + ici + inv_rho)
    sinr_center = (1.0 - lam) * p_center / (ici + inv_rho)

    center_rates = np.log2(1.0 + sinr_center)
    edge_rates = np.log2(1.0 + sinr_edge)
    return RateReport(
        center_rates=center_rates,
        edge_rates=edge_rates,
        sum_rate=float(center_rates.sum() + edge_rates.sum()),
        sinr_center=sinr_center,
        sinr_sic=sinr_sic,
        sinr_edge=sinr_edge,
    )


def rates_oma(
    scenario: Scenario,
    real: ChannelRealization,
    phases: np.ndarray,
    splits: np.ndarray | None = None,
) -> RateReport:
    """Orthogonal baseline: two equal time slices instead of power-domain NOMA.

    Slice one carries the jointly-transmitted edge message at full power from
    every cell; slice two carries each cell's center message at full power,
    so inter-cell interference at center users is unchanged.  Power splits are
    accepted for interface parity but have no effect.
    """
    h_center, h_edge, ici = effective_channels(scenario, real, phases)
    inv_rho = 1.0 / scenario.transmit_snr

    p_center = np.abs(h_center) ** 2
    p_edge = np.abs(h_edge) ** 2

    sinr_edge = p_edge.sum(axis=0) / inv_rho
    sinr_center = p_center / (ici + inv_rho)

    center_rates = 0.5 * np.log2(1.0 + sinr_center)
    edge_rates = 0.5 * np.log2(1.0 + sinr_edge)
    return RateReport(
        center_rates=center_rates,
        edge_rates=edge_rates,
        sum_rate=float(center_rates.sum() + edge_rates.sum()),
        sinr_center=sinr_center,
        sinr_sic=np.zeros_like(sinr_center),
        sinr_edge=sinr_edge,
    )


def slot_rates(
    scenario: Scenario,
    real: ChannelRealization,
    phases: np.ndarray,
    splits: np.ndarray,
) -> RateReport:
    """Dispatch on the scenario's access mode ("noma" or "oma")."""
    if scenario.access_mode == "oma":
        return rates_oma(scenario, real, phases, splits)
    return rates(scenario, real, phases, splits)
