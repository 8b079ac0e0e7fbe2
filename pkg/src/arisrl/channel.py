"""Per-slot channel realizations: fading draws, path loss, RIS composition.

Direct BS->user links are Rayleigh; BS->RIS and RIS->user links are Rician
with a line-of-sight steering component set by the elevation angle toward the
RIS.  Fading is redrawn independently every slot.  Drawing the small-scale
coefficients (``draw_slot_fading``) is separated from applying geometry
(``compose_realization``) so the same fading can be re-evaluated at candidate
UAV positions, e.g. by the grid-search oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .scenario import Position3, Scenario

_SQRT_HALF = math.sqrt(0.5)


def wrap_phase(theta):
    """Map any angle (array or scalar) into [-pi, pi)."""
    return np.mod(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi


def path_gain(d: float, alpha: float, rho_o: float) -> float:
    """Large-scale power gain rho_o / d^alpha, distance clamped to >= 1 m."""
    return rho_o / max(d, 1.0) ** alpha


def draw_rayleigh(rng: np.random.Generator, size=None) -> np.ndarray | complex:
    """Zero-mean circularly-symmetric complex Gaussian with unit variance."""
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return (re + 1j * im) * _SQRT_HALF


def steering_vector(num_elements: int, omega: float) -> np.ndarray:
    """Unit-modulus array response for arrival angle omega (half-wave ULA)."""
    if num_elements < 1:
        raise ValueError(f"need at least one element, got {num_elements}")
    k = np.arange(num_elements)
    return np.exp(1j * np.pi * math.sin(omega) * k)


def draw_rician(
    rng: np.random.Generator,
    num_elements: int,
    omega: float,
    kappa: float,
    gain: float,
) -> np.ndarray:
    """Rician fading vector: LoS steering + Rayleigh scatter, scaled to `gain`.

    kappa is the linear Rician factor (power in the LoS component over power
    in the scattered one); gain is the large-scale power ratio.
    """
    if kappa < 0:
        raise ValueError(f"rician factor must be >= 0, got {kappa}")
    los = steering_vector(num_elements, omega)
    nlos = draw_rayleigh(rng, num_elements)
    mix = math.sqrt(kappa / (1.0 + kappa)) * los + math.sqrt(1.0 / (1.0 + kappa)) * nlos
    return math.sqrt(gain) * mix


def cascaded_gain(h_ru: np.ndarray, phases: np.ndarray, h_br: np.ndarray) -> complex:
    """Effective BS->RIS->user scalar: sum_k h_ru[k] e^{j theta_k} h_br[k]."""
    h_ru = np.asarray(h_ru)
    h_br = np.asarray(h_br)
    phases = np.asarray(phases, dtype=float)
    if not (len(h_ru) == len(phases) == len(h_br)):
        raise ValueError(
            f"length mismatch: ris->user {len(h_ru)}, phases {len(phases)}, bs->ris {len(h_br)}"
        )
    return complex(np.sum(h_ru * np.exp(1j * phases) * h_br))


@dataclass(frozen=True)
class SlotFading:
    """Unit-variance small-scale draws for one slot, geometry-free.

    Shapes: direct/interference over flattened center users (cell-major),
    NLoS matrices over (link, RIS element).
    """

    direct_center_unit: np.ndarray  # (num_center,)
    interference_unit: np.ndarray  # (num_center, num_cells); own column unused
    nlos_bs_ris: np.ndarray  # (num_cells, K)
    nlos_ris_center: np.ndarray  # (num_center, K)
    nlos_ris_edge: np.ndarray  # (num_edge, K)


@dataclass(frozen=True)
class ChannelRealization:
    """All complex gains for one slot at one UAV position.

    Direct BS->edge links are blocked and therefore identically zero.
    """

    direct_center: np.ndarray  # (num_center,) serving-BS link
    direct_edge: np.ndarray  # (num_cells, num_edge), all zeros
    interference: np.ndarray  # (num_center, num_cells), own column zero
    bs_to_ris: np.ndarray  # (num_cells, K)
    ris_to_center: np.ndarray  # (num_center, K)
    ris_to_edge: np.ndarray  # (num_edge, K)


class _Geometry:
    """Static per-scenario arrays; only the RIS links depend on UAV position."""

    def __init__(self, scenario: Scenario):
        exp = scenario.exponents
        rho_o = scenario.rho_o_linear
        self.bs_xyz = np.array([p.as_array() for p in scenario.bs_positions])
        self.center_xyz = np.array(
            [p.as_array() for p in scenario.center_positions_flat()]
        ).reshape(-1, 3)
        self.edge_xyz = np.array(
            [p.as_array() for p in scenario.edge_user_positions]
        ).reshape(-1, 3)
        self.center_cell = scenario.center_cell_index()

        n_center = self.center_xyz.shape[0]
        n_cells = self.bs_xyz.shape[0]
        self.direct_amp = np.zeros(n_center)
        self.interf_amp = np.zeros((n_center, n_cells))
        for u in range(n_center):
            for i in range(n_cells):
                d = float(np.linalg.norm(self.bs_xyz[i] - self.center_xyz[u]))
                if i == self.center_cell[u]:
                    self.direct_amp[u] = math.sqrt(path_gain(d, exp.direct, rho_o))
                else:
                    self.interf_amp[u, i] = math.sqrt(
                        path_gain(d, exp.interference, rho_o)
                    )


@lru_cache(maxsize=32)
def _geometry(scenario: Scenario) -> _Geometry:
    return _Geometry(scenario)


def draw_slot_fading(scenario: Scenario, rng: np.random.Generator) -> SlotFading:
    """Draw every small-scale coefficient needed for one slot, fixed order."""
    n_center = scenario.num_center_users
    n_edge = scenario.num_edge_users
    n_cells = scenario.num_cells
    k = scenario.ris_elements
    return SlotFading(
        direct_center_unit=draw_rayleigh(rng, n_center),
        interference_unit=draw_rayleigh(rng, (n_center, n_cells)),
        nlos_bs_ris=draw_rayleigh(rng, (n_cells, k)),
        nlos_ris_center=draw_rayleigh(rng, (n_center, k)),
        nlos_ris_edge=draw_rayleigh(rng, (n_edge, k)),
    )


def _rician_matrix(
    scenario: Scenario,
    endpoints: np.ndarray,
    uav: np.ndarray,
    nlos: np.ndarray,
) -> np.ndarray:
    """Rician link matrix between the UAV-mounted RIS and `endpoints`.

    The LoS angle is the elevation from the lower endpoint toward the RIS:
    omega = arcsin(height difference / 3-D distance).
    """
    if endpoints.shape[0] == 0:
        return np.zeros((0, scenario.ris_elements), dtype=complex)
    delta = uav[None, :] - endpoints
    dist = np.linalg.norm(delta, axis=1)
    gain = scenario.rho_o_linear / np.maximum(dist, 1.0) ** scenario.exponents.reflect
    sin_omega = np.clip(delta[:, 2] / np.maximum(dist, 1e-12), -1.0, 1.0)
    k = np.arange(scenario.ris_elements)
    los = np.exp(1j * np.pi * sin_omega[:, None] * k[None, :])
    kap = scenario.rician_k_linear
    mix = math.sqrt(kap / (1.0 + kap)) * los + math.sqrt(1.0 / (1.0 + kap)) * nlos
    return np.sqrt(gain)[:, None] * mix


def compose_realization(
    scenario: Scenario, uav_pos: Position3, fading: SlotFading
) -> ChannelRealization:
    """Apply path loss and LoS geometry at `uav_pos` to drawn fading."""
    geo = _geometry(scenario)
    uav = uav_pos.as_array()
    return ChannelRealization(
        direct_center=geo.direct_amp * fading.direct_center_unit,
        direct_edge=np.zeros((scenario.num_cells, scenario.num_edge_users), dtype=complex),
        interference=geo.interf_amp * fading.interference_unit,
        bs_to_ris=_rician_matrix(scenario, geo.bs_xyz, uav, fading.nlos_bs_ris),
        ris_to_center=_rician_matrix(scenario, geo.center_xyz, uav, fading.nlos_ris_center),
        ris_to_edge=_rician_matrix(scenario, geo.edge_xyz, uav, fading.nlos_ris_edge),
    )


def realize_slot(
    scenario: Scenario, uav_pos: Position3, rng: np.random.Generator
) -> ChannelRealization:
    """Draw one slot's fading and compose it at the given UAV position."""
    if abs(uav_pos.z - scenario.uav_altitude) > 1e-9:
        raise ValueError(
            f"UAV height {uav_pos.z} differs from configured altitude {scenario.uav_altitude}"
        )
    return compose_realization(scenario, uav_pos, draw_slot_fading(scenario, rng))
