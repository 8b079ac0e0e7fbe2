"""Experiment configuration: geometry, radio parameters, RL knobs, seeding.

Everything downstream (channel draws, rate computation, the environment, the
trainer) reads from a single immutable ``Scenario``.  Units are fixed at the
config boundary: lengths in meters, powers in dBm, gains in dB, rates in
bits/s/Hz.  Internally all power quantities are converted once to linear
milliwatts / amplitude gains.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields

import numpy as np
import yaml

MANEUVER_NAMES = ("left", "right", "down", "up", "hover")
MANEUVER_DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1), (0, 0))
HOVER_INDEX = 4


class ScenarioError(ValueError):
    """Raised when a config document fails validation."""


def dbm_to_linear(p_dbm: float) -> float:
    """dBm -> milliwatts."""
    return 10.0 ** (p_dbm / 10.0)


def db_to_linear(g_db: float) -> float:
    """dB -> dimensionless power ratio."""
    return 10.0 ** (g_db / 10.0)


def linear_to_dbm(p_mw: float) -> float:
    return 10.0 * math.log10(p_mw)


def linear_to_db(ratio: float) -> float:
    return 10.0 * math.log10(ratio)


@dataclass(frozen=True)
class Position3:
    """A point in meters; z is height above ground."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for c in (self.x, self.y, self.z):
            if not math.isfinite(c):
                raise ScenarioError(f"position coordinate must be finite, got {c!r}")
        if self.z < 0:
            raise ScenarioError(f"position height must be >= 0, got z={self.z}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


def distance(p: Position3, q: Position3) -> float:
    """Euclidean distance in meters."""
    return math.dist((p.x, p.y, p.z), (q.x, q.y, q.z))


@dataclass(frozen=True)
class PathlossExponents:
    direct: float = 3.0
    reflect: float = 2.2
    interference: float = 3.5


# Default entity placement for the two-cell layout: BSs on the diagonal of a
# 150 m x 150 m arena, one center user near each BS, one edge user between the
# cells, two obstacles off the UAV's start.  All overridable via config.
_DEFAULT_BS = ((-35.0, -35.0, 25.0), (35.0, 35.0, 25.0))
_DEFAULT_CENTER_USERS = (((-18.0, -25.0, 0.0),), ((22.0, 18.0, 0.0),))
_DEFAULT_EDGE_USERS = ((5.0, -10.0, 0.0),)
_DEFAULT_OBSTACLES = ((-15.0, 25.0, 30.0), (25.0, -20.0, 30.0))


@dataclass(frozen=True)
class Scenario:
    """Immutable description of one experiment.

    Geometry, propagation constants, QoS thresholds and the episodic-control
    parameters live together so that a single object (and its hash) pins down
    a run completely.
    """

    area_half_extent: float = 75.0
    bs_positions: tuple[Position3, ...] = ()
    center_user_positions: tuple[tuple[Position3, ...], ...] = ()
    edge_user_positions: tuple[Position3, ...] = ()
    obstacle_positions: tuple[Position3, ...] = ()
    uav_initial: Position3 = Position3(0.0, 35.0, 50.0)
    uav_altitude: float = 50.0
    uav_step: float = 3.0
    d_min: float = 10.0
    slots_per_episode: int = 250
    ris_elements: int = 120
    pathloss_ref_db: float = -30.0
    exponents: PathlossExponents = PathlossExponents()
    rician_k_db: float = 3.0
    tx_power_dbm: float = 20.0
    bandwidth_hz: float = 1.0e7
    noise_dbm: float = -104.0
    qos_min_center: float = 0.5
    qos_min_edge: float = 0.2
    penalty_viol: float = 7.0
    seed: int = 0
    # Artifact switches (not physical parameters).
    obstacle_mode: str = "3d"  # "3d": printed safety norm; "horizontal": xy-plane disk
    access_mode: str = "noma"  # "noma" or "oma" rate model
    normalize_obs: bool = True
    rate_scale: float = 10.0  # bits/s/Hz scale used when normalizing observed rates
    slot_duration_s: float = 1.0  # metadata only, never used numerically

    # ---- derived quantities -------------------------------------------------

    @property
    def num_cells(self) -> int:
        return len(self.bs_positions)

    @property
    def num_center_users(self) -> int:
        return sum(len(c) for c in self.center_user_positions)

    @property
    def num_edge_users(self) -> int:
        return len(self.edge_user_positions)

    @property
    def num_users(self) -> int:
        return self.num_center_users + self.num_edge_users

    @property
    def num_obstacles(self) -> int:
        return len(self.obstacle_positions)

    @property
    def obs_dim(self) -> int:
        """Observation length: uav xy + obstacle distances + splits + rates."""
        return 2 + self.num_obstacles + self.num_cells + self.num_users

    @property
    def action_dim(self) -> int:
        """Hybrid action vector length: xy maneuver + K phases + I splits."""
        return 2 + self.ris_elements + self.num_cells

    @property
    def rho_o_linear(self) -> float:
        """Reference path gain at 1 m as a power ratio."""
        return db_to_linear(self.pathloss_ref_db)

    @property
    def rician_k_linear(self) -> float:
        return db_to_linear(self.rician_k_db)

    @property
    def tx_power_mw(self) -> float:
        return dbm_to_linear(self.tx_power_dbm)

    @property
    def noise_mw(self) -> float:
        return dbm_to_linear(self.noise_dbm)

    @property
    def transmit_snr(self) -> float:
        """Per-BS transmit power over noise power (linear ratio)."""
        return self.tx_power_mw / self.noise_mw

    def center_cell_index(self) -> np.ndarray:
        """Serving-cell index for each center user, cell-major order."""
        idx = []
        for i, users in enumerate(self.center_user_positions):
            idx.extend([i] * len(users))
        return np.array(idx, dtype=int)

    def center_positions_flat(self) -> tuple[Position3, ...]:
        return tuple(p for cell in self.center_user_positions for p in cell)

    def qos_thresholds(self) -> np.ndarray:
        """Per-user minimum rates, center users first then edge users."""
        return np.array(
            [self.qos_min_center] * self.num_center_users
            + [self.qos_min_edge] * self.num_edge_users
        )

    def inside_area(self, x: float, y: float) -> bool:
        a = self.area_half_extent
        return -a <= x <= a and -a <= y <= a

    def obstacle_clearance(self, x: float, y: float) -> np.ndarray:
        """Distance from UAV at (x, y, altitude) to each obstacle point.

        Uses the full 3-D norm in "3d" mode, the xy-plane distance in
        "horizontal" mode; the safety constraint and the observation use the
        same measure.
        """
        pos = np.array([x, y, self.uav_altitude])
        obs = np.array([[o.x, o.y, o.z] for o in self.obstacle_positions])
        if obs.size == 0:
            return np.zeros(0)
        if self.obstacle_mode == "horizontal":
            return np.hypot(obs[:, 0] - pos[0], obs[:, 1] - pos[1])
        return np.linalg.norm(obs - pos, axis=1)


# ---- config loading ---------------------------------------------------------

_POSITION_KEYS = {
    "bs_positions",
    "edge_user_positions",
    "obstacle_positions",
}
_SCALAR_KEYS = {
    "area_half_extent": float,
    "uav_altitude": float,
    "uav_step": float,
    "d_min": float,
    "slots_per_episode": int,
    "ris_elements": int,
    "pathloss_ref_db": float,
    "rician_k_db": float,
    "tx_power_dbm": float,
    "bandwidth_hz": float,
    "noise_dbm": float,
    "qos_min_center": float,
    "qos_min_edge": float,
    "penalty_viol": float,
    "seed": int,
    "obstacle_mode": str,
    "access_mode": str,
    "normalize_obs": bool,
    "rate_scale": float,
    "slot_duration_s": float,
}
_KNOWN_KEYS = (
    set(_SCALAR_KEYS)
    | _POSITION_KEYS
    | {"center_user_positions", "uav_initial", "exponents"}
)


def _as_position(value, key: str) -> Position3:
    if isinstance(value, Position3):
        return value
    try:
        x, y, z = (float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{key}: expected [x, y, z], got {value!r}") from exc
    return Position3(x, y, z)


def make_scenario(overrides: dict | None = None) -> Scenario:
    """Build and validate a Scenario from a (possibly empty) override mapping.

    Unknown keys are rejected so that typos never silently fall back to
    defaults.
    """
    overrides = dict(overrides or {})
    unknown = set(overrides) - _KNOWN_KEYS
    if unknown:
        raise ScenarioError(f"unknown config keys: {sorted(unknown)}")

    kwargs: dict = {}
    for key, cast in _SCALAR_KEYS.items():
        if key in overrides:
            try:
                kwargs[key] = cast(overrides[key])
            except (TypeError, ValueError) as exc:
                raise ScenarioError(f"{key}: cannot interpret {overrides[key]!r}") from exc

    for key, default in (
        ("bs_positions", _DEFAULT_BS),
        ("edge_user_positions", _DEFAULT_EDGE_USERS),
        ("obstacle_positions", _DEFAULT_OBSTACLES),
    ):
        raw = overrides.get(key, default)
        kwargs[key] = tuple(_as_position(p, key) for p in raw)

    raw_centers = overrides.get("center_user_positions", _DEFAULT_CENTER_USERS)
    kwargs["center_user_positions"] = tuple(
        tuple(_as_position(p, "center_user_positions") for p in cell)
        for cell in raw_centers
    )

    kwargs["uav_initial"] = _as_position(
        overrides.get("uav_initial", (0.0, 35.0, 50.0)), "uav_initial"
    )
    if "uav_altitude" not in overrides:
        kwargs["uav_altitude"] = kwargs["uav_initial"].z

    if "exponents" in overrides:
        exp = overrides["exponents"]
        if not isinstance(exp, dict):
            raise ScenarioError("exponents: expected a mapping with direct/reflect/interference")
        bad = set(exp) - {"direct", "reflect", "interference"}
        if bad:
            raise ScenarioError(f"exponents: unknown keys {sorted(bad)}")
        kwargs["exponents"] = PathlossExponents(
            direct=float(exp.get("direct", 3.0)),
            reflect=float(exp.get("reflect", 2.2)),
            interference=float(exp.get("interference", 3.5)),
        )

    # Thermal noise over the configured bandwidth unless given explicitly.
    if "noise_dbm" not in overrides:
        bw = kwargs.get("bandwidth_hz", 1.0e7)
        kwargs["noise_dbm"] = -174.0 + 10.0 * math.log10(bw)

    scenario = Scenario(**kwargs)
    validate_scenario(scenario)
    return scenario


def load_scenario(config_text: str) -> Scenario:
    """Parse a YAML config document and return a validated Scenario."""
    try:
        doc = yaml.safe_load(config_text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"config parse failure: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ScenarioError("config document must be a key-value mapping")
    return make_scenario(doc)


def validate_scenario(s: Scenario) -> None:
    if s.num_cells < 2:
        raise ScenarioError(f"bs_positions: need at least 2 cells, got {s.num_cells}")
    if len(s.center_user_positions) != s.num_cells:
        raise ScenarioError(
            "center_user_positions: need one (possibly empty) list per cell, "
            f"got {len(s.center_user_positions)} for {s.num_cells} cells"
        )
    if s.ris_elements < 1:
        raise ScenarioError(f"ris_elements: must be >= 1, got {s.ris_elements}")
    if s.slots_per_episode < 1:
        raise ScenarioError(f"slots_per_episode: must be >= 1, got {s.slots_per_episode}")
    if s.d_min <= 0:
        raise ScenarioError(f"d_min: must be > 0, got {s.d_min}")
    if s.uav_step <= 0:
        raise ScenarioError(f"uav_step: must be > 0, got {s.uav_step}")
    if s.area_half_extent <= 0:
        raise ScenarioError(f"area_half_extent: must be > 0, got {s.area_half_extent}")
    for name, value in (
        ("exponents.direct", s.exponents.direct),
        ("exponents.reflect", s.exponents.reflect),
        ("exponents.interference", s.exponents.interference),
    ):
        if value < 2.0:
            raise ScenarioError(f"{name}: path loss exponent must be >= 2, got {value}")
    if s.obstacle_mode not in ("3d", "horizontal"):
        raise ScenarioError(f"obstacle_mode: expected '3d' or 'horizontal', got {s.obstacle_mode!r}")
    if s.access_mode not in ("noma", "oma"):
        raise ScenarioError(f"access_mode: expected 'noma' or 'oma', got {s.access_mode!r}")
    if abs(s.uav_initial.z - s.uav_altitude) > 1e-9:
        raise ScenarioError(
            f"uav_initial: height {s.uav_initial.z} disagrees with uav_altitude {s.uav_altitude}"
        )
    if not s.inside_area(s.uav_initial.x, s.uav_initial.y):
        raise ScenarioError("uav_initial: lies outside the allowed area")
    clearance = s.obstacle_clearance(s.uav_initial.x, s.uav_initial.y)
    if clearance.size and clearance.min() < s.d_min:
        raise ScenarioError("uav_initial: lies inside a forbidden zone")
    if s.bandwidth_hz <= 0:
        raise ScenarioError(f"bandwidth_hz: must be > 0, got {s.bandwidth_hz}")
    if s.rate_scale <= 0:
        raise ScenarioError(f"rate_scale: must be > 0, got {s.rate_scale}")


def scenario_to_dict(s: Scenario) -> dict:
    """Round-trippable plain-dict form (used for hashing and file headers)."""
    out: dict = {}
    for f in fields(s):
        v = getattr(s, f.name)
        if isinstance(v, Position3):
            out[f.name] = [v.x, v.y, v.z]
        elif f.name == "center_user_positions":
            out[f.name] = [[[p.x, p.y, p.z] for p in cell] for cell in v]
        elif isinstance(v, tuple) and v and isinstance(v[0], Position3):
            out[f.name] = [[p.x, p.y, p.z] for p in v]
        elif isinstance(v, PathlossExponents):
            out[f.name] = {
                "direct": v.direct,
                "reflect": v.reflect,
                "interference": v.interference,
            }
        elif isinstance(v, tuple):
            out[f.name] = list(v)
        else:
            out[f.name] = v
    return out


# ---- seeded randomness ------------------------------------------------------


def substream(seed: int, label: str) -> np.random.Generator:
    """Independent counter-based generator for one named consumer.

    Streams are keyed by (seed, label) through SHA-256, so adding or removing
    one consumer never shifts another consumer's draws.
    """
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    key = int.from_bytes(digest[:16], "little")
    return np.random.Generator(np.random.Philox(key=key))
