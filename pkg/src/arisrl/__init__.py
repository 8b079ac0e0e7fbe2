"""Aerial-RIS CoMP-NOMA downlink simulator with a multi-output PPO trainer."""

from .baselines import OracleGrids, oracle_slot_max, run_oracle
from .env import AerialRisEnv, HybridAction, StepOutcome, decode_action
from .moppo import (
    EpisodeMetrics,
    MoPpoAgent,
    PolicyVariant,
    TrainConfig,
    evaluate,
    load_agent,
    save_agent,
    train,
)
from .phy import RateReport, rates, rates_oma
from .scenario import Scenario, load_scenario, make_scenario, substream

__version__ = "0.1.0"

__all__ = [
    "AerialRisEnv",
    "EpisodeMetrics",
    "HybridAction",
    "MoPpoAgent",
    "OracleGrids",
    "PolicyVariant",
    "RateReport",
    "Scenario",
    "StepOutcome",
    "TrainConfig",
    "decode_action",
    "evaluate",
    "load_agent",
    "load_scenario",
    "make_scenario",
    "oracle_slot_max",
    "rates",
    "rates_oma",
    "run_oracle",
    "save_agent",
    "substream",
    "train",
    "__version__",
]
