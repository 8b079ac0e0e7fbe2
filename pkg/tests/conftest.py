"""Shared fixtures: small scenarios that keep channel and env tests fast."""

from __future__ import annotations

import pytest

from arisrl.scenario import Scenario, make_scenario


@pytest.fixture(scope="session")
def default_scenario() -> Scenario:
    """Full defaults; immutable, safe to share across tests."""
    return make_scenario()


@pytest.fixture(scope="session")
def tiny_scenario() -> Scenario:
    """Defaults shrunk to 4 RIS elements and 12-slot episodes."""
    return make_scenario({"ris_elements": 4, "slots_per_episode": 12})


@pytest.fixture(scope="session")
def micro_scenario() -> Scenario:
    """Smallest useful instance for trainer loops: 2 elements, 8 slots."""
    return make_scenario({"ris_elements": 2, "slots_per_episode": 8})
