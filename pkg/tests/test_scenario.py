"""Config loading, unit conversions, geometry helpers, and seeded substreams."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from arisrl.scenario import (
    HOVER_INDEX,
    MANEUVER_DELTAS,
    MANEUVER_NAMES,
    Position3,
    Scenario,
    ScenarioError,
    db_to_linear,
    dbm_to_linear,
    distance,
    linear_to_db,
    linear_to_dbm,
    load_scenario,
    make_scenario,
    scenario_to_dict,
    substream,
)


class TestConversions:
    def test_zero_dbm_is_one_milliwatt(self):
        assert dbm_to_linear(0.0) == 1.0

    def test_minus_30_db_is_one_thousandth(self):
        assert db_to_linear(-30.0) == pytest.approx(1e-3, rel=1e-12)

    def test_thermal_noise_at_10_mhz(self):
        # -174 dBm/Hz over 10 MHz -> -104 dBm -> 10^-10.4 mW
        assert dbm_to_linear(-104.0) == pytest.approx(10.0 ** (-10.4), rel=1e-12)

    @pytest.mark.parametrize("value", [-104.0, -30.0, 0.0, 3.0, 20.0, 55.5])
    def test_round_trip_db(self, value):
        assert linear_to_db(db_to_linear(value)) == pytest.approx(value, rel=1e-12)
        assert linear_to_dbm(dbm_to_linear(value)) == pytest.approx(value, rel=1e-12)

    @given(st.floats(min_value=-150.0, max_value=150.0))
    def test_round_trip_any_db(self, value):
        assert linear_to_db(db_to_linear(value)) == pytest.approx(value, abs=1e-10)


class TestDistance:
    def test_three_four_five(self):
        assert distance(Position3(0, 0, 0), Position3(3, 4, 0)) == 5.0

    def test_identity(self):
        p = Position3(1.5, -2.0, 7.0)
        assert distance(p, p) == 0.0

    def test_bs_to_uav(self):
        bs = Position3(-35.0, -35.0, 25.0)
        uav = Position3(0.0, 35.0, 50.0)
        assert distance(bs, uav) == pytest.approx(
            math.sqrt(35**2 + 70**2 + 25**2), rel=1e-12
        )

    @given(
        st.floats(-100, 100), st.floats(-100, 100), st.floats(0, 100),
        st.floats(-100, 100), st.floats(-100, 100), st.floats(0, 100),
    )
    def test_symmetric_nonnegative(self, x1, y1, z1, x2, y2, z2):
        p, q = Position3(x1, y1, z1), Position3(x2, y2, z2)
        assert distance(p, q) == distance(q, p) >= 0.0


class TestDefaults:
    def test_episode_and_safety_constants(self, default_scenario):
        s = default_scenario
        assert s.slots_per_episode == 250
        assert s.penalty_viol == 7.0
        assert s.d_min == 10.0
        assert s.ris_elements == 120
        assert s.area_half_extent == 75.0

    def test_radio_constants(self, default_scenario):
        s = default_scenario
        assert s.tx_power_dbm == 20.0
        assert s.noise_dbm == -104.0
        assert s.pathloss_ref_db == -30.0
        assert s.rician_k_db == 3.0
        assert s.exponents.direct == 3.0
        assert s.exponents.reflect == 2.2
        assert s.exponents.interference == 3.5

    def test_dimensions(self, default_scenario):
        s = default_scenario
        assert s.num_cells == 2
        assert s.num_center_users == 2
        assert s.num_edge_users == 1
        assert s.num_users == 3
        assert s.num_obstacles == 2
        assert s.obs_dim == 2 + 2 + 2 + 3 == 9
        assert s.action_dim == 2 + 120 + 2

    def test_qos_thresholds_order(self, default_scenario):
        np.testing.assert_allclose(
            default_scenario.qos_thresholds(), [0.5, 0.5, 0.2]
        )

    def test_transmit_snr(self, default_scenario):
        # 20 dBm over -104 dBm noise: 124 dB ratio.
        assert default_scenario.transmit_snr == pytest.approx(10**12.4, rel=1e-12)

    def test_uav_start(self, default_scenario):
        s = default_scenario
        assert (s.uav_initial.x, s.uav_initial.y, s.uav_initial.z) == (0.0, 35.0, 50.0)
        assert s.uav_altitude == 50.0

    def test_paper_layout_accepted(self):
        s = make_scenario(
            {
                "uav_initial": (0, 35, 50),
                "bs_positions": [(-35, -35, 25), (35, 35, 25)],
            }
        )
        assert s.bs_positions[0].x == -35.0
        assert s.bs_positions[1].y == 35.0

    def test_maneuver_table(self):
        assert MANEUVER_NAMES == ("left", "right", "down", "up", "hover")
        assert MANEUVER_DELTAS[HOVER_INDEX] == (0, 0)
        assert len(MANEUVER_DELTAS) == 5


class TestValidation:
    def test_negative_d_min_names_field(self):
        with pytest.raises(ScenarioError, match="d_min"):
            make_scenario({"d_min": -1})

    def test_unknown_key_rejected(self):
        with pytest.raises(ScenarioError, match="unknown config keys"):
            make_scenario({"dmin": 10})

    @pytest.mark.parametrize(
        "overrides, field",
        [
            ({"ris_elements": 0}, "ris_elements"),
            ({"slots_per_episode": 0}, "slots_per_episode"),
            ({"uav_step": 0}, "uav_step"),
            ({"area_half_extent": -5}, "area_half_extent"),
            ({"exponents": {"direct": 1.5}}, "exponents.direct"),
            ({"obstacle_mode": "diagonal"}, "obstacle_mode"),
            ({"access_mode": "tdma"}, "access_mode"),
            ({"bandwidth_hz": 0, "noise_dbm": -104}, "bandwidth_hz"),
            ({"rate_scale": 0}, "rate_scale"),
        ],
    )
    def test_invariant_violations_name_field(self, overrides, field):
        with pytest.raises(ScenarioError, match=field.replace(".", r"\.")):
            make_scenario(overrides)

    def test_single_cell_rejected(self):
        with pytest.raises(ScenarioError, match="bs_positions"):
            make_scenario(
                {"bs_positions": [(0, 0, 25)], "center_user_positions": [[(1, 1, 0)]]}
            )

    def test_center_lists_must_match_cells(self):
        with pytest.raises(ScenarioError, match="center_user_positions"):
            make_scenario({"center_user_positions": [[(1, 1, 0)]]})

    def test_uav_start_outside_area_rejected(self):
        with pytest.raises(ScenarioError, match="outside the allowed area"):
            make_scenario({"uav_initial": (100, 0, 50)})

    def test_uav_start_in_forbidden_zone_rejected(self):
        with pytest.raises(ScenarioError, match="forbidden zone"):
            make_scenario(
                {
                    "uav_initial": (-15, 25, 50),
                    "obstacle_positions": [(-15, 25, 45)],
                }
            )

    def test_negative_height_rejected(self):
        with pytest.raises(ScenarioError, match="height"):
            Position3(0, 0, -1)

    def test_non_finite_coordinate_rejected(self):
        with pytest.raises(ScenarioError, match="finite"):
            Position3(float("nan"), 0, 0)

    def test_altitude_mismatch_rejected(self):
        with pytest.raises(ScenarioError, match="uav_altitude"):
            make_scenario({"uav_initial": (0, 35, 50), "uav_altitude": 40})


class TestLoading:
    def test_empty_document_gives_defaults(self):
        s = load_scenario("")
        assert s == make_scenario()
        assert s.slots_per_episode == 250

    def test_yaml_overrides(self):
        s = load_scenario("ris_elements: 16\ntx_power_dbm: 10\nseed: 3\n")
        assert s.ris_elements == 16
        assert s.tx_power_dbm == 10.0
        assert s.seed == 3

    def test_noise_derived_from_bandwidth(self):
        s = load_scenario("bandwidth_hz: 1.0e6\n")
        assert s.noise_dbm == pytest.approx(-174.0 + 60.0, rel=1e-12)

    def test_explicit_noise_wins(self):
        s = load_scenario("bandwidth_hz: 1.0e6\nnoise_dbm: -100\n")
        assert s.noise_dbm == -100.0

    def test_parse_failure(self):
        with pytest.raises(ScenarioError, match="parse failure"):
            load_scenario("foo: [unclosed")

    def test_non_mapping_document(self):
        with pytest.raises(ScenarioError, match="key-value mapping"):
            load_scenario("- 1\n- 2\n")

    def test_same_document_loads_identically(self):
        doc = "ris_elements: 8\nuav_initial: [0, 35, 50]\nseed: 5\n"
        a, b = load_scenario(doc), load_scenario(doc)
        assert a == b
        assert scenario_to_dict(a) == scenario_to_dict(b)

    def test_dict_round_trip(self, tiny_scenario):
        rebuilt = make_scenario(scenario_to_dict(tiny_scenario))
        assert rebuilt == tiny_scenario

    def test_altitude_follows_initial_height(self):
        s = make_scenario({"uav_initial": (0, 0, 42)})
        assert s.uav_altitude == 42.0


class TestGeometryHelpers:
    def test_inside_area_boundary(self, default_scenario):
        s = default_scenario
        assert s.inside_area(75.0, -75.0)
        assert not s.inside_area(75.0001, 0.0)
        assert not s.inside_area(0.0, -76.0)

    def test_obstacle_clearance_3d(self, default_scenario):
        s = default_scenario
        clear = s.obstacle_clearance(0.0, 35.0)
        expected = [
            distance(Position3(0, 35, 50), o) for o in s.obstacle_positions
        ]
        np.testing.assert_allclose(clear, expected, rtol=1e-12)

    def test_obstacle_clearance_horizontal(self):
        s = make_scenario({"obstacle_mode": "horizontal"})
        clear = s.obstacle_clearance(0.0, 35.0)
        expected = [
            math.hypot(o.x - 0.0, o.y - 35.0) for o in s.obstacle_positions
        ]
        np.testing.assert_allclose(clear, expected, rtol=1e-12)

    def test_center_cell_index(self, default_scenario):
        np.testing.assert_array_equal(
            default_scenario.center_cell_index(), [0, 1]
        )

    def test_no_obstacles_empty_clearance(self):
        s = make_scenario({"obstacle_positions": []})
        assert s.obstacle_clearance(0, 0).size == 0


class TestSubstream:
    def test_equal_seeds_equal_sequences(self):
        a = substream(7, "env-channel").standard_normal(50)
        b = substream(7, "env-channel").standard_normal(50)
        np.testing.assert_array_equal(a, b)

    def test_labels_are_independent(self):
        a = substream(7, "env-channel").standard_normal(50)
        b = substream(7, "policy").standard_normal(50)
        assert not np.array_equal(a, b)

    def test_unequal_seeds_differ_quickly(self):
        a = substream(0, "env-channel").standard_normal(100)
        b = substream(1, "env-channel").standard_normal(100)
        assert np.any(a != b)

    @given(st.integers(min_value=0, max_value=2**31), st.sampled_from(
        ["env-channel", "init", "policy", "shuffle", "oracle"]
    ))
    def test_substream_is_pure(self, seed, label):
        assert substream(seed, label).random() == substream(seed, label).random()


class TestScenarioImmutability:
    def test_frozen(self, tiny_scenario):
        with pytest.raises(AttributeError):
            tiny_scenario.ris_elements = 99

    def test_hashable(self, tiny_scenario):
        assert isinstance(hash(tiny_scenario), int)

    def test_scenario_is_dataclass_with_defaults(self):
        s = Scenario()
        # Bare constructor carries empty geometry; make_scenario fills it.
        assert s.num_cells == 0
        assert make_scenario().num_cells == 2
