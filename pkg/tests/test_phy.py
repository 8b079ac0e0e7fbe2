"""SINR and rate algebra on hand-built channel realizations."""

from __future__ import annotations

import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, settings
from hypothesis import strategies as st

from arisrl.channel import ChannelRealization, draw_slot_fading, compose_realization
from arisrl.phy import (
    RateReport,
    effective_channels,
    rates,
    rates_oma,
    slot_rates,
    validate_splits,
)
from arisrl.scenario import make_scenario, substream


def _toy_scenario(**overrides):
    """One RIS element, transmit power equal to noise power (rho = 1)."""
    base = {
        "ris_elements": 1,
        "tx_power_dbm": 0.0,
        "noise_dbm": 0.0,
        "pathloss_ref_db": 0.0,
    }
    base.update(overrides)
    return make_scenario(base)


def _toy_realization():
    """Direct gains (1, 2), unit edge cascades, ICI power 1 at the first user.

    With rho = 1 and splits 0.75 this realization reproduces every SINR hand
    case at once:
      edge:   (0.75 + 0.75) / (0.25 + 0.25 + 1) = 1
      user 0: sic  = 0.75*1 / (0.25*1 + 1 + 1) = 1/3
      user 1: own  = 0.25*4 / (0 + 1) = 1
    """
    return ChannelRealization(
        direct_center=np.array([1.0, 2.0], dtype=complex),
        direct_edge=np.zeros((2, 1), dtype=complex),
        interference=np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex),
        bs_to_ris=np.ones((2, 1), dtype=complex),
        ris_to_center=np.zeros((2, 1), dtype=complex),
        ris_to_edge=np.ones((1, 1), dtype=complex),
    )


class TestValidateSplits:
    def test_accepts_open_interval(self):
        out = validate_splits(np.array([0.6, 0.999]), 2)
        np.testing.assert_array_equal(out, [0.6, 0.999])

    @pytest.mark.parametrize("bad", [[0.5, 0.75], [0.75, 1.0], [0.4, 0.75]])
    def test_rejects_boundary_and_below(self, bad):
        with pytest.raises(ValueError, match=r"\(0.5, 1\)"):
            validate_splits(np.array(bad), 2)

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError, match="shape"):
            validate_splits(np.array([0.75]), 2)


class TestEffectiveChannels:
    def test_toy_composition(self):
        s = _toy_scenario()
        h_center, h_edge, ici = effective_channels(s, _toy_realization(), np.zeros(1))
        np.testing.assert_allclose(h_center, [1.0, 2.0])
        np.testing.assert_allclose(h_edge, [[1.0], [1.0]])
        np.testing.assert_allclose(ici, [1.0, 0.0])

    def test_phase_rotates_cascade_only(self):
        s = _toy_scenario()
        real = _toy_realization()
        h_center, h_edge, _ = effective_channels(s, real, np.array([np.pi]))
        np.testing.assert_allclose(h_center, [1.0, 2.0])  # no RIS->center path
        np.testing.assert_allclose(h_edge, [[-1.0], [-1.0]], atol=1e-12)

    def test_wrong_phase_shape(self):
        with pytest.raises(ValueError, match="phases"):
            effective_channels(_toy_scenario(), _toy_realization(), np.zeros(3))


class TestNomaRates:
    def test_hand_case_sinrs(self):
        s = _toy_scenario()
        report = rates(s, _toy_realization(), np.zeros(1), np.array([0.75, 0.75]))
        assert report.sinr_edge[0] == pytest.approx(1.0, abs=1e-12)
        assert report.sinr_sic[0] == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert report.sinr_center[1] == pytest.approx(1.0, abs=1e-12)
        # First user's own-message stage: 0.25 / (1 + 1).
        assert report.sinr_center[0] == pytest.approx(0.125, abs=1e-12)
        # Second user's SIC stage: 3 / (1 + 1) = 1.5.
        assert report.sinr_sic[1] == pytest.approx(1.5, abs=1e-12)

    def test_hand_case_rates_and_sum(self):
        s = _toy_scenario()
        report = rates(s, _toy_realization(), np.zeros(1), np.array([0.75, 0.75]))
        assert report.edge_rates[0] == pytest.approx(1.0, abs=1e-12)
        assert report.center_rates[1] == pytest.approx(1.0, abs=1e-12)
        expected_sum = np.log2(1.125) + 1.0 + 1.0
        assert report.sum_rate == pytest.approx(expected_sum, abs=1e-12)

    def test_zero_channels_zero_rates(self):
        s = _toy_scenario()
        real = ChannelRealization(
            direct_center=np.zeros(2, dtype=complex),
            direct_edge=np.zeros((2, 1), dtype=complex),
            interference=np.zeros((2, 2), dtype=complex),
            bs_to_ris=np.zeros((2, 1), dtype=complex),
            ris_to_center=np.zeros((2, 1), dtype=complex),
            ris_to_edge=np.zeros((1, 1), dtype=complex),
        )
        report = rates(s, real, np.zeros(1), np.array([0.75, 0.75]))
        assert report.sum_rate == 0.0
        assert np.all(report.all_rates() == 0.0)
        assert np.all(report.sinr_edge == 0.0)

    def test_interference_limited_edge(self):
        # rho -> infinity: edge SINR -> lambda / (1 - lambda) with equal gains.
        s = _toy_scenario(tx_power_dbm=300.0)
        report = rates(s, _toy_realization(), np.zeros(1), np.array([0.8, 0.8]))
        assert report.sinr_edge[0] == pytest.approx(0.8 / 0.2, rel=1e-9)

    def test_all_power_to_edge_starves_center(self):
        s = _toy_scenario()
        lam = 1.0 - 1e-12
        report = rates(s, _toy_realization(), np.zeros(1), np.array([lam, lam]))
        assert np.all(report.sinr_center < 1e-11)

    def test_sic_stage_beats_own_stage_without_ici(self):
        s = _toy_scenario()
        real = _toy_realization()
        real = replace(real, interference=np.zeros((2, 2), dtype=complex))
        report = rates(s, real, np.zeros(1), np.array([0.75, 0.75]))
        assert np.all(report.sinr_sic > report.sinr_center)

    def test_sum_equals_component_rates(self):
        s = _toy_scenario()
        report = rates(s, _toy_realization(), np.zeros(1), np.array([0.9, 0.6]))
        assert report.sum_rate == pytest.approx(
            report.center_rates.sum() + report.edge_rates.sum(), abs=1e-12
        )

    def test_rates_are_log2_of_sinrs(self):
        s = make_scenario({"ris_elements": 6})
        real = compose_realization(
            s, s.uav_initial, draw_slot_fading(s, substream(0, "test-phy"))
        )
        report = rates(s, real, np.linspace(-1, 1, 6), np.array([0.7, 0.85]))
        np.testing.assert_allclose(
            report.center_rates, np.log2(1 + report.sinr_center), rtol=1e-12
        )
        np.testing.assert_allclose(
            report.edge_rates, np.log2(1 + report.sinr_edge), rtol=1e-12
        )

    @given(
        st.floats(min_value=0.51, max_value=0.99),
        st.floats(min_value=0.001, max_value=0.4),
    )
    @settings(max_examples=30)
    def test_edge_sinr_monotone_in_lambda(self, lam, bump):
        s = _toy_scenario()
        real = _toy_realization()
        lo = rates(s, real, np.zeros(1), np.array([lam, lam]))
        hi_lam = min(lam + bump, 1.0 - 1e-9)
        hi = rates(s, real, np.zeros(1), np.array([hi_lam, hi_lam]))
        assert hi.sinr_edge[0] >= lo.sinr_edge[0]
        assert np.all(hi.sinr_center <= lo.sinr_center)

    def test_scale_invariance_of_sinrs(self):
        """Scaling all channel powers and the noise by c leaves SINRs alone."""
        s = make_scenario({"ris_elements": 4})
        fading = draw_slot_fading(s, substream(7, "test-phy"))
        real = compose_realization(s, s.uav_initial, fading)
        c = 10.0 ** (1.7 / 10.0)  # arbitrary 1.7 dB
        scaled = ChannelRealization(
            direct_center=real.direct_center * np.sqrt(c),
            direct_edge=real.direct_edge * np.sqrt(c),
            interference=real.interference * np.sqrt(c),
            bs_to_ris=real.bs_to_ris * np.sqrt(c),
            ris_to_center=real.ris_to_center,
            ris_to_edge=real.ris_to_edge,
        )
        s_scaled = replace(s, noise_dbm=s.noise_dbm + 1.7)
        phases = np.linspace(-2, 2, 4)
        splits = np.array([0.7, 0.8])
        a = rates(s, real, phases, splits)
        b = rates(s_scaled, scaled, phases, splits)
        np.testing.assert_allclose(b.sinr_center, a.sinr_center, rtol=1e-9)
        np.testing.assert_allclose(b.sinr_edge, a.sinr_edge, rtol=1e-9)
        np.testing.assert_allclose(b.sinr_sic, a.sinr_sic, rtol=1e-9)

    def test_all_sinrs_finite_nonnegative(self):
        s = make_scenario({"ris_elements": 8})
        rng = substream(3, "test-phy")
        for _ in range(20):
            real = compose_realization(s, s.uav_initial, draw_slot_fading(s, rng))
            report = rates(s, real, rng.uniform(-np.pi, np.pi, 8), np.array([0.6, 0.9]))
            for field in (report.sinr_center, report.sinr_sic, report.sinr_edge):
                assert np.all(np.isfinite(field))
                assert np.all(field >= 0.0)


class TestOmaRates:
    def test_toy_edge_rate(self):
        s = _toy_scenario()
        report = rates_oma(s, _toy_realization(), np.zeros(1))
        # Full-power JT combining of both unit gains over a half slot.
        assert report.sinr_edge[0] == pytest.approx(2.0, abs=1e-12)
        assert report.edge_rates[0] == pytest.approx(0.5 * np.log2(3.0), abs=1e-12)

    def test_toy_center_rates(self):
        s = _toy_scenario()
        report = rates_oma(s, _toy_realization(), np.zeros(1))
        assert report.center_rates[0] == pytest.approx(
            0.5 * np.log2(1 + 1.0 / 2.0), abs=1e-12
        )
        assert report.center_rates[1] == pytest.approx(
            0.5 * np.log2(1 + 4.0), abs=1e-12
        )
        assert np.all(report.sinr_sic == 0.0)

    def test_zero_channels(self):
        s = _toy_scenario()
        real = ChannelRealization(
            direct_center=np.zeros(2, dtype=complex),
            direct_edge=np.zeros((2, 1), dtype=complex),
            interference=np.zeros((2, 2), dtype=complex),
            bs_to_ris=np.zeros((2, 1), dtype=complex),
            ris_to_center=np.zeros((2, 1), dtype=complex),
            ris_to_edge=np.zeros((1, 1), dtype=complex),
        )
        assert rates_oma(s, real, np.zeros(1)).sum_rate == 0.0

    def test_splits_are_inert(self):
        s = _toy_scenario()
        a = rates_oma(s, _toy_realization(), np.zeros(1), np.array([0.6, 0.6]))
        b = rates_oma(s, _toy_realization(), np.zeros(1), np.array([0.9, 0.9]))
        assert a.sum_rate == b.sum_rate

    def test_noma_beats_oma_on_average(self):
        """Monte-Carlo ordering at stock parameters over 1000 realizations."""
        s = make_scenario()
        rng = substream(0, "test-noma-vs-oma")
        splits = np.full(2, 0.75)
        phases = np.zeros(s.ris_elements)
        noma_sum = 0.0
        oma_sum = 0.0
        for _ in range(1000):
            real = compose_realization(s, s.uav_initial, draw_slot_fading(s, rng))
            noma_sum += rates(s, real, phases, splits).sum_rate
            oma_sum += rates_oma(s, real, phases).sum_rate
        assert noma_sum > oma_sum


class TestSlotRates:
    def test_dispatch(self):
        s = _toy_scenario()
        real = _toy_realization()
        splits = np.array([0.75, 0.75])
        noma = slot_rates(s, real, np.zeros(1), splits)
        assert noma.sum_rate == rates(s, real, np.zeros(1), splits).sum_rate
        s_oma = _toy_scenario(access_mode="oma")
        oma = slot_rates(s_oma, real, np.zeros(1), splits)
        assert oma.sum_rate == rates_oma(s_oma, real, np.zeros(1)).sum_rate

    def test_all_rates_order(self):
        s = _toy_scenario()
        report = slot_rates(s, _toy_realization(), np.zeros(1), np.array([0.75, 0.75]))
        stacked = report.all_rates()
        np.testing.assert_array_equal(stacked[:2], report.center_rates)
        np.testing.assert_array_equal(stacked[2:], report.edge_rates)

    def test_report_type(self):
        s = _toy_scenario()
        report = slot_rates(s, _toy_realization(), np.zeros(1), np.array([0.75, 0.75]))
        assert isinstance(report, RateReport)
