"""Tests for the car-following and signal oracles."""

import pytest
from pydantic import ValidationError

from traffic_graph_sim.errors import OracleError
from traffic_graph_sim.oracles import IdmParams, KraussParams, equilibrium_gap, idm_accel, krauss_next_speed, signal_phase
from traffic_graph_sim.scenario.spec import SignalProgramSpec


def two_phase_program() -> SignalProgramSpec:
    return SignalProgramSpec.model_validate({
        "id": "TL",
        "phases": [{"green": ["A"], "duration": 30.0}, {"green": ["B"], "duration": 30.0}],
    })


class TestIdm:
    """Intelligent Driver Model acceleration."""

    def test_free_road_from_rest(self):
        assert idm_accel(0.0, 0.0, 1e6, IdmParams()) == pytest.approx(1.0, abs=1e-9)

    def test_at_desired_speed(self):
        assert idm_accel(15.0, 0.0, 1e6, IdmParams()) == pytest.approx(0.0, abs=1e-9)

    def test_equilibrium_gap_value(self):
        assert equilibrium_gap(10.0, IdmParams()) == pytest.approx(18.977, abs=1e-3)

    def test_zero_accel_at_equilibrium(self):
        p = IdmParams()
        for v in (0.0, 5.0, 10.0, 14.0):
            assert idm_accel(v, 0.0, equilibrium_gap(v, p), p) == pytest.approx(0.0, abs=1e-9)

    def test_closing_in_brakes_harder(self):
        p = IdmParams()
        assert idm_accel(10.0, 5.0, 20.0, p) < idm_accel(10.0, 0.0, 20.0, p)

    def test_braking_is_unclipped(self):
        assert idm_accel(15.0, 15.0, 0.5, IdmParams()) < -100.0

    def test_non_positive_gap_rejected(self):
        with pytest.raises(OracleError):
            idm_accel(5.0, 0.0, 0.0, IdmParams())

    def test_negative_speed_rejected(self):
        with pytest.raises(OracleError):
            idm_accel(-1.0, 0.0, 10.0, IdmParams())

    def test_equilibrium_gap_domain(self):
        with pytest.raises(OracleError):
            equilibrium_gap(15.0, IdmParams())

    def test_params_validated(self):
        with pytest.raises(ValidationError):
            IdmParams(v0=0.0)
        with pytest.raises(ValidationError):
            IdmParams(speed=3.0)


class TestKrauss:
    """Krauss safe-speed model."""

    def test_free_road_accelerates(self):
        assert krauss_next_speed(10.0, 0.0, 1e6, KraussParams(), 1.0, 0.0) == pytest.approx(12.6)

    def test_safe_speed_binds(self):
        assert krauss_next_speed(10.0, 8.0, 20.0, KraussParams(), 1.0, 0.0) == pytest.approx(12.0)

    def test_standstill(self):
        assert krauss_next_speed(0.0, 0.0, 0.0, KraussParams(), 1.0, 0.0) == 0.0

    def test_capped_at_v_max(self):
        assert krauss_next_speed(14.0, 14.0, 1e6, KraussParams(), 1.0, 0.0) == pytest.approx(15.0)

    def test_noise_reduces_speed(self):
        p = KraussParams(sigma=0.5)
        assert krauss_next_speed(10.0, 0.0, 1e6, p, 1.0, 1.0) == pytest.approx(12.6 - 0.5 * 2.6)

    def test_never_negative(self):
        p = KraussParams(sigma=1.0)
        assert krauss_next_speed(0.5, 0.0, 0.1, p, 1.0, 1.0) == 0.0

    @pytest.mark.parametrize("v_f,v_l,gap", [(0.0, 0.0, 0.0), (15.0, 0.0, 1.0), (3.0, 12.0, 200.0)])
    def test_result_within_bounds(self, v_f, v_l, gap):
        p = KraussParams()
        assert 0.0 <= krauss_next_speed(v_f, v_l, gap, p, 1.0, 0.0) <= p.v_max


class TestSignalPhase:
    """Cyclic signal program evaluation."""

    def test_second_phase(self):
        state = signal_phase(two_phase_program(), 45.0)
        assert state.index == 1
        assert state.green == frozenset({"B"})
        assert state.time_in_phase == pytest.approx(15.0)

    def test_wraps_around_cycle(self):
        state = signal_phase(two_phase_program(), 75.0)
        assert state.index == 0
        assert state.time_in_phase == pytest.approx(15.0)

    def test_phase_boundary_starts_next_phase(self):
        state = signal_phase(two_phase_program(), 30.0)
        assert state.index == 1
        assert state.time_in_phase == pytest.approx(0.0)

    def test_empty_program(self):
        with pytest.raises(OracleError):
            signal_phase(SignalProgramSpec.model_construct(id="x", phases=[]), 0.0)

    def test_negative_time(self):
        with pytest.raises(OracleError):
            signal_phase(two_phase_program(), -1.0)
