import numpy as np
import pytest

from conftest import session
from src.fleet.envelopes import (
    aggregate, clip_session, compute_vehicle_envelope, daily_envelopes, flexibility_index,
    stretch_sessions, uncontrolled_profile,
)
from src.fleet.feasibility import check_feasible, check_vehicle_schedule, disaggregate
from src.fleet.models import AggregateEnvelope, AggregateProfile, ChargerSpec
from src.utils.errors import DisaggregationFailure, EmptyInput, GridMismatch, InfeasibleSession

DT = 0.25


@pytest.fixture
def trio():
    # 1 kWh per full-rate step at 4 kW and dt = 15 min
    return [session("a", 0, 4, 2.0), session("b", 0, 2, 2.0), session("c", 2, 4, 1.0)]


def envelope_of(sessions, n_steps=4):
    return aggregate([compute_vehicle_envelope(s, DT, n_steps) for s in sessions], sessions, DT, n_steps)


def direct_verdict(p, env, dt):
    """Inequality-by-inequality reading of the virtual battery"""
    energy = np.cumsum(p) * dt
    for t, value in enumerate(p):
        if value != 0 and not (env.p_min[t] <= value <= env.p_max[t]):
            return False
        if not (env.e_minus[t] - 1e-9 <= energy[t] <= env.e_plus[t] + 1e-9):
            return False
    return True


class TestVehicleEnvelope:
    def test_zero_request(self):
        env = compute_vehicle_envelope(session("v", 0, 4, 0.0), DT, 5)
        assert env.e_plus.tolist() == [0.0] * 5
        assert env.e_minus.tolist() == [0.0] * 5

    def test_saturated_session_has_no_flexibility(self):
        spec = ChargerSpec(p_min=1.5, p_max=6.6)
        env = compute_vehicle_envelope(session("v", 0, 2, 2 * DT * 6.6, spec=spec), DT, 4)
        np.testing.assert_allclose(env.e_plus, env.e_minus)

    def test_one_step_of_energy(self):
        spec = ChargerSpec(p_min=1.5, p_max=6.6)
        env = compute_vehicle_envelope(session("v", 0, 4, 1.65, spec=spec), DT, 4)
        np.testing.assert_allclose(env.e_plus, [1.65, 1.65, 1.65, 1.65])
        np.testing.assert_allclose(env.e_minus, [0, 0, 0, 1.65])

    def test_bounds_are_ordered_and_meet_at_departure(self, trio):
        for s in trio:
            env = compute_vehicle_envelope(s, DT, 4)
            assert (env.e_minus <= env.e_plus).all()
            assert (np.diff(env.e_plus) >= 0).all() and (np.diff(env.e_minus) >= 0).all()
            assert env.e_plus[s.t_depart - 1] == pytest.approx(env.e_minus[s.t_depart - 1])

    def test_undeliverable_request(self):
        with pytest.raises(InfeasibleSession):
            compute_vehicle_envelope(session("v", 0, 2, 3.0), DT, 4)

    def test_departure_beyond_grid(self):
        with pytest.raises(GridMismatch):
            compute_vehicle_envelope(session("v", 2, 6, 1.0), DT, 4)

    def test_clip_reduces_to_deliverable(self):
        clipped = clip_session(session("v", 0, 2, 3.0), DT)
        assert clipped.e_req == pytest.approx(2.0)


class TestAggregate:
    def test_empty_fleet(self):
        env = aggregate([], [], DT, 4)
        assert env.e_plus.tolist() == [0.0] * 4
        assert env.p_max.tolist() == [0.0] * 4

    def test_single_vehicle(self):
        s = session("v", 1, 3, 1.5)
        single = compute_vehicle_envelope(s, DT, 4)
        env = envelope_of([s])
        np.testing.assert_array_equal(env.e_plus, single.e_plus)
        np.testing.assert_array_equal(env.e_minus, single.e_minus)
        assert env.p_max.tolist() == [0.0, 4.0, 4.0, 0.0]
        assert env.p_min.tolist() == [0.0, 1.5, 1.5, 0.0]

    def test_staggered_sum(self, trio):
        env = envelope_of(trio)
        np.testing.assert_allclose(env.e_plus, [2, 4, 5, 5])
        np.testing.assert_allclose(env.e_minus, [1, 2, 3, 5])
        np.testing.assert_allclose(env.p_max, [8, 8, 8, 8])
        assert env.n_plugged.tolist() == [2, 2, 2, 2]

    def test_mixed_grids_rejected(self):
        s = session("v", 0, 2, 1.0)
        with pytest.raises(GridMismatch):
            aggregate([compute_vehicle_envelope(s, DT, 4), compute_vehicle_envelope(s, DT, 6)], [s, s], DT)

    def test_daily_envelopes_fill_empty_days(self, trio):
        from datetime import date
        envs = daily_envelopes(trio, [date(2024, 7, 1), date(2024, 7, 2)], DT, 4)
        assert envs[0].total_energy == pytest.approx(5.0)
        assert envs[1].total_energy == 0.0


class TestFeasibility:
    def test_boundary_trajectory(self, trio):
        env = envelope_of(trio)
        p = np.diff(np.concatenate([[0.0], env.e_plus])) / DT
        assert check_feasible(AggregateProfile.from_power(p), env, DT)

    def test_below_minimum_power(self, trio):
        env = envelope_of(trio)
        verdict = check_feasible(AggregateProfile.from_power([8, 4, 0.75, 7.25]), env, DT)
        assert not verdict
        assert verdict.step == 2

    def test_energy_overshoot(self, trio):
        env = envelope_of(trio)
        verdict = check_feasible(AggregateProfile.from_power([8, 8, 4, 0]), env, DT)
        assert verdict
        verdict = check_feasible(AggregateProfile.from_power([8, 8, 8, 0]), env, DT)
        assert not verdict and verdict.step == 2

    def test_random_profiles_agree_with_direct_check(self, trio):
        env = envelope_of(trio)
        rng = np.random.default_rng(7)
        levels = np.array([0.0, 1.0, 1.5, 2.0, 4.0, 6.0, 8.0, 9.0])
        for _ in range(1000):
            p = rng.choice(levels, size=4)
            verdict = check_feasible(AggregateProfile.from_power(p), env, DT)
            assert bool(verdict) == direct_verdict(p, env, DT), p

    def test_grid_mismatch_is_a_verdict(self, trio):
        verdict = check_feasible(AggregateProfile.from_power([1.0] * 3), envelope_of(trio), DT)
        assert not verdict and "grid" in verdict.reason


class TestDisaggregate:
    def test_three_vehicles(self, trio):
        profile = AggregateProfile.from_power([8, 4, 4, 4])
        assert check_feasible(profile, envelope_of(trio), DT)
        schedules = disaggregate(profile, trio, DT)
        assert [s.tolist() for s in schedules] == [[4, 0, 4, 0], [4, 4, 0, 0], [0, 0, 0, 4]]
        np.testing.assert_allclose(np.sum(schedules, axis=0), profile.p)
        for s, power in zip(trio, schedules):
            assert check_vehicle_schedule(s, power, DT)

    def test_single_vehicle_takes_the_aggregate(self):
        s = session("v", 0, 4, 1.5)
        p = [2.0, 0.0, 4.0, 0.0]
        (schedule,) = disaggregate(AggregateProfile.from_power(p), [s], DT)
        np.testing.assert_allclose(schedule, p)

    def test_identical_vehicles_split_evenly(self):
        pair = [session("a", 0, 2, 1.0), session("b", 0, 2, 1.0)]
        schedules = disaggregate(AggregateProfile.from_power([8.0, 0.0]), pair, DT)
        assert [s.tolist() for s in schedules] == [[4.0, 0.0], [4.0, 0.0]]

    def test_random_feasible_profiles_split_exactly(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            fleet = []
            for k in range(3):
                arrive = int(rng.integers(0, 4))
                depart = int(rng.integers(arrive + 1, 9))
                fleet.append(session(f"v{k}", arrive, depart, float(rng.integers(0, depart - arrive + 1))))
            env = envelope_of(fleet, 8)
            # Charging every vehicle as late as possible is always realizable
            late = np.diff(np.concatenate([[0.0], env.e_minus])) / DT
            schedules = disaggregate(AggregateProfile.from_power(late), fleet, DT)
            np.testing.assert_allclose(np.sum(schedules, axis=0), late, atol=1e-9)
            for s, power in zip(fleet, schedules):
                assert check_vehicle_schedule(s, power, DT)

    def test_unrealizable_profile(self, trio):
        with pytest.raises(DisaggregationFailure) as err:
            disaggregate(AggregateProfile.from_power([0, 0, 0, 0]), trio, DT)
        assert err.value.residuals


class TestFlexibility:
    def test_no_gap(self):
        env = AggregateEnvelope.zeros(4)
        assert flexibility_index([env]) == 0.0

    def test_constant_gap(self):
        z = np.zeros(4)
        env = AggregateEnvelope(np.full(4, 3.0), z, z, z, z.astype(int))
        assert flexibility_index([env]) == pytest.approx(3.0)

    def test_mean_over_days(self, trio):
        envs = [envelope_of(trio), AggregateEnvelope.zeros(4)]
        flat = np.concatenate([e.gap for e in envs])
        assert flexibility_index(envs) == pytest.approx(flat.mean())

    def test_needs_a_day(self):
        with pytest.raises(EmptyInput):
            flexibility_index([])


class TestReferenceSchedules:
    def test_uncontrolled_charges_on_arrival(self):
        profile = uncontrolled_profile([session("v", 1, 4, 2.5)], DT, 5)
        np.testing.assert_allclose(profile.p, [0, 4, 4, 2, 0])

    def test_stretch_identity(self, trio):
        assert stretch_sessions(trio, 1.0, DT, 4) == trio

    def test_stretch_widens_about_midpoint(self):
        (wide,) = stretch_sessions([session("v", 4, 8, 1.0)], 2.0, DT, 16)
        assert (wide.t_arrive, wide.t_depart) == (2, 10)

    def test_stretch_is_clipped_to_the_day(self):
        (wide,) = stretch_sessions([session("v", 1, 3, 1.0)], 4.0, DT, 4)
        assert (wide.t_arrive, wide.t_depart) == (0, 4)

    def test_shrinking_clips_requests(self):
        (narrow,) = stretch_sessions([session("v", 0, 4, 4.0)], 0.5, DT, 4)
        assert narrow.duration == 2
        assert narrow.e_req == pytest.approx(2.0)
