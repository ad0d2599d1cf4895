from datetime import date

import numpy as np
import pytest

from conftest import DAY, flat_tariff
from src.milp.backends import ReferenceBackend, SolverLimits, solve
from src.milp.model import LinExpr, MipModel
from src.tariff.billing import demand_charge, energy_charge, pdp_settlement, settle_bill
from src.tariff.config import load_pdp_policy, load_tariff
from src.tariff.linear import add_demand_charge, add_pdp_terms, energy_charge_expr
from src.tariff.models import EventWindow, PdpPolicy
from src.utils.errors import CalendarMismatch, ConfigError

SATURDAY = date(2024, 7, 6)
JANUARY = date(2024, 1, 3)


def policy_for(days, reserve=40.0, **overrides) -> PdpPolicy:
    events = [EventWindow(day=d) for d in days]
    policy = load_pdp_policy(events=events, capacity_reserve=reserve)
    return policy.model_copy(update=overrides) if overrides else policy


class TestTariffSchedule:
    def test_bundled_rates(self, e19):
        assert e19.energy_rate(DAY, 13, 1.0) == pytest.approx(0.14726)
        assert e19.energy_rate(DAY, 9, 1.0) == pytest.approx(0.10714)
        assert e19.energy_rate(SATURDAY, 13, 1.0) == pytest.approx(0.08057)
        assert e19.energy_rate(JANUARY, 10, 1.0) == pytest.approx(0.10166)

    def test_part_peak_starts_at_half_hour(self, e19):
        rates = e19.energy_rate_matrix([DAY], 0.25)
        assert rates[0, 33] == pytest.approx(0.08057)
        assert rates[0, 34] == pytest.approx(0.10714)

    def test_gap_in_coverage_is_rejected(self):
        with pytest.raises(ConfigError):
            load_tariff({"energy_periods": [{"id": "x", "ranges": [["00:00", "12:00"]], "rate": "0.1"}]})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_tariff(tmp_path / "absent.json")

    def test_demand_masks_follow_day_type(self, e19):
        masks = e19.demand_masks([DAY, SATURDAY], 1.0)
        assert masks["summer_peak"][0].sum() == 6
        assert masks["summer_peak"][1].sum() == 0
        assert masks["maximum"].all()


class TestSettlement:
    def test_peak_energy(self, e19):
        load = np.zeros((1, 24))
        load[0, 13] = 10.0
        assert energy_charge(load, [DAY], e19, 1.0) == pytest.approx(1.4726)

    def test_constant_summer_demand(self, e19):
        charge, peaks = demand_charge(np.full((1, 96), 100.0), [DAY], e19, 0.25)
        assert charge == pytest.approx(4130.0)
        assert peaks == {"summer_peak": 100.0, "summer_part_peak": 100.0,
                         "winter_part_peak": 0.0, "maximum": 100.0}

    def test_weekend_only_pays_maximum(self, e19):
        charge, _ = demand_charge(np.full((1, 24), 10.0), [SATURDAY], e19, 1.0)
        assert charge == pytest.approx(173.3)

    def test_demand_peaks_span_days(self):
        tariff = flat_tariff(demand="10")
        load = np.array([[1.0, 3.0], [2.0, 2.0]])
        charge, _ = demand_charge(load, [DAY, date(2024, 7, 2)], tariff, 1.0)
        assert charge == pytest.approx(30.0)

    def test_negative_load_does_not_pay_demand(self):
        charge, _ = demand_charge(np.full((1, 4), -5.0), [DAY], flat_tariff(demand="10"), 1.0)
        assert charge == 0.0

    def test_day_count_must_match(self, e19):
        with pytest.raises(CalendarMismatch):
            energy_charge(np.zeros((2, 24)), [DAY], e19, 1.0)

    def test_pdp_event_day(self, e19):
        load = np.full((1, 24), 50.0)
        pdp = pdp_settlement(load, [DAY], e19, policy_for([DAY]), 1.0)
        assert pdp.credit_peak == pytest.approx(50.0)
        # The default window sits inside the peak period
        assert pdp.credit_partpeak == 0.0
        assert pdp.c_pdp == pytest.approx(48.0)
        assert pdp.benefit == pytest.approx(2.0)

    def test_pdp_evening_event_earns_part_peak_credit(self, e19):
        policy = load_pdp_policy(events=[EventWindow(day=DAY, start="17:00", end="20:00")], capacity_reserve=40.0)
        pdp = pdp_settlement(np.full((1, 24), 50.0), [DAY], e19, policy, 1.0)
        assert pdp.credit_peak == pytest.approx(50.0)
        assert pdp.credit_partpeak == pytest.approx(12.0)

    def test_pdp_reserve_above_load(self, e19):
        pdp = pdp_settlement(np.full((1, 24), 30.0), [DAY], e19, policy_for([DAY]), 1.0)
        assert (pdp.credit_peak, pdp.credit_partpeak, pdp.c_pdp) == (0.0, 0.0, 0.0)

    def test_pdp_zero_reserve_credits_whole_peak(self, e19):
        load = np.zeros((1, 24))
        load[0, 15] = 12.0
        pdp = pdp_settlement(load, [DAY], e19, policy_for([DAY], reserve=0.0), 1.0)
        assert pdp.credit_peak == pytest.approx(60.0)
        assert pdp.c_pdp == pytest.approx(14.4)

    def test_pdp_without_events(self, e19):
        bill = settle_bill(np.full((1, 24), 50.0), [DAY], e19, policy_for([]), 1.0)
        assert bill.c_pdp == 0.0 and bill.pdp_credit_peak == 0.0

    def test_bill_total(self, e19):
        load = np.full((1, 24), 50.0)
        bill = settle_bill(load, [DAY], e19, policy_for([DAY]), 1.0)
        assert bill.total == pytest.approx(bill.c_ec + bill.c_dc - 50.0 + 48.0)
        assert bill.to_dict()["total"] == pytest.approx(bill.total)


class TestLinearTerms:
    def test_fixed_load_prices_like_settlement(self, e19):
        """With the EV power pinned, the model cost equals the settled bill"""
        rng = np.random.default_rng(11)
        baseload = rng.uniform(20.0, 60.0, size=24)
        ev = np.zeros(24)
        ev[10:20] = rng.uniform(0.0, 30.0, size=10)
        policy = policy_for([DAY])

        model = MipModel()
        loads = [[LinExpr(constant=float(baseload[t])) for t in range(24)]]
        for t in range(10, 20):
            p = model.add_var(f"p_{t}", lb=float(ev[t]), ub=float(ev[t]))
            loads[0][t] = loads[0][t] + p
        rates = e19.energy_rate_matrix([DAY], 1.0)
        demand, _ = add_demand_charge(model, loads, e19, [DAY], 1.0, 24)
        cost = energy_charge_expr(loads, rates, 1.0) + demand + add_pdp_terms(
            model, loads, e19, policy, [DAY], 1.0, 24)
        model.minimize(cost)
        solution = solve(model, ReferenceBackend(), SolverLimits(time_limit=30, mip_gap=0.0))

        bill = settle_bill(baseload + ev, [DAY], e19, policy, 1.0)
        assert solution.objective == pytest.approx(bill.total, rel=1e-6)

    def test_constant_cells_fold_into_bounds(self, e19):
        model = MipModel()
        loads = [[LinExpr(constant=5.0) for _ in range(24)]]
        _, peaks = add_demand_charge(model, loads, e19, [DAY], 1.0, 24)
        assert peaks["maximum"].lb == peaks["maximum"].ub == 5.0
        assert model.num_binaries == 0
