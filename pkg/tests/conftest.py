from datetime import date
from typing import Optional, Sequence

import numpy as np
import pytest

from src.fleet.models import ChargerSpec, VehicleSession
from src.milp.backends import ReferenceBackend, SolverLimits
from src.problems.models import Scenario
from src.tariff.config import load_tariff
from src.tariff.models import BaseloadProfile, TariffSchedule

# A summer Monday
DAY = date(2024, 7, 1)
CHARGER = ChargerSpec(p_min=1.5, p_max=4.0, eta_c=1.0)


def session(vehicle_id: str, t_arrive: int, t_depart: int, e_req: float,
            day: date = DAY, spec: ChargerSpec = CHARGER) -> VehicleSession:
    return VehicleSession(vehicle_id=vehicle_id, day=day, t_arrive=t_arrive, t_depart=t_depart,
                          e_req=e_req, spec=spec)


def flat_tariff(rate: str = "0.10", demand: Optional[str] = None) -> TariffSchedule:
    """One energy rate all day; optionally one all-day demand period"""
    data = {
        "name": "flat",
        "energy_periods": [{"id": "flat", "ranges": [["00:00", "24:00"]], "rate": rate}],
        "demand_periods": [],
    }
    if demand is not None:
        data["demand_periods"] = [{"id": "maximum", "ranges": [["00:00", "24:00"]], "rate": demand}]
    return load_tariff(data)


def split_tariff(cheap: str = "0.05", dear: str = "0.20", dear_from: str = "00:30") -> TariffSchedule:
    """Expensive from dear_from onwards, cheap before, no demand charge"""
    return load_tariff({
        "name": "split",
        "energy_periods": [
            {"id": "cheap", "ranges": [["00:00", dear_from]], "rate": cheap},
            {"id": "dear", "ranges": [[dear_from, "24:00"]], "rate": dear},
        ],
    })


def micro_scenario(sessions: Sequence[VehicleSession], n_steps: int = 4, dt: float = 0.25,
                   tariff: Optional[TariffSchedule] = None, baseload: Optional[np.ndarray] = None,
                   days: Sequence[date] = (DAY,), **products) -> Scenario:
    load = np.zeros((len(days), n_steps)) if baseload is None else np.asarray(baseload, dtype=float)
    return Scenario(
        year=days[0].year, month=days[0].month, sessions=tuple(sessions),
        baseload=BaseloadProfile(load, tuple(days)), tariff=tariff or flat_tariff(),
        days=tuple(days), dt=dt, n_steps=n_steps, limits=SolverLimits(time_limit=60, mip_gap=0.0),
        name="micro", **products,
    )


@pytest.fixture
def reference():
    return ReferenceBackend(max_binaries=24)


@pytest.fixture
def e19():
    return load_tariff()
