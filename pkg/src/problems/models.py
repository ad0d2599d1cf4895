"""
Scenario container and monthly results.
"""
from dataclasses import dataclass, field, replace
from datetime import date
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from ..fleet.envelopes import daily_envelopes
from ..fleet.models import AggregateEnvelope, AggregateProfile, VehicleSession
from ..markets.models import DbpProgram, PdrMarket, RegulationMarket
from ..milp.backends import SolverLimits
from ..tariff.models import BaseloadProfile, BillResult, PdpPolicy, TariffSchedule
from ..utils.errors import ConfigError, GridMismatch
from ..utils.timegrid import month_days, steps_per_day

# Objective consistency tolerance in dollars
EPS_OBJ = 1e-4


class ProblemId(str, Enum):
    P1 = "p1"
    P2 = "p2"
    P3 = "p3"
    P4 = "p4"
    P5 = "p5"

    @classmethod
    def parse(cls, value: Union[str, "ProblemId"]) -> "ProblemId":
        try:
            return cls(value.lower() if isinstance(value, str) else value)
        except ValueError:
            raise ConfigError(f"Unknown problem '{value}', expected one of p1..p5")


@dataclass(frozen=True)
class Scenario:
    """
    Everything one monthly problem needs. Per-step series are (days, steps)
    arrays aligned with `days`.
    """
    year: int
    month: int
    sessions: Tuple[VehicleSession, ...]
    baseload: BaseloadProfile
    tariff: Optional[TariffSchedule]
    days: Tuple[date, ...] = ()
    dt: float = 0.25
    n_steps: Optional[int] = None
    pdp: Optional[PdpPolicy] = None
    regulation: Optional[RegulationMarket] = None
    pdr: Optional[PdrMarket] = None
    dbp: Optional[DbpProgram] = None
    limits: SolverLimits = SolverLimits()
    regulation_baseline: Optional[np.ndarray] = None
    baseline_mode: str = "history"
    name: str = "scenario"

    def __post_init__(self):
        if not self.days:
            object.__setattr__(self, "days", tuple(month_days(self.year, self.month)))
        covered = set(self.days)
        object.__setattr__(self, "sessions", tuple(s for s in self.sessions if s.day in covered))
        if self.baseline_mode not in ("history", "schedule"):
            raise ConfigError(f"baseline_mode must be 'history' or 'schedule', got {self.baseline_mode}")
        shape = (len(self.days), self.steps)
        if self.baseload.load.shape != shape:
            raise GridMismatch(f"Baseload shape {self.baseload.load.shape}, scenario grid {shape}")
        for session in self.sessions:
            if session.t_depart > self.steps:
                raise GridMismatch(f"Session {session.vehicle_id} on {session.day} leaves the day grid")
        if self.regulation_baseline is not None and np.shape(self.regulation_baseline) != shape:
            raise GridMismatch(f"regulation_baseline shape {np.shape(self.regulation_baseline)}, "
                               f"scenario grid {shape}")

    @property
    def steps(self) -> int:
        return self.n_steps or steps_per_day(self.dt)

    @property
    def shape(self) -> Tuple[int, int]:
        return (len(self.days), self.steps)

    def envelopes(self) -> List[AggregateEnvelope]:
        return daily_envelopes(self.sessions, self.days, self.dt, self.steps)

    def sessions_on(self, day: date) -> List[VehicleSession]:
        return [s for s in self.sessions if s.day == day]

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass
class MonthResult:
    problem: ProblemId
    objective: float
    bill: BillResult
    days: Tuple[date, ...]
    dt: float
    schedules: List[AggregateProfile]
    r_as: float = 0.0
    r_pdr: float = 0.0
    r_dbp: float = 0.0
    baseline: Optional[np.ndarray] = None
    bid_up: Optional[np.ndarray] = None
    bid_down: Optional[np.ndarray] = None
    sell: Optional[np.ndarray] = None
    reduction: Optional[np.ndarray] = None
    # Regulation on/off indicators per kind: ru, rd, xu, xd, base
    tracks: Dict[str, np.ndarray] = field(default_factory=dict)
    uncontrolled_bill: Optional[BillResult] = None
    status: str = "optimal"
    stats: Dict[str, Union[int, float, str, list]] = field(default_factory=dict)

    @property
    def power(self) -> np.ndarray:
        return np.stack([s.p for s in self.schedules]) if self.schedules else np.zeros((0, 0))

    @property
    def revenue(self) -> float:
        return self.r_as + self.r_pdr + self.r_dbp

    @property
    def settled_objective(self) -> float:
        return self.bill.total - self.revenue

    @property
    def savings(self) -> Optional[float]:
        if self.uncontrolled_bill is None:
            return None
        return self.uncontrolled_bill.total - self.settled_objective

    def to_dict(self) -> dict:
        def series(arr):
            return None if arr is None else np.asarray(arr).tolist()

        return {
            "problem": self.problem.value,
            "status": self.status,
            "objective": self.objective,
            "settled_objective": self.settled_objective,
            "bill": self.bill.to_dict(),
            "r_as": self.r_as,
            "r_pdr": self.r_pdr,
            "r_dbp": self.r_dbp,
            "uncontrolled_bill": None if self.uncontrolled_bill is None else self.uncontrolled_bill.to_dict(),
            "savings": self.savings,
            "dt": self.dt,
            "days": [d.isoformat() for d in self.days],
            "power": series(self.power),
            "baseline": series(self.baseline),
            "bid_up": series(self.bid_up),
            "bid_down": series(self.bid_down),
            "sell": series(self.sell),
            "reduction": series(self.reduction),
            "stats": dict(self.stats),
        }
