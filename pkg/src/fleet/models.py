"""
Fleet data types: charger limits, charging sessions and the per-vehicle
and aggregate flexibility envelopes.
"""
from dataclasses import dataclass
from datetime import date
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

# Feasibility tolerance for power (kW) and energy (kWh) comparisons
EPS_FEAS = 1e-6


class ChargerSpec(BaseModel):
    """Charger limits; p_min is the smallest effective power while charging"""
    model_config = ConfigDict(frozen=True)

    p_min: float = Field(default=1.5, gt=0)
    p_max: float = Field(default=6.6, gt=0)
    eta_c: float = Field(default=1.0, gt=0, le=1)

    @model_validator(mode="after")
    def _check_range(self):
        if self.p_min > self.p_max:
            raise ValueError(f"p_min {self.p_min} exceeds p_max {self.p_max}")
        return self

    @property
    def rate(self) -> float:
        """Delivered power at full charging"""
        return self.p_max * self.eta_c


class VehicleSession(BaseModel):
    """One plug-in event on one day, in step indices of that day"""
    model_config = ConfigDict(frozen=True)

    vehicle_id: str
    day: date
    t_arrive: int = Field(ge=0)
    t_depart: int
    e_req: float = Field(ge=0)
    spec: ChargerSpec = ChargerSpec()

    @model_validator(mode="after")
    def _check_window(self):
        if self.t_arrive >= self.t_depart:
            raise ValueError(f"Session {self.vehicle_id}: arrival step {self.t_arrive} "
                             f"not before departure step {self.t_depart}")
        return self

    @property
    def duration(self) -> int:
        return self.t_depart - self.t_arrive

    def max_energy(self, dt: float) -> float:
        """Energy deliverable at full rate over the whole connection"""
        return self.duration * dt * self.spec.rate

    def is_plugged(self, t: int) -> bool:
        return self.t_arrive <= t < self.t_depart


@dataclass(frozen=True)
class VehicleEnvelope:
    """Cumulative energy bounds of one vehicle at the end of each step"""
    e_plus: np.ndarray
    e_minus: np.ndarray

    @property
    def n_steps(self) -> int:
        return len(self.e_plus)


@dataclass(frozen=True)
class AggregateEnvelope:
    """The virtual battery of one day"""
    e_plus: np.ndarray
    e_minus: np.ndarray
    p_max: np.ndarray
    p_min: np.ndarray
    n_plugged: np.ndarray
    day: Optional[date] = None

    @classmethod
    def zeros(cls, n_steps: int, day: Optional[date] = None) -> "AggregateEnvelope":
        z = np.zeros(n_steps)
        return cls(z, z.copy(), z.copy(), z.copy(), np.zeros(n_steps, dtype=int), day)

    @property
    def n_steps(self) -> int:
        return len(self.e_plus)

    @property
    def gap(self) -> np.ndarray:
        return self.e_plus - self.e_minus

    @property
    def total_energy(self) -> float:
        """Energy the day must deliver"""
        return float(self.e_minus[-1]) if self.n_steps else 0.0


@dataclass(frozen=True)
class AggregateProfile:
    """Aggregate charging power per step and its active indicator"""
    p: np.ndarray
    on: np.ndarray

    @classmethod
    def from_power(cls, p, eps: float = EPS_FEAS) -> "AggregateProfile":
        p = np.asarray(p, dtype=float)
        return cls(p=p, on=p > eps)

    @property
    def n_steps(self) -> int:
        return len(self.p)

    def cumulative_energy(self, dt: float) -> np.ndarray:
        return np.cumsum(self.p) * dt


@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    step: Optional[int] = None
    reason: str = ""

    def __bool__(self):
        return self.feasible
