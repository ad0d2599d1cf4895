"""
Tariff data types.
Rate schedules and PDP policies are validated pydantic models read from
JSON; load profiles and bills are plain frozen dataclasses over numpy arrays.
"""
import logging
from dataclasses import dataclass, field
from datetime import date
from decimal import Decimal
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..utils.errors import CalendarMismatch, DataError
from ..utils.timegrid import is_weekend, parse_clock, step_range, steps_per_day

logger = logging.getLogger(__name__)

SUMMER_MONTHS = (5, 6, 7, 8, 9, 10)


def _check_clock(text: str) -> str:
    parse_clock(text)
    return text


class PeriodSpec(BaseModel):
    """A rate period: local-time ranges qualified by season and day type"""
    model_config = ConfigDict(frozen=True)

    id: str
    season: Literal["summer", "winter", "all"] = "all"
    days: Literal["weekday", "weekend", "all"] = "all"
    ranges: Tuple[Tuple[str, str], ...]
    rate: Decimal = Field(ge=0)

    @field_validator("ranges")
    @classmethod
    def _check_ranges(cls, ranges):
        if not ranges:
            raise ValueError("at least one time range is required")
        for start, end in ranges:
            if parse_clock(start) >= parse_clock(end):
                raise ValueError(f"range {start}-{end} is empty")
        return ranges

    def applies_to(self, day: date, summer_months: Sequence[int]) -> bool:
        if self.season != "all" and (day.month in summer_months) != (self.season == "summer"):
            return False
        if self.days == "weekday" and is_weekend(day):
            return False
        if self.days == "weekend" and not is_weekend(day):
            return False
        return True

    def covers_minute(self, minute: int) -> bool:
        return any(parse_clock(a) <= minute < parse_clock(b) for a, b in self.ranges)

    def step_mask(self, dt: float, n_steps: int) -> np.ndarray:
        mask = np.zeros(n_steps, dtype=bool)
        for start, end in self.ranges:
            steps = step_range(start, end, dt)
            mask[steps.start:min(steps.stop, n_steps)] = True
        return mask


class TariffSchedule(BaseModel):
    """
    TOU rate schedule.

    Energy periods are matched first-match in file order and must cover the
    whole day for every season and day type; demand periods may overlap.
    """
    model_config = ConfigDict(frozen=True)

    name: str = "tariff"
    summer_months: Tuple[int, ...] = SUMMER_MONTHS
    energy_periods: Tuple[PeriodSpec, ...]
    demand_periods: Tuple[PeriodSpec, ...] = ()

    @model_validator(mode="after")
    def _check_coverage(self):
        samples = {
            "summer weekday": date(2023, 7, 5), "summer weekend": date(2023, 7, 8),
            "winter weekday": date(2023, 1, 4), "winter weekend": date(2023, 1, 7),
        }
        for label, day in samples.items():
            if (day.month in self.summer_months) != label.startswith("summer"):
                continue
            periods = [p for p in self.energy_periods if p.applies_to(day, self.summer_months)]
            for minute in range(0, 24 * 60):
                if not any(p.covers_minute(minute) for p in periods):
                    raise ValueError(f"energy periods leave {label} minute {minute} without a rate")
        ids = [p.id for p in self.demand_periods]
        if len(ids) != len(set(ids)):
            raise ValueError("demand period ids must be unique")
        return self

    def energy_rate(self, day: date, t: int, dt: float) -> float:
        """lambda(t) for one step of one day"""
        minute = int(round(t * dt * 60))
        for period in self.energy_periods:
            if period.applies_to(day, self.summer_months) and period.covers_minute(minute):
                return float(period.rate)
        raise CalendarMismatch(f"No energy rate for {day} step {t}")

    def energy_rate_matrix(self, days: Sequence[date], dt: float,
                           n_steps: Optional[int] = None) -> np.ndarray:
        n_steps = _grid_length(dt, n_steps)
        rates = np.full((len(days), n_steps), np.nan)
        for d, day in enumerate(days):
            for period in self.energy_periods:
                if not period.applies_to(day, self.summer_months):
                    continue
                mask = period.step_mask(dt, n_steps) & np.isnan(rates[d])
                rates[d, mask] = float(period.rate)
        if np.isnan(rates).any():
            raise CalendarMismatch("Energy periods do not cover every step on this grid")
        return rates

    def demand_masks(self, days: Sequence[date], dt: float,
                     n_steps: Optional[int] = None) -> Dict[str, np.ndarray]:
        """Per demand period, the (day, step) cells it measures"""
        n_steps = _grid_length(dt, n_steps)
        masks = {}
        for period in self.demand_periods:
            mask = np.zeros((len(days), n_steps), dtype=bool)
            day_mask = period.step_mask(dt, n_steps)
            for d, day in enumerate(days):
                if period.applies_to(day, self.summer_months):
                    mask[d] = day_mask
            masks[period.id] = mask
        return masks

    @property
    def demand_rates(self) -> Dict[str, float]:
        return {p.id: float(p.rate) for p in self.demand_periods}


def _grid_length(dt: float, n_steps: Optional[int]) -> int:
    full = steps_per_day(dt)
    if n_steps is None:
        return full
    if n_steps > full:
        raise CalendarMismatch(f"{n_steps} steps exceed a {full}-step day at dt={dt} h")
    return n_steps


class EventWindow(BaseModel):
    """One event day with its local-time window"""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    day: date = Field(alias="date")
    start: str = Field(default="14:00", alias="start_local")
    end: str = Field(default="18:00", alias="end_local")

    @field_validator("start", "end")
    @classmethod
    def _check_clocks(cls, value: str) -> str:
        return _check_clock(value)

    @model_validator(mode="after")
    def _check_order(self):
        if parse_clock(self.start) >= parse_clock(self.end):
            raise ValueError(f"event window {self.start}-{self.end} on {self.day} is empty")
        return self

    def steps(self, dt: float, n_steps: int) -> range:
        window = step_range(self.start, self.end, dt)
        return range(window.start, min(window.stop, n_steps))


def event_mask(events: Sequence[EventWindow], days: Sequence[date], dt: float,
               n_steps: int) -> np.ndarray:
    """(day, step) cells covered by any event window"""
    index = {day: d for d, day in enumerate(days)}
    mask = np.zeros((len(days), n_steps), dtype=bool)
    for event in events:
        d = index.get(event.day)
        if d is None:
            continue
        window = event.steps(dt, n_steps)
        mask[d, window.start:window.stop] = True
    return mask


class PdpPolicy(BaseModel):
    """Peak day pricing: reserve level, event surcharge, credits and calendar"""
    model_config = ConfigDict(frozen=True)

    capacity_reserve: float = Field(default=0.0, ge=0)
    event_rate: Decimal = Field(default=Decimal("0"), ge=0)
    credit_peak: Decimal = Field(default=Decimal("0"), ge=0)
    credit_partpeak: Decimal = Field(default=Decimal("0"), ge=0)
    events: Tuple[EventWindow, ...] = ()
    peak_period: str = "summer_peak"
    partpeak_period: str = "summer_part_peak"

    @property
    def event_days(self) -> List[date]:
        return sorted({e.day for e in self.events})

    def with_reserve(self, capacity_reserve: float) -> "PdpPolicy":
        return self.model_copy(update={"capacity_reserve": float(capacity_reserve)})

    def event_mask(self, days: Sequence[date], dt: float, n_steps: int) -> np.ndarray:
        return event_mask(self.events, days, dt, n_steps)


@dataclass(frozen=True)
class BaseloadProfile:
    """Site load without the EV fleet, one row per day"""
    load: np.ndarray
    days: Tuple[date, ...]

    def __post_init__(self):
        if self.load.ndim != 2 or self.load.shape[0] != len(self.days):
            raise CalendarMismatch(f"Baseload shape {self.load.shape} does not match {len(self.days)} days")
        if not np.isfinite(self.load).all():
            raise DataError("Baseload contains non-finite values")
        if (self.load < 0).any():
            logger.warning(f"Baseload has {int((self.load < 0).sum())} negative (export) steps")

    @classmethod
    def zeros(cls, days: Sequence[date], n_steps: int) -> "BaseloadProfile":
        return cls(np.zeros((len(days), n_steps)), tuple(days))

    @property
    def n_steps(self) -> int:
        return self.load.shape[1]


@dataclass(frozen=True)
class BillResult:
    c_ec: float = 0.0
    c_dc: float = 0.0
    pdp_credit_peak: float = 0.0
    pdp_credit_partpeak: float = 0.0
    c_pdp: float = 0.0
    demand_peaks: Dict[str, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.c_ec + self.c_dc - self.pdp_credit_peak - self.pdp_credit_partpeak + self.c_pdp

    def to_dict(self) -> dict:
        return {
            "c_ec": self.c_ec,
            "c_dc": self.c_dc,
            "pdp_credit_peak": self.pdp_credit_peak,
            "pdp_credit_partpeak": self.pdp_credit_partpeak,
            "c_pdp": self.c_pdp,
            "total": self.total,
            "demand_peaks": dict(self.demand_peaks),
        }
