"""
Step-grid helpers shared by ingestion, billing and the CLI.
Steps are indexed from local midnight on wall-clock time.
"""
import calendar
from datetime import date, datetime, time, timedelta
from typing import List

MINUTES_PER_DAY = 24 * 60


def steps_per_day(dt: float) -> int:
    """Number of steps in a day for a step length in hours"""
    steps = round(24.0 / dt)
    if abs(steps * dt - 24.0) > 1e-9:
        raise ValueError(f"Step length {dt} h does not divide a day")
    return steps


def step_minutes(dt: float) -> int:
    return int(round(dt * 60))


def parse_clock(text: str) -> int:
    """Minutes after midnight for 'HH:MM' (24:00 allowed)"""
    hours, minutes = text.strip().split(":")
    value = int(hours) * 60 + int(minutes)
    if not 0 <= value <= MINUTES_PER_DAY:
        raise ValueError(f"Clock time out of range: {text}")
    return value


def step_range(start: str, end: str, dt: float) -> range:
    """Steps whose start lies in [start, end) for local clock strings"""
    minutes = step_minutes(dt)
    lo = -(-parse_clock(start) // minutes)
    hi = -(-parse_clock(end) // minutes)
    return range(lo, hi)


def month_days(year: int, month: int) -> List[date]:
    n = calendar.monthrange(year, month)[1]
    return [date(year, month, d) for d in range(1, n + 1)]


def step_timestamp(day: date, t: int, dt: float) -> datetime:
    return datetime.combine(day, time()) + timedelta(minutes=t * step_minutes(dt))


def is_weekend(day: date) -> bool:
    return day.weekday() >= 5
