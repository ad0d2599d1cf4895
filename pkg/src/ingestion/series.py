"""
Time-series inputs: market prices, site baseload and event calendars,
resampled onto the scenario step grid with pandas.
"""
import io
import json
import logging
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import TypeAdapter, ValidationError

from .sessions import Source, read_text
from ..tariff.models import BaseloadProfile, EventWindow
from ..utils.errors import CalendarMismatch, ConfigError, DataError, IrregularSource, config_error
from ..utils.timegrid import step_minutes, steps_per_day

logger = logging.getLogger(__name__)

PRICE_COLUMNS = ("reg_up_usd_per_kw", "reg_down_usd_per_kw", "pdr_usd_per_kwh")


@dataclass(frozen=True)
class PriceSeries:
    """Prices per product on a regular index; NaN marks an uncovered step"""
    frame: pd.DataFrame

    @property
    def step(self) -> pd.Timedelta:
        return _source_step(self.frame.index)


def _read_frame(source: Source, time_column: str) -> pd.DataFrame:
    text = read_text(source)
    try:
        frame = pd.read_csv(io.StringIO(text))
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"{source}: {e}")
    frame.columns = [str(c).strip() for c in frame.columns]
    if time_column not in frame.columns:
        raise DataError(f"{source}: missing '{time_column}' column")
    stamps = pd.to_datetime(frame[time_column], errors="coerce")
    bad = stamps.isna()
    if bad.any():
        raise DataError(f"{source}: unparseable timestamp on line {int(np.flatnonzero(bad)[0]) + 2}")
    # Wall-clock local time
    if getattr(stamps.dt, "tz", None) is not None:
        stamps = stamps.dt.tz_localize(None)
    frame = frame.drop(columns=[time_column])
    frame.index = pd.DatetimeIndex(stamps)
    diffs = frame.index.to_series().diff().dropna()
    if (diffs <= pd.Timedelta(0)).any():
        where = int(np.flatnonzero((diffs <= pd.Timedelta(0)).to_numpy())[0]) + 3
        raise DataError(f"{source}: timestamps not strictly increasing at line {where}")
    return frame.apply(pd.to_numeric, errors="coerce")


def _source_step(index: pd.DatetimeIndex) -> pd.Timedelta:
    if len(index) < 2:
        raise IrregularSource("At least two timestamps are needed to infer the resolution")
    diffs = index.to_series().diff().dropna()
    step = diffs.min()
    if ((diffs / step) % 1 != 0).any():
        raise IrregularSource(f"Timestamps are not on a regular {step} grid")
    gaps = int((diffs > step).sum())
    if gaps:
        logger.warning(f"Series has {gaps} gaps on its {step} grid")
    return step


def parse_prices(source: Source) -> PriceSeries:
    frame = _read_frame(source, "timestamp_iso8601")
    unknown = [c for c in frame.columns if c not in PRICE_COLUMNS]
    if unknown:
        logger.warning(f"Ignoring unknown price columns {unknown}")
    frame = frame[[c for c in PRICE_COLUMNS if c in frame.columns]]
    return PriceSeries(frame)


def _resample(frame: pd.DataFrame, dt: float) -> pd.DataFrame:
    """Replicate coarse values, average fine ones, leave on-grid data alone"""
    source = _source_step(frame.index)
    target = pd.Timedelta(minutes=step_minutes(dt))
    if source == target:
        grid = pd.date_range(frame.index[0], frame.index[-1], freq=target)
        return frame.reindex(grid)
    if source > target:
        if source % target != pd.Timedelta(0):
            raise IrregularSource(f"{source} source does not split into {target} steps")
        grid = pd.date_range(frame.index[0], frame.index[-1] + source - target, freq=target)
        full = frame.reindex(pd.date_range(frame.index[0], frame.index[-1], freq=source))
        return full.reindex(grid, method="ffill", limit=int(source / target) - 1)
    if target % source != pd.Timedelta(0):
        raise IrregularSource(f"{source} source does not aggregate into {target} steps")
    return frame.resample(target).mean()


def resample_prices(series: PriceSeries, dt: float) -> PriceSeries:
    return PriceSeries(_resample(series.frame, dt))


def _day_matrix(column: pd.Series, days: Sequence[date], dt: float, n_steps: int) -> np.ndarray:
    step = pd.Timedelta(minutes=step_minutes(dt))
    out = np.full((len(days), n_steps), np.nan)
    for d, day in enumerate(days):
        stamps = pd.date_range(pd.Timestamp(day), periods=n_steps, freq=step)
        out[d] = column.reindex(stamps).to_numpy(dtype=float)
    return out


def price_matrix(series: PriceSeries, column: str, days: Sequence[date], dt: float,
                 n_steps: Optional[int] = None) -> np.ndarray:
    """(days, steps) prices for one product; NaN where it is not offered"""
    n_steps = n_steps or steps_per_day(dt)
    if column not in series.frame.columns:
        return np.full((len(days), n_steps), np.nan)
    on_grid = series if series.step == pd.Timedelta(minutes=step_minutes(dt)) else resample_prices(series, dt)
    return _day_matrix(on_grid.frame[column], days, dt, n_steps)


def parse_baseload(source: Source, days: Sequence[date], dt: float, n_steps: Optional[int] = None) -> BaseloadProfile:
    """
    Site load on the scenario grid.

    Raises:
        CalendarMismatch: a scenario step has no load value
    """
    n_steps = n_steps or steps_per_day(dt)
    frame = _read_frame(source, "timestamp_iso8601")
    if "load_kw" not in frame.columns:
        raise DataError(f"{source}: missing 'load_kw' column")
    load = _day_matrix(_resample(frame[["load_kw"]], dt)["load_kw"], days, dt, n_steps)
    missing = np.isnan(load)
    if missing.any():
        d, t = np.argwhere(missing)[0]
        raise CalendarMismatch(f"Baseload missing {int(missing.sum())} steps, first on {days[d]} step {t}")
    return BaseloadProfile(load, tuple(days))


def parse_event_calendar(source: Union[str, Path, list]) -> List[EventWindow]:
    """Event list of {date, start_local, end_local}; times default to 14:00-18:00"""
    if isinstance(source, list):
        data = source
    else:
        try:
            data = json.loads(read_text(source))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{source}: invalid JSON at line {e.lineno}: {e.msg}")
    try:
        events = TypeAdapter(List[EventWindow]).validate_python(data)
    except ValidationError as e:
        raise config_error("event calendar" if isinstance(source, list) else f"event calendar {source}", e)
    return sorted(events, key=lambda e: (e.day, e.start))
