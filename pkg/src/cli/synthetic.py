"""
Seeded synthetic fixture set: sessions (with history days for baselines),
site baseload, market prices, an event calendar and the manifest tying them
together.
"""
import json
import logging
from datetime import date, datetime, time, timedelta
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from ..ingestion.artifacts import write_atomic
from ..ingestion.sessions import RawSessionRecord, write_sessions
from ..utils.timegrid import is_weekend, month_days

logger = logging.getLogger(__name__)

ARRIVAL_WINDOW = (6.0, 10.0)
DWELL_HOURS = (4.0, 10.0)
MEDIAN_ENERGY_KWH = 10.0
CHARGER_KW = 6.6
LATEST_DEPARTURE = 23.5


def _fleet_day(rng: np.random.Generator, day: date, count: int, dwell_scale: float) -> List[RawSessionRecord]:
    records = []
    midnight = datetime.combine(day, time())
    for i in range(count):
        arrive = rng.uniform(*ARRIVAL_WINDOW)
        dwell = min(rng.uniform(*DWELL_HOURS) * dwell_scale, LATEST_DEPARTURE - arrive)
        energy = float(rng.lognormal(np.log(MEDIAN_ENERGY_KWH), 0.5))
        energy = min(energy, 0.9 * CHARGER_KW * dwell)
        arrival = midnight + timedelta(minutes=int(round(arrive * 60)))
        departure = midnight + timedelta(minutes=int(round((arrive + dwell) * 60)))
        if departure <= arrival:
            continue
        records.append(RawSessionRecord(
            vehicle_id=f"EV{i:03d}", arrival=arrival, departure=departure,
            energy_kwh=round(energy, 3), max_power_kw=None,
        ))
    return records


def _hours(index: pd.DatetimeIndex) -> np.ndarray:
    return index.hour + index.minute / 60.0


def _baseload(rng: np.random.Generator, days: List[date], dt_minutes: int) -> pd.DataFrame:
    index = pd.date_range(pd.Timestamp(days[0]), pd.Timestamp(days[-1]) + pd.Timedelta(days=1),
                          freq=f"{dt_minutes}min", inclusive="left")
    hours = _hours(index)
    load = 80.0 + 60.0 * np.exp(-((hours - 14.0) / 4.0) ** 2) + rng.normal(0.0, 3.0, len(index))
    weekend = np.array([is_weekend(ts.date()) for ts in index])
    load = np.where(weekend, 0.6 * load, load)
    return pd.DataFrame({"timestamp_iso8601": index.strftime("%Y-%m-%dT%H:%M:%S"),
                         "load_kw": np.round(np.maximum(load, 0.0), 3)})


def _prices(rng: np.random.Generator, days: List[date]) -> pd.DataFrame:
    index = pd.date_range(pd.Timestamp(days[0]), pd.Timestamp(days[-1]) + pd.Timedelta(days=1),
                          freq="1h", inclusive="left")
    hours = _hours(index)
    n = len(index)
    pdr = 0.03 + 0.05 * np.exp(-((hours - 17.0) / 3.0) ** 2) + rng.normal(0.0, 0.003, n)
    return pd.DataFrame({
        "timestamp_iso8601": index.strftime("%Y-%m-%dT%H:%M:%S"),
        "reg_up_usd_per_kw": np.round(rng.uniform(0.004, 0.015, n), 5),
        "reg_down_usd_per_kw": np.round(rng.uniform(0.002, 0.010, n), 5),
        "pdr_usd_per_kwh": np.round(np.maximum(pdr, 0.0), 5),
    })


def generate_fixture(out_dir: Union[str, Path], year: int = 2024, month: int = 7, seed: int = 0,
                     n_days: Optional[int] = None, vehicles_per_day: int = 6, history_days: int = 14,
                     dt_minutes: int = 15, dwell_scale: float = 1.0, n_events: int = 2) -> Path:
    """
    Write a fixture set and return its manifest path. The same seed gives
    byte-identical files.
    """
    rng = np.random.default_rng(seed)
    out_dir = Path(out_dir)
    days = month_days(year, month)
    if n_days:
        days = days[:n_days]

    records: List[RawSessionRecord] = []
    day = days[0] - timedelta(days=history_days)
    while day <= days[-1]:
        count = vehicles_per_day if not is_weekend(day) else max(1, vehicles_per_day // 3)
        records.extend(_fleet_day(rng, day, count, dwell_scale))
        day += timedelta(days=1)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_sessions(records, out_dir / "sessions.csv")

    write_atomic(out_dir / "baseload.csv", _baseload(rng, days, dt_minutes).to_csv(index=False, lineterminator="\n"))
    write_atomic(out_dir / "prices.csv", _prices(rng, days).to_csv(index=False, lineterminator="\n"))

    weekdays = [d for d in days if not is_weekend(d)]
    picks = sorted(rng.choice(len(weekdays), size=min(n_events, len(weekdays)), replace=False)) if weekdays else []
    events = [{"date": weekdays[k].isoformat(), "start_local": "14:00", "end_local": "18:00"} for k in picks]
    write_atomic(out_dir / "events.json", json.dumps(events, indent=2))

    manifest = {
        "name": f"synthetic-{year}-{month:02d}-s{seed}",
        "year": year,
        "month": month,
        "dt_minutes": dt_minutes,
        "sessions": "sessions.csv",
        "baseload": "baseload.csv",
        "prices": "prices.csv",
        "pdp": {"events": "events.json"},
        "regulation": {},
        "pdr": {},
        "dbp": {"events": "events.json"},
        "baseline": {"mode": "history", "n_days": 10, "min_days": 2},
    }
    if n_days:
        manifest["days"] = [d.isoformat() for d in days]
    path = out_dir / "manifest.json"
    write_atomic(path, json.dumps(manifest, indent=2))
    logger.info(f"Wrote synthetic fixture ({len(records)} sessions, {len(days)} days) to {out_dir}")
    return path
