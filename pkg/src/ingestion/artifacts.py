"""
Result artifacts written by `run` and their readers.

schedule.csv   one row per (day, step): load, actual power, baseline, bids, sell, reduction
bill.csv       one row per dollar component
month_result.json   MonthResult.to_dict()
"""
import csv
import io
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from .sessions import Source, read_text
from ..problems.models import MonthResult
from ..utils.errors import DataError, HeaderMismatch
from ..utils.timegrid import step_timestamp

logger = logging.getLogger(__name__)

SCHEDULE_COLUMNS = [
    "date", "step", "timestamp", "baseload_kw", "actual_kw", "baseline_kw",
    "bid_up_kw", "bid_down_kw", "sell_kw", "reduction_kw",
]
BILL_COLUMNS = ["component", "usd"]


def write_atomic(path: Union[str, Path], text: str):
    """Write through a temporary sibling so readers never see a partial file"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def schedule_csv(result: MonthResult, baseload: np.ndarray) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SCHEDULE_COLUMNS)
    power = result.power
    optional = [result.baseline, result.bid_up, result.bid_down, result.sell, result.reduction]
    for d, day in enumerate(result.days):
        for t in range(power.shape[1]):
            extras = [None if series is None else series[d][t] for series in optional]
            writer.writerow([
                day.isoformat(), t, step_timestamp(day, t, result.dt).isoformat(),
                _cell(baseload[d, t]), _cell(power[d, t]), *[_cell(v) for v in extras],
            ])
    return buffer.getvalue()


def bill_rows(result: MonthResult) -> List[List]:
    bill = result.bill
    rows = [
        ["energy_charge", bill.c_ec],
        ["demand_charge", bill.c_dc],
        ["pdp_credit_peak", bill.pdp_credit_peak],
        ["pdp_credit_partpeak", bill.pdp_credit_partpeak],
        ["pdp_event_charge", bill.c_pdp],
        ["bill_total", bill.total],
        ["regulation_revenue", result.r_as],
        ["pdr_revenue", result.r_pdr],
        ["dbp_revenue", result.r_dbp],
        ["net_cost", result.settled_objective],
    ]
    if result.uncontrolled_bill is not None:
        rows.append(["uncontrolled_bill_total", result.uncontrolled_bill.total])
    return rows


def bill_csv(result: MonthResult) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(BILL_COLUMNS)
    for name, amount in bill_rows(result):
        writer.writerow([name, repr(float(amount))])
    return buffer.getvalue()


def write_month_result(result: MonthResult, baseload: np.ndarray, out_dir: Union[str, Path]) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    paths = {
        "month_result": out_dir / "month_result.json",
        "schedule": out_dir / "schedule.csv",
        "bill": out_dir / "bill.csv",
    }
    write_atomic(paths["month_result"], json.dumps(result.to_dict(), indent=2))
    write_atomic(paths["schedule"], schedule_csv(result, baseload))
    write_atomic(paths["bill"], bill_csv(result))
    logger.info(f"Wrote {', '.join(p.name for p in paths.values())} to {out_dir}")
    return paths


@dataclass(frozen=True)
class ScheduleTable:
    """schedule.csv as (days, steps) arrays; absent columns are None"""
    days: List[date]
    columns: Dict[str, Optional[np.ndarray]]

    def __getitem__(self, name: str) -> Optional[np.ndarray]:
        return self.columns[name]


def _rows(source: Source, expected: List[str]) -> List[List[str]]:
    reader = csv.reader(io.StringIO(read_text(source)))
    try:
        header = next(reader)
    except StopIteration:
        raise HeaderMismatch(expected, [])
    if header != expected:
        raise HeaderMismatch(expected, header)
    return [row for row in reader if row]


def read_schedule_csv(source: Source) -> ScheduleTable:
    rows = _rows(source, SCHEDULE_COLUMNS)
    try:
        days = sorted({date.fromisoformat(r[0]) for r in rows})
        n_steps = max((int(r[1]) for r in rows), default=-1) + 1
    except (ValueError, IndexError) as e:
        raise DataError(f"schedule: bad date or step: {e}")
    index = {day: d for d, day in enumerate(days)}
    numeric = SCHEDULE_COLUMNS[3:]
    grids = {name: np.full((len(days), n_steps), np.nan) for name in numeric}
    present = {name: False for name in numeric}
    for line, row in enumerate(rows, start=2):
        if len(row) != len(SCHEDULE_COLUMNS):
            raise DataError(f"schedule line {line}: expected {len(SCHEDULE_COLUMNS)} fields, found {len(row)}")
        d, t = index[date.fromisoformat(row[0])], int(row[1])
        for name, cell in zip(numeric, row[3:]):
            if cell != "":
                try:
                    value = float(cell)
                except ValueError:
                    raise DataError(f"schedule line {line}: '{cell}' is not a number")
                if not math.isfinite(value):
                    raise DataError(f"schedule line {line}: non-finite {name}")
                grids[name][d, t] = value
                present[name] = True
    if any(np.isnan(grids["actual_kw"]).ravel()):
        raise DataError("schedule is missing power on some steps")
    return ScheduleTable(days, {n: (grids[n] if present[n] else None) for n in numeric})


def read_bill_csv(source: Source) -> Dict[str, float]:
    bill = {}
    for line, row in enumerate(_rows(source, BILL_COLUMNS), start=2):
        if len(row) != 2:
            raise DataError(f"bill line {line}: expected 2 fields, found {len(row)}")
        try:
            bill[row[0]] = float(row[1])
        except ValueError:
            raise DataError(f"bill line {line}: '{row[1]}' is not a number")
    return bill


def read_month_result(source: Source) -> dict:
    try:
        data = json.loads(read_text(source))
    except json.JSONDecodeError as e:
        raise DataError(f"{source}: invalid JSON at line {e.lineno}: {e.msg}")
    missing = [k for k in ("problem", "objective", "bill", "days", "power") if k not in data]
    if missing:
        raise DataError(f"{source}: month result lacks {missing}")
    return data
