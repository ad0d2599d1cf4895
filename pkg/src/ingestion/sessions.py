"""
Charging-session CSV parsing and conversion onto the day/step grid.
"""
import csv
import io
import logging
import math
from dataclasses import dataclass
from datetime import datetime, time, timedelta
from pathlib import Path
from typing import IO, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..fleet.envelopes import clip_session
from ..fleet.models import EPS_FEAS, ChargerSpec, VehicleSession
from ..utils.errors import DataError, EmptyAfterSnap, HeaderMismatch
from ..utils.timegrid import step_minutes

logger = logging.getLogger(__name__)

SESSION_COLUMNS = ["vehicle_id", "arrival_iso8601", "departure_iso8601", "energy_kwh", "max_power_kw"]

Source = Union[str, Path, IO[str], IO[bytes]]


@dataclass(frozen=True)
class Diagnostic:
    """A rejected or adjusted input row"""
    line: int
    message: str

    def to_dict(self) -> dict:
        return {"line": self.line, "message": self.message}


class RawSessionRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    vehicle_id: str = Field(min_length=1)
    arrival: datetime
    departure: datetime
    energy_kwh: float = Field(ge=0, allow_inf_nan=False)
    max_power_kw: Optional[float] = Field(default=None, gt=0, allow_inf_nan=False)

    @field_validator("arrival", "departure")
    @classmethod
    def _wall_clock(cls, value: datetime) -> datetime:
        # Site-local wall clock; an explicit offset is dropped, not converted
        return value.replace(tzinfo=None)

    @model_validator(mode="after")
    def _check_order(self):
        if self.arrival >= self.departure:
            raise ValueError("departure must be after arrival")
        return self


def read_text(source: Source) -> str:
    """Whole text of a path or stream as UTF-8"""
    try:
        if isinstance(source, (str, Path)):
            with open(source, "rb") as f:
                raw = f.read()
        else:
            raw = source.read()
        return raw.decode("utf-8-sig") if isinstance(raw, bytes) else raw
    except FileNotFoundError:
        raise DataError(f"Input file not found: {source}")
    except UnicodeDecodeError as e:
        raise DataError(f"{source}: not UTF-8 at byte {e.start}")


def _first_error(e: ValidationError) -> str:
    item = e.errors()[0]
    where = ".".join(str(p) for p in item.get("loc", ()))
    return f"{where}: {item.get('msg')}" if where else str(item.get("msg"))


def parse_sessions(source: Source) -> Tuple[List[RawSessionRecord], List[Diagnostic]]:
    """
    Parse a session CSV. Malformed rows and duplicate (vehicle_id, arrival)
    rows are reported with their line number; the first duplicate wins.

    Raises:
        HeaderMismatch: the header does not name the expected columns
    """
    text = read_text(source)
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise HeaderMismatch(SESSION_COLUMNS, [])
    except csv.Error as e:
        raise DataError(f"line 1: {e}")
    if sorted(header) != sorted(SESSION_COLUMNS):
        raise HeaderMismatch(SESSION_COLUMNS, header)

    records: List[RawSessionRecord] = []
    diagnostics: List[Diagnostic] = []
    seen = set()
    while True:
        try:
            row = next(reader)
        except StopIteration:
            break
        except csv.Error as e:
            diagnostics.append(Diagnostic(reader.line_num, f"unreadable row: {e}"))
            continue
        line = reader.line_num
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            diagnostics.append(Diagnostic(line, f"expected {len(header)} fields, found {len(row)}"))
            continue
        fields = {k: v.strip() for k, v in zip(header, row)}
        try:
            record = RawSessionRecord(
                vehicle_id=fields["vehicle_id"],
                arrival=fields["arrival_iso8601"],
                departure=fields["departure_iso8601"],
                energy_kwh=fields["energy_kwh"],
                max_power_kw=fields["max_power_kw"] or None,
            )
        except ValidationError as e:
            diagnostics.append(Diagnostic(line, _first_error(e)))
            continue
        key = (record.vehicle_id, record.arrival)
        if key in seen:
            diagnostics.append(Diagnostic(line, f"duplicate session {record.vehicle_id} at {record.arrival}"))
            continue
        seen.add(key)
        records.append(record)

    if diagnostics:
        logger.warning(f"Session file: {len(records)} rows accepted, {len(diagnostics)} rejected")
    return records, diagnostics


def _snap(moment: datetime, minutes: int, up: bool) -> datetime:
    midnight = datetime.combine(moment.date(), time())
    offset = (moment - midnight).total_seconds() / 60.0
    steps = math.ceil(offset / minutes - 1e-9) if up else math.floor(offset / minutes + 1e-9)
    return midnight + timedelta(minutes=steps * minutes)


def to_sessions(records: List[RawSessionRecord], dt: float,
                charger_default: ChargerSpec = ChargerSpec(),
                diagnostics: Optional[List[Diagnostic]] = None) -> List[VehicleSession]:
    """
    Grid sessions from parsed records.

    Arrival snaps up and departure down; sessions crossing midnight are
    split per day with energy shared in proportion to each part's charging
    capacity; undeliverable requests are clipped. A day part whose energy
    is below one step at p_min moves its energy to the largest other part,
    and a whole request that small is raised to one step at p_min and
    reported. Sessions that snap to nothing are reported and skipped.
    """
    minutes = step_minutes(dt)
    sessions: List[VehicleSession] = []
    for n, record in enumerate(records):
        arrival = _snap(record.arrival, minutes, up=True)
        departure = _snap(record.departure, minutes, up=False)
        if arrival >= departure:
            err = EmptyAfterSnap(f"Session {record.vehicle_id} at {record.arrival} vanishes on a {minutes}-minute grid")
            logger.warning(str(err))
            if diagnostics is not None:
                diagnostics.append(Diagnostic(n + 2, str(err)))
            continue

        spec = charger_default
        if record.max_power_kw is not None:
            spec = ChargerSpec(p_min=min(charger_default.p_min, record.max_power_kw),
                               p_max=record.max_power_kw, eta_c=charger_default.eta_c)

        parts = []
        start = arrival
        while start < departure:
            midnight = datetime.combine(start.date() + timedelta(days=1), time())
            end = min(departure, midnight)
            parts.append((start, end))
            start = end
        total = (departure - arrival).total_seconds()
        energies = [record.energy_kwh * (end - start).total_seconds() / total for start, end in parts]
        floor = min(spec.p_min, spec.rate) * dt
        energies = _merge_small_parts(energies, floor)

        if 0 < record.energy_kwh < floor - EPS_FEAS:
            message = (f"Session {record.vehicle_id} at {record.arrival} requests {record.energy_kwh:.3f} kWh, "
                       f"below one step at the threshold; raised to {floor:.3f} kWh")
            logger.warning(message)
            if diagnostics is not None:
                diagnostics.append(Diagnostic(n + 2, message))
            energies = [floor if e > 0 else 0.0 for e in energies]

        for (start, end), energy in zip(parts, energies):
            if energy <= 0 < record.energy_kwh:
                continue
            day_start = datetime.combine(start.date(), time())
            session = VehicleSession(
                vehicle_id=record.vehicle_id,
                day=start.date(),
                t_arrive=int(round((start - day_start).total_seconds() / 60 / minutes)),
                t_depart=int(round((end - day_start).total_seconds() / 60 / minutes)),
                e_req=energy,
                spec=spec,
            )
            sessions.append(clip_session(session, dt))
    return sessions


def _merge_small_parts(energies: List[float], floor: float) -> List[float]:
    """
    Move the energy of day parts too small to deliver at the charging
    threshold into the largest other part. A single part is left alone.
    """
    energies = list(energies)
    if len(energies) < 2:
        return energies
    for i in sorted(range(len(energies)), key=lambda k: energies[k]):
        if 0 < energies[i] < floor - EPS_FEAS:
            target = max((k for k in range(len(energies)) if k != i), key=lambda k: energies[k])
            if energies[target] <= 0:
                continue
            energies[target] += energies[i]
            energies[i] = 0.0
    return energies


def write_sessions(records: List[RawSessionRecord], path: Union[str, Path]):
    """Serialize records in the same CSV layout parse_sessions reads"""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(SESSION_COLUMNS)
        for r in records:
            writer.writerow([
                r.vehicle_id, r.arrival.isoformat(), r.departure.isoformat(), repr(r.energy_kwh),
                "" if r.max_power_kw is None else repr(r.max_power_kw),
            ])
