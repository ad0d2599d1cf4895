"""
Scenario manifest: one JSON document naming the input files, the month,
the step length and which market products take part.
"""
import json
import logging
from datetime import date, timedelta
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .series import parse_baseload, parse_event_calendar, parse_prices, price_matrix
from .sessions import parse_sessions, to_sessions
from ..config.settings import settings
from ..fleet.envelopes import uncontrolled_profile, sessions_by_day
from ..fleet.models import ChargerSpec, VehicleSession
from ..markets.baseline import baselines_for_days
from ..markets.models import DbpProgram, PdrMarket, RegulationMarket
from ..milp.backends import SolverLimits
from ..problems.models import Scenario
from ..tariff.config import BUNDLED_E19, load_pdp_policy, load_tariff
from ..tariff.models import BaseloadProfile
from ..utils.errors import ConfigError, config_error
from ..utils.timegrid import month_days, steps_per_day

logger = logging.getLogger(__name__)

Events = Union[str, List[dict]]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ChargerConfig(_Section):
    p_min: float = 1.5
    p_max: float = 6.6
    eta_c: float = 1.0


class PdpConfig(_Section):
    events: Events = []
    capacity_reserve: Optional[float] = None
    policy: Optional[str] = None


class RegulationConfig(_Section):
    rho_up: float = -0.15
    rho_down: float = 0.15
    min_bid_kw: float = 10.0
    commitment_steps: int = 1
    fixed_baseline: bool = False


class PdrConfig(_Section):
    min_sell_kw: float = 10.0
    min_block_hours: float = 1.0


class DbpConfig(_Section):
    events: Events = []
    credit: float = 0.5
    min_reduction_kw: float = 10.0
    min_duration_hours: float = 2.0


class BaselineConfig(_Section):
    mode: Literal["history", "schedule"] = "history"
    n_days: int = Field(default_factory=lambda: settings.baseline_days, ge=1)
    min_days: Optional[int] = Field(default=None, ge=1)


class ScenarioManifest(_Section):
    name: str = "scenario"
    year: int
    month: int = Field(ge=1, le=12)
    days: Optional[List[date]] = None
    dt_minutes: int = Field(default_factory=lambda: settings.dt_minutes, gt=0)
    n_steps: Optional[int] = Field(default=None, gt=0)
    sessions: str
    baseload: Optional[str] = None
    tariff: Optional[str] = None
    prices: Optional[str] = None
    charger: ChargerConfig = ChargerConfig()
    pdp: Optional[PdpConfig] = None
    regulation: Optional[RegulationConfig] = None
    pdr: Optional[PdrConfig] = None
    dbp: Optional[DbpConfig] = None
    baseline: BaselineConfig = BaselineConfig()
    time_limit: Optional[float] = Field(default=None, gt=0)
    mip_gap: Optional[float] = Field(default=None, ge=0)


def read_manifest(path: Union[str, Path]) -> ScenarioManifest:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"Manifest not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}")
    try:
        return ScenarioManifest.model_validate(data)
    except ValidationError as e:
        raise config_error(f"manifest {path}", e)


def _steps(hours: float, dt: float) -> int:
    return max(1, int(round(hours / dt)))


def _history(sessions: List[VehicleSession], last: date, dt: float, n_steps: int) -> Dict[date, np.ndarray]:
    """Charge-on-arrival profile of every calendar day up to `last`"""
    if not sessions:
        return {}
    grouped = sessions_by_day(sessions)
    history = {}
    day = min(grouped)
    while day <= last:
        history[day] = uncontrolled_profile(grouped.get(day, []), dt, n_steps).p
        day += timedelta(days=1)
    return history


def load_scenario(path: Union[str, Path]) -> Scenario:
    """
    Assemble a Scenario from a manifest. Relative paths resolve against the
    manifest's directory; sessions before the first scenario day feed the
    history baselines.
    """
    path = Path(path)
    manifest = read_manifest(path)
    root = path.resolve().parent

    def resolve(name: Optional[str]) -> Optional[Path]:
        return None if name is None else (root / name)

    dt = manifest.dt_minutes / 60.0
    try:
        n_steps = manifest.n_steps or steps_per_day(dt)
    except ValueError as e:
        raise ConfigError(f"manifest {path}: {e}")
    days = tuple(manifest.days or month_days(manifest.year, manifest.month))
    charger = ChargerSpec(**manifest.charger.model_dump())

    records, diagnostics = parse_sessions(resolve(manifest.sessions))
    all_sessions = to_sessions(records, dt, charger, diagnostics)
    for diag in diagnostics:
        logger.warning(f"{manifest.sessions} line {diag.line}: {diag.message}")

    baseload = (parse_baseload(resolve(manifest.baseload), days, dt, n_steps) if manifest.baseload
                else BaseloadProfile.zeros(days, n_steps))
    tariff_path = resolve(manifest.tariff) or BUNDLED_E19
    tariff = load_tariff(tariff_path)

    prices = parse_prices(resolve(manifest.prices)) if manifest.prices else None

    def prices_for(column: str) -> np.ndarray:
        if prices is None:
            logger.warning(f"No price file, '{column}' unavailable on every step")
            return np.full((len(days), n_steps), np.nan)
        return price_matrix(prices, column, days, dt, n_steps)

    pdp = None
    if manifest.pdp is not None:
        events = parse_event_calendar(resolve(manifest.pdp.events) if isinstance(manifest.pdp.events, str)
                                      else manifest.pdp.events)
        pdp = load_pdp_policy(resolve(manifest.pdp.policy) or tariff_path, events,
                              manifest.pdp.capacity_reserve)

    regulation = None
    if manifest.regulation is not None:
        cfg = manifest.regulation
        regulation = RegulationMarket(
            price_up=prices_for("reg_up_usd_per_kw"),
            price_down=prices_for("reg_down_usd_per_kw"),
            rho_up=cfg.rho_up, rho_down=cfg.rho_down,
            min_bid_up=cfg.min_bid_kw, min_bid_down=cfg.min_bid_kw,
            commitment_len=cfg.commitment_steps,
        )

    baseline = None
    if (manifest.pdr or manifest.dbp) and manifest.baseline.mode == "history":
        history = _history(all_sessions, days[-1], dt, n_steps)
        baseline = baselines_for_days(history, days, manifest.baseline.n_days, manifest.baseline.min_days)

    pdr = None
    if manifest.pdr is not None:
        pdr = PdrMarket(price=prices_for("pdr_usd_per_kwh"), min_sell=manifest.pdr.min_sell_kw,
                        min_consecutive=_steps(manifest.pdr.min_block_hours, dt), baseline=baseline)

    dbp = None
    if manifest.dbp is not None:
        events = parse_event_calendar(resolve(manifest.dbp.events) if isinstance(manifest.dbp.events, str)
                                      else manifest.dbp.events)
        dbp = DbpProgram(credit=manifest.dbp.credit, events=tuple(events),
                         min_reduction=manifest.dbp.min_reduction_kw,
                         min_duration=_steps(manifest.dbp.min_duration_hours, dt), baseline=baseline)

    limits = SolverLimits(
        time_limit=manifest.time_limit or settings.time_limit,
        mip_gap=settings.mip_gap if manifest.mip_gap is None else manifest.mip_gap,
    )
    scenario = Scenario(
        year=manifest.year, month=manifest.month, sessions=tuple(all_sessions), baseload=baseload,
        tariff=tariff, days=days, dt=dt, n_steps=manifest.n_steps, pdp=pdp, regulation=regulation,
        pdr=pdr, dbp=dbp, limits=limits, baseline_mode=manifest.baseline.mode, name=manifest.name,
    )
    logger.info(f"Loaded scenario {scenario.name}: {len(days)} days, {len(scenario.sessions)} sessions, "
                f"dt={manifest.dt_minutes} min")
    return scenario
