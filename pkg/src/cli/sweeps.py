"""
Sensitivity sweeps over one scenario parameter.

Points are independent monthly solves; they run concurrently in worker
threads, at most `jobs` at a time, and each point's row is written as soon
as it finishes.
"""
import asyncio
import json
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from ..fleet.envelopes import flexibility_index, stretch_sessions
from ..ingestion.artifacts import write_atomic
from ..milp.backends import SolverBackend
from ..problems.models import MonthResult, ProblemId, Scenario
from ..problems.optimize import optimize_month, with_fixed_regulation_baseline
from ..tariff.billing import pdp_settlement
from ..utils.errors import EvdrError, MissingProduct, NoEventDays, UnknownParameter

logger = logging.getLogger(__name__)

SWEEP_PARAMETERS = ("pdp_crl", "flex_ratio", "reg_threshold", "baseline_mode")
BASELINE_MODES = ("free", "fixed")


def _require(value, what: str):
    if value is None:
        raise MissingProduct(f"This sweep needs a {what}")
    return value


def _pdp_point(scenario: Scenario, value: float, backend: Optional[SolverBackend]) -> dict:
    policy = _require(scenario.pdp, "PDP policy").with_reserve(value)
    result = optimize_month(scenario.replace(pdp=policy), ProblemId.P2, backend)
    settlement = pdp_settlement(scenario.baseload.load + result.power, scenario.days,
                                scenario.tariff, policy, scenario.dt)
    return {
        "objective": result.objective,
        "bill_total": result.bill.total,
        "pdp_credit": settlement.credit_peak + settlement.credit_partpeak,
        "pdp_event_charge": settlement.c_pdp,
        "benefit": settlement.benefit,
    }


def _regulation_row(result: MonthResult) -> dict:
    return {"objective": result.objective, "bill_total": result.bill.total, "r_as": result.r_as}


def _flex_point(scenario: Scenario, value: float, backend: Optional[SolverBackend]) -> dict:
    _require(scenario.regulation, "regulation market")
    stretched = scenario.replace(sessions=tuple(stretch_sessions(scenario.sessions, value, scenario.dt,
                                                                 scenario.steps)))
    row = {"flexibility_index": flexibility_index(stretched.envelopes())}
    row.update(_regulation_row(optimize_month(stretched, ProblemId.P3, backend)))
    return row


def _threshold_point(scenario: Scenario, value: float, backend: Optional[SolverBackend]) -> dict:
    market = _require(scenario.regulation, "regulation market").with_threshold(value)
    return _regulation_row(optimize_month(scenario.replace(regulation=market), ProblemId.P3, backend))


def _baseline_point(scenario: Scenario, value: str, backend: Optional[SolverBackend]) -> dict:
    _require(scenario.regulation, "regulation market")
    if value == "fixed":
        scenario = with_fixed_regulation_baseline(scenario.replace(regulation_baseline=None), backend)
    else:
        scenario = scenario.replace(regulation_baseline=None)
    return _regulation_row(optimize_month(scenario, ProblemId.P3, backend))


POINT_EVALUATORS: Dict[str, Callable] = {
    "pdp_crl": _pdp_point,
    "flex_ratio": _flex_point,
    "reg_threshold": _threshold_point,
    "baseline_mode": _baseline_point,
}


def sweep_points(parameter: str, grid: Optional[Sequence[float]]) -> List:
    if parameter not in POINT_EVALUATORS:
        raise UnknownParameter(f"Unknown sweep parameter '{parameter}', expected one of {', '.join(SWEEP_PARAMETERS)}")
    if parameter == "baseline_mode":
        return list(BASELINE_MODES)
    if not grid:
        raise UnknownParameter(f"Sweep '{parameter}' needs a grid")
    return sorted(grid)


def _check_scenario(scenario: Scenario, parameter: str):
    if parameter == "pdp_crl":
        policy = _require(scenario.pdp, "PDP policy")
        if not set(policy.event_days) & set(scenario.days):
            raise NoEventDays(f"No PDP event falls inside scenario {scenario.name}")


async def _evaluate(semaphore: asyncio.Semaphore, scenario: Scenario, parameter: str, k: int, value,
                    backend: Optional[SolverBackend], point_dir: Optional[Path]) -> dict:
    row = {"scenario": scenario.name, "parameter": parameter, "value": value}
    async with semaphore:
        try:
            row.update(await asyncio.to_thread(POINT_EVALUATORS[parameter], scenario, value, backend))
            row["status"] = "ok"
        except EvdrError as e:
            logger.warning(f"{scenario.name} {parameter}={value}: {type(e).__name__}: {e}")
            row.update({"status": "failed", "error": str(e)})
    if point_dir is not None:
        write_atomic(point_dir / f"point_{k:03d}.json", json.dumps(row, indent=2, default=float))
    return row


async def run_sweep(scenario: Scenario, parameter: str, grid: Optional[Sequence[float]],
                    jobs: int = 1, backend: Optional[SolverBackend] = None,
                    out_dir: Optional[Path] = None) -> pd.DataFrame:
    """
    Evaluate every grid point; rows come back in grid order whatever the
    completion order.

    Raises:
        UnknownParameter: parameter outside SWEEP_PARAMETERS or empty grid
        NoEventDays: pdp_crl sweep over a scenario without events
    """
    points = sweep_points(parameter, grid)
    _check_scenario(scenario, parameter)
    if backend is not None and not backend.shareable:
        jobs = 1
    semaphore = asyncio.Semaphore(max(1, jobs))
    point_dir = None if out_dir is None else Path(out_dir) / f"sweep_{parameter}" / scenario.name
    logger.info(f"Sweeping {parameter} over {len(points)} points for {scenario.name} with {jobs} jobs")
    rows = await asyncio.gather(*(
        _evaluate(semaphore, scenario, parameter, k, value, backend, point_dir)
        for k, value in enumerate(points)
    ))
    return pd.DataFrame(rows)


def write_sweep_table(table: pd.DataFrame, parameter: str, out_dir: Path) -> Path:
    path = Path(out_dir) / f"sweep_{parameter}.csv"
    write_atomic(path, table.to_csv(index=False, lineterminator="\n"))
    logger.info(f"Wrote {path}")
    return path


def flexibility_revenue_correlation(scenarios: Sequence[Scenario],
                                    backend: Optional[SolverBackend] = None) -> dict:
    """Pearson correlation between monthly flexibility index and regulation revenue"""
    points: List[Tuple[str, float, float]] = []
    for scenario in scenarios:
        _require(scenario.regulation, "regulation market")
        index = flexibility_index(scenario.envelopes())
        revenue = optimize_month(scenario, ProblemId.P3, backend).r_as
        points.append((scenario.name, index, revenue))

    pearson = None
    x = np.array([p[1] for p in points])
    y = np.array([p[2] for p in points])
    if len(points) >= 2 and np.ptp(x) > 0 and np.ptp(y) > 0:
        pearson = float(stats.pearsonr(x, y)[0])
    else:
        logger.warning("Correlation undefined: fewer than two months or a constant series")
    return {
        "pearson": pearson,
        "points": [{"scenario": n, "flexibility_index": i, "r_as": r} for n, i, r in points],
    }
