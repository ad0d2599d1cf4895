"""
Monthly pipeline: build, solve, extract, re-settle and cross-check.
"""
import logging
from typing import List, Optional, Union

import numpy as np

from .builders import BUILDERS
from .models import EPS_OBJ, MonthResult, ProblemId, Scenario
from ..fleet.envelopes import uncontrolled_profile
from ..fleet.feasibility import check_feasible
from ..fleet.models import EPS_FEAS, AggregateProfile
from ..markets.models import RegulationPlan
from ..markets.settlement import dbp_revenue, pdr_revenue, regulation_revenue
from ..milp.backends import Solution, SolverBackend, SolverLimits, SolveStatus, solve
from ..tariff.billing import settle_bill
from ..tariff.models import BillResult
from ..utils.errors import EnvelopeViolation, InconsistentObjective, SolverError

logger = logging.getLogger(__name__)

# Solver noise tolerated when auditing extracted schedules
SCHEDULE_TOL = 1e-5


def _grid(solution: Solution, prefix: str, scenario: Scenario) -> np.ndarray:
    n_days, n_steps = scenario.shape
    values = np.array([[solution.value(f"{prefix}_{d}_{t}") for t in range(n_steps)]
                       for d in range(n_days)]).reshape(n_days, n_steps)
    values[np.abs(values) <= EPS_FEAS] = 0.0
    return values


def settle_power(scenario: Scenario, power: np.ndarray, include_pdp: bool) -> BillResult:
    total = scenario.baseload.load + power
    policy = scenario.pdp if include_pdp else None
    return settle_bill(total, scenario.days, scenario.tariff, policy, scenario.dt)


def uncontrolled_power(scenario: Scenario) -> np.ndarray:
    """Charge-on-arrival reference schedule per day"""
    rows = [uncontrolled_profile(scenario.sessions_on(day), scenario.dt, scenario.steps).p
            for day in scenario.days]
    return np.stack(rows) if rows else np.zeros(scenario.shape)


def _with_schedule_baseline(scenario: Scenario, problem: ProblemId,
                            backend: Optional[SolverBackend], limits: SolverLimits) -> Scenario:
    reference = ProblemId.P2 if scenario.pdp is not None else ProblemId.P1
    logger.info(f"Deriving the {problem.value} baseline from the {reference.value} schedule")
    base = optimize_month(scenario, reference, backend, limits).power
    if problem == ProblemId.P4:
        return scenario.replace(pdr=scenario.pdr.with_baseline(base))
    return scenario.replace(dbp=scenario.dbp.with_baseline(base))


def with_fixed_regulation_baseline(scenario: Scenario, backend: Optional[SolverBackend] = None,
                                   limits: Optional[SolverLimits] = None) -> Scenario:
    """Pin the regulation baseline to the cost-optimal schedule without bids"""
    reference = ProblemId.P2 if scenario.pdp is not None else ProblemId.P1
    logger.info(f"Fixing the regulation baseline to the {reference.value} schedule")
    base = optimize_month(scenario, reference, backend, limits or scenario.limits).power
    return scenario.replace(regulation_baseline=base)


def _check_envelopes(name: str, scenario: Scenario, schedules: List[AggregateProfile]):
    failures = []
    for day, profile, env in zip(scenario.days, schedules, scenario.envelopes()):
        verdict = check_feasible(profile, env, scenario.dt, tol=SCHEDULE_TOL)
        if not verdict:
            logger.error(f"{name}: {day} fails the envelope check at step {verdict.step}: {verdict.reason}")
            failures.append(day.isoformat())
    if failures:
        raise EnvelopeViolation(f"{name}: schedule leaves the charging envelope on {', '.join(failures)}",
                                failures)


def optimize_month(scenario: Scenario, problem: Union[str, ProblemId],
                   backend: Optional[SolverBackend] = None,
                   limits: Optional[SolverLimits] = None) -> MonthResult:
    """
    Solve one monthly problem and settle the schedule it returns.

    Every dollar component is recomputed from the extracted schedule by the
    billing and market engines and compared with the model objective.

    Raises:
        SolverError: infeasible, unbounded or no incumbent within limits
        InconsistentObjective: settlement disagrees with the objective
        EnvelopeViolation: a returned schedule leaves its day's envelope
    """
    problem = ProblemId.parse(problem)
    limits = limits or scenario.limits
    if problem == ProblemId.P4 and scenario.pdr is not None and scenario.baseline_mode == "schedule":
        scenario = _with_schedule_baseline(scenario, problem, backend, limits)
    if problem == ProblemId.P5 and scenario.dbp is not None and scenario.baseline_mode == "schedule":
        scenario = _with_schedule_baseline(scenario, problem, backend, limits)

    model = BUILDERS[problem](scenario)
    solution = solve(model, backend, limits)
    if solution.status not in (SolveStatus.OPTIMAL, SolveStatus.LIMIT) or solution.objective is None:
        raise SolverError(f"{model.name}: solver returned {solution.status.value}")
    if solution.status == SolveStatus.LIMIT:
        logger.warning(f"{model.name}: limit reached, settling the best incumbent")

    power = _grid(solution, "p", scenario)
    schedules = [AggregateProfile.from_power(row) for row in power]
    _check_envelopes(model.name, scenario, schedules)
    bill = settle_power(scenario, power, include_pdp=problem == ProblemId.P2)
    result = MonthResult(
        problem=problem,
        objective=float(solution.objective),
        bill=bill,
        days=scenario.days,
        dt=scenario.dt,
        schedules=schedules,
        status=solution.status.value,
        stats=dict(solution.stats),
    )

    if problem == ProblemId.P3:
        market = scenario.regulation
        baseline = (_grid(solution, "base", scenario) if scenario.regulation_baseline is None
                    else np.where(scenario.regulation_baseline > EPS_FEAS, scenario.regulation_baseline, 0.0))
        tracks = {kind: _grid(solution, f"{kind}_on", scenario) for kind in ("ru", "rd", "xu", "xd")}
        tracks["base"] = (_grid(solution, "base_on", scenario) if scenario.regulation_baseline is None
                          else (baseline > EPS_FEAS).astype(float))
        plan = RegulationPlan(baseline, _grid(solution, "ru", scenario), _grid(solution, "rd", scenario), tracks)
        drift = float(np.max(np.abs(plan.actual(market) - power))) if power.size else 0.0
        if drift > SCHEDULE_TOL:
            logger.warning(f"{model.name}: actual power departs from baseline plus utilization by {drift:.3g} kW")
        result.baseline, result.bid_up, result.bid_down = plan.baseline, plan.bid_up, plan.bid_down
        result.tracks = plan.tracks
        result.r_as = regulation_revenue(plan, market, scenario.dt)
    elif problem == ProblemId.P4:
        result.baseline = scenario.pdr.baseline
        result.sell = _grid(solution, "sell", scenario)
        result.r_pdr = pdr_revenue(result.sell, scenario.pdr, scenario.dt)
    elif problem == ProblemId.P5:
        result.baseline = scenario.dbp.baseline
        result.reduction = _grid(solution, "rdc", scenario)
        result.r_dbp = dbp_revenue(result.reduction, scenario.dbp, scenario.days, scenario.dt)

    tolerance = EPS_OBJ * max(1.0, abs(result.objective))
    if abs(result.objective - result.settled_objective) > tolerance:
        raise InconsistentObjective(
            f"{model.name}: objective {result.objective:.6f} vs settled {result.settled_objective:.6f}"
        )

    result.uncontrolled_bill = settle_power(scenario, uncontrolled_power(scenario),
                                            include_pdp=problem == ProblemId.P2)
    logger.info(f"{model.name}: objective ${result.objective:.2f}, revenue ${result.revenue:.2f}, "
                f"savings ${result.savings:.2f} vs uncontrolled")
    return result
