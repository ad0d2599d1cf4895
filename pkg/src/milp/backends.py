"""
Solver adapters.
A backend loads a MipModel, solves it within limits and hands back a
Solution keyed by variable name.
"""
import logging
import math
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Union

import numpy as np
from scipy.optimize import linprog

from .model import EPS_FEAS, EPS_INT, MipModel, Variable
from ..config.settings import settings
from ..utils.errors import BackendUnavailable, SolverError

logger = logging.getLogger(__name__)


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT = "limit"


@dataclass(frozen=True)
class SolverLimits:
    time_limit: float = 300.0
    mip_gap: float = 1e-4

    @classmethod
    def from_settings(cls) -> "SolverLimits":
        return cls(time_limit=settings.time_limit, mip_gap=settings.mip_gap)


@dataclass
class Solution:
    status: SolveStatus
    objective: Optional[float]
    values: Dict[str, float] = field(default_factory=dict)
    stats: Dict[str, Union[int, float, str]] = field(default_factory=dict)

    def value(self, var: Union[Variable, str]) -> float:
        name = var.name if isinstance(var, Variable) else var
        return self.values.get(name, 0.0)


class SolverBackend(ABC):
    """Adapter contract: load model, solve within limits, report status and values"""

    name = "abstract"
    # Whether one backend instance may serve concurrent solves
    shareable = True

    @abstractmethod
    def solve(self, model: MipModel, limits: SolverLimits) -> Solution:
        ...


class ReferenceBackend(SolverBackend):
    """
    Exact depth-first search over the free binaries.

    Every node solves the LP relaxation with scipy's HiGHS; nodes are pruned
    when infeasible or when the relaxation cannot beat the incumbent. Leaves
    fix every binary and solve the continuous remainder by LP. Meant as an
    oracle for tiny models.
    """

    name = "reference"

    def __init__(self, max_binaries: int = 20):
        self.max_binaries = max_binaries

    def solve(self, model: MipModel, limits: SolverLimits) -> Solution:
        start = time.monotonic()
        arrays = model.to_arrays()
        n = model.num_vars

        if n == 0:
            return Solution(SolveStatus.OPTIMAL, model.objective.constant, {},
                            {"backend": self.name, "nodes": 0, "time": 0.0})

        free = [i for i in range(n) if arrays.binary[i] and arrays.lb[i] < arrays.ub[i]]
        if len(free) > self.max_binaries:
            raise SolverError(
                f"Reference backend handles at most {self.max_binaries} free binaries, model has {len(free)}"
            )

        a_ub = arrays.a_ub if arrays.a_ub.shape[0] else None
        b_ub = arrays.b_ub if arrays.a_ub.shape[0] else None
        a_eq = arrays.a_eq if arrays.a_eq.shape[0] else None
        b_eq = arrays.b_eq if arrays.a_eq.shape[0] else None

        def relax(lb: np.ndarray, ub: np.ndarray):
            bounds = [(None if math.isinf(lo) else lo, None if math.isinf(hi) else hi)
                      for lo, hi in zip(lb, ub)]
            return linprog(arrays.c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                           bounds=bounds, method="highs")

        best_x: Optional[np.ndarray] = None
        best_obj = math.inf
        nodes = 0
        timed_out = False
        # Each stack entry is a dict of fixed binary assignments
        stack: List[Dict[int, float]] = [{}]

        while stack:
            if time.monotonic() - start > limits.time_limit:
                timed_out = True
                break
            fixed = stack.pop()
            nodes += 1
            lb = arrays.lb.copy()
            ub = arrays.ub.copy()
            for idx, val in fixed.items():
                lb[idx] = ub[idx] = val

            res = relax(lb, ub)
            if res.status == 2:
                continue
            if res.status == 3:
                if not fixed:
                    return Solution(SolveStatus.UNBOUNDED, None, {},
                                    {"backend": self.name, "nodes": nodes})
                continue
            if res.status != 0:
                logger.warning(f"LP relaxation ended with status {res.status}: {res.message}")
                continue

            bound = res.fun + arrays.c0
            if best_x is not None and bound >= best_obj - 1e-9 * max(1.0, abs(best_obj)):
                continue

            x = res.x
            fractional = [i for i in free if i not in fixed and min(x[i], 1.0 - x[i]) > EPS_INT]
            if not fractional:
                # Integral relaxation: pin the binaries and polish the continuous part
                pinned = dict(fixed)
                for i in free:
                    pinned.setdefault(i, float(round(x[i])))
                lb2, ub2 = lb.copy(), ub.copy()
                for idx, val in pinned.items():
                    lb2[idx] = ub2[idx] = val
                leaf = relax(lb2, ub2)
                if leaf.status == 0 and leaf.fun + arrays.c0 < best_obj:
                    best_obj = leaf.fun + arrays.c0
                    best_x = leaf.x
                continue

            branch = fractional[0]
            first = float(round(x[branch]))
            stack.append({**fixed, branch: 1.0 - first})
            stack.append({**fixed, branch: first})

        elapsed = time.monotonic() - start
        stats = {"backend": self.name, "nodes": nodes, "time": elapsed}
        if best_x is None:
            status = SolveStatus.LIMIT if timed_out else SolveStatus.INFEASIBLE
            return Solution(status, None, {}, stats)

        values = _clean_values(model, best_x)
        status = SolveStatus.LIMIT if timed_out else SolveStatus.OPTIMAL
        return Solution(status, model.objective_value(values), values, stats)


class PulpBackend(SolverBackend):
    """CBC through PuLP, or an external CBC executable when a path is given"""

    name = "external"

    def __init__(self, path: Optional[str] = None, msg: bool = False):
        self.path = path
        self.msg = msg

    def _solver(self, limits: SolverLimits):
        try:
            import pulp
        except ImportError as e:
            raise BackendUnavailable(f"PuLP is not installed: {e}")

        kwargs = {"msg": self.msg, "timeLimit": limits.time_limit, "gapRel": limits.mip_gap}
        if self.path:
            solver = pulp.COIN_CMD(path=self.path, **kwargs)
        else:
            solver = pulp.PULP_CBC_CMD(**kwargs)
        if not solver.available():
            raise BackendUnavailable(f"CBC solver not available (path={self.path or 'bundled'})")
        return pulp, solver

    def solve(self, model: MipModel, limits: SolverLimits) -> Solution:
        pulp, solver = self._solver(limits)
        start = time.monotonic()

        prob = pulp.LpProblem(_safe_name(model.name),
                              pulp.LpMinimize if model.sense == "min" else pulp.LpMaximize)
        lp_vars = []
        for var in model.variables:
            lp_vars.append(pulp.LpVariable(
                f"x{var.index}",
                lowBound=None if math.isinf(var.lb) else var.lb,
                upBound=None if math.isinf(var.ub) else var.ub,
                cat=pulp.LpBinary if var.is_binary and not var.is_fixed else pulp.LpContinuous,
            ))

        def affine(terms: Dict[int, float], constant: float = 0.0):
            return pulp.LpAffineExpression([(lp_vars[i], c) for i, c in terms.items()], constant=constant)

        prob += affine(model.objective.terms, model.objective.constant), "objective"
        for k, con in enumerate(model.constraints):
            expr = affine(con.terms)
            if con.sense == "<=":
                prob += expr <= con.rhs, f"c{k}"
            elif con.sense == ">=":
                prob += expr >= con.rhs, f"c{k}"
            else:
                prob += expr == con.rhs, f"c{k}"

        prob.solve(solver)
        elapsed = time.monotonic() - start
        stats = {"backend": self.name, "time": elapsed, "pulp_status": pulp.LpStatus[prob.status]}

        if prob.status == -1:
            return Solution(SolveStatus.INFEASIBLE, None, {}, stats)
        if prob.status == -2:
            return Solution(SolveStatus.UNBOUNDED, None, {}, stats)

        raw = np.array([v.varValue if v.varValue is not None else math.nan for v in lp_vars])
        if np.isnan(raw).any():
            # CBC reports an infeasible integer problem as "Undefined"
            status = SolveStatus.INFEASIBLE if prob.status == -3 else SolveStatus.LIMIT
            return Solution(status, None, {}, stats)

        values = _clean_values(model, raw)
        optimal = prob.status == 1 and getattr(prob, "sol_status", 1) == 1
        status = SolveStatus.OPTIMAL if optimal else SolveStatus.LIMIT
        return Solution(status, model.objective_value(values), values, stats)


def _clean_values(model: MipModel, x: np.ndarray) -> Dict[str, float]:
    """Snap binaries to {0, 1} and clip tiny bound violations"""
    values = {}
    for var in model.variables:
        v = float(x[var.index])
        if var.is_binary:
            v = float(round(v))
        else:
            if v < var.lb:
                v = var.lb
            if v > var.ub:
                v = var.ub
        values[var.name] = v
    return values


def _safe_name(name: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in name) or "model"


def get_backend(name: Optional[str] = None) -> SolverBackend:
    """Backend factory; defaults come from settings"""
    name = (name or settings.solver).lower()
    if name == "reference":
        return ReferenceBackend()
    if name == "external":
        return PulpBackend(path=settings.solver_path)
    raise BackendUnavailable(f"Unknown solver backend: {name}")


def solve(model: MipModel, adapter: Optional[SolverBackend] = None,
          limits: Optional[SolverLimits] = None) -> Solution:
    """Solve a model and audit an optimal answer against the constraints"""
    adapter = adapter or get_backend()
    limits = limits or SolverLimits.from_settings()
    logger.info(f"Solving {model.name} with {adapter.name}: {model.summary()}")

    solution = adapter.solve(model, limits)
    logger.info(f"{model.name}: status={solution.status.value} objective={solution.objective}")

    if solution.status == SolveStatus.OPTIMAL:
        problems = model.violations(solution.values, tol=EPS_FEAS * 10)
        if problems:
            logger.warning(f"{model.name}: {len(problems)} constraint violations in solver answer, "
                           f"worst {max(p[1] for p in problems):.3g}")
        solution.stats["violations"] = len(problems)
    return solution
