"""
Reusable constraint encoders: semicontinuity, epigraph max, max equality,
big-M indicators and minimum consecutive participation blocks.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .model import LinExpr, MipModel, Variable, lin_sum
from ..utils.errors import EmptyTerms, InvalidBounds, InvalidWindow, UnboundedExpr

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BigMConfig:
    """Relaxation constants of an indicator constraint, m_small <= 0 <= m_big"""
    m_small: float
    m_big: float

    def __post_init__(self):
        if not (self.m_small <= 0.0 <= self.m_big):
            raise InvalidBounds(f"Big-M pair must satisfy M_s <= 0 <= M_b, got ({self.m_small}, {self.m_big})")

    @classmethod
    def from_bounds(cls, lo: float, hi: float) -> "BigMConfig":
        return cls(m_small=min(lo, 0.0), m_big=max(hi, 0.0))


def expression_bounds(model: MipModel, expr) -> Tuple[float, float]:
    """Interval of a linear expression implied by its variables' bounds"""
    expr = LinExpr.of(expr)
    lo = hi = expr.constant
    for idx, coeff in expr.terms.items():
        var = model.variables[idx]
        if coeff > 0:
            lo += coeff * var.lb
            hi += coeff * var.ub
        else:
            lo += coeff * var.ub
            hi += coeff * var.lb
    return lo, hi


def add_semicontinuous(model: MipModel, x, b: Variable, lo: float, hi: float, name: str):
    """x in {0} U [lo, hi], switched by binary b"""
    if lo < 0 or lo > hi:
        raise InvalidBounds(f"{name}: semicontinuous range [{lo}, {hi}] is invalid")
    model.add_constraint(x >= b * lo, name=f"{name}_lo")
    model.add_constraint(x <= b * hi, name=f"{name}_hi")


def add_epigraph_max(model: MipModel, terms: Sequence, y: Variable, name: str):
    """y >= every term; tight at the optimum when y is pushed down"""
    if not terms:
        raise EmptyTerms(f"{name}: epigraph needs at least one term")
    for k, term in enumerate(terms):
        model.add_constraint(y >= term, name=f"{name}_{k}")


def add_max_equality(model: MipModel, terms: Sequence, y: Variable, name: str) -> List[Variable]:
    """
    y == max(terms) regardless of objective pressure.

    Lower bounds y >= term for every term plus one selector binary per term
    with y <= term + M_k * (1 - z_k) and sum(z) == 1. M_k comes from the
    bound-derived range of the terms.

    Returns:
        The selector binaries
    """
    if not terms:
        raise EmptyTerms(f"{name}: max equality needs at least one term")
    exprs = [LinExpr.of(t) for t in terms]
    bounds = [expression_bounds(model, e) for e in exprs]
    top = max(hi for _, hi in bounds)
    if math.isinf(top) or any(math.isinf(lo) for lo, _ in bounds):
        raise UnboundedExpr(f"{name}: terms need finite bounds for the max equality")

    add_epigraph_max(model, exprs, y, f"{name}_ge")
    if len(exprs) == 1:
        model.add_constraint(y <= exprs[0], name=f"{name}_eq")
        return []

    selectors = []
    for k, (expr, (lo, _)) in enumerate(zip(exprs, bounds)):
        z = model.add_binary(f"{name}_sel_{k}")
        big_m = max(top - lo, 0.0)
        model.add_constraint(y <= expr + big_m * (1 - z), name=f"{name}_le_{k}")
        selectors.append(z)
    model.add_constraint(lin_sum(selectors) == 1, name=f"{name}_one")
    return selectors


def add_indicator_eq(model: MipModel, b: Variable, expr, cfg: Optional[BigMConfig], name: str):
    """
    M_s * (1 - b) <= expr <= M_b * (1 - b): b == 1 forces expr == 0.

    Without a config the constants are derived from variable bounds. A config
    tighter than the derivable range is rejected since it would cut off
    feasible points.
    """
    expr = LinExpr.of(expr)
    lo, hi = expression_bounds(model, expr)
    if cfg is None:
        if math.isinf(lo) or math.isinf(hi):
            raise UnboundedExpr(f"{name}: no finite big-M derivable for indicator")
        cfg = BigMConfig.from_bounds(lo, hi)
    elif cfg.m_small > lo + 1e-9 or cfg.m_big < hi - 1e-9:
        raise InvalidBounds(
            f"{name}: big-M ({cfg.m_small}, {cfg.m_big}) tighter than expression range ({lo}, {hi})"
        )
    model.add_constraint(expr >= cfg.m_small * (1 - b), name=f"{name}_lo")
    model.add_constraint(expr <= cfg.m_big * (1 - b), name=f"{name}_hi")


def add_min_consecutive(model: MipModel, b: Sequence[Variable], n_c: int, name: str) -> List[Variable]:
    """
    Every maximal run of ones in b lasts at least n_c steps.

    Start indicators s(t) mark the first step of a run. A run may not start
    within n_c - 1 steps of the horizon end.

    Returns:
        The start indicator binaries (empty when n_c == 1)
    """
    horizon = len(b)
    if n_c < 1 or n_c > horizon:
        raise InvalidWindow(f"{name}: n_c={n_c} outside [1, {horizon}]")
    if n_c == 1:
        return []

    starts = []
    for t in range(horizon):
        overruns = t + n_c - 1 > horizon - 1
        s = model.add_binary(f"{name}_start_{t}", fixed=0 if overruns or b[t].ub == 0 else None)
        starts.append(s)
        if t == 0:
            model.add_constraint(s == b[0], name=f"{name}_first")
            continue
        model.add_constraint(s <= 1 - b[t - 1], name=f"{name}_prev_{t}")
        model.add_constraint(s <= b[t], name=f"{name}_on_{t}")
        model.add_constraint(s >= b[t] - b[t - 1], name=f"{name}_rise_{t}")

    for t, s in enumerate(starts):
        if s.ub == 0:
            continue
        window = lin_sum(b[t:t + n_c])
        model.add_constraint(window - n_c >= -n_c * (1 - s), name=f"{name}_run_{t}")
    return starts
