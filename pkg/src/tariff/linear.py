"""
Billing terms as linear expressions for the scheduling models.
Loads are a (days x steps) grid of LinExpr: baseload constant plus EV power.
"""
import logging
from datetime import date
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .models import PdpPolicy, TariffSchedule
from ..milp.encoders import add_epigraph_max, add_max_equality
from ..milp.model import LinExpr, MipModel, Variable

logger = logging.getLogger(__name__)

LoadGrid = List[List[LinExpr]]


def _accumulate(total: LinExpr, expr: LinExpr, scale: float):
    for idx, coeff in expr.terms.items():
        total.terms[idx] = total.terms.get(idx, 0.0) + coeff * scale
    total.constant += expr.constant * scale


def energy_charge_expr(loads: LoadGrid, rates: np.ndarray, dt: float) -> LinExpr:
    total = LinExpr()
    for d, row in enumerate(loads):
        for t, expr in enumerate(row):
            _accumulate(total, expr, float(rates[d, t]) * dt)
    return total


def _split(loads: LoadGrid, mask: np.ndarray, offset: float = 0.0) -> Tuple[List[LinExpr], float]:
    """Variable terms of the masked cells and the largest constant-only term"""
    variable, constant = [], -np.inf
    for d, t in zip(*np.nonzero(mask)):
        expr = loads[d][t]
        if expr.terms:
            variable.append(expr - offset)
        else:
            constant = max(constant, expr.constant - offset)
    return variable, constant


def add_demand_charge(model: MipModel, loads: LoadGrid, tariff: TariffSchedule,
                      days: Sequence[date], dt: float, n_steps: int,
                      name: str = "dc") -> Tuple[LinExpr, Dict[str, Variable]]:
    """
    One epigraph variable per demand period. Constant cells (no EV power)
    fold into the variable's lower bound.

    Returns:
        (demand charge expression, peak variable per period id)
    """
    cost = LinExpr()
    peaks = {}
    rates = tariff.demand_rates
    for period_id, mask in tariff.demand_masks(days, dt, n_steps).items():
        if not mask.any():
            continue
        variable, constant = _split(loads, mask)
        floor = max(0.0, constant)
        y = model.add_var(f"{name}_{period_id}", lb=floor, ub=np.inf if variable else floor)
        if variable:
            add_epigraph_max(model, variable, y, f"{name}_{period_id}")
        cost.add_term(y, rates[period_id])
        peaks[period_id] = y
    return cost, peaks


def add_pdp_terms(model: MipModel, loads: LoadGrid, tariff: TariffSchedule, policy: PdpPolicy,
                  days: Sequence[date], dt: float, n_steps: int, name: str = "pdp") -> LinExpr:
    """
    Event surcharge minus credits. Credits enter negated, so each event peak
    is pinned to its true maximum by a max equality rather than an epigraph.
    """
    cost = LinExpr()
    event = policy.event_mask(days, dt, n_steps)
    if not event.any():
        return cost
    reserve = policy.capacity_reserve

    rate = float(policy.event_rate)
    if rate:
        for d, t in zip(*np.nonzero(event)):
            expr = loads[d][t]
            if not expr.terms:
                cost.constant += rate * dt * max(0.0, expr.constant - reserve)
                continue
            x = model.add_var(f"{name}_excess_{d}_{t}")
            model.add_constraint(x >= expr - reserve, name=f"{name}_excess_{d}_{t}")
            cost.add_term(x, rate * dt)

    masks = tariff.demand_masks(days, dt, n_steps)
    for label, period_id, credit in (("peak", policy.peak_period, policy.credit_peak),
                                     ("partpeak", policy.partpeak_period, policy.credit_partpeak)):
        credit = float(credit)
        mask = masks.get(period_id)
        if not credit or mask is None or not (mask & event).any():
            continue
        variable, constant = _split(loads, mask & event, reserve)
        floor = max(0.0, constant)
        if not variable:
            cost.constant -= credit * floor
            continue
        y = model.add_var(f"{name}_{label}")
        add_max_equality(model, variable + [LinExpr(constant=floor)], y, f"{name}_{label}")
        cost.add_term(y, -credit)
    return cost
