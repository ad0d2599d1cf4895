"""
Compilation of a Scenario into the five monthly scheduling models.

Variable naming on the (day d, step t) grid:
    p_{d}_{t}       aggregate EV power actually drawn
    base_{d}_{t}    regulation baseline (free-baseline case)
    ru_{d}_{t}      regulation-up bid, rd_{d}_{t} regulation-down bid
    sell_{d}_{t}    PDR virtual sell, rdc_{d}_{t} DBP reduction
Binary companions carry an `_on` infix.
"""
import logging
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .models import ProblemId, Scenario
from ..fleet.models import EPS_FEAS, AggregateEnvelope
from ..milp.encoders import add_indicator_eq, add_min_consecutive, add_semicontinuous
from ..milp.model import LinExpr, MipModel, Variable
from ..tariff.linear import LoadGrid, add_demand_charge, add_pdp_terms, energy_charge_expr
from ..tariff.models import event_mask
from ..utils.errors import BaselineMissing, GridMismatch, MissingProduct

logger = logging.getLogger(__name__)

class ModelBuilder:
    """Shared pieces of every problem: charging blocks, load and billing terms"""

    def __init__(self, scenario: Scenario, name: str):
        if scenario.tariff is None:
            raise MissingProduct("A tariff is required for every problem")
        self.scenario = scenario
        self.model = MipModel(name=f"{scenario.name}_{name}")
        self.envs: List[AggregateEnvelope] = scenario.envelopes()
        self.dt = scenario.dt
        self.n_days, self.n_steps = scenario.shape

    def charging_block(self, prefix: str) -> List[List[Variable]]:
        """
        Semicontinuous aggregate power with cumulative energy kept inside
        the day's envelope through a running energy state.
        """
        model, dt = self.model, self.dt
        grid = []
        for d, env in enumerate(self.envs):
            row = []
            previous: Optional[Variable] = None
            for t in range(self.n_steps):
                cap = float(env.p_max[t])
                p = model.add_var(f"{prefix}_{d}_{t}", 0.0, cap)
                on = model.add_binary(f"{prefix}_on_{d}_{t}", fixed=None if cap > EPS_FEAS else 0)
                if cap > EPS_FEAS:
                    add_semicontinuous(model, p, on, min(float(env.p_min[t]), cap), cap,
                                       f"{prefix}_sc_{d}_{t}")
                e = model.add_var(f"{prefix}_e_{d}_{t}", float(env.e_minus[t]), float(env.e_plus[t]))
                accrued = e - p * dt if previous is None else e - previous - p * dt
                model.add_constraint(accrued == 0, name=f"{prefix}_acc_{d}_{t}")
                previous = e
                row.append(p)
            grid.append(row)
        return grid

    def loads(self, power: Sequence[Sequence]) -> LoadGrid:
        base = self.scenario.baseload.load
        return [[LinExpr.of(power[d][t]) + float(base[d, t]) for t in range(self.n_steps)]
                for d in range(self.n_days)]

    def bill(self, loads: LoadGrid, include_demand: bool = True) -> LinExpr:
        sc = self.scenario
        rates = sc.tariff.energy_rate_matrix(sc.days, self.dt, self.n_steps)
        cost = energy_charge_expr(loads, rates, self.dt)
        if include_demand:
            demand, _ = add_demand_charge(self.model, loads, sc.tariff, sc.days, self.dt, self.n_steps)
            cost = cost + demand
        return cost

    def virtual_sell(self, power: List[List[Variable]], baseline: np.ndarray, prices: np.ndarray,
                     allowed: np.ndarray, min_sell: float, min_run: int,
                     windows: Dict[int, List[range]], prefix: str) -> List[List[Variable]]:
        """
        Reduction below a known baseline, gated by a participation binary:
        when it is on the reduction is at least min_sell and power equals
        baseline minus reduction; every participation run lasts min_run
        steps inside its window.
        """
        model = self.model
        grid = []
        flags: List[List[Variable]] = []
        for d, env in enumerate(self.envs):
            row, row_flags = [], []
            for t in range(self.n_steps):
                b_t = float(baseline[d, t])
                ok = (bool(allowed[d, t]) and np.isfinite(prices[d, t])
                      and env.p_max[t] > EPS_FEAS and b_t >= min_sell - EPS_FEAS and b_t > EPS_FEAS)
                x = model.add_var(f"{prefix}_{d}_{t}", 0.0, b_t if ok else 0.0)
                on = model.add_binary(f"{prefix}_on_{d}_{t}", fixed=None if ok else 0)
                if ok:
                    add_semicontinuous(model, x, on, min_sell, b_t, f"{prefix}_sc_{d}_{t}")
                    add_indicator_eq(model, on, power[d][t] - b_t + x, None, f"{prefix}_tie_{d}_{t}")
                row.append(x)
                row_flags.append(on)
            grid.append(row)
            flags.append(row_flags)

        for d in range(self.n_days):
            for k, window in enumerate(windows.get(d, [])):
                block = [flags[d][t] for t in window]
                if not block or all(b.ub == 0 for b in block):
                    continue
                if min_run > len(block):
                    for b in block:
                        model.fix(b, 0)
                    continue
                add_min_consecutive(model, block, min_run, f"{prefix}_run_{d}_{k}")
        return grid

    def preserve_energy(self, power: List[List[Variable]], baseline: np.ndarray):
        """Daily energy equal to the baseline's, within the feasibility tolerance"""
        for d in range(self.n_days):
            total = LinExpr()
            for p in power[d]:
                total.add_term(p, self.dt)
            target = float(np.sum(baseline[d])) * self.dt
            self.model.add_constraint(total <= target + EPS_FEAS, name=f"energy_hi_{d}")
            self.model.add_constraint(total >= target - EPS_FEAS, name=f"energy_lo_{d}")

    def finish(self, objective: LinExpr) -> MipModel:
        self.model.minimize(objective)
        logger.info(f"Built {self.model.name}: {self.model.summary()}")
        return self.model


def _revenue(grid: Sequence[Sequence[Variable]], prices: np.ndarray, dt: float) -> LinExpr:
    total = LinExpr()
    for d, row in enumerate(grid):
        for t, x in enumerate(row):
            price = prices[d, t]
            if x.ub > 0 and np.isfinite(price):
                total.add_term(x, float(price) * dt)
    return total


def _checked_baseline(series: Optional[np.ndarray], scenario: Scenario, product: str) -> np.ndarray:
    if series is None:
        raise BaselineMissing(f"{product} needs a baseline profile")
    series = np.asarray(series, dtype=float)
    if series.shape != scenario.shape:
        raise GridMismatch(f"{product} baseline shape {series.shape}, scenario grid {scenario.shape}")
    return series


def build_p1(scenario: Scenario, include_demand: bool = True) -> MipModel:
    """TOU energy plus demand charges"""
    builder = ModelBuilder(scenario, "p1")
    power = builder.charging_block("p")
    return builder.finish(builder.bill(builder.loads(power), include_demand))


def build_p2(scenario: Scenario) -> MipModel:
    """Problem 1 with peak day pricing credits and event surcharge"""
    if scenario.pdp is None:
        raise MissingProduct("Problem p2 needs a PDP policy")
    builder = ModelBuilder(scenario, "p2")
    power = builder.charging_block("p")
    loads = builder.loads(power)
    cost = builder.bill(loads)
    cost = cost + add_pdp_terms(builder.model, loads, scenario.tariff, scenario.pdp,
                                scenario.days, scenario.dt, builder.n_steps)
    return builder.finish(cost)


def build_p3(scenario: Scenario) -> MipModel:
    """
    TOU charges with regulation up/down capacity bids.

    Billing uses the utilization-adjusted power. Baseline, actual power and
    both full-signal extremes stay semicontinuous; baseline and actual
    energy stay inside the envelope. A given regulation baseline is taken
    as fixed.
    """
    market = scenario.regulation
    if market is None:
        raise MissingProduct("Problem p3 needs a regulation market")
    if market.price_up.shape != scenario.shape:
        raise GridMismatch(f"Regulation prices {market.price_up.shape}, scenario grid {scenario.shape}")
    builder = ModelBuilder(scenario, "p3")
    model, dt = builder.model, builder.dt

    if scenario.regulation_baseline is None:
        base: Sequence[Sequence] = builder.charging_block("base")
    else:
        base = np.asarray(scenario.regulation_baseline, dtype=float)
        base = np.where(base > EPS_FEAS, base, 0.0)
    power = builder.charging_block("p")

    up_grid, down_grid = [], []
    for d, env in enumerate(builder.envs):
        up_row, down_row = [], []
        for t in range(builder.n_steps):
            cap = float(env.p_max[t])
            floor = min(float(env.p_min[t]), cap)
            b = LinExpr.of(base[d][t])

            def bid(kind: str, price: float, min_bid: float) -> Variable:
                ok = cap > EPS_FEAS and np.isfinite(price) and min_bid <= cap + EPS_FEAS
                x = model.add_var(f"{kind}_{d}_{t}", 0.0, cap if ok else 0.0)
                on = model.add_binary(f"{kind}_on_{d}_{t}", fixed=None if ok else 0)
                if ok:
                    add_semicontinuous(model, x, on, min(min_bid, cap), cap, f"{kind}_sc_{d}_{t}")
                return x

            ru = bid("ru", market.price_up[d, t], market.min_bid_up)
            rd = bid("rd", market.price_down[d, t], market.min_bid_down)
            model.add_constraint(power[d][t] - b - market.rho_up * ru - market.rho_down * rd == 0,
                                 name=f"util_{d}_{t}")

            for kind, extreme in (("xu", b - ru), ("xd", b + rd)):
                on = model.add_binary(f"{kind}_on_{d}_{t}", fixed=None if cap > EPS_FEAS else 0)
                model.add_constraint(extreme >= on * floor, name=f"{kind}_lo_{d}_{t}")
                model.add_constraint(extreme <= on * cap, name=f"{kind}_hi_{d}_{t}")
            up_row.append(ru)
            down_row.append(rd)
        up_grid.append(up_row)
        down_grid.append(down_row)

    if market.commitment_len > 1:
        for d in range(builder.n_days):
            for t in range(builder.n_steps):
                head = t - t % market.commitment_len
                if head != t:
                    model.add_constraint(up_grid[d][t] == up_grid[d][head], name=f"ru_hold_{d}_{t}")
                    model.add_constraint(down_grid[d][t] == down_grid[d][head], name=f"rd_hold_{d}_{t}")

    revenue = _revenue(up_grid, market.price_up, dt) + _revenue(down_grid, market.price_down, dt)
    return builder.finish(builder.bill(builder.loads(power)) - revenue)


def build_p4(scenario: Scenario) -> MipModel:
    """TOU charges with PDR virtual sell below a known baseline"""
    market = scenario.pdr
    if market is None:
        raise MissingProduct("Problem p4 needs a PDR market")
    baseline = _checked_baseline(market.baseline, scenario, "PDR")
    if market.price.shape != scenario.shape:
        raise GridMismatch(f"PDR prices {market.price.shape}, scenario grid {scenario.shape}")
    builder = ModelBuilder(scenario, "p4")
    power = builder.charging_block("p")
    whole_day = {d: [range(builder.n_steps)] for d in range(builder.n_days)}
    allowed = np.ones(scenario.shape, dtype=bool)
    sell = builder.virtual_sell(power, baseline, market.price, allowed, market.min_sell,
                                market.min_consecutive, whole_day, "sell")
    if scenario.baseline_mode == "schedule":
        builder.preserve_energy(power, baseline)
    revenue = _revenue(sell, market.price, builder.dt)
    return builder.finish(builder.bill(builder.loads(power)) - revenue)


def build_p5(scenario: Scenario) -> MipModel:
    """TOU charges with DBP load reduction inside event windows"""
    program = scenario.dbp
    if program is None:
        raise MissingProduct("Problem p5 needs a DBP program")
    baseline = _checked_baseline(program.baseline, scenario, "DBP")
    builder = ModelBuilder(scenario, "p5")
    power = builder.charging_block("p")

    index = {day: d for d, day in enumerate(scenario.days)}
    windows: Dict[int, List[range]] = {}
    for event in program.events:
        if event.day in index:
            windows.setdefault(index[event.day], []).append(event.steps(scenario.dt, builder.n_steps))
    allowed = event_mask(program.events, scenario.days, scenario.dt, builder.n_steps)
    credit = np.full(scenario.shape, float(program.credit))

    reduction = builder.virtual_sell(power, baseline, credit, allowed, program.min_reduction,
                                     program.min_duration, windows, "rdc")
    if scenario.baseline_mode == "schedule":
        builder.preserve_energy(power, baseline)
    revenue = _revenue(reduction, credit, builder.dt)
    return builder.finish(builder.bill(builder.loads(power)) - revenue)


BUILDERS: Dict[ProblemId, Callable[[Scenario], MipModel]] = {
    ProblemId.P1: build_p1,
    ProblemId.P2: build_p2,
    ProblemId.P3: build_p3,
    ProblemId.P4: build_p4,
    ProblemId.P5: build_p5,
}
