"""
Revenue settlement for regulation, PDR and DBP participation.
"""
import logging
from datetime import date
from typing import Sequence

import numpy as np

from .models import DbpProgram, PdrMarket, RegulationMarket, RegulationPlan
from ..fleet.models import EPS_FEAS
from ..tariff.models import event_mask
from ..utils.errors import GridMismatch, OutsideEventWindow

logger = logging.getLogger(__name__)


def _priced(prices: np.ndarray) -> np.ndarray:
    """Unavailable steps pay nothing"""
    return np.nan_to_num(np.asarray(prices, dtype=float), nan=0.0)


def regulation_revenue(plan: RegulationPlan, market: RegulationMarket, dt: float) -> float:
    """Capacity payment on the day-ahead bids, independent of dispatch"""
    if plan.bid_up.shape != market.price_up.shape:
        raise GridMismatch(f"Bids {plan.bid_up.shape} vs prices {market.price_up.shape}")
    up = plan.bid_up * _priced(market.price_up)
    down = plan.bid_down * _priced(market.price_down)
    return float(np.sum(up + down) * dt)


def apply_utilization(plan: RegulationPlan, market: RegulationMarket) -> np.ndarray:
    """Actual power when the dispatched fraction of each bid is realized"""
    return plan.baseline + market.rho_up * plan.bid_up + market.rho_down * plan.bid_down


def pdr_revenue(sell, market: PdrMarket, dt: float) -> float:
    sell = np.asarray(sell, dtype=float)
    if sell.shape != market.price.shape:
        raise GridMismatch(f"Sell {sell.shape} vs prices {market.price.shape}")
    return float(np.sum(sell * _priced(market.price)) * dt)


def dbp_revenue(reduction, program: DbpProgram, days: Sequence[date], dt: float) -> float:
    """Credit per kWh of reduction delivered inside event windows"""
    reduction = np.asarray(reduction, dtype=float)
    if reduction.ndim == 1:
        reduction = reduction.reshape(1, -1)
    inside = event_mask(program.events, days, dt, reduction.shape[1])
    stray = np.abs(reduction[~inside]) > EPS_FEAS
    if stray.any():
        raise OutsideEventWindow(f"{int(stray.sum())} steps carry a reduction outside DBP events")
    return float(program.credit * np.sum(reduction[inside]) * dt)
