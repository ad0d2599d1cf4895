"""
Settlement engine for a fixed load profile.
Loads are (days, steps) arrays of total site kW on the scenario grid.
"""
import logging
from dataclasses import dataclass
from datetime import date
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .models import BillResult, PdpPolicy, TariffSchedule
from ..utils.errors import CalendarMismatch
from ..utils.timegrid import steps_per_day

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PdpSettlement:
    credit_peak: float = 0.0
    credit_partpeak: float = 0.0
    c_pdp: float = 0.0

    @property
    def benefit(self) -> float:
        return self.credit_peak + self.credit_partpeak - self.c_pdp


def _as_grid(total_load, days: Sequence[date], dt: float) -> np.ndarray:
    load = np.asarray(total_load, dtype=float)
    if load.ndim == 1:
        load = load.reshape(1, -1)
    if load.shape[0] != len(days):
        raise CalendarMismatch(f"Load covers {load.shape[0]} days, calendar has {len(days)}")
    if load.shape[1] > steps_per_day(dt):
        raise CalendarMismatch(f"Load has {load.shape[1]} steps per day, at most "
                               f"{steps_per_day(dt)} fit at dt={dt} h")
    return load


def energy_charge(total_load, days: Sequence[date], tariff: TariffSchedule, dt: float) -> float:
    """Sum over days and steps of load * dt * lambda(t)"""
    load = _as_grid(total_load, days, dt)
    rates = tariff.energy_rate_matrix(days, dt, load.shape[1])
    return float(np.sum(load * rates) * dt)


def demand_charge(total_load, days: Sequence[date], tariff: TariffSchedule,
                  dt: float) -> Tuple[float, Dict[str, float]]:
    """
    Monthly demand charge: each period's rate times the largest load over
    all days and steps the period measures.

    Returns:
        (charge, peak kW per period id)
    """
    load = _as_grid(total_load, days, dt)
    masks = tariff.demand_masks(days, dt, load.shape[1])
    rates = tariff.demand_rates
    peaks = {}
    charge = 0.0
    for period_id, mask in masks.items():
        peak = max(0.0, float(load[mask].max())) if mask.any() else 0.0
        peaks[period_id] = peak
        charge += rates[period_id] * peak
    return charge, peaks


def pdp_settlement(total_load, days: Sequence[date], tariff: TariffSchedule, policy: PdpPolicy,
                   dt: float) -> PdpSettlement:
    """
    PDP credits on event-day peaks above the capacity reserve and the event
    surcharge on energy above it. Months without events settle to zero.
    """
    load = _as_grid(total_load, days, dt)
    n_steps = load.shape[1]
    event = policy.event_mask(days, dt, n_steps)
    if not event.any():
        logger.debug("No PDP event steps in this period")
        return PdpSettlement()

    masks = tariff.demand_masks(days, dt, n_steps)
    reserve = policy.capacity_reserve

    def credit(period_id: str, rate) -> float:
        mask = masks.get(period_id)
        if mask is None or not float(rate):
            return 0.0
        cells = mask & event
        if not cells.any():
            return 0.0
        return float(rate) * max(0.0, float(load[cells].max()) - reserve)

    excess = np.maximum(load[event] - reserve, 0.0)
    return PdpSettlement(
        credit_peak=credit(policy.peak_period, policy.credit_peak),
        credit_partpeak=credit(policy.partpeak_period, policy.credit_partpeak),
        c_pdp=float(policy.event_rate) * float(np.sum(excess)) * dt,
    )


def settle_bill(total_load, days: Sequence[date], tariff: TariffSchedule,
                policy: Optional[PdpPolicy], dt: float) -> BillResult:
    c_ec = energy_charge(total_load, days, tariff, dt)
    c_dc, peaks = demand_charge(total_load, days, tariff, dt)
    pdp = pdp_settlement(total_load, days, tariff, policy, dt) if policy is not None else PdpSettlement()
    return BillResult(
        c_ec=c_ec,
        c_dc=c_dc,
        pdp_credit_peak=pdp.credit_peak,
        pdp_credit_partpeak=pdp.credit_partpeak,
        c_pdp=pdp.c_pdp,
        demand_peaks=peaks,
    )
