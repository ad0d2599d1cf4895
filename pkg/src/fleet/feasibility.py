"""
Trajectory checks against the virtual battery and per-vehicle realization
of an aggregate profile.
"""
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from .models import EPS_FEAS, AggregateEnvelope, AggregateProfile, FeasibilityVerdict, VehicleSession
from ..utils.errors import DisaggregationFailure

logger = logging.getLogger(__name__)


def check_feasible(profile: AggregateProfile, env: AggregateEnvelope, dt: float,
                   tol: float = EPS_FEAS) -> FeasibilityVerdict:
    """
    Verdict on an aggregate profile: cumulative energy inside [E-, E+] and
    power semicontinuous in {0} U [p_min, P_max] at every step.

    Energy tolerance scales with the bound magnitude so long horizons of
    solver output are judged on the same footing as short ones.
    """
    if profile.n_steps != env.n_steps:
        return FeasibilityVerdict(False, None,
                                  f"grid mismatch: profile {profile.n_steps} steps, envelope {env.n_steps}")

    cumulative = profile.cumulative_energy(dt)
    for t in range(env.n_steps):
        p = float(profile.p[t])
        if p < -tol:
            return FeasibilityVerdict(False, t, f"negative power {p:.6g} kW")
        if profile.on[t]:
            if p < env.p_min[t] - tol or p > env.p_max[t] + tol * max(1.0, env.p_max[t]):
                return FeasibilityVerdict(
                    False, t, f"power {p:.6g} kW outside [{env.p_min[t]:.6g}, {env.p_max[t]:.6g}]"
                )
        elif p > tol:
            return FeasibilityVerdict(False, t, f"power {p:.6g} kW while inactive")

        e = cumulative[t]
        if e < env.e_minus[t] - tol * max(1.0, env.e_minus[t]):
            return FeasibilityVerdict(False, t, f"energy {e:.6g} kWh below E- {env.e_minus[t]:.6g}")
        if e > env.e_plus[t] + tol * max(1.0, env.e_plus[t]):
            return FeasibilityVerdict(False, t, f"energy {e:.6g} kWh above E+ {env.e_plus[t]:.6g}")
    return FeasibilityVerdict(True)


def check_vehicle_schedule(session: VehicleSession, power: np.ndarray, dt: float,
                           tol: float = EPS_FEAS) -> FeasibilityVerdict:
    """
    Per-vehicle audit: zero outside the connection, semicontinuous while
    charging and the request met by departure.

    The step that completes the request may run below p_min.
    """
    rate = session.spec.rate
    delivered = 0.0
    for t, p in enumerate(power):
        p = float(p)
        if p < -tol:
            return FeasibilityVerdict(False, t, f"{session.vehicle_id}: negative power")
        if p <= tol:
            continue
        if not session.is_plugged(t):
            return FeasibilityVerdict(False, t, f"{session.vehicle_id}: charging while unplugged")
        if p > rate + tol:
            return FeasibilityVerdict(False, t, f"{session.vehicle_id}: {p:.6g} kW above {rate:.6g} kW")
        delivered += p * dt
        finishing = abs(delivered - session.e_req) <= tol * max(1.0, session.e_req)
        if p < session.spec.p_min - tol and not finishing:
            return FeasibilityVerdict(False, t, f"{session.vehicle_id}: {p:.6g} kW below p_min")
    if abs(delivered - session.e_req) > tol * max(1.0, session.e_req):
        return FeasibilityVerdict(
            False, session.t_depart - 1,
            f"{session.vehicle_id}: delivered {delivered:.6g} kWh of {session.e_req:.6g} kWh"
        )
    return FeasibilityVerdict(True)


class _Charge:
    """Mutable bookkeeping for one vehicle during disaggregation"""

    __slots__ = ("session", "index", "remaining", "power")

    def __init__(self, session: VehicleSession, index: int, n_steps: int):
        self.session = session
        self.index = index
        self.remaining = session.e_req
        self.power = np.zeros(n_steps)

    def cap(self, dt: float) -> float:
        return min(self.session.spec.rate, self.remaining / dt)

    def floor(self, dt: float) -> float:
        """Smallest admissible nonzero power at this step"""
        return min(self.session.spec.p_min, self.cap(dt))

    def must(self, t: int, dt: float) -> float:
        """Power needed now so the rest of the request still fits at full rate"""
        later = (self.session.t_depart - t - 1) * self.session.spec.rate * dt
        return max(0.0, self.remaining - later) / dt

    def edf_key(self, t: int, dt: float):
        step_energy = self.session.spec.rate * dt
        laxity = (self.session.t_depart - t) - self.remaining / step_energy
        return (self.session.t_depart, laxity, self.session.vehicle_id)


def disaggregate(profile: AggregateProfile, sessions: Sequence[VehicleSession], dt: float,
                 tol: float = EPS_FEAS) -> List[np.ndarray]:
    """
    Split an aggregate profile into per-vehicle schedules.

    Each step first serves the power every vehicle must take to still
    finish in time, then fills the rest earliest-deadline-first: vehicles
    already charging are topped up, further vehicles are switched on whole,
    and a remainder below a vehicle's p_min is covered by shifting power
    from a vehicle that can spare it.

    Args:
        profile: Aggregate delivered power per step
        sessions: The day's sessions on the same grid
        dt: Step length in hours

    Returns:
        One power array per session, in session order

    Raises:
        DisaggregationFailure: with the unplaced power per step
    """
    n_steps = profile.n_steps
    charges = [_Charge(s, i, n_steps) for i, s in enumerate(sessions)]
    residuals: Dict[int, float] = {}

    for t in range(n_steps):
        target = max(0.0, float(profile.p[t]))
        active = [c for c in charges if c.session.is_plugged(t) and c.remaining > tol]
        active.sort(key=lambda c: c.edf_key(t, dt))
        alloc = {c.index: 0.0 for c in active}

        for c in active:
            need = c.must(t, dt)
            if need > tol:
                alloc[c.index] = min(c.cap(dt), max(need, c.floor(dt)))

        left = target - sum(alloc.values())
        if left < -tol * max(1.0, target):
            residuals[t] = left
            logger.debug(f"Step {t}: mandatory charging exceeds the aggregate by {-left:.6g} kW")

        # Top up vehicles that are already on
        for c in active:
            if left <= tol:
                break
            if alloc[c.index] > 0:
                extra = min(left, c.cap(dt) - alloc[c.index])
                alloc[c.index] += extra
                left -= extra

        # Switch on further vehicles
        for c in active:
            if left <= tol:
                break
            if alloc[c.index] > 0:
                continue
            floor = c.floor(dt)
            if left >= floor - tol:
                give = min(left, c.cap(dt))
                alloc[c.index] = give
                left -= give
                continue
            shortfall = floor - left
            donor = _find_donor(active, alloc, shortfall, t, dt, exclude=c.index)
            if donor is not None:
                alloc[donor.index] -= shortfall
                alloc[c.index] = floor
                left = 0.0

        if left > tol * max(1.0, target):
            residuals[t] = left

        for c in active:
            p = alloc[c.index]
            c.power[t] = p
            c.remaining = max(0.0, c.remaining - p * dt)

    for c in charges:
        if c.remaining > tol * max(1.0, c.session.e_req):
            last = c.session.t_depart - 1
            residuals[last] = residuals.get(last, 0.0) - c.remaining / dt

    if residuals:
        raise DisaggregationFailure(
            f"Aggregate profile cannot be split exactly at {len(residuals)} steps",
            residuals,
        )
    return [c.power for c in charges]


def _find_donor(active: List[_Charge], alloc: Dict[int, float], amount: float, t: int,
                dt: float, exclude: int) -> Optional[_Charge]:
    for c in reversed(active):
        if c.index == exclude or alloc[c.index] <= 0:
            continue
        lowest = max(c.must(t, dt), c.floor(dt))
        if alloc[c.index] - amount >= lowest - EPS_FEAS:
            return c
    return None
