"""
Envelope computation: per-vehicle as-fast/as-late patterns, their sum into
a daily virtual battery, and the flexibility index.
"""
import logging
import math
from datetime import date
from typing import Dict, List, Optional, Sequence

import numpy as np

from .models import EPS_FEAS, AggregateEnvelope, AggregateProfile, VehicleEnvelope, VehicleSession
from ..utils.errors import EmptyInput, GridMismatch, InfeasibleSession
from ..utils.timegrid import steps_per_day

logger = logging.getLogger(__name__)

MAX_CONNECTED_DAYS = 2


def compute_vehicle_envelope(session: VehicleSession, dt: float,
                             n_steps: Optional[int] = None) -> VehicleEnvelope:
    """
    As-fast-as-possible (e_plus) and as-late-as-possible (e_minus) cumulative
    energy of one session, both capped at the request.

    Args:
        session: Plug-in event on the day grid
        dt: Step length in hours
        n_steps: Day length in steps, defaults to a full day at dt

    Returns:
        VehicleEnvelope with values at the end of each step
    """
    n_steps = n_steps or steps_per_day(dt)
    if session.t_depart > n_steps:
        raise GridMismatch(f"Session {session.vehicle_id} departs at step {session.t_depart} "
                           f"beyond a {n_steps}-step day")
    if session.e_req > session.max_energy(dt) + EPS_FEAS:
        raise InfeasibleSession(
            f"Session {session.vehicle_id} requests {session.e_req:.3f} kWh, "
            f"at most {session.max_energy(dt):.3f} kWh deliverable"
        )

    step_energy = session.spec.rate * dt
    t = np.arange(n_steps)
    e_plus = np.zeros(n_steps)
    e_minus = np.zeros(n_steps)

    after = t >= session.t_arrive
    e_plus[after] = np.minimum(session.e_req, (t[after] - session.t_arrive + 1) * step_energy)

    # Steps left after t while plugged, at full rate
    steps_left = session.t_depart - 1 - t
    e_minus[after] = np.maximum(0.0, session.e_req - np.maximum(steps_left[after], 0) * step_energy)
    return VehicleEnvelope(e_plus=e_plus, e_minus=e_minus)


def clip_session(session: VehicleSession, dt: float) -> VehicleSession:
    """Reduce an undeliverable request to the deliverable maximum"""
    limit = session.max_energy(dt)
    if session.e_req <= limit + EPS_FEAS:
        return session
    logger.warning(f"Clipping session {session.vehicle_id} on {session.day}: "
                   f"{session.e_req:.3f} kWh requested, {limit:.3f} kWh deliverable")
    return session.model_copy(update={"e_req": limit})


def aggregate(envelopes: Sequence[VehicleEnvelope], sessions: Sequence[VehicleSession],
              dt: float, n_steps: Optional[int] = None,
              day: Optional[date] = None) -> AggregateEnvelope:
    """Pointwise sum of vehicle envelopes with the plugged-fleet power cap"""
    if len(envelopes) != len(sessions):
        raise GridMismatch(f"{len(envelopes)} envelopes for {len(sessions)} sessions")
    lengths = {env.n_steps for env in envelopes}
    if n_steps is not None:
        lengths.add(n_steps)
    if len(lengths) > 1:
        raise GridMismatch(f"Envelopes on different step grids: {sorted(lengths)}")
    if not envelopes:
        return AggregateEnvelope.zeros(n_steps or steps_per_day(dt), day)

    size = lengths.pop()
    e_plus = np.zeros(size)
    e_minus = np.zeros(size)
    p_max = np.zeros(size)
    p_min = np.full(size, math.inf)
    n_plugged = np.zeros(size, dtype=int)

    for env, session in zip(envelopes, sessions):
        e_plus += env.e_plus
        e_minus += env.e_minus
        window = slice(session.t_arrive, session.t_depart)
        p_max[window] += session.spec.rate
        p_min[window] = np.minimum(p_min[window], session.spec.p_min)
        n_plugged[window] += 1

    p_min[np.isinf(p_min)] = 0.0
    return AggregateEnvelope(e_plus, e_minus, p_max, p_min, n_plugged, day)


def sessions_by_day(sessions: Sequence[VehicleSession]) -> Dict[date, List[VehicleSession]]:
    grouped: Dict[date, List[VehicleSession]] = {}
    for session in sessions:
        grouped.setdefault(session.day, []).append(session)
    return grouped


def daily_envelopes(sessions: Sequence[VehicleSession], days: Sequence[date], dt: float,
                    n_steps: Optional[int] = None) -> List[AggregateEnvelope]:
    """One aggregate envelope per requested day, zero where nobody plugs in"""
    n_steps = n_steps or steps_per_day(dt)
    grouped = sessions_by_day(sessions)
    result = []
    for day in days:
        todays = grouped.get(day, [])
        envs = [compute_vehicle_envelope(s, dt, n_steps) for s in todays]
        result.append(aggregate(envs, todays, dt, n_steps, day))
    return result


def uncontrolled_profile(sessions: Sequence[VehicleSession], dt: float,
                         n_steps: Optional[int] = None) -> AggregateProfile:
    """Charge-on-arrival reference: full rate from arrival until the request is met"""
    n_steps = n_steps or steps_per_day(dt)
    p = np.zeros(n_steps)
    for session in sessions:
        remaining = session.e_req
        for t in range(session.t_arrive, session.t_depart):
            if remaining <= EPS_FEAS:
                break
            power = min(session.spec.rate, remaining / dt)
            p[t] += power
            remaining -= power * dt
    return AggregateProfile.from_power(p)


def stretch_sessions(sessions: Sequence[VehicleSession], ratio: float, dt: float,
                     n_steps: Optional[int] = None) -> List[VehicleSession]:
    """
    Scale each connected duration by ratio about its midpoint.

    The stretched window always contains the original one, is capped at two
    days and clipped to the day grid. Requests stay fixed; shrinking windows
    clip undeliverable requests.
    """
    if ratio <= 0:
        raise ValueError(f"Stretch ratio must be positive, got {ratio}")
    n_steps = n_steps or steps_per_day(dt)
    cap = MAX_CONNECTED_DAYS * steps_per_day(dt)

    stretched = []
    for session in sessions:
        new_duration = max(1, min(int(round(session.duration * ratio)), cap))
        midpoint = (session.t_arrive + session.t_depart) / 2.0
        t_arrive = int(math.floor(midpoint - new_duration / 2.0))
        t_depart = t_arrive + new_duration
        if ratio >= 1:
            t_arrive = min(t_arrive, session.t_arrive)
            t_depart = max(t_depart, session.t_depart)
        t_arrive = max(0, t_arrive)
        t_depart = min(n_steps, t_depart)
        if t_depart <= t_arrive:
            t_depart = min(n_steps, t_arrive + 1)
        updated = session.model_copy(update={"t_arrive": t_arrive, "t_depart": t_depart})
        stretched.append(clip_session(updated, dt))
    return stretched


def flexibility_index(env_by_day: Sequence[AggregateEnvelope]) -> float:
    """Mean gap between the upper and lower energy bounds over all days and steps"""
    if not env_by_day:
        raise EmptyInput("Flexibility index needs at least one day")
    lengths = {env.n_steps for env in env_by_day}
    if len(lengths) > 1:
        raise GridMismatch(f"Days on different step grids: {sorted(lengths)}")
    total = sum(float(np.sum(env.gap)) for env in env_by_day)
    return total / (len(env_by_day) * lengths.pop())
