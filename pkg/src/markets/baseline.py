"""
Counterfactual baselines from historical daily profiles.
Weekdays and weekends are pooled separately.
"""
import logging
from datetime import date
from typing import Mapping, Optional, Sequence

import numpy as np

from ..utils.errors import InsufficientHistory
from ..utils.timegrid import is_weekend

logger = logging.getLogger(__name__)


def compute_baseline(history: Sequence[np.ndarray], n_days: int = 10) -> np.ndarray:
    """Pointwise mean of the last n_days profiles (history in date order)"""
    if n_days < 1:
        raise ValueError("n_days must be at least 1")
    if len(history) < n_days:
        raise InsufficientHistory(f"Baseline needs {n_days} days of history, {len(history)} given")
    return np.mean(np.stack([np.asarray(h, dtype=float) for h in history[-n_days:]]), axis=0)


def baselines_for_days(history: Mapping[date, np.ndarray], days: Sequence[date], n_days: int = 10,
                       min_days: Optional[int] = None) -> np.ndarray:
    """
    Baseline per target day from history strictly before it, of the same
    day type. Up to n_days profiles are averaged; fewer than min_days
    (default n_days) is an error.
    """
    min_days = n_days if min_days is None else min_days
    ordered = sorted(history)
    rows = []
    for day in days:
        pool = [history[h] for h in ordered if h < day and is_weekend(h) == is_weekend(day)]
        if len(pool) < max(min_days, 1):
            raise InsufficientHistory(f"{day}: {len(pool)} matching history days, {min_days} required")
        use = min(n_days, len(pool))
        rows.append(compute_baseline(pool, use))
        logger.debug(f"Baseline for {day} from {use} days")
    return np.stack(rows) if rows else np.zeros((0, 0))
