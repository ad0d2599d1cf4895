"""
Market product descriptors: regulation, proxy demand response and the
demand bidding program. Per-step series are (days, steps) arrays; NaN
prices mark steps where a product is not offered.
"""
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np

from ..tariff.models import EventWindow
from ..utils.errors import ConfigError


def _check_prices(name: str, prices: np.ndarray, allow_negative: bool = False):
    finite = prices[np.isfinite(prices)]
    if not allow_negative and (finite < 0).any():
        raise ConfigError(f"{name} has negative prices")


@dataclass(frozen=True)
class RegulationMarket:
    price_up: np.ndarray
    price_down: np.ndarray
    rho_up: float = -0.15
    rho_down: float = 0.15
    min_bid_up: float = 10.0
    min_bid_down: float = 10.0
    # Steps a bid stays constant
    commitment_len: int = 1

    def __post_init__(self):
        if self.price_up.shape != self.price_down.shape:
            raise ConfigError("Regulation up and down prices are on different grids")
        _check_prices("price_up", self.price_up)
        _check_prices("price_down", self.price_down)
        if not -1.0 <= self.rho_up <= 0.0:
            raise ConfigError(f"rho_up must lie in [-1, 0], got {self.rho_up}")
        if not 0.0 <= self.rho_down <= 1.0:
            raise ConfigError(f"rho_down must lie in [0, 1], got {self.rho_down}")
        if self.min_bid_up < 0 or self.min_bid_down < 0:
            raise ConfigError("Minimum regulation bids must be nonnegative")
        if self.commitment_len < 1:
            raise ConfigError("commitment_len must be at least one step")

    def with_threshold(self, threshold: float) -> "RegulationMarket":
        return replace(self, min_bid_up=threshold, min_bid_down=threshold)


@dataclass(frozen=True)
class RegulationPlan:
    baseline: np.ndarray
    bid_up: np.ndarray
    bid_down: np.ndarray
    tracks: Dict[str, np.ndarray] = field(default_factory=dict)

    def actual(self, market: RegulationMarket) -> np.ndarray:
        from .settlement import apply_utilization
        return apply_utilization(self, market)


@dataclass(frozen=True)
class PdrMarket:
    price: np.ndarray
    min_sell: float = 10.0
    min_consecutive: int = 4
    baseline: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.min_sell < 0:
            raise ConfigError("min_sell must be nonnegative")
        if self.min_consecutive < 1:
            raise ConfigError("min_consecutive must be at least one step")

    def with_baseline(self, baseline: np.ndarray) -> "PdrMarket":
        return replace(self, baseline=np.asarray(baseline, dtype=float))

    def with_threshold(self, threshold: float) -> "PdrMarket":
        return replace(self, min_sell=threshold)


@dataclass(frozen=True)
class DbpProgram:
    credit: float = 0.5
    events: Tuple[EventWindow, ...] = ()
    min_reduction: float = 10.0
    min_duration: int = 8
    baseline: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.credit < 0:
            raise ConfigError("DBP credit must be nonnegative")
        if self.min_reduction < 0:
            raise ConfigError("min_reduction must be nonnegative")
        if self.min_duration < 1:
            raise ConfigError("min_duration must be at least one step")

    def with_baseline(self, baseline: np.ndarray) -> "DbpProgram":
        return replace(self, baseline=np.asarray(baseline, dtype=float))

    def with_threshold(self, threshold: float) -> "DbpProgram":
        return replace(self, min_reduction=threshold)
