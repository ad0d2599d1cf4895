import re
from decimal import Decimal, InvalidOperation
from typing import List, Optional

from .errors import ConfigError


class GridParser:
    """Parse sweep grids written as `a:b:step` or a comma list"""

    RANGE_PATTERN = re.compile(r'^\s*(?P<start>[^:,\s]+)\s*:\s*(?P<stop>[^:,\s]+)\s*:\s*(?P<step>[^:,\s]+)\s*$')

    # Points generated past this count are almost certainly a typo
    MAX_POINTS = 10000

    @staticmethod
    def _number(text: str) -> Decimal:
        try:
            value = Decimal(text.strip())
        except InvalidOperation:
            raise ConfigError(f"'{text}' is not a number")
        if not value.is_finite():
            raise ConfigError(f"Grid values must be finite, got '{text}'")
        return value

    @classmethod
    def parse_range(cls, text: str) -> Optional[List[float]]:
        """
        Expand `a:b:step` into a, a+step, ... up to b inclusive when b lies
        on the grid. Decimal arithmetic keeps 0.1 steps exact.

        Returns:
            The points, or None when the text is not range syntax
        """
        match = cls.RANGE_PATTERN.match(text)
        if not match:
            return None
        start, stop, step = (cls._number(match.group(k)) for k in ("start", "stop", "step"))
        if step <= 0:
            raise ConfigError(f"Grid step must be positive, got {step}")
        if stop < start:
            raise ConfigError(f"Grid end {stop} is before its start {start}")
        count = int((stop - start) / step) + 1
        if count > cls.MAX_POINTS:
            raise ConfigError(f"Grid '{text}' expands to {count} points")
        return [float(start + k * step) for k in range(count)]

    @classmethod
    def parse(cls, text: str) -> List[float]:
        """Sorted, de-duplicated grid points from range or list syntax"""
        points = cls.parse_range(text)
        if points is None:
            points = [float(cls._number(p)) for p in text.split(",") if p.strip()]
        if not points:
            raise ConfigError(f"Empty grid '{text}'")
        return sorted(set(points))
