"""
Exception hierarchy.
Every error carries the CLI exit code of its family.
"""
from typing import Dict, List, Optional


class EvdrError(Exception):
    exit_code = 1

    def to_dict(self) -> dict:
        return {
            "error": str(self),
            "type": type(self).__name__,
            "exit_code": self.exit_code,
        }


class SolverError(EvdrError):
    exit_code = 1


class ConfigError(EvdrError):
    exit_code = 2


class DataError(EvdrError):
    exit_code = 3


# Fleet
class InfeasibleSession(DataError):
    pass


class GridMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class DisaggregationFailure(SolverError):
    def __init__(self, message: str, residuals: Optional[Dict[int, float]] = None):
        super().__init__(message)
        self.residuals = residuals or {}

    def to_dict(self) -> dict:
        data = super().to_dict()
        data["residuals"] = {str(k): v for k, v in self.residuals.items()}
        return data


# Tariff and markets
class CalendarMismatch(DataError):
    pass


class NoEventDays(DataError):
    pass


class InsufficientHistory(DataError):
    pass


class OutsideEventWindow(DataError):
    pass


# Model building and solving
class InvalidBounds(SolverError):
    pass


class EmptyTerms(SolverError):
    pass


class UnboundedExpr(SolverError):
    pass


class InvalidWindow(SolverError):
    pass


class BackendUnavailable(SolverError):
    pass


class InconsistentObjective(SolverError):
    pass


class EnvelopeViolation(SolverError):
    def __init__(self, message: str, days: Optional[List[str]] = None):
        super().__init__(message)
        self.days = days or []

    def to_dict(self) -> dict:
        data = super().to_dict()
        data["days"] = self.days
        return data


class MissingProduct(ConfigError):
    pass


class BaselineMissing(ConfigError):
    pass


class UnknownParameter(ConfigError):
    pass


# Ingestion
class HeaderMismatch(DataError):
    def __init__(self, expected: List[str], found: List[str]):
        super().__init__(f"Expected columns {expected}, found {found}")
        self.expected = expected
        self.found = found


class EmptyAfterSnap(DataError):
    pass


class IrregularSource(DataError):
    pass


def config_error(source: str, exc: Exception) -> ConfigError:
    """Turn a pydantic ValidationError into a ConfigError naming the fields"""
    details = getattr(exc, "errors", None)
    if callable(details):
        parts = []
        for item in details():
            where = ".".join(str(p) for p in item.get("loc", ())) or "<root>"
            parts.append(f"{where}: {item.get('msg', 'invalid')}")
        return ConfigError(f"{source}: " + "; ".join(parts))
    return ConfigError(f"{source}: {exc}")
