"""
Formatting utilities for results.
Provides consistent dictionary representations for console output.
"""
from typing import Dict, Optional

from ..fleet.envelopes import flexibility_index
from ..problems.models import MonthResult, Scenario
from ..tariff.models import BillResult


def _money(value: Optional[float]) -> Optional[float]:
    return None if value is None else round(float(value), 2)


def format_bill(bill: BillResult) -> dict:
    """Format a bill into a consistent dictionary structure"""
    return {
        "energy_charge": _money(bill.c_ec),
        "demand_charge": _money(bill.c_dc),
        "pdp_credits": _money(bill.pdp_credit_peak + bill.pdp_credit_partpeak),
        "pdp_event_charge": _money(bill.c_pdp),
        "total": _money(bill.total),
        "demand_peaks_kw": {k: round(v, 3) for k, v in bill.demand_peaks.items()},
    }


def format_month_result(result: MonthResult, include_stats: bool = False) -> dict:
    """Format a monthly result; optional solver statistics for detailed output"""
    data = {
        "problem": result.problem.value,
        "status": result.status,
        "objective": _money(result.objective),
        "bill": format_bill(result.bill),
        "revenue": {
            "regulation": _money(result.r_as),
            "pdr": _money(result.r_pdr),
            "dbp": _money(result.r_dbp),
        },
        "savings_vs_uncontrolled": _money(result.savings),
        "days": len(result.days),
    }
    if include_stats:
        data["stats"] = dict(result.stats)
    return data


def format_scenario(scenario: Scenario) -> dict:
    """Format a scenario header: calendar, fleet size and products"""
    envelopes = scenario.envelopes()
    products = [name for name, value in (
        ("pdp", scenario.pdp), ("regulation", scenario.regulation),
        ("pdr", scenario.pdr), ("dbp", scenario.dbp),
    ) if value is not None]
    return {
        "name": scenario.name,
        "month": f"{scenario.year}-{scenario.month:02d}",
        "days": len(scenario.days),
        "step_minutes": int(round(scenario.dt * 60)),
        "sessions": len(scenario.sessions),
        "energy_kwh": round(sum(env.total_energy for env in envelopes), 3),
        "flexibility_index": round(flexibility_index(envelopes), 4) if envelopes else None,
        "products": products,
    }


def format_paths(paths: Dict[str, object]) -> Dict[str, str]:
    return {k: str(v) for k, v in paths.items()}
