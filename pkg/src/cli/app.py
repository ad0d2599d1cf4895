"""
Command-line front end.

    run     solve one monthly problem and write its artifacts
    sweep   sensitivity sweep over one parameter (several manifests allowed)
    synth   write a seeded synthetic fixture set
"""
import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

import pandas as pd

from .formatters import format_month_result, format_paths, format_scenario
from .runner import prepare_scenario, run_month
from .sweeps import SWEEP_PARAMETERS, flexibility_revenue_correlation, run_sweep, write_sweep_table
from .synthetic import generate_fixture
from ..config.settings import SOLVER_CHOICES, settings
from ..ingestion.artifacts import write_atomic
from ..milp.backends import SolverLimits, get_backend
from ..problems.models import ProblemId
from ..utils.errors import ConfigError, EvdrError
from ..utils.grid_parser import GridParser

logger = logging.getLogger(__name__)

BUNDLED_MANIFEST = Path(__file__).resolve().parent.parent / "data" / "demo_manifest.json"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evdr", description="EV charging schedules under California DR products")
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_flags(p: argparse.ArgumentParser):
        p.add_argument("--manifest", action="append", type=Path,
                       help="Scenario manifest (repeatable for sweeps); defaults to the bundled demo")
        p.add_argument("--out", type=Path, default=Path(settings.output_dir), help="Output directory")
        p.add_argument("--solver", choices=SOLVER_CHOICES, default=settings.solver)
        p.add_argument("--time-limit", type=float, default=None, help="Seconds per solve")
        p.add_argument("--gap", type=float, default=None, help="Relative MIP gap")

    run = sub.add_parser("run", help="Solve one monthly problem")
    solver_flags(run)
    run.add_argument("--problem", default="p1", choices=[p.value for p in ProblemId])

    sweep = sub.add_parser("sweep", help="Sensitivity sweep")
    solver_flags(sweep)
    sweep.add_argument("--sweep", required=True, choices=SWEEP_PARAMETERS, dest="parameter")
    sweep.add_argument("--grid", default=None, help="a:b:step or a comma list")
    sweep.add_argument("--jobs", type=int, default=settings.jobs)

    synth = sub.add_parser("synth", help="Write a synthetic fixture set")
    synth.add_argument("--out", type=Path, default=Path(settings.output_dir) / "synthetic")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--year", type=int, default=2024)
    synth.add_argument("--month", type=int, default=7)
    synth.add_argument("--days", type=int, default=None, help="Only the first N days of the month")
    synth.add_argument("--vehicles", type=int, default=6, help="Vehicles per weekday")
    synth.add_argument("--dt-minutes", type=int, default=settings.dt_minutes)
    synth.add_argument("--dwell-scale", type=float, default=1.0, help="Stretch of the connected durations")
    return parser


def _limits(args) -> Optional[SolverLimits]:
    if args.time_limit is None and args.gap is None:
        return None
    base = SolverLimits.from_settings()
    return SolverLimits(
        time_limit=base.time_limit if args.time_limit is None else args.time_limit,
        mip_gap=base.mip_gap if args.gap is None else args.gap,
    )


def _manifests(args) -> List[Path]:
    return list(args.manifest) if args.manifest else [BUNDLED_MANIFEST]


def _handle_run(args) -> dict:
    manifests = _manifests(args)
    if len(manifests) > 1:
        raise ConfigError("run takes a single --manifest")
    outcome = run_month(manifests[0], args.problem, args.out, get_backend(args.solver), _limits(args))
    return {
        "scenario": format_scenario(outcome.scenario),
        "result": format_month_result(outcome.result),
        "artifacts": format_paths(outcome.paths),
    }


def _handle_sweep(args) -> dict:
    grid = GridParser.parse(args.grid) if args.grid else None
    backend = get_backend(args.solver)
    limits = _limits(args)
    scenarios = [prepare_scenario(m, ProblemId.P1, backend, limits) for m in _manifests(args)]

    async def sweep_all():
        tables = []
        for scenario in scenarios:
            tables.append(await run_sweep(scenario, args.parameter, grid, args.jobs, backend, args.out))
        return pd.concat(tables, ignore_index=True)

    table = asyncio.run(sweep_all())
    paths = {"table": write_sweep_table(table, args.parameter, args.out)}
    summary = {"rows": len(table), "failed": int((table["status"] != "ok").sum())}
    if len(scenarios) > 1:
        correlation = flexibility_revenue_correlation(scenarios, backend)
        paths["correlation"] = args.out / "correlation.json"
        write_atomic(paths["correlation"], json.dumps(correlation, indent=2))
        summary["pearson"] = correlation["pearson"]
    summary["artifacts"] = format_paths(paths)
    return summary


def _handle_synth(args) -> dict:
    path = generate_fixture(args.out, year=args.year, month=args.month, seed=args.seed, n_days=args.days,
                            vehicles_per_day=args.vehicles, dt_minutes=args.dt_minutes,
                            dwell_scale=args.dwell_scale)
    return {"manifest": str(path)}


def _get_command_handler(command: str) -> Optional[Callable]:
    handlers: Dict[str, Callable] = {
        "run": _handle_run,
        "sweep": _handle_sweep,
        "synth": _handle_synth,
    }
    return handlers.get(command)


def main(argv: Optional[List[str]] = None) -> int:
    """Parse, dispatch, print a JSON summary; errors become a JSON error and an exit code"""
    args = build_parser().parse_args(argv)
    handler = _get_command_handler(args.command)
    try:
        summary = handler(args)
    except EvdrError as e:
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception(f"{args.command} failed unexpectedly")
        print(json.dumps({"error": str(e), "type": type(e).__name__, "exit_code": 1}), file=sys.stderr)
        return 1
    print(json.dumps(summary, indent=2, default=str))
    return 0
