"""
Single monthly run: load, optionally pin the regulation baseline, solve and
write the artifacts.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

from ..ingestion.artifacts import write_month_result
from ..ingestion.scenario import load_scenario, read_manifest
from ..milp.backends import SolverBackend, SolverLimits
from ..problems.models import MonthResult, ProblemId, Scenario
from ..problems.optimize import optimize_month, with_fixed_regulation_baseline

logger = logging.getLogger(__name__)


@dataclass
class RunOutcome:
    scenario: Scenario
    result: MonthResult
    paths: Dict[str, Path]


def prepare_scenario(manifest_path: Union[str, Path], problem: ProblemId,
                     backend: Optional[SolverBackend] = None,
                     limits: Optional[SolverLimits] = None) -> Scenario:
    scenario = load_scenario(manifest_path)
    if limits is not None:
        scenario = scenario.replace(limits=limits)
    manifest = read_manifest(manifest_path)
    if problem == ProblemId.P3 and manifest.regulation is not None and manifest.regulation.fixed_baseline:
        scenario = with_fixed_regulation_baseline(scenario, backend)
    return scenario


def run_month(manifest_path: Union[str, Path], problem: Union[str, ProblemId], out_dir: Union[str, Path],
              backend: Optional[SolverBackend] = None,
              limits: Optional[SolverLimits] = None) -> RunOutcome:
    problem = ProblemId.parse(problem)
    scenario = prepare_scenario(manifest_path, problem, backend, limits)
    result = optimize_month(scenario, problem, backend)
    paths = write_month_result(result, scenario.baseload.load, out_dir)
    return RunOutcome(scenario, result, paths)
