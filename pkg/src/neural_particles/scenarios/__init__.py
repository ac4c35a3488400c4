"""
Scenario runners, keyed by the scenario name used on the command line.
"""

from typing import Callable, Dict

from .dambreak import run_dambreak
from .fluid import ScenarioResult
from .msd import MsdProblem, msd_analytic, run_msd
from .sloshing import run_sloshing, surface_elevation
from .static import run_static_pressure

RUNNERS: Dict[str, Callable[..., ScenarioResult]] = {
    "msd": run_msd,
    "static-pressure": run_static_pressure,
    "sloshing": run_sloshing,
    "dambreak": run_dambreak,
}


def get_runner(scenario: str) -> Callable[..., ScenarioResult]:
    try:
        return RUNNERS[scenario]
    except KeyError:
        raise ValueError(f"Unsupported scenario '{scenario}'; choose from {', '.join(RUNNERS)}") from None


__all__ = [
    "RUNNERS",
    "ScenarioResult",
    "MsdProblem",
    "get_runner",
    "msd_analytic",
    "run_dambreak",
    "run_msd",
    "run_sloshing",
    "run_static_pressure",
    "surface_elevation",
]
