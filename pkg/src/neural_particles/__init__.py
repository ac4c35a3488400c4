"""
Neural Particle Method - a meshfree solver for incompressible free-surface
flow whose spatial ansatz is a feed-forward network trained per time step.
"""

from .cli import run
from .config import RunConfig, build_run_config
from .constants import __version__
from .irk import gauss_legendre
from .network import NetworkLayout, init_params
from .scenarios import run_dambreak, run_msd, run_sloshing, run_static_pressure

__all__ = [
    "NetworkLayout",
    "RunConfig",
    "build_run_config",
    "gauss_legendre",
    "init_params",
    "run",
    "run_dambreak",
    "run_msd",
    "run_sloshing",
    "run_static_pressure",
    "__version__",
]
