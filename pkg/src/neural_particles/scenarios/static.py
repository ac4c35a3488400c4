"""
Static pressure: fluid at rest in a closed container under gravity.

The exact solution is v = 0 and p = rho g (h - y); the run reports how
far the trained pressure field and the particle positions drift from it.
"""

from typing import Any, Dict, Optional

from ..config import RunConfig
from ..diagnostics import max_displacement, pressure_error, symmetry_error
from ..particles import seed_particles
from ..utils import Progress
from .fluid import ContainerSimulation, ScenarioResult, hydrostatic_start


class StaticPressureSimulation(ContainerSimulation):

    def metrics(self) -> Dict[str, Any]:
        geometry = self.config.geometry
        rms, relative = pressure_error(self.particles, self.config.fluid, geometry.height)
        return {
            "pressure_rms": rms,
            "pressure_rel_rms": relative,
            "max_displacement": max_displacement(self.particles, self.initial_positions),
            "symmetry_error": symmetry_error(self.particles, geometry.width),
        }


def run_static_pressure(config: RunConfig, progress: Optional[Progress] = None) -> ScenarioResult:
    particles = seed_particles(config.geometry, config.particles, config.seed)
    particles = hydrostatic_start(particles, config)
    return StaticPressureSimulation(config, particles, progress).run()
