"""
Dam break: a water column L wide and 2L tall collapses along the tank floor.

The left wall and the floor are enforced by a linear projection rebuilt
from the current fluid extents every step; penetration of the tank walls
is penalized by contact springs. Particles reaching the wall edges slip
onto the floor. Only the outflow phase is simulated: the run stops when
the front reaches the far tank wall.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..config import RunConfig
from ..constants import COMPARISON_COLUMNS, FRONT_COLUMNS
from ..contact import ContactSpec, box_walls
from ..diagnostics import FrontComparison, compare_front, dimensionless_time
from ..file_io import read_experiment_csv, write_csv
from ..particles import (
    ParticleSet,
    dambreak_corners,
    initial_spacing,
    refresh_extents,
    seed_particles,
    slip_relax,
)
from ..projection import BoundaryProjection, linear_projection
from ..utils import Progress
from .fluid import FluidSimulation, ScenarioResult


class DamBreakSimulation(FluidSimulation):

    def __init__(self, config: RunConfig, particles: ParticleSet,
                 progress: Optional[Progress] = None):
        geometry = config.geometry
        super().__init__(config, particles, progress, input_scale=1.0 / geometry.length)
        self.walls = box_walls(geometry.tank_width)
        self._contact = None
        if config.contact.penalty is not None:
            self._contact = ContactSpec(config.contact.penalty, tuple(self.walls))
        threshold = config.particles.slip_threshold
        if threshold is None:
            threshold = 0.5 * initial_spacing(geometry, config.particles, column=True)
        self.slip_threshold = threshold
        self._projection = linear_projection(*refresh_extents(particles))
        self.slipped = 0

    def projection(self) -> BoundaryProjection:
        return self._projection

    def contact(self) -> Optional[ContactSpec]:
        return self._contact

    def before_step(self, time_step: int) -> int:
        self.particles, moved = slip_relax(self.particles, self.slip_threshold,
                                           dambreak_corners(self.particles))
        self.slipped += moved
        self._projection = linear_projection(*refresh_extents(self.particles))
        return moved

    def should_stop(self) -> Optional[str]:
        if self.front() >= self.config.geometry.tank_width:
            return "front reached the tank wall"
        return None

    def front_series(self) -> List[Tuple[float, float, float]]:
        """(t, T*, Z*) per recorded time."""
        cfg = self.config
        L = cfg.geometry.length
        return [(r.t, dimensionless_time(r.t, cfg.fluid.gravity, L, cfg.time_scale), r.front_tip / L)
                for r in self.records]

    def metrics(self) -> Dict[str, Any]:
        zstar = [z for _, _, z in self.front_series()]
        return {
            "final_Zstar": zstar[-1],
            "front_monotone": bool(np.all(np.diff(zstar) >= 0)),
            "min_y": float(np.min(self.particles.positions[:, 1])),
            "slipped_particles": self.slipped,
        }


def dambreak_column(config: RunConfig) -> ParticleSet:
    """Seeded column with hydrostatic pressure rho g (2L - y)."""
    particles = seed_particles(config.geometry, config.particles, config.seed, column=True)
    top = 2.0 * config.geometry.length
    pressure = config.fluid.rho * config.fluid.gravity * (top - particles.positions[:, 1])
    return particles.with_state(particles.positions, particles.velocities, pressure)


def run_dambreak(config: RunConfig, progress: Optional[Progress] = None,
                 experiment: Optional[List[Tuple[float, float]]] = None) -> ScenarioResult:
    """
    Collapse of the water column; writes front.csv and, with experimental
    data (``experiment`` or ``config.experiment_csv``), comparison.csv.
    """
    if experiment is None and config.experiment_csv:
        experiment = read_experiment_csv(config.experiment_csv)

    simulation = DamBreakSimulation(config, dambreak_column(config), progress)
    try:
        result = simulation.run()
    finally:
        write_csv(Path(config.output_dir) / "front.csv", FRONT_COLUMNS, simulation.front_series())

    if experiment:
        series = [(tstar, zstar) for _, tstar, zstar in simulation.front_series()]
        rows: List[FrontComparison] = compare_front(series, experiment)
        write_csv(Path(config.output_dir) / "comparison.csv", COMPARISON_COLUMNS,
                  (row.row() for row in rows))
        result.comparison = rows
        result.metrics["compared_points"] = len(rows)
        result.metrics["max_relative_error"] = max((r.relative_error for r in rows), default=None)
        result.metrics["all_within_tolerance"] = all(r.within_tolerance for r in rows)
    return result
