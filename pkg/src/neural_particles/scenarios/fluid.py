"""
Shared time loop of the fluid scenarios.

Every step builds the loss oracle for the current particle set, trains the
network (warm-started from the previous step), checks the deformation,
advances the particles and records diagnostics. Artifacts are written
atomically; series files are flushed even when a step is rejected.
"""

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from ..config import RunConfig
from ..constants import LOSS_HISTORY_COLUMNS, SNAPSHOT_COLUMNS, STEP_COLUMNS, TIMESERIES_COLUMNS
from ..contact import ContactSpec, WallPlane, box_walls, max_penetration
from ..core import StepProblem, advance_step, check_step
from ..diagnostics import EnergyRecord, energy_record, front_tip, max_speed
from ..file_io import write_csv
from ..irk import gauss_legendre
from ..network import NetworkLayout, flatten, init_params, save_checkpoint, unflatten
from ..optim import REASON_LINE_SEARCH, LossRecord, train
from ..particles import ParticleSet, surface_elevation
from ..projection import BoundaryProjection, distance_functions, outside_count
from ..utils import Progress


@dataclass
class RunStats:
    """Deterministic cost counters of a run."""
    steps: int = 0
    optimizer_iterations: int = 0
    loss_evaluations: int = 0

    def as_dict(self) -> Dict[str, int]:
        return asdict(self)


@dataclass
class ScenarioResult:
    """Outcome of a scenario run, turned into summary.json by the CLI."""
    scenario: str
    final_loss: float
    steps_completed: int
    stats: RunStats
    layout: List[int]
    stages: int
    metrics: Dict[str, Any] = field(default_factory=dict)
    particles: int = 0
    stopped: Optional[str] = None
    comparison: List[Any] = field(default_factory=list)

    def summary(self, config: RunConfig) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "seed": config.seed,
            "layout": list(self.layout),
            "s": self.stages,
            "dt": config.dt,
            "steps": config.steps,
            "steps_completed": self.steps_completed,
            "velocity_bc": config.velocity_bc,
            "particles": self.particles,
            "final_loss": finite_or_none(self.final_loss),
            "metrics": {k: finite_or_none(v) for k, v in self.metrics.items()},
            "runtime": self.stats.as_dict(),
            "stopped": self.stopped,
        }


def finite_or_none(value: Any) -> Any:
    """JSON has no NaN or infinity; report them as null."""
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def loss_history_rows(history: List[LossRecord]):
    for record in history:
        comps = record.components
        yield (record.time_step, record.phase, record.iteration, record.loss,
               comps.get("sse_v", ""), comps.get("sse_div", ""),
               comps.get("sse_pbar", ""), comps.get("sse_vbar", ""))


def snapshot_rows(particles: ParticleSet):
    for k in range(len(particles)):
        x, y = particles.positions[k]
        vx, vy = particles.velocities[k]
        yield (int(particles.ids[k]), int(particles.tags[k]), x, y, vx, vy, particles.pressure[k])


class FluidSimulation:
    """
    Time loop of a fluid scenario.

    Subclasses choose the projection, the contact walls and the gauges;
    the loop itself is identical for all fluid runs.
    """

    def __init__(self, config: RunConfig, particles: ParticleSet,
                 progress: Optional[Progress] = None, input_scale: float = 1.0):
        self.config = config
        self.progress = progress or Progress(config.show_progress)
        self.output_dir = Path(config.output_dir)
        self.layout = NetworkLayout.fluid(config.network.layout)
        self.tableau = gauss_legendre(self.layout.stages)
        self.params = init_params(self.layout, config.seed)
        self.particles = particles
        self.initial_positions = particles.positions.copy()
        self.input_scale = config.network.input_scale or input_scale
        self.soft_walls = config.velocity_bc == "soft"
        # Walls used for the leakage diagnostic
        self.walls: List[WallPlane] = []

        self.t = 0.0
        self.final_loss = float("nan")
        self.stats = RunStats()
        self.history: List[LossRecord] = []
        self.records: List[EnergyRecord] = []
        self.step_rows: List[tuple] = []
        self.max_wall_gap = -math.inf
        self.min_det = math.inf
        self.peak_speed = 0.0
        self.stopped: Optional[str] = None

    # -- hooks ------------------------------------------------------------

    def projection(self) -> BoundaryProjection:
        raise NotImplementedError

    def contact(self) -> Optional[ContactSpec]:
        return None

    def before_step(self, time_step: int) -> int:
        """Adjust the particle set before training; returns the number of moved particles."""
        return 0

    def should_stop(self) -> Optional[str]:
        return None

    def amplitude(self) -> float:
        return 0.0

    def front(self) -> float:
        return front_tip(self.particles)

    def metrics(self) -> Dict[str, Any]:
        return {}

    # -- loop -------------------------------------------------------------

    def run(self) -> ScenarioResult:
        cfg = self.config
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.progress.say(
            f"{cfg.scenario}: {len(self.particles)} particles, layout {list(self.layout.sizes)}, "
            f"s={self.tableau.s}, dt={cfg.dt}, {cfg.steps} steps",
            icon="rocket",
        )
        self._record()
        self._snapshot(0)
        try:
            for n in range(cfg.steps):
                self._step(n)
                if (n + 1) % cfg.snapshot_interval == 0 or n + 1 == cfg.steps:
                    self._snapshot(n + 1)
                self.stopped = self.should_stop()
                if self.stopped:
                    self._snapshot(n + 1)
                    self.progress.say(f"Stopping: {self.stopped}", icon="target")
                    break
        finally:
            self._write_series()

        metrics = {
            "max_wall_gap": self.max_wall_gap,
            "min_det": self.min_det,
            "max_speed": max_speed(self.particles),
            "peak_speed": self.peak_speed,
        }
        metrics.update(self.metrics())
        return ScenarioResult(
            scenario=cfg.scenario, final_loss=self.final_loss,
            steps_completed=self.stats.steps, stats=self.stats,
            layout=list(self.layout.sizes), stages=self.tableau.s,
            metrics=metrics, particles=len(self.particles), stopped=self.stopped,
        )

    def _step(self, n: int) -> None:
        cfg = self.config
        moved = self.before_step(n)
        projection = self.projection()
        problem = StepProblem(
            self.particles, self.layout, self.params, self.tableau, projection,
            cfg.fluid, cfg.dt, contact=self.contact(), weights=cfg.weights,
            soft_walls=self.soft_walls, input_scale=self.input_scale,
        )
        result = train(problem, flatten(self.params), cfg.training, time_step=n,
                       adam_iters=cfg.training.adam_iters_for(n))
        self.history.extend(result.history)
        self.params = unflatten(result.params, self.params)

        state = problem.stage_state(self.params)
        check_step(state, n, cfg.dt)
        self.particles = advance_step(self.particles, state)
        self.t = (n + 1) * cfg.dt

        iterations = result.adam_iterations + result.lbfgs_iterations
        self.stats.steps += 1
        self.stats.optimizer_iterations += iterations
        self.stats.loss_evaluations += result.evaluations
        self.final_loss = result.loss
        self.min_det = min(self.min_det, state.min_det)
        gap = max_penetration(self.particles.positions, self.walls)
        self.max_wall_gap = max(self.max_wall_gap, gap)
        speed = max_speed(self.particles)
        self.peak_speed = max(self.peak_speed, speed)

        self.progress.step(n, cfg.steps, self.t, result.loss, iterations, result.reason)
        if result.reason == REASON_LINE_SEARCH:
            self.progress.warn(f"Step {n}: line search found no further decrease")
        if not self.soft_walls:
            n_out = outside_count(self.particles.positions, projection)
            if n_out:
                self.progress.warn(f"Step {n}: {n_out} particle(s) left the domain")

        self.step_rows.append((n, self.t, result.loss, result.adam_iterations,
                               result.lbfgs_iterations, result.reason, result.evaluations,
                               state.min_det, gap, speed, moved))
        self._record()
        if cfg.checkpoint:
            save_checkpoint(self.params, self.output_dir / "checkpoints" / f"params_{n + 1:05d}.txt")

    def _record(self) -> None:
        self.records.append(energy_record(self.particles, self.config.fluid, self.t,
                                          amplitude=self.amplitude(), front_tip=self.front()))

    def _snapshot(self, n: int) -> None:
        path = self.output_dir / "snapshots" / f"snapshot_{n:05d}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        write_csv(path, SNAPSHOT_COLUMNS, snapshot_rows(self.particles))

    def _write_series(self) -> None:
        write_csv(self.output_dir / "timeseries.csv", TIMESERIES_COLUMNS,
                  (r.row() for r in self.records))
        write_csv(self.output_dir / "loss_history.csv", LOSS_HISTORY_COLUMNS,
                  loss_history_rows(self.history))
        write_csv(self.output_dir / "steps.csv", STEP_COLUMNS, self.step_rows)


class ContainerSimulation(FluidSimulation):
    """Fluid in the closed unit container (static pressure and sloshing)."""

    def __init__(self, config: RunConfig, particles: ParticleSet,
                 progress: Optional[Progress] = None):
        super().__init__(config, particles, progress)
        geometry = config.geometry
        self._projection = distance_functions(geometry.width, geometry.height)
        self.walls = box_walls(geometry.width)

    def projection(self) -> BoundaryProjection:
        return self._projection


def hydrostatic_start(particles: ParticleSet, config: RunConfig) -> ParticleSet:
    """Initial pressures rho g (eta(x) - y) below the initial free surface."""
    g = config.geometry
    surface = surface_elevation(particles.positions[:, 0], g.width, g.height, g.amplitude)
    pressure = config.fluid.rho * config.fluid.gravity * (surface - particles.positions[:, 1])
    return particles.with_state(particles.positions, particles.velocities, pressure)
