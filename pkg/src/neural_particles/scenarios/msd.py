"""
Mass-spring-damper oscillator integrated with the IRK network.

A single-input network maps the displacement q_n to the velocity stages
and the final velocity; stage displacements follow from the position
update and the accelerations from the equation of motion

    m q'' + d q' + k q = 0

The loss is the squared mismatch of the rearranged velocity estimates
with the known velocity, exactly as for the fluid, without spatial
derivatives.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .. import autodiff as ad
from ..config import MsdConfig, RunConfig
from ..constants import LOSS_HISTORY_COLUMNS, TRAJECTORY_COLUMNS
from ..file_io import write_csv
from ..irk import ButcherTableau, gauss_legendre, position_update, velocity_estimates
from ..network import (
    NetworkLayout,
    NetworkParams,
    flatten,
    forward,
    forward_layers,
    init_params,
    save_checkpoint,
    unflatten,
)
from ..optim import LossRecord, train
from ..utils import Progress
from .fluid import RunStats, ScenarioResult, loss_history_rows


@dataclass(frozen=True)
class MsdProblem:
    """
    Attributes:
        mass, stiffness, damping: m, k, d
        amplitude: Initial displacement q^
        velocity: Initial velocity (None: the analytic -q^ D omega0)
    """
    mass: float = 1.0
    stiffness: float = 1.0
    damping: float = 0.1
    amplitude: float = 1.0
    velocity: Optional[float] = None

    @classmethod
    def from_config(cls, config: MsdConfig) -> "MsdProblem":
        return cls(config.mass, config.stiffness, config.damping, config.amplitude, config.velocity)

    @property
    def omega0(self) -> float:
        return math.sqrt(self.stiffness / self.mass)

    @property
    def damping_ratio(self) -> float:
        """D = d / (2 sqrt(k m)); infinite for a damped system without spring."""
        if self.damping == 0:
            return 0.0
        if self.stiffness == 0:
            return math.inf
        return self.damping / (2.0 * math.sqrt(self.stiffness * self.mass))

    @property
    def initial_velocity(self) -> float:
        if self.velocity is not None:
            return self.velocity
        if self.damping_ratio >= 1:
            return 0.0
        return -self.amplitude * self.damping_ratio * self.omega0

    def acceleration(self, q, qdot):
        """q'' = -(d/m) q' - (k/m) q for arrays or tape Variables."""
        return ad.sub(ad.mul(-self.damping / self.mass, qdot), ad.mul(self.stiffness / self.mass, q))


def msd_analytic(problem: MsdProblem, t):
    """
    Under-critically damped solution

        q(t) = e^(-D w0 t) (q^ cos(wd t) + (v0 + D w0 q^) / wd sin(wd t)),  wd = w0 sqrt(1 - D^2)

    which reduces to q^ e^(-D w0 t) cos(wd t) for the default initial velocity.

    Raises:
        ValueError: D >= 1
    """
    D = problem.damping_ratio
    if D >= 1:
        raise ValueError(f"The closed-form solution needs D < 1, got D = {D}")
    t = np.asarray(t, dtype=float)
    w0 = problem.omega0
    wd = w0 * math.sqrt(1.0 - D * D)
    q0, v0 = problem.amplitude, problem.initial_velocity
    coefficient = v0 + D * w0 * q0
    if wd == 0:
        # k = 0 and d = 0: uniform motion
        return q0 + v0 * t
    return np.exp(-D * w0 * t) * (q0 * np.cos(wd * t) + coefficient / wd * np.sin(wd * t))


class MsdStep:
    """Loss oracle of one MSD time step over the flat parameter vector."""

    def __init__(self, problem: MsdProblem, tableau: ButcherTableau, template: NetworkParams,
                 q_n: float, v_n: float, dt: float):
        self.problem = problem
        self.tableau = tableau
        self.template = template
        self.q_n = np.array([q_n])
        self.v_n = np.array([v_n])
        self.dt = dt
        self.s = tableau.s

    def residuals(self, layers):
        out = forward_layers(layers, self.q_n[:, None])
        v_stages = ad.getitem(out, (slice(None), slice(0, self.s)))
        v_next = ad.getitem(out, (slice(None), self.s))
        q_stages, _ = position_update(self.tableau, self.q_n, v_stages, self.dt)
        accel = self.problem.acceleration(q_stages, v_stages)
        est_stages, est_next = velocity_estimates(self.tableau, self.v_n, v_stages, v_next, accel, self.dt)
        return ad.sub(est_stages, self.v_n[:, None]), ad.sub(est_next, self.v_n)

    def __call__(self, theta: np.ndarray):
        params = unflatten(theta, self.template)

        def loss(tape, variables):
            layers = [(variables[i], variables[i + 1]) for i in range(0, len(variables), 2)]
            stages, final = self.residuals(layers)
            return ad.add(ad.reduce_sum(ad.mul(stages, stages)), ad.reduce_sum(ad.mul(final, final)))

        value, grads = ad.nested_grad(loss, params.arrays())
        return value, np.concatenate([g.ravel() for g in grads]), {"sse_v": value}

    def advance(self, params: NetworkParams) -> Tuple[np.ndarray, np.ndarray, float, float]:
        """(stage q, stage q', q_{n+1}, q'_{n+1}) of trained parameters."""
        out = forward(params, self.q_n[:, None])[0]
        v_stages, v_next = out[:self.s], float(out[self.s])
        q_stages, q_next = position_update(self.tableau, self.q_n, v_stages[None, :], self.dt)
        return np.asarray(q_stages)[0], v_stages, float(np.asarray(q_next)[0]), v_next


def run_msd(config: RunConfig, progress: Optional[Progress] = None) -> ScenarioResult:
    """
    Integrate the oscillator over ``config.steps`` steps of size ``config.dt``.

    Writes trajectory.csv (step and stage points with the analytic
    reference) and loss_history.csv.
    """
    progress = progress or Progress(config.show_progress)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    problem = MsdProblem.from_config(config.msd)
    layout = NetworkLayout.ode(config.network.layout)
    tableau = gauss_legendre(layout.stages)
    params = init_params(layout, config.seed)
    analytic = problem.damping_ratio < 1
    if not analytic:
        progress.warn(f"D = {problem.damping_ratio:.3g} >= 1: no closed-form reference, errors not reported")

    def reference(t):
        return float(msd_analytic(problem, t)) if analytic else float("nan")

    progress.say(f"msd: layout {list(layout.sizes)}, s={tableau.s}, dt={config.dt}, "
                 f"{config.steps} steps, D={problem.damping_ratio:.4g}", icon="rocket")

    q, v = problem.amplitude, problem.initial_velocity
    rows: List[tuple] = [(0.0, "step", 0, q, v, reference(0.0), abs(q - reference(0.0)))]
    history: List[LossRecord] = []
    stats = RunStats()
    final_loss = float("nan")
    step_errors, stage_errors = [0.0 if analytic else float("nan")], []

    try:
        for n in range(config.steps):
            step = MsdStep(problem, tableau, params, q, v, config.dt)
            result = train(step, flatten(params), config.training, time_step=n,
                           adam_iters=config.training.adam_iters_for(n))
            params = unflatten(result.params, params)
            history.extend(result.history)

            t_n = n * config.dt
            q_stages, v_stages, q, v = step.advance(params)
            for i in range(tableau.s):
                t_i = t_n + float(tableau.c[i]) * config.dt
                error = abs(q_stages[i] - reference(t_i))
                stage_errors.append(error)
                rows.append((t_i, "stage", n, q_stages[i], v_stages[i], reference(t_i), error))
            t = (n + 1) * config.dt
            error = abs(q - reference(t))
            step_errors.append(error)
            rows.append((t, "step", n + 1, q, v, reference(t), error))

            iterations = result.adam_iterations + result.lbfgs_iterations
            stats.steps += 1
            stats.optimizer_iterations += iterations
            stats.loss_evaluations += result.evaluations
            final_loss = result.loss
            progress.step(n, config.steps, t, result.loss, iterations, result.reason)
            if config.checkpoint:
                save_checkpoint(params, out_dir / "checkpoints" / f"params_{n + 1:05d}.txt")
    finally:
        write_csv(out_dir / "trajectory.csv", TRAJECTORY_COLUMNS, rows)
        write_csv(out_dir / "loss_history.csv", LOSS_HISTORY_COLUMNS, loss_history_rows(history))

    metrics = {
        "max_error_steps": max(step_errors),
        "max_error_stages": max(stage_errors, default=float("nan")),
        "relative_max_error": max(step_errors) / abs(problem.amplitude) if problem.amplitude else float("nan"),
        "damping_ratio": problem.damping_ratio,
        "final_q": q,
    }
    return ScenarioResult(
        scenario=config.scenario, final_loss=final_loss, steps_completed=stats.steps,
        stats=stats, layout=list(layout.sizes), stages=tableau.s, metrics=metrics, particles=1,
    )
