"""
Updated-Lagrangian physics of one time step.

For every particle the network predicts velocity stages, the final
velocity and pressure stages as functions of the position x_n. Spatial
derivatives with respect to x_n come from Dual numbers; the incremental
deformation gradient pushes them forward to the stage configurations:

    dF^j    = 1 + dt * sum_i a_ji dFdot^i         dFdot^i = d v^i / d x_n
    div v^i = tr(dFdot^i . (dF^i)^-1)
    grad p^i = d p^i / d x_n . (dF^i)^-1

All arithmetic goes through the autodiff primitives, so the same code runs
on plain arrays (evaluation) and on tape Variables (training).
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import autodiff as ad
from .autodiff import Dual, Tape
from .config import FluidProperties, LossWeights
from .contact import ContactSpec, contact_force
from .irk import ButcherTableau, position_update, velocity_estimates
from .network import NetworkLayout, NetworkParams, OutputSchema, forward_dual, unflatten
from .particles import ParticleSet
from .projection import BoundaryProjection, identity_projection, project_velocity


class StepRejectedError(RuntimeError):
    """The trained step folds the particle configuration (det dF <= 0)."""

    def __init__(self, time_step: int, min_det: float, dt: float):
        self.time_step = time_step
        self.min_det = min_det
        self.dt = dt
        super().__init__(
            f"Step {time_step} rejected: min det(dF) = {min_det:.3e} <= 0. "
            f"The time step dt={dt} is too large for this flow; reduce dt."
        )


class SingularDeformationError(ZeroDivisionError):
    """det dF is exactly zero; the inverse does not exist."""


@dataclass
class Matrix2:
    """A field of 2x2 matrices stored component-wise (arrays or Variables)."""
    xx: object
    xy: object
    yx: object
    yy: object

    def det(self):
        return ad.sub(ad.mul(self.xx, self.yy), ad.mul(self.xy, self.yx))


@dataclass
class Kinematics:
    """
    Rates and incremental deformation gradients; stage fields have shape
    (N, s), final fields (N,).
    """
    rate: Matrix2
    grad: Matrix2
    rate_next: Matrix2
    grad_next: Matrix2

    def min_det(self) -> float:
        dets = [ad.value_of(self.grad.det()), ad.value_of(self.grad_next.det())]
        return float(min(np.min(d) for d in dets))


@dataclass
class LossBreakdown:
    """Weighted loss terms; total is their sum."""
    sse_v: float
    sse_div: float
    sse_pbar: float
    sse_vbar: float = 0.0
    total: float = field(init=False)

    def __post_init__(self):
        self.total = self.sse_v + self.sse_div + self.sse_pbar + self.sse_vbar

    def as_dict(self) -> Dict[str, float]:
        return {"sse_v": self.sse_v, "sse_div": self.sse_div,
                "sse_pbar": self.sse_pbar, "sse_vbar": self.sse_vbar}


@dataclass
class StageState:
    """
    Per-particle outputs of a network evaluation (plain arrays).

    v_stages (N, 2, s), v_next (N, 2), p_stages (N, s); derived x_stages
    (N, 2, s), x_next (N, 2), p_next (N,) = p_stages . b.
    """
    v_stages: np.ndarray
    v_next: np.ndarray
    p_stages: np.ndarray
    x_stages: np.ndarray
    x_next: np.ndarray
    p_next: np.ndarray
    div_stages: np.ndarray
    div_next: np.ndarray
    min_det: float


# ---------------------------------------------------------------------------
# Kinematic building blocks
# ---------------------------------------------------------------------------

def stage_kinematics(tableau: ButcherTableau, vx: Dual, vy: Dual,
                     vx_next: Dual, vy_next: Dual, dt: float) -> Kinematics:
    """
    Rates from the input derivatives of the (projected) velocities and the
    deformation gradients from their IRK integration.
    """
    rate = Matrix2(vx.tangents[0], vx.tangents[1], vy.tangents[0], vy.tangents[1])
    rate_next = Matrix2(vx_next.tangents[0], vx_next.tangents[1],
                        vy_next.tangents[0], vy_next.tangents[1])
    a_t = tableau.a.T

    def integrate(component, identity: float, weights):
        return ad.add(identity, ad.mul(dt, ad.matmul(component, weights)))

    grad = Matrix2(integrate(rate.xx, 1.0, a_t), integrate(rate.xy, 0.0, a_t),
                   integrate(rate.yx, 0.0, a_t), integrate(rate.yy, 1.0, a_t))
    grad_next = Matrix2(integrate(rate.xx, 1.0, tableau.b), integrate(rate.xy, 0.0, tableau.b),
                        integrate(rate.yx, 0.0, tableau.b), integrate(rate.yy, 1.0, tableau.b))
    return Kinematics(rate=rate, grad=grad, rate_next=rate_next, grad_next=grad_next)


def _checked_det(grad: Matrix2):
    det = grad.det()
    if np.any(ad.value_of(det) == 0.0):
        raise SingularDeformationError("Incremental deformation gradient is singular")
    return det


def divergence(rate: Matrix2, grad: Matrix2):
    """tr(rate . grad^-1) component-wise."""
    det = _checked_det(grad)
    numerator = ad.add(
        ad.sub(ad.mul(rate.xx, grad.yy), ad.mul(rate.xy, grad.yx)),
        ad.sub(ad.mul(rate.yy, grad.xx), ad.mul(rate.yx, grad.xy)),
    )
    return ad.div(numerator, det)


def pressure_gradient(dp_dx, dp_dy, grad: Matrix2):
    """Reference pressure gradient right-multiplied by grad^-1."""
    det = _checked_det(grad)
    gx = ad.div(ad.sub(ad.mul(dp_dx, grad.yy), ad.mul(dp_dy, grad.yx)), det)
    gy = ad.div(ad.sub(ad.mul(dp_dy, grad.xx), ad.mul(dp_dx, grad.xy)), det)
    return gx, gy


def stage_acceleration(grad_p: Tuple, fluid: FluidProperties, contact: Tuple = (0.0, 0.0)):
    """a = -grad p / rho + b + f_c."""
    bx, by = fluid.body_accel
    ax = ad.add(ad.add(ad.mul(-1.0 / fluid.rho, grad_p[0]), bx), contact[0])
    ay = ad.add(ad.add(ad.mul(-1.0 / fluid.rho, grad_p[1]), by), contact[1])
    return ax, ay


# ---------------------------------------------------------------------------
# Loss assembly
# ---------------------------------------------------------------------------

@dataclass
class StepFields:
    """Everything computed for one parameter set; entries may be Variables."""
    vx: Dual
    vy: Dual
    vx_next: Dual
    vy_next: Dual
    p: Dual
    kin: Kinematics
    x_stages: Tuple
    x_next: Tuple
    div_stages: object
    div_next: object
    est_x: Tuple
    est_y: Tuple


def _columns(out: Dual, cols: Sequence[int]) -> Dual:
    return out[(slice(None), np.asarray(cols))]


def evaluate_fields(layers, particles: ParticleSet, schema: OutputSchema,
                    tableau: ButcherTableau, projection: BoundaryProjection,
                    fluid: FluidProperties, dt: float,
                    contact: Optional[ContactSpec] = None,
                    input_scale: float = 1.0, warn: bool = False) -> StepFields:
    """Network outputs, kinematics, accelerations and velocity estimates."""
    s = schema.stages
    positions = particles.positions
    n = len(particles)
    seed = Dual(positions * input_scale,
                [np.tile([input_scale, 0.0], (n, 1)), np.tile([0.0, input_scale], (n, 1))])
    out = forward_dual(layers, seed)

    raw_vx = _columns(out, [schema.velocity_column(i, 0) for i in range(s)])
    raw_vy = _columns(out, [schema.velocity_column(i, 1) for i in range(s)])
    raw_vx_next = _columns(out, [schema.next_column(0)])
    raw_vy_next = _columns(out, [schema.next_column(1)])
    p = _columns(out, [schema.pressure_column(i) for i in range(s)])

    vx, vy = project_velocity(raw_vx, raw_vy, positions, projection, warn=warn)
    vx_next, vy_next = project_velocity(raw_vx_next, raw_vy_next, positions, projection, warn=False)
    vx_next, vy_next = vx_next[(slice(None), 0)], vy_next[(slice(None), 0)]

    kin = stage_kinematics(tableau, vx, vy, vx_next, vy_next, dt)
    div_stages = divergence(kin.rate, kin.grad)
    div_next = divergence(kin.rate_next, kin.grad_next)

    xs, x_next = position_update(tableau, positions[:, 0], vx.value, dt)
    ys, y_next = position_update(tableau, positions[:, 1], vy.value, dt)

    gpx, gpy = pressure_gradient(p.tangents[0], p.tangents[1], kin.grad)
    force = contact_force(xs, ys, contact) if contact is not None else (0.0, 0.0)
    ax, ay = stage_acceleration((gpx, gpy), fluid, force)

    v_n = particles.velocities
    est_x = velocity_estimates(tableau, v_n[:, 0], vx.value, vx_next.value, ax, dt)
    est_y = velocity_estimates(tableau, v_n[:, 1], vy.value, vy_next.value, ay, dt)
    return StepFields(vx, vy, vx_next, vy_next, p, kin, (xs, ys), (x_next, y_next),
                      div_stages, div_next, est_x, est_y)


def _sse(x):
    return ad.reduce_sum(ad.mul(x, x))


def assemble_loss(fields: StepFields, particles: ParticleSet,
                  weights: Optional[LossWeights] = None, soft_walls: bool = False):
    """
    Loss terms for one step.

    Returns:
        (total, terms) where ``terms`` maps names to the weighted
        (possibly recorded) term values.
    """
    weights = weights or LossWeights()
    v_n = particles.velocities

    sse_v = ad.add(
        ad.add(_sse(ad.sub(fields.est_x[0], v_n[:, 0:1])), _sse(ad.sub(fields.est_x[1], v_n[:, 0]))),
        ad.add(_sse(ad.sub(fields.est_y[0], v_n[:, 1:2])), _sse(ad.sub(fields.est_y[1], v_n[:, 1]))),
    )
    sse_div = ad.add(_sse(fields.div_stages), _sse(fields.div_next))

    surface = np.flatnonzero(particles.surface_mask)
    if surface.size:
        sse_pbar = _sse(ad.getitem(fields.p.value, (surface, slice(None))))
    else:
        sse_pbar = 0.0

    terms = {
        "sse_v": ad.mul(weights.velocity, sse_v),
        "sse_div": ad.mul(weights.divergence, sse_div),
        "sse_pbar": ad.mul(weights.pressure_bc, sse_pbar),
        "sse_vbar": 0.0,
    }

    if soft_walls:
        walls = np.flatnonzero(particles.wall_mask)
        if walls.size:
            nx = particles.normals[walls, 0]
            ny = particles.normals[walls, 1]
            rows = (walls, slice(None))
            normal_stages = ad.add(ad.mul(ad.getitem(fields.vx.value, rows), nx[:, None]),
                                   ad.mul(ad.getitem(fields.vy.value, rows), ny[:, None]))
            normal_next = ad.add(ad.mul(ad.getitem(fields.vx_next.value, walls), nx),
                                 ad.mul(ad.getitem(fields.vy_next.value, walls), ny))
            terms["sse_vbar"] = ad.mul(weights.velocity_bc,
                                       ad.add(_sse(normal_stages), _sse(normal_next)))

    total = ad.add(ad.add(terms["sse_v"], terms["sse_div"]),
                   ad.add(terms["sse_pbar"], terms["sse_vbar"]))
    return total, terms


def breakdown_of(terms: Dict[str, object]) -> LossBreakdown:
    values = {k: float(ad.value_of(v)) for k, v in terms.items()}
    return LossBreakdown(**values)


# ---------------------------------------------------------------------------
# Step problem (loss oracle)
# ---------------------------------------------------------------------------

class StepProblem:
    """
    Loss oracle of one time step over the flat parameter vector.

    Calling the problem returns (loss, gradient, LossBreakdown) with the
    gradient from forward-over-reverse differentiation.
    """

    def __init__(self, particles: ParticleSet, layout: NetworkLayout, template: NetworkParams,
                 tableau: ButcherTableau, projection: Optional[BoundaryProjection],
                 fluid: FluidProperties, dt: float,
                 contact: Optional[ContactSpec] = None,
                 weights: Optional[LossWeights] = None,
                 soft_walls: bool = False, input_scale: float = 1.0):
        if layout.stages != tableau.s:
            raise ValueError(f"Network has {layout.stages} stages, tableau has {tableau.s}")
        self.particles = particles
        self.schema = layout.schema
        self.template = template
        self.tableau = tableau
        self.projection = identity_projection() if soft_walls or projection is None else projection
        self.fluid = fluid
        self.dt = dt
        self.contact = contact
        self.weights = weights or LossWeights()
        self.soft_walls = soft_walls
        self.input_scale = input_scale
        self.evaluations = 0

    def _fields(self, layers, warn: bool = False) -> StepFields:
        return evaluate_fields(layers, self.particles, self.schema, self.tableau,
                               self.projection, self.fluid, self.dt, self.contact,
                               self.input_scale, warn=warn)

    def __call__(self, theta: np.ndarray):
        self.evaluations += 1
        params = unflatten(theta, self.template)
        recorded = {}

        def loss(tape: Tape, variables: List):
            layers = [(variables[i], variables[i + 1]) for i in range(0, len(variables), 2)]
            total, recorded["terms"] = assemble_loss(self._fields(layers), self.particles,
                                                     self.weights, self.soft_walls)
            return total

        value, grads = ad.nested_grad(loss, params.arrays())
        grad = np.concatenate([g.ravel() for g in grads])
        return value, grad, breakdown_of(recorded["terms"])

    def loss_breakdown(self, params: NetworkParams) -> LossBreakdown:
        _, terms = assemble_loss(self._fields(params.layers), self.particles,
                                 self.weights, self.soft_walls)
        return breakdown_of(terms)

    def stage_state(self, params: NetworkParams, warn: bool = False) -> StageState:
        f = self._fields(params.layers, warn=warn)
        v_stages = np.stack([ad.value_of(f.vx.value), ad.value_of(f.vy.value)], axis=1)
        v_next = np.stack([ad.value_of(f.vx_next.value), ad.value_of(f.vy_next.value)], axis=1)
        p_stages = np.array(ad.value_of(f.p.value))
        x_stages = np.stack([ad.value_of(f.x_stages[0]), ad.value_of(f.x_stages[1])], axis=1)
        x_next = np.stack([ad.value_of(f.x_next[0]), ad.value_of(f.x_next[1])], axis=1)
        return StageState(
            v_stages=v_stages, v_next=v_next, p_stages=p_stages,
            x_stages=x_stages, x_next=x_next, p_next=p_stages @ self.tableau.b,
            div_stages=np.array(ad.value_of(f.div_stages)),
            div_next=np.array(ad.value_of(f.div_next)),
            min_det=f.kin.min_det(),
        )


def check_step(state: StageState, time_step: int, dt: float) -> None:
    """
    Raises:
        StepRejectedError: some stage deformation gradient has det <= 0
    """
    if not state.min_det > 0:
        raise StepRejectedError(time_step, state.min_det, dt)


def advance_step(particles: ParticleSet, state: StageState) -> ParticleSet:
    """Install x_{n+1}, v_{n+1} and p_{n+1}; tags and normals are kept."""
    return particles.with_state(state.x_next, state.v_next, state.p_next)
