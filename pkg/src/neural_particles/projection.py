"""
Velocity boundary projection with analytic distance functions.

Raw network velocities are multiplied component-wise by distance functions
that vanish on the walls, so wall-normal velocities are zero by
construction. The boundary extension is zero in every scenario.
"""

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .autodiff import Dual
from .constants import EMOJI

Profile = Callable[[np.ndarray], np.ndarray]

OUTSIDE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class BoundaryProjection:
    """
    Distance functions D_vx(x), D_vy(y) with their derivatives on [0, w] x [0, h].
    """
    dx: Profile
    ddx: Profile
    dy: Profile
    ddy: Profile
    width: float
    height: float
    kind: str = "container"

    def multipliers(self, positions: np.ndarray) -> Tuple[Dual, Dual]:
        """
        Distance functions at the particle positions as Duals whose tangents
        are the derivatives with respect to (x_n, y_n); each has shape (N, 1).
        """
        x = positions[:, 0:1]
        y = positions[:, 1:2]
        zeros = np.zeros_like(x)
        d_x = Dual(self.dx(x), [self.ddx(x), zeros])
        d_y = Dual(self.dy(y), [zeros, self.ddy(y)])
        return d_x, d_y


def distance_functions(w: float, h: float) -> BoundaryProjection:
    """
    Closed container: D_vx = -4x^2/w^2 + 4x/w (zero at both side walls),
    D_vy = y/h (zero at the bottom).
    """
    if not (w > 0 and h > 0):
        raise ValueError(f"Domain extents must be positive, got w={w}, h={h}")
    return BoundaryProjection(
        dx=lambda x: -4.0 * x * x / (w * w) + 4.0 * x / w,
        ddx=lambda x: -8.0 * x / (w * w) + 4.0 / w,
        dy=lambda y: y / h,
        ddy=lambda y: np.full_like(y, 1.0 / h),
        width=w, height=h, kind="container",
    )


def linear_projection(w: float, h: float) -> BoundaryProjection:
    """Dam break: D_vx = x/w (zero at the left wall), D_vy = y/h."""
    if not (w > 0 and h > 0):
        raise ValueError(f"Domain extents must be positive, got w={w}, h={h}")
    return BoundaryProjection(
        dx=lambda x: x / w,
        ddx=lambda x: np.full_like(x, 1.0 / w),
        dy=lambda y: y / h,
        ddy=lambda y: np.full_like(y, 1.0 / h),
        width=w, height=h, kind="linear",
    )


def identity_projection() -> BoundaryProjection:
    """D = 1 everywhere; used when wall conditions are penalized instead."""
    return BoundaryProjection(
        dx=np.ones_like, ddx=np.zeros_like, dy=np.ones_like, ddy=np.zeros_like,
        width=np.inf, height=np.inf, kind="identity",
    )


def outside_count(positions: np.ndarray, projection: BoundaryProjection,
                  tol: float = OUTSIDE_TOLERANCE) -> int:
    x, y = positions[:, 0], positions[:, 1]
    # Only the walls the projection enforces bound the domain
    outside = (x < -tol) | (y < -tol)
    if projection.kind == "container":
        outside |= x > projection.width + tol
    return int(np.count_nonzero(outside))


def project_velocity(raw_vx, raw_vy, positions: np.ndarray,
                     projection: BoundaryProjection, warn: bool = True):
    """
    Apply the projection to raw velocity components.

    ``raw_vx``/``raw_vy`` are Duals (value and input derivatives, shape
    (N, k)) or plain arrays; the product rule is carried by the Dual
    multiplication, so the tangents of the result are
    D' * v_raw + D * dv_raw/dx_n.
    """
    if warn:
        n_out = outside_count(positions, projection)
        if n_out:
            print(f"  {EMOJI['warning']}  {n_out} particle(s) outside the projection domain")
    d_x, d_y = projection.multipliers(positions)
    if isinstance(raw_vx, Dual):
        return d_x * raw_vx, d_y * raw_vy
    return d_x.value * np.asarray(raw_vx), d_y.value * np.asarray(raw_vy)
