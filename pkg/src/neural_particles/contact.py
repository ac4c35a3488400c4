"""
Penalty contact against rigid wall planes.

A wall is a point on the plane and its outward normal n (pointing out of
the fluid domain). The signed gap g = (x - x_wall) . n is positive when a
particle has penetrated the wall. The force

    f_c = -penalty * g * a(g) * n,   a(g) = 0.5 * (1 + sign(g))

pushes a penetrating particle back along -n, i.e. into the fluid. The
activation a(g) is treated as piecewise constant when differentiating.
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from . import autodiff as ad


@dataclass(frozen=True)
class WallPlane:
    point: Tuple[float, float]
    normal: Tuple[float, float]

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        length = float(np.hypot(n[0], n[1]))
        if length == 0:
            raise ValueError("Wall normal must be non-zero")
        object.__setattr__(self, "normal", (float(n[0] / length), float(n[1] / length)))


@dataclass(frozen=True)
class ContactSpec:
    penalty: float
    walls: Tuple[WallPlane, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.penalty > 0:
            raise ValueError(f"Contact penalty must be positive, got {self.penalty}")
        object.__setattr__(self, "walls", tuple(self.walls))


def box_walls(width: float, left: bool = True, bottom: bool = True,
              right: bool = True) -> List[WallPlane]:
    """Walls of a tank whose left wall is x=0, bottom y=0 and right wall x=width."""
    walls = []
    if left:
        walls.append(WallPlane((0.0, 0.0), (-1.0, 0.0)))
    if bottom:
        walls.append(WallPlane((0.0, 0.0), (0.0, -1.0)))
    if right:
        walls.append(WallPlane((width, 0.0), (1.0, 0.0)))
    return walls


def gap(x, y, wall: WallPlane):
    """Signed gap of positions (arrays or tape Variables) to a wall."""
    (px, py), (nx, ny) = wall.point, wall.normal
    return ad.add(ad.mul(ad.sub(x, px), nx), ad.mul(ad.sub(y, py), ny))


def activation(g) -> np.ndarray:
    return 0.5 * (1.0 + np.sign(ad.value_of(g)))


def contact_force(x, y, spec: ContactSpec):
    """
    Summed contact force of all walls on positions (x, y).

    Returns:
        (f_x, f_y) with the shape of x; zero unless a particle penetrates.
    """
    fx = np.zeros_like(ad.value_of(x))
    fy = np.zeros_like(ad.value_of(x))
    for wall in spec.walls:
        g = gap(x, y, wall)
        a = activation(g)
        if not np.any(a):
            continue
        magnitude = ad.mul(-spec.penalty, ad.mul(g, a))
        fx = ad.add(fx, ad.mul(magnitude, wall.normal[0]))
        fy = ad.add(fy, ad.mul(magnitude, wall.normal[1]))
    return fx, fy


def max_penetration(positions: np.ndarray, walls: Sequence[WallPlane]) -> float:
    """Largest signed gap over all particles and walls (negative when all inside)."""
    if not walls:
        return -np.inf
    return max(float(np.max(gap(positions[:, 0], positions[:, 1], w))) for w in walls)
