"""
Particle sets: seeding, boundary tags, slip relaxation and domain extents.
"""

from dataclasses import dataclass, replace
from enum import IntEnum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import GeometryConfig, ParticleConfig

MIN_PARTICLES = 4


class Tag(IntEnum):
    INTERIOR = 0
    WALL_LEFT = 1
    WALL_RIGHT = 2
    WALL_BOTTOM = 3
    FREE_SURFACE = 4


WALL_TAGS = (Tag.WALL_LEFT, Tag.WALL_RIGHT, Tag.WALL_BOTTOM)

WALL_NORMALS = {
    Tag.WALL_LEFT: (-1.0, 0.0),
    Tag.WALL_RIGHT: (1.0, 0.0),
    Tag.WALL_BOTTOM: (0.0, -1.0),
}


@dataclass
class ParticleSet:
    """
    Collocation points at t_n.

    Attributes:
        ids: Stable particle identifiers
        positions, velocities: (N, 2)
        tags: Boundary class per particle (Tag values)
        normals: Outward unit normals of boundary particles, zero inside
        pressure: Last pressure p_n per particle (diagnostics only)
    """
    ids: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    tags: np.ndarray
    normals: np.ndarray
    pressure: np.ndarray

    def __post_init__(self):
        n = len(self.ids)
        for name in ("positions", "velocities", "normals"):
            if getattr(self, name).shape != (n, 2):
                raise ValueError(f"{name} must have shape ({n}, 2)")
        if self.tags.shape != (n,) or self.pressure.shape != (n,):
            raise ValueError("tags and pressure need one entry per particle")

    def __len__(self) -> int:
        return len(self.ids)

    def mask(self, *tags: Tag) -> np.ndarray:
        return np.isin(self.tags, [int(t) for t in tags])

    def indices(self, *tags: Tag) -> np.ndarray:
        return np.flatnonzero(self.mask(*tags))

    @property
    def wall_mask(self) -> np.ndarray:
        return self.mask(*WALL_TAGS)

    @property
    def surface_mask(self) -> np.ndarray:
        return self.mask(Tag.FREE_SURFACE)

    def copy(self) -> "ParticleSet":
        return ParticleSet(self.ids.copy(), self.positions.copy(), self.velocities.copy(),
                           self.tags.copy(), self.normals.copy(), self.pressure.copy())

    def with_state(self, positions: np.ndarray, velocities: np.ndarray,
                   pressure: np.ndarray) -> "ParticleSet":
        return replace(self, positions=np.array(positions, dtype=float),
                       velocities=np.array(velocities, dtype=float),
                       pressure=np.array(pressure, dtype=float),
                       ids=self.ids.copy(), tags=self.tags.copy(), normals=self.normals.copy())


def _build(positions: np.ndarray, tags: np.ndarray, normals: np.ndarray) -> ParticleSet:
    n = len(positions)
    if n < MIN_PARTICLES:
        raise ValueError(f"At least {MIN_PARTICLES} particles are required, got {n}")
    return ParticleSet(ids=np.arange(n), positions=np.asarray(positions, dtype=float),
                       velocities=np.zeros((n, 2)), tags=np.asarray(tags, dtype=int),
                       normals=np.asarray(normals, dtype=float), pressure=np.zeros(n))


def surface_elevation(x, w: float, h: float, a: float):
    """eta(x) = h - a * sin(pi/w * (x - w/2))."""
    return h - a * np.sin(np.pi / w * (np.asarray(x, dtype=float) - w / 2.0))


def _surface_normals(x: np.ndarray, w: float, a: float) -> np.ndarray:
    slope = -a * np.pi / w * np.cos(np.pi / w * (x - w / 2.0))
    n = np.stack([-slope, np.ones_like(x)], axis=1)
    return n / np.linalg.norm(n, axis=1, keepdims=True)


def _grid_tags(i: np.ndarray, j: np.ndarray, nx: int, ny: int, right_wall: bool) -> np.ndarray:
    """Tags on an index grid; priority bottom > side > surface."""
    tags = np.full(i.shape, int(Tag.INTERIOR))
    tags[j == ny - 1] = Tag.FREE_SURFACE
    if right_wall:
        tags[i == nx - 1] = Tag.WALL_RIGHT
    else:
        tags[i == nx - 1] = Tag.FREE_SURFACE
    tags[i == 0] = Tag.WALL_LEFT
    tags[j == 0] = Tag.WALL_BOTTOM
    return tags


def _normals_for(tags: np.ndarray, surface_normals: Optional[np.ndarray] = None,
                 front_normal: Optional[Tuple[float, float]] = None,
                 front_mask: Optional[np.ndarray] = None) -> np.ndarray:
    normals = np.zeros((len(tags), 2))
    for tag, n in WALL_NORMALS.items():
        normals[tags == tag] = n
    surface = tags == Tag.FREE_SURFACE
    if surface_normals is not None:
        normals[surface] = surface_normals[surface]
    else:
        normals[surface] = (0.0, 1.0)
    if front_mask is not None:
        normals[surface & front_mask] = front_normal
    return normals


def seed_container(geometry: GeometryConfig, particles: ParticleConfig, seed: int) -> ParticleSet:
    """
    Fluid in a closed container [0, w] x [0, eta(x)].

    equispaced: tensor grid; jittered: grid with interior points perturbed
    by up to ``jitter`` times the spacing; random: ``n_boundary`` points on
    the walls, as many on the free surface and ``n_interior`` points
    inside, uniformly distributed.
    Heights are scaled so the top row follows the surface elevation.
    """
    w, h, a = geometry.width, geometry.height, geometry.amplitude
    rng = np.random.default_rng(seed)

    if particles.distribution == "random":
        return _seed_random_container(w, h, a, particles.n_boundary, particles.n_interior, rng)

    nx, ny = particles.nx, particles.ny
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    i, j = i.ravel(), j.ravel()
    xs = np.linspace(0.0, w, nx)[i]
    ys = np.linspace(0.0, h, ny)[j]
    tags = _grid_tags(i, j, nx, ny, right_wall=True)

    if particles.distribution == "jittered":
        inside = tags == Tag.INTERIOR
        spacing_x, spacing_y = w / (nx - 1), h / (ny - 1)
        xs = xs.copy()
        ys = ys.copy()
        xs[inside] += rng.uniform(-1, 1, inside.sum()) * particles.jitter * spacing_x
        ys[inside] += rng.uniform(-1, 1, inside.sum()) * particles.jitter * spacing_y

    ys = ys * surface_elevation(xs, w, h, a) / h
    positions = np.stack([xs, ys], axis=1)
    normals = _normals_for(tags, surface_normals=_surface_normals(xs, w, a))
    return _build(positions, tags, normals)


def _seed_random_container(w: float, h: float, a: float, n_boundary: int, n_interior: int,
                           rng: np.random.Generator) -> ParticleSet:
    """
    ``n_boundary`` points on the wall contour (left, bottom, right), another
    ``n_boundary`` on the free surface and ``n_interior`` inside.

    The contour always includes both top corners, so the left-wall gauge
    starts exactly at eta(0).
    """
    left_h = float(surface_elevation(0.0, w, h, a))
    right_h = float(surface_elevation(w, w, h, a))
    perimeter = left_h + w + right_h
    s = np.concatenate([[0.0], np.sort(rng.uniform(0.0, perimeter, n_boundary - 2)), [perimeter]])
    on_left = s < left_h
    on_right = s >= left_h + w
    wall_x = np.where(on_left, 0.0, np.where(on_right, w, s - left_h))
    wall_y = np.where(on_left, left_h - s, np.where(on_right, s - left_h - w, 0.0))
    wall_tags = np.select([on_left, on_right], [int(Tag.WALL_LEFT), int(Tag.WALL_RIGHT)],
                          default=int(Tag.WALL_BOTTOM))
    # Bottom corners belong to the bottom
    wall_tags[wall_y == 0.0] = Tag.WALL_BOTTOM

    surface_x = w * np.sort(rng.uniform(0.0, 1.0, n_boundary))

    interior = []
    top = h + abs(a)
    while len(interior) < n_interior:
        x, y = rng.uniform(0.0, w), rng.uniform(0.0, top)
        if 0.0 < y < surface_elevation(x, w, h, a) and 0.0 < x < w:
            interior.append((x, y))
    interior = np.array(interior, dtype=float).reshape(-1, 2)

    positions = np.concatenate([
        np.stack([wall_x, wall_y], axis=1),
        np.stack([surface_x, surface_elevation(surface_x, w, h, a)], axis=1),
        interior,
    ])
    tags = np.concatenate([
        wall_tags,
        np.full(n_boundary, int(Tag.FREE_SURFACE)),
        np.full(len(interior), int(Tag.INTERIOR)),
    ])
    normals = _normals_for(tags, surface_normals=_surface_normals(positions[:, 0], w, a))
    return _build(positions, tags, normals)


def seed_column(geometry: GeometryConfig, particles: ParticleConfig, seed: int) -> ParticleSet:
    """
    Dam-break water column L wide and 2L tall against the left wall.

    The right face and the top are free surface; there is no right wall.
    """
    L = geometry.length
    ppl = particles.particles_per_length
    nx, ny = ppl + 1, 2 * ppl + 1
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    i, j = i.ravel(), j.ravel()
    xs = np.linspace(0.0, L, nx)[i]
    ys = np.linspace(0.0, 2.0 * L, ny)[j]
    tags = _grid_tags(i, j, nx, ny, right_wall=False)

    if particles.distribution == "jittered":
        rng = np.random.default_rng(seed)
        inside = tags == Tag.INTERIOR
        spacing = L / ppl
        xs = xs.copy()
        ys = ys.copy()
        xs[inside] += rng.uniform(-1, 1, inside.sum()) * particles.jitter * spacing
        ys[inside] += rng.uniform(-1, 1, inside.sum()) * particles.jitter * spacing

    positions = np.stack([xs, ys], axis=1)
    normals = _normals_for(tags, front_normal=(1.0, 0.0), front_mask=(i == nx - 1))
    return _build(positions, tags, normals)


def initial_spacing(geometry: GeometryConfig, particles: ParticleConfig, column: bool) -> float:
    if column:
        return geometry.length / particles.particles_per_length
    return min(geometry.width / (particles.nx - 1), geometry.height / (particles.ny - 1))


# ---------------------------------------------------------------------------
# Dam-break bookkeeping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SlipCorner:
    """
    An edge where boundary class ``from_tag`` meets ``to_tag``.

    A ``from_tag`` particle within the threshold of ``point`` that moves
    along ``approach`` is shifted past the edge along ``exit`` by its
    distance to the edge and takes over the tag and normal of ``to_tag``.
    """
    point: Tuple[float, float]
    from_tag: Tag
    to_tag: Tag
    approach: Tuple[float, float]
    exit: Tuple[float, float]


def dambreak_corners(particles: ParticleSet) -> List[SlipCorner]:
    """The wall edge at the origin and the moving front edge on the bottom."""
    w, _ = refresh_extents(particles)
    return [
        SlipCorner((0.0, 0.0), Tag.WALL_LEFT, Tag.WALL_BOTTOM, (0.0, -1.0), (1.0, 0.0)),
        SlipCorner((w, 0.0), Tag.FREE_SURFACE, Tag.WALL_BOTTOM, (0.0, -1.0), (1.0, 0.0)),
    ]


def slip_relax(particles: ParticleSet, threshold: float,
               corners: Sequence[SlipCorner]) -> Tuple[ParticleSet, int]:
    """
    Move particles that reach an edge onto the adjacent wall.

    Returns:
        (updated particle set, number of reassigned particles)
    """
    if threshold <= 0 or not corners:
        return particles, 0
    out = particles.copy()
    moved = 0
    for corner in corners:
        point = np.asarray(corner.point)
        candidates = np.flatnonzero(out.tags == corner.from_tag)
        if candidates.size == 0:
            continue
        offsets = out.positions[candidates] - point
        distance = np.linalg.norm(offsets, axis=1)
        heading = out.velocities[candidates] @ np.asarray(corner.approach)
        hits = candidates[(distance < threshold) & (heading > 0)]
        for index in hits:
            d = float(np.linalg.norm(out.positions[index] - point))
            out.positions[index] = point + d * np.asarray(corner.exit)
            out.tags[index] = int(corner.to_tag)
            out.normals[index] = WALL_NORMALS.get(corner.to_tag, (0.0, 1.0))
            moved += 1
    return out, moved


def refresh_extents(particles: ParticleSet) -> Tuple[float, float]:
    """
    Fluid extents along the walls: w = max x of bottom particles,
    h = max y of left-wall particles.

    Raises:
        ValueError: a wall class is empty or an extent is not positive
    """
    bottom = particles.indices(Tag.WALL_BOTTOM)
    left = particles.indices(Tag.WALL_LEFT)
    if bottom.size == 0 or left.size == 0:
        raise ValueError("Cannot determine extents: bottom or left wall particle class is empty")
    w = float(np.max(particles.positions[bottom, 0]))
    h = float(np.max(particles.positions[left, 1]))
    if not (w > 0 and h > 0):
        raise ValueError(f"Degenerate fluid extents w={w}, h={h}")
    return w, h


def seed_particles(geometry: GeometryConfig, particles: ParticleConfig, seed: int,
                   column: bool = False) -> ParticleSet:
    """Dam-break column when ``column`` is set, otherwise the closed container."""
    if column:
        return seed_column(geometry, particles, seed)
    return seed_container(geometry, particles, seed)
