"""
Tests for particle seeding, boundary tags, slip relaxation and extents.
"""
import sys
import unittest
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from neural_particles.config import GeometryConfig, ParticleConfig
from neural_particles.diagnostics import gauge_amplitude
from neural_particles.particles import (
    ParticleSet,
    Tag,
    dambreak_corners,
    initial_spacing,
    refresh_extents,
    seed_column,
    seed_container,
    seed_particles,
    slip_relax,
    surface_elevation,
)


def count(particles, tag):
    return int(np.count_nonzero(particles.tags == tag))


class TestContainerSeeding(unittest.TestCase):

    def test_equispaced_tags(self):
        particles = seed_container(GeometryConfig(), ParticleConfig(nx=4, ny=4), seed=0)
        self.assertEqual(len(particles), 16)
        self.assertEqual(count(particles, Tag.WALL_BOTTOM), 4)
        self.assertEqual(count(particles, Tag.WALL_LEFT), 3)
        self.assertEqual(count(particles, Tag.WALL_RIGHT), 3)
        self.assertEqual(count(particles, Tag.FREE_SURFACE), 2)
        self.assertEqual(count(particles, Tag.INTERIOR), 4)

    def test_corner_priority(self):
        particles = seed_container(GeometryConfig(), ParticleConfig(nx=3, ny=3), seed=0)
        at = {tuple(p): t for p, t in zip(particles.positions, particles.tags)}
        self.assertEqual(at[(0.0, 0.0)], Tag.WALL_BOTTOM)
        self.assertEqual(at[(1.0, 0.0)], Tag.WALL_BOTTOM)
        self.assertEqual(at[(0.0, 1.0)], Tag.WALL_LEFT)
        self.assertEqual(at[(1.0, 1.0)], Tag.WALL_RIGHT)

    def test_normals(self):
        particles = seed_container(GeometryConfig(), ParticleConfig(nx=4, ny=4), seed=0)
        np.testing.assert_array_equal(particles.normals[particles.indices(Tag.WALL_LEFT)], [[-1.0, 0.0]] * 3)
        np.testing.assert_array_equal(particles.normals[particles.indices(Tag.INTERIOR)], 0.0)
        np.testing.assert_allclose(particles.normals[particles.indices(Tag.FREE_SURFACE)], [[0.0, 1.0]] * 2)

    def test_surface_follows_elevation(self):
        geometry = GeometryConfig(width=1.0, height=1.0, amplitude=0.05)
        particles = seed_container(geometry, ParticleConfig(nx=5, ny=5), seed=0)
        left = particles.indices(Tag.WALL_LEFT)
        self.assertAlmostEqual(float(np.max(particles.positions[left, 1])), 1.05)
        surface = particles.indices(Tag.FREE_SURFACE)
        x = particles.positions[surface, 0]
        np.testing.assert_allclose(particles.positions[surface, 1], surface_elevation(x, 1.0, 1.0, 0.05))
        unit = np.linalg.norm(particles.normals[surface], axis=1)
        np.testing.assert_allclose(unit, 1.0)

    def test_jitter_moves_interior_only(self):
        config = ParticleConfig(nx=6, ny=6, distribution="jittered", jitter=0.3)
        grid = seed_container(GeometryConfig(), ParticleConfig(nx=6, ny=6), seed=0)
        jittered = seed_container(GeometryConfig(), config, seed=4)
        boundary = grid.tags != Tag.INTERIOR
        np.testing.assert_array_equal(jittered.positions[boundary], grid.positions[boundary])
        shift = np.abs(jittered.positions - grid.positions)[~boundary]
        self.assertTrue(np.all(shift <= 0.3 * 0.2 + 1e-12))
        self.assertGreater(float(np.max(shift)), 0.0)
        again = seed_container(GeometryConfig(), config, seed=4)
        np.testing.assert_array_equal(again.positions, jittered.positions)

    def test_random_distribution(self):
        config = ParticleConfig(distribution="random", n_boundary=10, n_interior=50)
        particles = seed_container(GeometryConfig(amplitude=0.1), config, seed=3)
        self.assertEqual(len(particles), 2 * 10 + 50)
        inside = particles.positions[particles.indices(Tag.INTERIOR)]
        self.assertTrue(np.all(inside[:, 1] < surface_elevation(inside[:, 0], 1.0, 1.0, 0.1)))
        self.assertTrue(np.all(particles.positions[particles.indices(Tag.WALL_RIGHT), 0] == 1.0))
        walls = particles.indices(Tag.WALL_LEFT, Tag.WALL_BOTTOM, Tag.WALL_RIGHT)
        self.assertEqual(walls.size, 10)
        self.assertEqual(particles.indices(Tag.FREE_SURFACE).size, 10)

    def test_random_default_count(self):
        particles = seed_container(GeometryConfig(amplitude=0.2), ParticleConfig(distribution="random"), seed=0)
        self.assertEqual(len(particles), 900)

    def test_random_gauge_starts_at_surface(self):
        geometry = GeometryConfig(amplitude=0.2)
        particles = seed_container(geometry, ParticleConfig(distribution="random", n_boundary=12,
                                                            n_interior=20), seed=5)
        self.assertAlmostEqual(gauge_amplitude(particles, geometry.height), 0.2, places=12)
        bottom = particles.positions[particles.indices(Tag.WALL_BOTTOM)]
        np.testing.assert_array_equal(bottom[:, 1], 0.0)

    def test_inconsistent_shapes(self):
        with self.assertRaises(ValueError):
            ParticleSet(np.arange(3), np.zeros((3, 2)), np.zeros((2, 2)), np.zeros(3, dtype=int),
                        np.zeros((3, 2)), np.zeros(3))


class TestColumnSeeding(unittest.TestCase):

    def setUp(self):
        self.geometry = GeometryConfig(length=0.5)
        self.config = ParticleConfig(particles_per_length=2)

    def test_column_layout(self):
        particles = seed_column(self.geometry, self.config, seed=0)
        self.assertEqual(len(particles), 3 * 5)
        self.assertEqual(count(particles, Tag.WALL_RIGHT), 0)
        self.assertAlmostEqual(float(np.max(particles.positions[:, 1])), 1.0)
        front = particles.positions[:, 0] == 0.5
        surface = particles.tags == Tag.FREE_SURFACE
        np.testing.assert_array_equal(particles.normals[front & surface], [[1.0, 0.0]] * 4)

    def test_extents(self):
        particles = seed_column(self.geometry, self.config, seed=0)
        w, h = refresh_extents(particles)
        self.assertAlmostEqual(w, 0.5)
        self.assertAlmostEqual(h, 1.0)

    def test_extents_need_walls(self):
        particles = seed_column(self.geometry, self.config, seed=0)
        particles.tags[particles.tags == Tag.WALL_BOTTOM] = Tag.INTERIOR
        with self.assertRaises(ValueError):
            refresh_extents(particles)

    def test_seed_particles_dispatch(self):
        column = seed_particles(self.geometry, self.config, seed=0, column=True)
        container = seed_particles(GeometryConfig(), ParticleConfig(nx=3, ny=3), seed=0)
        self.assertEqual(len(column), 15)
        self.assertEqual(len(container), 9)

    def test_initial_spacing(self):
        self.assertAlmostEqual(initial_spacing(self.geometry, self.config, column=True), 0.25)
        self.assertAlmostEqual(initial_spacing(GeometryConfig(width=2.0), ParticleConfig(nx=5, ny=3),
                                               column=False), 0.5)


class TestSlip(unittest.TestCase):

    def test_left_wall_particle_moves_to_bottom(self):
        particles = seed_column(GeometryConfig(length=0.5), ParticleConfig(particles_per_length=2), seed=0)
        index = int(np.flatnonzero((particles.tags == Tag.WALL_LEFT) & (particles.positions[:, 1] == 0.25))[0])
        particles.velocities[index] = (0.0, -1.0)
        relaxed, moved = slip_relax(particles, threshold=0.3, corners=dambreak_corners(particles))
        self.assertEqual(moved, 1)
        self.assertEqual(relaxed.tags[index], Tag.WALL_BOTTOM)
        np.testing.assert_allclose(relaxed.positions[index], [0.25, 0.0])
        np.testing.assert_array_equal(relaxed.normals[index], [0.0, -1.0])
        self.assertEqual(particles.tags[index], Tag.WALL_LEFT)

    def test_front_particle_moves_to_bottom(self):
        particles = seed_column(GeometryConfig(length=0.5), ParticleConfig(particles_per_length=2), seed=0)
        index = int(np.flatnonzero((particles.tags == Tag.FREE_SURFACE)
                                   & (particles.positions[:, 1] == 0.25)
                                   & (particles.positions[:, 0] == 0.5))[0])
        particles.velocities[index] = (0.2, -1.0)
        relaxed, moved = slip_relax(particles, threshold=0.3, corners=dambreak_corners(particles))
        self.assertEqual(moved, 1)
        np.testing.assert_allclose(relaxed.positions[index], [0.75, 0.0])
        self.assertEqual(refresh_extents(relaxed)[0], 0.75)

    def test_particles_moving_away_stay(self):
        particles = seed_column(GeometryConfig(length=0.5), ParticleConfig(particles_per_length=2), seed=0)
        particles.velocities[:] = (0.0, 1.0)
        _, moved = slip_relax(particles, threshold=0.3, corners=dambreak_corners(particles))
        self.assertEqual(moved, 0)

    def test_zero_threshold(self):
        particles = seed_column(GeometryConfig(length=0.5), ParticleConfig(particles_per_length=2), seed=0)
        particles.velocities[:] = (0.0, -1.0)
        relaxed, moved = slip_relax(particles, threshold=0.0, corners=dambreak_corners(particles))
        self.assertEqual(moved, 0)
        self.assertIs(relaxed, particles)


if __name__ == '__main__':
    unittest.main()
