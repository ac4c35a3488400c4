"""
Tests for energies, gauges, period estimation and the front comparison.
"""
import math
import sys
import unittest
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from neural_particles.config import FluidProperties, GeometryConfig, ParticleConfig
from neural_particles.diagnostics import (
    compare_front,
    dimensionless_time,
    energy_record,
    estimate_period,
    front_tip,
    gauge_amplitude,
    is_monotone_decreasing,
    linear_sloshing_period,
    pressure_error,
    relative_drift,
    relative_variation,
    symmetry_error,
    zero_crossings,
)
from neural_particles.particles import ParticleSet, Tag, seed_container


def two_particles(velocities, ys, pressure=(0.0, 0.0)):
    return ParticleSet(np.arange(2), np.array([[0.0, ys[0]], [1.0, ys[1]]]),
                       np.array(velocities, dtype=float), np.zeros(2, dtype=int),
                       np.zeros((2, 2)), np.array(pressure, dtype=float))


class TestEnergies(unittest.TestCase):

    def test_kinetic_energy(self):
        record = energy_record(two_particles([[1.0, 0.0], [0.0, 0.0]], [0.0, 0.0]),
                               FluidProperties(rho=1.0, gravity=10.0))
        self.assertAlmostEqual(record.E_kinetic, 0.25)
        self.assertEqual(record.E_potential, 0.0)

    def test_potential_and_pressure(self):
        record = energy_record(two_particles([[0.0, 0.0]] * 2, [0.0, 1.0], pressure=(2.0, 4.0)),
                               FluidProperties(rho=2.0, gravity=10.0), t=0.5)
        self.assertAlmostEqual(record.E_potential, 10.0)
        self.assertAlmostEqual(record.E_pressure, 3.0)
        self.assertAlmostEqual(record.E_total, 13.0)
        self.assertEqual(record.row()[0], 0.5)

    def test_hydrostatic_pressure_error(self):
        particles = seed_container(GeometryConfig(), ParticleConfig(nx=4, ny=4), seed=0)
        fluid = FluidProperties(rho=1.0, gravity=10.0)
        exact = particles.with_state(particles.positions, particles.velocities,
                                     10.0 * (1.0 - particles.positions[:, 1]))
        rms, rel = pressure_error(exact, fluid, 1.0)
        self.assertAlmostEqual(rms, 0.0)
        shifted = exact.with_state(exact.positions, exact.velocities, exact.pressure + 1.0)
        rms, rel = pressure_error(shifted, fluid, 1.0)
        self.assertAlmostEqual(rms, 1.0)
        self.assertAlmostEqual(rel, 0.1)
        self.assertAlmostEqual(symmetry_error(exact, 1.0), 0.0)

    def test_gauge_reads_left_wall(self):
        geometry = GeometryConfig(amplitude=0.01)
        particles = seed_container(geometry, ParticleConfig(nx=5, ny=5), seed=0)
        self.assertAlmostEqual(gauge_amplitude(particles, 1.0), 0.01)
        particles.tags[particles.tags == Tag.WALL_LEFT] = Tag.INTERIOR
        with self.assertRaises(ValueError):
            gauge_amplitude(particles, 1.0)


class TestSeries(unittest.TestCase):

    def test_linear_period(self):
        self.assertAlmostEqual(linear_sloshing_period(1.0, 1.0, 1.0), 3.5515, places=3)

    def test_period_of_cosine(self):
        t = np.linspace(0.0, 10.0, 1001)
        self.assertAlmostEqual(estimate_period(t, np.cos(2 * math.pi * t / 3.5)), 3.5, places=3)

    def test_period_needs_two_crossings(self):
        self.assertIsNone(estimate_period([0.0, 1.0, 2.0], [1.0, -1.0, -2.0]))
        self.assertEqual(zero_crossings([0.0, 1.0], [1.0, -1.0]), [0.5])

    def test_variation_and_drift(self):
        self.assertAlmostEqual(relative_variation([9.0, 10.0, 11.0]), 20.0)
        self.assertEqual(relative_variation([0.0, 0.0]), 0.0)
        self.assertAlmostEqual(relative_drift([10.0, 9.5]), -5.0)
        self.assertEqual(relative_drift([0.0, 1.0]), float("inf"))

    def test_monotone(self):
        self.assertTrue(is_monotone_decreasing([3.0, 2.0, 2.0, 1.0]))
        self.assertFalse(is_monotone_decreasing([3.0, 2.0, 2.5]))
        self.assertTrue(is_monotone_decreasing([3.0, 2.0, 2.05], tol=0.1))


class TestFrontComparison(unittest.TestCase):

    def test_front_tip_is_rightmost_particle(self):
        particles = two_particles([[0.0, 0.0]] * 2, [0.0, 0.0])
        self.assertEqual(front_tip(particles), 1.0)

    def test_dimensionless_time(self):
        self.assertAlmostEqual(dimensionless_time(0.1, 9.8, 0.146), 0.1 * math.sqrt(2 * 9.8 / 0.146))

    def test_interpolated_comparison(self):
        simulated = [(0.0, 1.0), (1.0, 1.5), (2.0, 2.5)]
        experiment = [(0.5, 1.25), (1.5, 1.5), (3.0, 4.0)]
        rows = compare_front(simulated, experiment)
        self.assertEqual(len(rows), 2)
        self.assertAlmostEqual(rows[0].relative_error, 0.0)
        self.assertTrue(rows[0].within_tolerance)
        self.assertAlmostEqual(rows[1].Zstar_simulation, 2.0)
        self.assertAlmostEqual(rows[1].relative_error, 1.0 / 3.0)
        self.assertFalse(rows[1].within_tolerance)

    def test_empty_simulation(self):
        self.assertEqual(compare_front([], [(0.5, 1.0)]), [])


if __name__ == '__main__':
    unittest.main()
