"""
Tests for the distance-function velocity projection.
"""
import sys
import unittest
from io import StringIO
from pathlib import Path
from unittest.mock import patch

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from neural_particles.autodiff import Dual
from neural_particles.projection import (
    distance_functions,
    identity_projection,
    linear_projection,
    outside_count,
    project_velocity,
)


class TestDistanceFunctions(unittest.TestCase):

    def test_container_profiles(self):
        proj = distance_functions(2.0, 0.5)
        x = np.array([0.0, 1.0, 2.0])
        np.testing.assert_allclose(proj.dx(x), [0.0, 1.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(proj.ddx(x), [2.0, 0.0, -2.0], atol=1e-15)
        np.testing.assert_allclose(proj.dy(np.array([0.0, 0.5])), [0.0, 1.0])
        np.testing.assert_allclose(proj.ddy(np.array([0.1, 0.3])), [2.0, 2.0])

    def test_linear_profiles(self):
        proj = linear_projection(4.0, 2.0)
        np.testing.assert_allclose(proj.dx(np.array([0.0, 2.0])), [0.0, 0.5])
        np.testing.assert_allclose(proj.ddx(np.array([1.0])), [0.25])
        self.assertEqual(proj.kind, "linear")

    def test_degenerate_extents(self):
        with self.assertRaises(ValueError):
            distance_functions(0.0, 1.0)
        with self.assertRaises(ValueError):
            linear_projection(1.0, -1.0)

    def test_multipliers_carry_derivatives(self):
        proj = distance_functions(1.0, 1.0)
        d_x, d_y = proj.multipliers(np.array([[0.25, 0.5]]))
        self.assertAlmostEqual(float(d_x.value[0, 0]), 0.75)
        self.assertAlmostEqual(float(d_x.tangents[0][0, 0]), 2.0)
        self.assertEqual(float(d_x.tangents[1][0, 0]), 0.0)
        self.assertEqual(float(d_y.tangents[1][0, 0]), 1.0)


class TestProjectVelocity(unittest.TestCase):

    def test_product_rule(self):
        proj = distance_functions(1.0, 1.0)
        positions = np.array([[0.25, 0.5], [0.5, 0.2]])
        raw = Dual(np.array([[2.0], [3.0]]), [np.array([[0.5], [1.0]]), np.array([[0.1], [0.2]])])
        vx, vy = project_velocity(raw, raw, positions, proj, warn=False)
        d = proj.dx(positions[:, 0:1])
        dd = proj.ddx(positions[:, 0:1])
        np.testing.assert_allclose(vx.value, d * raw.value)
        np.testing.assert_allclose(vx.tangents[0], dd * raw.value + d * raw.tangents[0])
        np.testing.assert_allclose(vx.tangents[1], d * raw.tangents[1])
        np.testing.assert_allclose(vy.tangents[1], raw.value + positions[:, 1:2] * raw.tangents[1])

    def test_plain_arrays(self):
        proj = distance_functions(1.0, 1.0)
        positions = np.array([[0.0, 0.0], [0.5, 1.0]])
        vx, vy = project_velocity(np.ones((2, 3)), np.ones((2, 3)), positions, proj, warn=False)
        np.testing.assert_allclose(vx, [[0.0] * 3, [1.0] * 3])
        np.testing.assert_allclose(vy, [[0.0] * 3, [1.0] * 3])

    def test_identity_leaves_velocities(self):
        raw = Dual(np.array([[2.0]]), [np.array([[0.5]]), np.array([[0.1]])])
        vx, _ = project_velocity(raw, raw, np.array([[5.0, -1.0]]), identity_projection(), warn=False)
        self.assertEqual(float(vx.value[0, 0]), 2.0)
        self.assertEqual(float(vx.tangents[0][0, 0]), 0.5)


class TestOutsideDomain(unittest.TestCase):

    def test_container_counts_all_walls(self):
        positions = np.array([[-0.1, 0.5], [1.2, 0.5], [0.5, -0.01], [0.5, 3.0], [0.5, 0.5]])
        self.assertEqual(outside_count(positions, distance_functions(1.0, 1.0)), 3)

    def test_linear_ignores_far_side(self):
        positions = np.array([[1.5, 0.5], [0.5, 0.5]])
        self.assertEqual(outside_count(positions, linear_projection(1.0, 1.0)), 0)

    def test_warning_printed(self):
        positions = np.array([[-0.5, 0.5]])
        with patch("sys.stdout", new=StringIO()) as fake_out:
            project_velocity(np.ones((1, 1)), np.ones((1, 1)), positions, distance_functions(1.0, 1.0))
        self.assertIn("outside the projection domain", fake_out.getvalue())


if __name__ == '__main__':
    unittest.main()
