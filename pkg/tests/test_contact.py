"""
Tests for the penalty wall contact.
"""
import sys
import unittest
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from neural_particles import autodiff as ad
from neural_particles.autodiff import Tape, reverse_grad
from neural_particles.contact import (
    ContactSpec,
    WallPlane,
    box_walls,
    contact_force,
    gap,
    max_penetration,
)


class TestWalls(unittest.TestCase):

    def test_normal_is_normalized(self):
        wall = WallPlane((0.0, 0.0), (3.0, 4.0))
        self.assertAlmostEqual(wall.normal[0], 0.6)
        self.assertAlmostEqual(wall.normal[1], 0.8)

    def test_zero_normal(self):
        with self.assertRaises(ValueError):
            WallPlane((0.0, 0.0), (0.0, 0.0))

    def test_penalty_must_be_positive(self):
        with self.assertRaises(ValueError):
            ContactSpec(penalty=0.0)

    def test_box_walls(self):
        walls = box_walls(2.0)
        self.assertEqual(len(walls), 3)
        self.assertEqual(walls[2].point, (2.0, 0.0))
        self.assertEqual(len(box_walls(2.0, right=False)), 2)

    def test_signed_gap(self):
        right = WallPlane((2.0, 0.0), (1.0, 0.0))
        np.testing.assert_allclose(gap(np.array([1.5, 2.25]), np.zeros(2), right), [-0.5, 0.25])


class TestContactForce(unittest.TestCase):

    def setUp(self):
        self.spec = ContactSpec(penalty=100.0, walls=box_walls(1.0))

    def test_no_force_inside(self):
        fx, fy = contact_force(np.array([0.5]), np.array([0.5]), self.spec)
        self.assertEqual(float(fx[0]), 0.0)
        self.assertEqual(float(fy[0]), 0.0)

    def test_force_pushes_back_into_fluid(self):
        fx, fy = contact_force(np.array([1.02, 0.5]), np.array([0.5, -0.01]), self.spec)
        self.assertAlmostEqual(float(fx[0]), -2.0)
        self.assertAlmostEqual(float(fy[1]), 1.0)
        self.assertEqual(float(fx[1]), 0.0)

    def test_tank_penalty_magnitude(self):
        """penalty 1e7 and a 0.01 penetration give a restoring force of 1e5."""
        spec = ContactSpec(penalty=1e7, walls=box_walls(4 * 0.146))
        fx, fy = contact_force(np.array([-0.01, 0.3, 4 * 0.146 + 0.01]),
                               np.array([0.1, -0.01, 0.1]), spec)
        self.assertAlmostEqual(float(fx[0]), 1e5, delta=1e-6)
        self.assertAlmostEqual(float(fy[1]), 1e5, delta=1e-6)
        self.assertAlmostEqual(float(fx[2]), -1e5, delta=1e-6)
        np.testing.assert_array_equal(fy[[0, 2]], 0.0)
        self.assertEqual(float(fx[1]), 0.0)

    def test_gradient_through_penetration(self):
        tape = Tape()
        x = tape.parameter(np.array([1.1]))
        fx, _ = contact_force(x, np.array([0.5]), self.spec)
        (grad,) = reverse_grad(tape, ad.reduce_sum(fx))
        self.assertAlmostEqual(float(grad[0]), -100.0)

    def test_max_penetration(self):
        positions = np.array([[0.5, 0.5], [1.03, 0.2]])
        self.assertAlmostEqual(max_penetration(positions, box_walls(1.0)), 0.03)
        self.assertLess(max_penetration(positions[:1], box_walls(1.0)), 0.0)
        self.assertEqual(max_penetration(positions, []), -np.inf)


if __name__ == '__main__':
    unittest.main()
