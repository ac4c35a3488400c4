"""
Tests for the feed-forward ansatz, output schema and checkpoints.
"""
import shutil
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from neural_particles.autodiff import Dual
from neural_particles.constants import NETWORK_LAYOUTS
from neural_particles.network import (
    NetworkLayout,
    NetworkParams,
    OutputSchema,
    flatten,
    format_checkpoint,
    forward,
    forward_dual,
    init_params,
    load_checkpoint,
    parse_checkpoint,
    save_checkpoint,
    unflatten,
)


class TestInit(unittest.TestCase):

    def test_single_weight_range(self):
        params = init_params([1, 1], seed=4)
        (w, b), = params.layers
        self.assertLessEqual(abs(w[0, 0]), np.sqrt(6.0 / 2.0))
        self.assertEqual(b[0], 0.0)

    def test_same_seed_same_parameters(self):
        a = init_params([2, 8, 5], seed=9)
        b = init_params([2, 8, 5], seed=9)
        np.testing.assert_array_equal(flatten(a), flatten(b))

    def test_parameter_count_layout_one(self):
        layout = NetworkLayout.named(1)
        self.assertEqual(layout.parameter_count, 7562)
        self.assertEqual(flatten(init_params(layout, 0)).size, 7562)

    def test_zero_width_layer_rejected(self):
        with self.assertRaises(ValueError):
            init_params([2, 0, 3], seed=0)


class TestForward(unittest.TestCase):

    def test_zero_parameters(self):
        params = NetworkParams([(np.zeros((4, 2)), np.zeros(4)), (np.zeros((3, 4)), np.zeros(3))])
        np.testing.assert_array_equal(forward(params, [0.3, -0.7]), np.zeros(3))

    def test_affine_map(self):
        params = NetworkParams([(np.array([[2.0]]), np.array([1.0]))])
        self.assertEqual(forward(params, [3.0])[0], 7.0)

    def test_hidden_tanh(self):
        params = NetworkParams([(np.array([[1.0]]), np.array([0.0])),
                                (np.array([[1.0]]), np.array([0.0]))])
        self.assertAlmostEqual(forward(params, [0.5])[0], 0.462117157260010, places=12)

    def test_dimension_mismatch(self):
        params = init_params([2, 3, 4], seed=0)
        with self.assertRaises(ValueError):
            forward(params, [1.0, 2.0, 3.0])

    def test_dual_forward_matches_plain_forward(self):
        params = init_params([2, 6, 8], seed=3)
        x = np.array([[0.2, 0.4], [0.9, 0.1]])
        seed = Dual(x, [np.tile([1.0, 0.0], (2, 1)), np.tile([0.0, 1.0], (2, 1))])
        out = forward_dual(params.layers, seed)
        np.testing.assert_allclose(out.value, forward(params, x), rtol=1e-14, atol=1e-15)
        h = 1e-6
        fd = (forward(params, x + [h, 0.0]) - forward(params, x - [h, 0.0])) / (2 * h)
        np.testing.assert_allclose(out.tangents[0], fd, rtol=1e-6, atol=1e-8)


class TestOutputSchema(unittest.TestCase):

    def test_ode_schema_one_stage(self):
        schema = OutputSchema.for_width(2, dim=1, pressure=False)
        v_stages, v_next, p = schema.split(np.array([1.5, -2.5]))
        self.assertEqual(schema.stages, 1)
        self.assertEqual(v_stages[0, 0], 1.5)
        self.assertEqual(v_next[0], -2.5)
        self.assertIsNone(p)

    def test_two_stage_width_is_eight(self):
        schema = OutputSchema(stages=2, dim=2)
        self.assertEqual(schema.width, 8)
        with self.assertRaises(ValueError):
            schema.split(np.arange(10.0))
        with self.assertRaises(ValueError):
            OutputSchema.for_width(10, dim=2)

    def test_named_layouts(self):
        self.assertEqual(NetworkLayout.named(1).stages, 20)
        for label in (2, 3, 4):
            layout = NetworkLayout.named(label)
            self.assertEqual(layout.stages, 50)
            self.assertEqual(layout.n_outputs, 2 * 51 + 50)
            expected = sum(a * b + b for a, b in zip(NETWORK_LAYOUTS[label][:-1], NETWORK_LAYOUTS[label][1:]))
            self.assertEqual(layout.parameter_count, expected)

    def test_split_reassemble_identity(self):
        rng = np.random.default_rng(0)
        schema = OutputSchema(stages=3, dim=2)
        for _ in range(5):
            out = rng.normal(size=(4, schema.width))
            np.testing.assert_array_equal(schema.reassemble(*schema.split(out)), out)

    def test_columns_agree_with_split(self):
        schema = OutputSchema(stages=3, dim=2)
        out = np.arange(float(schema.width))
        v_stages, v_next, p_stages = schema.split(out)
        self.assertEqual(v_stages[1, 2], out[schema.velocity_column(2, 1)])
        self.assertEqual(v_next[0], out[schema.next_column(0)])
        self.assertEqual(p_stages[1], out[schema.pressure_column(1)])


class TestCheckpoint(unittest.TestCase):

    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_round_trip_is_lossless(self):
        params = init_params([2, 7, 5, 8], seed=12)
        path = Path(self.test_dir) / "nested" / "params.txt"
        save_checkpoint(params, path)
        loaded = load_checkpoint(path)
        np.testing.assert_array_equal(flatten(loaded), flatten(params))
        self.assertEqual(loaded.sizes, params.sizes)

    def test_text_round_trip(self):
        params = init_params([1, 3, 2], seed=1)
        self.assertEqual(format_checkpoint(parse_checkpoint(format_checkpoint(params))),
                         format_checkpoint(params))

    def test_corrupt_checkpoint(self):
        text = format_checkpoint(init_params([1, 2], seed=0))
        with self.assertRaises(ValueError):
            parse_checkpoint(text.rsplit("\n", 2)[0])

    def test_unflatten_checks_size(self):
        params = init_params([2, 3], seed=0)
        with self.assertRaises(ValueError):
            unflatten(np.zeros(4), params)


if __name__ == '__main__':
    unittest.main()
