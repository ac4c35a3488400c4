"""
Tests for configuration module.
"""
import json
import shutil
import sys
import tempfile
import unittest
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from neural_particles.config import (
    ConfigError,
    GeometryConfig,
    NetworkConfig,
    RunConfig,
    ScenarioConfig,
    TrainingSchedule,
    build_run_config,
    default_table,
    env_overrides,
    format_default_table,
    merge_config,
)
from neural_particles.constants import NETWORK_LAYOUTS, SCENARIOS


class TestDefaults(unittest.TestCase):
    """Scenario tables resolve to valid run configurations."""

    def test_every_scenario_resolves(self):
        for scenario in SCENARIOS:
            config = build_run_config(scenario, environ={})
            self.assertEqual(config.scenario, scenario)
            self.assertGreaterEqual(config.steps, 1)

    def test_msd_defaults(self):
        config = build_run_config("msd", environ={})
        self.assertEqual(config.steps, 4)
        self.assertEqual(config.network.layout, [1, 20, 20, 9])

    def test_sloshing_defaults(self):
        config = build_run_config("sloshing", environ={})
        self.assertEqual(config.steps, 140)
        self.assertEqual(config.fluid.gravity, 1.0)
        self.assertEqual(config.geometry.amplitude, 0.01)
        self.assertEqual(config.snapshot_interval, 2)

    def test_dambreak_tank_width(self):
        config = build_run_config("dambreak", environ={})
        self.assertAlmostEqual(config.geometry.tank_width, 4 * 0.146)
        self.assertEqual(config.contact.penalty, 1e7)

    def test_default_table_lists_sections(self):
        text = format_default_table("static-pressure")
        self.assertIn("# scenario: static-pressure", text)
        self.assertIn("[training]", text)
        self.assertIn("steps = 50", text)


class TestValidation(unittest.TestCase):

    def test_missing_scenario_carries_defaults(self):
        with self.assertRaises(ConfigError) as ctx:
            build_run_config(None, environ={})
        self.assertIn("# scenario: dambreak", str(ctx.exception))

    def test_unknown_scenario(self):
        with self.assertRaises(ConfigError):
            build_run_config("tsunami", environ={})
        with self.assertRaises(ConfigError):
            default_table("tsunami")

    def test_unknown_key(self):
        with self.assertRaises(ConfigError) as ctx:
            build_run_config("msd", environ={}, overrides={"training": {"adam_rate": 0.1}})
        self.assertIn("training.adam_rate", str(ctx.exception))

    def test_section_given_scalar(self):
        with self.assertRaises(ConfigError):
            merge_config({"fluid": {"rho": 1.0}}, {"fluid": 3})

    def test_invalid_values(self):
        with self.assertRaises(ValueError):
            ScenarioConfig(dt=0.0, steps=1)
        with self.assertRaises(ValueError):
            ScenarioConfig(dt=0.1)
        with self.assertRaises(ValueError):
            GeometryConfig(height=0.1, amplitude=0.2)
        with self.assertRaises(ValueError):
            TrainingSchedule(c1=0.9, c2=0.1)
        with self.assertRaises(ValueError):
            ScenarioConfig(dt=0.1, steps=1, velocity_bc="none")

    def test_steps_from_final_time(self):
        self.assertEqual(ScenarioConfig(dt=0.1, t_end=14.0).steps, 140)
        self.assertEqual(ScenarioConfig(dt=0.3, t_end=1.0).steps, 4)

    def test_layout_label(self):
        self.assertEqual(NetworkConfig(layout=3).layout, NETWORK_LAYOUTS[3])
        with self.assertRaises(ValueError):
            NetworkConfig(layout=9)

    def test_run_config_rejects_unknown_scenario(self):
        with self.assertRaises(ConfigError):
            RunConfig(scenario="", dt=0.1, steps=1)


class TestPrecedence(unittest.TestCase):
    """defaults < file < environment < command line."""

    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def write(self, name, text):
        path = Path(self.test_dir) / name
        path.write_text(text, encoding='utf-8')
        return str(path)

    def test_toml_file(self):
        path = self.write("run.toml", 'scenario = "ignored"\ndt = 0.05\n[training]\nadam_lr = 0.01\n')
        config = build_run_config("sloshing", config_path=path, environ={})
        self.assertEqual(config.dt, 0.05)
        self.assertEqual(config.training.adam_lr, 0.01)
        self.assertEqual(config.training.adam_iters, 100)

    def test_json_file(self):
        path = self.write("run.json", json.dumps({"seed": 7, "msd": {"damping": 0.0}}))
        config = build_run_config("msd", config_path=path, environ={})
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.msd.damping, 0.0)

    def test_environment_beats_file_and_loses_to_overrides(self):
        path = self.write("run.toml", "seed = 1\ndt = 0.5\n")
        environ = {"NPM_SEED": "2", "NPM_DT": "0.25", "NPM_TRAINING__ADAM_ITERS": "3"}
        config = build_run_config("static-pressure", config_path=path, environ=environ,
                                  overrides={"seed": 3})
        self.assertEqual(config.seed, 3)
        self.assertEqual(config.dt, 0.25)
        self.assertEqual(config.training.adam_iters, 3)

    def test_final_time_recomputes_steps(self):
        config = build_run_config("static-pressure", environ={}, overrides={"t_end": 3.0})
        self.assertEqual(config.steps, 3)

    def test_unrelated_environment_ignored(self):
        self.assertEqual(env_overrides({"NPM_CONFIG_PREFIX": "/usr", "PATH": "/bin"}), {})
        self.assertEqual(env_overrides({"NPM_FLUID__RHO": "2.5"}), {"fluid": {"rho": 2.5}})
        self.assertEqual(env_overrides({"NPM_VELOCITY_BC": "soft"}), {"velocity_bc": "soft"})

    def test_missing_or_broken_file(self):
        with self.assertRaises(ConfigError):
            build_run_config("msd", config_path=str(Path(self.test_dir) / "nope.toml"), environ={})
        path = self.write("bad.toml", "dt = = 1\n")
        with self.assertRaises(ConfigError):
            build_run_config("msd", config_path=path, environ={})


if __name__ == '__main__':
    unittest.main()
