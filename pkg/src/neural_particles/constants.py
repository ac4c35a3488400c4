"""
Constants for the Neural Particle Method.

This module contains all constant values used throughout the package,
including the named network layouts, scenario defaults, output formats
and the terminal icon set.
"""

import math
from typing import Any, Dict, List

try:
    from importlib.metadata import version as _get_version

    __version__ = _get_version("neural-particle-method")
except Exception:
    __version__ = "1.0.0"  # Fallback for dev mode without pip install

# All numeric output uses 17 significant digits (lossless for doubles)
FLOAT_FORMAT = ".17g"

# Environment override prefix: NPM_DT, NPM_TRAINING__ADAM_LR, ...
ENV_PREFIX = "NPM_"
ENV_SECTION_SEPARATOR = "__"

# Process exit codes
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_STEP_REJECTED = 2
EXIT_TRAINING_DIVERGED = 3

SCENARIOS = ("msd", "static-pressure", "sloshing", "dambreak")

# Network layouts of the layout study (label -> sizes)
NETWORK_LAYOUTS: Dict[int, List[int]] = {
    1: [2, 60, 60, 62],
    2: [2, 100, 100, 100, 100, 100, 100, 152],
    3: [2, 200, 200, 200, 152],
    4: [2, 300, 300, 300, 300, 300, 300, 152],
}

MSD_LAYOUT: List[int] = [1, 20, 20, 9]

# Loss-history CSV columns
LOSS_HISTORY_COLUMNS = [
    "time_step", "phase", "iteration", "loss",
    "sse_v", "sse_div", "sse_pbar", "sse_vbar",
]

# Particle snapshot CSV columns
SNAPSHOT_COLUMNS = ["id", "tag", "x", "y", "vx", "vy", "p"]

# Time-series CSV columns
TIMESERIES_COLUMNS = [
    "t", "amplitude", "E_pressure", "E_kinetic",
    "E_potential", "E_total", "front_tip",
]

EXPERIMENT_COLUMNS = ["Tstar", "Zstar"]

# Mass-spring-damper trajectory (step points and IRK stage points)
TRAJECTORY_COLUMNS = ["t", "kind", "step", "q", "qdot", "q_analytic", "error"]

# Dam-break front series and comparison table
FRONT_COLUMNS = ["t", "Tstar", "Zstar"]
COMPARISON_COLUMNS = ["Tstar", "Zstar_experiment", "Zstar_simulation", "relative_error", "within_tolerance"]

# Step diagnostics written next to the energy time series
STEP_COLUMNS = [
    "time_step", "t", "loss", "adam_iterations", "lbfgs_iterations", "reason",
    "evaluations", "min_det", "max_wall_gap", "max_speed", "moved",
]

# Shared base of every scenario; scenario tables below override it
BASE_DEFAULTS: Dict[str, Any] = {
    "dt": 0.1,
    "steps": None,
    "t_end": None,
    "seed": 0,
    "velocity_bc": "projection",
    "time_scale": 2.0,
    "output_dir": "npm_output",
    "snapshot_interval": None,
    "checkpoint": False,
    "experiment_csv": None,
    "show_progress": True,
    "geometry": {
        "width": 1.0,
        "height": 1.0,
        "amplitude": 0.0,
        "length": 0.146,
        "tank_width": None,
    },
    "fluid": {
        "rho": 1.0,
        "gravity": 10.0,
    },
    "particles": {
        "distribution": "equispaced",
        "nx": 30,
        "ny": 30,
        "n_boundary": 100,
        "n_interior": 700,
        "particles_per_length": 20,
        "jitter": 0.4,
        "slip_threshold": None,
    },
    "network": {
        "layout": list(NETWORK_LAYOUTS[1]),
        "input_scale": None,
    },
    "training": {
        "adam_iters_first": 1000,
        "adam_iters": 100,
        "adam_lr": 1e-3,
        "beta1": 0.9,
        "beta2": 0.999,
        "epsilon": 1e-8,
        "lbfgs_max_iter": 5000,
        "g_tol": 1e-9,
        "f_tol": 1e-12,
        "history": 10,
        "c1": 1e-4,
        "c2": 0.9,
        "max_line_search": 25,
    },
    "contact": {
        "penalty": None,
    },
    "msd": {
        "mass": 1.0,
        "stiffness": 1.0,
        "damping": 0.1,
        "amplitude": 1.0,
        "velocity": None,
    },
    "weights": {
        "velocity": 1.0,
        "divergence": 1.0,
        "pressure_bc": 1.0,
        "velocity_bc": 1.0,
    },
}

# Per-scenario overrides reproducing the headline runs
SCENARIO_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "msd": {
        "dt": 2.0 * math.pi,
        "t_end": 20.0,
        "network": {"layout": list(MSD_LAYOUT)},
        "training": {"adam_iters_first": 100, "adam_iters": 100},
    },
    "static-pressure": {
        "dt": 1.0,
        "steps": 50,
        "fluid": {"rho": 1.0, "gravity": 10.0},
    },
    "sloshing": {
        "dt": 0.1,
        "t_end": 14.0,
        "fluid": {"rho": 1.0, "gravity": 1.0},
        "geometry": {"amplitude": 0.01},
    },
    "dambreak": {
        "dt": 0.01,
        "t_end": 0.3,
        "fluid": {"rho": 1.0, "gravity": 9.8},
        "contact": {"penalty": 1e7},
    },
}


def _supports_emoji() -> bool:
    """Detect if the terminal can display emoji correctly."""
    import sys
    import os

    # Non-interactive (piped, CI) -> skip detection
    if not sys.stderr.isatty():
        return False

    if os.name == 'nt':
        return bool(os.environ.get('WT_SESSION') or os.environ.get('TERM_PROGRAM'))

    return True


# Emoji icons
_EMOJI_ICONS = {
    "success":   "✅",           # ✅
    "warning":   "⚠️",     # ⚠️
    "error":     "❌",           # ❌
    "rocket":    "\U0001f680",       # 🚀
    "chart":     "\U0001f4ca",       # 📊
    "target":    "\U0001f3af",       # 🎯
    "wave":      "\U0001f30a",       # 🌊
    "clock":     "⏱️",     # ⏱️
    "mag":       "\U0001f50d",       # 🔍
    "floppy":    "\U0001f4be",       # 💾
}

# ASCII fallbacks for terminals that don't support emoji
_ASCII_ICONS = {
    "success":   "[OK]",
    "warning":   "[!]",
    "error":     "[X]",
    "rocket":    "[>>]",
    "chart":     "[#]",
    "target":    "[*]",
    "wave":      "[~]",
    "clock":     "[t]",
    "mag":       "[?]",
    "floppy":    "[S]",
}

# Select the right icon set for the current terminal
EMOJI = _EMOJI_ICONS if _supports_emoji() else _ASCII_ICONS
