"""
Configuration classes for the Neural Particle Method.

This module defines all configuration dataclasses, their validation, and
the resolution of a run configuration from scenario defaults, a config
file (TOML or JSON), environment variables and command-line overrides.
"""

import copy
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from .constants import (
    BASE_DEFAULTS,
    ENV_PREFIX,
    ENV_SECTION_SEPARATOR,
    NETWORK_LAYOUTS,
    SCENARIOS,
    SCENARIO_DEFAULTS,
)
from .file_io import read_file_content

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DISTRIBUTIONS = ("equispaced", "jittered", "random")
VELOCITY_BC_MODES = ("projection", "soft")


class ConfigError(ValueError):
    """Raised for unknown keys, unknown scenarios and malformed config files."""


@dataclass
class FluidProperties:
    """
    Material data of the fluid.

    Attributes:
        rho: Density
        gravity: Magnitude of the gravitational acceleration (acts along -y)
    """
    rho: float = 1.0
    gravity: float = 10.0

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")

    @property
    def body_accel(self) -> Tuple[float, float]:
        return (0.0, -float(self.gravity))


@dataclass
class GeometryConfig:
    """
    Domain extents.

    Attributes:
        width, height: Container (or tank) extents w and h
        amplitude: Initial sine amplitude of the free surface (sloshing)
        length: Water column width L (dam break; the column is L x 2L)
        tank_width: Position of the far tank wall (dam break, default 4L)
    """
    width: float = 1.0
    height: float = 1.0
    amplitude: float = 0.0
    length: float = 0.146
    tank_width: Optional[float] = None

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0 and self.length > 0):
            raise ValueError("Geometry extents must be positive")
        if abs(self.amplitude) >= self.height:
            raise ValueError("Surface amplitude must be smaller than the fluid height")
        if self.tank_width is None:
            self.tank_width = 4.0 * self.length
        if self.tank_width <= self.length:
            raise ValueError("tank_width must exceed the column width")


@dataclass
class ParticleConfig:
    distribution: str = "equispaced"
    nx: int = 30
    ny: int = 30
    n_boundary: int = 100
    n_interior: int = 700
    particles_per_length: int = 20
    jitter: float = 0.4
    slip_threshold: Optional[float] = None

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(
                f"distribution must be one of {DISTRIBUTIONS}, got: '{self.distribution}'"
            )
        if self.nx < 2 or self.ny < 2:
            raise ValueError("nx and ny must be at least 2")
        if self.n_boundary < 2 or self.n_interior < 0:
            raise ValueError("n_boundary must be at least 2 and n_interior non-negative")
        if self.particles_per_length < 1:
            raise ValueError("particles_per_length must be at least 1")
        if not 0 <= self.jitter < 0.5:
            raise ValueError("jitter must lie in [0, 0.5) of the spacing")
        if self.slip_threshold is not None and self.slip_threshold < 0:
            raise ValueError("slip_threshold must be non-negative")


@dataclass
class NetworkConfig:
    """
    Attributes:
        layout: Layer widths, or the label (1-4) of a named layout
        input_scale: Factor applied to positions before they enter the
            network (None: scenario default, 1/L for the dam break)
    """
    layout: Any = field(default_factory=lambda: list(NETWORK_LAYOUTS[1]))
    input_scale: Optional[float] = None

    def __post_init__(self):
        if isinstance(self.layout, int) and not isinstance(self.layout, bool):
            if self.layout not in NETWORK_LAYOUTS:
                raise ValueError(f"Unknown layout label {self.layout}")
            self.layout = list(NETWORK_LAYOUTS[self.layout])
        self.layout = [int(n) for n in self.layout]
        if len(self.layout) < 2 or any(n <= 0 for n in self.layout):
            raise ValueError(f"Invalid layout {self.layout}")
        if self.input_scale is not None and not self.input_scale > 0:
            raise ValueError("input_scale must be positive")


@dataclass
class TrainingSchedule:
    """Adam warm-up followed by L-BFGS, per time step."""
    adam_iters_first: int = 1000
    adam_iters: int = 100
    adam_lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    lbfgs_max_iter: int = 5000
    g_tol: float = 1e-9
    f_tol: float = 1e-12
    history: int = 10
    c1: float = 1e-4
    c2: float = 0.9
    max_line_search: int = 25

    def __post_init__(self):
        if self.adam_iters < 0 or self.adam_iters_first < 0 or self.lbfgs_max_iter < 0:
            raise ValueError("Iteration counts must be non-negative")
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError("Wolfe constants must satisfy 0 < c1 < c2 < 1")
        if self.history < 1:
            raise ValueError("L-BFGS history must hold at least one pair")

    def adam_iters_for(self, time_step: int) -> int:
        return self.adam_iters_first if time_step == 0 else self.adam_iters


@dataclass
class ContactConfig:
    penalty: Optional[float] = None

    def __post_init__(self):
        if self.penalty is not None and not self.penalty > 0:
            raise ValueError("Contact penalty must be positive")


@dataclass
class MsdConfig:
    """
    Mass-spring-damper data; ``velocity`` None means the analytic initial
    velocity of the damped solution.
    """
    mass: float = 1.0
    stiffness: float = 1.0
    damping: float = 0.1
    amplitude: float = 1.0
    velocity: Optional[float] = None

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if self.stiffness < 0 or self.damping < 0:
            raise ValueError("stiffness and damping must be non-negative")


@dataclass
class LossWeights:
    velocity: float = 1.0
    divergence: float = 1.0
    pressure_bc: float = 1.0
    velocity_bc: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"Loss weight '{f.name}' must be non-negative")


_SECTIONS = {
    "geometry": GeometryConfig,
    "fluid": FluidProperties,
    "particles": ParticleConfig,
    "network": NetworkConfig,
    "training": TrainingSchedule,
    "contact": ContactConfig,
    "msd": MsdConfig,
    "weights": LossWeights,
}


@dataclass
class ScenarioConfig:
    """
    Physics and discretization of one experiment.

    Attributes:
        dt: Time step
        steps: Number of steps (derived from t_end when None)
        t_end: Final time, used when steps is None
        seed: Seed for network initialization and particle placement
        velocity_bc: "projection" (exact wall conditions) or "soft" (penalized)
        time_scale: Factor k in the dimensionless dam-break time t*sqrt(k*g/L)
    """
    dt: float = 0.1
    steps: Optional[int] = None
    t_end: Optional[float] = None
    seed: int = 0
    velocity_bc: str = "projection"
    time_scale: float = 2.0
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    fluid: FluidProperties = field(default_factory=FluidProperties)
    particles: ParticleConfig = field(default_factory=ParticleConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    training: TrainingSchedule = field(default_factory=TrainingSchedule)
    contact: ContactConfig = field(default_factory=ContactConfig)
    msd: MsdConfig = field(default_factory=MsdConfig)
    weights: LossWeights = field(default_factory=LossWeights)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.velocity_bc not in VELOCITY_BC_MODES:
            raise ValueError(f"velocity_bc must be one of {VELOCITY_BC_MODES}, got: '{self.velocity_bc}'")
        if self.steps is None:
            if self.t_end is None:
                raise ValueError("Either steps or t_end must be given")
            self.steps = max(1, math.ceil(self.t_end / self.dt - 1e-9))
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if not self.time_scale > 0:
            raise ValueError("time_scale must be positive")


@dataclass
class RunConfig(ScenarioConfig):
    """
    A fully resolved run: scenario name, scenario physics and output options.

    Attributes:
        scenario: One of msd, static-pressure, sloshing, dambreak
        output_dir: Directory receiving all artifacts
        snapshot_interval: Steps between particle snapshots (None: every
            step up to 100 steps, otherwise about 100 snapshots)
        checkpoint: Whether to write network parameters after every step
        experiment_csv: Optional Tstar,Zstar file for the dam-break comparison
        show_progress: Whether to print per-step progress
    """
    scenario: str = ""
    output_dir: str = "npm_output"
    snapshot_interval: Optional[int] = None
    checkpoint: bool = False
    experiment_csv: Optional[str] = None
    show_progress: bool = True

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(
                f"Unsupported scenario '{self.scenario}'; choose from {', '.join(SCENARIOS)}"
            )
        super().__post_init__()
        if self.snapshot_interval is None:
            self.snapshot_interval = 1 if self.steps <= 100 else math.ceil(self.steps / 100)
        if self.snapshot_interval < 1:
            raise ValueError("snapshot_interval must be at least 1")

    @classmethod
    def from_dict(cls, scenario: str, config_dict: Mapping[str, Any]) -> "RunConfig":
        values = dict(config_dict)
        for name, section_cls in _SECTIONS.items():
            if name in values:
                values[name] = section_cls(**values[name])
        return cls(scenario=scenario, **values)

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# Resolution: defaults < file < environment < command line
# ---------------------------------------------------------------------------

def default_table(scenario: str) -> Dict[str, Any]:
    """The full default configuration of a scenario."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"Unsupported scenario '{scenario}'; choose from {', '.join(SCENARIOS)}")
    return merge_config(BASE_DEFAULTS, SCENARIO_DEFAULTS[scenario])


def format_default_table(scenario: Optional[str] = None) -> str:
    """Render default tables as TOML-like text."""
    names = [scenario] if scenario else list(SCENARIOS)
    lines: List[str] = []
    for name in names:
        table = default_table(name)
        lines.append(f"# scenario: {name}")
        for key, value in table.items():
            if not isinstance(value, dict):
                lines.append(f"{key} = {_render_value(value)}")
        for key, value in table.items():
            if isinstance(value, dict):
                lines.append(f"[{key}]")
                lines.extend(f"{k} = {_render_value(v)}" for k, v in value.items())
        lines.append("")
    return "\n".join(lines)


def _render_value(value: Any) -> str:
    if value is None:
        return "# unset"
    return json.dumps(value)


def merge_config(base: Mapping[str, Any], override: Mapping[str, Any],
                 path: str = "") -> Dict[str, Any]:
    """
    Deep-merge ``override`` into a copy of ``base``.

    Raises:
        ConfigError: a key of ``override`` does not exist in ``base``
    """
    merged = copy.deepcopy(dict(base))
    for key, value in override.items():
        dotted = f"{path}{key}"
        if key not in merged:
            raise ConfigError(f"Unknown configuration key '{dotted}'")
        if isinstance(merged[key], dict):
            if not isinstance(value, Mapping):
                raise ConfigError(f"Configuration key '{dotted}' is a section, got {value!r}")
            merged[key] = merge_config(merged[key], value, path=f"{dotted}.")
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a TOML (.toml) or JSON (.json) configuration file.

    Raises:
        ConfigError: the file is missing or cannot be parsed
    """
    file_path = Path(path)
    if not file_path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    text = read_file_content(str(file_path))
    try:
        if file_path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            data = tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"Cannot parse {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a table")
    data.pop("scenario", None)
    return data


def _parse_env_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except ValueError:
        return raw


def env_overrides(environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    """
    Collect overrides such as ``NPM_DT=0.05`` or ``NPM_TRAINING__ADAM_LR=1e-4``.

    Variables whose first segment names no configuration key or section are
    ignored (the prefix is shared with unrelated tools).
    """
    environ = os.environ if environ is None else environ
    out: Dict[str, Any] = {}
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX):
            continue
        parts = name[len(ENV_PREFIX):].lower().split(ENV_SECTION_SEPARATOR.lower())
        if parts[0] not in BASE_DEFAULTS:
            continue
        target = out
        for part in parts[:-1]:
            target = target.setdefault(part, {})
        target[parts[-1]] = _parse_env_value(environ[name])
    return out


def build_run_config(scenario: Optional[str],
                     config_path: Optional[str] = None,
                     environ: Optional[Mapping[str, str]] = None,
                     overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    Resolve a RunConfig with precedence defaults < file < environment < overrides.

    Raises:
        ConfigError: unknown scenario or key; the message of a missing
            scenario carries the full default table
    """
    if not scenario:
        raise ConfigError("No scenario given. Defaults per scenario:\n\n" + format_default_table())
    table = default_table(scenario)
    layers = [load_config_file(config_path) if config_path else {},
              env_overrides(environ), dict(overrides or {})]
    for layer in layers:
        table = merge_config(table, layer)
        # A final time given without a step count determines the step count
        if "t_end" in layer and "steps" not in layer:
            table["steps"] = None
    try:
        return RunConfig.from_dict(scenario, table)
    except TypeError as e:
        raise ConfigError(str(e)) from e
