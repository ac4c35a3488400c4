"""
Feed-forward ansatz of the Neural Particle Method.

A network maps a particle position at t_n to the implicit Runge-Kutta
velocity stages, the velocity at t_{n+1} and (for fluid networks) the
pressure stages. Hidden layers use tanh; the output layer is affine.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import autodiff as ad
from .autodiff import Dual
from .constants import FLOAT_FORMAT, NETWORK_LAYOUTS
from .file_io import atomic_write_text, read_file_content

CHECKPOINT_HEADER = "# neural-particles checkpoint v1"

Layer = Tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class NetworkLayout:
    """
    Layer widths of a network, input first.

    Attributes:
        sizes: Widths, e.g. [2, 60, 60, 62]
        dim: Spatial dimension of the outputs (2 for fluid, 1 for the ODE net)
        pressure: Whether the output carries pressure stages
    """
    sizes: Tuple[int, ...]
    dim: int = 2
    pressure: bool = True

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        if len(self.sizes) < 2:
            raise ValueError("A layout needs at least an input and an output layer")
        if any(n <= 0 for n in self.sizes):
            raise ValueError(f"Layer widths must be positive, got {list(self.sizes)}")
        # Validates the output width against the schema
        self.schema

    @classmethod
    def fluid(cls, sizes: Sequence[int]) -> "NetworkLayout":
        return cls(tuple(sizes), dim=2, pressure=True)

    @classmethod
    def ode(cls, sizes: Sequence[int]) -> "NetworkLayout":
        return cls(tuple(sizes), dim=1, pressure=False)

    @classmethod
    def named(cls, label: int) -> "NetworkLayout":
        """One of the layouts of the layout study, by label (1-4)."""
        if label not in NETWORK_LAYOUTS:
            raise ValueError(f"Unknown layout label {label}; choose from {sorted(NETWORK_LAYOUTS)}")
        return cls.fluid(NETWORK_LAYOUTS[label])

    @property
    def n_inputs(self) -> int:
        return self.sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.sizes[-1]

    @property
    def stages(self) -> int:
        return self.schema.stages

    @property
    def schema(self) -> "OutputSchema":
        return OutputSchema.for_width(self.n_outputs, self.dim, self.pressure)

    @property
    def parameter_count(self) -> int:
        return sum(n_out * n_in + n_out for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]))


@dataclass(frozen=True)
class OutputSchema:
    """
    Partition of the output vector.

    Column order is v^1..v^s (dim each), v_{n+1} (dim), then p^1..p^s.
    """
    stages: int
    dim: int
    pressure: bool = True

    def __post_init__(self):
        if self.stages < 1 or self.dim < 1:
            raise ValueError("An output schema needs at least one stage and one dimension")

    @classmethod
    def for_width(cls, width: int, dim: int, pressure: bool = True) -> "OutputSchema":
        """Derive the stage count from an output width, rejecting widths that do not fit."""
        per_stage = dim + (1 if pressure else 0)
        stages, remainder = divmod(width - dim, per_stage)
        if remainder or stages < 1:
            raise ValueError(
                f"Output width {width} does not match dim={dim}"
                f"{' with pressure stages' if pressure else ''}"
            )
        return cls(stages, dim, pressure)

    @property
    def width(self) -> int:
        return self.dim * (self.stages + 1) + (self.stages if self.pressure else 0)

    @property
    def velocity_stages(self) -> slice:
        return slice(0, self.dim * self.stages)

    @property
    def velocity_next(self) -> slice:
        start = self.dim * self.stages
        return slice(start, start + self.dim)

    @property
    def pressure_stages(self) -> slice:
        start = self.dim * (self.stages + 1)
        return slice(start, start + (self.stages if self.pressure else 0))

    def _check(self, length: int) -> None:
        if length != self.width:
            raise ValueError(f"Output length {length} does not match schema width {self.width}")

    def split(self, output: np.ndarray) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
        """
        Split raw output rows into (v_stages, v_next, p_stages).

        Shapes for output (..., width): v_stages (..., dim, s), v_next
        (..., dim), p_stages (..., s) or None for schemas without pressure.
        """
        output = np.asarray(output, dtype=float)
        self._check(output.shape[-1])
        lead = output.shape[:-1]
        v_stages = output[..., self.velocity_stages].reshape(lead + (self.stages, self.dim))
        v_stages = np.swapaxes(v_stages, -1, -2)
        v_next = output[..., self.velocity_next]
        p_stages = output[..., self.pressure_stages] if self.pressure else None
        return v_stages.copy(), v_next.copy(), None if p_stages is None else p_stages.copy()

    def reassemble(self, v_stages: np.ndarray, v_next: np.ndarray,
                   p_stages: Optional[np.ndarray] = None) -> np.ndarray:
        v_stages = np.asarray(v_stages, dtype=float)
        lead = v_stages.shape[:-2]
        parts = [np.swapaxes(v_stages, -1, -2).reshape(lead + (self.dim * self.stages,)),
                 np.asarray(v_next, dtype=float).reshape(lead + (self.dim,))]
        if self.pressure:
            if p_stages is None:
                raise ValueError("Pressure stages are required by this schema")
            parts.append(np.asarray(p_stages, dtype=float).reshape(lead + (self.stages,)))
        return np.concatenate(parts, axis=-1)

    def velocity_column(self, stage: int, component: int) -> int:
        """Output column of velocity component ``component`` at stage ``stage`` (0-based)."""
        return stage * self.dim + component

    def next_column(self, component: int) -> int:
        return self.dim * self.stages + component

    def pressure_column(self, stage: int) -> int:
        return self.dim * (self.stages + 1) + stage


@dataclass
class NetworkParams:
    """Weights (n_out, n_in) and biases (n_out,) per layer."""
    layers: List[Layer]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("A network needs at least one layer")
        previous = None
        for index, (w, b) in enumerate(self.layers):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ValueError(f"Layer {index}: weight {w.shape} and bias {b.shape} do not match")
            if previous is not None and w.shape[1] != previous:
                raise ValueError(f"Layer {index} expects {w.shape[1]} inputs, previous layer gives {previous}")
            previous = w.shape[0]

    @property
    def sizes(self) -> List[int]:
        return [self.layers[0][0].shape[1]] + [w.shape[0] for w, _ in self.layers]

    @property
    def n_inputs(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def n_outputs(self) -> int:
        return self.layers[-1][0].shape[0]

    def arrays(self) -> List[np.ndarray]:
        """Flat list [W1, b1, W2, b2, ...]."""
        out = []
        for w, b in self.layers:
            out.extend([w, b])
        return out

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray]) -> "NetworkParams":
        return cls([(np.asarray(arrays[i], dtype=float), np.asarray(arrays[i + 1], dtype=float))
                    for i in range(0, len(arrays), 2)])


def init_params(layout: Union[NetworkLayout, Sequence[int]], seed: int) -> NetworkParams:
    """Glorot-uniform weights in +-sqrt(6/(n_in+n_out)), zero biases."""
    sizes = layout.sizes if isinstance(layout, NetworkLayout) else tuple(layout)
    if any(int(n) <= 0 for n in sizes):
        raise ValueError(f"Layer widths must be positive, got {list(sizes)}")
    rng = np.random.default_rng(seed)
    layers = []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (n_in + n_out))
        layers.append((rng.uniform(-limit, limit, size=(n_out, n_in)), np.zeros(n_out)))
    return NetworkParams(layers)


def _check_input(n_inputs: int, x: np.ndarray) -> None:
    if x.shape[-1] != n_inputs:
        raise ValueError(f"Input dimension {x.shape[-1]} does not match network input width {n_inputs}")


def forward(params: NetworkParams, x) -> np.ndarray:
    """
    Evaluate the network on one point (n_in,) or a batch (N, n_in).
    """
    x = np.asarray(x, dtype=float)
    _check_input(params.n_inputs, x)
    return np.asarray(forward_layers(params.layers, x))


def forward_layers(layers: Sequence[Tuple], x):
    """Feed-forward recursion through the autodiff primitives (arrays or Variables)."""
    z = x
    last = len(layers) - 1
    for index, (w, b) in enumerate(layers):
        z = ad.add(ad.matmul(z, ad.transpose(w)), b)
        if index < last:
            z = ad.tanh(z)
    return z


def forward_dual(layers: Sequence[Tuple], x: Dual) -> Dual:
    """
    Evaluate the network on a Dual batch input.

    ``layers`` holds (W, b) pairs that may be numpy arrays or tape
    Variables; with Variables the returned value and tangents are recorded
    on the tape.
    """
    z = x
    last = len(layers) - 1
    for index, (w, b) in enumerate(layers):
        z = z @ ad.transpose(w) + b
        if index < last:
            z = z.tanh()
    return z


def flatten(params: NetworkParams) -> np.ndarray:
    return np.concatenate([a.ravel() for a in params.arrays()])


def unflatten(vector: np.ndarray, like: NetworkParams) -> NetworkParams:
    vector = np.asarray(vector, dtype=float)
    expected = sum(a.size for a in like.arrays())
    if vector.size != expected:
        raise ValueError(f"Parameter vector has {vector.size} entries, expected {expected}")
    arrays, offset = [], 0
    for a in like.arrays():
        arrays.append(vector[offset:offset + a.size].reshape(a.shape).copy())
        offset += a.size
    return NetworkParams.from_arrays(arrays)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def format_checkpoint(params: NetworkParams) -> str:
    """
    Text checkpoint: a header line, then per layer a ``W rows cols`` line
    followed by the weights row-major, one value per line, and a ``b n``
    line followed by the biases. Values use 17 significant digits.
    """
    lines = [CHECKPOINT_HEADER, f"layers {len(params.layers)}"]
    for w, b in params.layers:
        lines.append(f"W {w.shape[0]} {w.shape[1]}")
        lines.extend(format(float(v), FLOAT_FORMAT) for v in w.ravel())
        lines.append(f"b {b.shape[0]}")
        lines.extend(format(float(v), FLOAT_FORMAT) for v in b)
    return "\n".join(lines) + "\n"


def parse_checkpoint(text: str) -> NetworkParams:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != CHECKPOINT_HEADER:
        raise ValueError("Not a neural-particles checkpoint")
    try:
        n_layers = int(lines[1].split()[1])
        cursor = 2
        layers = []
        for _ in range(n_layers):
            tag, rows, cols = lines[cursor].split()
            if tag != "W":
                raise ValueError(f"Expected weight block, found '{lines[cursor]}'")
            rows, cols = int(rows), int(cols)
            cursor += 1
            w = np.array([float(v) for v in lines[cursor:cursor + rows * cols]]).reshape(rows, cols)
            cursor += rows * cols
            tag, n = lines[cursor].split()
            if tag != "b":
                raise ValueError(f"Expected bias block, found '{lines[cursor]}'")
            n = int(n)
            cursor += 1
            b = np.array([float(v) for v in lines[cursor:cursor + n]])
            cursor += n
            layers.append((w, b))
    except (IndexError, ValueError) as e:
        raise ValueError(f"Malformed checkpoint: {e}") from e
    return NetworkParams(layers)


def save_checkpoint(params: NetworkParams, path: Union[str, Path]) -> None:
    atomic_write_text(path, format_checkpoint(params))


def load_checkpoint(path: Union[str, Path]) -> NetworkParams:
    return parse_checkpoint(read_file_content(str(path)))
