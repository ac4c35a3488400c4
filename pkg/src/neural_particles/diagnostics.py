"""
Diagnostics of fluid runs: energies, gauges, periods and comparisons.
"""

import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import FluidProperties
from .particles import ParticleSet, Tag

FRONT_TOLERANCE = 0.10


@dataclass(frozen=True)
class EnergyRecord:
    """Particle-averaged specific energies at time t; total is their sum."""
    t: float
    E_pressure: float
    E_kinetic: float
    E_potential: float
    E_total: float
    amplitude: float = 0.0
    front_tip: float = 0.0

    def row(self) -> Tuple[float, ...]:
        return (self.t, self.amplitude, self.E_pressure, self.E_kinetic,
                self.E_potential, self.E_total, self.front_tip)

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


def energy_record(particles: ParticleSet, fluid: FluidProperties, t: float = 0.0,
                  amplitude: float = 0.0, front_tip: float = 0.0) -> EnergyRecord:
    """E = p + rho |v|^2 / 2 + rho g y, each averaged over particles."""
    v = particles.velocities
    pressure = float(np.mean(particles.pressure))
    kinetic = float(np.mean(0.5 * fluid.rho * np.sum(v * v, axis=1)))
    potential = float(np.mean(fluid.rho * fluid.gravity * particles.positions[:, 1]))
    return EnergyRecord(t=t, E_pressure=pressure, E_kinetic=kinetic, E_potential=potential,
                        E_total=pressure + kinetic + potential,
                        amplitude=amplitude, front_tip=front_tip)


def gauge_amplitude(particles: ParticleSet, height: float) -> float:
    """Surface elevation at the left wall relative to the still-water height."""
    left = particles.indices(Tag.WALL_LEFT)
    if left.size == 0:
        raise ValueError("No left-wall particles to read the gauge from")
    return float(np.max(particles.positions[left, 1])) - height


def front_tip(particles: ParticleSet) -> float:
    return float(np.max(particles.positions[:, 0]))


def max_speed(particles: ParticleSet) -> float:
    return float(np.max(np.linalg.norm(particles.velocities, axis=1)))


def max_displacement(particles: ParticleSet, initial_positions: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(particles.positions - initial_positions, axis=1)))


def hydrostatic_pressure(y, fluid: FluidProperties, height: float):
    """p = rho g (h - y)."""
    return fluid.rho * fluid.gravity * (height - np.asarray(y, dtype=float))


def pressure_error(particles: ParticleSet, fluid: FluidProperties, height: float) -> Tuple[float, float]:
    """
    RMS deviation of the particle pressures from the hydrostatic solution.

    Returns:
        (absolute RMS, RMS relative to rho g h)
    """
    exact = hydrostatic_pressure(particles.positions[:, 1], fluid, height)
    rms = float(np.sqrt(np.mean((particles.pressure - exact) ** 2)))
    scale = fluid.rho * fluid.gravity * height
    return rms, rms / scale if scale else float("nan")


def symmetry_error(particles: ParticleSet, width: float) -> float:
    """Largest pressure difference between mirror images about x = w/2."""
    pos = particles.positions
    mirrored = np.stack([width - pos[:, 0], pos[:, 1]], axis=1)
    distance = np.linalg.norm(mirrored[:, None, :] - pos[None, :, :], axis=2)
    partner = np.argmin(distance, axis=1)
    return float(np.max(np.abs(particles.pressure - particles.pressure[partner])))


def linear_sloshing_period(width: float, height: float, gravity: float) -> float:
    """First standing-wave period from linear dispersion: 2 pi / sqrt(g k tanh(k h)), k = pi/w."""
    k = math.pi / width
    return 2.0 * math.pi / math.sqrt(gravity * k * math.tanh(k * height))


def zero_crossings(times: Sequence[float], values: Sequence[float]) -> List[float]:
    """Linearly interpolated times where the series changes sign."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    crossings = []
    for i in range(len(v) - 1):
        if v[i] == 0.0:
            crossings.append(float(t[i]))
        elif v[i] * v[i + 1] < 0:
            crossings.append(float(t[i] - v[i] * (t[i + 1] - t[i]) / (v[i + 1] - v[i])))
    return crossings


def estimate_period(times: Sequence[float], values: Sequence[float]) -> Optional[float]:
    """Twice the mean spacing of zero crossings; None with fewer than two."""
    crossings = zero_crossings(times, values)
    if len(crossings) < 2:
        return None
    return 2.0 * float(np.mean(np.diff(crossings)))


def relative_variation(values: Sequence[float]) -> float:
    """(max - min) / |mean| in percent."""
    v = np.asarray(values, dtype=float)
    mean = abs(float(np.mean(v)))
    if mean == 0:
        return 0.0 if np.ptp(v) == 0 else float("inf")
    return 100.0 * float(np.ptp(v)) / mean


def relative_drift(values: Sequence[float]) -> float:
    """(last - first) / |first| in percent."""
    first, last = float(values[0]), float(values[-1])
    if first == 0:
        return 0.0 if last == 0 else float("inf")
    return 100.0 * (last - first) / abs(first)


def is_monotone_decreasing(values: Sequence[float], tol: float = 0.0) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) <= tol))


@dataclass(frozen=True)
class FrontComparison:
    Tstar: float
    Zstar_experiment: float
    Zstar_simulation: float
    relative_error: float
    within_tolerance: bool

    def row(self) -> Tuple:
        return (self.Tstar, self.Zstar_experiment, self.Zstar_simulation,
                self.relative_error, self.within_tolerance)


def dimensionless_time(t: float, gravity: float, length: float, time_scale: float = 2.0) -> float:
    """T* = t sqrt(k g / L)."""
    return t * math.sqrt(time_scale * gravity / length)


def compare_front(simulated: Sequence[Tuple[float, float]],
                  experiment: Sequence[Tuple[float, float]],
                  tolerance: float = FRONT_TOLERANCE) -> List[FrontComparison]:
    """
    Interpolate the simulated front series at the experimental times.

    Experimental points outside the simulated time range are skipped.
    """
    if not simulated:
        return []
    sim = np.asarray(sorted(simulated), dtype=float)
    rows = []
    for tstar, zstar in experiment:
        if tstar < sim[0, 0] or tstar > sim[-1, 0]:
            continue
        z_sim = float(np.interp(tstar, sim[:, 0], sim[:, 1]))
        error = abs(z_sim - zstar) / abs(zstar) if zstar else abs(z_sim)
        rows.append(FrontComparison(tstar, zstar, z_sim, error, error <= tolerance))
    return rows
