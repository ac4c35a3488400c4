"""
Gauss-Legendre implicit Runge-Kutta tableaus and the stage algebra.

Arrays follow a stage-last convention: per-particle stage quantities have
shape (..., s), so the tableau sums are right-multiplications by A^T or b.
All functions accept tape Variables for the stage quantities (2-D at most)
as well as plain numpy arrays of any rank.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from . import autodiff as ad

MAX_STAGES = 100
NEWTON_MAX_ITER = 100


@dataclass(frozen=True)
class ButcherTableau:
    """Coefficients of an s-stage scheme: a (s, s), b (s,), c (s,)."""
    s: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @property
    def order(self) -> int:
        return 2 * self.s


def _legendre(n: int, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """P_n(x) and P_n'(x) on [-1, 1] by the three-term recurrence."""
    p_prev = np.ones_like(x)
    p = x.copy()
    if n == 0:
        return p_prev, np.zeros_like(x)
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def _legendre_roots(s: int) -> Tuple[np.ndarray, np.ndarray]:
    """Roots of P_s by Newton iteration from Chebyshev-type guesses, plus P_s' there."""
    k = np.arange(1, s + 1)
    x = np.cos(np.pi * (4 * k - 1) / (4 * s + 2))
    for _ in range(NEWTON_MAX_ITER):
        p, dp = _legendre(s, x)
        step = p / dp
        x = x - step
        if np.max(np.abs(step)) < 1e-15:
            break
    else:
        raise RuntimeError(f"Newton iteration for the degree-{s} Legendre roots did not converge")
    p, dp = _legendre(s, x)
    if np.max(np.abs(p) / np.maximum(1.0, np.abs(dp))) >= 1e-14:
        raise RuntimeError(f"Legendre root residual too large for s={s}")
    return x, dp


def _barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    """Barycentric weights, rescaled through logarithms to avoid overflow."""
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    log_mag = -np.sum(np.log(np.abs(diff)), axis=1)
    sign = np.prod(np.sign(diff), axis=1)
    return sign * np.exp(log_mag - log_mag.max())


def _lagrange_basis(nodes: np.ndarray, weights: np.ndarray, t: np.ndarray) -> np.ndarray:
    """ell_i(t) for every node i and every point t; shape (len(t), len(nodes))."""
    t = np.asarray(t, dtype=float).ravel()
    out = np.empty((t.size, nodes.size))
    for row, point in enumerate(t):
        delta = point - nodes
        hit = np.flatnonzero(delta == 0.0)
        if hit.size:
            out[row] = 0.0
            out[row, hit[0]] = 1.0
            continue
        terms = weights / delta
        out[row] = terms / terms.sum()
    return out


@lru_cache(maxsize=None)
def gauss_legendre(s: int) -> ButcherTableau:
    """
    s-stage Gauss-Legendre tableau (order 2s).

    c are the roots of the shifted Legendre polynomial on (0, 1), b the
    Gauss weights and a_ji the integral of the i-th Lagrange basis
    polynomial from 0 to c_j. The integral is evaluated with the same
    Gauss rule after substituting tau = c_j u, which is exact for the
    degree s-1 integrand.

    Raises:
        ValueError: s outside 1..100
        RuntimeError: root finding failed
    """
    if not isinstance(s, (int, np.integer)) or not 1 <= s <= MAX_STAGES:
        raise ValueError(f"Stage count must be an integer in [1, {MAX_STAGES}], got {s!r}")
    s = int(s)

    x, dp = _legendre_roots(s)
    order = np.argsort(x)
    x, dp = x[order], dp[order]
    c = 0.5 * (1.0 + x)
    b = 1.0 / ((1.0 - x * x) * dp * dp)

    # Enforce the reflection symmetry of the Gauss rule exactly
    c = 0.5 * (c + (1.0 - c[::-1]))
    b = 0.5 * (b + b[::-1])
    b = b / b.sum()

    weights = _barycentric_weights(c)
    a = np.empty((s, s))
    for j in range(s):
        basis = _lagrange_basis(c, weights, c[j] * c)
        a[j] = c[j] * (b @ basis)

    for arr in (a, b, c):
        arr.setflags(write=False)
    return ButcherTableau(s=s, a=a, b=b, c=c)


def _check_stages(tableau: ButcherTableau, *arrays) -> None:
    for arr in arrays:
        shape = ad.value_of(arr).shape
        if not shape or shape[-1] != tableau.s:
            raise ValueError(f"Stage axis has length {shape[-1] if shape else 0}, expected {tableau.s}")


def velocity_estimates(tableau: ButcherTableau, v_n, v_stages, v_next, accel, dt: float):
    """
    Rearranged velocity update giving estimates of the known velocity v_n.

    Returns:
        (estimates per stage (..., s), estimate from the final velocity (...))
        i.e. v^j - dt * sum_i a_ji acc^i and v_{n+1} - dt * sum_j b_j acc^j
    """
    _check_stages(tableau, v_stages, accel)
    expected = ad.value_of(v_next).shape
    if ad.value_of(v_n).shape not in ((), expected):
        raise ValueError(f"v_n shape {ad.value_of(v_n).shape} does not match v_next {expected}")
    stages = ad.sub(v_stages, ad.mul(dt, ad.matmul(accel, tableau.a.T)))
    final = ad.sub(v_next, ad.mul(dt, ad.matmul(accel, tableau.b)))
    return stages, final


def position_update(tableau: ButcherTableau, x_n, v_stages, dt: float):
    """
    Stage and final positions from the velocity stages.

    Returns:
        (x^j (..., s), x_{n+1} (...))
    """
    _check_stages(tableau, v_stages)
    x_n = np.asarray(x_n, dtype=float)
    stages = ad.add(x_n[..., None], ad.mul(dt, ad.matmul(v_stages, tableau.a.T)))
    final = ad.add(x_n, ad.mul(dt, ad.matmul(v_stages, tableau.b)))
    return stages, final


def tableau_rows(tableau: ButcherTableau):
    """Rows (c_j, a_j1..a_js) for display."""
    return [(float(tableau.c[j]), [float(v) for v in tableau.a[j]]) for j in range(tableau.s)]
