"""
Optimizers for per-time-step training: Adam warm-up followed by L-BFGS.

Both work on a flat parameter vector and a loss oracle
``oracle(x) -> (loss, grad)`` or ``(loss, grad, components)``, where
``components`` is a mapping of named loss terms kept in the history.
"""

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Deque, Dict, List, Mapping, Optional, Tuple

import numpy as np

from .config import TrainingSchedule

Oracle = Callable[[np.ndarray], tuple]

REASON_GRADIENT = "gradient_tolerance"
REASON_FUNCTION = "function_tolerance"
REASON_MAX_ITER = "max_iter"
REASON_LINE_SEARCH = "line_search_failed"

CURVATURE_EPS = 1e-12
BRACKET_TOL = 1e-12


class TrainingDivergedError(RuntimeError):
    """Raised when the loss or its gradient stops being finite."""

    def __init__(self, message: str, components: Optional[Mapping[str, float]] = None):
        self.components = dict(components or {})
        super().__init__(message)


@dataclass(frozen=True)
class LossRecord:
    """One row of the loss history."""
    time_step: int
    phase: str
    iteration: int
    loss: float
    components: Mapping[str, float] = field(default_factory=dict)


def _evaluate(oracle: Oracle, x: np.ndarray) -> Tuple[float, np.ndarray, Dict[str, float]]:
    try:
        result = oracle(x)
    except (FloatingPointError, ZeroDivisionError):
        # Non-finite adjoint or singular deformation: an infinitely bad point
        return float("inf"), np.full_like(x, np.nan), {}
    if len(result) == 3:
        loss, grad, components = result
        if hasattr(components, "as_dict"):
            components = components.as_dict()
        components = dict(components or {})
    else:
        loss, grad = result
        components = {}
    return float(loss), np.asarray(grad, dtype=float), components


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdamState:
    """Bias-corrected Adam moments for a flat parameter vector."""
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def zeros(cls, n: int, **settings) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n), **settings)


def adam_step(state: AdamState, params: np.ndarray,
              grad: np.ndarray) -> Tuple[np.ndarray, AdamState]:
    """
    One Adam update. Inputs are not modified.

    Raises:
        TrainingDivergedError: non-finite gradient
        ValueError: moment and parameter lengths differ
    """
    grad = np.asarray(grad, dtype=float)
    if not np.all(np.isfinite(grad)):
        raise TrainingDivergedError("Non-finite gradient in Adam step")
    if state.m.shape != grad.shape or params.shape != grad.shape:
        raise ValueError(f"Shape mismatch: params {params.shape}, grad {grad.shape}, moments {state.m.shape}")

    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return new_params, replace(state, m=m, v=v, t=t)


# ---------------------------------------------------------------------------
# L-BFGS
# ---------------------------------------------------------------------------

@dataclass
class LbfgsState:
    """Curvature pairs and settings of an L-BFGS run."""
    history: int = 10
    c1: float = 1e-4
    c2: float = 0.9
    max_line_search: int = 25
    g_tol: float = 1e-9
    f_tol: float = 1e-12
    max_iter: int = 5000
    s_hist: Deque[np.ndarray] = field(default_factory=deque)
    y_hist: Deque[np.ndarray] = field(default_factory=deque)

    @classmethod
    def from_schedule(cls, schedule: TrainingSchedule) -> "LbfgsState":
        return cls(history=schedule.history, c1=schedule.c1, c2=schedule.c2,
                   max_line_search=schedule.max_line_search, g_tol=schedule.g_tol,
                   f_tol=schedule.f_tol, max_iter=schedule.lbfgs_max_iter)

    def push(self, s: np.ndarray, y: np.ndarray) -> bool:
        """Store a pair if it satisfies the curvature condition."""
        if float(s @ y) <= CURVATURE_EPS:
            return False
        if len(self.s_hist) == self.history:
            self.s_hist.popleft()
            self.y_hist.popleft()
        self.s_hist.append(s)
        self.y_hist.append(y)
        return True

    def reset(self) -> None:
        self.s_hist.clear()
        self.y_hist.clear()

    def direction(self, grad: np.ndarray) -> np.ndarray:
        """Two-loop recursion: -H grad."""
        q = -grad.copy()
        alphas = []
        rhos = [1.0 / float(y @ s) for s, y in zip(self.s_hist, self.y_hist)]
        for s, y, rho in reversed(list(zip(self.s_hist, self.y_hist, rhos))):
            alpha = rho * float(s @ q)
            alphas.append(alpha)
            q -= alpha * y
        if self.s_hist:
            s, y = self.s_hist[-1], self.y_hist[-1]
            q *= float(s @ y) / float(y @ y)
        for (s, y, rho), alpha in zip(zip(self.s_hist, self.y_hist, rhos), reversed(alphas)):
            beta = rho * float(y @ q)
            q += s * (alpha - beta)
        return q


@dataclass(frozen=True)
class LineSearchResult:
    alpha: float
    loss: float
    grad: np.ndarray
    components: Dict[str, float]
    evaluations: int
    wolfe: bool


def _cubic_interpolate(x1, f1, g1, x2, f2, g2, bounds=None) -> float:
    """Minimizer of the cubic through two points with slopes, clamped to bounds."""
    if bounds is not None:
        xmin_bound, xmax_bound = bounds
    else:
        xmin_bound, xmax_bound = (x1, x2) if x1 <= x2 else (x2, x1)

    values = (x1, f1, g1, x2, f2, g2)
    if not all(np.isfinite(v) for v in values) or x1 == x2:
        return (xmin_bound + xmax_bound) / 2.0

    d1 = g1 + g2 - 3 * (f1 - f2) / (x1 - x2)
    d2_square = d1 * d1 - g1 * g2
    if d2_square >= 0:
        d2 = np.sqrt(d2_square)
        if x1 <= x2:
            min_pos = x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2 * d2))
        else:
            min_pos = x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2 * d2))
        if not np.isfinite(min_pos):
            return (xmin_bound + xmax_bound) / 2.0
        return float(min(max(min_pos, xmin_bound), xmax_bound))
    return (xmin_bound + xmax_bound) / 2.0


def strong_wolfe(oracle: Oracle, x: np.ndarray, alpha: float, d: np.ndarray,
                 loss: float, grad: np.ndarray, gtd: float,
                 c1: float = 1e-4, c2: float = 0.9, max_ls: int = 25) -> LineSearchResult:
    """
    Bracketing and zoom line search for the strong Wolfe conditions.

    Non-finite trial losses count as failures of sufficient decrease and are
    resolved by bisection.
    """
    d_norm = float(np.max(np.abs(d)))

    def phi(t):
        f, g, comps = _evaluate(oracle, x + t * d)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            return np.inf, g, comps, np.nan
        return f, g, comps, float(g @ d)

    f_new, g_new, c_new, gtd_new = phi(alpha)
    evals = 1

    t_prev, f_prev, g_prev, c_prev, gtd_prev = 0.0, loss, grad, {}, gtd
    done = False
    ls_iter = 0
    bracket = None
    while ls_iter < max_ls:
        if f_new > loss + c1 * alpha * gtd or (ls_iter > 1 and f_new >= f_prev):
            bracket = [[t_prev, f_prev, g_prev, c_prev, gtd_prev],
                       [alpha, f_new, g_new, c_new, gtd_new]]
            break
        if abs(gtd_new) <= -c2 * gtd:
            bracket = [[alpha, f_new, g_new, c_new, gtd_new]]
            done = True
            break
        if gtd_new >= 0:
            bracket = [[t_prev, f_prev, g_prev, c_prev, gtd_prev],
                       [alpha, f_new, g_new, c_new, gtd_new]]
            break

        min_step = alpha + 0.01 * (alpha - t_prev)
        max_step = alpha * 10
        step = _cubic_interpolate(t_prev, f_prev, gtd_prev, alpha, f_new, gtd_new,
                                  bounds=(min_step, max_step))
        t_prev, f_prev, g_prev, c_prev, gtd_prev = alpha, f_new, g_new, c_new, gtd_new
        alpha = step
        f_new, g_new, c_new, gtd_new = phi(alpha)
        evals += 1
        ls_iter += 1

    if bracket is None:
        bracket = [[0.0, loss, grad, {}, gtd], [alpha, f_new, g_new, c_new, gtd_new]]

    insuf_progress = False
    low, high = (0, 1) if bracket[0][1] <= bracket[-1][1] else (1, 0)
    while not done and ls_iter < max_ls:
        lo_t, hi_t = min(bracket[0][0], bracket[1][0]), max(bracket[0][0], bracket[1][0])
        if (hi_t - lo_t) * d_norm < BRACKET_TOL:
            break

        if np.isfinite(bracket[0][1]) and np.isfinite(bracket[1][1]):
            alpha = _cubic_interpolate(bracket[0][0], bracket[0][1], bracket[0][4],
                                       bracket[1][0], bracket[1][1], bracket[1][4])
        else:
            alpha = 0.5 * (lo_t + hi_t)

        eps = 0.1 * (hi_t - lo_t)
        if min(hi_t - alpha, alpha - lo_t) < eps:
            if insuf_progress or alpha >= hi_t or alpha <= lo_t:
                alpha = hi_t - eps if abs(alpha - hi_t) < abs(alpha - lo_t) else lo_t + eps
                insuf_progress = False
            else:
                insuf_progress = True
        else:
            insuf_progress = False

        f_new, g_new, c_new, gtd_new = phi(alpha)
        evals += 1
        ls_iter += 1

        if f_new > loss + c1 * alpha * gtd or f_new >= bracket[low][1]:
            bracket[high] = [alpha, f_new, g_new, c_new, gtd_new]
            low, high = (0, 1) if bracket[0][1] <= bracket[1][1] else (1, 0)
        else:
            if abs(gtd_new) <= -c2 * gtd:
                done = True
            elif gtd_new * (bracket[high][0] - bracket[low][0]) >= 0:
                bracket[high] = list(bracket[low])
            bracket[low] = [alpha, f_new, g_new, c_new, gtd_new]

    t, f, g, comps, _ = bracket[low if len(bracket) > 1 else 0]
    return LineSearchResult(alpha=float(t), loss=float(f), grad=g, components=comps,
                            evaluations=evals, wolfe=done)


@dataclass
class LbfgsResult:
    params: np.ndarray
    loss: float
    iterations: int
    reason: str
    evaluations: int
    components: Dict[str, float]


def lbfgs_minimize(oracle: Oracle, x0: np.ndarray, state: Optional[LbfgsState] = None,
                   on_iteration: Optional[Callable[[int, float, Dict[str, float]], None]] = None
                   ) -> LbfgsResult:
    """
    Minimize with L-BFGS and a strong Wolfe line search.

    Terminates on gradient max-norm below g_tol, relative loss decrease
    below f_tol, max_iter, or a line search that finds no sufficient
    decrease (the best iterate is returned in that case).

    Raises:
        TrainingDivergedError: the starting point has a non-finite loss
    """
    state = state or LbfgsState()
    x = np.array(x0, dtype=float)
    f, g, comps = _evaluate(oracle, x)
    evaluations = 1
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise TrainingDivergedError(f"Non-finite loss {f} at L-BFGS start", comps)

    if np.max(np.abs(g), initial=0.0) < state.g_tol:
        return LbfgsResult(x, f, 0, REASON_GRADIENT, evaluations, comps)

    for k in range(1, state.max_iter + 1):
        d = state.direction(g)
        gtd = float(g @ d)
        if gtd >= 0:
            # Stale curvature information: restart from steepest descent
            state.reset()
            d = -g
            gtd = float(g @ d)

        alpha = min(1.0, 1.0 / float(np.sum(np.abs(g)))) if k == 1 else 1.0
        search = strong_wolfe(oracle, x, alpha, d, f, g, gtd,
                              c1=state.c1, c2=state.c2, max_ls=state.max_line_search)
        evaluations += search.evaluations
        armijo = search.loss <= f + state.c1 * search.alpha * gtd
        if search.alpha <= 0 or not armijo or not search.loss < f:
            return LbfgsResult(x, f, k - 1, REASON_LINE_SEARCH, evaluations, comps)

        step = search.alpha * d
        state.push(step, search.grad - g)
        x = x + step
        f_prev, f, g, comps = f, search.loss, search.grad, search.components
        if on_iteration is not None:
            on_iteration(k, f, comps)

        if np.max(np.abs(g)) < state.g_tol:
            return LbfgsResult(x, f, k, REASON_GRADIENT, evaluations, comps)
        if (f_prev - f) / max(abs(f_prev), abs(f), 1.0) < state.f_tol:
            return LbfgsResult(x, f, k, REASON_FUNCTION, evaluations, comps)

    return LbfgsResult(x, f, state.max_iter, REASON_MAX_ITER, evaluations, comps)


# ---------------------------------------------------------------------------
# Schedule
# ---------------------------------------------------------------------------

@dataclass
class TrainingResult:
    params: np.ndarray
    loss: float
    components: Dict[str, float]
    history: List[LossRecord]
    adam_iterations: int
    lbfgs_iterations: int
    reason: str
    evaluations: int


def train(oracle: Oracle, x0: np.ndarray, schedule: TrainingSchedule,
          time_step: int = 0, adam_iters: Optional[int] = None) -> TrainingResult:
    """
    Adam warm-up followed by L-BFGS refinement.

    Args:
        oracle: Loss oracle
        x0: Initial flat parameters
        schedule: Learning rate, moments and L-BFGS tolerances
        time_step: Index stored in the loss history
        adam_iters: Number of Adam steps (defaults to schedule.adam_iters)
    """
    n_adam = schedule.adam_iters if adam_iters is None else adam_iters
    history: List[LossRecord] = []
    x = np.array(x0, dtype=float)
    adam = AdamState.zeros(x.size, lr=schedule.adam_lr, beta1=schedule.beta1,
                           beta2=schedule.beta2, epsilon=schedule.epsilon)
    evaluations = 0
    for iteration in range(1, n_adam + 1):
        loss, grad, comps = _evaluate(oracle, x)
        evaluations += 1
        if not np.isfinite(loss):
            raise TrainingDivergedError(
                f"Loss became non-finite at Adam iteration {iteration} of time step {time_step}", comps)
        history.append(LossRecord(time_step, "adam", iteration, loss, comps))
        try:
            x, adam = adam_step(adam, x, grad)
        except TrainingDivergedError as e:
            raise TrainingDivergedError(
                f"{e} at iteration {iteration} of time step {time_step}", comps) from e

    def record(k, f, comps):
        history.append(LossRecord(time_step, "lbfgs", k, f, comps))

    result = lbfgs_minimize(oracle, x, LbfgsState.from_schedule(schedule), on_iteration=record)
    return TrainingResult(params=result.params, loss=result.loss, components=result.components,
                          history=history, adam_iterations=n_adam,
                          lbfgs_iterations=result.iterations, reason=result.reason,
                          evaluations=evaluations + result.evaluations)
