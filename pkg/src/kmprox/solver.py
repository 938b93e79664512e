"""Primal-dual proximity solver with Krasnoselskii-Mann momentum.

Solves the two-term model

    min_x  f(x) + g(x)   subject to  Q x >= q

where f is smooth with a known Lipschitz gradient, g is prox-friendly and
the inequality rows are handled through a dual vector.  One sweep updates
the primal point through the prox of g, updates the dual point through the
prox of the conjugate of the constraint indicator, then extrapolates both
with the momentum weight theta_k = varrho * k / (k + delta).

The step sizes (beta, eta) are chosen so that the momentum-free map is an
averaged operator in the norm induced by the block matrix

    W = [[ I/beta, -Q^T ],
         [ -Q,     I/eta ]]

specifically so that lambda_min(W) > L / (2 * xi) with xi = 1 - max(varrho, 0),
which is what makes the momentum loop convergent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .prox import prox_conjugate_indicator, spectral_norm

__all__ = [
    "ProblemSpec",
    "SolverConfig",
    "SolverState",
    "SolverResult",
    "KktReport",
    "StepSizeError",
    "DivergenceError",
    "select_step_sizes",
    "eta_upper_bound",
    "metric_matrix",
    "fixed_point_step",
    "km_step",
    "solve",
    "fixed_point_residual",
    "kkt_report",
]

# Power-iteration estimates of a spectral norm can land a hair below the true
# value; inflating them keeps the derived step sizes strictly inside the
# convergence region.
SPECTRAL_MARGIN = 1e-8

# Norms below this are treated as zero in the relative-change stopping rule,
# where the change is then measured absolutely.
_DENOMINATOR_FLOOR = 1e-300


class StepSizeError(ValueError):
    """A user-supplied step size falls outside the admissible interval."""


class DivergenceError(RuntimeError):
    """The iteration produced non-finite values."""

    def __init__(self, iteration: int):
        super().__init__(
            f"non-finite iterate at iteration {iteration}; "
            "check lipschitz_L and any step-size overrides"
        )
        self.iteration = iteration


@dataclass
class ProblemSpec:
    """Two-term model  min f(x) + g(x)  s.t.  Q x >= q.

    ``prox_g`` maps (vector, scale beta) to the prox of beta*g.  ``f_value``
    and ``g_value`` evaluate the two objective terms so reported objectives
    are exact rather than reconstructed.  When g is a weighted l1 norm on
    the leading components, ``l1_weight``/``l1_active_len`` describe it so
    KKT stationarity can be measured in closed form; leave them at the
    defaults for g == 0.
    """

    grad_f: Callable[[np.ndarray], np.ndarray]
    lipschitz_L: float
    prox_g: Callable[[np.ndarray, float], np.ndarray]
    Q: np.ndarray
    q: np.ndarray
    f_value: Callable[[np.ndarray], float]
    g_value: Callable[[np.ndarray], float]
    l1_weight: float = 0.0
    l1_active_len: int | None = None

    def __post_init__(self):
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.q = np.asarray(self.q, dtype=float)
        if self.q.ndim != 1 or self.Q.shape[0] != self.q.shape[0]:
            raise ValueError("Q and q have mismatched row counts")
        if not np.isfinite(self.lipschitz_L) or self.lipschitz_L <= 0:
            raise ValueError("lipschitz_L must be a positive real")
        if self.l1_weight < 0:
            raise ValueError("l1_weight must be nonnegative")

    @property
    def dim(self) -> int:
        return self.Q.shape[1]


@dataclass
class SolverConfig:
    """Iteration controls; ``beta``/``eta`` override the automatic step sizes."""

    varrho: float = 0.8
    delta: float = 3.0
    tol: float = 1e-8
    max_iter: int = 10_000
    beta: float | None = None
    eta: float | None = None

    def __post_init__(self):
        if not -1.0 < self.varrho < 1.0:
            raise ValueError("varrho must lie in (-1, 1)")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        for name in ("beta", "eta"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise StepSizeError(f"{name} must be positive")


@dataclass
class SolverState:
    """Iterate pair plus the counter and the momentum weight last applied."""

    v: np.ndarray
    y: np.ndarray
    k: int
    theta: float


@dataclass
class SolverResult:
    v: np.ndarray
    y: np.ndarray
    iterations: int
    converged: bool
    final_relative_change: float
    fixed_point_residual: float
    objective: float


@dataclass
class KktReport:
    """Worst-case optimality residuals at a primal-dual pair.

    Multipliers follow the sign convention of constraints written as
    Q x >= q: admissible dual values are nonpositive, and nonzero only on
    active rows.
    """

    feasibility: float
    complementarity: float
    dual_sign: float
    stationarity: float


def select_step_sizes(lipschitz_L: float, norm_Q: float, varrho: float):
    """Admissible (beta, eta, xi) for a model with the given constants.

    beta = xi / L, and eta sits at the midpoint of its admissible interval,
    so both are strictly inside the region where the momentum-free map is
    averaged in the W-norm.
    """
    if lipschitz_L <= 0:
        raise ValueError("lipschitz_L must be positive")
    if norm_Q < 0:
        raise ValueError("norm_Q must be nonnegative")
    if abs(varrho) >= 1:
        raise ValueError("varrho must lie in (-1, 1)")
    xi = 1.0 - max(varrho, 0.0)
    beta = xi / lipschitz_L
    eta = 0.5 * eta_upper_bound(lipschitz_L, norm_Q, beta, varrho)
    return beta, eta, xi


def eta_upper_bound(lipschitz_L: float, norm_Q: float, beta: float, varrho: float) -> float:
    """Supremum of admissible eta for a given beta in (0, 2*xi/L)."""
    xi = 1.0 - max(varrho, 0.0)
    gap = 2.0 * xi - beta * lipschitz_L
    if gap <= 0:
        raise StepSizeError("beta must satisfy beta < 2 * xi / lipschitz_L")
    return 2.0 * xi * gap / (4.0 * beta * xi**2 * norm_Q**2 + lipschitz_L * gap)


def metric_matrix(beta: float, eta: float, Q) -> np.ndarray:
    """Dense block matrix W = [[I/beta, -Q^T], [-Q, I/eta]]."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    m2, m1 = Q.shape
    top = np.hstack([np.eye(m1) / beta, -Q.T])
    bottom = np.hstack([-Q, np.eye(m2) / eta])
    return np.vstack([top, bottom])


def fixed_point_step(v, y, problem: ProblemSpec, beta: float, eta: float):
    """One application of the momentum-free primal-dual map."""
    grad = problem.grad_f(v)
    v_new = problem.prox_g(v - beta * (grad + problem.Q.T @ y), beta)
    u = y / eta + problem.Q @ (2.0 * v_new - v)
    y_new = eta * (u - np.maximum(u, problem.q))
    return v_new, y_new


def km_step(
    state: SolverState,
    problem: ProblemSpec,
    beta: float,
    eta: float,
    varrho: float,
    delta: float,
) -> SolverState:
    """Advance one iteration: momentum-free step, then extrapolation.

    The momentum weight is theta_k = varrho * k / (k + delta), so the very
    first sweep (k = 0) applies no momentum at all and varrho = 0 multiplies
    the extrapolation branch by exactly zero at every k.
    """
    theta = varrho * state.k / (state.k + delta)
    v_half, y_half = fixed_point_step(state.v, state.y, problem, beta, eta)
    v_next = (1.0 + theta) * v_half - theta * state.v
    y_next = (1.0 + theta) * y_half - theta * state.y
    return SolverState(v=v_next, y=y_next, k=state.k + 1, theta=theta)


def _resolve_step_sizes(problem: ProblemSpec, config: SolverConfig):
    """Auto-select or validate (beta, eta) for this problem."""
    margin = 1.0 + SPECTRAL_MARGIN
    L = problem.lipschitz_L * margin
    norm_Q = spectral_norm(problem.Q) * margin
    xi = 1.0 - max(config.varrho, 0.0)

    if config.beta is None:
        beta = xi / L
    else:
        beta = config.beta
        if not beta < 2.0 * xi / L:
            raise StepSizeError(
                f"beta = {beta} is outside (0, {2.0 * xi / L}) for this problem"
            )
    bound = eta_upper_bound(L, norm_Q, beta, config.varrho)
    if config.eta is None:
        eta = 0.5 * bound
    else:
        eta = config.eta
        if not eta < bound:
            raise StepSizeError(
                f"eta = {eta} is outside (0, {bound}) for this problem"
            )
    return beta, eta


def solve(problem: ProblemSpec, config: SolverConfig, v0, y0) -> SolverResult:
    """Run the momentum iteration from (v0, y0).

    Convergence is declared when the relative change of the primal iterate
    drops to ``config.tol`` and the iterate passes a fixed-point-residual
    check (residual at most ``10 * tol * (1 + max|v|)``); the residual check
    guards against the relative-change rule triggering while a slow mode is
    still far from its limit.  The iteration budget is exhausted after the
    sweep with counter value max_iter.
    """
    v0 = np.asarray(v0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    if v0.shape != (problem.dim,):
        raise ValueError("v0 has the wrong dimension")
    if y0.shape != problem.q.shape:
        raise ValueError("y0 has the wrong dimension")

    beta, eta = _resolve_step_sizes(problem, config)
    state = SolverState(v=v0.copy(), y=y0.copy(), k=0, theta=0.0)
    converged = False
    rel_change = np.inf
    residual = None

    while True:
        v_prev = state.v
        state = km_step(state, problem, beta, eta, config.varrho, config.delta)
        if not (np.all(np.isfinite(state.v)) and np.all(np.isfinite(state.y))):
            raise DivergenceError(state.k)
        change = float(np.linalg.norm(state.v - v_prev))
        denom = float(np.linalg.norm(v_prev))
        rel_change = change / denom if denom >= _DENOMINATOR_FLOOR else change
        residual = None
        if rel_change <= config.tol:
            residual = fixed_point_residual(state.v, state.y, problem, beta, eta)
            gate = 10.0 * config.tol * (1.0 + float(np.max(np.abs(state.v), initial=0.0)))
            if residual <= gate:
                converged = True
                break
        if state.k > config.max_iter:
            break

    if residual is None:
        residual = fixed_point_residual(state.v, state.y, problem, beta, eta)
    objective = float(problem.f_value(state.v)) + float(problem.g_value(state.v))
    return SolverResult(
        v=state.v,
        y=state.y,
        iterations=state.k,
        converged=converged,
        final_relative_change=rel_change,
        fixed_point_residual=residual,
        objective=objective,
    )


def fixed_point_residual(v, y, problem: ProblemSpec, beta: float, eta: float) -> float:
    """Max-norm distance of (v, y) from one application of the two prox maps.

    Zero exactly at the primal-dual fixed points of the iteration, which
    coincide with the saddle points of the constrained model.
    """
    v = np.asarray(v, dtype=float)
    y = np.asarray(y, dtype=float)
    grad = problem.grad_f(v)
    v_image = problem.prox_g(v - beta * (grad + problem.Q.T @ y), beta)
    y_image = prox_conjugate_indicator(y + eta * (problem.Q @ v), problem.q, eta)
    r_primal = float(np.max(np.abs(v - v_image))) if v.size else 0.0
    r_dual = float(np.max(np.abs(y - y_image))) if y.size else 0.0
    return max(r_primal, r_dual)


def kkt_report(
    v,
    y,
    problem: ProblemSpec,
    active_tol: float = 1e-8,
    zero_tol: float = 1e-10,
) -> KktReport:
    """Structured KKT residuals at (v, y).

    ``active_tol`` decides which rows count as active (relative to 1 + |q|);
    components of v within ``zero_tol`` of zero use the full l1 subgradient
    interval in the stationarity distance.
    """
    v = np.asarray(v, dtype=float)
    y = np.asarray(y, dtype=float)
    slack = problem.Q @ v - problem.q

    feasibility = float(max(0.0, -np.min(slack)))
    complementarity = float(np.max(np.abs(y * slack)))

    active = slack <= active_tol * (1.0 + np.abs(problem.q))
    dual_sign = float(max(0.0, np.max(y[active], initial=-np.inf)))

    # distance of -grad f - Q^T y to the subdifferential of g
    target = -(problem.grad_f(v) + problem.Q.T @ y)
    weight = problem.l1_weight
    head = problem.l1_active_len
    if head is None:
        head = v.shape[0] if weight > 0 else 0
    dist = np.abs(target)
    if head > 0:
        t_head = target[:head]
        v_head = v[:head]
        at_zero = np.abs(v_head) <= zero_tol
        dist_head = np.abs(t_head - weight * np.sign(v_head))
        dist_head[at_zero] = np.maximum(np.abs(t_head[at_zero]) - weight, 0.0)
        dist[:head] = dist_head
    stationarity = float(np.linalg.norm(dist))

    return KktReport(
        feasibility=feasibility,
        complementarity=complementarity,
        dual_sign=dual_sign,
        stationarity=stationarity,
    )
