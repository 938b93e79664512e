"""Adaptive-return Markowitz model with an l1 penalty, solved per window.

Given a window of gross price relatives X (T periods by N assets), the
model picks portfolio weights w and a return level rho jointly:

    min_{w, rho}  (1/T) * || R w - rho * 1 ||^2  +  tau * || w ||_1
    subject to    mean_returns(w) = rho,  sum(w) = 1,  rho_lo <= rho <= rho_hi

with R = X - 1 the net returns over the window.  Stacking v = (w, rho),
the quadratic term is (1/T) * ||r_ext v||^2 for r_ext = [R, -1], the l1
penalty deliberately skips the trailing rho component, and the two
equalities are written as paired inequality rows so the whole model fits
the generic inequality-constrained solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .prox import ScaledL1Spec, prox_partial_l1, spectral_norm
from .solver import ProblemSpec, SolverConfig, SolverResult, solve

__all__ = [
    "MarkowitzParams",
    "AssembledProblem",
    "FeasibilityReport",
    "Portfolio",
    "assemble",
    "risk_value",
    "risk_gradient",
    "solve_window",
]


@dataclass
class MarkowitzParams:
    """Model parameters: l1 strength and the admissible return-level band.

    ``rho_lo`` == ``rho_hi`` pins the return level to a single value (the
    fixed-target variant of the model); ``rho_lo`` > ``rho_hi`` makes the
    model infeasible and is rejected here.
    """

    tau: float = 1.0
    rho_lo: float = 0.03
    rho_hi: float = 0.1
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if not np.isfinite(self.tau) or self.tau < 0:
            raise ValueError("tau must be finite and nonnegative")
        if self.rho_lo <= 0 or self.rho_hi <= 0:
            raise ValueError("return-level bounds must be positive")
        if self.rho_lo > self.rho_hi:
            raise ValueError("rho_lo exceeds rho_hi: the model is infeasible")


@dataclass
class AssembledProblem:
    """Window-level data in solver form.

    ``constraint_matrix`` stacks the return-level and budget equalities as
    (A; -A) plus the two rho bound rows, giving six inequality rows over
    v = (w, rho); ``lipschitz_L`` is the gradient Lipschitz constant
    (2/T) * ||r_ext^T r_ext||_2 of the quadratic term.
    """

    r_ext: np.ndarray
    mean_returns: np.ndarray
    constraint_matrix: np.ndarray
    constraint_rhs: np.ndarray
    n_assets: int
    window_len: int
    lipschitz_L: float


@dataclass
class FeasibilityReport:
    """How far the solved weights sit from the model's equality/bound rows."""

    budget_error: float
    return_error: float
    rho_low_gap: float
    rho_high_gap: float


@dataclass
class Portfolio:
    weights: np.ndarray
    rho: float
    diagnostics: FeasibilityReport
    solver: SolverResult


def assemble(returns, params: MarkowitzParams) -> AssembledProblem:
    """Build the solver-ready model from a window of net returns."""
    R = np.atleast_2d(np.asarray(returns, dtype=float))
    if not np.all(np.isfinite(R)):
        raise ValueError("returns must be finite")
    T, N = R.shape
    if T < 1 or N < 1:
        raise ValueError("returns window must be nonempty")

    mu = R.mean(axis=0)
    r_ext = np.hstack([R, -np.ones((T, 1))])

    A = np.zeros((2, N + 1))
    A[0, :N] = mu
    A[0, N] = -1.0
    A[1, :N] = 1.0
    b = np.array([0.0, 1.0])
    B = np.zeros((2, N + 1))
    B[0, N] = 1.0
    B[1, N] = -1.0
    c = np.array([params.rho_lo, -params.rho_hi])

    constraint_matrix = np.vstack([A, -A, B])
    constraint_rhs = np.concatenate([b, -b, c])
    lipschitz_L = (2.0 / T) * spectral_norm(r_ext) ** 2

    return AssembledProblem(
        r_ext=r_ext,
        mean_returns=mu,
        constraint_matrix=constraint_matrix,
        constraint_rhs=constraint_rhs,
        n_assets=N,
        window_len=T,
        lipschitz_L=lipschitz_L,
    )


def risk_value(problem: AssembledProblem, v) -> float:
    """Quadratic term (1/T) * ||r_ext v||^2."""
    r = problem.r_ext @ np.asarray(v, dtype=float)
    return float(r @ r) / problem.window_len


def risk_gradient(problem: AssembledProblem, v) -> np.ndarray:
    """Gradient (2/T) * r_ext^T (r_ext v) of the quadratic term."""
    v = np.asarray(v, dtype=float)
    return (2.0 / problem.window_len) * (problem.r_ext.T @ (problem.r_ext @ v))


def build_problem(assembled: AssembledProblem, params: MarkowitzParams) -> ProblemSpec:
    """Wire an assembled model into the generic solver's problem interface."""
    N = assembled.n_assets
    tau = params.tau
    return ProblemSpec(
        grad_f=lambda v: risk_gradient(assembled, v),
        lipschitz_L=assembled.lipschitz_L,
        prox_g=lambda v, beta: prox_partial_l1(
            v, ScaledL1Spec(weight=beta * tau, active_len=N)
        ),
        Q=assembled.constraint_matrix,
        q=assembled.constraint_rhs,
        f_value=lambda v: risk_value(assembled, v),
        g_value=lambda v: tau * float(np.abs(v[:N]).sum()),
        l1_weight=tau,
        l1_active_len=N,
    )


def solve_window(relatives, params: MarkowitzParams) -> Portfolio:
    """Solve one window of gross price relatives for (weights, rho).

    The start point is the equal-weight portfolio with rho at the middle of
    its band, and the dual start is the image of that point under the
    constraint rows.
    """
    X = np.atleast_2d(np.asarray(relatives, dtype=float))
    if not np.all(np.isfinite(X)) or np.any(X <= 0):
        raise ValueError("price relatives must be positive and finite")

    assembled = assemble(X - 1.0, params)
    N = assembled.n_assets

    problem = build_problem(assembled, params)

    v0 = np.full(N + 1, 1.0 / N)
    v0[N] = 0.5 * (params.rho_lo + params.rho_hi)
    y0 = assembled.constraint_matrix @ v0

    result = solve(problem, params.solver, v0, y0)
    weights = result.v[:N]
    rho = float(result.v[N])
    diagnostics = FeasibilityReport(
        budget_error=abs(float(weights.sum()) - 1.0),
        return_error=abs(float(weights @ assembled.mean_returns) - rho),
        rho_low_gap=max(0.0, params.rho_lo - rho),
        rho_high_gap=max(0.0, rho - params.rho_hi),
    )
    return Portfolio(weights=weights, rho=rho, diagnostics=diagnostics, solver=result)
