"""Proximity operators and the spectral-norm routine used for step sizes.

Everything here is plain numpy and fully deterministic: the operators act
componentwise and the spectral norm is a fixed-start power iteration, so
repeated runs produce identical floats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LowerBoundSet",
    "ScaledL1Spec",
    "soft_threshold",
    "prox_partial_l1",
    "prox_indicator_lb",
    "prox_conjugate_indicator",
    "spectral_norm",
]


@dataclass(frozen=True)
class LowerBoundSet:
    """Componentwise constraint set {y : y >= lb} with finite bounds."""

    lb: np.ndarray

    def __post_init__(self):
        lb = np.asarray(self.lb, dtype=float)
        if lb.ndim != 1:
            raise ValueError("lower bound must be a vector")
        if not np.all(np.isfinite(lb)):
            raise ValueError("lower bound entries must be finite")
        object.__setattr__(self, "lb", lb)


@dataclass(frozen=True)
class ScaledL1Spec:
    """Weighted l1 term on the leading components of a vector.

    ``weight`` is the full threshold (step size times the l1 coefficient
    of the objective); components at index >= ``active_len`` are passed
    through untouched by the prox.
    """

    weight: float
    active_len: int

    def __post_init__(self):
        if not np.isfinite(self.weight) or self.weight < 0:
            raise ValueError("l1 weight must be finite and nonnegative")
        if self.active_len < 0:
            raise ValueError("active_len must be nonnegative")


def _bound_array(d) -> np.ndarray:
    if isinstance(d, LowerBoundSet):
        return d.lb
    return np.asarray(d, dtype=float)


def soft_threshold(v, lam: float):
    """Componentwise max(|v| - lam, 0) * sign(v), with sign(0) = 0."""
    if lam < 0:
        raise ValueError("threshold must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)


def prox_partial_l1(v, spec: ScaledL1Spec) -> np.ndarray:
    """Soft threshold the first ``spec.active_len`` components, keep the rest."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError("expected a vector")
    if spec.active_len > v.shape[0]:
        raise ValueError("active_len exceeds vector length")
    out = v.copy()
    head = slice(0, spec.active_len)
    out[head] = soft_threshold(v[head], spec.weight)
    return out


def prox_indicator_lb(y, d) -> np.ndarray:
    """Projection onto {y : y >= d}, i.e. componentwise max(y, d)."""
    y = np.asarray(y, dtype=float)
    return np.maximum(y, _bound_array(d))


def prox_conjugate_indicator(y, d, eta: float) -> np.ndarray:
    """Prox of the conjugate of the indicator of {y >= d}, scaled by eta.

    Computed through the Moreau decomposition: y - eta * max(y / eta, d).
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    y = np.asarray(y, dtype=float)
    return y - eta * np.maximum(y / eta, _bound_array(d))


def spectral_norm(m, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest singular value of ``m`` by power iteration on m.T @ m.

    Deterministic: the start vector is the normalized all-ones vector,
    falling back to canonical basis vectors when a start lies in the null
    space.  Iteration stops once the estimate changes by less than ``tol``
    relative, or at ``max_iter`` sweeps.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.size == 0:
        return 0.0
    n = m.shape[1]

    def run(v):
        sigma = 0.0
        for _ in range(max_iter):
            w = m.T @ (m @ v)
            norm_w = np.linalg.norm(w)
            if norm_w == 0.0:
                return None  # start vector sits in the null space
            v = w / norm_w
            estimate = float(np.linalg.norm(m @ v))
            if abs(estimate - sigma) <= tol * max(estimate, np.finfo(float).tiny):
                return estimate
            sigma = estimate
        return sigma

    starts = [np.ones(n) / np.sqrt(n)]
    starts.extend(np.eye(n)[i] for i in range(n))
    for v0 in starts:
        estimate = run(v0)
        if estimate is not None:
            return estimate
    return 0.0
