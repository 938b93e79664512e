"""Shared randomized instance families used across the test suite.

Two families are produced here:

* small constrained quadratic + partial-l1 programs with a known interior
  point, spectrum control, and unit-norm constraint rows (kept inside the
  regime where the first-order iteration closes the duality gap within the
  default iteration budget);
* synthetic return windows whose per-asset means are placed inside the
  adaptive return band, so the portfolio model has a well-scaled optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kmprox import ProblemSpec
from kmprox.prox import ScaledL1Spec, prox_partial_l1


@dataclass(frozen=True)
class QuadraticL1Instance:
    """A concrete instance of min 0.5 x'Px + c'x + lam*||x[:l1_len]||_1
    subject to Qx >= q, with a strictly feasible point retained."""

    p_mat: np.ndarray
    c: np.ndarray
    lam: float
    l1_len: int
    q_mat: np.ndarray
    q_vec: np.ndarray
    x_feas: np.ndarray
    problem: ProblemSpec


def random_quadratic_l1(rng: np.random.Generator) -> QuadraticL1Instance:
    """Draw a random instance with dimensions m1 in [2, 10], rows in [1, 6].

    The quadratic's spectrum is drawn from [0.3, 3] under a Haar rotation and
    the constraint rows are normalized, which keeps every draw inside the
    regime where the default iteration budget suffices for convergence.
    Rows never exceed the dimension, avoiding degenerate vertex optima whose
    nonunique multipliers slow the dual iteration to a crawl.
    """
    m1 = int(rng.integers(2, 11))
    m2 = int(rng.integers(1, min(6, m1) + 1))
    basis, _ = np.linalg.qr(rng.normal(size=(m1, m1)))
    spectrum = rng.uniform(0.3, 3.0, m1)
    p_mat = (basis * spectrum) @ basis.T
    p_mat = 0.5 * (p_mat + p_mat.T)
    c = rng.normal(size=m1)
    lam = float(rng.uniform(0.05, 1.2))
    l1_len = int(rng.integers(0, m1 + 1))
    q_mat = rng.normal(size=(m2, m1))
    q_mat /= np.linalg.norm(q_mat, axis=1, keepdims=True)
    x_feas = rng.normal(size=m1)
    q_vec = q_mat @ x_feas - rng.uniform(0.2, 1.0, m2)
    problem = build_quadratic_l1_problem(p_mat, c, lam, l1_len, q_mat, q_vec)
    return QuadraticL1Instance(
        p_mat=p_mat,
        c=c,
        lam=lam,
        l1_len=l1_len,
        q_mat=q_mat,
        q_vec=q_vec,
        x_feas=x_feas,
        problem=problem,
    )


def build_quadratic_l1_problem(p_mat, c, lam, l1_len, q_mat, q_vec) -> ProblemSpec:
    p_mat = np.asarray(p_mat, dtype=float)
    c = np.asarray(c, dtype=float)

    def grad(x):
        return p_mat @ x + c

    def prox(v, beta):
        return prox_partial_l1(v, ScaledL1Spec(weight=beta * lam, active_len=l1_len))

    def f_value(x):
        return 0.5 * float(x @ (p_mat @ x)) + float(c @ x)

    def g_value(x):
        return lam * float(np.sum(np.abs(x[:l1_len])))

    return ProblemSpec(
        grad_f=grad,
        lipschitz_L=float(np.linalg.eigvalsh(p_mat)[-1]),
        prox_g=prox,
        Q=q_mat,
        q=q_vec,
        f_value=f_value,
        g_value=g_value,
        l1_weight=lam,
        l1_active_len=l1_len,
    )


def random_return_window(rng: np.random.Generator, n_assets=None, window_len=None):
    """Price-relative window whose per-asset mean returns sit inside the
    default adaptive band [0.03, 0.1], keeping the portfolio model in its
    well-scaled regime (interior return level, moderate multipliers)."""
    if n_assets is None:
        n_assets = int(rng.integers(2, 21))
    if window_len is None:
        window_len = int(rng.integers(5, 31))
    while True:
        raw = np.exp(rng.normal(0.0, 0.2, (window_len, n_assets)))
        means = rng.uniform(0.04, 0.09, n_assets)
        relatives = raw - raw.mean(axis=0) + 1.0 + means
        if relatives.min() > 0.005:
            return relatives


def smooth_price_history(rng: np.random.Generator, periods: int, n_assets: int,
                         base_window: int = 3, sigma: float = 0.15,
                         jitter: float = 0.003):
    """Gross-relative history whose rolling windows all solve cleanly.

    The noise is a zero-column-sum pattern of length ``base_window`` tiled
    over the horizon, plus a small jitter.  Any window whose length is a
    multiple of ``base_window`` then has column means within the jitter of
    the per-asset shifts, which sit inside the default return band; the
    pattern itself carries enough spread to keep the columns far from
    collinear, so the window solves stay well conditioned."""
    shifts = rng.uniform(0.055, 0.075, size=n_assets)
    while True:
        pattern = rng.normal(0.0, sigma, size=(base_window, n_assets))
        pattern -= pattern.mean(axis=0)
        reps = -(-periods // base_window)
        tiled = np.tile(pattern, (reps, 1))[:periods]
        noise = rng.normal(0.0, jitter, size=(periods, n_assets))
        relatives = 1.0 + shifts + tiled + noise
        if relatives.min() > 0.05:
            return relatives


def yyyymm_labels(start_year: int, count: int):
    """Consecutive monthly YYYYMM integers starting in January."""
    labels = []
    year, month = start_year, 1
    for _ in range(count):
        labels.append(year * 100 + month)
        month += 1
        if month > 12:
            year, month = year + 1, 1
    return labels


def percent_csv_text(relatives, labels, names=None):
    """Render gross relatives as the percent-return CSV the loader expects."""
    relatives = np.asarray(relatives, dtype=float)
    if names is None:
        names = [f"asset_{j + 1}" for j in range(relatives.shape[1])]
    lines = ["Date," + ",".join(names)]
    for label, row in zip(labels, relatives):
        percents = ",".join(f"{100.0 * (x - 1.0):.10f}" for x in row)
        lines.append(f"{label},{percents}")
    return "\n".join(lines) + "\n"
