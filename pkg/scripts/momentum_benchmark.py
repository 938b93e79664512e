"""Iteration-count study for the momentum parameters.

Solves a fixed batch of random l1-regularized quadratic programs with
inequality constraints for every point on a (varrho, delta) grid and
tabulates how many sweeps each configuration needs.  Counts are reported
as observed; no speedup claim is baked in.

Usage:
    python3 scripts/momentum_benchmark.py [--instances 40] [--seed 11]
                                          [--tol 1e-9]
"""

import argparse
import statistics
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from kmprox.prox import ScaledL1Spec, prox_partial_l1
from kmprox.solver import ProblemSpec, SolverConfig, solve

VARRHO_GRID = (0.0, 0.3, 0.6, 0.8, 0.9, -0.5)
DELTA_GRID = (1.0, 3.0, 10.0)


def random_instance(rng):
    """Random strongly convex quadratic + partial-l1 with feasible rows."""
    dim = int(rng.integers(4, 11))
    rows = int(rng.integers(1, min(6, dim) + 1))
    basis, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    spectrum = rng.uniform(0.3, 3.0, dim)
    p_mat = (basis * spectrum) @ basis.T
    p_mat = 0.5 * (p_mat + p_mat.T)
    c = rng.normal(size=dim)
    lam = float(rng.uniform(0.05, 1.0))
    l1_len = int(rng.integers(0, dim + 1))
    q_mat = rng.normal(size=(rows, dim))
    q_mat /= np.linalg.norm(q_mat, axis=1, keepdims=True)
    x_feas = rng.normal(size=dim)
    q_vec = q_mat @ x_feas - rng.uniform(0.2, 1.0, rows)
    problem = ProblemSpec(
        grad_f=lambda x: p_mat @ x + c,
        lipschitz_L=float(np.linalg.eigvalsh(p_mat)[-1]),
        prox_g=lambda v, beta: prox_partial_l1(
            v, ScaledL1Spec(weight=beta * lam, active_len=l1_len)
        ),
        Q=q_mat,
        q=q_vec,
        f_value=lambda x: 0.5 * float(x @ (p_mat @ x)) + float(c @ x),
        g_value=lambda x: lam * float(np.sum(np.abs(x[:l1_len]))),
        l1_weight=lam,
        l1_active_len=l1_len,
    )
    return problem, x_feas


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=40)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--tol", type=float, default=1e-9)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    batch = [random_instance(rng) for _ in range(args.instances)]

    print(
        f"{args.instances} random instances, tol {args.tol:g}, "
        f"iteration budget 10000"
    )
    print(f"{'varrho':>7} {'delta':>6} {'median':>7} {'p90':>6} {'max':>6} "
          f"{'unconverged':>11} {'seconds':>8}")

    for varrho in VARRHO_GRID:
        for delta in DELTA_GRID:
            cfg = SolverConfig(varrho=varrho, delta=delta, tol=args.tol)
            counts = []
            missed = 0
            t0 = time.perf_counter()
            for problem, x_feas in batch:
                res = solve(problem, cfg, x_feas, np.zeros(len(problem.q)))
                counts.append(res.iterations)
                missed += 0 if res.converged else 1
            elapsed = time.perf_counter() - t0
            counts.sort()
            p90 = counts[int(0.9 * (len(counts) - 1))]
            print(
                f"{varrho:>7.2f} {delta:>6.1f} "
                f"{int(statistics.median(counts)):>7} {p90:>6} {counts[-1]:>6} "
                f"{missed:>11} {elapsed:>8.2f}"
            )


if __name__ == "__main__":
    main()
