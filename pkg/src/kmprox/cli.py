"""Command-line front end.

Four subcommands: ``solve`` one window, ``backtest`` the full protocol
against the equal-weight and buy-and-hold baselines, ``metrics`` on stored
wealth series, and ``sweep`` one model parameter across a value grid.
Outputs are deterministic: the same configuration and data produce
byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 solver
failure (non-convergence or divergence), 5 bankruptcy.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .backtest import (
    DegenerateSeriesError,
    MetricsReport,
    WealthSeries,
    WindowFailure,
    alpha_factor,
    baseline_equal_weight,
    baseline_market,
    compute_metrics,
    max_drawdown,
    run_backtest,
    sharpe_ratio,
)
from .data_io import (
    DataFormatError,
    export_portfolios_csv,
    export_report,
    export_wealth_csv,
    format_real,
    load_returns_csv,
    load_wealth_csv,
)
from .markowitz import MarkowitzParams, solve_window
from .solver import DivergenceError, SolverConfig, StepSizeError, kkt_report

__all__ = ["RunConfig", "main", "cmd_solve", "cmd_backtest", "cmd_sweep", "cmd_metrics"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_SOLVER = 4
EXIT_BANKRUPT = 5

DATA_DIR_ENV = "KMPROX_DATA_DIR"
DEFAULT_TC_RATES = (0.0, 0.001, 0.002, 0.003, 0.004, 0.005)

_SWEEPABLE = ("tau", "rho-lo", "rho-hi", "varrho", "delta", "window")


class _NotConverged(RuntimeError):
    pass


@dataclass
class RunConfig:
    """Parsed flag values shared by the data-driven subcommands."""

    data: str
    date_from: int | None = None
    date_to: int | None = None
    window: int = 18
    tau: float = 1.0
    rho_lo: float = 0.03
    rho_hi: float = 0.1
    varrho: float = 0.8
    delta: float = 3.0
    tol: float = 1e-8
    max_iter: int = 10_000
    tc_rates: tuple[float, ...] = DEFAULT_TC_RATES
    out: str | None = None
    fmt: str = "json"
    gross_relatives: bool = False
    seed: int = 0  # reserved for randomized utilities; the pipeline itself is deterministic

    def params(self) -> MarkowitzParams:
        return MarkowitzParams(
            tau=self.tau,
            rho_lo=self.rho_lo,
            rho_hi=self.rho_hi,
            solver=SolverConfig(
                varrho=self.varrho,
                delta=self.delta,
                tol=self.tol,
                max_iter=self.max_iter,
            ),
        )


def _parse_tc_rates(text: str) -> tuple[float, ...]:
    try:
        rates = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad --tc-rates value {text!r}") from exc
    if not rates or any(not 0.0 <= nu < 1.0 for nu in rates):
        raise argparse.ArgumentTypeError("--tc-rates values must lie in [0, 1)")
    return rates


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kmprox",
        description="Constrained Markowitz portfolios through a proximal "
        "primal-dual solver with Krasnoselskii-Mann momentum.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    data_flags = argparse.ArgumentParser(add_help=False)
    data_flags.add_argument("--data", required=True,
                            help=f"return file; bare names resolve under ${DATA_DIR_ENV}")
    data_flags.add_argument("--from", dest="date_from", type=int, default=None,
                            metavar="YYYYMM", help="first period kept (inclusive)")
    data_flags.add_argument("--to", dest="date_to", type=int, default=None,
                            metavar="YYYYMM", help="last period kept (inclusive)")
    data_flags.add_argument("--gross-relatives", action="store_true",
                            help="file already holds gross price relatives, skip 1 + r/100")

    model_flags = argparse.ArgumentParser(add_help=False)
    model_flags.add_argument("--window", type=int, default=18)
    model_flags.add_argument("--tau", type=float, default=1.0)
    model_flags.add_argument("--rho-lo", type=float, default=0.03)
    model_flags.add_argument("--rho-hi", type=float, default=0.1)
    model_flags.add_argument("--varrho", type=float, default=0.8)
    model_flags.add_argument("--delta", type=float, default=3.0)
    model_flags.add_argument("--tol", type=float, default=1e-8)
    model_flags.add_argument("--max-iter", type=int, default=10_000)
    model_flags.add_argument("--seed", type=int, default=0)

    # The shared --format action is one object across subparsers, so its
    # default stays None here; each command resolves its own fallback.
    out_flags = argparse.ArgumentParser(add_help=False)
    out_flags.add_argument("--out", default=None, help="output directory")
    out_flags.add_argument("--format", dest="fmt", choices=("csv", "json"),
                           default=None)

    p_solve = sub.add_parser("solve", parents=[data_flags, model_flags, out_flags],
                             help="solve the most recent window of the selection")
    p_solve.set_defaults(func=_run_solve)

    p_back = sub.add_parser("backtest", parents=[data_flags, model_flags, out_flags],
                            help="moving-window backtest against both baselines")
    p_back.add_argument("--tc-rates", type=_parse_tc_rates, default=DEFAULT_TC_RATES)
    p_back.set_defaults(func=_run_backtest)

    p_sweep = sub.add_parser("sweep", parents=[data_flags, model_flags, out_flags],
                             help="re-run the backtest across one parameter grid")
    p_sweep.add_argument("--sweep-param", required=True, choices=_SWEEPABLE)
    p_sweep.add_argument("--sweep-values", required=True,
                         help="comma-separated grid, e.g. 0.5,1,2")
    p_sweep.set_defaults(func=_run_sweep)

    p_metrics = sub.add_parser("metrics", parents=[out_flags],
                               help="recompute metrics on stored wealth series")
    p_metrics.add_argument("--wealth", required=True, help="wealth series CSV")
    p_metrics.add_argument("--market", default=None,
                           help="market wealth series CSV for the alpha test")
    p_metrics.set_defaults(func=_run_metrics)

    return parser


def _resolve_data_path(raw: str) -> Path:
    path = Path(raw)
    if path.exists() or path.is_absolute():
        return path
    base = os.environ.get(DATA_DIR_ENV)
    if base:
        candidate = Path(base) / path
        if candidate.exists():
            return candidate
    return path


def _default_fmt(args: argparse.Namespace) -> str:
    if args.fmt is not None:
        return args.fmt
    return "csv" if args.command == "sweep" else "json"


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        data=args.data,
        date_from=args.date_from,
        date_to=args.date_to,
        window=args.window,
        tau=args.tau,
        rho_lo=args.rho_lo,
        rho_hi=args.rho_hi,
        varrho=args.varrho,
        delta=args.delta,
        tol=args.tol,
        max_iter=args.max_iter,
        tc_rates=getattr(args, "tc_rates", DEFAULT_TC_RATES),
        out=args.out,
        fmt=_default_fmt(args),
        gross_relatives=args.gross_relatives,
        seed=args.seed,
    )


def _out_dir(cfg_out: str | None) -> Path | None:
    if cfg_out is None:
        return None
    out = Path(cfg_out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_matrix(cfg: RunConfig):
    return load_returns_csv(
        _resolve_data_path(cfg.data),
        date_from=cfg.date_from,
        date_to=cfg.date_to,
        gross_relatives=cfg.gross_relatives,
    )


def cmd_solve(cfg: RunConfig) -> int:
    """Solve the last ``window`` periods of the selected range."""
    params = cfg.params()
    if cfg.window < 1:
        raise ValueError("window must be at least 1")
    matrix = _load_matrix(cfg)
    if matrix.data.shape[0] < cfg.window:
        raise DataFormatError(
            f"selection holds {matrix.data.shape[0]} periods, fewer than the "
            f"window of {cfg.window}"
        )
    window = matrix.data[-cfg.window :]
    portfolio = solve_window(window, params)
    result = portfolio.solver

    print(f"iterations {result.iterations}  converged {result.converged}")
    print(f"objective {format_real(result.objective)}  rho {format_real(portfolio.rho)}")
    print(f"fixed-point residual {format_real(result.fixed_point_residual)}")
    for name, w in zip(matrix.asset_names, portfolio.weights):
        print(f"  {name}  {format_real(w)}")

    out = _out_dir(cfg.out)
    if out is not None:
        _write_solution(out / f"solution.{cfg.fmt}", cfg.fmt, matrix.asset_names,
                        portfolio)
    return EXIT_OK if result.converged else EXIT_SOLVER


def _write_solution(path: Path, fmt: str, names, portfolio) -> None:
    result = portfolio.solver
    payload: dict[str, object] = {
        "converged": result.converged,
        "iterations": result.iterations,
        "objective": result.objective,
        "rho": portfolio.rho,
        "fixed_point_residual": result.fixed_point_residual,
        "budget_error": portfolio.diagnostics.budget_error,
        "return_error": portfolio.diagnostics.return_error,
    }
    payload.update(
        (f"weight_{n}", float(w)) for n, w in zip(names, portfolio.weights)
    )
    if fmt == "json":
        content = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        lines = ["key,value"]
        for k, v in payload.items():
            lines.append(f"{k},{format_real(v) if isinstance(v, float) else v}")
        content = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(content)


def _market_portfolios(X: np.ndarray, upto: int) -> np.ndarray:
    """Drifting buy-and-hold weights, one row per period."""
    n = X.shape[1]
    stakes = np.vstack([np.ones(n), np.cumprod(X, axis=0)[:-1]])[:upto]
    return stakes / stakes.sum(axis=1, keepdims=True)


def _backtest_all(cfg: RunConfig, params: MarkowitzParams, matrix):
    """Run the model strategy plus both baselines on one data selection."""
    X = matrix.data

    def strategy(window: np.ndarray) -> np.ndarray:
        portfolio = solve_window(window, params)
        if not portfolio.solver.converged:
            raise _NotConverged(
                f"window solve stopped at {portfolio.solver.iterations} iterations "
                f"with relative change {portfolio.solver.final_relative_change:g}"
            )
        return portfolio.weights

    result = run_backtest(X, cfg.window, strategy)
    equal = baseline_equal_weight(X)
    market = baseline_market(X)
    return result, equal, market


def cmd_backtest(cfg: RunConfig) -> int:
    """Full protocol; writes wealth series, per-strategy metrics, the
    portfolio history, and the transaction-cost curve."""
    params = cfg.params()
    if cfg.window < 1:
        raise ValueError("window must be at least 1")
    matrix = _load_matrix(cfg)
    result, equal, market = _backtest_all(cfg, params, matrix)
    X = matrix.data
    labels = matrix.period_labels
    out = _out_dir(cfg.out)

    if out is not None:
        held = result.wealth.periods
        export_wealth_csv(result.wealth.values, labels[:held], out / "wealth_adaptive.csv")
        export_wealth_csv(equal.values, labels, out / "wealth_equal_weight.csv")
        export_wealth_csv(market.values, labels, out / "wealth_market.csv")
        export_portfolios_csv(result.portfolios, labels[:held], matrix.asset_names,
                              out / "portfolios_adaptive.csv")

    if result.bankrupt_at is not None:
        print(f"bankrupt at period {result.bankrupt_at} "
              f"({labels[result.bankrupt_at - 1]}); wealth series truncated")
        return EXIT_BANKRUPT

    total = X.shape[0]
    reports = {
        "adaptive": compute_metrics(result.wealth, market, X, result.portfolios,
                                    cfg.tc_rates),
        "equal_weight": compute_metrics(
            equal, market, X, np.tile(np.full(X.shape[1], 1.0 / X.shape[1]), (total, 1)),
            cfg.tc_rates),
        "market": compute_metrics(market, market, X, _market_portfolios(X, total),
                                  cfg.tc_rates),
    }

    for name, report in reports.items():
        print(f"{name}: final CW {format_real(report.final_cw)}  "
              f"SR {format_real(report.sharpe)}  MDD {format_real(report.mdd)}")

    if out is not None:
        for name, report in reports.items():
            export_report(report, out / f"metrics_{name}.{cfg.fmt}", cfg.fmt)
        lines = ["nu," + ",".join(reports)]
        for nu in cfg.tc_rates:
            row = ",".join(format_real(reports[name].tc_curve[nu]) for name in reports)
            lines.append(f"{format_real(nu)},{row}")
        with open(out / "tc_curve.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, param: str, values: list[float]) -> int:
    """Backtest once per grid value; cell failures land in the table, not
    on the exit code."""
    matrix = _load_matrix(cfg)
    rows = []
    for value in values:
        cell = _sweep_cell(cfg, param, value, matrix)
        rows.append((value, *cell))

    out = _out_dir(cfg.out)
    if out is not None:
        if cfg.fmt == "json":
            payload = [
                {"param": param, "value": v, "final_cw": cw, "sharpe": sr, "status": st}
                for v, cw, sr, st in rows
            ]
            content = json.dumps(payload, sort_keys=True, indent=2) + "\n"
            path = out / "sweep.json"
        else:
            lines = ["param,value,final_cw,sharpe,status"]
            for v, cw, sr, st in rows:
                cw_s = "" if cw is None else format_real(cw)
                sr_s = "" if sr is None else format_real(sr)
                lines.append(f"{param},{format_real(v)},{cw_s},{sr_s},{st}")
            content = "\n".join(lines) + "\n"
            path = out / "sweep.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)

    for v, cw, sr, st in rows:
        cw_s = "-" if cw is None else format_real(cw)
        sr_s = "-" if sr is None else format_real(sr)
        print(f"{param}={format_real(v)}  final_cw={cw_s}  sharpe={sr_s}  {st}")
    return EXIT_OK


def _sweep_cell(cfg: RunConfig, param: str, value: float, matrix):
    """(final_cw, sharpe, status) for one grid point; failures become text."""
    field_name = param.replace("-", "_")
    cell_cfg = replace(cfg, **{field_name: int(value) if param == "window" else value})
    try:
        params = cell_cfg.params()
        result, _, market = _backtest_all(cell_cfg, params, matrix)
        if result.bankrupt_at is not None:
            return None, None, f"bankrupt at period {result.bankrupt_at}"
        report = compute_metrics(result.wealth, market, matrix.data,
                                 result.portfolios, ())
        return report.final_cw, report.sharpe, "ok"
    except (ValueError, RuntimeError) as exc:
        # keep the status cell CSV-safe
        return None, None, "failed: " + str(exc).replace(",", ";").replace("\n", " ")


def cmd_metrics(wealth_path: str, market_path: str | None, out: str | None,
                fmt: str) -> int:
    """Sharpe, drawdown and (given a market series) the alpha test for a
    stored wealth series."""
    values, _ = load_wealth_csv(wealth_path)
    series = WealthSeries(values)
    if market_path is not None:
        market_values, _ = load_wealth_csv(market_path)
        market = WealthSeries(market_values)
    else:
        market = None

    try:
        sharpe = sharpe_ratio(series)
    except DegenerateSeriesError:
        sharpe = float("nan")
    if market is not None:
        try:
            alpha, beta, pvalue = alpha_factor(series, market)
        except DegenerateSeriesError:
            alpha = beta = pvalue = float("nan")
    else:
        alpha = beta = pvalue = float("nan")
    report = MetricsReport(
        final_cw=float(series.values[-1]),
        sharpe=sharpe,
        alpha=alpha,
        beta_capm=beta,
        alpha_pvalue=pvalue,
        mdd=max_drawdown(series),
        tc_curve={},
    )
    print(f"final CW {format_real(report.final_cw)}  SR {format_real(report.sharpe)}  "
          f"MDD {format_real(report.mdd)}")
    out_dir = _out_dir(out)
    if out_dir is not None:
        export_report(report, out_dir / f"metrics.{fmt}", fmt)
    return EXIT_OK


def _run_solve(args: argparse.Namespace) -> int:
    return cmd_solve(_config_from_args(args))


def _run_backtest(args: argparse.Namespace) -> int:
    return cmd_backtest(_config_from_args(args))


def _run_sweep(args: argparse.Namespace) -> int:
    try:
        values = [float(tok) for tok in args.sweep_values.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValueError(f"bad --sweep-values {args.sweep_values!r}") from exc
    if not values:
        raise ValueError("empty --sweep-values grid")
    return cmd_sweep(_config_from_args(args), args.sweep_param, values)


def _run_metrics(args: argparse.Namespace) -> int:
    return cmd_metrics(args.wealth, args.market, args.out, _default_fmt(args))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataFormatError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DivergenceError, WindowFailure, _NotConverged) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (StepSizeError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
