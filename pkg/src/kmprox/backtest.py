"""Moving-window backtesting and the performance metrics reported on it.

The protocol: wealth starts at 1; the first ``window_len`` periods trade
the equal-weight portfolio (so every strategy shares an identical warm-up
prefix), and from then on each period's portfolio is produced by a
strategy callback applied to the trailing window of price relatives.
Metrics are monthly-frequency throughout: nothing is annualized and the
risk-free rate is taken as zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import stats

__all__ = [
    "WealthSeries",
    "BacktestResult",
    "CapmAlpha",
    "MetricsReport",
    "DegenerateSeriesError",
    "WindowFailure",
    "run_backtest",
    "baseline_equal_weight",
    "baseline_market",
    "sharpe_ratio",
    "alpha_factor",
    "max_drawdown",
    "tc_adjusted_wealth",
    "compute_metrics",
]


class DegenerateSeriesError(ValueError):
    """A metric is undefined on this series (too short or zero variance)."""


class WindowFailure(RuntimeError):
    """The strategy callback failed at one backtest period."""

    def __init__(self, period: int):
        super().__init__(f"strategy failed at period {period}")
        self.period = period


@dataclass
class WealthSeries:
    """Cumulative wealth S(0..T) with S(0) = 1 and all values positive."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.shape[0] < 1:
            raise ValueError("wealth series must be a nonempty vector")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise ValueError("wealth values must be positive and finite")
        if values[0] != 1.0:
            raise ValueError("wealth series must start at 1")
        self.values = values

    @property
    def periods(self) -> int:
        return self.values.shape[0] - 1

    @property
    def returns(self) -> np.ndarray:
        """Per-period simple returns S(t)/S(t-1) - 1."""
        return self.values[1:] / self.values[:-1] - 1.0


@dataclass
class BacktestResult:
    """Wealth path, the portfolio actually held each period, and whether a
    nonpositive portfolio return truncated the run (1-based period index)."""

    wealth: WealthSeries
    portfolios: np.ndarray
    bankrupt_at: int | None


class CapmAlpha(NamedTuple):
    alpha: float
    beta: float
    pvalue: float


@dataclass
class MetricsReport:
    final_cw: float
    sharpe: float
    alpha: float
    beta_capm: float
    alpha_pvalue: float
    mdd: float
    tc_curve: dict[float, float]


def _validate_relatives(relatives) -> np.ndarray:
    X = np.atleast_2d(np.asarray(relatives, dtype=float))
    if not np.all(np.isfinite(X)) or np.any(X <= 0):
        raise ValueError("price relatives must be positive and finite")
    return X


def run_backtest(
    relatives,
    window_len: int,
    strategy: Callable[[np.ndarray], np.ndarray],
) -> BacktestResult:
    """Walk the full history, rebalancing every period.

    Periods t <= window_len hold the equal-weight portfolio; afterwards
    ``strategy`` maps the trailing window X[t-window_len .. t-1] to the
    weights held over period t.  A nonpositive portfolio return stops the
    walk and is flagged rather than raised; a strategy exception is wrapped
    in WindowFailure carrying the period index.
    """
    X = _validate_relatives(relatives)
    total, n_assets = X.shape
    if window_len < 1:
        raise ValueError("window_len must be at least 1")
    if total <= window_len:
        raise ValueError("need more periods than the window length")

    equal = np.full(n_assets, 1.0 / n_assets)
    values = [1.0]
    held = []
    bankrupt_at = None
    for t in range(1, total + 1):
        if t <= window_len:
            w = equal
        else:
            try:
                w = np.asarray(strategy(X[t - 1 - window_len : t - 1]), dtype=float)
            except Exception as exc:
                raise WindowFailure(t) from exc
            if w.shape != (n_assets,) or not np.all(np.isfinite(w)):
                raise WindowFailure(t) from ValueError("bad strategy output")
        r = float(X[t - 1] @ w)
        if r <= 0.0:
            bankrupt_at = t
            break
        values.append(values[-1] * r)
        held.append(w)

    portfolios = np.array(held) if held else np.empty((0, n_assets))
    return BacktestResult(
        wealth=WealthSeries(np.array(values)),
        portfolios=portfolios,
        bankrupt_at=bankrupt_at,
    )


def baseline_equal_weight(relatives) -> WealthSeries:
    """Rebalance to equal weights every period."""
    X = _validate_relatives(relatives)
    w = np.full(X.shape[1], 1.0 / X.shape[1])
    values = [1.0]
    for t in range(X.shape[0]):
        values.append(values[-1] * float(X[t] @ w))
    return WealthSeries(np.array(values))


def baseline_market(relatives) -> WealthSeries:
    """Buy and hold equal initial stakes: S(t) is the mean of the assets'
    cumulative products of price relatives."""
    X = _validate_relatives(relatives)
    cumulative = np.cumprod(X, axis=0).mean(axis=1)
    return WealthSeries(np.concatenate([[1.0], cumulative]))


def sharpe_ratio(series: WealthSeries) -> float:
    """Mean per-period return over its sample standard deviation (ddof=1),
    with the risk-free rate taken as zero."""
    r = series.returns
    if r.shape[0] < 2:
        raise DegenerateSeriesError("need at least two periods for a Sharpe ratio")
    sd = float(r.std(ddof=1))
    if sd == 0.0:
        raise DegenerateSeriesError("zero return variance")
    return float(r.mean()) / sd


def alpha_factor(strategy: WealthSeries, market: WealthSeries) -> CapmAlpha:
    """Intercept and slope of strategy returns on market returns, with the
    right-tailed p-value of the intercept's t statistic (n - 2 dof).

    When the residuals vanish the standard error is zero: the p-value is
    then 0 for a positive intercept, 1 for a negative one and 0.5 when the
    intercept is zero as well (a series regressed on itself).
    """
    r_s = strategy.returns
    r_m = market.returns
    if r_s.shape[0] != r_m.shape[0]:
        raise DegenerateSeriesError("series have different lengths")
    n = r_s.shape[0]
    if n < 3:
        raise DegenerateSeriesError("need at least three periods for the alpha test")

    x_mean = float(r_m.mean())
    y_mean = float(r_s.mean())
    dx = r_m - x_mean
    dy = r_s - y_mean
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise DegenerateSeriesError("constant market returns")
    beta = float(dx @ dy) / sxx
    alpha = y_mean - beta * x_mean

    resid = dy - beta * dx
    sse = float(resid @ resid)
    if np.sqrt(sse) <= 1e-12 * (1.0 + float(np.linalg.norm(r_s))):
        if alpha > 0.0:
            return CapmAlpha(alpha, beta, 0.0)
        if alpha < 0.0:
            return CapmAlpha(alpha, beta, 1.0)
        return CapmAlpha(alpha, beta, 0.5)

    dof = n - 2
    se_alpha = np.sqrt(sse / dof * (1.0 / n + x_mean**2 / sxx))
    t_stat = alpha / se_alpha
    pvalue = float(stats.t.sf(t_stat, dof))
    return CapmAlpha(alpha, beta, pvalue)


def max_drawdown(series: WealthSeries) -> float:
    """Worst peak-to-trough loss fraction, peaks taken from the first
    trading period onward."""
    if series.periods < 1:
        raise DegenerateSeriesError("need at least one period for a drawdown")
    s = series.values[1:]
    peaks = np.maximum.accumulate(s)
    return float(1.0 - np.min(s / peaks))


def tc_adjusted_wealth(relatives, portfolios, nu: float) -> float:
    """Final cumulative wealth under a proportional transaction-cost rate.

    Each period pays nu/2 times the l1 distance between the target weights
    and the drifted weights carried over from the previous period (starting
    from all cash, so the first period pays on the full allocation).
    """
    if not 0.0 <= nu < 1.0:
        raise ValueError("nu must lie in [0, 1)")
    X = _validate_relatives(relatives)
    W = np.atleast_2d(np.asarray(portfolios, dtype=float))
    if W.shape[0] > X.shape[0] or W.shape[1] != X.shape[1]:
        raise ValueError("portfolio history does not match the price relatives")

    wealth = 1.0
    drifted = np.zeros(X.shape[1])
    for t in range(W.shape[0]):
        w = W[t]
        x = X[t]
        gross = float(x @ w)
        if gross <= 0.0:
            raise ValueError(f"nonpositive portfolio return at period {t + 1}")
        factor = gross * (1.0 - 0.5 * nu * float(np.abs(w - drifted).sum()))
        if factor <= 0.0:
            raise ValueError(f"transaction costs wiped out period {t + 1}")
        wealth *= factor
        drifted = w * x / gross
    return wealth


def compute_metrics(
    series: WealthSeries,
    market: WealthSeries,
    relatives,
    portfolios,
    tc_rates,
) -> MetricsReport:
    """Bundle the standard report; degenerate metrics come back as NaN
    rather than raising, so callers can still serialize partial reports."""
    try:
        sharpe = sharpe_ratio(series)
    except DegenerateSeriesError:
        sharpe = float("nan")
    try:
        alpha, beta, pvalue = alpha_factor(series, market)
    except DegenerateSeriesError:
        alpha = beta = pvalue = float("nan")
    X = _validate_relatives(relatives)
    n_held = len(portfolios)
    curve = {
        float(nu): tc_adjusted_wealth(X[:n_held], portfolios, float(nu))
        for nu in tc_rates
    }
    return MetricsReport(
        final_cw=float(series.values[-1]),
        sharpe=sharpe,
        alpha=alpha,
        beta_capm=beta,
        alpha_pvalue=pvalue,
        mdd=max_drawdown(series),
        tc_curve=curve,
    )
