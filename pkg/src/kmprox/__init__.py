"""Constrained proximal optimization with Krasnoselskii-Mann momentum,
plus the adaptive-return Markowitz model and backtesting built on it."""

from .prox import (
    LowerBoundSet,
    ScaledL1Spec,
    prox_conjugate_indicator,
    prox_indicator_lb,
    prox_partial_l1,
    soft_threshold,
    spectral_norm,
)
from .solver import (
    DivergenceError,
    KktReport,
    ProblemSpec,
    SolverConfig,
    SolverResult,
    SolverState,
    StepSizeError,
    eta_upper_bound,
    fixed_point_residual,
    fixed_point_step,
    km_step,
    kkt_report,
    metric_matrix,
    select_step_sizes,
    solve,
)
from .markowitz import (
    AssembledProblem,
    MarkowitzParams,
    Portfolio,
    assemble,
    build_problem,
    risk_gradient,
    risk_value,
    solve_window,
)
from .backtest import (
    BacktestResult,
    CapmAlpha,
    MetricsReport,
    WealthSeries,
    alpha_factor,
    baseline_equal_weight,
    baseline_market,
    compute_metrics,
    max_drawdown,
    run_backtest,
    sharpe_ratio,
    tc_adjusted_wealth,
)
from .data_io import (
    DataFormatError,
    MissingValueError,
    PriceRelativeMatrix,
    export_report,
    export_wealth_csv,
    load_returns_csv,
    load_wealth_csv,
)

__version__ = "0.1.0"
