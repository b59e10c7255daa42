"""Portfolio selection with hard limits on how many assets may be held.

Six models share one vocabulary: variance, mean absolute deviation, and
expected tail loss, each in an unconstrained form and a limited form that
caps the number of held assets and bands every held weight.  The limited
variance model is solved by a level-wise face search over the simplex; the
scenario models go through branch-and-bound on their LP relaxations.
Frontier sweeps, average-percentage-loss comparisons, and buy-and-hold
backtests sit on top, and everything is reachable from the ``cardfolio``
command line.
"""

from .backtest import (
    BacktestReport,
    PathSummary,
    PerformancePath,
    compare,
    expost_path,
    index_path,
    path_summary,
    rho_presets,
)
from .frontier_analytics import (
    AplResult,
    FrontierCurve,
    FrontierPoint,
    apl,
    apl_report,
    efficient_points,
    frontier_csv,
    lower_envelope,
    sweep,
)
from .lam_solver import LimitedAssetSpec, StqpInstance, build_stqp, increasing_set, lam_solve
from .linalg_qp import LpProblem, SymMatrix, constrained_qp, solve_lp
from .market_data import (
    DropReport,
    MarketModel,
    ParseError,
    PriceSeries,
    ReturnScenarios,
    clean_series,
    estimate,
    load_prices,
    log_returns,
    split,
    synthetic_prices,
)
from .milp_solver import (
    BnbConfig,
    MilpInstance,
    branch_and_bound,
    build_lacvar,
    build_lamad,
    downside_semideviation,
    portfolio_cvar,
    portfolio_mad,
    solve_linear_risk,
)
from .mv_core import (
    PortfolioSolution,
    ReturnRange,
    mv_frontier,
    portfolio_variance,
    return_range,
    solve_mv,
)
from .oracle import OracleReport, enumerate_exact

__version__ = "0.1.0"

__all__ = [
    "AplResult",
    "BacktestReport",
    "BnbConfig",
    "DropReport",
    "FrontierCurve",
    "FrontierPoint",
    "LimitedAssetSpec",
    "LpProblem",
    "MarketModel",
    "MilpInstance",
    "OracleReport",
    "ParseError",
    "PathSummary",
    "PerformancePath",
    "PortfolioSolution",
    "PriceSeries",
    "ReturnRange",
    "ReturnScenarios",
    "StqpInstance",
    "SymMatrix",
    "apl",
    "apl_report",
    "branch_and_bound",
    "build_lacvar",
    "build_lamad",
    "build_stqp",
    "clean_series",
    "compare",
    "constrained_qp",
    "downside_semideviation",
    "efficient_points",
    "enumerate_exact",
    "estimate",
    "expost_path",
    "frontier_csv",
    "increasing_set",
    "index_path",
    "lam_solve",
    "load_prices",
    "log_returns",
    "lower_envelope",
    "mv_frontier",
    "portfolio_cvar",
    "portfolio_mad",
    "portfolio_variance",
    "return_range",
    "path_summary",
    "rho_presets",
    "solve_linear_risk",
    "solve_lp",
    "solve_mv",
    "split",
    "sweep",
    "synthetic_prices",
]
