"""Classical long-only mean-variance selection.

Minimum-variance weights for a target mean return, the attainable return
range, and the unconstrained efficient frontier that the cardinality-
constrained solvers are measured against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg_qp import constrained_qp
from .market_data import MarketModel

SUPPORT_TOL = 1e-9

STATUSES = ("optimal", "heuristic", "infeasible", "tolerance-limited")
MODEL_TAGS = ("mv", "lam", "mad", "lamad", "cvar", "lacvar")


@dataclass(frozen=True)
class PortfolioSolution:
    """A solved portfolio: weights, their support, and how the solve ended.

    ``objective`` is the model's risk value (variance, MAD or CVaR);
    ``gap`` is the residual bound gap for branch-and-bound solves.
    """

    weights: np.ndarray
    support: tuple
    objective: float
    achieved_return: float
    status: str
    model: str
    gap: float | None = None

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.model not in MODEL_TAGS:
            raise ValueError(f"unknown model tag {self.model!r}")
        w = np.asarray(self.weights, dtype=float).copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "support", tuple(self.support))
        if self.status in ("optimal", "heuristic"):
            total = float(w.sum())
            if abs(total - 1.0) > 1e-8:
                raise ValueError(f"weights sum to {total}, not 1")
            expected = tuple(np.flatnonzero(w > SUPPORT_TOL))
            if self.support != expected:
                raise ValueError("support does not match weights")

    @property
    def n_support(self) -> int:
        return len(self.support)

    @classmethod
    def build(cls, weights, mu, objective, status, model, gap=None):
        """Derive support and achieved return from the weight vector."""
        w = np.asarray(weights, dtype=float)
        return cls(
            weights=w,
            support=tuple(int(i) for i in np.flatnonzero(w > SUPPORT_TOL)),
            objective=float(objective),
            achieved_return=float(np.asarray(mu, dtype=float) @ w),
            status=status,
            model=model,
            gap=gap,
        )

    @classmethod
    def unsolved(cls, n, model, status="infeasible"):
        return cls(
            weights=np.zeros(n),
            support=(),
            objective=float("inf"),
            achieved_return=0.0,
            status=status,
            model=model,
        )


@dataclass(frozen=True)
class ReturnRange:
    """Attainable per-period returns: minimum-variance return up to max mu."""

    rho_min: float
    rho_max: float

    def __post_init__(self):
        if not self.rho_min <= self.rho_max + 1e-12:
            raise ValueError(f"rho_min {self.rho_min} exceeds rho_max {self.rho_max}")

    def grid(self, count: int) -> np.ndarray:
        if count < 2:
            raise ValueError("grid needs at least two points")
        return np.linspace(self.rho_min, self.rho_max, count)


def return_range(m: MarketModel) -> ReturnRange:
    """[rho_min, rho_max]: the return of the global minimum-variance
    portfolio up to the single best expected return."""
    n = m.n_assets
    res = constrained_qp(
        m.sigma,
        np.zeros(n),
        np.ones((1, n)),
        np.array([1.0]),
        np.zeros(n),
        np.ones(n),
    )
    if res.status != "optimal":
        raise RuntimeError(f"minimum-variance solve failed: {res.status}")
    rho_min = float(m.mu @ res.x)
    rho_max = float(m.mu.max())
    return ReturnRange(rho_min=min(rho_min, rho_max), rho_max=rho_max)


def solve_mv(
    m: MarketModel,
    rho: float,
    *,
    return_sense: str = "==",
    rho_range: ReturnRange | None = None,
) -> PortfolioSolution:
    """Minimize portfolio variance at mean return rho, long-only.

    ``return_sense`` '==' targets the return exactly; '>=' allows any
    return at or above rho (the two agree at and above the minimum-
    variance return).  Targets outside the attainable range come back
    with infeasible status.
    """
    if return_sense not in ("==", ">="):
        raise ValueError(f"return_sense must be '==' or '>=', got {return_sense!r}")
    n = m.n_assets
    rng = rho_range if rho_range is not None else return_range(m)
    slack = 1e-12 * max(1.0, abs(rng.rho_min), abs(rng.rho_max))
    if rho > rng.rho_max + slack:
        return PortfolioSolution.unsolved(n, "mv")
    if return_sense == "==" and rho < rng.rho_min - slack:
        return PortfolioSolution.unsolved(n, "mv")
    rho = min(rho, rng.rho_max)

    if return_sense == "==":
        a_eq = np.vstack([np.ones(n), m.mu])
        b_eq = np.array([1.0, rho])
        res = constrained_qp(m.sigma, np.zeros(n), a_eq, b_eq, np.zeros(n), np.ones(n))
        x = res.x
    else:
        # surplus variable s >= 0 turns mu'x >= rho into mu'x - s = rho
        q = np.zeros((n + 1, n + 1))
        q[:n, :n] = m.sigma.values
        a_eq = np.zeros((2, n + 1))
        a_eq[0, :n] = 1.0
        a_eq[1, :n] = m.mu
        a_eq[1, n] = -1.0
        b_eq = np.array([1.0, rho])
        lo = np.zeros(n + 1)
        hi = np.append(np.ones(n), max(0.0, rng.rho_max - rho))
        res = constrained_qp(q, np.zeros(n + 1), a_eq, b_eq, lo, hi)
        x = res.x[:n] if res.x is not None else None
    if res.status != "optimal":
        return PortfolioSolution.unsolved(n, "mv")
    return PortfolioSolution.build(
        x, m.mu, portfolio_variance(x, m.sigma), "optimal", "mv"
    )


def portfolio_variance(weights, sigma) -> float:
    w = np.asarray(weights, dtype=float)
    values = sigma.values if hasattr(sigma, "values") else np.asarray(sigma)
    return float(w @ values @ w)


def mv_frontier(m: MarketModel, grid_size: int = 500):
    """Unconstrained frontier on an equally spaced return grid (endpoints
    included).  Returns a FrontierCurve; see frontier_analytics."""
    from .frontier_analytics import sweep  # deferred: frontier imports this module

    return sweep(m, None, "mv", grid_size)
