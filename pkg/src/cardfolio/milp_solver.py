"""Scenario-based selection models solved as mixed-integer linear programs.

Two models share one skeleton: per-scenario auxiliary variables capture the
risk objective (mean absolute deviation, or expected tail loss through a
quantile variable), binary selection variables gate each asset's weight
band, and a cardinality row caps how many may be switched on.  Solving is
plain best-first branch-and-bound over LP relaxations; no cuts, no warm
starts, every node solved from scratch.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .linalg_qp import LpProblem, solve_lp
from .market_data import MarketModel, ReturnScenarios
from .mv_core import PortfolioSolution


@dataclass(frozen=True)
class MilpInstance:
    """One built model: the LP relaxation plus which columns are binary.

    Variable order is x (n weights), d (T scenario terms), then the
    quantile variable for the tail-loss model, then y (n selectors).
    """

    lp: LpProblem
    binaries: tuple
    n_assets: int
    n_scenarios: int
    model: str
    mu: np.ndarray
    epsilon: float | None = None

    def counts(self) -> tuple:
        """(continuous, binary, constraint) counts, with each asset's
        two-sided weight-band link counted as one constraint."""
        n, t = self.n_assets, self.n_scenarios
        if self.model == "lacvar":
            return (n + t + 1, n, t + n + 3)
        return (n + t, n, n + 2 * t + 3)


@dataclass(frozen=True)
class BnbConfig:
    abs_gap_tol: float = 1e-6
    node_limit: int = 200_000
    incumbent_rounding: float = 1e-6

    def __post_init__(self):
        if self.abs_gap_tol <= 0:
            raise ValueError("abs_gap_tol must be positive")


APPROX_GAP_TOL = 1e-4  # looser optimality regime for big sweeps


def _scenario_matrix(m: MarketModel) -> np.ndarray:
    if m.scenarios is None:
        raise ValueError("scenario-based models need a MarketModel with scenarios")
    return m.scenarios.returns


def _common_rows(m, rho, spec, nv, n):
    """Return, budget, cardinality and weight-band linking rows."""
    rows, senses, rhs = [], [], []
    row = np.zeros(nv)
    row[:n] = m.mu
    rows.append(row)
    senses.append("==")
    rhs.append(rho)
    row = np.zeros(nv)
    row[:n] = 1.0
    rows.append(row)
    senses.append("==")
    rhs.append(1.0)
    row = np.zeros(nv)
    row[nv - n :] = 1.0
    rows.append(row)
    senses.append("<=")
    rhs.append(float(spec.k))
    for i in range(n):
        row = np.zeros(nv)
        row[i] = 1.0
        row[nv - n + i] = -spec.upper[i]
        rows.append(row)
        senses.append("<=")
        rhs.append(0.0)
        row = np.zeros(nv)
        row[i] = -1.0
        row[nv - n + i] = spec.lower[i]
        rows.append(row)
        senses.append("<=")
        rhs.append(0.0)
    return rows, senses, rhs


def _y_bounds(spec, n):
    lo = np.zeros(n)
    lo[list(spec.preassigned)] = 1.0
    return np.column_stack([lo, np.ones(n)])


def build_lacvar(m: MarketModel, rho: float, spec, epsilon: float) -> MilpInstance:
    """Expected tail loss at level epsilon, cardinality-constrained.

    Each scenario contributes one shortfall row: the amount by which that
    scenario's loss exceeds the quantile variable is paid into the
    objective at weight 1/(epsilon * T).
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must be in (0, 1]")
    r = _scenario_matrix(m)
    t, n = r.shape[0], m.n_assets
    nv = n + t + 1 + n
    c = np.zeros(nv)
    c[n : n + t] = 1.0 / (epsilon * t)
    c[n + t] = 1.0
    rows, senses, rhs = [], [], []
    for s in range(t):
        row = np.zeros(nv)
        row[:n] = -r[s]
        row[n + s] = -1.0
        row[n + t] = -1.0
        rows.append(row)
        senses.append("<=")
        rhs.append(0.0)
    more = _common_rows(m, rho, spec, nv, n)
    rows += more[0]
    senses += more[1]
    rhs += more[2]
    bounds = np.vstack(
        [
            np.column_stack([np.zeros(n), spec.upper]),
            np.column_stack([np.zeros(t), np.full(t, np.inf)]),
            [[-np.inf, np.inf]],
            _y_bounds(spec, n),
        ]
    )
    return MilpInstance(
        lp=LpProblem(c=c, a=np.asarray(rows), senses=tuple(senses), b=np.asarray(rhs), bounds=bounds),
        binaries=tuple(range(n + t + 1, nv)),
        n_assets=n,
        n_scenarios=t,
        model="lacvar",
        mu=m.mu,
        epsilon=epsilon,
    )


def build_lamad(m: MarketModel, rho: float, spec) -> MilpInstance:
    """Mean absolute deviation, cardinality-constrained.

    Two rows per scenario pin d_s above the deviation in either direction,
    so at the optimum d_s is its absolute value.
    """
    r = _scenario_matrix(m)
    t, n = r.shape[0], m.n_assets
    nv = n + t + n
    c = np.zeros(nv)
    c[n : n + t] = 1.0 / t
    centered = r - m.mu
    rows, senses, rhs = [], [], []
    for s in range(t):
        for sign in (1.0, -1.0):
            row = np.zeros(nv)
            row[:n] = sign * centered[s]
            row[n + s] = -1.0
            rows.append(row)
            senses.append("<=")
            rhs.append(0.0)
    more = _common_rows(m, rho, spec, nv, n)
    rows += more[0]
    senses += more[1]
    rhs += more[2]
    bounds = np.vstack(
        [
            np.column_stack([np.zeros(n), spec.upper]),
            np.column_stack([np.zeros(t), np.full(t, np.inf)]),
            _y_bounds(spec, n),
        ]
    )
    return MilpInstance(
        lp=LpProblem(c=c, a=np.asarray(rows), senses=tuple(senses), b=np.asarray(rhs), bounds=bounds),
        binaries=tuple(range(n + t, nv)),
        n_assets=n,
        n_scenarios=t,
        model="lamad",
        mu=m.mu,
    )


def _fix_binary(lp: LpProblem, index: int, value: float) -> LpProblem:
    return lp.with_bounds(index, value, value)


def branch_and_bound(
    inst: MilpInstance, cfg: BnbConfig = BnbConfig(), log=None
) -> PortfolioSolution:
    """Best-first search on the LP bound, branching the most fractional
    selector (lowest index on ties).

    The returned weights come from a final LP re-solve with the winning
    selectors pinned, so they satisfy every model row exactly; the proven
    bound gap is recorded on the solution.
    """
    n = inst.n_assets
    binaries = list(inst.binaries)

    def relax(lp):
        res = solve_lp(lp)
        return res if res.status == "optimal" else None

    root = relax(inst.lp)
    if root is None:
        return PortfolioSolution.unsolved(n, inst.model)

    incumbent_val = np.inf
    incumbent_y = None
    heap = [(root.value, 0, inst.lp, root)]
    seq = 1
    nodes = 0
    status = "optimal"
    gap = 0.0
    while heap:
        bound, _, lp, res = heapq.heappop(heap)
        if bound >= incumbent_val - cfg.abs_gap_tol:
            gap = max(0.0, incumbent_val - bound)
            break
        nodes += 1
        if nodes > cfg.node_limit:
            status = "tolerance-limited"
            gap = max(0.0, incumbent_val - bound)
            break
        y = res.x[binaries]
        frac = np.abs(y - np.round(y))
        if log is not None:
            log(f"NODE {nodes} bound={bound!r} incumbent={incumbent_val!r} open={len(heap)}")
        if frac.max(initial=0.0) <= cfg.incumbent_rounding:
            fixed = lp
            for j, var in enumerate(binaries):
                fixed = _fix_binary(fixed, var, float(np.round(y[j])))
            exact = relax(fixed)
            if exact is not None and exact.value < incumbent_val:
                incumbent_val = exact.value
                incumbent_y = np.round(y)
            continue
        pick = int(np.argmax(frac))  # ties: argmax takes the lowest index
        var = binaries[pick]
        for value in (0.0, 1.0):
            child_lp = _fix_binary(lp, var, value)
            child = relax(child_lp)
            if child is not None:
                heapq.heappush(heap, (child.value, seq, child_lp, child))
                seq += 1
    if log is not None:
        log(f"GAP {gap!r}")
    if incumbent_y is None:
        if status == "tolerance-limited":
            return PortfolioSolution.unsolved(n, inst.model, status="tolerance-limited")
        return PortfolioSolution.unsolved(n, inst.model)

    final_lp = inst.lp
    for j, var in enumerate(binaries):
        final_lp = _fix_binary(final_lp, var, float(incumbent_y[j]))
    final = relax(final_lp)
    if final is None:  # pinning cannot break feasibility of the incumbent
        raise RuntimeError("incumbent re-solve lost feasibility")
    return PortfolioSolution.build(
        final.x[:n], inst.mu, final.value, status, inst.model, gap=gap
    )


def solve_linear_risk(
    m: MarketModel, rho: float, model: str, epsilon: float = 0.05
) -> PortfolioSolution:
    """Unconstrained (no cardinality, no weight bands) MAD or CVaR optimum
    at the target return; the benchmark the limited models are held to."""
    r = _scenario_matrix(m)
    t, n = r.shape[0], m.n_assets
    if model == "cvar":
        if not 0.0 < epsilon <= 1.0:
            raise ValueError("epsilon must be in (0, 1]")
        nv = n + t + 1
        c = np.zeros(nv)
        c[n : n + t] = 1.0 / (epsilon * t)
        c[n + t] = 1.0
        rows = []
        for s in range(t):
            row = np.zeros(nv)
            row[:n] = -r[s]
            row[n + s] = -1.0
            row[n + t] = -1.0
            rows.append(row)
        bounds = np.vstack(
            [
                np.column_stack([np.zeros(n), np.ones(n)]),
                np.column_stack([np.zeros(t), np.full(t, np.inf)]),
                [[-np.inf, np.inf]],
            ]
        )
    elif model == "mad":
        nv = n + t
        c = np.zeros(nv)
        c[n:] = 1.0 / t
        centered = r - m.mu
        rows = []
        for s in range(t):
            for sign in (1.0, -1.0):
                row = np.zeros(nv)
                row[:n] = sign * centered[s]
                row[n + s] = -1.0
                rows.append(row)
        bounds = np.vstack(
            [
                np.column_stack([np.zeros(n), np.ones(n)]),
                np.column_stack([np.zeros(t), np.full(t, np.inf)]),
            ]
        )
    else:
        raise ValueError(f"unknown linear risk model {model!r}")
    senses = ["<="] * len(rows)
    row = np.zeros(nv)
    row[:n] = m.mu
    rows.append(row)
    senses.append("==")
    row = np.zeros(nv)
    row[:n] = 1.0
    rows.append(row)
    senses.append("==")
    rhs = np.concatenate([np.zeros(len(rows) - 2), [rho, 1.0]])
    res = solve_lp(
        LpProblem(c=c, a=np.asarray(rows), senses=tuple(senses), b=rhs, bounds=bounds)
    )
    if res.status != "optimal":
        return PortfolioSolution.unsolved(n, model)
    return PortfolioSolution.build(res.x[:n], m.mu, res.value, "optimal", model)


def portfolio_mad(weights, scenarios: ReturnScenarios) -> float:
    """Mean absolute deviation of the portfolio return around its mean."""
    w = np.asarray(weights, dtype=float)
    port = scenarios.returns @ w
    return float(np.abs(port - port.mean()).mean())


def downside_semideviation(weights, scenarios: ReturnScenarios) -> float:
    """Mean shortfall of the portfolio return below its mean."""
    w = np.asarray(weights, dtype=float)
    port = scenarios.returns @ w
    return float(np.maximum(port.mean() - port, 0.0).mean())


def portfolio_cvar(weights, scenarios: ReturnScenarios, epsilon: float) -> float:
    """Expected loss in the worst epsilon-fraction of scenarios.

    Discrete distribution: average the ceil(eps*T) worst losses, the
    marginal one weighted by its fractional share of the tail.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must be in (0, 1]")
    w = np.asarray(weights, dtype=float)
    losses = np.sort(-(scenarios.returns @ w))[::-1]
    t = losses.shape[0]
    k = epsilon * t
    whole = int(np.floor(k + 1e-12))
    acc = float(losses[:whole].sum())
    if whole < t and k - whole > 1e-12:
        acc += (k - whole) * float(losses[whole])
    return acc / k
