"""Frontier construction and comparison on a shared return grid.

A frontier is one risk value per grid return, solved under equality return
targeting.  The inequality-return variant is not re-solved: it is the lower
envelope of the equality curve (running minimum from the right), because
relaxing the return constraint can only pick up a better point further
along the grid.  The average percentage loss statistic then compares a
constrained curve against the unconstrained one point by point.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .lam_solver import DEFAULT_BEAM, LimitedAssetSpec, lam_solve
from .market_data import MarketModel
from .milp_solver import (
    BnbConfig,
    branch_and_bound,
    build_lacvar,
    build_lamad,
    portfolio_cvar,
    portfolio_mad,
    solve_linear_risk,
)
from .mv_core import (
    MODEL_TAGS,
    STATUSES,
    SUPPORT_TOL,
    portfolio_variance,
    return_range,
    solve_mv,
)

SOLVED = ("optimal", "heuristic")
GRID_TOL = 1e-12
RISK_CHECK_TOL = 1e-7

_CONSTRAINED = ("lam", "lamad", "lacvar")
_UNCONSTRAINED = ("mv", "mad", "cvar")


@dataclass(frozen=True)
class GridSpec:
    count: int
    rho_min: float
    rho_max: float


@dataclass(frozen=True)
class FrontierPoint:
    rho: float
    value: float
    weights: tuple
    status: str


@dataclass(frozen=True)
class FrontierCurve:
    """Risk values on an equally spaced return grid.

    The constructor enforces the grid geometry (strictly increasing,
    uniform spacing within 1e-12).  That solved points' weights reproduce
    their value is established where the data to check it lives: sweep
    verifies each solve against the model's risk functional, and
    check_risk re-verifies a finished curve on demand.
    """

    model: str
    k: int | None
    points: tuple
    grid_spec: GridSpec

    def __post_init__(self):
        if self.model not in MODEL_TAGS:
            raise ValueError(f"unknown model tag {self.model!r}")
        gs = self.grid_spec
        if len(self.points) != gs.count:
            raise ValueError("point count disagrees with grid spec")
        if gs.count < 2:
            raise ValueError("curve needs at least two grid points")
        rhos = np.array([p.rho for p in self.points])
        step = (gs.rho_max - gs.rho_min) / (gs.count - 1)
        gaps = np.diff(rhos)
        if gaps.min(initial=np.inf) <= 0.0:
            raise ValueError("grid returns must increase strictly")
        if np.abs(gaps - step).max(initial=0.0) > GRID_TOL:
            raise ValueError("grid returns are not equally spaced")
        for p in self.points:
            if p.status not in STATUSES:
                raise ValueError(f"unknown point status {p.status!r}")

    @property
    def rhos(self) -> np.ndarray:
        return np.array([p.rho for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    def check_risk(self, m: MarketModel, epsilon: float = 0.05) -> float:
        """Worst |recorded value - risk of recorded weights| over solved
        points."""
        worst = 0.0
        for p in self.points:
            if p.status in SOLVED:
                rv = risk_value(m, self.model, np.array(p.weights), epsilon)
                worst = max(worst, abs(rv - p.value))
        return worst


def risk_value(m: MarketModel, model: str, weights, epsilon: float = 0.05) -> float:
    """Evaluate the model's risk functional at fixed weights."""
    if model in ("mv", "lam"):
        return portfolio_variance(weights, m.sigma)
    if model in ("mad", "lamad"):
        return portfolio_mad(weights, m.scenarios)
    if model in ("cvar", "lacvar"):
        return portfolio_cvar(weights, m.scenarios, epsilon)
    raise ValueError(f"unknown model tag {model!r}")


def _solve_point(task):
    m, spec, model, rho, epsilon, beam_width, penalty, bnb, rng, sense, expand = task
    if model == "mv":
        sol = solve_mv(m, rho, return_sense=sense, rho_range=rng)
    elif model == "lam":
        sol = lam_solve(
            m,
            rho,
            spec,
            beam_width=beam_width,
            penalty=penalty,
            rho_range=rng,
            expand=expand,
        )
    elif model in ("mad", "cvar"):
        sol = solve_linear_risk(m, rho, model, epsilon=epsilon)
    elif model == "lamad":
        sol = branch_and_bound(build_lamad(m, rho, spec), bnb)
    elif model == "lacvar":
        sol = branch_and_bound(build_lacvar(m, rho, spec, epsilon), bnb)
    else:
        raise ValueError(f"unknown model tag {model!r}")
    return float(sol.objective), tuple(float(w) for w in sol.weights), sol.status


def sweep(
    m: MarketModel,
    spec: LimitedAssetSpec | None,
    model: str,
    grid_size: int = 500,
    *,
    epsilon: float = 0.05,
    beam_width: int | None = DEFAULT_BEAM,
    penalty: float | None = None,
    bnb: BnbConfig | None = None,
    workers: int = 1,
    return_sense: str = "==",
    expand: str = "all",
) -> FrontierCurve:
    """Solve the chosen model once per grid return and collect the curve.

    The grid always spans the unconstrained attainable range, so curves for
    different models and cardinalities share it and can be compared point
    by point.  Failed points are recorded with their status, never dropped.
    Worker processes split the grid; results are order-preserving and
    identical to a serial sweep.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    if model in _CONSTRAINED:
        if spec is None:
            raise ValueError(f"model {model!r} needs a LimitedAssetSpec")
    elif model in _UNCONSTRAINED:
        if spec is not None:
            raise ValueError(f"model {model!r} takes no LimitedAssetSpec")
    else:
        raise ValueError(f"unknown model tag {model!r}")
    if return_sense != "==" and model != "mv":
        raise ValueError("inequality return targeting is a post-processing step here")
    rng = return_range(m)
    if bnb is None:
        bnb = BnbConfig()
    tasks = [
        (m, spec, model, float(rho), epsilon, beam_width, penalty, bnb, rng,
         return_sense, expand)
        for rho in rng.grid(grid_size)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_solve_point, tasks))
    else:
        results = [_solve_point(t) for t in tasks]
    points = []
    for task, (value, weights, status) in zip(tasks, results):
        rho = task[3]
        if status in SOLVED:
            check = risk_value(m, model, np.array(weights), epsilon)
            if abs(check - value) > RISK_CHECK_TOL:
                raise RuntimeError(
                    f"solver value {value} off its own risk {check} at rho={rho}"
                )
        points.append(FrontierPoint(rho, value, weights, status))
    k = spec.k if spec is not None else None
    return FrontierCurve(
        model, k, tuple(points), GridSpec(grid_size, rng.rho_min, rng.rho_max)
    )


def lower_envelope(c: FrontierCurve) -> FrontierCurve:
    """Running minimum from the right over solved points.

    Each output point carries the weights of the grid point achieving the
    minimum (itself, when it already is the minimum).  Grid returns past
    the last solved point have no achiever and stay infeasible.
    """
    if not any(p.status in SOLVED for p in c.points):
        raise ValueError("no solved grid point; envelope is empty")
    out = []
    best = None
    for p in reversed(c.points):
        if p.status in SOLVED and (best is None or p.value <= best.value):
            best = p
        if best is None:
            out.append(FrontierPoint(p.rho, np.inf, p.weights, "infeasible"))
        else:
            out.append(FrontierPoint(p.rho, best.value, best.weights, best.status))
    return FrontierCurve(c.model, c.k, tuple(reversed(out)), c.grid_spec)


def efficient_points(c: FrontierCurve) -> tuple:
    """Solved points not dominated by any other (higher return at equal or
    lower risk)."""
    kept = []
    best = np.inf
    for p in reversed(c.points):
        if p.status in SOLVED and p.value < best:
            kept.append(p)
            best = p.value
    return tuple(reversed(kept))


@dataclass(frozen=True)
class AplResult:
    variant: str
    value: float
    excluded: int


def apl(
    constrained: FrontierCurve, unconstrained: FrontierCurve, variant: str = "APL1"
) -> AplResult:
    """Summed relative risk excess of the constrained curve over the
    unconstrained one, on their common grid.

    APL1 uses the constrained values as solved; APL2 replaces them with the
    lower envelope first.  Grid points where either curve has no solved
    value are left out and counted.  The raw sum is reported, not an
    average.
    """
    if variant not in ("APL1", "APL2"):
        raise ValueError(f"unknown variant {variant!r}")
    if constrained.grid_spec.count != unconstrained.grid_spec.count:
        raise ValueError("curves were built on different grids")
    drift = np.abs(constrained.rhos - unconstrained.rhos).max(initial=0.0)
    if drift > GRID_TOL:
        raise ValueError("curves were built on different grids")
    curve = lower_envelope(constrained) if variant == "APL2" else constrained
    total = 0.0
    excluded = 0
    for pc, pu in zip(curve.points, unconstrained.points):
        if pc.status in SOLVED and pu.status in SOLVED:
            total += (pc.value - pu.value) / pu.value
        else:
            excluded += 1
    return AplResult(variant, total, excluded)


def apl_report(result: AplResult, dataset: str, k: int | None) -> str:
    return f"{result.variant} {dataset} K={k} value={result.value!r} excluded={result.excluded}"


def frontier_csv(curve_or_points, asset_names=None, envelope: FrontierCurve | None = None) -> str:
    """Render a curve (or a point subset) as CSV.

    Base columns are rho, risk, n_support and one column per asset weight.
    Passing the curve's envelope adds status and envelope_value columns
    between n_support and the weights.
    """
    points = (
        curve_or_points.points
        if isinstance(curve_or_points, FrontierCurve)
        else tuple(curve_or_points)
    )
    if not points:
        raise ValueError("nothing to render")
    n = len(points[0].weights)
    if asset_names is None:
        asset_names = tuple(f"w{i + 1}" for i in range(n))
    if len(asset_names) != n:
        raise ValueError("asset name count disagrees with weight count")
    extended = envelope is not None
    header = ["rho", "risk", "n_support"]
    if extended:
        if len(envelope.points) != len(points):
            raise ValueError("envelope does not align with the curve")
        header += ["status", "envelope_value"]
    header += list(asset_names)
    lines = [",".join(header)]
    for j, p in enumerate(points):
        n_support = sum(1 for w in p.weights if w > SUPPORT_TOL)
        row = [repr(p.rho), repr(p.value), str(n_support)]
        if extended:
            row += [p.status, repr(envelope.points[j].value)]
        row += [repr(w) for w in p.weights]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
