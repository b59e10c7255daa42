"""Exact reference solver by exhaustive support enumeration.

Fixing the support makes all three limited-asset models convex (a box QP
for the variance model, an LP for the deviation and tail-loss models), so
trying every admissible support and keeping the best solve is exact.  Cost
grows combinatorially; a guard refuses instances beyond desk scale.  Meant
for validating the production solvers, not replacing them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .linalg_qp import LpProblem, constrained_qp, solve_lp
from .market_data import MarketModel
from .mv_core import PortfolioSolution
from .lam_solver import LimitedAssetSpec

SUBSET_CAP = 2_000_000
N_CAP = 25


@dataclass(frozen=True)
class OracleReport:
    best: PortfolioSolution
    subsets_evaluated: int
    per_subset_log: tuple | None = None  # (support, value, status) triples


def subset_count(n: int, k: int, n_pre: int) -> int:
    return sum(math.comb(n - n_pre, size - n_pre) for size in range(max(n_pre, 1), k + 1))


def _supports(n: int, k: int, pre: tuple):
    extras = [i for i in range(n) if i not in set(pre)]
    start = max(len(pre), 1)
    for size in range(start, k + 1):
        for combo in itertools.combinations(extras, size - len(pre)):
            yield tuple(sorted(pre + combo))


def _solve_lam(m: MarketModel, rho, spec, idx):
    res = constrained_qp(
        m.sigma.submatrix(idx),
        np.zeros(len(idx)),
        np.vstack([np.ones(len(idx)), m.mu[list(idx)]]),
        np.array([1.0, rho]),
        spec.lower[list(idx)],
        spec.upper[list(idx)],
    )
    if res.status != "optimal":
        return None
    return float(res.value), res.x


def _solve_scenario_lp(m: MarketModel, rho, spec, idx, model, epsilon):
    """LP on a fixed support for the deviation / tail-loss objectives."""
    if m.scenarios is None:
        raise ValueError("scenario-based models need a MarketModel with scenarios")
    r = m.scenarios.returns[:, list(idx)]
    t, j = r.shape
    mu = m.mu[list(idx)]
    rows, senses, rhs = [], [], []
    if model == "lacvar":
        # variables: x (j), d (t), zeta
        nv = j + t + 1
        c = np.zeros(nv)
        c[j : j + t] = 1.0 / (epsilon * t)
        c[-1] = 1.0
        for s in range(t):
            row = np.zeros(nv)
            row[:j] = -r[s]
            row[j + s] = -1.0
            row[-1] = -1.0
            rows.append(row)
            senses.append("<=")
            rhs.append(0.0)
        bounds = np.vstack(
            [
                np.column_stack([spec.lower[list(idx)], spec.upper[list(idx)]]),
                np.column_stack([np.zeros(t), np.full(t, np.inf)]),
                [[-np.inf, np.inf]],
            ]
        )
    elif model == "lamad":
        # variables: x (j), d (t)
        nv = j + t
        c = np.zeros(nv)
        c[j:] = 1.0 / t
        centered = r - mu
        for s in range(t):
            for sign in (1.0, -1.0):
                row = np.zeros(nv)
                row[:j] = sign * centered[s]
                row[j + s] = -1.0
                rows.append(row)
                senses.append("<=")
                rhs.append(0.0)
        bounds = np.vstack(
            [
                np.column_stack([spec.lower[list(idx)], spec.upper[list(idx)]]),
                np.column_stack([np.zeros(t), np.full(t, np.inf)]),
            ]
        )
    else:
        raise ValueError(f"unknown oracle model {model!r}")
    row = np.zeros(nv)
    row[:j] = mu
    rows.append(row)
    senses.append("==")
    rhs.append(rho)
    row = np.zeros(nv)
    row[:j] = 1.0
    rows.append(row)
    senses.append("==")
    rhs.append(1.0)
    res = solve_lp(
        LpProblem(
            c=c,
            a=np.asarray(rows),
            senses=tuple(senses),
            b=np.asarray(rhs),
            bounds=bounds,
        )
    )
    if res.status != "optimal":
        return None
    return float(res.value), res.x[:j]


def enumerate_exact(
    m: MarketModel,
    rho: float,
    spec: LimitedAssetSpec,
    model: str = "lam",
    *,
    epsilon: float = 0.05,
    log: bool = False,
) -> OracleReport:
    """Try every support of size <= spec.k containing the preassigned set.

    Exact for 'lam', 'lamad' and 'lacvar'.  Refuses when n > 25 or the
    subset count exceeds 2e6.
    """
    n = m.n_assets
    if n != spec.n:
        raise ValueError("model and spec disagree on asset count")
    if n > N_CAP:
        raise ValueError(f"oracle refuses n={n} > {N_CAP}")
    total = subset_count(n, spec.k, len(spec.preassigned))
    if total > SUBSET_CAP:
        raise ValueError(f"oracle refuses {total} subsets > {SUBSET_CAP}")

    best_val, best_x, evaluated = np.inf, None, 0
    entries = [] if log else None
    for idx in _supports(n, spec.k, spec.preassigned):
        evaluated += 1
        if model == "lam":
            got = _solve_lam(m, rho, spec, idx)
        else:
            got = _solve_scenario_lp(m, rho, spec, idx, model, epsilon)
        if entries is not None:
            entries.append((idx, got[0] if got else np.inf, "ok" if got else "infeasible"))
        if got is not None and got[0] < best_val:
            best_val = got[0]
            best_x = np.zeros(n)
            best_x[list(idx)] = got[1]
    if best_x is None:
        best = PortfolioSolution.unsolved(n, model)
    else:
        best = PortfolioSolution.build(best_x, m.mu, best_val, "optimal", model)
    return OracleReport(
        best=best,
        subsets_evaluated=evaluated,
        per_subset_log=tuple(entries) if entries is not None else None,
    )
