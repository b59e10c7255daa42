"""Ex-post evaluation: hold an in-sample portfolio through later prices.

Buy-and-hold semantics throughout.  One unit of value is split across the
held assets by weight at the first out-of-sample price; after that the
position is never touched, so weights drift with prices and only price
ratios matter.  Paths expect cleaned series; a missing price surfaces as a
validation failure, not a silent gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .market_data import PriceSeries
from .mv_core import SUPPORT_TOL, ReturnRange


@dataclass(frozen=True)
class PerformancePath:
    """Cumulative value of one held portfolio, base 1 at the window start."""

    label: str
    values: tuple
    periods: tuple

    def __post_init__(self):
        if not self.label or "," in self.label:
            raise ValueError("label must be nonempty and comma-free")
        if len(self.values) != len(self.periods) or not self.values:
            raise ValueError("values and periods must align and be nonempty")
        if self.values[0] != 1.0:
            raise ValueError("path must start at exactly 1.0")
        if any(not v > 0.0 for v in self.values):
            raise ValueError("path values must stay positive")


def expost_path(
    weights, out_prices: PriceSeries, *, asset_names=None, label: str = "portfolio"
) -> PerformancePath:
    """Hold ``weights`` through ``out_prices`` without rebalancing.

    ``asset_names`` gives the name per weight; when omitted, weights map to
    the price columns positionally.  Only held assets (weight above the
    support threshold) need price history.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1:
        raise ValueError("weights must be a flat vector")
    if w.min(initial=0.0) < -1e-12 or abs(w.sum() - 1.0) > 1e-8:
        raise ValueError("weights must lie on the simplex")
    if asset_names is None:
        if len(w) != len(out_prices.asset_names):
            raise ValueError("weight count disagrees with price columns")
        asset_names = out_prices.asset_names
    elif len(asset_names) != len(w):
        raise ValueError("weight count disagrees with asset names")
    col_of = {name: j for j, name in enumerate(out_prices.asset_names)}
    held = [i for i in range(len(w)) if w[i] > SUPPORT_TOL]
    cols = []
    for i in held:
        name = asset_names[i]
        if name not in col_of:
            raise ValueError(f"held asset {name} has no out-of-sample prices")
        cols.append(col_of[name])
    if not held:
        raise ValueError("no held asset above the support threshold")
    p = out_prices.prices[:, cols]
    if np.isnan(p).any():
        raise ValueError("held assets have missing out-of-sample prices; clean the series first")
    rel = p / p[0]
    values = rel @ w[held]
    values = values / values[0]
    return PerformancePath(label, tuple(float(v) for v in values), out_prices.timestamps)


def index_path(out_prices: PriceSeries, label: str = "INDEX") -> PerformancePath:
    """The market index as a path, through the same ratio arithmetic as a
    single fully weighted asset."""
    if out_prices.index_prices is None:
        raise ValueError("price series carries no index column")
    idx = np.asarray(out_prices.index_prices, dtype=float)
    values = idx / idx[0]
    values = values / values[0]
    return PerformancePath(label, tuple(float(v) for v in values), out_prices.timestamps)


@dataclass(frozen=True)
class PathSummary:
    label: str
    total_return: float
    log_mean: float
    log_stdev: float
    max_drawdown: float


def path_summary(p: PerformancePath) -> PathSummary:
    v = np.asarray(p.values, dtype=float)
    total = float(v[-1] - 1.0)
    if len(v) > 1:
        lr = np.diff(np.log(v))
        log_mean = float(lr.mean())
        log_stdev = float(lr.std())
    else:
        log_mean = log_stdev = 0.0
    peaks = np.maximum.accumulate(v)
    drawdown = float(((peaks - v) / peaks).max())
    return PathSummary(p.label, total, log_mean, log_stdev, drawdown)


@dataclass(frozen=True)
class BacktestReport:
    csv: str
    summaries: tuple

    def summary_lines(self) -> tuple:
        return tuple(
            f"{s.label} total_return={s.total_return!r} log_mean={s.log_mean!r} "
            f"log_stdev={s.log_stdev!r} max_drawdown={s.max_drawdown!r}"
            for s in self.summaries
        )


def compare(paths, index: PerformancePath) -> BacktestReport:
    """Aligned value table (column order = input order, index last) plus
    per-path summary statistics."""
    paths = list(paths)
    if not paths:
        raise ValueError("nothing to compare")
    everyone = paths + [index]
    periods = everyone[0].periods
    for p in everyone[1:]:
        if p.periods != periods:
            raise ValueError(f"timestamp mismatch between {everyone[0].label} and {p.label}")
    labels = [p.label for p in paths]
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate path labels")
    lines = ["period," + ",".join(labels) + ",INDEX"]
    for t, period in enumerate(periods):
        cells = [period] + [repr(p.values[t]) for p in everyone]
        lines.append(",".join(cells))
    return BacktestReport("\n".join(lines) + "\n", tuple(path_summary(p) for p in everyone))


def rho_presets(rng: ReturnRange) -> tuple:
    """The two built-in target returns: the low end of the attainable range
    and its midpoint."""
    return (rng.rho_min, rng.rho_min + 0.5 * (rng.rho_max - rng.rho_min))
