"""Price-history loading, cleaning and moment estimation.

Two input formats are supported: a header CSV with ISO-8601 dates (optionally
carrying a final INDEX column for the market index) and the whitespace token
stream used by the classic index-tracking benchmark files, where the asset
count comes first and each period contributes one price per stock plus one
index level.

The cleaning rules are deliberate: a stock with more than two consecutive
missing prices is dropped outright, shorter interior gaps are filled by
linear interpolation between the surrounding observations, and missing runs
at either end are extended from the nearest observation.
"""

from __future__ import annotations

import datetime as _dt
import io
import os
from dataclasses import dataclass, field

import numpy as np

from .linalg_qp import SymMatrix


class ParseError(ValueError):
    """Malformed input data; the message carries line/column positions."""


@dataclass(frozen=True)
class PriceSeries:
    """Aligned price histories for a set of assets, NaN marking gaps."""

    asset_names: tuple
    timestamps: tuple
    prices: np.ndarray  # (periods, n_assets)
    index_prices: np.ndarray | None = None

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        if prices.ndim != 2:
            raise ValueError("prices must be a 2-d array")
        rows, n = prices.shape
        if len(self.asset_names) != n:
            raise ValueError(f"{len(self.asset_names)} names for {n} price columns")
        if len(self.timestamps) != rows:
            raise ValueError(f"{len(self.timestamps)} timestamps for {rows} rows")
        if len(set(self.asset_names)) != n:
            raise ValueError("duplicate asset names")
        for a, b in zip(self.timestamps, self.timestamps[1:]):
            if not a < b:
                raise ValueError(f"timestamps not strictly increasing at {b!r}")
        with np.errstate(invalid="ignore"):
            if (prices <= 0.0)[~np.isnan(prices)].any():
                raise ValueError("observed prices must be positive")
        prices = prices.copy()
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "asset_names", tuple(self.asset_names))
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        if self.index_prices is not None:
            idx = np.asarray(self.index_prices, dtype=float)
            if idx.shape != (rows,):
                raise ValueError("index series length mismatch")
            idx = idx.copy()
            idx.setflags(write=False)
            object.__setattr__(self, "index_prices", idx)

    @property
    def n_assets(self) -> int:
        return self.prices.shape[1]

    @property
    def n_periods(self) -> int:
        return self.prices.shape[0]


@dataclass(frozen=True)
class ReturnScenarios:
    """Matrix of per-period returns, one column per asset."""

    asset_names: tuple
    returns: np.ndarray  # (T, n_assets)

    def __post_init__(self):
        r = np.asarray(self.returns, dtype=float)
        if r.ndim != 2 or r.shape[1] != len(self.asset_names):
            raise ValueError("returns shape does not match asset names")
        if not np.isfinite(r).all():
            raise ValueError("returns must be finite")
        r = r.copy()
        r.setflags(write=False)
        object.__setattr__(self, "returns", r)
        object.__setattr__(self, "asset_names", tuple(self.asset_names))

    @property
    def t(self) -> int:
        return self.returns.shape[0]


@dataclass(frozen=True)
class MarketModel:
    """First and second moments of asset returns, plus the scenarios that
    produced them when available.

    ``scenarios`` may be None for moment-only models (enough for the
    variance-based solvers); the scenario-based models require it.
    """

    asset_names: tuple
    mu: np.ndarray
    sigma: SymMatrix
    scenarios: ReturnScenarios | None = None

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        n = mu.shape[0]
        if self.sigma.n != n or len(self.asset_names) != n:
            raise ValueError("mu, sigma and names disagree on asset count")
        if self.scenarios is not None:
            if self.scenarios.returns.shape[1] != n:
                raise ValueError("scenario column count mismatch")
            gap = np.abs(self.scenarios.returns.mean(axis=0) - mu).max()
            if gap > 1e-12:
                raise ValueError(f"mu differs from scenario means by {gap:.2e}")
        scale = max(1.0, float(np.abs(self.sigma.values).max()))
        if np.linalg.eigvalsh(self.sigma.values).min() < -1e-10 * scale:
            raise ValueError("sigma is not positive semidefinite")
        mu = mu.copy()
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "asset_names", tuple(self.asset_names))

    @property
    def n_assets(self) -> int:
        return self.mu.shape[0]


@dataclass
class DropReport:
    """What the cleaning pass removed or repaired."""

    dropped: list = field(default_factory=list)  # (asset, reason)
    interpolated: int = 0
    extended: int = 0

    def lines(self) -> list:
        return [f"DROPPED {name} {reason}" for name, reason in self.dropped]


def _read_text(source) -> str:
    if hasattr(source, "read"):
        data = source.read()
        return data.decode() if isinstance(data, bytes) else data
    if isinstance(source, bytes):
        return source.decode()
    if hasattr(source, "__fspath__") or (
        isinstance(source, str) and "\n" not in source and os.path.exists(source)
    ):
        with open(source, "r") as handle:
            return handle.read()
    return str(source)


def load_prices(source, format: str = "csv") -> PriceSeries:
    """Read a price table from a path, file object or raw text.

    Parameters
    ----------
    source : str, bytes or file-like
        Path to the data, or the data itself.
    format : {'csv', 'orlibrary'}
        'csv' expects a header row (timestamp column first, asset names
        after it, optionally a final INDEX column) with empty or NA cells
        marking missing prices.  'orlibrary' expects the whitespace token
        stream of the index-tracking benchmark files.
    """
    text = _read_text(source)
    if format == "csv":
        return _load_csv(text)
    if format == "orlibrary":
        return _load_orlibrary(text)
    raise ValueError(f"unknown format {format!r}")


def _load_csv(text: str) -> PriceSeries:
    import csv

    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if len(rows) < 3:
        raise ParseError("need a header and at least two data rows")
    header = [cell.strip() for cell in rows[0]]
    if len(header) < 2:
        raise ParseError("header must name at least one asset")
    names = header[1:]
    has_index = names[-1] == "INDEX"
    if has_index:
        names = names[:-1]
    if not names:
        raise ParseError("no asset columns besides INDEX")
    width = len(header)
    timestamps, data, index_col = [], [], []
    for li, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ParseError(f"line {li}: expected {width} cells, got {len(row)}")
        timestamps.append(row[0].strip())
        values = []
        for ci, cell in enumerate(row[1:], start=2):
            token = cell.strip()
            if token == "" or token.upper() == "NA":
                values.append(np.nan)
                continue
            try:
                values.append(float(token))
            except ValueError:
                raise ParseError(f"line {li}, column {ci}: bad number {token!r}") from None
        if has_index:
            index_col.append(values[-1])
            values = values[:-1]
        data.append(values)
    return PriceSeries(
        asset_names=tuple(names),
        timestamps=tuple(timestamps),
        prices=np.asarray(data, dtype=float),
        index_prices=np.asarray(index_col, dtype=float) if has_index else None,
    )


def _load_orlibrary(text: str) -> PriceSeries:
    tokens = text.split()
    if not tokens:
        raise ParseError("empty token stream")
    try:
        n = int(tokens[0])
    except ValueError:
        raise ParseError(f"first token must be the asset count, got {tokens[0]!r}") from None
    if n < 1:
        raise ParseError(f"asset count {n} out of range")
    rest = tokens[1:]
    if len(rest) % (n + 1) != 0:
        raise ParseError(
            f"{len(rest)} price tokens do not divide into rows of {n} stocks plus one index"
        )
    rows = len(rest) // (n + 1)
    if rows < 2:
        raise ParseError(f"only {rows} price rows; need at least two")
    try:
        values = np.asarray([float(t) for t in rest], dtype=float).reshape(rows, n + 1)
    except ValueError as exc:
        raise ParseError(f"non-numeric price token: {exc}") from None
    name_width = len(str(n))
    time_width = len(str(rows - 1))
    return PriceSeries(
        asset_names=tuple(f"S{i + 1:0{name_width}d}" for i in range(n)),
        timestamps=tuple(f"t{j:0{time_width}d}" for j in range(rows)),
        prices=values[:, :n],
        index_prices=values[:, n],
    )


def _missing_runs(col: np.ndarray):
    """Yield (start, length) for each maximal run of NaNs."""
    runs = []
    start = None
    for i, bad in enumerate(np.isnan(col)):
        if bad and start is None:
            start = i
        elif not bad and start is not None:
            runs.append((start, i - start))
            start = None
    if start is not None:
        runs.append((start, len(col) - start))
    return runs


def _fill_column(col: np.ndarray, runs) -> tuple[int, int]:
    """Repair short gaps in place; returns (interpolated, extended) counts."""
    interpolated = extended = 0
    rows = len(col)
    for start, length in runs:
        end = start + length  # first index after the run
        if start == 0:
            col[:end] = col[end]
            extended += length
        elif end == rows:
            col[start:] = col[start - 1]
            extended += length
        else:
            left, right = col[start - 1], col[end]
            for k in range(length):
                col[start + k] = left + (right - left) * (k + 1) / (length + 1)
            interpolated += length
    return interpolated, extended


def clean_series(p: PriceSeries, max_gap: int = 2) -> tuple[PriceSeries, DropReport]:
    """Drop unusable assets and repair short gaps.

    Assets with any missing run longer than ``max_gap`` are removed (a
    fully missing asset counts as one long run).  Interior gaps of at most
    ``max_gap`` are linearly interpolated between the neighbouring
    observations; runs touching either end are extended from the nearest
    observation.  A second pass over the cleaned output is a no-op.
    """
    report = DropReport()
    prices = p.prices.copy()
    keep = []
    for j, name in enumerate(p.asset_names):
        col = prices[:, j]
        if np.isnan(col).all():
            report.dropped.append((name, "all-missing"))
            continue
        runs = _missing_runs(col)
        worst = max((length for _, length in runs), default=0)
        if worst > max_gap:
            report.dropped.append((name, f"missing-run-of-{worst}"))
            continue
        interp, ext = _fill_column(col, runs)
        report.interpolated += interp
        report.extended += ext
        keep.append(j)
    if not keep:
        raise ValueError("no assets left after cleaning")
    index_prices = p.index_prices
    if index_prices is not None and np.isnan(index_prices).any():
        idx = index_prices.copy()
        runs = _missing_runs(idx)
        worst = max((length for _, length in runs), default=0)
        if worst > max_gap:
            raise ValueError(f"index series has a missing run of {worst}")
        interp, ext = _fill_column(idx, runs)
        report.interpolated += interp
        report.extended += ext
        index_prices = idx
    cleaned = PriceSeries(
        asset_names=tuple(p.asset_names[j] for j in keep),
        timestamps=p.timestamps,
        prices=prices[:, keep],
        index_prices=index_prices,
    )
    return cleaned, report


def log_returns(p: PriceSeries) -> ReturnScenarios:
    """Per-period log returns ln(P_t / P_{t-1}); prices must be gap-free."""
    if p.n_periods < 2:
        raise ValueError("need at least two price rows to form returns")
    if np.isnan(p.prices).any():
        raise ValueError("prices contain gaps; run clean_series first")
    return ReturnScenarios(
        asset_names=p.asset_names,
        returns=np.log(p.prices[1:] / p.prices[:-1]),
    )


def estimate(scenarios: ReturnScenarios, ddof: int = 0) -> MarketModel:
    """Sample mean and covariance of the scenario returns.

    ``ddof=0`` (the default) divides by T; pass ``ddof=1`` for the
    unbiased T-1 divisor.
    """
    r = scenarios.returns
    t = r.shape[0]
    if t - ddof < 1:
        raise ValueError(f"{t} scenarios are too few for ddof={ddof}")
    mu = r.mean(axis=0)
    centered = r - mu
    cov = centered.T @ centered / (t - ddof)
    cov = (cov + cov.T) / 2.0
    return MarketModel(
        asset_names=scenarios.asset_names,
        mu=mu,
        sigma=SymMatrix(cov),
        scenarios=scenarios,
    )


def split(p: PriceSeries, boundary: str) -> tuple[PriceSeries, PriceSeries]:
    """Split at a timestamp into in-sample and out-of-sample parts.

    The boundary row belongs to both parts, so the last in-sample price is
    the first out-of-sample price and return counts add up exactly.
    """
    try:
        at = p.timestamps.index(boundary)
    except ValueError:
        raise ValueError(f"boundary {boundary!r} not found in timestamps") from None
    def cut(lo, hi):
        return PriceSeries(
            asset_names=p.asset_names,
            timestamps=p.timestamps[lo:hi],
            prices=p.prices[lo:hi],
            index_prices=None if p.index_prices is None else p.index_prices[lo:hi],
        )
    return cut(0, at + 1), cut(at, p.n_periods)


def synthetic_prices(
    n_assets: int = 12,
    periods: int = 120,
    seed: int = 7,
    with_index: bool = True,
    start: str = "2003-03-07",
) -> PriceSeries:
    """Deterministic geometric random-walk fixture with weekly timestamps."""
    rng = np.random.default_rng(seed)
    drift = rng.normal(0.001, 0.0015, size=n_assets)
    vol = rng.uniform(0.01, 0.05, size=n_assets)
    steps = drift + vol * rng.standard_normal((periods - 1, n_assets))
    log_prices = np.vstack([np.zeros(n_assets), np.cumsum(steps, axis=0)])
    base = rng.uniform(20.0, 180.0, size=n_assets)
    prices = base * np.exp(log_prices)
    day0 = _dt.date.fromisoformat(start)
    stamps = tuple((day0 + _dt.timedelta(weeks=k)).isoformat() for k in range(periods))
    index = 100.0 * (prices / prices[0]).mean(axis=1) if with_index else None
    return PriceSeries(
        asset_names=tuple(f"A{i + 1:02d}" for i in range(n_assets)),
        timestamps=stamps,
        prices=prices,
        index_prices=index,
    )
