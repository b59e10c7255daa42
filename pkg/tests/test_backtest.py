import re

import numpy as np
import pytest

from cardfolio.backtest import (
    BacktestReport,
    PerformancePath,
    compare,
    expost_path,
    index_path,
    path_summary,
    rho_presets,
)
from cardfolio.market_data import PriceSeries
from cardfolio.mv_core import ReturnRange


def series(prices, names=None, index=None):
    prices = np.asarray(prices, dtype=float)
    t, n = prices.shape
    names = names or tuple(f"A{i}" for i in range(n))
    stamps = tuple(f"2004-01-{d:02d}" for d in range(1, t + 1))
    idx = None if index is None else np.asarray(index, dtype=float)
    return PriceSeries(tuple(names), stamps, prices, idx)


def flat_path(label, count=3):
    stamps = tuple(f"2004-01-{d:02d}" for d in range(1, count + 1))
    return PerformancePath(label, (1.0,) * count, stamps)


class TestPerformancePath:
    def test_must_start_at_one(self):
        with pytest.raises(ValueError, match="exactly 1.0"):
            PerformancePath("p", (1.01, 1.0), ("a", "b"))

    def test_values_positive(self):
        with pytest.raises(ValueError, match="positive"):
            PerformancePath("p", (1.0, -0.2), ("a", "b"))

    def test_alignment_checked(self):
        with pytest.raises(ValueError, match="align"):
            PerformancePath("p", (1.0, 1.1), ("a",))

    def test_label_comma_rejected(self):
        with pytest.raises(ValueError, match="label"):
            PerformancePath("a,b", (1.0,), ("t",))


class TestExpostPath:
    def test_single_asset_appreciation(self):
        p = expost_path(np.array([1.0]), series([[100.0], [110.0]]))
        assert p.values == (1.0, 1.1)

    def test_constant_prices_stay_flat(self):
        s = series([[50.0, 80.0], [50.0, 80.0], [50.0, 80.0]])
        p = expost_path(np.array([0.5, 0.5]), s)
        assert p.values == (1.0, 1.0, 1.0)

    def test_offsetting_moves_cancel(self):
        s = series([[100.0, 100.0], [120.0, 80.0]])
        p = expost_path(np.array([0.5, 0.5]), s)
        assert p.values[-1] == pytest.approx(1.0, abs=1e-15)

    def test_base_value_is_exactly_one(self, rng):
        prices = rng.uniform(20.0, 200.0, size=(6, 4))
        w = rng.dirichlet(np.ones(4))
        p = expost_path(w, series(prices))
        assert p.values[0] == 1.0

    def test_held_asset_must_have_prices(self):
        s = series([[100.0], [101.0]], names=("B",))
        with pytest.raises(ValueError, match="no out-of-sample prices"):
            expost_path(np.array([1.0, 0.0]), s, asset_names=("A", "B"))

    def test_zero_weight_asset_may_be_absent(self):
        s = series([[100.0], [110.0]], names=("B",))
        p = expost_path(np.array([0.0, 1.0]), s, asset_names=("A", "B"))
        assert p.values == (1.0, 1.1)

    def test_name_alignment_beats_position(self):
        s = series([[100.0, 10.0], [110.0, 10.0]], names=("B", "A"))
        p = expost_path(np.array([1.0, 0.0]), s, asset_names=("B", "A"))
        q = expost_path(np.array([0.0, 1.0]), s, asset_names=("A", "B"))
        assert p.values == q.values == (1.0, 1.1)

    def test_rescaling_one_asset_changes_nothing(self, rng):
        prices = rng.uniform(20.0, 200.0, size=(8, 3))
        w = rng.dirichlet(np.ones(3))
        base = expost_path(w, series(prices))
        scaled = prices.copy()
        scaled[:, 1] *= 7.0
        again = expost_path(w, series(scaled))
        for a, b in zip(base.values, again.values):
            assert b == pytest.approx(a, rel=1e-12)

    def test_index_weights_reproduce_index(self, rng):
        idx = rng.uniform(900.0, 1100.0, size=5)
        s_idx = series(rng.uniform(10, 20, size=(5, 2)), index=idx)
        as_asset = series(idx.reshape(-1, 1), names=("IDX",))
        assert expost_path(np.array([1.0]), as_asset).values == index_path(s_idx).values

    def test_weights_validated(self):
        s = series([[100.0], [110.0]])
        with pytest.raises(ValueError, match="simplex"):
            expost_path(np.array([0.4]), s)

    def test_missing_prices_rejected(self):
        prices = np.array([[100.0], [np.nan], [104.0]])
        s = series(prices)
        with pytest.raises(ValueError, match="clean"):
            expost_path(np.array([1.0]), s)

    def test_index_required_for_index_path(self):
        with pytest.raises(ValueError, match="no index"):
            index_path(series([[100.0], [101.0]]))


class TestSummary:
    def test_hand_drawdown(self):
        p = PerformancePath("p", (1.0, 1.2, 0.9), ("a", "b", "c"))
        assert path_summary(p).max_drawdown == pytest.approx(0.25, abs=1e-15)

    def test_flat_path_all_zero(self):
        s = path_summary(flat_path("p"))
        assert s.total_return == 0.0
        assert s.log_mean == 0.0
        assert s.log_stdev == 0.0
        assert s.max_drawdown == 0.0

    def test_log_stats_match_hand_values(self):
        p = PerformancePath("p", (1.0, 1.1, 0.99), ("a", "b", "c"))
        lr = np.diff(np.log(np.array(p.values)))
        s = path_summary(p)
        assert s.log_mean == pytest.approx(float(lr.mean()), abs=1e-15)
        assert s.log_stdev == pytest.approx(float(lr.std()), abs=1e-15)
        assert s.total_return == pytest.approx(-0.01, abs=1e-12)


class TestCompare:
    def test_csv_layout_and_column_order(self):
        a = PerformancePath("lam", (1.0, 1.1), ("d1", "d2"))
        b = PerformancePath("mv", (1.0, 0.9), ("d1", "d2"))
        idx = PerformancePath("INDEX", (1.0, 1.05), ("d1", "d2"))
        rep = compare([a, b], idx)
        lines = rep.csv.strip().split("\n")
        assert lines[0] == "period,lam,mv,INDEX"
        assert lines[1] == "d1,1.0,1.0,1.0"
        assert lines[2] == "d2,1.1,0.9,1.05"

    def test_bit_stable(self):
        a = PerformancePath("p", (1.0, 1.07), ("d1", "d2"))
        idx = PerformancePath("INDEX", (1.0, 1.01), ("d1", "d2"))
        assert compare([a], idx).csv == compare([a], idx).csv

    def test_timestamp_mismatch_rejected(self):
        a = PerformancePath("p", (1.0, 1.1), ("d1", "d2"))
        idx = PerformancePath("INDEX", (1.0, 1.0), ("d1", "d3"))
        with pytest.raises(ValueError, match="timestamp"):
            compare([a], idx)

    def test_duplicate_labels_rejected(self):
        a = PerformancePath("p", (1.0,), ("d1",))
        idx = PerformancePath("INDEX", (1.0,), ("d1",))
        with pytest.raises(ValueError, match="duplicate"):
            compare([a, a], idx)

    def test_flat_paths_have_zero_deltas(self):
        rep = compare([flat_path("p")], flat_path("INDEX"))
        for s in rep.summaries:
            assert (s.total_return, s.log_mean, s.log_stdev, s.max_drawdown) == (
                0.0,
                0.0,
                0.0,
                0.0,
            )

    def test_summary_line_format(self):
        rep = compare([flat_path("p")], flat_path("INDEX"))
        pattern = re.compile(
            r"^\S+ total_return=\S+ log_mean=\S+ log_stdev=\S+ max_drawdown=\S+$"
        )
        lines = rep.summary_lines()
        assert len(lines) == 2
        for line in lines:
            assert pattern.match(line), line

    def test_report_is_a_value(self):
        rep = compare([flat_path("p")], flat_path("INDEX"))
        assert isinstance(rep, BacktestReport)
        assert rep.summaries[0].label == "p"
        assert rep.summaries[-1].label == "INDEX"


def test_rho_presets_low_and_mid():
    low, mid = rho_presets(ReturnRange(0.002, 0.01))
    assert low == 0.002
    assert mid == pytest.approx(0.006, abs=1e-15)
