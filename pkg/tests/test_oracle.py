import itertools
import math

import numpy as np
import pytest

from cardfolio.lam_solver import LimitedAssetSpec
from cardfolio.linalg_qp import SymMatrix
from cardfolio.market_data import MarketModel, ReturnScenarios, estimate
from cardfolio.oracle import enumerate_exact, subset_count
from oracle_utils import cvar_by_sorting, pattern_qp_min, random_pd


def model_of(mu, sigma):
    mu = np.asarray(mu, dtype=float)
    names = tuple(f"A{i}" for i in range(len(mu)))
    return MarketModel(names, mu, SymMatrix(np.asarray(sigma, dtype=float)))


def scenario_model(rng, n, t):
    r = rng.normal(0.002, 0.02, size=(t, n))
    return estimate(ReturnScenarios(tuple(f"A{i}" for i in range(n)), r))


def spec_of(n, k, lower=0.0, upper=1.0, preassigned=()):
    return LimitedAssetSpec(n=n, k=k, lower=lower, upper=upper, preassigned=preassigned)


def test_subset_count_matches_enumeration(rng):
    m = scenario_model(rng, 6, 8)
    spec = spec_of(6, 3, preassigned=(2,))
    rep = enumerate_exact(m, float(m.mu.mean()), spec, "lam", log=True)
    want = sum(math.comb(5, size) for size in range(0, 3))
    assert rep.subsets_evaluated == want == subset_count(6, 3, 1)
    assert len(rep.per_subset_log) == rep.subsets_evaluated


def test_symmetric_two_asset_case():
    m = model_of([0.02, 0.02], np.eye(2))
    rep = enumerate_exact(m, 0.02, spec_of(2, 2), "lam")
    np.testing.assert_allclose(rep.best.weights, [0.5, 0.5], atol=1e-10)
    assert rep.best.objective == pytest.approx(0.5, abs=1e-10)


def test_k1_picks_cheapest_matching_asset():
    m = model_of([0.01, 0.02, 0.01], np.diag([0.09, 0.01, 0.04]))
    rep = enumerate_exact(m, 0.01, spec_of(3, 1), "lam")
    # only assets 0 and 2 hit the return; 2 has the smaller variance
    assert rep.best.support == (2,)
    assert rep.best.objective == pytest.approx(0.04, abs=1e-12)


def test_lam_agrees_with_independent_pattern_enumeration(rng):
    # same exhaustive idea, written against the test-side KKT enumerator
    n, k = 5, 2
    m = model_of(rng.uniform(0, 0.03, n), random_pd(n, rng, scale=0.02))
    rho = float(np.quantile(m.mu, 0.6))
    lo, hi = 0.05, 0.8
    best = np.inf
    for size in (1, 2):
        for idx in itertools.combinations(range(n), size):
            got = pattern_qp_min(
                m.sigma.values[np.ix_(idx, idx)],
                np.zeros(size),
                np.vstack([np.ones(size), m.mu[list(idx)]]),
                np.array([1.0, rho]),
                np.full(size, lo),
                np.full(size, hi),
            )
            if got is not None:
                best = min(best, got[1])
    rep = enumerate_exact(m, rho, spec_of(n, k, lower=lo, upper=hi), "lam")
    if np.isinf(best):
        assert rep.best.status == "infeasible"
    else:
        assert rep.best.objective == pytest.approx(best, abs=1e-9)


def test_best_not_worse_than_any_logged_subset(rng):
    m = scenario_model(rng, 7, 10)
    rep = enumerate_exact(m, float(m.mu.mean()), spec_of(7, 3), "lam", log=True)
    feasible = [v for _, v, s in rep.per_subset_log if s == "ok"]
    assert feasible and rep.best.objective <= min(feasible) + 1e-12


class TestScenarioModels:
    def test_cvar_at_full_tail_is_mean_loss(self, rng):
        m = scenario_model(rng, 1, 6)
        rep = enumerate_exact(m, float(m.mu[0]), spec_of(1, 1), "lacvar", epsilon=1.0)
        assert rep.best.objective == pytest.approx(-float(m.mu[0]), abs=1e-10)

    def test_cvar_half_tail_hand_case(self):
        r = np.array([[0.01], [-0.03]])
        m = estimate(ReturnScenarios(("A0",), r))
        rep = enumerate_exact(m, float(m.mu[0]), spec_of(1, 1), "lacvar", epsilon=0.5)
        assert rep.best.objective == pytest.approx(0.03, abs=1e-10)

    def test_cvar_matches_sorting_oracle(self, rng):
        m = scenario_model(rng, 1, 9)
        losses = -m.scenarios.returns[:, 0]
        for eps in (0.25, 0.5, 1.0):
            rep = enumerate_exact(m, float(m.mu[0]), spec_of(1, 1), "lacvar", epsilon=eps)
            assert rep.best.objective == pytest.approx(
                cvar_by_sorting(losses, eps), abs=1e-9
            )

    def test_mad_hand_case(self):
        r = np.array([[0.01], [0.03]])
        m = estimate(ReturnScenarios(("A0",), r))
        rep = enumerate_exact(m, 0.02, spec_of(1, 1), "lamad")
        assert rep.best.objective == pytest.approx(0.01, abs=1e-12)

    def test_mad_zero_variance_asset(self):
        r = np.array([[0.02], [0.02], [0.02]])
        m = estimate(ReturnScenarios(("A0",), r))
        rep = enumerate_exact(m, 0.02, spec_of(1, 1), "lamad")
        assert rep.best.objective == pytest.approx(0.0, abs=1e-15)

    def test_scenario_models_require_scenarios(self, rng):
        m = model_of([0.01, 0.02], np.eye(2))
        with pytest.raises(ValueError, match="scenarios"):
            enumerate_exact(m, 0.015, spec_of(2, 2), "lamad")


class TestMonotonicity:
    def test_value_nonincreasing_in_k(self, rng):
        m = scenario_model(rng, 8, 12)
        rho = float(np.quantile(m.mu, 0.7))
        vals = []
        for k in (1, 2, 3, 4):
            rep = enumerate_exact(m, rho, spec_of(8, k), "lam")
            vals.append(rep.best.objective)
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_value_monotone_in_bounds(self, rng):
        m = scenario_model(rng, 7, 10)
        rho = float(np.quantile(m.mu, 0.5))
        loose = enumerate_exact(m, rho, spec_of(7, 3, lower=0.0, upper=1.0), "lam")
        tight_l = enumerate_exact(m, rho, spec_of(7, 3, lower=0.2, upper=1.0), "lam")
        tight_u = enumerate_exact(m, rho, spec_of(7, 3, lower=0.0, upper=0.6), "lam")
        assert loose.best.objective <= tight_l.best.objective + 1e-12
        assert loose.best.objective <= tight_u.best.objective + 1e-12


def test_guards_refuse_large_instances(rng):
    m = scenario_model(rng, 26, 4)
    with pytest.raises(ValueError, match="n=26"):
        enumerate_exact(m, 0.0, spec_of(26, 2), "lam")
    m = scenario_model(rng, 25, 4)
    with pytest.raises(ValueError, match="subsets"):
        enumerate_exact(m, 0.0, spec_of(25, 13), "lam")


def test_unknown_model_rejected(rng):
    m = scenario_model(rng, 3, 5)
    with pytest.raises(ValueError, match="unknown oracle model"):
        enumerate_exact(m, 0.01, spec_of(3, 2), "sharpe")
