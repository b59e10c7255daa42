import re

import numpy as np
import pytest

from cardfolio.lam_solver import LimitedAssetSpec
from cardfolio.linalg_qp import solve_lp
from cardfolio.market_data import ReturnScenarios, estimate
from cardfolio.milp_solver import (
    BnbConfig,
    branch_and_bound,
    build_lacvar,
    build_lamad,
    downside_semideviation,
    portfolio_cvar,
    portfolio_mad,
    solve_linear_risk,
)
from cardfolio.oracle import enumerate_exact
from oracle_utils import cvar_by_sorting


def scenario_model(rng, n, t):
    r = rng.normal(0.002, 0.02, size=(t, n))
    return estimate(ReturnScenarios(tuple(f"A{i}" for i in range(n)), r))


def model_from_returns(returns):
    r = np.asarray(returns, dtype=float)
    names = tuple(f"A{i}" for i in range(r.shape[1]))
    return estimate(ReturnScenarios(names, r))


def spec_of(n, k, lower=0.0, upper=1.0, preassigned=()):
    return LimitedAssetSpec(n=n, k=k, lower=lower, upper=upper, preassigned=preassigned)


def cvar_scan(losses, eps):
    # scan the piecewise-linear quantile objective at its vertices
    best = np.inf
    for zeta in losses:
        best = min(best, zeta + np.maximum(losses - zeta, 0.0).mean() / eps)
    return float(best)


class TestBuilders:
    def test_tail_loss_counts(self, rng):
        m = scenario_model(rng, 2, 3)
        inst = build_lacvar(m, float(m.mu.mean()), spec_of(2, 1), epsilon=0.5)
        assert inst.counts() == (6, 2, 8)
        # merged linking convention: actual LP carries one extra row per asset
        assert inst.lp.a.shape[0] == 8 + 2
        assert inst.lp.a.shape[1] == 6 + 2
        assert inst.binaries == (6, 7)

    def test_absolute_deviation_counts(self, rng):
        m = scenario_model(rng, 2, 3)
        inst = build_lamad(m, float(m.mu.mean()), spec_of(2, 1))
        assert inst.counts() == (5, 2, 11)
        assert inst.lp.a.shape[0] == 11 + 2
        assert inst.lp.a.shape[1] == 5 + 2

    def test_selector_bounds_and_preassignment(self, rng):
        m = scenario_model(rng, 3, 5)
        inst = build_lamad(m, float(m.mu.mean()), spec_of(3, 2, preassigned=(1,)))
        y_lo = inst.lp.bounds[list(inst.binaries), 0]
        y_hi = inst.lp.bounds[list(inst.binaries), 1]
        assert y_lo.tolist() == [0.0, 1.0, 0.0]
        assert y_hi.tolist() == [1.0, 1.0, 1.0]

    def test_epsilon_validated(self, rng):
        m = scenario_model(rng, 2, 4)
        for bad in (0.0, -0.1, 1.2):
            with pytest.raises(ValueError):
                build_lacvar(m, 0.0, spec_of(2, 1), epsilon=bad)

    def test_scenarios_required(self):
        from cardfolio.linalg_qp import SymMatrix
        from cardfolio.market_data import MarketModel

        m = MarketModel(("A", "B"), np.array([0.01, 0.02]), SymMatrix(np.eye(2)))
        with pytest.raises(ValueError, match="scenario"):
            build_lamad(m, 0.015, spec_of(2, 1))


class TestHandValues:
    def test_tail_loss_single_asset_half_tail(self):
        m = model_from_returns([[0.01], [-0.03]])
        inst = build_lacvar(m, float(m.mu[0]), spec_of(1, 1), epsilon=0.5)
        sol = branch_and_bound(inst)
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(0.03, abs=1e-10)
        assert portfolio_cvar([1.0], m.scenarios, 0.5) == pytest.approx(0.03, abs=1e-15)

    def test_tail_loss_full_tail_is_mean_loss(self):
        m = model_from_returns([[0.01], [-0.03]])
        inst = build_lacvar(m, float(m.mu[0]), spec_of(1, 1), epsilon=1.0)
        sol = branch_and_bound(inst)
        assert sol.objective == pytest.approx(-float(m.mu[0]), abs=1e-10)

    def test_absolute_deviation_single_asset(self):
        m = model_from_returns([[0.01], [0.03]])
        inst = build_lamad(m, 0.02, spec_of(1, 1))
        sol = branch_and_bound(inst)
        assert sol.objective == pytest.approx(0.01, abs=1e-10)
        assert portfolio_mad([1.0], m.scenarios) == pytest.approx(0.01, abs=1e-15)

    def test_constant_returns_have_zero_deviation(self):
        m = model_from_returns([[0.02], [0.02], [0.02]])
        inst = build_lamad(m, 0.02, spec_of(1, 1))
        sol = branch_and_bound(inst)
        assert sol.objective == pytest.approx(0.0, abs=1e-12)


class TestBranchAndBound:
    def test_integral_root_takes_one_node(self):
        m = model_from_returns([[0.01], [-0.03], [0.02]])
        inst = build_lacvar(m, float(m.mu[0]), spec_of(1, 1), epsilon=0.5)
        lines = []
        sol = branch_and_bound(inst, log=lines.append)
        assert sol.status == "optimal"
        assert sum(1 for s in lines if s.startswith("NODE")) == 1

    def test_node_log_format(self, rng):
        m = scenario_model(rng, 4, 10)
        inst = build_lamad(m, float(m.mu.mean()), spec_of(4, 2, lower=0.05))
        lines = []
        branch_and_bound(inst, log=lines.append)
        node_re = re.compile(r"^NODE \d+ bound=\S+ incumbent=\S+ open=\d+$")
        assert lines, "expected at least one log line"
        for s in lines[:-1]:
            assert node_re.match(s), s
        assert re.match(r"^GAP \S+$", lines[-1])

    def test_gap_recorded_within_tolerance(self, rng):
        m = scenario_model(rng, 5, 12)
        cfg = BnbConfig(abs_gap_tol=1e-8)
        inst = build_lamad(m, float(m.mu.mean()), spec_of(5, 2, lower=0.05))
        sol = branch_and_bound(inst, cfg)
        assert sol.status == "optimal"
        assert sol.gap is not None
        assert 0.0 <= sol.gap <= cfg.abs_gap_tol

    def test_node_limit_reports_tolerance_limited(self, rng):
        m = scenario_model(rng, 6, 10)
        inst = build_lamad(m, float(m.mu.mean()), spec_of(6, 2, lower=0.10))
        lines = []
        full = branch_and_bound(inst, log=lines.append)
        n_nodes = sum(1 for s in lines if s.startswith("NODE"))
        assert full.status == "optimal"
        if n_nodes > 1:
            capped = branch_and_bound(inst, BnbConfig(node_limit=1))
            assert capped.status == "tolerance-limited"

    def test_infeasible_target_return(self, rng):
        m = scenario_model(rng, 3, 8)
        rho = float(m.mu.max()) + 1.0
        sol = branch_and_bound(build_lamad(m, rho, spec_of(3, 2)))
        assert sol.status == "infeasible"
        assert not sol.support

    def test_unconstrained_limit_matches_plain_program(self, rng):
        m = scenario_model(rng, 4, 12)
        rho = float(np.quantile(m.mu, 0.5))
        spec = spec_of(4, 4, lower=0.0, upper=1.0)
        for model, eps in (("lamad", None), ("lacvar", 0.25)):
            if model == "lamad":
                inst = build_lamad(m, rho, spec)
                plain = solve_linear_risk(m, rho, "mad")
            else:
                inst = build_lacvar(m, rho, spec, epsilon=eps)
                plain = solve_linear_risk(m, rho, "cvar", epsilon=eps)
            sol = branch_and_bound(inst)
            assert sol.objective == pytest.approx(plain.objective, abs=1e-9)

    def test_root_relaxation_bounds_from_below(self, rng):
        m = scenario_model(rng, 5, 10)
        rho = float(np.quantile(m.mu, 0.4))
        inst = build_lacvar(m, rho, spec_of(5, 2, lower=0.05), epsilon=0.5)
        root = solve_lp(inst.lp)
        sol = branch_and_bound(inst)
        assert sol.status == "optimal"
        assert root.value <= sol.objective + 1e-9

    def test_every_enumerated_support_bounds_from_above(self, rng):
        m = scenario_model(rng, 5, 8)
        rho = float(np.quantile(m.mu, 0.5))
        spec = spec_of(5, 2, lower=0.05)
        sol = branch_and_bound(build_lamad(m, rho, spec), BnbConfig(abs_gap_tol=1e-8))
        rep = enumerate_exact(m, rho, spec, "lamad", log=True)
        feasible = [v for _, v, st in rep.per_subset_log if st == "ok"]
        assert feasible
        for v in feasible:
            assert sol.objective <= v + 1e-7

    def test_matches_exhaustive_oracle(self, rng):
        cases = [
            ("lamad", None, 4, 8, 2, 0.0, 1.0),
            ("lamad", None, 5, 12, 3, 0.05, 1.0),
            ("lamad", None, 5, 9, 2, 0.05, 0.6),
            ("lacvar", 1.0, 4, 8, 2, 0.0, 1.0),
            ("lacvar", 0.5, 5, 10, 2, 0.05, 1.0),
            ("lacvar", 0.25, 5, 12, 3, 0.05, 0.6),
        ]
        cfg = BnbConfig(abs_gap_tol=1e-8)
        for model, eps, n, t, k, lo, hi in cases:
            m = scenario_model(rng, n, t)
            spec = spec_of(n, k, lower=lo, upper=hi)
            for q in (0.35, 0.65):
                rho = float(np.quantile(m.mu, q))
                if model == "lamad":
                    inst = build_lamad(m, rho, spec)
                    rep = enumerate_exact(m, rho, spec, "lamad")
                else:
                    inst = build_lacvar(m, rho, spec, epsilon=eps)
                    rep = enumerate_exact(m, rho, spec, "lacvar", epsilon=eps)
                sol = branch_and_bound(inst, cfg)
                assert sol.status == rep.best.status
                if sol.status == "optimal":
                    scale = max(1.0, abs(rep.best.objective))
                    assert abs(sol.objective - rep.best.objective) <= 1e-8 * scale

    def test_preassignment_respected_and_oracle_equal(self, rng):
        m = scenario_model(rng, 5, 10)
        rho = float(np.quantile(m.mu, 0.5))
        spec = spec_of(5, 3, lower=0.05, preassigned=(2,))
        sol = branch_and_bound(build_lamad(m, rho, spec), BnbConfig(abs_gap_tol=1e-8))
        rep = enumerate_exact(m, rho, spec, "lamad")
        assert sol.status == "optimal"
        assert 2 in sol.support
        assert sol.objective == pytest.approx(rep.best.objective, abs=1e-8)

    def test_value_improves_with_cardinality(self, rng):
        m = scenario_model(rng, 6, 12)
        rho = float(np.quantile(m.mu, 0.5))
        vals = []
        for k in (2, 3, 4):
            sol = branch_and_bound(build_lamad(m, rho, spec_of(6, k, lower=0.05)))
            assert sol.status == "optimal"
            vals.append(sol.objective)
        assert vals[1] <= vals[0] + 1e-9
        assert vals[2] <= vals[1] + 1e-9

    def test_config_validation(self):
        with pytest.raises(ValueError):
            BnbConfig(abs_gap_tol=0.0)


class TestLinearRisk:
    def test_solution_is_consistent_with_evaluators(self, rng):
        m = scenario_model(rng, 5, 15)
        rho = float(np.quantile(m.mu, 0.5))
        mad = solve_linear_risk(m, rho, "mad")
        assert mad.status == "optimal"
        assert mad.achieved_return == pytest.approx(rho, abs=1e-9)
        assert portfolio_mad(mad.weights, m.scenarios) == pytest.approx(
            mad.objective, abs=1e-9
        )
        cvar = solve_linear_risk(m, rho, "cvar", epsilon=0.25)
        assert portfolio_cvar(cvar.weights, m.scenarios, 0.25) == pytest.approx(
            cvar.objective, abs=1e-9
        )

    def test_unreachable_target_is_infeasible(self, rng):
        m = scenario_model(rng, 3, 10)
        sol = solve_linear_risk(m, float(m.mu.max()) + 0.5, "mad")
        assert sol.status == "infeasible"

    def test_unknown_model_rejected(self, rng):
        m = scenario_model(rng, 3, 6)
        with pytest.raises(ValueError, match="unknown"):
            solve_linear_risk(m, 0.0, "sharpe")


class TestRiskEvaluators:
    def test_absolute_deviation_doubles_the_semideviation(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 6))
            t = int(rng.integers(3, 30))
            r = rng.normal(0.0, 0.05, size=(t, n))
            sc = ReturnScenarios(tuple(f"A{i}" for i in range(n)), r)
            w = rng.dirichlet(np.ones(n))
            assert portfolio_mad(w, sc) == pytest.approx(
                2.0 * downside_semideviation(w, sc), abs=1e-12
            )

    def test_full_tail_equals_mean_loss(self, rng):
        r = rng.normal(0.001, 0.03, size=(17, 4))
        sc = ReturnScenarios(("A", "B", "C", "D"), r)
        w = rng.dirichlet(np.ones(4))
        assert portfolio_cvar(w, sc, 1.0) == pytest.approx(
            float(-(r @ w).mean()), abs=1e-12
        )

    def test_tail_loss_nonincreasing_in_epsilon(self, rng):
        r = rng.normal(0.0, 0.02, size=(40, 3))
        sc = ReturnScenarios(("A", "B", "C"), r)
        w = rng.dirichlet(np.ones(3))
        vals = [portfolio_cvar(w, sc, e) for e in (0.01, 0.05, 0.25, 1.0)]
        for lo_eps, hi_eps in zip(vals, vals[1:]):
            assert hi_eps <= lo_eps + 1e-12

    def test_tail_loss_matches_quantile_scan(self, rng):
        for _ in range(50):
            t = int(rng.integers(3, 25))
            losses = rng.normal(0.0, 0.04, size=t)
            sc = ReturnScenarios(("A",), -losses.reshape(-1, 1))
            for eps in (0.07, 0.25, 0.5, 0.9, 1.0):
                got = portfolio_cvar([1.0], sc, eps)
                assert got == pytest.approx(cvar_scan(losses, eps), abs=1e-12)
                assert got == pytest.approx(cvar_by_sorting(losses, eps), abs=1e-12)

    def test_epsilon_validated(self, rng):
        sc = ReturnScenarios(("A",), np.array([[0.01], [0.02]]))
        with pytest.raises(ValueError):
            portfolio_cvar([1.0], sc, 0.0)
