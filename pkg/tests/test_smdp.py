import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SLOW, FAST, delays, entropy_oracle, models
from uoi_sampling import (
    CapBindingWarning,
    ConfigError,
    DelayPmf,
    NonConvergence,
    PolicyTable,
    SolverConfig,
    bisec_rvi,
    cycle_cost,
    equilibrium_belief,
    evaluate_policy,
    rvi_solve,
    transition_kernel,
)
from uoi_sampling.average_cost import dinkelbach_bisection, relative_value_iteration
from uoi_sampling.markov import observed_belief
from uoi_sampling.policy import DecisionState
from uoi_sampling.smdp import build_tables, decision_states, default_anchor, default_z_max

BIMODAL6 = DelayPmf.bimodal(6)


def brute_force_optimum(model, delay, z_cap):
    """Minimum exact average UoI over every stationary table with waits <= z_cap."""
    states = decision_states(delay)
    best = (np.inf, None)
    for zs in itertools.product(range(z_cap + 1), repeat=len(states)):
        table = PolicyTable("bf", dict(zip(states, zs)))
        best = min(best, (evaluate_policy(model, delay, table).avg_uoi, zs), key=lambda t: t[0])
    return best


def bellman_backup(model, delay, beta, values, state, z, kernel):
    """One Bellman backup assembled from the per-state primitives."""
    s, y = state
    omega = observed_belief(model, s, y)
    future = 0.0
    for y_next, m in delay:
        hi = transition_kernel(model, omega, z, y_next, kernel)
        future += m * (hi * values[DecisionState(1, y_next)] + (1 - hi) * values[DecisionState(0, y_next)])
    return cycle_cost(model, delay, omega, z, beta) + future


class TestCycleCost:
    def test_single_slot(self):
        d1 = DelayPmf.deterministic(1)
        assert cycle_cost(SLOW, d1, 0.5, 0, 0.0) == 1.0
        assert cycle_cost(SLOW, d1, 0.3, 0, 0.25) == pytest.approx(entropy_oracle(0.3) - 0.25, abs=1e-15)

    def test_three_slot_example(self):
        c = cycle_cost(SLOW, DelayPmf.deterministic(2), 0.0, 1, 0.0)
        expected = entropy_oracle(0.0) + entropy_oracle(0.05) + entropy_oracle(0.0875)
        assert c == pytest.approx(expected, abs=1e-14)
        # 0 + H(0.05) + H(0.0875) = 0 + 0.28640 + 0.42807
        assert c == pytest.approx(0.71447, abs=5e-5)

    def test_negative_wait(self):
        with pytest.raises(ValueError):
            cycle_cost(SLOW, BIMODAL6, 0.2, -1, 0.0)

    @settings(max_examples=50, deadline=None)
    @given(models(), delays(max_y=8), st.integers(0, 1), st.floats(0.0, 1.0))
    def test_tables_match_direct_sum(self, model, delay, s, beta):
        tables = build_tables(model, delay, 6)
        cost = tables.cost(beta)
        for i, (s_, y) in enumerate(tables.states):
            omega = observed_belief(model, s_, y)
            for z in (0, 3, 6):
                assert cost[i, z] == pytest.approx(cycle_cost(model, delay, omega, z, beta), abs=1e-12)


class TestTransitionKernel:
    @given(models(), st.integers(0, 30), st.integers(1, 30), st.sampled_from(["corrected", "paper"]))
    def test_fixed_point(self, model, z, y, kernel):
        w = equilibrium_belief(model)
        assert transition_kernel(model, w, z, y, kernel) == pytest.approx(w, abs=1e-14)

    def test_examples(self):
        assert transition_kernel(SLOW, 0.37, 0, 5, "corrected") == 0.37
        assert transition_kernel(SLOW, 0.0, 0, 1, "paper") == pytest.approx(0.05, abs=1e-15)

    def test_unknown_kernel(self):
        with pytest.raises(ConfigError):
            transition_kernel(SLOW, 0.1, 0, 1, "nope")

    @settings(max_examples=30, deadline=None)
    @given(models(), delays(), st.sampled_from(["corrected", "paper"]))
    def test_rows_are_distributions(self, model, delay, kernel):
        t = build_tables(model, delay, 4, kernel).trans
        assert np.all(t >= 0)
        assert np.allclose(t.sum(axis=2), 1.0, atol=1e-14)


class TestRelativeValueIteration:
    def test_two_state_chain(self):
        # uniform mixing with costs 1 and 3: gain 2 and h = (0, 2)
        cost = np.array([[1.0], [3.0]])
        trans = np.full((2, 1, 2), 0.5)
        out = relative_value_iteration(cost, trans, 0)
        assert out.gain == pytest.approx(2.0)
        assert out.values == pytest.approx([0.0, 2.0])

    def test_tie_breaks_to_smallest_action(self):
        cost = np.array([[1.0, 1.0, 2.0]])
        trans = np.ones((1, 3, 1))
        assert relative_value_iteration(cost, trans, 0).policy[0] == 0

    def test_nonconvergence(self):
        # periodic chain: RVI without aperiodicity transform oscillates
        cost = np.array([[0.0], [1.0]])
        trans = np.array([[[0.0, 1.0]], [[1.0, 0.0]]])
        with pytest.raises(NonConvergence):
            relative_value_iteration(cost, trans, 0, max_iters=5, initial=np.array([0.0, 10.0]))


class TestRviSolve:
    @pytest.mark.filterwarnings("ignore::uoi_sampling.CapBindingWarning")
    @pytest.mark.parametrize("model", [SLOW, FAST], ids=["slow", "fast"])
    def test_gain_nonincreasing_in_beta(self, model):
        gains = [rvi_solve(model, BIMODAL6, b).g_beta for b in (0.0, 0.25, 0.5, 0.75, 1.0)]
        assert all(a >= b for a, b in zip(gains, gains[1:]))
        assert gains[-1] <= 0.0
        assert gains[0] >= 0.0

    def test_anchor_value_zero(self):
        sol = rvi_solve(SLOW, BIMODAL6, 0.5)
        assert sol.values[default_anchor(BIMODAL6)] == 0.0

    @pytest.mark.parametrize("kernel", ["corrected", "paper"])
    @pytest.mark.parametrize("model", [SLOW, FAST], ids=["slow", "fast"])
    def test_bellman_residual(self, model, kernel):
        cfg = SolverConfig(kernel=kernel)
        beta = 0.6
        sol = rvi_solve(model, BIMODAL6, beta, cfg)
        z_max = default_z_max(model, BIMODAL6)
        for state in decision_states(BIMODAL6):
            q = [bellman_backup(model, BIMODAL6, beta, sol.values, state, z, kernel) for z in range(z_max + 1)]
            assert abs(min(q) - (sol.g_beta + sol.values[state])) < 10 * cfg.rvi_span_tol
            assert sol.policy[state] == int(np.argmin(q))

    def test_cap_warning(self):
        # at beta near 1 every slot has negative cost so waiting forever pays
        with pytest.warns(CapBindingWarning):
            rvi_solve(SLOW, BIMODAL6, 1.0, SolverConfig(z_max=2))

    def test_g_near_zero_at_optimum(self):
        res = bisec_rvi(SLOW, BIMODAL6)
        g = rvi_solve(SLOW, BIMODAL6, res.beta_opt).g_beta
        length = 1 + 10 * BIMODAL6.mean
        assert abs(g) < res_tol_in_gain(1e-4, length)


def res_tol_in_gain(eps, cycle_len):
    # |g| <= |beta - beta_opt| * expected cycle length, with a margin for bracketing
    return 2 * eps * cycle_len


class TestBisecRvi:
    @pytest.mark.parametrize("model", [SLOW, FAST], ids=["slow", "fast"])
    @pytest.mark.parametrize("y", [2, 6, 20])
    def test_sign_property(self, model, y):
        delay = DelayPmf.bimodal(y)
        cfg = SolverConfig()
        res = bisec_rvi(model, delay, cfg)
        eps = cfg.bisection_tol
        assert 0.0 <= res.beta_opt <= 1.0
        assert rvi_solve(model, delay, res.beta_opt - 10 * eps, cfg).g_beta > 0
        assert rvi_solve(model, delay, res.beta_opt + 10 * eps, cfg).g_beta < 0

    @pytest.mark.parametrize(
        "model,delay,cap",
        [(FAST, BIMODAL6, 3), (SLOW, DelayPmf.bimodal(20), 4), (SLOW, DelayPmf.parse("2:0.5,5:0.5"), 4)],
        ids=["fast-y6", "slow-y20", "two-point"],
    )
    def test_matches_brute_force(self, model, delay, cap):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CapBindingWarning)
            res = bisec_rvi(model, delay, SolverConfig(z_max=cap, bisection_tol=1e-8))
        best, zs = brute_force_optimum(model, delay, cap)
        assert res.beta_opt == pytest.approx(best, abs=1e-7)
        assert evaluate_policy(model, delay, res.policy).avg_uoi == pytest.approx(best, abs=1e-9)

    @settings(max_examples=15, deadline=None)
    @given(models(), delays(max_y=5, max_atoms=2))
    def test_random_brute_force(self, model, delay):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CapBindingWarning)
            res = bisec_rvi(model, delay, SolverConfig(z_max=3, bisection_tol=1e-8))
        best, _ = brute_force_optimum(model, delay, 3)
        assert res.beta_opt == pytest.approx(best, abs=1e-7)

    def test_anchor_independence(self):
        delay = DelayPmf.bimodal(10)
        a = bisec_rvi(SLOW, delay)
        b = bisec_rvi(SLOW, delay, SolverConfig(anchor=DecisionState(1, 10)))
        assert a.beta_opt == b.beta_opt
        assert a.policy.waits == b.policy.waits
        shift = {s: a.rel_values[s] - b.rel_values[s] for s in a.rel_values}
        assert max(shift.values()) - min(shift.values()) < 1e-6
        assert b.rel_values[DecisionState(1, 10)] == 0.0

    def test_anchor_without_unit_delay(self):
        delay = DelayPmf.parse("3:0.5,7:0.5")
        assert default_anchor(delay) == DecisionState(0, 3)
        with pytest.raises(ConfigError):
            bisec_rvi(SLOW, delay, SolverConfig(anchor=DecisionState(0, 1)))

    def test_deterministic(self):
        a = bisec_rvi(FAST, DelayPmf.bimodal(12))
        b = bisec_rvi(FAST, DelayPmf.bimodal(12))
        assert a == b

    def test_beats_zero_wait_exactly(self):
        for y in (2, 6, 10, 14, 20):
            delay = DelayPmf.bimodal(y)
            res = bisec_rvi(SLOW, delay)
            zw = evaluate_policy(SLOW, delay, PolicyTable("zw", {}, default=0)).avg_uoi
            assert res.beta_opt <= zw + 1e-4

    @pytest.mark.parametrize("bad", [dict(z_max=0), dict(bisection_tol=0.0), dict(kernel="x"), dict(rvi_max_iters=0)])
    def test_config_validation(self, bad):
        with pytest.raises(ConfigError):
            SolverConfig(**bad)


class TestDinkelbachBisection:
    def test_linear_root(self):
        beta, n = dinkelbach_bisection(lambda b: 0.3 - b, 0.0, 1.0, 1e-6)
        assert beta == pytest.approx(0.3, abs=1e-6)
        assert n == 20
