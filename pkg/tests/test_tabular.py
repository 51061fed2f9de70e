"""Tests for exact entropy-regularized policy evaluation, improvement and iteration."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from scipy import optimize

from genac.entropy import EntropyMeasure
from genac.tabular import (ImprovementError, MonotonicityViolation, TabularMdp, TabularPolicy,
                           bellman_backup, contraction_ratio, corrupted_backup, evaluate, improve,
                           policy_iteration, random_mdp, run_property_suite, softmax_policy)

from _oracles import (discrete_entropy, optimal_q_value_iteration, policy_q_linear_solve,
                      sparsemax, tsallis_argmax)

SH = EntropyMeasure.shannon()
TS2 = EntropyMeasure.tsallis(2.0)
RE2 = EntropyMeasure.renyi(2.0)
MEASURES = [SH, TS2, EntropyMeasure.tsallis(1.5), RE2, EntropyMeasure.renyi(1.5)]


def mdp_from_seed(seed, S=4, A=3, gamma=0.9):
    return random_mdp(S, A, gamma, np.random.default_rng(seed))


class TestMdp:
    def test_json_round_trip(self, tmp_path):
        mdp = mdp_from_seed(0)
        mdp.save(tmp_path / "m.json")
        back = TabularMdp.load(tmp_path / "m.json")
        assert_array_equal(back.P, mdp.P)
        assert_array_equal(back.r, mdp.r)
        assert back.gamma == mdp.gamma

    def test_validation(self):
        with pytest.raises(ValueError):
            TabularMdp(np.full((2, 1, 2), 0.6), np.zeros((2, 1)), 0.5)
        with pytest.raises(ValueError):
            TabularMdp(np.full((2, 1, 2), 0.5), np.zeros((2, 1)), 1.0)
        with pytest.raises(ValueError):
            TabularPolicy(np.array([[0.5, 0.6]]))


class TestBackup:
    def test_myopic(self):
        mdp = mdp_from_seed(1, gamma=0.0)
        pi = TabularPolicy.uniform(4, 3)
        Q = np.random.default_rng(0).normal(size=(4, 3))
        assert_array_equal(bellman_backup(mdp, pi, Q, SH, 0.7), mdp.r)

    def test_classical_evaluation_deterministic_policy(self):
        mdp = mdp_from_seed(2)
        pi = TabularPolicy(np.eye(3)[[0, 2, 1, 1]])
        Q = evaluate(mdp, pi, SH, 0.0, tol=1e-12).Q
        assert_allclose(Q, policy_q_linear_solve(mdp.P, mdp.r, mdp.gamma, pi.probs, "shannon",
                                                 1.0, 0.0), atol=1e-11)

    @pytest.mark.parametrize("measure", MEASURES, ids=lambda m: m.label())
    def test_contraction_1000_pairs(self, measure):
        rng = np.random.default_rng(3)
        mdp = mdp_from_seed(3, gamma=0.8)
        pi = TabularPolicy(rng.dirichlet(np.ones(3), size=4))
        worst = max(contraction_ratio(mdp, pi, *rng.normal(0, 3, (2, 4, 3)), measure, 0.5)
                    for _ in range(1000))
        assert worst <= 0.8 + 1e-12

    def test_corrupted_backup_expands(self):
        rng = np.random.default_rng(4)
        mdp = mdp_from_seed(4, gamma=0.8)
        pi = TabularPolicy.uniform(4, 3)
        ratios = [contraction_ratio(mdp, pi, *rng.normal(size=(2, 4, 3)), SH, 0.5,
                                    backup=corrupted_backup) for _ in range(50)]
        assert max(ratios) > 0.8


class TestEvaluate:
    def test_myopic_one_iteration(self):
        mdp = mdp_from_seed(5, gamma=0.0)
        ev = evaluate(mdp, TabularPolicy.uniform(4, 3), TS2, 0.5)
        assert ev.iterations == 1
        assert_array_equal(ev.Q, mdp.r)

    @pytest.mark.parametrize("measure", MEASURES, ids=lambda m: m.label())
    def test_two_state_linear_solve(self, measure):
        rng = np.random.default_rng(6)
        mdp = random_mdp(2, 2, 0.9, rng)
        pi = TabularPolicy(rng.dirichlet(np.ones(2), size=2))
        Q = evaluate(mdp, pi, measure, 0.7, tol=1e-11).Q
        ref = policy_q_linear_solve(mdp.P, mdp.r, 0.9, pi.probs, measure.kind, measure.index, 0.7)
        assert np.max(np.abs(Q - ref)) <= 1e-8

    def test_error_decays_at_gamma(self):
        mdp = mdp_from_seed(7, gamma=0.85)
        pi = TabularPolicy.uniform(4, 3)
        ev = evaluate(mdp, pi, RE2, 0.5, tol=1e-12)
        d = np.array(ev.deltas)
        assert np.all(d[1:] <= 0.85 * d[:-1] + 1e-14)

    def test_divergent_backup_reported(self):
        mdp = mdp_from_seed(8, gamma=0.9)
        with pytest.raises(RuntimeError):
            evaluate(mdp, TabularPolicy.uniform(4, 3), SH, 0.5, backup=corrupted_backup)


class TestImprove:
    def test_shannon_softmax(self):
        Q = np.random.default_rng(9).normal(size=(6, 4))
        pol = improve(None, Q, SH, 1.0)
        z = np.exp(Q - Q.max(1, keepdims=True))
        assert np.max(np.abs(pol.probs - z / z.sum(1, keepdims=True))) <= 1e-6
        assert_allclose(softmax_policy(Q, 1.0).probs, z / z.sum(1, keepdims=True), rtol=1e-14)

    @pytest.mark.parametrize("measure", [SH, TS2, RE2], ids=lambda m: m.label())
    def test_greedy_limit(self, measure):
        Q = np.random.default_rng(10).normal(size=(5, 4))
        pol = improve(None, Q, measure, 1e-6)
        best = Q >= Q.max(1, keepdims=True)
        assert np.all((pol.probs * best).sum(1) >= 1 - 1e-3)

    def test_alpha_zero_greedy_with_ties(self):
        Q = np.array([[1.0, 1.0, 0.0]])
        assert_array_equal(improve(None, Q, SH, 0.0).probs, [[0.5, 0.5, 0.0]])

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 2.0])
    def test_tsallis2_is_sparsemax(self, alpha):
        """q=2: maximize p.Q - alpha |p|^2, i.e. project Q / (2 alpha) onto the simplex."""
        Q = np.random.default_rng(11).normal(size=(8, 4))
        pol = improve(None, Q, TS2, alpha)
        ref = np.array([sparsemax(row / (2 * alpha)) for row in Q])
        assert np.max(np.abs(pol.probs - ref)) <= 1e-6

    def test_tsallis2_sparse_support(self):
        """Large Q gaps: actions outside the KKT support get (numerically) zero mass."""
        Q = np.array([[3.0, 2.9, 0.0, -1.0]])
        pol = improve(None, Q, TS2, 0.1)
        ref = sparsemax(Q[0] / 0.2)
        assert np.count_nonzero(ref) == 2
        assert np.all(pol.probs[0, ref == 0] <= 1e-7)

    @pytest.mark.parametrize("q", [1.5, 2.5, 3.0])
    def test_tsallis_kkt_oracle(self, q):
        Q = np.random.default_rng(12).normal(size=(5, 3))
        pol = improve(None, Q, EntropyMeasure.tsallis(q), 0.4)
        ref = np.array([tsallis_argmax(row, 0.4, q) for row in Q])
        assert np.max(np.abs(pol.probs - ref)) <= 1e-6

    @pytest.mark.parametrize("eta", [1.5, 2.0, 3.0])
    def test_renyi_objective_not_below_slsqp(self, eta):
        Q = np.random.default_rng(13).normal(size=(5, 3))
        pol = improve(None, Q, EntropyMeasure.renyi(eta), 0.5)
        for s, row in enumerate(Q):
            f = lambda p: -(p @ row + 0.5 * discrete_entropy(np.clip(p, 1e-15, 1), "renyi", eta))
            ref = optimize.minimize(f, np.full(3, 1 / 3), method="SLSQP", bounds=[(0, 1)] * 3,
                                    constraints=[{"type": "eq", "fun": lambda p: p.sum() - 1}],
                                    options={"ftol": 1e-14, "maxiter": 500})
            assert -f(pol.probs[s]) >= -ref.fun - 1e-8

    def test_warm_start_never_worse(self):
        """Starting from any policy, every state's objective does not decrease."""
        rng = np.random.default_rng(14)
        Q = rng.normal(size=(6, 4))
        for m in MEASURES:
            init = rng.dirichlet(np.ones(4), size=6)
            pol = improve(None, Q, m, 0.5, init=init)
            obj = lambda P: np.array([p @ q + 0.5 * discrete_entropy(p, m.kind, m.index)
                                      for p, q in zip(P, Q)])
            assert np.all(obj(pol.probs) >= obj(init) - 1e-10)

    def test_iteration_cap_raises(self):
        Q = np.random.default_rng(15).normal(size=(3, 4))
        with pytest.raises(ImprovementError):
            improve(None, Q, RE2, 0.5, tol=1e-15, max_iter=2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(MEASURES), st.floats(0.05, 5.0))
def test_improvement_output_on_simplex(seed, measure, alpha):
    Q = np.random.default_rng(seed).normal(0, 2, size=(3, 4))
    p = improve(None, Q, measure, alpha).probs
    assert np.all(p >= 0)
    assert_allclose(p.sum(1), 1.0, atol=1e-12)


class TestPolicyIteration:
    def test_single_state_shannon(self):
        r = np.array([[1.0, 0.5, -0.3]])
        mdp = TabularMdp(np.ones((1, 3, 1)), r, 0.8)
        res = policy_iteration(mdp, SH, 0.5)
        z = np.exp(r[0] / 0.5)
        assert np.max(np.abs(res.policy.probs[0] - z / z.sum())) <= 1e-6

    @pytest.mark.parametrize("q", [1.5, 2.0])
    def test_single_state_tsallis(self, q):
        r = np.array([[1.0, 0.8, -0.3]])
        mdp = TabularMdp(np.ones((1, 3, 1)), r, 0.8)
        res = policy_iteration(mdp, EntropyMeasure.tsallis(q), 0.5)
        assert np.max(np.abs(res.policy.probs[0] - tsallis_argmax(r[0], 0.5, q))) <= 1e-6

    def test_alpha_zero_matches_value_iteration(self):
        for seed in range(10):
            mdp = random_mdp(5, 3, 0.9, np.random.default_rng(seed))
            res = policy_iteration(mdp, SH, 0.0, tol=1e-10)
            Q_vi = optimal_q_value_iteration(mdp.P, mdp.r, 0.9)
            assert np.max(np.abs(res.Q - Q_vi)) <= 1e-8

    @pytest.mark.parametrize("measure", [SH, TS2, RE2], ids=lambda m: m.label())
    def test_monotone_on_100_seeds(self, measure):
        for seed in range(100):
            mdp = random_mdp(5, 3, 0.9, np.random.default_rng(seed))
            res = policy_iteration(mdp, measure, 0.5)
            assert all(e.min_gain >= -1e-6 for e in res.audit)
            assert res.audit[-1].q_change < 1e-8

    def test_q_change_decreasing_after_first(self):
        mdp = random_mdp(6, 4, 0.95, np.random.default_rng(21))
        res = policy_iteration(mdp, TS2, 0.3, tol=1e-10)
        changes = [e.q_change for e in res.audit]
        assert all(b <= a + 1e-9 for a, b in zip(changes[1:], changes[2:]))

    def test_corrupted_backup_flagged(self):
        mdp = random_mdp(4, 3, 0.9, np.random.default_rng(0))
        with pytest.raises((MonotonicityViolation, RuntimeError)):
            policy_iteration(mdp, SH, 0.5, backup=corrupted_backup)


class TestPropertySuite:
    def test_small_suite_passes(self):
        results = run_property_suite(seeds=range(10))
        assert all(r.passed for r in results), [r for r in results if not r.passed]
        assert {r.name for r in results} == {"contraction", "monotone_improvement",
                                             "convergence", "softmax_equivalence"}

    def test_gamma_zero_included(self):
        """Seed 0 is a gamma=0 case; the suite must still pass on it alone."""
        assert all(r.passed for r in run_property_suite(seeds=[0, 5]))

    def test_fault_injection_detected(self):
        results = run_property_suite(seeds=range(10), backup=corrupted_backup)
        assert not all(r.passed for r in results)
        assert not next(r for r in results if r.name == "contraction").passed
