"""Tests for entropy measures, closed forms and sample estimators."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy import integrate, stats

from genac.entropy import (DiagonalGaussian, EntropyMeasure, discrete_entropy, estimate_entropy,
                           gaussian_shannon_entropy, log_tanh_jacobian, q_log,
                           renyi_discrete, renyi_gaussian_entropy, renyi_gaussian_integral,
                           renyi_squashed_integral_estimate, shannon_discrete,
                           shannon_estimate, tsallis_discrete, tsallis_estimate)

from _oracles import shannon, squashed_power_integral

N_MC = 1_000_000


def within_se(samples, exact, n_se=3.0):
    mean = samples.mean()
    se = samples.std(ddof=1) / math.sqrt(samples.size)
    return abs(mean - exact) <= n_se * se, mean, se


class TestMeasure:
    def test_index_one_normalized(self):
        assert EntropyMeasure.make("tsallis", 1.0).kind == "shannon"
        assert EntropyMeasure.renyi(1.0).kind == "shannon"

    def test_direct_index_one_rejected(self):
        with pytest.raises(ValueError):
            EntropyMeasure("tsallis", 1.0)

    def test_bad_kind_and_index(self):
        with pytest.raises(ValueError):
            EntropyMeasure("boltzmann", 2.0)
        with pytest.raises(ValueError):
            EntropyMeasure("renyi", 0.5)

    def test_labels(self):
        assert EntropyMeasure.tsallis(2).label() == "tsallis(2)"
        assert EntropyMeasure.shannon().label() == "shannon"


class TestQLog:
    def test_unit_argument(self):
        for q in (1.0, 1.5, 2.0, 3.0):
            assert q_log(1.0, q) == 0.0

    def test_q_one_is_log(self):
        assert_allclose(q_log(math.e, 1.0), 1.0)

    def test_hand_value(self):
        assert_allclose(q_log(0.5, 2.0), -0.5)

    def test_rejects_q_below_one(self):
        with pytest.raises(ValueError):
            q_log(0.5, 0.5)


class TestDiscrete:
    def test_deterministic_zero(self):
        p = np.array([1.0, 0.0, 0.0])
        assert tsallis_discrete(p, 2.0) == 0.0
        assert shannon_discrete(p) == 0.0

    def test_uniform_tsallis(self):
        assert_allclose(tsallis_discrete(np.full(4, 0.25), 2.0), 0.75)

    def test_shannon_limit(self):
        p = np.array([0.1, 0.2, 0.3, 0.4])
        assert abs(tsallis_discrete(p, 1.0 + 1e-6) - shannon(p)) <= 1e-5
        assert abs(tsallis_discrete(p, 1.0) - shannon(p)) <= 1e-8

    def test_renyi_uniform(self):
        assert_allclose(renyi_discrete(np.full(5, 0.2), 2.0), math.log(5))

    def test_dispatch(self):
        p = np.array([0.5, 0.5])
        assert_allclose(discrete_entropy(p, EntropyMeasure.shannon()), math.log(2))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8).filter(lambda v: sum(v) > 1e-3),
       st.floats(1.0001, 4.0))
def test_discrete_nonnegative(weights, index):
    p = np.array(weights) / sum(weights)
    assert shannon_discrete(p) >= -1e-12
    assert tsallis_discrete(p, index) >= -1e-12
    assert renyi_discrete(p, index) >= -1e-12


class TestEstimators:
    def test_zero_log_probs(self):
        assert tsallis_estimate(np.zeros(5), 2.0) == 0.0
        assert shannon_estimate(np.zeros(5)) == 0.0

    def test_hand_values(self):
        assert_allclose(tsallis_estimate(np.array([math.log(0.5)]), 2.0), 0.5)
        assert_allclose(shannon_estimate(np.log([0.5, 0.5])), math.log(2))

    def test_tsallis_q_one_equals_shannon(self):
        lp = np.random.default_rng(0).normal(size=9)
        assert tsallis_estimate(lp, 1.0) == shannon_estimate(lp)

    def test_batched_last_axis(self):
        lp = np.random.default_rng(1).normal(size=(3, 9))
        out = tsallis_estimate(lp, 1.5)
        assert out.shape == (3,)
        assert_allclose(out[1], tsallis_estimate(lp[1], 1.5))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            shannon_estimate(np.zeros(0))

    @pytest.mark.parametrize("q", [1.5, 2.0, 2.5])
    def test_tsallis_unbiased_on_gaussian(self, q):
        """Mean of the single-sample estimator over 1e6 draws vs quadrature."""
        sigma = 0.7
        rng = np.random.default_rng(int(q * 10))
        x = rng.normal(0.0, sigma, N_MC)
        lp = stats.norm.logpdf(x, scale=sigma)
        per_sample = -(np.exp((q - 1) * lp) - 1) / (q - 1)
        pw, _ = integrate.quad(lambda t: stats.norm.pdf(t, scale=sigma) ** q, -np.inf, np.inf)
        exact = (1 - pw) / (q - 1)
        ok, mean, se = within_se(per_sample, exact)
        assert ok, (mean, exact, se)
        assert_allclose(tsallis_estimate(lp, q), per_sample.mean(), rtol=1e-12)


class TestRenyiGaussian:
    def test_unit_integral(self):
        g = DiagonalGaussian(np.zeros(1), np.zeros(1))
        assert_allclose(renyi_gaussian_integral(g, 2.0), 1 / (2 * math.sqrt(math.pi)), rtol=1e-14)

    def test_product_structure(self):
        g = DiagonalGaussian(np.zeros(2), np.log([0.5, 2.0]))
        g1 = DiagonalGaussian(np.zeros(1), np.log([0.5]))
        g2 = DiagonalGaussian(np.zeros(1), np.log([2.0]))
        for eta in (1.5, 2.0, 3.0):
            assert_allclose(renyi_gaussian_integral(g, eta),
                            renyi_gaussian_integral(g1, eta) * renyi_gaussian_integral(g2, eta),
                            rtol=1e-13)

    def test_integral_by_quadrature(self):
        g = DiagonalGaussian(np.array([0.3]), np.log([0.4]))
        val, _ = integrate.quad(lambda t: stats.norm.pdf(t, 0.3, 0.4) ** 2.5, -np.inf, np.inf)
        assert_allclose(renyi_gaussian_integral(g, 2.5), val, rtol=1e-9)

    @pytest.mark.parametrize("eta", [1.5, 2.0, 3.0])
    def test_integral_monte_carlo(self, eta):
        """E_{a~N}[N(a)^(eta-1)] equals the integral of N^eta."""
        sig = np.array([0.8, 1.3])
        g = DiagonalGaussian(np.array([0.2, -0.1]), np.log(sig))
        x = g.sample(np.random.default_rng(42), N_MC)
        per_sample = np.exp((eta - 1) * stats.norm.logpdf(x, g.mean, sig).sum(axis=1))
        ok, mean, se = within_se(per_sample, renyi_gaussian_integral(g, eta))
        assert ok, (mean, se)

    def test_entropy_hand_value(self):
        g = DiagonalGaussian(np.zeros(1), np.zeros(1))
        assert_allclose(renyi_gaussian_entropy(g, 2.0),
                        0.5 * math.log(2 * math.pi) + 0.5 * math.log(2), rtol=1e-14)
        assert_allclose(renyi_gaussian_entropy(g, 2.0), 1.26551, atol=1e-5)

    def test_shannon_limit(self):
        g = DiagonalGaussian(np.zeros(3), np.log([0.5, 1.0, 2.0]))
        expect = 1.5 * (math.log(2 * math.pi) + 1) + math.log(0.5) + math.log(2.0)
        assert_allclose(gaussian_shannon_entropy(g), expect, rtol=1e-14)
        assert abs(renyi_gaussian_entropy(g, 1 + 1e-6) - expect) <= 1e-6

    def test_scaling_shift(self):
        g = DiagonalGaussian(np.zeros(2), np.log([0.5, 1.5]))
        c = 3.0
        g2 = DiagonalGaussian(np.zeros(2), g.log_std + math.log(c))
        assert_allclose(renyi_gaussian_entropy(g2, 2.0) - renyi_gaussian_entropy(g, 2.0),
                        2 * math.log(c), rtol=1e-12)

    def test_rejects_eta_one(self):
        g = DiagonalGaussian(np.zeros(1), np.zeros(1))
        with pytest.raises(ValueError):
            renyi_gaussian_integral(g, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 1.5), min_size=1, max_size=4), st.floats(1.01, 5.0))
def test_renyi_entropy_integral_consistency(log_std, eta):
    g = DiagonalGaussian(np.zeros(len(log_std)), np.array(log_std))
    via_integral = math.log(renyi_gaussian_integral(g, eta)) / (1 - eta)
    assert abs(renyi_gaussian_entropy(g, eta) - via_integral) <= 1e-10


class TestSquashed:
    def test_quadrature_agreement(self):
        """eta=2, mean 0, std 1: estimator vs quadrature of int pi^2 over (-1, 1)."""
        mu = DiagonalGaussian(np.zeros(1), np.zeros(1))
        u = np.random.default_rng(3).normal(size=(N_MC, 1))
        est = renyi_squashed_integral_estimate(mu, u, 2.0)
        per_sample = stats.norm.pdf(u[:, 0]) / (1 - np.tanh(u[:, 0]) ** 2)
        assert_allclose(est, per_sample.mean(), rtol=1e-10)
        ok, mean, se = within_se(per_sample, squashed_power_integral(0.0, 1.0, 2.0))
        assert ok, (mean, se)

    @pytest.mark.parametrize("mean,std,eta", [(0.5, 0.6, 1.5), (-0.3, 0.3, 2.5)])
    def test_quadrature_other_policies(self, mean, std, eta):
        mu = DiagonalGaussian(np.array([mean]), np.log([std]))
        u = np.random.default_rng(5).normal(mean, std, size=(N_MC, 1))
        per_sample = np.exp((eta - 1) * (stats.norm.logpdf(u[:, 0], mean, std)
                                         - np.log(1 - np.tanh(u[:, 0]) ** 2)))
        assert_allclose(renyi_squashed_integral_estimate(mu, u, eta), per_sample.mean(),
                        rtol=1e-9)
        ok, m, se = within_se(per_sample, squashed_power_integral(mean, std, eta))
        assert ok, (m, se)

    def test_single_sample_at_origin(self):
        mu = DiagonalGaussian(np.zeros(1), np.zeros(1))
        est = renyi_squashed_integral_estimate(mu, np.zeros((1, 1)), 2.0)
        assert_allclose(est, 1 / math.sqrt(2 * math.pi), rtol=1e-14)

    def test_permutation_invariant(self):
        mu = DiagonalGaussian(np.zeros(2), np.zeros(2))
        u = np.random.default_rng(0).normal(size=(9, 2))
        a = renyi_squashed_integral_estimate(mu, u, 1.5)
        b = renyi_squashed_integral_estimate(mu, u[::-1], 1.5)
        assert_allclose(a, b, rtol=1e-14)

    def test_saturated_sample_finite(self):
        mu = DiagonalGaussian(np.zeros(1), np.zeros(1))
        est = renyi_squashed_integral_estimate(mu, np.array([[40.0]]), 2.0)
        assert np.isfinite(est) and est >= 0

    def test_log_jacobian_stable(self):
        u = np.array([[0.0], [1.0], [30.0], [-400.0]])
        ref = np.log(1 - np.tanh(u[:2, 0]) ** 2)
        out = log_tanh_jacobian(u)
        assert_allclose(out[:2], ref, rtol=1e-14)
        assert np.all(np.isfinite(out))
        assert_allclose(out[3], 2 * (math.log(2) - 400.0), rtol=1e-14)


def test_estimate_entropy_dispatch():
    lp = np.random.default_rng(2).normal(size=(2, 9))
    assert_allclose(estimate_entropy(lp, EntropyMeasure.shannon()), shannon_estimate(lp))
    assert_allclose(estimate_entropy(lp, EntropyMeasure.tsallis(2)), tsallis_estimate(lp, 2))
    with pytest.raises(ValueError):
        estimate_entropy(lp, EntropyMeasure.renyi(2))
    assert_allclose(estimate_entropy(lp, EntropyMeasure.renyi(2), np.array([0.5, 0.25])),
                    [math.log(2), math.log(4)])
