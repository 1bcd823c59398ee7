"""Continuous-wave inference: dark-rate statistics, posterior, scale factors."""

import math

import numpy as np
import pytest
from oracles import inverse_gamma_density, weighted_two_factor_posterior_oracle

from photostat.cw_inference import (
    CwExperiment,
    cw_posterior,
    povm_scale_factors,
    truncation_negligible,
    y_stats,
)
from photostat.errors import DomainError
from photostat.nuisance import ImpreciseParam
from photostat.pulsed_inference import CountRecord, k_outcome_log_likelihood, k_outcome_posterior


class TestCwExperiment:
    def test_validation(self):
        with pytest.raises(DomainError):
            CwExperiment((0, 0), alpha=0.1)
        with pytest.raises(DomainError):
            CwExperiment((5, 5), alpha=-0.1)
        with pytest.raises(DomainError):
            CwExperiment((5, 5), alpha=0.1, b=0.0)

    def test_derived(self):
        exp = CwExperiment((5, 7, 8), alpha=0.1)
        assert exp.n_total == 20
        assert exp.k_outcomes == 3


class TestYStats:
    def test_reference_values(self):
        ip, mode = y_stats(100, 0.1)
        assert ip.mu == pytest.approx(0.001, rel=1e-14)
        assert ip.sigma == pytest.approx(0.1 / (100.0 * math.sqrt(99.0)), rel=1e-14)
        assert ip.sigma == pytest.approx(1.00504e-4, rel=1e-5)
        assert ip.skew == pytest.approx(4.0 * math.sqrt(99.0) / 98.0, rel=1e-14)
        assert ip.skew == pytest.approx(0.40612, rel=1e-4)
        assert mode == pytest.approx(0.1 / 102.0, rel=1e-14)

    def test_limits_for_large_counts(self):
        ip_small, _ = y_stats(10, 0.1)
        ip_big, _ = y_stats(10_000, 0.1)
        assert ip_big.sigma / ip_big.mu < ip_small.sigma / ip_small.mu
        assert ip_big.sigma / ip_big.mu < 0.02
        assert ip_big.skew < 0.05

    @pytest.mark.parametrize("n", [3, 10, 100, 5000])
    def test_mode_below_mean(self, n):
        ip, mode = y_stats(n, 0.2)
        assert mode < ip.mu

    @pytest.mark.parametrize("n", [50, 200, 1000])
    def test_pearson_mode_skewness_interpretation(self, n):
        ip, mode = y_stats(n, 0.1)
        pearson = (ip.mu - mode) / (ip.sigma / 2.0)
        assert pearson == pytest.approx(ip.skew, rel=0.2)

    def test_needs_three_counts(self):
        with pytest.raises(DomainError):
            y_stats(2, 0.1)


class TestTruncationNegligible:
    def test_no_dark_counts(self):
        assert truncation_negligible(1, 4, 0.0)

    def test_tiny_run_fails(self):
        # 1 < 1 + 0.4 + 3 sqrt(0.4)
        assert not truncation_negligible(1, 4, 0.1)

    def test_moderate_run_passes(self):
        assert truncation_negligible(100, 4, 0.1)


class TestCwPosterior:
    def test_degenerate_spread_matches_pulsed_at_mean_dark_rate(self):
        counts = (20, 30, 50)
        alpha, b = 0.1, 2.0
        exp = CwExperiment(counts, alpha=alpha, b=b)
        mu_y = alpha / exp.n_total
        frozen = ImpreciseParam(mu_y, 1e-12, 0.0)
        post = cw_posterior(exp, m=3, y_override=frozen)
        ref = k_outcome_posterior(CountRecord(counts), mu_y, method="saddle-quad")
        np.testing.assert_allclose(post.mean, b * ref.mean, rtol=1e-7)
        np.testing.assert_allclose(post.second_origin, b * b * ref.second_origin, rtol=1e-6)

    def test_two_outcome_oracle(self):
        exp = CwExperiment((70, 30), alpha=0.1, b=1.0)
        post = cw_posterior(exp, m=4)
        ip, _ = y_stats(100, 0.1)
        ys = np.linspace(max(ip.mu - 8 * ip.sigma, 1e-9), ip.mu + 10 * ip.sigma, 4001)
        ep, ep2 = weighted_two_factor_posterior_oracle(
            70, 30, ys, inverse_gamma_density(ys, 0.1, 100)
        )
        assert post.mean[0] == pytest.approx(ep, rel=1e-3)
        assert post.second_origin[0, 0] == pytest.approx(ep2, rel=1e-3)

    def test_scale_halves_with_b(self):
        full = cw_posterior(CwExperiment((70, 30), alpha=0.1, b=1.0))
        half = cw_posterior(CwExperiment((70, 30), alpha=0.1, b=0.5))
        np.testing.assert_allclose(half.mean, 0.5 * full.mean, rtol=1e-12)
        np.testing.assert_allclose(half.second_origin, 0.25 * full.second_origin, rtol=1e-12)

    def test_mean_sums_to_b(self):
        for b in (1.0, 0.7):
            post = cw_posterior(CwExperiment((20, 30, 50), alpha=0.1, b=b), method="saddle-quad")
            assert post.mean.sum() == pytest.approx(b, abs=1e-6)

    def test_more_counts_shrink_the_spread(self):
        sds = []
        for scale in (1, 5, 25):
            post = cw_posterior(CwExperiment((70 * scale, 30 * scale), alpha=0.1))
            sds.append(float(post.std[0]))
        assert sds[2] < sds[1] < sds[0]

    def test_likelihood_reduces_to_pulsed_form(self):
        # at fixed dark rate y the CW factor equals the pulsed K-outcome
        # likelihood evaluated at scaled probabilities
        y, b, counts = 0.004, 0.8, (12, 7, 21)
        k = len(counts)
        p = np.array([0.2, 0.25, 0.35])  # sums to b
        direct = sum(
            g * math.log(y + (1.0 - k * y) * pi / b) for g, pi in zip(counts, p)
        )
        assert k_outcome_log_likelihood(p / b, y, counts) == pytest.approx(direct, rel=1e-14)

    def test_small_run_refused(self):
        with pytest.raises(DomainError):
            cw_posterior(CwExperiment((1, 0), alpha=0.4))

    def test_node_beyond_simplex_refused(self):
        exp = CwExperiment((20, 30, 50), alpha=0.1)
        huge = ImpreciseParam(0.35, 1e-3, 0.0)
        with pytest.raises(DomainError):
            cw_posterior(exp, y_override=huge)

    def test_negative_node_clamped_with_warning(self):
        exp = CwExperiment((70, 30), alpha=0.1)
        wide = ImpreciseParam(0.001, 0.0008, 0.0)  # mu - 3 sigma < 0 at m=4
        post = cw_posterior(exp, m=4, y_override=wide)
        assert post.diagnostics["warnings"]


class TestPovmScaleFactors:
    def test_scalar_operator_sum(self):
        assert povm_scale_factors(2.0, 2.0, 3) == (1.0, 1.0)

    def test_zero_smallest_eigenvalue(self):
        phi1, phi2 = povm_scale_factors(0.0, 1.0, 3)
        assert phi1 == pytest.approx(0.75, rel=1e-14)
        assert phi2 == pytest.approx(0.6, rel=1e-14)

    def test_extended_precision_reference(self):
        # frozen 50-digit values for r = 0.9, K = 4
        phi1, phi2 = povm_scale_factors(0.9, 1.0, 4)
        assert phi1 == pytest.approx(0.95262576330328583891, rel=1e-14)
        assert phi2 == pytest.approx(0.90832412523020257827, rel=1e-14)

    def test_continuity_at_equal_eigenvalues(self):
        for eps in (1e-9, 1e-12, 1e-15):
            phi1, phi2 = povm_scale_factors(1.0 - eps, 1.0, 5)
            assert phi1 == pytest.approx(1.0, abs=5.0 * eps)
            assert phi2 == pytest.approx(1.0, abs=5.0 * eps)

    def test_monotone_in_ratio(self):
        vals = [povm_scale_factors(r, 1.0, 4)[0] for r in np.linspace(0.0, 0.999, 40)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_domain(self):
        with pytest.raises(DomainError):
            povm_scale_factors(0.5, 0.0, 3)
        with pytest.raises(DomainError):
            povm_scale_factors(2.0, 1.0, 3)
