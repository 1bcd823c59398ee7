"""Pulsed-run posteriors: closed forms, quadrature oracles, and protocol averages."""

import math

import numpy as np
import pytest
from oracles import (
    equal_two_detector_oracle,
    linear_product_posterior,
    one_detector_posterior_oracle,
    truncated_dirichlet3_oracle,
)

from photostat.detector_model import DetectorParams
from photostat.errors import DomainError, UnsupportedConfigurationError
from photostat.pulsed_inference import (
    CountRecord,
    PosteriorMoments,
    detection_prob,
    effective_dark_rate,
    equal_two_detector_posterior,
    k_outcome_log_likelihood,
    k_outcome_posterior,
    single_detector_posterior,
    two_detector_click_probs,
    unequal_two_detector_posterior,
)

REF = DetectorParams.from_alpha_beta(0.1, 0.2)
PERFECT = DetectorParams(alpha=0.0, eta=1.0)


class TestCountRecord:
    def test_counts_cannot_exceed_runs(self):
        with pytest.raises(DomainError):
            CountRecord((60, 50), runs=100)

    def test_n_used(self):
        assert CountRecord((60, 30), runs=100).n_used == 90


class TestPosteriorMoments:
    def test_cov_and_std(self):
        pm = PosteriorMoments(mean=np.array([0.4]), second_origin=np.array([[0.18]]))
        assert pm.cov[0, 0] == pytest.approx(0.18 - 0.16, rel=1e-14)
        assert pm.std[0] == pytest.approx(math.sqrt(0.02), rel=1e-14)

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            PosteriorMoments(mean=np.array([0.4, 0.6]), second_origin=np.array([[0.2]]))


class TestDetectionProb:
    def test_endpoints(self):
        assert detection_prob(0.0, REF) == pytest.approx(0.1, rel=1e-14)
        assert detection_prob(1.0, REF) == pytest.approx(0.8, rel=1e-14)

    def test_interior(self):
        assert detection_prob(0.5, REF) == pytest.approx(0.45, rel=1e-14)


class TestSingleDetectorPosterior:
    def test_untruncated_beta_values(self):
        post = single_detector_posterior(3, 8, DetectorParams(alpha=0.0, eta=1.0))
        assert post.mean[0] == pytest.approx(0.4, rel=1e-12)
        assert post.second_origin[0, 0] == pytest.approx(20.0 / 110.0, rel=1e-12)
        assert post.var[0] == pytest.approx(20.0 / 110.0 - 0.16, rel=1e-10)

    def test_quadrature_oracle(self):
        post = single_detector_posterior(50, 100, REF)
        mu_ref, sd_ref = one_detector_posterior_oracle(50, 100, 0.1, 0.2)
        assert post.mean[0] == pytest.approx(mu_ref, rel=1e-8)
        assert post.std[0] == pytest.approx(sd_ref, rel=1e-8)

    def test_low_count_plateau_is_near_but_not_at_zero(self):
        n = 10_000
        g = int(0.08 * n)  # relative frequency below the dark rate
        post = single_detector_posterior(g, n, REF)
        assert 0.0 < post.mean[0] < 0.01

    def test_mean_monotone_in_count(self):
        means = [single_detector_posterior(g, 100, REF).mean[0] for g in range(101)]
        assert all(b >= a - 1e-12 for a, b in zip(means, means[1:]))

    def test_mean_strictly_interior(self):
        for g, n in [(0, 100), (100, 100), (0, 10_000), (10_000, 10_000)]:
            mu = single_detector_posterior(g, n, REF).mean[0]
            assert 0.0 < mu < 1.0

    def test_correction_factor_tends_to_one(self):
        # near-ideal detectors reproduce the plain beta posterior mean
        nearly_ideal = DetectorParams(alpha=1e-9, eta=1.0 - 1e-9)
        post = single_detector_posterior(30, 100, nearly_ideal)
        assert post.mean[0] == pytest.approx(31.0 / 102.0, rel=1e-6)

    def test_large_n_plateau_bounds(self):
        n = 10_000
        lo_edge = 0.1 - 3.0 * math.sqrt(0.1 / n)
        hi_edge = 0.8 + 3.0 * math.sqrt(0.2 / n)
        for frac in (0.0, 0.04, lo_edge / 2.0, lo_edge):
            g = int(math.floor(frac * n))
            assert single_detector_posterior(g, n, REF).mean[0] < 0.02
        for frac in (hi_edge, (hi_edge + 1.0) / 2.0, 0.95, 1.0):
            g = int(math.ceil(frac * n))
            assert single_detector_posterior(g, n, REF).mean[0] > 0.98

    def test_zero_information_detector(self):
        with pytest.raises(DomainError):
            single_detector_posterior(5, 10, DetectorParams(alpha=0.3, eta=0.0))


class TestEffectiveDarkRate:
    def test_reference_value(self):
        assert effective_dark_rate(REF, REF) == pytest.approx(0.02 / 0.74, rel=1e-12)

    def test_no_dark_counts(self):
        clean = DetectorParams(alpha=0.0, eta=0.6)
        assert effective_dark_rate(clean, clean) == 0.0
        assert effective_dark_rate(clean, clean, k_outcomes=5) == 0.0

    def test_k2_equals_general_formula(self):
        alpha, beta = 0.1, 0.2
        expected = alpha * beta / ((1.0 - alpha) * (1.0 - beta) + alpha * beta)
        assert effective_dark_rate(REF, REF, k_outcomes=2) == pytest.approx(expected, rel=1e-14)

    def test_k2_bounds(self):
        # the upper bound 2*alpha*beta needs (1-alpha)(1-beta)+alpha*beta >= 1/2,
        # i.e. moderately imperfect detectors; the lower bound always holds
        for alpha, beta in [(0.05, 0.1), (0.3, 0.4), (0.01, 0.45), (0.1, 0.2)]:
            params = DetectorParams.from_alpha_beta(alpha, beta)
            a = effective_dark_rate(params, params)
            assert alpha * beta - 1e-15 <= a <= 2.0 * alpha * beta + 1e-15

    def test_non_identical_rejected(self):
        other = DetectorParams(alpha=0.1, eta=0.5)
        with pytest.raises(UnsupportedConfigurationError):
            effective_dark_rate(REF, other, k_outcomes=3)


class TestTwoDetectorClickProbs:
    def test_perfect_detectors(self):
        q00, q01, q10, q11 = two_detector_click_probs(0.7, PERFECT, PERFECT)
        assert (q00, q11) == (0.0, 0.0)
        assert q10 == pytest.approx(0.7, rel=1e-14)
        assert q01 == pytest.approx(0.3, rel=1e-14)

    @pytest.mark.parametrize("p", [0.0, 0.5, 1.0])
    def test_identical_neither_or_both_constant(self, p):
        q00, q01, q10, q11 = two_detector_click_probs(p, REF, REF)
        assert q00 + q11 == pytest.approx(0.26, rel=1e-12)

    def test_normalization_random_params(self, rng):
        for _ in range(20):
            d1 = DetectorParams(alpha=float(rng.uniform(0, 0.5)), eta=float(rng.uniform(0, 1)))
            d2 = DetectorParams(alpha=float(rng.uniform(0, 0.5)), eta=float(rng.uniform(0, 1)))
            qs = two_detector_click_probs(float(rng.uniform(0, 1)), d1, d2)
            assert math.fsum(qs) == pytest.approx(1.0, abs=1e-14)


class TestEqualTwoDetectorPosterior:
    def test_zero_dark_rate_matches_ideal_single_detector(self):
        ref = single_detector_posterior(7, 16, PERFECT)
        post = equal_two_detector_posterior(7, 9, 0.0)
        assert post.mean[0] == pytest.approx(ref.mean[0], rel=1e-12)
        assert post.var[0] == pytest.approx(ref.var[0], rel=1e-10)

    def test_symmetric_counts_give_half(self):
        for g in (0, 3, 50):
            assert equal_two_detector_posterior(g, g, 0.027).mean[0] == pytest.approx(
                0.5, abs=1e-12
            )

    def test_quadrature_oracle(self):
        a = 0.02 / 0.74
        post = equal_two_detector_posterior(70, 30, a)
        mu_ref, sd_ref = equal_two_detector_oracle(70, 30, a)
        assert post.mean[0] == pytest.approx(mu_ref, rel=1e-8)
        assert post.std[0] == pytest.approx(sd_ref, rel=1e-8)

    def test_no_data_returns_truncated_uniform_prior(self):
        post = equal_two_detector_posterior(0, 0, 0.1)
        assert post.mean[0] == pytest.approx(0.5, abs=1e-12)
        assert post.var[0] == pytest.approx(1.0 / 12.0, rel=1e-9)

    def test_dark_rate_domain(self):
        with pytest.raises(DomainError):
            equal_two_detector_posterior(3, 4, 0.5)


class TestUnequalTwoDetectorPosterior:
    def test_identical_detectors_reduce_to_equal_path(self):
        # with equal detectors the merged factor is constant and drops out
        a = effective_dark_rate(REF, REF)
        ref = equal_two_detector_posterior(70, 30, a)
        post = unequal_two_detector_posterior(70, 30, REF, REF, g0=50)
        assert post.mean[0] == pytest.approx(ref.mean[0], rel=1e-8)
        assert post.std[0] == pytest.approx(ref.std[0], rel=1e-7)

    def test_two_factor_form_matches_g0_zero(self):
        without_n = unequal_two_detector_posterior(
            12, 5, REF, DetectorParams(alpha=0.05, eta=0.6)
        )
        with_zero = unequal_two_detector_posterior(
            12, 5, REF, DetectorParams(alpha=0.05, eta=0.6), g0=0
        )
        assert without_n.mean[0] == pytest.approx(with_zero.mean[0], rel=1e-10)

    def test_simpson_oracle(self):
        d1 = DetectorParams(alpha=0.05, eta=0.8)
        d2 = DetectorParams(alpha=0.15, eta=0.6)
        post = unequal_two_detector_posterior(60, 30, d1, d2, g0=10)
        coeffs = [
            (d1.alpha * d2.beta, (1 - d1.beta) * (1 - d2.alpha) - d1.alpha * d2.beta),
            ((1 - d1.alpha) * (1 - d2.beta), d1.beta * d2.alpha - (1 - d1.alpha) * (1 - d2.beta)),
            (
                (1 - d1.alpha) * d2.beta + d1.alpha * (1 - d2.beta),
                d1.beta * (1 - d2.alpha)
                + (1 - d1.beta) * d2.alpha
                - (1 - d1.alpha) * d2.beta
                - d1.alpha * (1 - d2.beta),
            ),
        ]
        mu_ref, sd_ref = linear_product_posterior(coeffs, [60, 30, 10])
        assert post.mean[0] == pytest.approx(mu_ref, rel=1e-7)
        assert post.std[0] == pytest.approx(sd_ref, rel=1e-6)
        # frozen oracle values for this exact configuration
        assert post.mean[0] == pytest.approx(0.6794442912059, rel=1e-9)
        assert post.std[0] == pytest.approx(0.0530041555911, rel=1e-7)

    def test_perfect_detectors_recover_beta_mean(self):
        post = unequal_two_detector_posterior(14, 6, PERFECT, PERFECT, g0=0)
        assert post.mean[0] == pytest.approx(15.0 / 22.0, rel=1e-9)

    def test_no_data_rejected(self):
        with pytest.raises(DomainError):
            unequal_two_detector_posterior(0, 0, REF, REF)


class TestKOutcomePosterior:
    def test_zero_truncation_matches_dirichlet(self):
        from photostat.distributions import DirichletParams, dirichlet_moments

        rec = CountRecord((4, 9, 1))
        post = k_outcome_posterior(rec, 0.0)
        ref_mean, _ = dirichlet_moments(DirichletParams((5.0, 10.0, 2.0)))
        np.testing.assert_allclose(post.mean, ref_mean, rtol=1e-12)

    def test_k2_matches_equal_two_detector_path(self):
        a = 0.03
        post = k_outcome_posterior(CountRecord((70, 30)), a)
        ref = equal_two_detector_posterior(70, 30, a)
        assert post.mean[0] == pytest.approx(ref.mean[0], rel=1e-11)
        assert post.var[0] == pytest.approx(ref.var[0], rel=1e-9)
        # second outcome is the mirror image
        assert post.mean[1] == pytest.approx(1.0 - ref.mean[0], rel=1e-11)

    def test_k3_grid_oracle(self):
        rec = CountRecord((9, 9, 49))
        post = k_outcome_posterior(rec, 0.1, method="saddle-quad")
        _, r_mean, r_second = truncated_dirichlet3_oracle((10.0, 10.0, 50.0), 0.1)
        slope = 1.0 - 3.0 * 0.1
        p_mean = (r_mean - 0.1) / slope
        np.testing.assert_allclose(post.mean, p_mean, rtol=1e-3)

    def test_mean_sums_to_one(self):
        post = k_outcome_posterior(CountRecord((9, 9, 49)), 0.1, method="saddle-quad")
        assert post.mean.sum() == pytest.approx(1.0, abs=1e-8)

    def test_beta_product_second_moments_within_five_percent(self):
        rec = CountRecord((9, 9, 49))
        ref = k_outcome_posterior(rec, 0.1, method="saddle-quad")
        approx = k_outcome_posterior(rec, 0.1, method="beta-product")
        rel = np.abs(approx.second_origin - ref.second_origin) / np.abs(ref.second_origin)
        assert rel.max() <= 0.05

    def test_truncation_above_limit_rejected(self):
        with pytest.raises(DomainError):
            k_outcome_posterior(CountRecord((5, 5, 5)), 0.34)

    def test_diagnostics(self):
        post = k_outcome_posterior(
            CountRecord((9, 9, 49)), 0.1, method="saddle-quad", with_diagnostics=True
        )
        assert "J_values_log" in post.diagnostics
        assert post.diagnostics["saddle_residual"] <= 1e-10

    def test_log_likelihood_helper(self):
        val = k_outcome_log_likelihood([0.2, 0.3, 0.5], 0.1, [2, 3, 5])
        expected = (
            2 * math.log(0.1 + 0.7 * 0.2)
            + 3 * math.log(0.1 + 0.7 * 0.3)
            + 5 * math.log(0.1 + 0.7 * 0.5)
        )
        assert val == pytest.approx(expected, rel=1e-14)


class TestExpectedPosteriorSigma:
    """Protocol averages; references computed independently with scipy."""

    @pytest.mark.parametrize(
        "p,expected",
        [(0.0, 0.03261423), (0.5, 0.06969930), (1.0, 0.03935971)],
    )
    def test_one_detector(self, p, expected):
        from photostat.pulsed_inference import expected_posterior_sigma

        val = expected_posterior_sigma(p, 100, REF, "one-detector")
        assert val == pytest.approx(expected, abs=5e-5)

    def test_one_detector_matches_published_reference(self):
        from photostat.pulsed_inference import expected_posterior_sigma

        assert expected_posterior_sigma(0.0, 100, REF, "one-detector") == pytest.approx(
            0.033, abs=0.002
        )

    @pytest.mark.parametrize("p,expected", [(0.0, 0.02064693), (0.5, 0.05991846)])
    def test_two_detector(self, p, expected):
        from photostat.pulsed_inference import expected_posterior_sigma

        val = expected_posterior_sigma(p, 100, REF, "two-detector")
        assert val == pytest.approx(expected, abs=5e-5)

    @pytest.mark.parametrize("p,expected", [(0.5, 0.05182956), (1.0, 0.01671135)])
    def test_two_detector_constrained(self, p, expected):
        from photostat.pulsed_inference import expected_posterior_sigma

        val = expected_posterior_sigma(p, 100, REF, "two-detector-constrained")
        assert val == pytest.approx(expected, abs=5e-5)

    def test_constrained_matches_published_reference(self):
        from photostat.pulsed_inference import expected_posterior_sigma

        assert expected_posterior_sigma(
            1.0, 100, REF, "two-detector-constrained"
        ) == pytest.approx(0.017, abs=0.002)

    def test_unknown_setup(self):
        from photostat.pulsed_inference import expected_posterior_sigma

        with pytest.raises(DomainError):
            expected_posterior_sigma(0.5, 100, REF, "three-detector")
