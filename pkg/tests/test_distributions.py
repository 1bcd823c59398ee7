"""Distribution building blocks: values, normalization, and moment identities."""

import math

import numpy as np
import pytest

from photostat.distributions import (
    DirichletParams,
    dirichlet_moments,
    gamma_bulk_threshold,
    gamma_pdf,
    log_gamma_pdf,
    poisson_pmf,
)
from photostat.errors import DomainError
from photostat.quadrature import composite_simpson
from photostat.specfun import reg_gamma_p


class TestPoisson:
    def test_zero_count(self):
        lam = 1.7
        assert poisson_pmf(0, lam) == pytest.approx(math.exp(-lam), rel=1e-14)

    def test_small_value(self):
        assert poisson_pmf(2, 1.0) == pytest.approx(1.0 / (2.0 * math.e), rel=1e-13)

    def test_normalization(self):
        lam = 7.0
        kmax = int(math.ceil(lam + 20.0 * math.sqrt(lam)))
        total = math.fsum(poisson_pmf(k, lam) for k in range(kmax + 1))
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_mean_and_variance(self):
        lam = 3.3
        kmax = 80
        ws = [poisson_pmf(k, lam) for k in range(kmax)]
        mean = math.fsum(k * w for k, w in enumerate(ws))
        second = math.fsum(k * k * w for k, w in enumerate(ws))
        assert mean == pytest.approx(lam, abs=1e-10)
        assert second - mean * mean == pytest.approx(lam, abs=1e-9)

    def test_large_count_is_overflow_safe(self):
        val = poisson_pmf(1_000_000, 1_000_000.0)
        # Stirling: pmf(lam, lam) ~ 1/sqrt(2 pi lam)
        assert val == pytest.approx(1.0 / math.sqrt(2.0 * math.pi * 1e6), rel=1e-3)

    def test_domain(self):
        with pytest.raises(DomainError):
            poisson_pmf(1, 0.0)
        with pytest.raises(DomainError):
            poisson_pmf(-1, 1.0)


class TestGammaPdf:
    def test_unit_shape(self):
        assert gamma_pdf(1.0, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-14)

    def test_numeric_mean(self):
        alpha = 9.0
        hi = gamma_bulk_threshold(alpha) + 40.0
        mean = composite_simpson(
            lambda x: x * np.exp(-x + (alpha - 1.0) * np.log(np.maximum(x, 1e-300)) - math.lgamma(alpha)),
            0.0,
            hi,
            200_000,
        )
        assert mean == pytest.approx(alpha, abs=1e-8)

    def test_pole_at_zero_for_small_shape(self):
        assert log_gamma_pdf(0.0, 0.5) == math.inf
        assert gamma_pdf(0.0, 2.0) == 0.0

    def test_cdf_is_lower_incomplete_gamma(self):
        # standard convention: Pr(X <= x) = P(alpha, x)
        alpha, x = 4.0, 5.5
        cdf = composite_simpson(
            lambda t: np.exp(-t + (alpha - 1.0) * np.log(np.maximum(t, 1e-300)) - math.lgamma(alpha)),
            0.0,
            x,
            100_000,
        )
        assert cdf == pytest.approx(reg_gamma_p(alpha, x), abs=1e-10)

    def test_poisson_conjugacy_shape(self):
        # the gamma density at lam with shape k+1 matches the Poisson pmf at k
        for k, lam in [(0, 0.3), (2, 1.0), (5, 7.7), (40, 33.0)]:
            assert gamma_pdf(lam, k + 1.0) == pytest.approx(poisson_pmf(k, lam), rel=1e-12)


class TestGammaBulkThreshold:
    @pytest.mark.parametrize("alpha", [1.0, 100.0])
    def test_formula_and_guarantee(self, alpha):
        x_star = alpha + 2.8 + 3.09 * math.sqrt(alpha)
        assert gamma_bulk_threshold(alpha) == pytest.approx(x_star, rel=1e-15)
        # the 0.999 guarantee holds at three-decimal precision only: the
        # exact value dips to ~0.99894 (e.g. 1 - exp(-6.89) at alpha = 1)
        assert reg_gamma_p(alpha, x_star) >= 0.9989
        assert round(reg_gamma_p(alpha, x_star), 3) >= 0.999

    def test_guarantee_on_grid(self):
        for alpha in [0.5, 2.0, 10.0, 50.0, 300.0, 2000.0]:
            assert reg_gamma_p(alpha, gamma_bulk_threshold(alpha)) >= 0.9989

    def test_monotone(self):
        alphas = np.linspace(0.1, 500.0, 200)
        vals = [gamma_bulk_threshold(float(a)) for a in alphas]
        assert all(b > a for a, b in zip(vals, vals[1:]))


class TestDirichlet:
    def test_params_validation(self):
        with pytest.raises(DomainError):
            DirichletParams((1.0,))
        with pytest.raises(DomainError):
            DirichletParams((1.0, -2.0))

    def test_alpha0_cached(self):
        params = DirichletParams((3.0, 5.0, 7.0))
        assert params.alpha0 == 15.0

    def test_uniform_on_simplex(self):
        mean, cov = dirichlet_moments(DirichletParams((1.0, 1.0)))
        np.testing.assert_allclose(mean, [0.5, 0.5], rtol=1e-14)
        np.testing.assert_allclose(np.diag(cov), [1.0 / 12.0] * 2, rtol=1e-14)
        assert cov[0, 1] == pytest.approx(-1.0 / 12.0, rel=1e-14)

    def test_mean_formula(self):
        mean, _ = dirichlet_moments(DirichletParams((2.0, 1.0, 1.0)))
        np.testing.assert_allclose(mean, [0.5, 0.25, 0.25], rtol=1e-14)
        assert mean.sum() == pytest.approx(1.0, abs=1e-15)

    def test_covariance_rows_sum_to_zero(self):
        _, cov = dirichlet_moments(DirichletParams((3.0, 5.0, 7.0)))
        np.testing.assert_allclose(cov.sum(axis=1), 0.0, atol=1e-16)

    def test_covariance_psd_with_ones_null_vector(self):
        _, cov = dirichlet_moments(DirichletParams((2.5, 4.0, 1.0, 9.0)))
        np.testing.assert_allclose(cov, cov.T, atol=1e-18)
        eigvals = np.linalg.eigvalsh(cov)
        assert eigvals.min() >= -1e-15
        np.testing.assert_allclose(cov @ np.ones(4), 0.0, atol=1e-16)

    def test_beta_case_matches_quadrature(self):
        # K = 2 Dirichlet is a beta law; compare with direct integrals
        a, b = 6.0, 3.5
        mean, cov = dirichlet_moments(DirichletParams((a, b)))
        lb = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)

        def dens(x):
            return np.exp((a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x) - lb)

        m1 = composite_simpson(lambda x: x * dens(x), 1e-12, 1 - 1e-12, 200_000)
        m2 = composite_simpson(lambda x: x * x * dens(x), 1e-12, 1 - 1e-12, 200_000)
        assert mean[0] == pytest.approx(m1, abs=1e-10)
        assert cov[0, 0] == pytest.approx(m2 - m1 * m1, abs=1e-10)
