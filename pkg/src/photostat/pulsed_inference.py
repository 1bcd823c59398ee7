"""Posterior moments of outcome probabilities for pulsed single-photon runs.

Covers the 2-outcome setup with one detector, the 2-outcome setup with
two (identical or unequal) detectors, and the K-outcome setup with K
identical detectors.  All posteriors are truncated-beta or
truncated-Dirichlet laws: observing g clicks in N runs makes the click
probability q = alpha + gamma p a Beta(g+1, N-g+1) variable restricted
to the physically reachable interval, and the moments follow from
ratios of generalized incomplete beta functions (or their K-dimensional
saddle-point analogues).

All incomplete-beta ratios are formed in log space; for extreme counts
the individual integrals underflow long before the ratios do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .detector_model import DetectorParams
from .errors import DomainError, NumericError, UnsupportedConfigurationError
from .quadrature import adaptive_quad, localize_support
from .specfun import log_beta, log_gen_reg_inc_beta
from .truncated_dirichlet import TruncatedDirichlet, log_normalization, moments, solve_saddle

__all__ = [
    "CountRecord",
    "PosteriorMoments",
    "detection_prob",
    "single_detector_posterior",
    "effective_dark_rate",
    "two_detector_click_probs",
    "equal_two_detector_posterior",
    "equal_two_detector_kernel",
    "unequal_two_detector_posterior",
    "k_outcome_posterior",
    "k_outcome_log_likelihood",
    "expected_posterior_sigma",
]


@dataclass(frozen=True)
class CountRecord:
    """Outcome frequencies of an N-run experiment.

    ``runs`` may be omitted for multi-detector records where only the
    exclusive single-click counts enter the posterior; when given, the
    counts must not exceed it.
    """

    counts: tuple[int, ...]
    runs: int | None = None

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) < 1 or any(c < 0 for c in counts):
            raise DomainError(f"counts must be nonnegative integers, got {self.counts!r}")
        object.__setattr__(self, "counts", counts)
        if self.runs is not None:
            if self.runs < 1:
                raise DomainError(f"run count must be >= 1, got {self.runs!r}")
            if sum(counts) > self.runs:
                raise DomainError(
                    f"recorded counts ({sum(counts)}) exceed the number of runs ({self.runs})"
                )

    @property
    def n_used(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class PosteriorMoments:
    """First and second posterior moments of the outcome probabilities."""

    mean: np.ndarray
    second_origin: np.ndarray
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        second = np.atleast_2d(np.asarray(self.second_origin, dtype=float))
        if second.shape != (mean.size, mean.size):
            raise DomainError(
                f"second-moment matrix shape {second.shape} does not match mean size {mean.size}"
            )
        var = np.diag(second) - mean * mean
        if np.any(var < -1e-12):
            raise NumericError(f"negative posterior variance encountered: {var.min():.3e}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "second_origin", second)

    @property
    def cov(self) -> np.ndarray:
        return self.second_origin - np.outer(self.mean, self.mean)

    @property
    def var(self) -> np.ndarray:
        return np.clip(np.diag(self.cov), 0.0, None)

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.var)


def detection_prob(p: float, params: DetectorParams) -> float:
    """Click probability q = alpha + (1 - alpha) eta p of a single detector."""
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"outcome probability must be in [0, 1], got {p!r}")
    return params.alpha + params.gamma * p


# ---------------------------------------------------------------------------
# Truncated-beta core shared by the 2-outcome posteriors
# ---------------------------------------------------------------------------

def _truncated_beta_moments(g: int, n: int, lo: float, hi: float):
    """Moments m1 = E[X], m2 = E[X^2] of Beta(g+1, n-g+1) truncated to [lo, hi].

    The untruncated moments (g+1)/(n+2) and (g+1)(g+2)/((n+2)(n+3)) pick
    up a correction ratio of generalized incomplete betas that tends to 1
    as the truncation disappears.
    """
    a_par, b_par = g + 1.0, n - g + 1.0
    lj0 = log_gen_reg_inc_beta(lo, hi, a_par, b_par)
    if lj0 == -math.inf:
        raise NumericError(
            f"posterior carries no mass on [{lo}, {hi}] for g={g}, N={n}"
        )
    lj1 = log_gen_reg_inc_beta(lo, hi, a_par + 1.0, b_par)
    lj2 = log_gen_reg_inc_beta(lo, hi, a_par + 2.0, b_par)
    m10 = (g + 1.0) / (n + 2.0)
    m20 = (g + 1.0) * (g + 2.0) / ((n + 2.0) * (n + 3.0))
    m1 = math.exp(lj1 - lj0) * m10
    m2 = math.exp(lj2 - lj0) * m20
    return m1, m2, (lj0, lj1, lj2)


def _affine_posterior(m1: float, m2: float, offset: float, slope: float, logs) -> PosteriorMoments:
    """Map moments of X = offset + slope * P back to moments of P."""
    mu = (m1 - offset) / slope
    second = (m2 - 2.0 * offset * m1 + offset * offset) / (slope * slope)
    return PosteriorMoments(
        mean=np.array([mu]),
        second_origin=np.array([[second]]),
        diagnostics={"method": "incomplete-beta", "J_values_log": list(logs)},
    )


def single_detector_posterior(g: int, n_runs: int, params: DetectorParams) -> PosteriorMoments:
    """Posterior of the outcome probability from one detector's click count.

    The click count is binomial in q = alpha + gamma p, so q is a
    Beta(g+1, N-g+1) variable truncated to [alpha, 1 - beta]; the moments
    of p follow by inverting the affine map.
    """
    if not (0 <= g <= n_runs):
        raise DomainError(f"click count must satisfy 0 <= g <= N, got g={g}, N={n_runs}")
    alpha, beta = params.alpha, params.beta
    gamma = params.gamma
    if gamma <= 0.0:
        raise DomainError(
            f"zero-information detector: alpha + beta must be < 1, got {alpha + beta}"
        )
    m1, m2, logs = _truncated_beta_moments(g, n_runs, alpha, 1.0 - beta)
    return _affine_posterior(m1, m2, alpha, gamma, logs)


def effective_dark_rate(
    params1: DetectorParams, params2: DetectorParams, k_outcomes: int = 2
) -> float:
    """Effective dark-count rate a = a1 / ((K-1) a1 + a2) for identical detectors.

    a1 = alpha beta and a2 = (1 - alpha)(1 - beta) are the only
    combinations through which the detector parameters enter the
    multi-detector posteriors.  For K = 2 the bound
    alpha beta <= a <= 2 alpha beta holds.
    """
    if k_outcomes < 2:
        raise DomainError(f"need at least 2 outcomes, got {k_outcomes}")
    if (
        abs(params1.alpha - params2.alpha) > 1e-12
        or abs(params1.eta - params2.eta) > 1e-12
    ):
        raise UnsupportedConfigurationError(
            "the effective dark rate is only defined for identical detectors; "
            "use the unequal-detector posterior instead"
        )
    alpha, beta = params1.alpha, params1.beta
    a1 = alpha * beta
    a2 = (1.0 - alpha) * (1.0 - beta)
    denom = (k_outcomes - 1) * a1 + a2
    if denom <= 0.0:
        raise DomainError("degenerate detector: a1 + a2 must be positive")
    return a1 / denom


def two_detector_click_probs(
    p: float, params1: DetectorParams, params2: DetectorParams
) -> tuple[float, float, float, float]:
    """Click-event probabilities (q00, q01, q10, q11) for a photon routed with probability p.

    Index order is (detector 1, detector 2); with identical detectors
    q00 + q11 is constant in p, which is why the neither-or-both events
    can be merged away.
    """
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"outcome probability must be in [0, 1], got {p!r}")
    a1_, b1_ = params1.alpha, params1.beta
    a2_, b2_ = params2.alpha, params2.beta
    q00 = p * b1_ * (1.0 - a2_) + (1.0 - p) * (1.0 - a1_) * b2_
    q01 = p * b1_ * a2_ + (1.0 - p) * (1.0 - a1_) * (1.0 - b2_)
    q10 = p * (1.0 - b1_) * (1.0 - a2_) + (1.0 - p) * a1_ * b2_
    q11 = p * (1.0 - b1_) * a2_ + (1.0 - p) * a1_ * (1.0 - b2_)
    return q00, q01, q10, q11


def equal_two_detector_posterior(g1: int, g2: int, a: float) -> PosteriorMoments:
    """Posterior from exclusive single-click counts of two identical detectors.

    Only the counts g1, g2 of exclusive clicks enter; the effective dark
    rate ``a`` replaces both truncation limits, giving a Beta(g1+1, g2+1)
    law in x = a + (1 - 2a) p truncated to [a, 1 - a].  With no data at
    all this degenerates to the truncated uniform prior.
    """
    if g1 < 0 or g2 < 0:
        raise DomainError(f"counts must be nonnegative, got g1={g1}, g2={g2}")
    if not (0.0 <= a < 0.5):
        raise DomainError(f"effective dark rate must be in [0, 1/2), got {a!r}")
    m1, m2, logs = _truncated_beta_moments(g1, g1 + g2, a, 1.0 - a)
    return _affine_posterior(m1, m2, a, 1.0 - 2.0 * a, logs)


def equal_two_detector_kernel(g1: int, g2: int) -> Callable[[float], tuple[float, float, float]]:
    """Unnormalized posterior integrals at a fixed effective dark rate.

    Returns a callable y -> (int L, int p L, int p^2 L) over p in [0, 1]
    for the two-identical-detector likelihood with dark rate y.  The
    integrals share a y-independent scale, as required by the
    nuisance-parameter marginalization rule.
    """
    if g1 < 0 or g2 < 0:
        raise DomainError(f"counts must be nonnegative, got g1={g1}, g2={g2}")
    log_b = log_beta(g1 + 1.0, g2 + 1.0)

    def kernel(y: float) -> tuple[float, float, float]:
        if not (0.0 <= y < 0.5):
            raise DomainError(f"effective dark rate must be in [0, 1/2), got {y!r}")
        m1, m2, logs = _truncated_beta_moments(g1, g1 + g2, y, 1.0 - y)
        slope = 1.0 - 2.0 * y
        i0 = math.exp(logs[0] + log_b) / slope
        e_p = (m1 - y) / slope
        e_p2 = (m2 - 2.0 * y * m1 + y * y) / (slope * slope)
        return i0, i0 * e_p, i0 * e_p2

    return kernel


# ---------------------------------------------------------------------------
# Unequal detectors: quadrature over products of linear factors
# ---------------------------------------------------------------------------

def _log_linear_product(coeffs, exps):
    def log_f(p: float) -> float:
        total = 0.0
        for (a_i, b_i), g_i in zip(coeffs, exps):
            if g_i == 0:
                continue
            val = a_i + b_i * p
            if val <= 0.0:
                return -math.inf
            total += g_i * math.log(val)
        return total

    return log_f


def _log_linear_product_integral(coeffs, exps, rel_tol=1e-11):
    """log of J(g; a, b) = int_0^1 prod_i (a_i + b_i p)^{g_i} dp.

    The integrand is localized to the subinterval carrying at least 1e-6
    of its peak value, then max-shifted and integrated adaptively.
    """
    log_f = _log_linear_product(coeffs, exps)
    lo, hi = localize_support(log_f, 0.0, 1.0, cutoff=1e-6)
    xs = np.linspace(lo, hi, 129)
    shift = max(log_f(float(x)) for x in xs)
    if not math.isfinite(shift):
        raise NumericError("product-of-linear-factors integrand vanished everywhere")
    val = adaptive_quad(lambda p: math.exp(log_f(p) - shift), lo, hi, rel_tol=rel_tol)
    if val <= 0.0:
        raise NumericError("product-of-linear-factors integral is non-positive")
    return shift + math.log(val), (lo, hi)


def unequal_two_detector_posterior(
    g1: int,
    g2: int,
    params1: DetectorParams,
    params2: DetectorParams,
    g0: int | None = None,
) -> PosteriorMoments:
    """Posterior for two detectors with different dark rates/efficiencies.

    The likelihood is a product of linear factors in p: the exclusive
    click probabilities q10(p), q01(p) raised to g1, g2, and, when the
    total number of runs is known, the merged neither-or-both factor
    raised to g0 = N - g1 - g2.  Pass ``g0=None`` when N is unknown to
    use the two-factor form.  Moments come from ratios of the plain
    quadrature integrals J(g)."""
    if g1 < 0 or g2 < 0 or (g0 is not None and g0 < 0):
        raise DomainError(f"counts must be nonnegative, got g1={g1}, g2={g2}, g0={g0}")
    if g1 == 0 and g2 == 0 and not g0:
        raise DomainError("no data: all counts are zero")
    al1, be1 = params1.alpha, params1.beta
    al2, be2 = params2.alpha, params2.beta
    # q10, q01 and q00+q11 written as a_i + b_i p
    c1 = (al1 * be2, (1.0 - be1) * (1.0 - al2) - al1 * be2)
    c2 = ((1.0 - al1) * (1.0 - be2), be1 * al2 - (1.0 - al1) * (1.0 - be2))
    a3 = (1.0 - al1) * be2 + al1 * (1.0 - be2)
    c3 = (a3, be1 * (1.0 - al2) + (1.0 - be1) * al2 - a3)
    if c1[1] == 0.0:
        raise DomainError("detector-1 click probability does not depend on p; no inference possible")
    coeffs = [c1, c2] if g0 is None else [c1, c2, c3]
    exps = [g1, g2] if g0 is None else [g1, g2, g0]
    lj0, support = _log_linear_product_integral(coeffs, exps)
    exps1 = list(exps)
    exps1[0] += 1
    lj1, _ = _log_linear_product_integral(coeffs, exps1)
    exps2 = list(exps)
    exps2[0] += 2
    lj2, _ = _log_linear_product_integral(coeffs, exps2)
    j1 = math.exp(lj1 - lj0)  # E[a1 + b1 P]
    j2 = math.exp(lj2 - lj0)  # E[(a1 + b1 P)^2]
    a_1, b_1 = c1
    mu = (j1 - a_1) / b_1
    second = (j2 - 2.0 * a_1 * j1 + a_1 * a_1) / (b_1 * b_1)
    return PosteriorMoments(
        mean=np.array([mu]),
        second_origin=np.array([[second]]),
        diagnostics={
            "method": "quadrature",
            "J_values_log": [lj0, lj1, lj2],
            "localized_support": list(support),
        },
    )


# ---------------------------------------------------------------------------
# K outcomes, K identical detectors
# ---------------------------------------------------------------------------

def k_outcome_log_likelihood(q, a: float, counts) -> float:
    """Log likelihood sum_i g_i log(a + (1 - K a) q_i) on the simplex."""
    q = np.asarray(q, dtype=float)
    k = q.size
    slope = 1.0 - k * a
    total = 0.0
    for qi, gi in zip(q, counts):
        if gi == 0:
            continue
        val = a + slope * qi
        if val <= 0.0:
            return -math.inf
        total += gi * math.log(val)
    return total


def k_outcome_posterior(
    rec: CountRecord, a: float, method: str = "auto", with_diagnostics: bool = False
) -> PosteriorMoments:
    """Posterior moments for a K-outcome run with K identical detectors.

    The exclusive-click probabilities r_i = a + (1 - K a) p_i follow a
    Dirichlet(g + 1) law truncated to r_i >= a; the moments of p are the
    affine pull-back of the truncated-Dirichlet moments.  ``method``
    selects the normalization-integral algorithm for K >= 3
    (saddle-quad, saddle-taylor, beta-product); 'auto' uses the exact
    incomplete-beta route for K = 2 and contour quadrature otherwise.
    The posterior mean components sum to 1 up to the J-integral accuracy.
    """
    k = len(rec.counts)
    if k < 2:
        raise DomainError("K-outcome posterior needs at least 2 outcomes")
    if not (0.0 <= a < 1.0 / k):
        raise DomainError(f"truncation level exceeds 1/K: a={a}, K={k}")
    alphas = tuple(g + 1.0 for g in rec.counts)
    td = TruncatedDirichlet(alphas, a)
    er, err_mat = moments(td, method)
    slope = 1.0 - k * a
    mean = (er - a) / slope
    second = (err_mat - a * (er[:, None] + er[None, :]) + a * a) / (slope * slope)
    diagnostics = {"method": method}
    if with_diagnostics:
        resolved = ("exact" if k == 2 else "saddle-quad") if method == "auto" else method
        diagnostics["J_values_log"] = [log_normalization(td, resolved)]
        if resolved.startswith("saddle") and a > 0.0:
            diagnostics["saddle_residual"] = solve_saddle(td).residual
    return PosteriorMoments(mean=mean, second_origin=second, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# Protocol comparison: expected posterior spread at a known true p
# ---------------------------------------------------------------------------

def _binom_log_pmf(k: int, n: int, p: float) -> float:
    if p == 0.0:
        return 0.0 if k == 0 else -math.inf
    if p == 1.0:
        return 0.0 if k == n else -math.inf
    log_c = -math.log(n + 1.0) - log_beta(k + 1.0, n - k + 1.0)
    return log_c + k * math.log(p) + (n - k) * math.log1p(-p)


def _binom_bulk(n: int, p: float, tail: float = 1e-10):
    """Contiguous count range holding all but ``tail`` of a binomial."""
    mean = n * p
    sd = math.sqrt(max(n * p * (1.0 - p), 0.0))
    lo = max(0, int(math.floor(mean - 8.0 * sd - 10.0)))
    hi = min(n, int(math.ceil(mean + 8.0 * sd + 10.0)))
    while True:
        weights = [math.exp(_binom_log_pmf(k, n, p)) for k in range(lo, hi + 1)]
        mass = math.fsum(weights)
        if mass >= 1.0 - tail or (lo == 0 and hi == n):
            return lo, weights, mass
        lo = max(0, lo - 20)
        hi = min(n, hi + 20)


def expected_posterior_sigma(
    p_true: float, n_runs: int, params: DetectorParams, setup: str
) -> float:
    """Average posterior standard deviation at a known true outcome probability.

    ``setup`` selects the protocol: ``one-detector`` draws the click
    count from Bin(N, alpha + gamma p); ``two-detector`` draws the
    exclusive-click pair from the three-event multinomial of N pulses;
    ``two-detector-constrained`` keeps measuring until g1 + g2 = N.
    The outer expectations are truncated to binomial mass >= 1 - 1e-9
    and renormalized; summation order is fixed, so results do not depend
    on any parallel schedule.
    """
    if not (0.0 <= p_true <= 1.0):
        raise DomainError(f"outcome probability must be in [0, 1], got {p_true!r}")
    if setup == "one-detector":
        q = detection_prob(p_true, params)
        lo, weights, mass = _binom_bulk(n_runs, q)
        vals = [
            w * float(single_detector_posterior(g, n_runs, params).std[0])
            for g, w in zip(range(lo, lo + len(weights)), weights)
            if w > 0.0
        ]
        return math.fsum(vals) / mass
    if setup not in ("two-detector", "two-detector-constrained"):
        raise DomainError(f"unknown setup {setup!r}")
    a_eff = effective_dark_rate(params, params)
    _, q01, q10, _ = two_detector_click_probs(p_true, params, params)
    single_rate = q10 + q01
    rho = q10 / single_rate
    if setup == "two-detector-constrained":
        lo, weights, mass = _binom_bulk(n_runs, rho)
        vals = [
            w * float(equal_two_detector_posterior(g1, n_runs - g1, a_eff).std[0])
            for g1, w in zip(range(lo, lo + len(weights)), weights)
            if w > 0.0
        ]
        return math.fsum(vals) / mass
    # unconstrained: total single-click count is itself binomial in N
    t_lo, t_weights, t_mass = _binom_bulk(n_runs, single_rate)
    sigma_cache: dict[tuple[int, int], float] = {}
    outer = []
    for t, wt in zip(range(t_lo, t_lo + len(t_weights)), t_weights):
        if wt <= 0.0:
            continue
        g_lo, g_weights, g_mass = _binom_bulk(t, rho)
        inner = []
        for g1, wg in zip(range(g_lo, g_lo + len(g_weights)), g_weights):
            if wg <= 0.0:
                continue
            key = (g1, t - g1)
            if key not in sigma_cache:
                sigma_cache[key] = float(
                    equal_two_detector_posterior(g1, t - g1, a_eff).std[0]
                )
            inner.append(wg * sigma_cache[key])
        outer.append(wt * math.fsum(inner) / g_mass)
    return math.fsum(outer) / t_mass
