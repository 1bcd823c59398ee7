"""Continuous-wave (Poissonian) experiments with an unknown beam intensity.

With a constant beam of unknown intensity A, the counts g_i of K
two-outcome runs are independent Poisson variables with means
alpha + A p_i.  Normalizing by x = K alpha + A b turns the likelihood
into the K-outcome pulsed form with effective dark rate y = alpha / x,
except that y is itself random: x is (to excellent approximation, once
the total count N dominates the expected dark counts) a Gamma(N+1)
variable, making y an inverse-gamma variate with known mean, spread and
skewness.  The posterior is therefore a truncated-Dirichlet inference
with y marginalized by the Edgeworth node rule, and the scale b (from
sum of the measurement operators = b * identity) multiplies the means by
b and the second moments by b^2.

For measurement-operator sums that are not exactly a multiple of the
identity, phi_1/phi_2 correction factors replace b by M phi_1 and b^2 by
M phi_2 (M = largest eigenvalue), valid for small deviations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .nuisance import ImpreciseParam, edgeworth_nodes
from .pulsed_inference import PosteriorMoments
from .truncated_dirichlet import TruncatedDirichlet, log_normalization, moments

__all__ = [
    "CwExperiment",
    "y_stats",
    "truncation_negligible",
    "cw_posterior",
    "povm_scale_factors",
]


@dataclass(frozen=True)
class CwExperiment:
    """Counts and configuration of a continuous-wave run sequence."""

    counts: tuple[int, ...]
    alpha: float
    b: float = 1.0

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) < 2 or any(c < 0 for c in counts):
            raise DomainError(f"need >= 2 nonnegative counts, got {self.counts!r}")
        if sum(counts) < 1:
            raise DomainError("no data: all counts are zero")
        if not (math.isfinite(self.alpha) and self.alpha >= 0.0):
            raise DomainError(f"dark-count rate must be >= 0, got {self.alpha!r}")
        if not (math.isfinite(self.b) and self.b > 0.0):
            raise DomainError(f"operator-sum scale b must be positive, got {self.b!r}")
        object.__setattr__(self, "counts", counts)

    @property
    def n_total(self) -> int:
        return sum(self.counts)

    @property
    def k_outcomes(self) -> int:
        return len(self.counts)


def y_stats(n_total: int, alpha: float) -> tuple[ImpreciseParam, float]:
    """Moments and mode of the effective dark rate Y = alpha / X, X ~ Gamma(N+1).

    mean = alpha/N, var = alpha^2/(N^2 (N-1)), skewness
    4 sqrt(N-1)/(N-2), mode = alpha/(N+2).  Needs N >= 3 for the
    skewness to exist.  The skewness is roughly twice Pearson's mode
    skewness: (mean - mode)/(sigma/2) approaches it for large N.
    """
    if n_total < 3:
        raise DomainError(f"need at least 3 total counts, got {n_total}")
    if not (math.isfinite(alpha) and alpha > 0.0):
        raise DomainError(f"dark-count rate must be positive, got {alpha!r}")
    mu = alpha / n_total
    sigma = alpha / (n_total * math.sqrt(n_total - 1.0))
    skew = 4.0 * math.sqrt(n_total - 1.0) / (n_total - 2.0)
    mode = alpha / (n_total + 2.0)
    return ImpreciseParam(mu=mu, sigma=sigma, skew=skew), mode


def truncation_negligible(n_total: int, k_outcomes: int, alpha: float) -> bool:
    """Whether the gamma truncation at x = K alpha can be dropped.

    True iff N >= 1 + K alpha + 3 sqrt(K alpha); below that the
    untruncated-gamma treatment of the total-rate variable is not
    justified and the CW pipeline refuses to run.
    """
    if n_total < 0 or k_outcomes < 1 or alpha < 0.0:
        raise DomainError("arguments must be nonnegative (K >= 1)")
    ka = k_outcomes * alpha
    return n_total >= 1.0 + ka + 3.0 * math.sqrt(ka)


def cw_posterior(
    exp: CwExperiment,
    m: int = 4,
    method: str = "auto",
    y_override: ImpreciseParam | None = None,
) -> PosteriorMoments:
    """Posterior moments of the outcome probabilities of a CW run sequence.

    For each Edgeworth node y_j of the effective dark rate, the
    truncated-Dirichlet integrals are evaluated at truncation level y_j;
    the node sums of numerators and denominators are combined, the
    result is pulled back through p_i/b = (r_i - y)/(1 - K y), and
    finally scaled by b (means) and b^2 (second moments).  The 4-point
    rule is the default because the dark-rate distribution is noticeably
    skewed.  ``y_override`` substitutes custom dark-rate moments (mainly
    for degenerate-spread checks).
    """
    k = exp.k_outcomes
    n = exp.n_total
    if not truncation_negligible(n, k, exp.alpha):
        raise DomainError(
            f"total count N={n} is too small for the CW approximation: "
            f"need N >= 1 + K*alpha + 3*sqrt(K*alpha) = "
            f"{1.0 + k * exp.alpha + 3.0 * math.sqrt(k * exp.alpha):.3f}"
        )
    ip = y_stats(n, exp.alpha)[0] if y_override is None else y_override
    nodes, weights = edgeworth_nodes(ip, m)
    warnings: list[str] = []
    if nodes[0] < 0.0:
        warnings.append("negative dark-rate node(s) clamped to 0")
        nodes = np.clip(nodes, 0.0, None)
    if np.any(k * nodes >= 1.0):
        raise DomainError(
            f"dark-rate node reaches 1/K: y_max={float(nodes.max())}, K={k}"
        )
    alphas = tuple(g + 1.0 for g in exp.counts)
    resolved = ("exact" if k == 2 else "saddle-quad") if method == "auto" else method
    log_i0 = np.empty(len(nodes))
    means_q = []
    seconds_q = []
    for j, y in enumerate(nodes):
        y = float(y)
        td = TruncatedDirichlet(alphas, y)
        er, err_mat = moments(td, resolved)
        slope = 1.0 - k * y
        # unnormalized weight of this node: J(alpha; y) / (1 - K y)^(K-1),
        # the y-dependent part of the likelihood integral over the simplex
        log_i0[j] = log_normalization(td, resolved) - (k - 1.0) * math.log(slope)
        means_q.append((er - y) / slope)
        seconds_q.append(
            (err_mat - y * (er[:, None] + er[None, :]) + y * y) / (slope * slope)
        )
    shift = float(log_i0.max())
    i0 = np.exp(log_i0 - shift)
    denom = float(np.dot(weights, i0))
    if denom <= 0.0:
        raise NumericError("all marginalization nodes carry vanishing likelihood")
    num1 = sum(w * s * mq for w, s, mq in zip(weights, i0, means_q))
    num2 = sum(w * s * sq for w, s, sq in zip(weights, i0, seconds_q))
    mean = exp.b * num1 / denom
    second = exp.b * exp.b * num2 / denom
    return PosteriorMoments(
        mean=mean,
        second_origin=second,
        diagnostics={
            "method": f"edgeworth-{m}/{resolved}",
            "J_values_log": [float(x) for x in log_i0],
            "warnings": warnings,
        },
    )


def povm_scale_factors(m_min: float, m_max: float, k_outcomes: int) -> tuple[float, float]:
    """Moment multipliers for operator sums that deviate from b * identity.

    With r = m_min/m_max the ratio of extreme eigenvalues of the summed
    measurement operators,

        phi1 = K/(K+1) * (1 - r^(K+1)) / (1 - r^K)
        phi2 = K/(K+2) * (1 - r^(K+2)) / (1 - r^K)

    and the mean/second-moment multipliers become M phi1 and M phi2.
    Continuous at r = 1 with phi1 = phi2 = 1 (recovering the scalar
    case); evaluated through expm1 so the 0/0 limit is approached
    stably.
    """
    if k_outcomes < 1:
        raise DomainError(f"need at least 1 outcome, got {k_outcomes}")
    if m_max <= 0.0:
        raise DomainError(f"largest eigenvalue must be positive, got {m_max!r}")
    if not (0.0 <= m_min <= m_max):
        raise DomainError(f"need 0 <= m_min <= m_max, got {m_min}, {m_max}")
    k = k_outcomes
    if m_min == m_max:
        return 1.0, 1.0
    r = m_min / m_max
    if r == 0.0:
        return k / (k + 1.0), k / (k + 2.0)
    log_r = math.log(r)
    base = -math.expm1(k * log_r)  # 1 - r^K, accurate near r = 1
    phi1 = k / (k + 1.0) * (-math.expm1((k + 1.0) * log_r)) / base
    phi2 = k / (k + 2.0) * (-math.expm1((k + 2.0) * log_r)) / base
    return phi1, phi2
