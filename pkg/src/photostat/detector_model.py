"""Physical model of an imperfect Geiger-mode photon detector.

A detector is characterized by a dark-count rate ``alpha`` (mean number
of spurious clicks per measurement interval) and an efficiency ``eta``
(probability that an arriving photon triggers a click).  Two derived
quantities appear throughout the inference formulas: the attenuation
factor ``beta = (1 - alpha)(1 - eta)`` and the slope
``gamma = (1 - alpha) eta``, with ``alpha + beta + gamma = 1``.

``count_dist`` is the exact counting model (Poissonian background folded
with binomial photon losses).  ``click_probs`` is its click/no-click
reduction, which linearizes e^-alpha to 1 - alpha; the inference modules
are built on that linearized table, so the two agree only to O(alpha^2)
at m = 0.  No time units are introduced anywhere: alpha is a
per-measurement-interval mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .distributions import gamma_bulk_threshold, log_poisson_pmf, poisson_pmf
from .errors import DomainError

__all__ = ["DetectorParams", "ClickProbs", "click_probs", "count_dist", "poisson_closure_check"]


@dataclass(frozen=True)
class DetectorParams:
    """Dark-count rate and efficiency of a single detector."""

    alpha: float
    eta: float

    def __post_init__(self):
        if not (0.0 <= self.alpha < 1.0):
            raise DomainError(f"dark-count rate must be in [0, 1), got {self.alpha!r}")
        if not (0.0 <= self.eta <= 1.0):
            raise DomainError(f"efficiency must be in [0, 1], got {self.eta!r}")

    @property
    def beta(self) -> float:
        """Attenuation factor (1 - alpha)(1 - eta): no click given a photon."""
        return (1.0 - self.alpha) * (1.0 - self.eta)

    @property
    def gamma(self) -> float:
        """Slope (1 - alpha) eta of the click probability versus p."""
        return (1.0 - self.alpha) * self.eta

    @classmethod
    def from_alpha_beta(cls, alpha: float, beta: float) -> "DetectorParams":
        """Build parameters from (alpha, beta) by inverting beta = (1-alpha)(1-eta)."""
        if not (0.0 <= alpha < 1.0):
            raise DomainError(f"dark-count rate must be in [0, 1), got {alpha!r}")
        if not (0.0 <= beta <= 1.0 - alpha):
            raise DomainError(
                f"attenuation factor must be in [0, 1 - alpha], got beta={beta!r} with alpha={alpha!r}"
            )
        return cls(alpha=alpha, eta=1.0 - beta / (1.0 - alpha))


@dataclass(frozen=True)
class ClickProbs:
    """Conditional click table: pr(click|photon present/absent)."""

    click_given_none: float       # pr(1|0) = alpha
    no_click_given_none: float    # pr(0|0) = 1 - alpha
    no_click_given_photon: float  # pr(0|1) = beta
    click_given_photon: float     # pr(1|1) = 1 - beta


def click_probs(params: DetectorParams) -> ClickProbs:
    """Linearized conditional click probabilities used by the posteriors."""
    return ClickProbs(
        click_given_none=params.alpha,
        no_click_given_none=1.0 - params.alpha,
        no_click_given_photon=params.beta,
        click_given_photon=1.0 - params.beta,
    )


def count_dist(m: int, n: int, params: DetectorParams) -> float:
    """Exact probability of m counts given n incoming photons.

    f(m|n) = e^-alpha sum_r alpha^r/r! C(n, m-r) eta^(m-r) (1-eta)^(n-m+r),
    with the binomial coefficient taken to be 0 whenever r > m or m-r > n.
    """
    if m < 0 or n < 0 or m != int(m) or n != int(n):
        raise DomainError(f"counts must be nonnegative integers, got m={m!r}, n={n!r}")
    alpha, eta = params.alpha, params.eta
    total = 0.0
    for r in range(m + 1):
        k = m - r  # photons actually detected
        if k > n:
            continue
        if alpha == 0.0 and r > 0:
            continue
        term = math.comb(n, k) * _pow(eta, k) * _pow(1.0 - eta, n - k)
        term *= _pow(alpha, r) / math.factorial(r)
        total += term
    return math.exp(-alpha) * total


def _pow(x: float, k: int) -> float:
    # 0**0 must be 1 for the degenerate eta = 0 or 1 channels
    return 1.0 if k == 0 else x**k


def poisson_closure_check(nu: float, params: DetectorParams, m_max: int) -> float:
    """Max deviation of the count law from Poisson(alpha + eta nu) under Poisson input.

    For photons N ~ Poisson(nu) the counts M must again be Poissonian
    with rate alpha + eta nu; returns the largest absolute pointwise
    deviation for m = 0 .. m_max.  ``m_max`` should cover the bulk of
    the count distribution (see :func:`gamma_bulk_threshold`).
    """
    if nu <= 0.0:
        raise DomainError(f"input rate must be positive, got {nu!r}")
    # sum the input distribution until its remaining tail is negligible
    n_max = int(math.ceil(gamma_bulk_threshold(nu))) + 30
    while poisson_pmf(n_max, nu) > 1e-18:
        n_max += 10
    weights = [poisson_pmf(n, nu) for n in range(n_max + 1)]
    target_rate = params.alpha + params.eta * nu
    worst = 0.0
    for m in range(m_max + 1):
        mixed = math.fsum(count_dist(m, n, params) * w for n, w in enumerate(weights))
        direct = math.exp(log_poisson_pmf(m, target_rate)) if target_rate > 0 else (1.0 if m == 0 else 0.0)
        worst = max(worst, abs(mixed - direct))
    return worst
