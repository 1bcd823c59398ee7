"""Marginalizing an imprecisely known detector parameter.

When a parameter such as the effective dark rate is only known through
its mean, standard deviation and (optionally) skewness, the posterior
integrals must additionally be integrated over that parameter.  The
integrals are smooth in the parameter, so a low-degree Lagrange
interpolation integrated against a near-Gaussian (Edgeworth) density
collapses the extra integral to a handful of weighted evaluations:

* 3-point interpolation, normal density: nodes mu +/- sigma, weights 1/2
  each (the interior node drops out);
* 4-point interpolation, skew-corrected density: nodes mu +/- 3 sigma
  and mu +/- sigma with weights -g/48, 1/2 + g/16, 1/2 - g/16, g/48.

The node spacings (delta = sigma and delta = 2 sigma) are what make
these closed-form weights valid, so they are not configurable.  The
ratio of posterior moments is formed from node-weighted sums of
numerators and denominators separately; averaging per-node means would
be wrong.

Also provided: the exact (unnormalized) density of an unknown effective
dark rate given a low click count, and the cheap upper bound derived
from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .pulsed_inference import PosteriorMoments
from .specfun import log_beta, log_gen_reg_inc_beta

__all__ = [
    "ImpreciseParam",
    "edgeworth_nodes",
    "marginalize_posterior",
    "dark_rate_pdf",
    "dark_rate_bound",
]


@dataclass(frozen=True)
class ImpreciseParam:
    """Mean, spread and skewness of an imprecisely known parameter."""

    mu: float
    sigma: float
    skew: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")
        # keep all 4-point weights inside [-0.5, 1.5]
        if abs(self.skew) > 16.0:
            raise DomainError(
                f"|skewness| > 16 makes the 4-point weights pathological, got {self.skew!r}"
            )


def edgeworth_nodes(ip: ImpreciseParam, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Evaluation nodes and weights for the m-point marginalization rule.

    m = 3 integrates any cubic exactly against the normal density with
    two evaluations; m = 4 additionally matches the third moment
    mu^3 + 3 mu sigma^2 + skew sigma^3 of the skew-corrected density.
    Weights sum to 1 for every skewness.
    """
    mu, sigma, g = ip.mu, ip.sigma, ip.skew
    if m == 3:
        nodes = np.array([mu - sigma, mu + sigma])
        weights = np.array([0.5, 0.5])
    elif m == 4:
        if abs(g) > 2.0:
            raise DomainError(
                f"the 4-point rule assumes small skewness; |skew| = {abs(g)} exceeds 2"
            )
        nodes = np.array([mu - 3.0 * sigma, mu - sigma, mu + sigma, mu + 3.0 * sigma])
        weights = np.array(
            [-g / 48.0, 0.5 + g / 16.0, 0.5 - g / 16.0, g / 48.0]
        )
    else:
        raise DomainError(f"interpolation order must be 3 or 4, got {m!r}")
    return nodes, weights


def marginalize_posterior(
    kernel,
    ip: ImpreciseParam,
    m: int = 3,
    bounds: tuple[float, float] | None = None,
) -> PosteriorMoments:
    """Posterior moments with one parameter integrated out.

    ``kernel(y)`` must return the unnormalized integrals
    (int L, int p L, int p^2 L) at the fixed parameter value y, on a
    scale that is consistent across calls; the vector case returns
    (scalar, vector, matrix).  The moments are ratios of node-weighted
    numerator and denominator sums.  Nodes outside ``bounds`` are clamped
    to the boundary and reported in the diagnostics.
    """
    nodes, weights = edgeworth_nodes(ip, m)
    warnings: list[str] = []
    if bounds is not None:
        lo, hi = bounds
        clamped = np.clip(nodes, lo, hi)
        if np.any(clamped != nodes):
            warnings.append(
                f"{int(np.sum(clamped != nodes))} marginalization node(s) clamped to [{lo}, {hi}]"
            )
        nodes = clamped
    denom = 0.0
    num1 = None
    num2 = None
    for y, w in zip(nodes, weights):
        i0, i1, i2 = kernel(float(y))
        denom += w * i0
        num1 = w * np.asarray(i1, dtype=float) + (0.0 if num1 is None else num1)
        num2 = w * np.asarray(i2, dtype=float) + (0.0 if num2 is None else num2)
    if not (math.isfinite(denom) and denom > 0.0):
        raise NumericError(
            f"marginalization denominator is not positive ({denom}); all node likelihoods vanished"
        )
    mean = np.atleast_1d(num1 / denom)
    second = np.atleast_2d(num2 / denom)
    return PosteriorMoments(
        mean=mean,
        second_origin=second,
        diagnostics={"method": f"edgeworth-{m}", "warnings": warnings},
    )


def dark_rate_pdf(a: float, g: int, n_runs: int) -> float:
    """Unnormalized density of the effective dark rate given g of N clicks.

    Integrating the two-detector likelihood over the outcome probability
    leaves B(a, 1-a, g+1, N-g+1) / (1 - 2a), a decreasing function of a
    when g << N: few observed clicks make large dark rates implausible.
    """
    if not (0.0 <= a < 0.5):
        raise DomainError(f"dark rate must be in [0, 1/2), got {a!r}")
    if not (0 <= g <= n_runs):
        raise DomainError(f"need 0 <= g <= N, got g={g}, N={n_runs}")
    log_val = (
        log_gen_reg_inc_beta(a, 1.0 - a, g + 1.0, n_runs - g + 1.0)
        + log_beta(g + 1.0, n_runs - g + 1.0)
        - math.log1p(-2.0 * a)
    )
    return math.exp(log_val)


def dark_rate_bound(g: int, n_runs: int) -> float:
    """Upper bound (g + 1 + 3 sqrt(g + 1)) / N on a plausible dark rate.

    Follows from the beta-shaped factor of :func:`dark_rate_pdf`: its
    mass sits below mean + 3 std of Beta(g+1, N-g+1), which for small g
    and large N reduces to this expression.
    """
    if n_runs < 1:
        raise DomainError(f"run count must be >= 1, got {n_runs!r}")
    if g < 0:
        raise DomainError(f"count must be nonnegative, got {g!r}")
    return (g + 1.0 + 3.0 * math.sqrt(g + 1.0)) / n_runs
