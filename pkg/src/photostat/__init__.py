"""Bayesian inference of outcome probabilities from imperfect photon counting."""

from .cw_inference import (
    CwExperiment,
    cw_posterior,
    povm_scale_factors,
    truncation_negligible,
    y_stats,
)
from .detector_model import ClickProbs, DetectorParams, click_probs, count_dist
from .distributions import DirichletParams, dirichlet_moments
from .errors import DomainError, NumericError, PhotostatError, UnsupportedConfigurationError
from .nuisance import ImpreciseParam, dark_rate_bound, dark_rate_pdf, edgeworth_nodes, marginalize_posterior
from .pulsed_inference import (
    CountRecord,
    PosteriorMoments,
    detection_prob,
    effective_dark_rate,
    equal_two_detector_posterior,
    expected_posterior_sigma,
    k_outcome_posterior,
    single_detector_posterior,
    two_detector_click_probs,
    unequal_two_detector_posterior,
)
from .truncated_dirichlet import TruncatedDirichlet, min_plausible_count, moments, normalization

__version__ = "0.1.0"

__all__ = [
    "ClickProbs",
    "CountRecord",
    "CwExperiment",
    "DetectorParams",
    "DirichletParams",
    "DomainError",
    "ImpreciseParam",
    "NumericError",
    "PhotostatError",
    "PosteriorMoments",
    "TruncatedDirichlet",
    "UnsupportedConfigurationError",
    "click_probs",
    "count_dist",
    "cw_posterior",
    "dark_rate_bound",
    "dark_rate_pdf",
    "detection_prob",
    "dirichlet_moments",
    "edgeworth_nodes",
    "effective_dark_rate",
    "equal_two_detector_posterior",
    "expected_posterior_sigma",
    "k_outcome_posterior",
    "marginalize_posterior",
    "min_plausible_count",
    "moments",
    "normalization",
    "povm_scale_factors",
    "single_detector_posterior",
    "truncation_negligible",
    "two_detector_click_probs",
    "unequal_two_detector_posterior",
    "y_stats",
]
