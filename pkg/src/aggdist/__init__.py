"""Analytic output-distribution prediction for exp-activation / GAP /
power-deactivation aggregation blocks, with a Monte Carlo oracle."""

from .distributions import (
    ExpGammaParams,
    GaussianParams,
    GenGammaParams,
    Moments,
    ZeroExpGammaParams,
    ZeroGammaParams,
    eps_deact_moments,
    exp_gamma_moments,
    exp_gamma_pdf,
    gen_gamma_moments,
    gen_gamma_pdf,
    sample,
    zero_exp_gamma_moments,
    zero_exp_gamma_pdf,
    zero_gamma_moments,
    zero_gamma_pdf,
)
from .errors import AggDistError
from .fitting import ActivationDump, FitReport, fit_filters, fit_zero_gamma
from .klopt import KLProblem, OptState, ascend, ascend_multistart, kl_gradient, kl_value
from .propagation import (
    ActivationConfig,
    BlockPrediction,
    BlockStats,
    GaussianPair,
    PixelStats,
    kl_gaussian,
    predict_block,
)
from .simulator import SyntheticSpec, forward, generate, observe

__version__ = "0.1.0"

__all__ = [
    "ActivationConfig",
    "ActivationDump",
    "AggDistError",
    "BlockPrediction",
    "BlockStats",
    "ExpGammaParams",
    "FitReport",
    "GaussianPair",
    "GaussianParams",
    "GenGammaParams",
    "KLProblem",
    "Moments",
    "OptState",
    "PixelStats",
    "SyntheticSpec",
    "ZeroExpGammaParams",
    "ZeroGammaParams",
    "ascend",
    "ascend_multistart",
    "eps_deact_moments",
    "exp_gamma_moments",
    "exp_gamma_pdf",
    "fit_filters",
    "fit_zero_gamma",
    "forward",
    "gen_gamma_moments",
    "gen_gamma_pdf",
    "generate",
    "kl_gaussian",
    "kl_gradient",
    "kl_value",
    "observe",
    "predict_block",
    "sample",
    "zero_exp_gamma_moments",
    "zero_exp_gamma_pdf",
    "zero_gamma_moments",
    "zero_gamma_pdf",
]
