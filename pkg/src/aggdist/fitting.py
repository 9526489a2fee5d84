"""Estimation from activation dumps: ZeroGamma fits, pixel moment tables,
output Gaussians and the observed KL divergence."""

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import GaussianParams, ZeroGammaParams
from .errors import (
    ConvergenceError,
    DegenerateSampleError,
    DomainError,
    FitError,
    InsufficientDataError,
)
from .propagation import BlockStats, GaussianPair, PixelStats, kl_gaussian
from .specfun import digamma_fn, lgamma_fn, reg_lower_incomplete_gamma, trigamma_fn

DEFAULT_ZERO_THRESHOLD = 1e-12
MIN_POSITIVE = 10
MAX_NEWTON = 100


@dataclass(frozen=True)
class ActivationDump:
    """Last-convolution outputs of shape (n_images, n_filters, n_pixels).

    ``labels`` carries one class tag per image.
    """

    values: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 3:
            raise DomainError(f"values must be 3-D (images, filters, pixels), got {values.shape}")
        if np.any(np.isnan(values)) or np.any(values < 0):
            raise DomainError("activation values must be finite and >= 0")
        labels = np.asarray(self.labels, dtype=str)
        if labels.ndim == 0:
            labels = np.full(values.shape[0], str(labels))
        if labels.shape != (values.shape[0],):
            raise DomainError("need exactly one label per image")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)

    @property
    def n_images(self):
        return self.values.shape[0]

    @property
    def n_filters(self):
        return self.values.shape[1]

    @property
    def n_pixels(self):
        return self.values.shape[2]

    @property
    def label(self):
        names = self.classes()
        return names[0] if len(names) == 1 else None

    def classes(self):
        """Distinct labels in sorted order."""
        return sorted(set(self.labels.tolist()))

    def select(self, mask):
        mask = np.asarray(mask, dtype=bool)
        return ActivationDump(self.values[mask], self.labels[mask])

    def one_vs_all(self, positive):
        """(positive subset, pooled remainder) for one class."""
        mask = self.labels == positive
        return self.select(mask), self.select(~mask)


def pairings(labels):
    """Positive classes of the one-vs-all pairings for a label set.

    A plain positive/negative labelling yields a single pairing.
    """
    names = sorted(set(labels))
    if len(names) < 2:
        raise DomainError("one-vs-all pairing needs at least two classes")
    if names == ["negative", "positive"]:
        return ["positive"]
    return names


@dataclass(frozen=True)
class FitReport:
    params: ZeroGammaParams
    n_zero: int
    n_pos: int
    log_likelihood: float
    ks_stat: float

    @property
    def n_samples(self):
        return self.n_zero + self.n_pos


def gamma_ks_statistic(x, a, s):
    """Kolmogorov-Smirnov distance between samples and Gamma(a, s)."""
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    cdf = reg_lower_incomplete_gamma(np.full(n, a), x / s)
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    return float(max(np.max(ecdf_hi - cdf), np.max(cdf - ecdf_lo)))


def _gamma_mle(x, tol):
    mean = float(np.mean(x))
    c = math.log(mean) - float(np.mean(np.log(x)))
    if not c > 0:
        raise DegenerateSampleError("positive samples are all equal; Gamma shape is unbounded")
    var = float(np.var(x))
    a = mean * mean / var if var > 0 else 1.0
    # Newton on y = log a for ln a - psi(a) = c; f is decreasing in a
    y = math.log(a)
    for _ in range(MAX_NEWTON):
        a = math.exp(y)
        f = math.log(a) - digamma_fn(a) - c
        df = a * (1.0 / a - trigamma_fn(a))
        step = f / df
        y -= step
        if abs(step) < tol:
            a = math.exp(y)
            return a, mean / a
    raise ConvergenceError(f"Gamma MLE did not converge in {MAX_NEWTON} Newton steps")


def fit_zero_gamma(samples, zero_threshold=DEFAULT_ZERO_THRESHOLD, tol=1e-12):
    """Fit ZeroGamma(p, a, s): p from the zero fraction, (a, s) by Gamma MLE."""
    x = np.asarray(samples, dtype=float).ravel()
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise DomainError("samples must be >= 0")
    pos = x[x > zero_threshold]
    n_pos = pos.size
    n_zero = x.size - n_pos
    if n_pos < MIN_POSITIVE:
        raise InsufficientDataError(
            f"only {n_pos} positive samples; need at least {MIN_POSITIVE}"
        )
    a, s = _gamma_mle(pos, tol)
    p = n_zero / x.size
    loglik = float(
        (a - 1.0) * np.sum(np.log(pos)) - np.sum(pos) / s - n_pos * (lgamma_fn(a) + a * math.log(s))
    )
    if n_zero:
        loglik += n_zero * math.log(p)
    if n_pos:
        loglik += n_pos * math.log1p(-p)
    ks = gamma_ks_statistic(pos, a, s)
    return FitReport(ZeroGammaParams(p, a, s), n_zero, n_pos, loglik, ks)


def fit_filters(dump, zero_threshold=DEFAULT_ZERO_THRESHOLD):
    """FitReport per filter, pooling all pixels and images of the filter."""
    reports = []
    for f in range(dump.n_filters):
        try:
            reports.append(fit_zero_gamma(dump.values[:, f, :], zero_threshold))
        except (FitError, DegenerateSampleError) as exc:
            raise FitError(f"filter {f}: {exc}") from exc
    return reports


def estimate_pixel_stats(dump, filter_index):
    """Raw cross-moment table of one filter's pixels."""
    if dump.n_images < 2:
        raise DomainError("need at least 2 images to estimate pixel statistics")
    if not 0 <= filter_index < dump.n_filters:
        raise DomainError(f"filter index {filter_index} out of range")
    return PixelStats.from_samples(dump.values[:, filter_index, :])


def estimate_block_stats(dump):
    if dump.n_images < 2:
        raise DomainError("need at least 2 images to estimate pixel statistics")
    return BlockStats.from_values(dump.values)


def fit_gaussian(samples):
    """Sample mean and unbiased sample standard deviation."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise DomainError("need at least 2 samples")
    mu = float(np.mean(x))
    sigma = float(np.std(x, ddof=1))
    if not sigma > 0:
        raise DegenerateSampleError("all samples are equal")
    return GaussianParams(mu, sigma)


def observed_kl(pos_samples, neg_samples):
    return kl_gaussian(GaussianPair(fit_gaussian(pos_samples), fit_gaussian(neg_samples)))
