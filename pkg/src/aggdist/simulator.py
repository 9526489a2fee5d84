"""Monte Carlo oracle for the aggregation block.

Synthetic convolution outputs come from a Gaussian copula with equicorrelated
blocks (``rho_pix`` between pixels of one filter, ``rho_filt`` between pixels
of different filters) pushed through exact ZeroGamma marginals. The empirical
forward pass then reproduces every layer the analytic chain predicts.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainccinv, ndtr

from .distributions import Moments, ZeroGammaParams
from .errors import DomainError, NonPDCorrelationError, SimulationOverflowError
from .fitting import ActivationDump

CHUNK_IMAGES = 2048
MAX_HIST_BINS = 256
# Above this beta*s the activated pixels have no finite variance, so sample
# statistics of the forward pass stop converging; treated as overflow.
MAX_BETA_S = 0.5


@dataclass(frozen=True)
class SyntheticSpec:
    filters: tuple
    rho_pix: float
    rho_filt: float
    n_pixels: int
    n_images: int
    seed: int
    label: str = "positive"
    stream: int = 0

    def __post_init__(self):
        filters = tuple(self.filters)
        if not filters or not all(isinstance(f, ZeroGammaParams) for f in filters):
            raise DomainError("filters must be a non-empty sequence of ZeroGammaParams")
        object.__setattr__(self, "filters", filters)
        for name in ("rho_pix", "rho_filt"):
            rho = getattr(self, name)
            if not 0.0 <= rho < 1.0:
                raise DomainError(f"{name} must lie in [0, 1), got {rho}")
        for name in ("n_pixels", "n_images"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value}")
        for name in ("seed", "stream"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise DomainError(f"{name} must be a non-negative integer")

    @property
    def n_filters(self):
        return len(self.filters)


def latent_correlation(n_filters, n_pixels, rho_pix, rho_filt):
    """Dense (F*R) x (F*R) latent correlation matrix, filter-major order."""
    same = np.kron(np.eye(n_filters), np.ones((n_pixels, n_pixels)))
    corr = np.where(same > 0, rho_pix, rho_filt)
    np.fill_diagonal(corr, 1.0)
    return corr


def _latent_factor(spec):
    """Cholesky factor when the cheap factor model does not apply, else None."""
    if spec.rho_filt <= spec.rho_pix:
        return None
    corr = latent_correlation(spec.n_filters, spec.n_pixels, spec.rho_pix, spec.rho_filt)
    try:
        return np.linalg.cholesky(corr)
    except np.linalg.LinAlgError as exc:
        raise NonPDCorrelationError(
            f"rho_pix={spec.rho_pix}, rho_filt={spec.rho_filt} give a non-PD latent correlation"
        ) from exc


def _latent_chunk(rng, spec, m, chol):
    f, r = spec.n_filters, spec.n_pixels
    if chol is None:
        # z = sqrt(rf) g + sqrt(rp - rf) h_f + sqrt(1 - rp) e
        g = rng.standard_normal((m, 1, 1))
        h = rng.standard_normal((m, f, 1))
        e = rng.standard_normal((m, f, r))
        return (
            math.sqrt(spec.rho_filt) * g
            + math.sqrt(spec.rho_pix - spec.rho_filt) * h
            + math.sqrt(1.0 - spec.rho_pix) * e
        )
    e = rng.standard_normal((m, f * r))
    return (e @ chol.T).reshape(m, f, r)


def zero_gamma_from_latent(z, params):
    """Map standard normals to ZeroGamma through the mixed quantile function.

    Works on the upper tail q = 1 - Phi(z) so large z keep full precision.
    """
    q = ndtr(-z)
    out = np.zeros_like(z)
    keep = q < 1.0 - params.p
    if np.any(keep):
        out[keep] = params.s * gammainccinv(params.a, q[keep] / (1.0 - params.p))
    return out


def _fill_chunk(spec, chol, chunk, out):
    start = chunk * CHUNK_IMAGES
    stop = min(start + CHUNK_IMAGES, spec.n_images)
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(spec.stream, chunk)))
    z = _latent_chunk(rng, spec, stop - start, chol)
    for k, params in enumerate(spec.filters):
        out[start:stop, k, :] = zero_gamma_from_latent(z[:, k, :], params)


def generate(spec, threads=1):
    """Sample an ActivationDump; identical output for any thread count."""
    chol = _latent_factor(spec)
    out = np.empty((spec.n_images, spec.n_filters, spec.n_pixels))
    n_chunks = -(-spec.n_images // CHUNK_IMAGES)
    if threads <= 1:
        for c in range(n_chunks):
            _fill_chunk(spec, chol, c, out)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda c: _fill_chunk(spec, chol, c, out), range(n_chunks)))
    return ActivationDump(out, np.full(spec.n_images, spec.label))


def check_activation_range(filters, cfg):
    """Reject blocks whose activated layer has infinite variance."""
    if cfg.activation != "exp":
        return
    for k, params in enumerate(filters):
        bs = cfg.beta * params.s
        if bs >= MAX_BETA_S:
            raise SimulationOverflowError(
                f"filter {k}: beta*s = {bs:.6g} >= {MAX_BETA_S}; activated values are heavy-tailed "
                "beyond a finite variance"
            )


@dataclass(frozen=True)
class ForwardTrace:
    conv: np.ndarray = field(repr=False)
    activated: np.ndarray = field(repr=False)
    gap: np.ndarray = field(repr=False)
    deactivated: np.ndarray = field(repr=False)
    output: np.ndarray = field(repr=False)

    @property
    def n_images(self):
        return self.output.shape[0]

    def select(self, mask):
        mask = np.asarray(mask, dtype=bool)
        return ForwardTrace(*(getattr(self, name)[mask] for name in LAYERS))


LAYERS = ("conv", "activated", "gap", "deactivated", "output")


def forward(dump, cfg, w):
    """Empirical pass: activation, GAP, deactivation and the FC output."""
    w = np.asarray(w, dtype=float)
    if w.shape != (dump.n_filters,):
        raise DomainError(f"{w.size} weights for {dump.n_filters} filters")
    with np.errstate(over="ignore", invalid="ignore"):
        activated = cfg.activate(dump.values)
    if not np.all(np.isfinite(activated)):
        raise SimulationOverflowError("activated values overflow double precision")
    gap = activated.mean(axis=2)
    deact = cfg.deactivate(gap)
    output = deact @ w
    return ForwardTrace(dump.values, activated, gap, deact, output)


def concat_traces(traces):
    return ForwardTrace(*(np.concatenate([getattr(t, n) for t in traces]) for n in LAYERS))


def histogram(x):
    """Freedman-Diaconis histogram, capped at MAX_HIST_BINS bins."""
    x = np.asarray(x, dtype=float).ravel()
    lo, hi = float(np.min(x)), float(np.max(x))
    if hi <= lo:
        return np.array([lo, lo + 1.0]), np.array([x.size])
    q75, q25 = np.percentile(x, [75.0, 25.0])
    width = 2.0 * (q75 - q25) * x.size ** (-1.0 / 3.0)
    n_bins = MAX_HIST_BINS if width <= 0 else math.ceil((hi - lo) / width)
    n_bins = int(min(max(n_bins, 1), MAX_HIST_BINS))
    counts, edges = np.histogram(x, bins=n_bins, range=(lo, hi))
    return edges, counts


def _moments(x):
    x = np.asarray(x, dtype=float).ravel()
    return Moments(float(np.mean(x)), float(np.var(x, ddof=1)))


@dataclass(frozen=True)
class Observation:
    """Sample statistics of a trace, per filter for the per-filter layers."""

    conv: tuple
    activated: tuple
    gap: tuple
    deactivated: tuple
    output: Moments
    cov_gap: np.ndarray = field(repr=False)
    cov_deact: np.ndarray = field(repr=False)
    histograms: dict = field(repr=False)
    n_images: int = 0


def observe(trace, with_histograms=True):
    if trace.n_images < 2:
        raise DomainError("need at least 2 images to observe statistics")
    n_filters = trace.gap.shape[1]
    per_filter = {}
    for name in ("conv", "activated", "gap", "deactivated"):
        data = getattr(trace, name)
        per_filter[name] = tuple(_moments(data[:, k]) for k in range(n_filters))
    hists = {}
    if with_histograms:
        for name in ("conv", "activated", "gap", "deactivated"):
            data = getattr(trace, name)
            hists[name] = tuple(histogram(data[:, k]) for k in range(n_filters))
        hists["output"] = histogram(trace.output)
    cov_gap = np.atleast_2d(np.cov(trace.gap, rowvar=False))
    cov_deact = np.atleast_2d(np.cov(trace.deactivated, rowvar=False))
    return Observation(
        per_filter["conv"],
        per_filter["activated"],
        per_filter["gap"],
        per_filter["deactivated"],
        _moments(trace.output),
        cov_gap,
        cov_deact,
        hists,
        trace.n_images,
    )
