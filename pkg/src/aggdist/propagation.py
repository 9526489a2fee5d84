"""Analytic moment and covariance propagation through the aggregation block.

Chain for one class, per filter f with R pooled pixels:

    ZeroGamma conv output
      -> activation  g(x) = alpha * (exp(beta x) - 1)     (Zero-ExpGamma moments)
      -> GAP         mean over R pixels                    (pixel covariance correction)
      -> Gamma moment matching of the GAP feature
      -> deactivation x**gamma or (x + eps)**gamma         (generalized Gamma moments)
      -> FC output   O = sum_f w_f D_f                      (Gaussian, with Cov_D)

Cross-pixel and cross-filter expectations of the activation use its
second-order Taylor expansion at 0 together with measured raw cross-moments
of the convolution outputs (``PixelStats``).
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .distributions import (
    DEFAULT_SERIES_ORDER,
    ExpGammaParams,
    GaussianParams,
    GenGammaParams,
    Moments,
    ZeroExpGammaParams,
    eps_deact_moments,
    gen_gamma_moments,
    zero_exp_gamma_moments,
    zero_gamma_moments,
)
from .errors import (
    AggDistError,
    DomainError,
    MissingMomentError,
    NegativeVarianceError,
    PropagationError,
)

ACTIVATIONS = ("exp", "identity")


@dataclass(frozen=True)
class ActivationConfig:
    """Parameters of the nonlinear block.

    ``activation="identity"`` replaces the exponential by g(x) = x, which
    turns the block into plain average pooling (useful as a test mode).
    """

    alpha: float = 1.0
    beta: float = 0.01
    gamma_exp: float = 1.0
    eps: float = 0.0
    r_pixels: int = 1
    activation: str = "exp"
    series_order: int = DEFAULT_SERIES_ORDER

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be > 0, got {value}")
        if not (0.0 < self.gamma_exp <= 1.0):
            raise DomainError(f"gamma must lie in (0, 1], got {self.gamma_exp}")
        if not (np.isfinite(self.eps) and self.eps >= 0):
            raise DomainError(f"eps must be >= 0, got {self.eps}")
        if int(self.r_pixels) != self.r_pixels or self.r_pixels < 1:
            raise DomainError(f"r_pixels must be a positive integer, got {self.r_pixels}")
        if self.activation not in ACTIVATIONS:
            raise DomainError(f"activation must be one of {ACTIVATIONS}")
        if int(self.series_order) != self.series_order or self.series_order < 0:
            raise DomainError("series_order must be a non-negative integer")

    def activate(self, x):
        if self.activation == "identity":
            return np.asarray(x, dtype=float).copy()
        return self.alpha * np.expm1(self.beta * np.asarray(x, dtype=float))

    def deactivate(self, x):
        x = np.asarray(x, dtype=float)
        if self.eps > 0:
            return (x + self.eps) ** self.gamma_exp
        return np.where(x > 0, x, 0.0) ** self.gamma_exp


class TaylorCoeffs(NamedTuple):
    A: float
    B: float
    C: float
    D: float
    g0: float
    g1: float
    g2: float


def taylor2_coeffs(cfg):
    """Coefficients of the second-order expansion of g(x)g(y) about 0."""
    if cfg.activation == "identity":
        g0, g1, g2 = 0.0, 1.0, 0.0
    else:
        g0 = 0.0
        g1 = cfg.alpha * cfg.beta
        g2 = cfg.alpha * cfg.beta * cfg.beta
    return TaylorCoeffs(g0 * g1, g1 * g1, g1 * g2 / 2.0, g2 * g2 / 4.0, g0, g1, g2)


@dataclass(frozen=True)
class PixelStats:
    """Raw cross-moments between two groups of pixels U and W.

    ``moments[a, b, k, l] = E[U_k**a * W_l**b]`` for a, b in {0, 1, 2}. For the
    pixels of a single filter U and W are the same group. NaN entries mark
    moments that were never measured.
    """

    moments: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.moments, dtype=float)
        if m.ndim != 4 or m.shape[:2] != (3, 3):
            raise DomainError(f"moment table must have shape (3, 3, R, R'), got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "moments", m)

    @property
    def n_pixels(self):
        return self.moments.shape[2]

    @property
    def first_moments(self):
        """E[U_k] per pixel of the first group."""
        return self.moments[1, 0, :, 0]

    @property
    def second_moments(self):
        return self.moments[2, 0, :, 0]

    @property
    def cross_moments(self):
        return self.moments

    @classmethod
    def from_samples(cls, u, w=None):
        """Plug-in estimates from sample matrices of shape (n_samples, R)."""
        u = np.asarray(u, dtype=float)
        same = w is None
        w = u if same else np.asarray(w, dtype=float)
        n = u.shape[0]
        if n < 1 or w.shape[0] != n:
            raise DomainError("sample matrices must share a non-empty first axis")
        upow = (np.ones_like(u), u, u * u)
        wpow = upow if same else (np.ones_like(w), w, w * w)
        table = np.empty((3, 3, u.shape[1], w.shape[1]))
        for a in range(3):
            for b in range(3):
                table[a, b] = upow[a].T @ wpow[b] / n
        if same:
            table = 0.5 * (table + table.transpose(1, 0, 3, 2))
        return cls(table)

    @classmethod
    def from_marginals(cls, raw):
        """Table for independent pixels from per-pixel raw moments.

        ``raw`` has shape (R, 5) holding E[W**0] .. E[W**4] for each pixel.
        """
        raw = np.asarray(raw, dtype=float)
        r = raw.shape[0]
        table = np.empty((3, 3, r, r))
        for a in range(3):
            for b in range(3):
                table[a, b] = np.outer(raw[:, a], raw[:, b])
                table[a, b][np.diag_indices(r)] = raw[:, a + b]
        return cls(table)

    def pooled(self):
        """Collapse to a single pseudo-pixel by averaging over all (k, l).

        The Taylor expectations are linear in the table, so pooling commutes
        with every GAP-level quantity computed from it.
        """
        return PixelStats(self.moments.mean(axis=(2, 3))[:, :, None, None])

    def check(self):
        """Return a list of violated invariants (empty when consistent)."""
        problems = []
        if np.any(np.isnan(self.moments)):
            problems.append("missing entries")
        m = self.moments
        if m.shape[2] == m.shape[3]:
            diag_var = m[2, 0, :, 0] - m[1, 0, :, 0] ** 2
            if np.any(diag_var < -1e-12 * np.maximum(1.0, m[2, 0, :, 0])):
                problems.append("E[W^2] < E[W]^2")
        return problems


def _require(stats, entries):
    needed = stats.moments[entries]
    if np.any(np.isnan(needed)):
        raise MissingMomentError("pixel statistics lack a moment required by the expansion")


def _taylor_expectation(m, tc):
    """E[g(U_k) g(W_l)] for every (k, l) from a moment table ``m``."""
    return (
        tc.g0 * tc.g0
        + tc.A * (m[1, 0] + m[0, 1])
        + tc.B * m[1, 1]
        + tc.C * (m[2, 1] + m[1, 2])
        + tc.D * m[2, 2]
    )


def activated_cross_expectation(stats, cfg, i, j):
    """Second-order Taylor estimate of E[g(U_i) g(W_j)]."""
    m = stats.moments
    if not (0 <= i < m.shape[2] and 0 <= j < m.shape[3]):
        raise DomainError(f"pixel index out of range: ({i}, {j})")
    sub = m[:, :, i, j]
    if np.any(np.isnan(sub[[1, 0, 1, 2, 1, 2], [0, 1, 1, 1, 2, 2]])):
        raise MissingMomentError(f"missing cross-moment for pixels ({i}, {j})")
    return float(_taylor_expectation(sub, taylor2_coeffs(cfg)))


def _activated_means(stats, tc, side):
    m = stats.moments
    if side == 0:
        e1, e2 = m[1, 0, :, 0], m[2, 0, :, 0]
    else:
        e1, e2 = m[0, 1, 0, :], m[0, 2, 0, :]
    return tc.g0 + tc.g1 * e1 + 0.5 * tc.g2 * e2


def activated_pixel_means(stats, cfg):
    """Second-order Taylor estimate of E[g(U_k)] for each pixel."""
    _require(stats, (slice(None), slice(None)))
    return _activated_means(stats, taylor2_coeffs(cfg), 0)


def _cross_cov(stats, tc):
    m = stats.moments
    if np.any(np.isnan(m)):
        raise MissingMomentError("pixel statistics contain unmeasured moments")
    exy = _taylor_expectation(m, tc)
    return exy - np.outer(_activated_means(stats, tc, 0), _activated_means(stats, tc, 1))


def pixel_cov_matrix(stats, cfg):
    """R x R covariance of the activated pixels of one filter."""
    cov = _cross_cov(stats, taylor2_coeffs(cfg))
    if cov.shape[0] != cov.shape[1]:
        raise DomainError("pixel_cov_matrix needs a square (single-filter) table")
    return 0.5 * (cov + cov.T)


def gap_moments(act_moments, cov, r_pixels):
    """Moments of the mean of R correlated activated pixels.

    The diagonal uses the exact activated variance; the off-diagonal
    covariances enter as sum_{k != l} Cov(k, l) / R**2.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (r_pixels, r_pixels):
        raise DomainError(f"covariance must be {r_pixels}x{r_pixels}, got {cov.shape}")
    offdiag = float(np.sum(cov) - np.trace(cov))
    var = act_moments.variance / r_pixels + offdiag / (r_pixels * r_pixels)
    if var < 0:
        raise NegativeVarianceError(f"GAP variance came out negative ({var:.6g})")
    return Moments(act_moments.mean, var)


def match_gamma(m):
    """Gamma (shape, scale) with the given mean and variance."""
    if not (m.mean > 0 and m.variance > 0):
        raise DomainError(
            f"Gamma matching needs positive mean and variance, got ({m.mean}, {m.variance})"
        )
    return m.mean * m.mean / m.variance, m.variance / m.mean


def gap_feature_cov(pair_stats, cfg):
    """Covariance of two GAP features from their cross-moment table.

    ``pair_stats`` holds E[U_k^a W_l^b] between the pixels of filter i (U) and
    filter j (W); a pooled 1x1 table gives the same value.
    """
    cov = _cross_cov(pair_stats, taylor2_coeffs(cfg))
    return float(np.sum(cov)) / (cov.shape[0] * cov.shape[1])


def deact_cov(cov_g, mu_i, mu_j, gamma_exp, eps):
    """First-order covariance of (X + eps)**gamma and (Y + eps)**gamma.

    Linearizing x**gamma as c + d x with d = gamma (2 eps)**(gamma - 1) and
    c = (2 - d) eps gives E[X^g Y^g] - E[X^g] E[Y^g] = d**2 Cov(X, Y): the
    constant and mean terms cancel exactly, so the GAP means drop out.
    """
    if not eps > 0:
        raise DomainError("deact_cov needs eps > 0; use deact_cov_at_mean for eps = 0")
    d = gamma_exp * (2.0 * eps) ** (gamma_exp - 1.0)
    return d * d * cov_g


def deact_cov_at_mean(cov_g, mu_i, mu_j, gamma_exp):
    """First-order covariance of X**gamma and Y**gamma, linearized at the means."""
    if not (mu_i > 0 and mu_j > 0):
        raise DomainError("deact_cov_at_mean needs positive GAP means")
    d_i = gamma_exp * mu_i ** (gamma_exp - 1.0)
    d_j = gamma_exp * mu_j ** (gamma_exp - 1.0)
    return d_i * d_j * cov_g


def output_gaussian(feat_moments, cov_d, w):
    """Gaussian of O = sum_i w_i D_i from feature moments and Cov_D."""
    w = np.asarray(w, dtype=float)
    n = len(feat_moments)
    if w.shape != (n,):
        raise DomainError(f"weights have shape {w.shape}, expected ({n},)")
    cov_d = np.asarray(cov_d, dtype=float)
    if cov_d.shape != (n, n):
        raise DomainError(f"Cov_D has shape {cov_d.shape}, expected ({n}, {n})")
    mu = np.array([m.mean for m in feat_moments])
    var = np.array([m.variance for m in feat_moments])
    off = cov_d - np.diag(np.diag(cov_d))
    total = float(np.sum(w * w * var) + w @ off @ w)
    if not total > 0:
        raise NegativeVarianceError(f"output variance is not positive ({total:.6g})")
    return GaussianParams(float(np.sum(w * mu)), math.sqrt(total))


@dataclass(frozen=True)
class GaussianPair:
    pos: GaussianParams
    neg: GaussianParams


def kl_gaussian(pair):
    """KL(pos || neg) between two univariate Gaussians."""
    sp, sn = pair.pos.sigma, pair.neg.sigma
    dmu = pair.pos.mu - pair.neg.mu
    ratio = sp / sn
    # log(sn/sp) + (sp^2 + dmu^2)/(2 sn^2) - 1/2, grouped so K(p, p) is exactly 0
    return -math.log(ratio) + 0.5 * (ratio * ratio - 1.0) + 0.5 * (dmu / sn) ** 2


@dataclass(frozen=True)
class BlockStats:
    """Pixel statistics of every filter of a block.

    ``within[f]`` is the full R x R table of filter f; ``pooled[i, j]`` is the
    3 x 3 table of pixel-averaged cross-moments between filters i and j.
    """

    within: tuple
    pooled: np.ndarray = field(repr=False)

    def __post_init__(self):
        pooled = np.asarray(self.pooled, dtype=float)
        f = len(self.within)
        if pooled.shape != (f, f, 3, 3):
            raise DomainError(f"pooled table must be ({f}, {f}, 3, 3), got {pooled.shape}")
        pooled.setflags(write=False)
        object.__setattr__(self, "within", tuple(self.within))
        object.__setattr__(self, "pooled", pooled)

    @property
    def n_filters(self):
        return len(self.within)

    @property
    def n_pixels(self):
        return self.within[0].n_pixels

    def pair(self, i, j):
        return PixelStats(self.pooled[i, j][:, :, None, None])

    @classmethod
    def from_values(cls, values):
        """Estimate from an (n_images, F, R) array of convolution outputs."""
        values = np.asarray(values, dtype=float)
        n, f, _ = values.shape
        within = tuple(PixelStats.from_samples(values[:, k, :]) for k in range(f))
        means = np.stack([np.ones((n, f)), values.mean(axis=2), (values * values).mean(axis=2)])
        pooled = np.einsum("ani,bnj->ijab", means, means) / n
        for k in range(f):
            # keep the diagonal blocks identical to the pooled within-filter tables
            pooled[k, k] = within[k].pooled().moments[:, :, 0, 0]
        pooled = 0.5 * (pooled + pooled.transpose(1, 0, 3, 2))
        return cls(within, pooled)


@dataclass(frozen=True)
class BlockPrediction:
    activation: tuple
    gap: tuple
    gap_gamma: tuple
    deactivation: tuple
    cov_gap: np.ndarray = field(repr=False)
    cov_deact: np.ndarray = field(repr=False)
    output: GaussianParams = None


def _tagged(layer, fn, *args):
    try:
        return fn(*args)
    except PropagationError:
        raise
    except AggDistError as exc:
        raise PropagationError(layer, exc) from exc


def _activation_moments(zg, cfg):
    if cfg.activation == "identity":
        return zero_gamma_moments(zg)
    inner = ExpGammaParams(zg.a, zg.s, cfg.alpha, cfg.beta)
    return zero_exp_gamma_moments(ZeroExpGammaParams(zg.p, inner))


def _deact_moments(a_s, s_s, cfg):
    params = GenGammaParams(a_s, s_s, cfg.gamma_exp, cfg.eps)
    if cfg.eps > 0:
        return eps_deact_moments(params, cfg.series_order)
    return gen_gamma_moments(params)


def predict_block(per_filter, stats, cfg, w, include_covariance=True):
    """Run the whole analytic chain for one class.

    With ``include_covariance=False`` every pixel-level and feature-level
    covariance is treated as zero (the independence ablation).
    """
    f = len(per_filter)
    w = np.asarray(w, dtype=float)
    if w.shape != (f,):
        raise PropagationError("output", DomainError(f"{w.size} weights for {f} filters"))
    if stats.n_filters != f:
        raise PropagationError("gap", DomainError(f"stats cover {stats.n_filters} filters, expected {f}"))
    r = cfg.r_pixels
    if stats.n_pixels != r:
        raise PropagationError("gap", DomainError(f"stats have {stats.n_pixels} pixels, cfg says {r}"))

    act = tuple(_tagged("activation", _activation_moments, zg, cfg) for zg in per_filter)

    gap = []
    for k in range(f):
        if include_covariance:
            cov = _tagged("gap", pixel_cov_matrix, stats.within[k], cfg)
        else:
            cov = np.zeros((r, r))
        gap.append(_tagged("gap", gap_moments, act[k], cov, r))
    gap = tuple(gap)

    cov_g = np.diag([m.variance for m in gap])
    if include_covariance:
        for i in range(f):
            for j in range(i + 1, f):
                c = _tagged("gap", gap_feature_cov, stats.pair(i, j), cfg)
                cov_g[i, j] = cov_g[j, i] = c

    gap_gamma, deact = [], []
    for m in gap:
        if m.mean == 0.0 and m.variance == 0.0:
            # an identically-zero feature stays constant after deactivation
            gap_gamma.append(None)
            deact.append(Moments(cfg.eps ** cfg.gamma_exp if cfg.eps > 0 else 0.0, 0.0))
            continue
        a_s, s_s = _tagged("gap", match_gamma, m)
        gap_gamma.append((a_s, s_s))
        deact.append(_tagged("deactivation", _deact_moments, a_s, s_s, cfg))
    gap_gamma, deact = tuple(gap_gamma), tuple(deact)

    cov_d = np.diag([m.variance for m in deact])
    for i in range(f):
        for j in range(i + 1, f):
            if cov_g[i, j] == 0.0:
                continue
            if cfg.eps > 0:
                c = _tagged("deactivation", deact_cov, cov_g[i, j], gap[i].mean, gap[j].mean,
                            cfg.gamma_exp, cfg.eps)
            else:
                c = _tagged("deactivation", deact_cov_at_mean, cov_g[i, j], gap[i].mean,
                            gap[j].mean, cfg.gamma_exp)
            cov_d[i, j] = cov_d[j, i] = c

    out = _tagged("output", output_gaussian, deact, cov_d, w)
    return BlockPrediction(act, gap, gap_gamma, deact, cov_g, cov_d, out)
