"""Distribution families of the aggregation block.

* ZeroGamma: point mass p at 0 plus (1 - p) Gamma(a, s), the rectified
  convolution output.
* ExpGamma / ZeroExpGamma: the law of alpha * (exp(beta * X) - 1).
* GenGamma: the law of (X + eps)**gamma for X ~ Gamma(a, s).
* Gaussian: the output-node approximation.

Mixed families expose the atom (``point_mass``) and the continuous density
(``*_pdf``) as separate channels. Every family can be sampled by transforming
exact Gamma draws.
"""

import math
from dataclasses import dataclass
from functools import singledispatch

import numpy as np

from .errors import DivergenceError, DomainError, PoleError
from .specfun import gamma_fn, gen_binomial, lgamma_fn

DEFAULT_SERIES_ORDER = 3


@dataclass(frozen=True)
class Moments:
    """Mean and variance of a scalar random variable."""

    mean: float
    variance: float

    def __post_init__(self):
        if not (np.isfinite(self.mean) and np.isfinite(self.variance)):
            raise DomainError(f"non-finite moments ({self.mean}, {self.variance})")
        if self.variance < 0:
            raise DomainError(f"variance must be >= 0, got {self.variance}")

    @property
    def std(self):
        return math.sqrt(self.variance)


def _check_positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be a finite positive number, got {value}")


@dataclass(frozen=True)
class ZeroGammaParams:
    p: float
    a: float
    s: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise DomainError(f"p must lie in [0, 1], got {self.p}")
        _check_positive("a", self.a)
        _check_positive("s", self.s)

    @property
    def point_mass(self):
        return self.p


@dataclass(frozen=True)
class ExpGammaParams:
    a: float
    s: float
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("a", "s", "alpha", "beta"):
            _check_positive(name, getattr(self, name))


@dataclass(frozen=True)
class ZeroExpGammaParams:
    p: float
    inner: ExpGammaParams

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise DomainError(f"p must lie in [0, 1], got {self.p}")

    @property
    def point_mass(self):
        # the atom sits at g(0) = 0
        return self.p


@dataclass(frozen=True)
class GenGammaParams:
    a: float
    s: float
    gamma_exp: float
    eps: float = 0.0

    def __post_init__(self):
        _check_positive("a", self.a)
        _check_positive("s", self.s)
        if not (0.0 < self.gamma_exp <= 1.0):
            raise DomainError(f"gamma_exp must lie in (0, 1], got {self.gamma_exp}")
        if not (np.isfinite(self.eps) and self.eps >= 0.0):
            raise DomainError(f"eps must be >= 0, got {self.eps}")


@dataclass(frozen=True)
class GaussianParams:
    mu: float
    sigma: float

    def __post_init__(self):
        if not np.isfinite(self.mu):
            raise DomainError(f"mu must be finite, got {self.mu}")
        _check_positive("sigma", self.sigma)


def _scalar_or_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _gamma_logpdf(x, a, s):
    return (a - 1.0) * np.log(x) - x / s - lgamma_fn(a) - a * math.log(s)


def zero_gamma_pdf(params, x):
    """Continuous density channel of ZeroGamma; the atom is ``params.p``.

    Returns 0 at x = 0 because the mass there belongs to the atom.
    """
    x, scalar = _scalar_or_array(x)
    if np.any(x < 0):
        raise DomainError("zero_gamma_pdf: x must be >= 0")
    out = np.zeros_like(x)
    pos = x > 0
    if params.p < 1.0:
        out[pos] = (1.0 - params.p) * np.exp(_gamma_logpdf(x[pos], params.a, params.s))
    return float(out) if scalar else out


def zero_gamma_moments(params):
    p, a, s = params.p, params.a, params.s
    mean = (1.0 - p) * a * s
    var = (1.0 - p) * a * s * s * (1.0 + a * p)
    return Moments(mean, var)


def exp_gamma_pdf(params, x):
    """Density of alpha * (exp(beta * X) - 1) for X ~ Gamma(a, s)."""
    x, scalar = _scalar_or_array(x)
    if np.any(x <= 0):
        raise DomainError("exp_gamma_pdf: x must be > 0")
    a, s, alpha, beta = params.a, params.s, params.alpha, params.beta
    bs = beta * s
    u = np.log1p(x / alpha)
    logpdf = (
        -math.log(alpha)
        - lgamma_fn(a)
        - a * math.log(bs)
        + (a - 1.0) * np.log(u)
        - (bs + 1.0) / bs * u
    )
    out = np.exp(logpdf)
    return float(out) if scalar else out


def zero_exp_gamma_pdf(params, x):
    """Continuous density channel of ZeroExpGamma (zero at x = 0)."""
    x, scalar = _scalar_or_array(x)
    if np.any(x < 0):
        raise DomainError("zero_exp_gamma_pdf: x must be >= 0")
    out = np.zeros_like(x)
    pos = x > 0
    if params.p < 1.0 and np.any(pos):
        out[pos] = (1.0 - params.p) * exp_gamma_pdf(params.inner, x[pos])
    return float(out) if scalar else out


def _mgf_terms(inner):
    bs = inner.beta * inner.s
    if bs >= 0.5:
        raise DivergenceError(
            f"beta*s = {bs:.6g} >= 1/2: the activated variance does not exist"
        )
    u = (1.0 - bs) ** (-inner.a)
    v = (1.0 - 2.0 * bs) ** (-inner.a)
    return u, v


def zero_exp_gamma_moments(params):
    """Mean and variance of the rectified exponential activation.

    Requires beta*s < 1/2; otherwise the second moment diverges.
    """
    p, inner = params.p, params.inner
    u, v = _mgf_terms(inner)
    alpha = inner.alpha
    mean = alpha * (1.0 - p) * (u - 1.0)
    var = alpha * alpha * (1.0 - p) * (v - (1.0 - p) * u * u - 2.0 * p * u + p)
    # rounding can push a zero variance a hair below 0 when p == 1
    return Moments(mean, max(var, 0.0))


def exp_gamma_moments(params):
    return zero_exp_gamma_moments(ZeroExpGammaParams(0.0, params))


def gen_gamma_pdf(params, x):
    """Density of (X + eps)**gamma for X ~ Gamma(a, s).

    For eps = 0 this is x**(a/gamma - 1) exp(-x**(1/gamma)/s) / (gamma Gamma(a) s**a);
    for eps > 0 the density is zero below eps**gamma.
    """
    x, scalar = _scalar_or_array(x)
    if np.any(x <= 0):
        raise DomainError("gen_gamma_pdf: x must be > 0")
    a, s, g, eps = params.a, params.s, params.gamma_exp, params.eps
    out = np.zeros_like(x)
    base = x ** (1.0 / g) - eps
    ok = base > 0
    y = x[ok]
    logpdf = (
        _gamma_logpdf(base[ok], a, s)
        + (1.0 / g - 1.0) * np.log(y)
        - math.log(g)
    )
    out[ok] = np.exp(logpdf)
    return float(out) if scalar else out


def _gamma_ratio(num, den):
    """Gamma(num) / Gamma(den) for den > 0 without intermediate overflow."""
    if num > 0:
        return math.exp(lgamma_fn(num) - lgamma_fn(den))
    return gamma_fn(num) * math.exp(-lgamma_fn(den))


def gen_gamma_moments(params):
    """Mean and variance of X**gamma, X ~ Gamma(a, s) (eps = 0 path)."""
    if params.eps != 0.0:
        raise DomainError("gen_gamma_moments handles eps = 0; use eps_deact_moment")
    a, s, g = params.a, params.s, params.gamma_exp
    lg_a = lgamma_fn(a)
    l1 = lgamma_fn(a + g) - lg_a
    l2 = lgamma_fn(a + 2.0 * g) - lg_a
    mean = s ** g * math.exp(l1)
    # var = mean^2 (Gamma(a+2g)Gamma(a)/Gamma(a+g)^2 - 1), written with expm1
    var = mean * mean * math.expm1(l2 - 2.0 * l1)
    return Moments(mean, max(var, 0.0))


def _log_abs_gamma(x):
    """(log|Gamma(x)|, sign) for any real x that is not a pole."""
    if x > 0:
        return lgamma_fn(x), 1.0
    if x == math.floor(x):
        raise PoleError(f"Gamma pole at {x}")
    sin_term = math.sin(math.pi * x)
    return (
        math.log(math.pi) - math.log(abs(sin_term)) - lgamma_fn(1.0 - x),
        math.copysign(1.0, sin_term),
    )


def eps_deact_moment(params, n, order=DEFAULT_SERIES_ORDER):
    """Truncated small-eps series for E[(X + eps)**(gamma*n)], X ~ Gamma(a, s).

    The expansion has a regular part in integer powers of eps,

        e^{eps/s}/Gamma(a) sum_k C(a-1, k) (-eps)^k Gamma(a + m - k) s^{m - k},

    with m = gamma*n, and a boundary part in powers eps^{a+m+j}

        eps^{a+m} s^{-a} Gamma(-a-m)/Gamma(-m) sum_j (a)_j/(a+m+1)_j (eps/s)^j / j!,

    which matters when a is small. Both sums are cut after ``order`` terms.
    """
    if n < 1 or int(n) != n:
        raise DomainError("eps_deact_moment: n must be a positive integer")
    if order < 0 or int(order) != order:
        raise DomainError("eps_deact_moment: order must be a non-negative integer")
    a, s, g, eps = params.a, params.s, params.gamma_exp, params.eps
    m = g * n
    if eps == 0.0:
        return s ** m * _gamma_ratio(a + m, a)

    z = eps / s
    regular = 0.0
    for k in range(int(order) + 1):
        coef = gen_binomial(a - 1.0, k)
        if coef == 0.0:
            continue
        arg = a + m - k
        if arg <= 0 and arg == math.floor(arg):
            raise PoleError(f"eps series: Gamma({arg}) pole at retained term k={k}")
        regular += coef * (-eps) ** k * _gamma_ratio(arg, a) * s ** (m - k)
    regular *= math.exp(z)

    boundary = 0.0
    if not (m == math.floor(m)):
        # 1/Gamma(-m) vanishes for integer m, killing the whole boundary part
        log_num, sign_num = _log_abs_gamma(-a - m)
        log_den, sign_den = _log_abs_gamma(-m)
        log_pref = (a + m) * math.log(eps) - a * math.log(s) + log_num - log_den
        series, term = 0.0, 1.0
        for j in range(int(order) + 1):
            series += term
            term *= (a + j) / (a + m + 1.0 + j) * z / (j + 1.0)
        boundary = sign_num * sign_den * math.exp(log_pref) * series
    return regular + boundary


def eps_deact_moments(params, order=DEFAULT_SERIES_ORDER):
    """Mean and variance of (X + eps)**gamma from the truncated series."""
    mean = eps_deact_moment(params, 1, order)
    second = eps_deact_moment(params, 2, order)
    var = second - mean * mean
    if var < 0:
        raise DivergenceError(
            "eps series produced a negative variance; eps is too large for the order"
        )
    return Moments(mean, var)


def gaussian_pdf(params, x):
    x, scalar = _scalar_or_array(x)
    zscore = (x - params.mu) / params.sigma
    out = np.exp(-0.5 * zscore * zscore) / (params.sigma * math.sqrt(2.0 * math.pi))
    return float(out) if scalar else out


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _gamma_draws(rng, a, s, n):
    # numpy's standard_gamma is Marsaglia-Tsang with the a < 1 boost
    return rng.standard_gamma(a, n) * s


@singledispatch
def sample(dist, n, seed=None):
    """Draw n i.i.d. samples from ``dist``; ``seed`` is an int or a Generator."""
    raise TypeError(f"cannot sample from {type(dist).__name__}")


def _check_n(n):
    if n < 1 or int(n) != n:
        raise DomainError(f"sample count must be a positive integer, got {n}")


@sample.register
def _(dist: ZeroGammaParams, n, seed=None):
    _check_n(n)
    rng = _rng(seed)
    x = _gamma_draws(rng, dist.a, dist.s, n)
    x[rng.random(n) < dist.p] = 0.0
    return x


@sample.register
def _(dist: ExpGammaParams, n, seed=None):
    _check_n(n)
    rng = _rng(seed)
    x = _gamma_draws(rng, dist.a, dist.s, n)
    return dist.alpha * np.expm1(dist.beta * x)


@sample.register
def _(dist: ZeroExpGammaParams, n, seed=None):
    _check_n(n)
    rng = _rng(seed)
    inner = dist.inner
    x = _gamma_draws(rng, inner.a, inner.s, n)
    x[rng.random(n) < dist.p] = 0.0
    return inner.alpha * np.expm1(inner.beta * x)


@sample.register
def _(dist: GenGammaParams, n, seed=None):
    _check_n(n)
    rng = _rng(seed)
    x = _gamma_draws(rng, dist.a, dist.s, n)
    return (x + dist.eps) ** dist.gamma_exp


@sample.register
def _(dist: GaussianParams, n, seed=None):
    _check_n(n)
    return _rng(seed).normal(dist.mu, dist.sigma, n)
