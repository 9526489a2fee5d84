"""Real special functions: Gamma, log-Gamma, digamma, trigamma, binomials and
the regularized lower incomplete Gamma function.

Every function accepts a scalar or an array. Scalars in give Python floats
out; arrays in give arrays of the broadcast shape.
"""

import math

import numpy as np

from .errors import DomainError, PoleError

# Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_EULER = 0.57721566490153286061

# Largest argument with a representable Gamma value.
GAMMA_MAX_ARG = 171.6243769563027

# Radius of the Taylor windows around the zeros of log-Gamma at 1 and 2.
_LGAMMA_WINDOW = 0.2
_LGAMMA_SERIES_TERMS = 30


def _zeta_table(kmax):
    """zeta(k) for k = 2..kmax; exact closed forms for even k <= 8."""
    pi = math.pi
    known = {
        2: pi ** 2 / 6.0,
        3: 1.2020569031595942854,
        4: pi ** 4 / 90.0,
        5: 1.0369277551433699263,
        6: pi ** 6 / 945.0,
        7: 1.0083492773819228268,
        8: pi ** 8 / 9450.0,
    }
    n = np.arange(100, 0, -1, dtype=float)
    table = np.empty(kmax + 1)
    table[:2] = np.nan
    for k in range(2, kmax + 1):
        # summed smallest-first; tail beyond 100 is below 1e-17 for k >= 9
        table[k] = known[k] if k in known else float(np.sum(n ** -float(k)))
    return table


_ZETA = _zeta_table(_LGAMMA_SERIES_TERMS + 1)


def _as_array(z):
    arr = np.asarray(z, dtype=float)
    return arr, arr.ndim == 0


def _out(arr, scalar):
    return float(arr) if scalar else arr


def _lanczos_sum(zm1):
    acc = np.full_like(zm1, _LANCZOS_COEF[0])
    for i in range(1, len(_LANCZOS_COEF)):
        acc = acc + _LANCZOS_COEF[i] / (zm1 + i)
    return acc


def _gamma_right(z):
    """Gamma for z >= 0.5, splitting the power to avoid early overflow."""
    zm1 = z - 1.0
    t = zm1 + _LANCZOS_G + 0.5
    half = t ** ((zm1 + 0.5) / 2.0)
    return _SQRT_2PI * half * (half * np.exp(-t)) * _lanczos_sum(zm1)


def gamma_fn(z):
    """Gamma function.

    Raises PoleError at non-positive integers and OverflowError above
    about 171.62.
    """
    z, scalar = _as_array(z)
    if np.any(np.isnan(z)):
        raise DomainError("gamma_fn: NaN argument")
    if np.any((z <= 0) & (z == np.floor(z))):
        raise PoleError("gamma_fn: pole at non-positive integer")
    if np.any(z > GAMMA_MAX_ARG):
        raise OverflowError(f"gamma_fn: result overflows for z > {GAMMA_MAX_ARG}")
    out = np.empty_like(z)
    right = z >= 0.5
    out[right] = _gamma_right(z[right])
    left = ~right
    if np.any(left):
        zl = z[left]
        # reflection formula
        out[left] = math.pi / (np.sin(math.pi * zl) * _gamma_right(1.0 - zl))
    return _out(out, scalar)


_SERIES_K = np.arange(_LGAMMA_SERIES_TERMS, 1, -1)
_SERIES_COEF = (
    tuple(_ZETA[_SERIES_K] * (-1.0) ** _SERIES_K / _SERIES_K),
    tuple((_ZETA[_SERIES_K] - 1.0) * (-1.0) ** _SERIES_K / _SERIES_K),
)


def _lgamma_series(eps, near_two):
    """Taylor series of ln Gamma about 1 (or 2) in powers of eps."""
    acc = np.zeros_like(eps)
    for c in _SERIES_COEF[int(near_two)]:
        acc = (acc + c) * eps
    acc = acc * eps
    linear = (1.0 - _EULER) if near_two else -_EULER
    return linear * eps + acc


def _lgamma_pos(z):
    out = np.empty_like(z)
    near1 = np.abs(z - 1.0) < _LGAMMA_WINDOW
    near2 = np.abs(z - 2.0) < _LGAMMA_WINDOW
    small = (z < 0.5) & ~near1
    rest = ~(near1 | near2 | small)
    if np.any(near1):
        out[near1] = _lgamma_series(z[near1] - 1.0, near_two=False)
    if np.any(near2):
        out[near2] = _lgamma_series(z[near2] - 2.0, near_two=True)
    if np.any(rest):
        zm1 = z[rest] - 1.0
        t = zm1 + _LANCZOS_G + 0.5
        out[rest] = _HALF_LOG_2PI + (zm1 + 0.5) * np.log(t) - t + np.log(_lanczos_sum(zm1))
    if np.any(small):
        zs = z[small]
        out[small] = _lgamma_pos(zs + 1.0) - np.log(zs)
    return out


def lgamma_fn(z):
    """Natural log of the Gamma function for z > 0."""
    z, scalar = _as_array(z)
    if np.any(~(z > 0)):
        raise DomainError("lgamma_fn: argument must be > 0")
    return _out(_lgamma_pos(z), scalar)


# Bernoulli-number coefficients B_2k / (2k) of the digamma asymptotic series.
_DIGAMMA_ASYM = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)
# B_2k coefficients for the trigamma asymptotic series.
_TRIGAMMA_ASYM = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
)
_SHIFT_TARGET = 6.0


def digamma_fn(z):
    """Digamma function psi(z) = d/dz ln Gamma(z), for z > 0."""
    z, scalar = _as_array(z)
    if np.any(~(z > 0)):
        raise DomainError("digamma_fn: argument must be > 0")
    x = z.copy()
    acc = np.zeros_like(x)
    while True:
        low = x < _SHIFT_TARGET
        if not np.any(low):
            break
        acc = acc - np.where(low, 1.0 / x, 0.0)
        x = np.where(low, x + 1.0, x)
    inv2 = 1.0 / (x * x)
    series = np.zeros_like(x)
    for c in reversed(_DIGAMMA_ASYM):
        series = (series + c) * inv2
    return _out(acc + np.log(x) - 0.5 / x - series, scalar)


def trigamma_fn(z):
    """Trigamma function psi'(z), for z > 0."""
    z, scalar = _as_array(z)
    if np.any(~(z > 0)):
        raise DomainError("trigamma_fn: argument must be > 0")
    x = z.copy()
    acc = np.zeros_like(x)
    while True:
        low = x < _SHIFT_TARGET
        if not np.any(low):
            break
        acc = acc + np.where(low, 1.0 / (x * x), 0.0)
        x = np.where(low, x + 1.0, x)
    inv = 1.0 / x
    inv2 = inv * inv
    series = np.zeros_like(x)
    for c in reversed(_TRIGAMMA_ASYM):
        series = (series + c) * inv2
    return _out(acc + inv + 0.5 * inv2 + series * inv, scalar)


def gen_binomial(a, k):
    """Generalized binomial coefficient a(a-1)...(a-k+1)/k! for real a."""
    if k < 0 or int(k) != k:
        raise DomainError("gen_binomial: k must be a non-negative integer")
    a, scalar = _as_array(a)
    acc = np.ones_like(a)
    for i in range(int(k)):
        acc = acc * (a - i) / (i + 1)
    return _out(acc, scalar)


_INC_EPS = 1e-16
_INC_MAX_ITER = 100000
_TINY = 1e-300


def _inc_series(a, x):
    """Lower series for P(a, x); use for x < a + 1."""
    term = 1.0 / a
    total = term.copy()
    ap = a.copy()
    active = np.ones(a.shape, dtype=bool)
    for _ in range(_INC_MAX_ITER):
        ap = ap + 1.0
        term = np.where(active, term * x / ap, 0.0)
        total = total + term
        active = np.abs(term) > np.abs(total) * _INC_EPS
        if not np.any(active):
            break
    log_pref = -x + a * np.log(x) - _lgamma_pos(a)
    return total * np.exp(log_pref)


def _inc_cfrac(a, x):
    """Modified Lentz continued fraction for Q(a, x); use for x >= a + 1."""
    b = x + 1.0 - a
    c = np.full_like(a, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(a.shape, dtype=bool)
    for i in range(1, _INC_MAX_ITER):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = np.where(active, d * c, 1.0)
        h = h * delta
        active = np.abs(delta - 1.0) > _INC_EPS
        if not np.any(active):
            break
    log_pref = -x + a * np.log(x) - _lgamma_pos(a)
    return np.exp(log_pref) * h


def reg_lower_incomplete_gamma(a, x):
    """Regularized lower incomplete Gamma P(a, x) for a > 0, x >= 0."""
    a_arr, a_scalar = _as_array(a)
    x_arr, x_scalar = _as_array(x)
    a_arr, x_arr = np.broadcast_arrays(a_arr, x_arr)
    a_arr = a_arr.astype(float).copy()
    x_arr = x_arr.astype(float).copy()
    if np.any(~(a_arr > 0)) or np.any(~(x_arr >= 0)):
        raise DomainError("reg_lower_incomplete_gamma: need a > 0 and x >= 0")
    out = np.zeros_like(x_arr)
    inf = np.isinf(x_arr)
    out[inf] = 1.0
    pos = (x_arr > 0) & ~inf
    use_series = pos & (x_arr < a_arr + 1.0)
    use_cfrac = pos & ~use_series
    if np.any(use_series):
        out[use_series] = _inc_series(a_arr[use_series], x_arr[use_series])
    if np.any(use_cfrac):
        out[use_cfrac] = 1.0 - _inc_cfrac(a_arr[use_cfrac], x_arr[use_cfrac])
    out = np.clip(out, 0.0, 1.0)
    return _out(out, a_scalar and x_scalar)
