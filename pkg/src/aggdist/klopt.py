"""Gradient ascent on the predicted class-conditional KL divergence.

The free parameters are the FC weights and the deactivation exponent gamma.
Each class is described by the Gamma (shape, scale) of its GAP features and
by the correlation matrix of its deactivated features. The correlation is
held fixed while gamma moves: under the first-order linearization that
produces Cov_D it equals the GAP-feature correlation, whatever gamma is.
The deactivated covariance at a given gamma is therefore
corr[i, j] * sd_i(gamma) * sd_j(gamma), which stays positive semi-definite.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .distributions import GaussianParams
from .errors import AggDistError, DomainError, OptimizerError
from .propagation import GaussianPair, kl_gaussian
from .specfun import digamma_fn, lgamma_fn

GAMMA_MIN = 0.05
GAMMA_MAX = 1.0
ARMIJO = 1e-4
SHRINK = 0.5
GROW = 2.0
MIN_STEP = 1e-14
MAX_STEP = 1e8


@dataclass(frozen=True)
class ClassFeatures:
    """GAP-feature Gamma parameters and deactivated-feature correlations of one class."""

    shape: np.ndarray
    scale: np.ndarray
    corr: np.ndarray = None

    def __post_init__(self):
        shape = np.asarray(self.shape, dtype=float)
        scale = np.asarray(self.scale, dtype=float)
        if shape.ndim != 1 or shape.shape != scale.shape or shape.size == 0:
            raise DomainError("shape and scale must be equal-length 1-D arrays")
        if np.any(~(shape > 0)) or np.any(~(scale > 0)):
            raise DomainError("Gamma shape and scale must be > 0")
        n = shape.size
        corr = np.eye(n) if self.corr is None else np.array(self.corr, dtype=float)
        if corr.shape != (n, n):
            raise DomainError(f"corr must be ({n}, {n})")
        corr = 0.5 * (corr + corr.T)
        np.fill_diagonal(corr, 1.0)
        if np.any(np.abs(corr) > 1.0):
            raise DomainError("correlations must lie in [-1, 1]")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "corr", corr)

    @classmethod
    def from_covariance(cls, shape, scale, cov):
        cov = np.asarray(cov, dtype=float)
        sd = np.sqrt(np.diag(cov))
        if np.any(~(sd > 0)):
            raise DomainError("covariance diagonal must be > 0")
        return cls(shape, scale, cov / np.outer(sd, sd))

    def offdiag_cov(self, var):
        """Off-diagonal deactivated covariance for per-feature variances ``var``."""
        sd = np.sqrt(var)
        cov = self.corr * np.outer(sd, sd)
        np.fill_diagonal(cov, 0.0)
        return cov

    @property
    def n_features(self):
        return self.shape.size


@dataclass(frozen=True)
class KLProblem:
    pos: ClassFeatures
    neg: ClassFeatures

    def __post_init__(self):
        if self.pos.n_features != self.neg.n_features:
            raise DomainError("classes must have the same number of features")

    @property
    def n_features(self):
        return self.pos.n_features

    @classmethod
    def from_predictions(cls, pos_pred, neg_pred):
        """Build from two BlockPrediction results (eps = 0 chain)."""
        return cls(_features_from(pos_pred), _features_from(neg_pred))


def _features_from(pred):
    if any(g is None for g in pred.gap_gamma):
        raise DomainError("a GAP feature is identically zero; it has no Gamma model")
    shape = np.array([g[0] for g in pred.gap_gamma])
    scale = np.array([g[1] for g in pred.gap_gamma])
    return ClassFeatures.from_covariance(shape, scale, pred.cov_deact)


def feature_moments(shape, scale, gamma_exp):
    """Mean and variance of X**gamma for X ~ Gamma(shape, scale), vectorized."""
    if not gamma_exp > 0:
        raise DomainError(f"gamma must be > 0, got {gamma_exp}")
    shape = np.asarray(shape, dtype=float)
    n = shape.size
    lg = lgamma_fn(np.concatenate([shape, shape + gamma_exp, shape + 2.0 * gamma_exp]))
    l1 = lg[n:2 * n] - lg[:n]
    l2 = lg[2 * n:] - lg[:n]
    mean = scale ** gamma_exp * np.exp(l1)
    var = mean * mean * np.expm1(l2 - 2.0 * l1)
    return mean, var


def _moment_derivs(shape, scale, gamma_exp, mean, var):
    shape = np.asarray(shape, dtype=float)
    n = shape.size
    psi = digamma_fn(np.concatenate([shape + gamma_exp, shape + 2.0 * gamma_exp]))
    psi1, psi2 = psi[:n], psi[n:]
    log_s = np.log(scale)
    second = var + mean * mean
    dmean = mean * (log_s + psi1)
    dvar = 2.0 * log_s * var + 2.0 * (second * psi2 - mean * mean * psi1)
    return dmean, dvar


def feature_moment_derivs(shape, scale, gamma_exp):
    """d(mean)/d(gamma) and d(var)/d(gamma) of X**gamma."""
    mean, var = feature_moments(shape, scale, gamma_exp)
    return _moment_derivs(shape, scale, gamma_exp, mean, var)


def _output(features, w, mean, var):
    total = float(np.sum(w * w * var) + w @ features.offdiag_cov(var) @ w)
    if not total > 0:
        raise DomainError(f"output variance is not positive ({total:.6g})")
    return GaussianParams(float(w @ mean), math.sqrt(total))


def class_output(features, weights, gamma_exp):
    mean, var = feature_moments(features.shape, features.scale, gamma_exp)
    return _output(features, np.asarray(weights, dtype=float), mean, var)


def kl_value(problem, weights, gamma_exp):
    pos = class_output(problem.pos, weights, gamma_exp)
    neg = class_output(problem.neg, weights, gamma_exp)
    return kl_gaussian(GaussianPair(pos, neg))


def kl_partials(pair):
    """(dK/dsigma+, dK/dsigma-, dK/dmu+, dK/dmu-) of KL(pos || neg)."""
    sp, sn = pair.pos.sigma, pair.neg.sigma
    dmu = pair.pos.mu - pair.neg.mu
    r = sp / sn
    z = dmu / sn
    # -1/sp + sp/sn^2 and 1/sn - (sp^2 + dmu^2)/sn^3, in ratio form so equal
    # Gaussians give exact zeros
    d_sp = (r * r - 1.0) / sp
    d_sn = (1.0 - r * r - z * z) / sn
    d_mp = z / sn
    return d_sp, d_sn, d_mp, -d_mp


def fc_weight_gradient(weights, pos_moments, neg_moments, pos_cov, neg_cov):
    """dK/dw from per-class (mean, var) feature arrays and Cov_D matrices.

    Only the off-diagonal of the covariance matrices is used; the diagonal
    comes from the variances.
    """
    w = np.asarray(weights, dtype=float)
    outs = []
    for (mean, var), cov in ((pos_moments, pos_cov), (neg_moments, neg_cov)):
        mean = np.asarray(mean, dtype=float)
        var = np.asarray(var, dtype=float)
        off = np.array(cov, dtype=float)
        np.fill_diagonal(off, 0.0)
        total = float(np.sum(w * w * var) + w @ off @ w)
        if not total > 0:
            raise DomainError(f"output variance is not positive ({total:.6g})")
        sigma = math.sqrt(total)
        dsigma = (w * var + off @ w) / sigma
        outs.append((GaussianParams(float(w @ mean), sigma), mean, dsigma))
    (pos, dmu_p, dsig_p), (neg, dmu_n, dsig_n) = outs
    k_sp, k_sn, k_mp, k_mn = kl_partials(GaussianPair(pos, neg))
    return k_mp * dmu_p + k_mn * dmu_n + k_sp * dsig_p + k_sn * dsig_n


def gamma_gradient(weights, gamma_exp, problem):
    """dK/dgamma with the feature Gamma parameters and correlations fixed."""
    if not gamma_exp > 0:
        raise DomainError(f"gamma must be > 0, got {gamma_exp}")
    w = np.asarray(weights, dtype=float)
    moments = [feature_moments(f.shape, f.scale, gamma_exp) for f in (problem.pos, problem.neg)]
    return _gamma_gradient(w, gamma_exp, problem, moments)


def _gamma_gradient(w, gamma_exp, problem, moments):
    feats = (problem.pos, problem.neg)
    outs = [_output(f, w, *m) for f, m in zip(feats, moments)]
    k_sp, k_sn, k_mp, k_mn = kl_partials(GaussianPair(*outs))
    total = 0.0
    for f, (mean, var), out, k_mu, k_sigma in zip(feats, moments, outs, (k_mp, k_mn), (k_sp, k_sn)):
        dmean, dvar = _moment_derivs(f.shape, f.scale, gamma_exp, mean, var)
        # d(sd_i sd_j) = sd_i sd_j (dv_i/v_i + dv_j/v_j) / 2; symmetry folds the two halves
        off_w = f.offdiag_cov(var) @ w
        dvar_out = float(np.sum(w * w * dvar) + np.sum(dvar / var * w * off_w))
        total += k_mu * float(w @ dmean) + k_sigma * dvar_out / (2.0 * out.sigma)
    return total


def kl_gradient(problem, weights, gamma_exp):
    """Full gradient: (dK/dw_1 .. dK/dw_N, dK/dgamma)."""
    if not gamma_exp > 0:
        raise DomainError(f"gamma must be > 0, got {gamma_exp}")
    w = np.asarray(weights, dtype=float)
    pos_m = feature_moments(problem.pos.shape, problem.pos.scale, gamma_exp)
    neg_m = feature_moments(problem.neg.shape, problem.neg.scale, gamma_exp)
    pos_cov = problem.pos.offdiag_cov(pos_m[1])
    neg_cov = problem.neg.offdiag_cov(neg_m[1])
    gw = fc_weight_gradient(w, pos_m, neg_m, pos_cov, neg_cov)
    gg = _gamma_gradient(w, gamma_exp, problem, (pos_m, neg_m))
    return np.append(gw, gg)


@dataclass(frozen=True)
class OptState:
    weights: np.ndarray
    gamma_exp: float
    step_size: float = 1.0
    iteration: int = 0
    kl_history: tuple = ()
    trajectory: tuple = field(default=(), repr=False)

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if not self.step_size > 0:
            raise DomainError("step_size must be > 0")
        if not (GAMMA_MIN <= self.gamma_exp <= GAMMA_MAX):
            raise DomainError(f"gamma must lie in [{GAMMA_MIN}, {GAMMA_MAX}]")


def _record(iteration, kl, x):
    return {
        "iteration": iteration,
        "kl": kl,
        "gamma": float(x[-1]),
        "weight_norm": float(np.linalg.norm(x[:-1])),
    }


def _project(x):
    x = x.copy()
    x[-1] = min(max(x[-1], GAMMA_MIN), GAMMA_MAX)
    return x


def _projected_gradient(x, g):
    pg = g.copy()
    if (x[-1] >= GAMMA_MAX and g[-1] > 0) or (x[-1] <= GAMMA_MIN and g[-1] < 0):
        pg[-1] = 0.0
    return pg


def _spectral_step(dx, dg, step):
    """Barzilai-Borwein trial step for the next iteration.

    Falls back to growing the last accepted step when the curvature estimate
    along dx is not negative (the surface is locally not concave there).
    """
    curv = float(dx @ dg)
    if curv < 0.0:
        return min(max(-float(dx @ dx) / curv, MIN_STEP), MAX_STEP)
    return min(step * GROW, MAX_STEP)


def ascend(state, problem, max_iters=200, tol=1e-8, free=None):
    """Projected gradient ascent with spectral step sizes and Armijo backtracking.

    ``free`` is an optional boolean mask over (w_1 .. w_N, gamma); frozen
    coordinates never move. Each accepted step strictly increases the KL.
    """
    n = problem.n_features
    if state.weights.shape != (n,):
        raise DomainError(f"{state.weights.size} weights for {n} features")
    mask = np.ones(n + 1, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    if mask.shape != (n + 1,):
        raise DomainError("free mask must cover every weight plus gamma")

    def evaluate(x):
        return kl_value(problem, x[:-1], x[-1])

    x = np.append(state.weights, state.gamma_exp)
    try:
        kl = evaluate(x)
    except AggDistError as exc:
        raise OptimizerError(f"initial point: {exc}", iterate=x.copy()) from exc
    history = list(state.kl_history) or [kl]
    trajectory = list(state.trajectory) or [_record(state.iteration, kl, x)]
    step = state.step_size
    iteration = state.iteration

    g_next = None
    for _ in range(int(max_iters)):
        try:
            g = kl_gradient(problem, x[:-1], x[-1]) * mask if g_next is None else g_next
        except AggDistError as exc:
            raise OptimizerError(f"gradient at iteration {iteration}: {exc}", iterate=x.copy()) from exc
        if np.linalg.norm(_projected_gradient(x, g)) < tol:
            break
        accepted = False
        while step >= MIN_STEP:
            trial = _project(x + step * g)
            try:
                kl_trial = evaluate(trial)
            except AggDistError:
                # trial left the valid region; treat as a failed step
                step *= SHRINK
                continue
            if kl_trial > kl and kl_trial >= kl + ARMIJO * float(g @ (trial - x)):
                accepted = True
                break
            step *= SHRINK
        if not accepted:
            break
        x_prev, g_prev = x, g
        x, kl = trial, kl_trial
        iteration += 1
        history.append(kl)
        trajectory.append(_record(iteration, kl, x))
        try:
            g_next = kl_gradient(problem, x[:-1], x[-1]) * mask
        except AggDistError as exc:
            raise OptimizerError(f"gradient at iteration {iteration}: {exc}", iterate=x.copy()) from exc
        step = _spectral_step(x - x_prev, g_next - g_prev, step)

    return replace(
        state,
        weights=x[:-1].copy(),
        gamma_exp=float(x[-1]),
        step_size=max(step, MIN_STEP),
        iteration=iteration,
        kl_history=tuple(history),
        trajectory=tuple(trajectory),
    )


def start_points(state, free=None, n_dirs=8, gammas=(GAMMA_MIN, GAMMA_MAX), seed=0):
    """Starting states for a multi-start ascent.

    The KL surface is not concave, so a single ascent stops at whichever
    local maximum owns the starting basin. Starts pair weight directions with
    gamma values. When every weight is free the KL is scale invariant, so
    directions are unit vectors times the starting norm. Otherwise the free
    block is set to tan(theta) * |frozen block| * u for angles theta spread
    over (-pi/2, pi/2), which reaches large free weights as well as small.
    The given state is always the first start.
    """
    n = state.weights.size
    mask = np.ones(n + 1, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    gamma_list = [state.gamma_exp]
    if mask[-1]:
        gamma_list += [float(g) for g in gammas if g != state.gamma_exp]
    free_w = np.flatnonzero(mask[:-1])
    rng = np.random.default_rng(seed)
    weight_list = [state.weights.copy()]
    if free_w.size:
        frozen_norm = float(np.linalg.norm(np.delete(state.weights, free_w)))
        thetas = np.linspace(-1.5, 1.5, max(n_dirs - 1, 1))
        for theta in thetas:
            u = rng.standard_normal(free_w.size) if free_w.size > 1 else np.ones(1)
            u /= np.linalg.norm(u)
            w = state.weights.copy()
            if frozen_norm > 0.0:
                w[free_w] = frozen_norm * math.tan(theta) * u
            else:
                w[free_w] = float(np.linalg.norm(state.weights)) * u
            weight_list.append(w)
    return [OptState(w, g, step_size=state.step_size) for w in weight_list for g in gamma_list]


def ascend_multistart(state, problem, max_iters=200, tol=1e-8, free=None, n_dirs=8, seed=0):
    """Run ascend from every start point and keep the highest endpoint KL."""
    best = None
    for start in start_points(state, free, n_dirs, seed=seed):
        try:
            out = ascend(start, problem, max_iters=max_iters, tol=tol, free=free)
        except OptimizerError:
            continue
        if best is None or out.kl_history[-1] > best.kl_history[-1]:
            best = out
    if best is None:
        raise OptimizerError("no start point admits a valid KL", iterate=np.append(state.weights, state.gamma_exp))
    return best
