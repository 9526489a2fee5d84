"""Shared builders and oracles for optimizer tests."""

import numpy as np
from scipy import special

from aggdist.klopt import ClassFeatures, KLProblem


def random_corr(rng, n, rho_max=0.5):
    """Random positive-definite correlation matrix with positive entries."""
    f = rng.normal(size=(n, 2))
    g = f @ f.T
    cov = (1 - rho_max) * np.eye(n) + rho_max * (0.5 + 0.5 * g / np.max(np.abs(g)))
    sd = np.sqrt(np.diag(cov))
    return cov / np.outer(sd, sd)


def random_features(rng, n):
    return ClassFeatures(rng.uniform(0.5, 5.0, n), rng.uniform(0.1, 2.0, n), random_corr(rng, n))


def random_problem(rng, n, gamma_exp=None):
    g = rng.uniform(0.2, 1.0) if gamma_exp is None else gamma_exp
    problem = KLProblem(random_features(rng, n), random_features(rng, n))
    return problem, rng.uniform(0.5, 1.5, n), g


def central_difference(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def _grid_moments(features, gammas):
    """Mean and variance of X**gamma for each gamma (rows) and feature (columns)."""
    g = gammas[:, None]
    a, s = features.shape[None, :], features.scale[None, :]
    l1 = special.gammaln(a + g) - special.gammaln(a)
    l2 = special.gammaln(a + 2 * g) - special.gammaln(a)
    mean = s ** g * np.exp(l1)
    return mean, mean * mean * np.expm1(l2 - 2 * l1)


def grid_kl(problem, weights, w1, gammas):
    """KL on the grid gammas x w1 with weights[1:] fixed, shape (len(gammas), len(w1)).

    Computed independently of the library with scipy's gammaln; points with a
    non-positive output variance come back as NaN.
    """
    outs = []
    for feats in (problem.pos, problem.neg):
        mean, var = _grid_moments(feats, gammas)
        sd = np.sqrt(var)
        wr = weights[1:]
        # output variance of (w1 sd_0, w_r sd_r) under corr, split by powers of w1
        u = sd[:, 1:] * wr
        lin = (u @ feats.corr[1:, 0]) * sd[:, 0]
        const = np.einsum("gi,ij,gj->g", u, feats.corr[1:, 1:], u)
        mu = w1[None, :] * mean[:, :1] + (mean[:, 1:] @ wr)[:, None]
        v = w1[None, :] ** 2 * var[:, :1] + 2 * w1[None, :] * lin[:, None] + const[:, None]
        outs.append((mu, v))
    (mp, vp), (mn, vn) = outs
    with np.errstate(invalid="ignore", divide="ignore"):
        r2 = vp / vn
        kl = -0.5 * np.log(r2) + 0.5 * (r2 - 1) + 0.5 * (mp - mn) ** 2 / vn
    kl[~((vp > 0) & (vn > 0))] = np.nan
    return kl


def grid_best(problem, weights, thetas, gammas):
    """Best KL over (gamma, w_1) with w_1 = tan(theta) * |w_rest| and the rest fixed."""
    w1 = np.tan(thetas) * np.linalg.norm(weights[1:])
    return float(np.nanmax(grid_kl(problem, weights, w1, gammas)))
