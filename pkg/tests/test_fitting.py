import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import special

from aggdist.distributions import GenGammaParams, ZeroGammaParams, sample
from aggdist.errors import DegenerateSampleError, DomainError, FitError, InsufficientDataError
from aggdist.fitting import (
    ActivationDump,
    estimate_block_stats,
    estimate_pixel_stats,
    fit_filters,
    fit_gaussian,
    fit_zero_gamma,
    gamma_ks_statistic,
    observed_kl,
    pairings,
)
from aggdist.simulator import SyntheticSpec, generate, zero_gamma_from_latent


def induced_correlation(params, rho, nodes=200):
    """Pearson correlation of two ZeroGamma pixels whose latent normals have correlation rho.

    Gauss-Hermite quadrature over the bivariate normal, independent of any sampling.
    """
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / w.sum()
    z1 = x[:, None]
    z2 = rho * x[:, None] + math.sqrt(1 - rho * rho) * x[None, :]
    u1 = zero_gamma_from_latent(np.broadcast_to(z1, z2.shape).copy(), params)
    u2 = zero_gamma_from_latent(z2, params)
    ww = w[:, None] * w[None, :]
    m = np.sum(ww * u1)
    var = np.sum(ww * u1 * u1) - m * m
    return (np.sum(ww * u1 * u2) - m * m) / var


class TestActivationDump:
    def test_validation(self):
        with pytest.raises(DomainError):
            ActivationDump(np.zeros((2, 3)), ["a", "b"])
        with pytest.raises(DomainError):
            ActivationDump(-np.ones((2, 1, 1)), ["a", "b"])
        with pytest.raises(DomainError):
            ActivationDump(np.ones((2, 1, 1)), ["a"])

    def test_scalar_label_broadcasts(self):
        d = ActivationDump(np.ones((3, 1, 2)), "positive")
        assert d.label == "positive"
        assert (d.n_images, d.n_filters, d.n_pixels) == (3, 1, 2)

    def test_one_vs_all(self):
        d = ActivationDump(np.arange(4.0).reshape(4, 1, 1), ["a", "b", "a", "c"])
        pos, rest = d.one_vs_all("a")
        assert pos.values.ravel().tolist() == [0.0, 2.0]
        assert rest.classes() == ["b", "c"]


class TestPairings:
    def test_positive_negative(self):
        assert pairings(["negative", "positive", "positive"]) == ["positive"]

    def test_multiclass(self):
        assert pairings(["cat", "dog", "bird", "cat"]) == ["bird", "cat", "dog"]

    def test_single_class(self):
        with pytest.raises(DomainError):
            pairings(["only"])


class TestFitZeroGamma:
    def test_recovers_parameters(self):
        x = sample(ZeroGammaParams(0.3, 2.0, 0.5), 10 ** 6, seed=21)
        report = fit_zero_gamma(x)
        assert abs(report.params.p - 0.3) <= 0.002
        assert_allclose(report.params.a, 2.0, rtol=0.02)
        assert_allclose(report.params.s, 0.5, rtol=0.02)
        assert report.n_zero + report.n_pos == x.size
        assert report.ks_stat < 0.005

    def test_pure_gamma(self):
        x = sample(GenGammaParams(1.0, 1.0, 1.0), 10 ** 6, seed=22)
        report = fit_zero_gamma(x)
        assert report.params.p == 0.0
        assert_allclose((report.params.a, report.params.s), (1.0, 1.0), rtol=0.02)

    def test_small_shape(self):
        x = sample(ZeroGammaParams(0.5, 0.3, 2.0), 10 ** 6, seed=23)
        report = fit_zero_gamma(x)
        assert_allclose((report.params.a, report.params.s), (0.3, 2.0), rtol=0.02)

    def test_all_zero(self):
        with pytest.raises(InsufficientDataError):
            fit_zero_gamma(np.zeros(1000))

    def test_constant_positive(self):
        with pytest.raises(DegenerateSampleError):
            fit_zero_gamma(np.full(100, 2.0))

    def test_negative_input(self):
        with pytest.raises(DomainError):
            fit_zero_gamma(np.array([1.0, -1.0] * 20))

    def test_threshold(self):
        x = np.concatenate([np.full(50, 1e-14), sample(GenGammaParams(2.0, 1.0, 1.0), 950, seed=1)])
        assert fit_zero_gamma(x).n_zero == 50
        assert fit_zero_gamma(x, zero_threshold=0.0).n_zero == 0

    @pytest.mark.parametrize("c", [0.1, 10.0])
    def test_scale_equivariance(self, c):
        x = sample(ZeroGammaParams(0.2, 1.7, 0.9), 50_000, seed=24)
        base = fit_zero_gamma(x).params
        scaled = fit_zero_gamma(c * x).params
        assert scaled.p == base.p
        assert_allclose(scaled.a, base.a, rtol=1e-9)
        assert_allclose(scaled.s, c * base.s, rtol=1e-9)

    def test_log_likelihood_is_maximal(self):
        x = sample(ZeroGammaParams(0.2, 1.7, 0.9), 20_000, seed=25)
        report = fit_zero_gamma(x)
        pos = x[x > 0]

        def loglik(a, s):
            return np.sum((a - 1) * np.log(pos) - pos / s - special.gammaln(a) - a * math.log(s))

        best = loglik(report.params.a, report.params.s)
        for da in (0.99, 1.01):
            for ds in (0.99, 1.01):
                assert loglik(report.params.a * da, report.params.s * ds) < best

    def test_ks_statistic_matches_scipy(self):
        from scipy import stats
        x = sample(GenGammaParams(2.0, 1.0, 1.0), 5000, seed=26)
        ref = stats.kstest(x, stats.gamma(2.1, scale=0.95).cdf).statistic
        assert_allclose(gamma_ks_statistic(x, 2.1, 0.95), ref, rtol=1e-10)


class TestFitFilters:
    def test_names_filter(self):
        values = sample(ZeroGammaParams(0.3, 2.0, 1.0), 600, seed=1).reshape(50, 3, 4)
        values[:, 2, :] = 0.0
        with pytest.raises(FitError, match="filter 2"):
            fit_filters(ActivationDump(values, "positive"))

    def test_round_trip_through_generator(self):
        spec = SyntheticSpec((ZeroGammaParams(0.3, 2.0, 1.0), ZeroGammaParams(0.1, 0.8, 0.4)), 0.3, 0.2, 16, 62_500, 3)
        reports = fit_filters(generate(spec))
        for truth, report in zip(spec.filters, reports):
            assert abs(report.params.p - truth.p) <= 0.005
            assert_allclose((report.params.a, report.params.s), (truth.a, truth.s), rtol=0.03)


class TestPixelStats:
    def test_constant(self):
        stats_ = estimate_pixel_stats(ActivationDump(np.full((5, 1, 3), 2.5), "x"), 0)
        assert_allclose(stats_.first_moments, 2.5)
        assert_allclose(stats_.moments[1, 1], 6.25)
        cov = stats_.moments[1, 1] - np.outer(stats_.first_moments, stats_.first_moments)
        assert_allclose(cov, 0.0, atol=1e-14)

    def test_iid_factorizes(self):
        dump = generate(SyntheticSpec((ZeroGammaParams(0.3, 2.0, 1.0),), 0.0, 0.0, 3, 100_000, 4))
        stats_ = estimate_pixel_stats(dump, 0)
        m = stats_.first_moments
        se = math.sqrt(stats_.moments[2, 2, 0, 1] / 100_000)
        assert abs(stats_.moments[1, 1, 0, 1] - m[0] * m[1]) < 5 * se

    def test_copula_correlation(self):
        params = ZeroGammaParams(0.3, 2.0, 1.0)
        dump = generate(SyntheticSpec((params,), 0.5, 0.0, 4, 100_000, 5))
        stats_ = estimate_pixel_stats(dump, 0)
        m = stats_.first_moments
        var = stats_.second_moments - m * m
        corr = (stats_.moments[1, 1] - np.outer(m, m)) / np.sqrt(np.outer(var, var))
        target = induced_correlation(params, 0.5)
        off = corr[~np.eye(4, dtype=bool)]
        assert np.all(np.abs(off - target) <= 0.02), (off, target)
        assert target < 0.5

    def test_symmetric(self):
        dump = generate(SyntheticSpec((ZeroGammaParams(0.3, 2.0, 1.0),), 0.3, 0.0, 5, 100, 6))
        m = estimate_pixel_stats(dump, 0).moments
        assert np.array_equal(m, m.transpose(1, 0, 3, 2))

    def test_bad_index(self):
        with pytest.raises(DomainError):
            estimate_pixel_stats(ActivationDump(np.ones((3, 1, 2)), "x"), 1)
        with pytest.raises(DomainError):
            estimate_pixel_stats(ActivationDump(np.ones((1, 1, 2)), "x"), 0)

    def test_block_stats_pooled_diagonal(self):
        dump = generate(SyntheticSpec((ZeroGammaParams(0.3, 2.0, 1.0), ZeroGammaParams(0.2, 1.0, 1.0)), 0.3, 0.1, 4, 500, 7))
        stats_ = estimate_block_stats(dump)
        assert_allclose(stats_.pooled[0, 0], stats_.within[0].pooled().moments[:, :, 0, 0], rtol=1e-13)
        assert_allclose(stats_.pooled[0, 1], stats_.pooled[1, 0].T, rtol=1e-13)


class TestFitGaussian:
    def test_two_points(self):
        g = fit_gaussian([0.0, 2.0])
        assert (g.mu, g.sigma) == (1.0, math.sqrt(2.0))

    def test_normal_samples(self):
        g = fit_gaussian(np.random.default_rng(8).normal(3.0, 2.0, 10 ** 6))
        assert abs(g.mu - 3.0) <= 0.01
        assert abs(g.sigma - 2.0) <= 0.01

    def test_constant(self):
        with pytest.raises(DegenerateSampleError):
            fit_gaussian(np.full(10, 4.0))

    def test_too_few(self):
        with pytest.raises(DomainError):
            fit_gaussian([1.0])


class TestObservedKL:
    def test_identical(self):
        x = np.random.default_rng(9).normal(size=100)
        assert observed_kl(x, x) == 0.0

    def test_mean_shift(self):
        rng = np.random.default_rng(10)
        assert abs(observed_kl(rng.normal(1, 1, 10 ** 6), rng.normal(0, 1, 10 ** 6)) - 0.5) <= 0.01

    def test_constant_shift(self):
        x = np.random.default_rng(11).normal(0, 1.5, 10 ** 5)
        c = 0.8
        sigma = np.std(x, ddof=1)
        assert_allclose(observed_kl(x + c, x), c * c / (2 * sigma * sigma), rtol=1e-12)
