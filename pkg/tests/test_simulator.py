import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from aggdist.distributions import ZeroGammaParams
from aggdist.errors import DomainError, NonPDCorrelationError, SimulationOverflowError
from aggdist.fitting import ActivationDump
from aggdist.propagation import ActivationConfig
from aggdist.simulator import (
    MAX_HIST_BINS,
    SyntheticSpec,
    check_activation_range,
    concat_traces,
    forward,
    generate,
    histogram,
    latent_correlation,
    observe,
)

F2 = (ZeroGammaParams(0.3, 2.0, 1.0), ZeroGammaParams(0.2, 1.5, 0.8))


class TestSyntheticSpec:
    @pytest.mark.parametrize("kwargs", [
        {"rho_pix": 1.0}, {"rho_filt": -0.1}, {"n_pixels": 0}, {"n_images": 2.5}, {"seed": -1},
    ])
    def test_rejects(self, kwargs):
        base = {"filters": F2, "rho_pix": 0.3, "rho_filt": 0.2, "n_pixels": 4, "n_images": 10, "seed": 1}
        base.update(kwargs)
        with pytest.raises(DomainError):
            SyntheticSpec(**base)

    def test_filters_must_be_params(self):
        with pytest.raises(DomainError):
            SyntheticSpec(((0.3, 2.0, 1.0),), 0.3, 0.2, 4, 10, 1)


class TestGenerate:
    def test_deterministic_and_thread_independent(self):
        spec = SyntheticSpec(F2, 0.3, 0.2, 4, 5000, 11)
        a = generate(spec).values
        assert np.array_equal(a, generate(spec).values)
        assert np.array_equal(a, generate(spec, threads=4).values)

    def test_streams_differ(self):
        a = generate(SyntheticSpec(F2, 0.3, 0.2, 4, 100, 11, stream=0)).values
        b = generate(SyntheticSpec(F2, 0.3, 0.2, 4, 100, 11, stream=1)).values
        assert not np.array_equal(a, b)

    def test_independent_when_uncorrelated(self):
        dump = generate(SyntheticSpec(F2, 0.0, 0.0, 3, 100_000, 12))
        flat = dump.values.reshape(dump.n_images, -1)
        corr = np.corrcoef(flat, rowvar=False)
        assert np.max(np.abs(corr[~np.eye(6, dtype=bool)])) <= 0.01

    def test_zero_fraction(self):
        dump = generate(SyntheticSpec(F2, 0.3, 0.2, 4, 50_000, 13))
        for k, params in enumerate(F2):
            x = dump.values[:, k, :].ravel()
            frac = np.mean(x == 0.0)
            # pixels are correlated, so widen the binomial interval by the design effect
            n_eff = x.size / (1 + 3 * 0.3)
            assert abs(frac - params.p) <= 4 * np.sqrt(params.p * (1 - params.p) / n_eff)

    def test_marginals_exact(self):
        params = ZeroGammaParams(0.25, 1.7, 0.6)
        dump = generate(SyntheticSpec((params,), 0.3, 0.0, 10, 100_000, 14))
        pos = dump.values.ravel()
        pos = pos[pos > 0]
        assert stats.kstest(pos, stats.gamma(params.a, scale=params.s).cdf).statistic < 0.005

    def test_cholesky_path(self):
        dump = generate(SyntheticSpec(F2, 0.1, 0.3, 3, 20_000, 15))
        gap = dump.values.mean(axis=2)
        assert np.corrcoef(gap.T)[0, 1] > 0.2

    def test_non_pd(self):
        with pytest.raises(NonPDCorrelationError):
            generate(SyntheticSpec(F2, 0.0, 0.9, 4, 10, 1))

    def test_latent_correlation_blocks(self):
        c = latent_correlation(2, 2, 0.3, 0.1)
        assert_allclose(c, [[1, .3, .1, .1], [.3, 1, .1, .1], [.1, .1, 1, .3], [.1, .1, .3, 1]])


class TestForward:
    def test_small_beta_is_linear_pooling(self):
        dump = generate(SyntheticSpec(F2, 0.3, 0.2, 4, 1000, 16))
        alpha, beta = 5.0, 1e-4
        w = np.array([0.7, 1.3])
        trace = forward(dump, ActivationConfig(alpha=alpha, beta=beta), w)
        expected = alpha * beta * dump.values.mean(axis=2) @ w
        assert_allclose(trace.output, expected, rtol=0.01)

    def test_identity_mode(self):
        dump = generate(SyntheticSpec(F2, 0.3, 0.2, 4, 100, 17))
        trace = forward(dump, ActivationConfig(activation="identity"), [1.0, 1.0])
        assert np.array_equal(trace.gap, dump.values.mean(axis=2))
        assert np.array_equal(trace.deactivated, trace.gap)

    def test_all_zero(self):
        dump = ActivationDump(np.zeros((5, 2, 3)), "x")
        trace = forward(dump, ActivationConfig(gamma_exp=0.5), [1.0, 2.0])
        assert not np.any(trace.output)
        assert not np.any(trace.deactivated)

    def test_eps_deactivation(self):
        dump = ActivationDump(np.zeros((2, 1, 1)), "x")
        trace = forward(dump, ActivationConfig(gamma_exp=0.5, eps=0.04), [1.0])
        assert_allclose(trace.output, [0.2, 0.2])

    def test_overflow(self):
        dump = ActivationDump(np.full((2, 1, 1), 1000.0), "x")
        with pytest.raises(SimulationOverflowError):
            forward(dump, ActivationConfig(beta=1.0), [1.0])

    def test_weight_dimension(self):
        dump = ActivationDump(np.ones((2, 2, 1)), "x")
        with pytest.raises(DomainError):
            forward(dump, ActivationConfig(), [1.0])

    def test_select_and_concat(self):
        dump = generate(SyntheticSpec(F2, 0.3, 0.2, 4, 10, 18))
        trace = forward(dump, ActivationConfig(beta=0.05), [1.0, 1.0])
        mask = np.arange(10) < 4
        joined = concat_traces([trace.select(mask), trace.select(~mask)])
        assert np.array_equal(joined.output, trace.output)


class TestActivationRange:
    def test_guard(self):
        check_activation_range(F2, ActivationConfig(beta=0.49))
        with pytest.raises(SimulationOverflowError, match="filter 0"):
            check_activation_range(F2, ActivationConfig(beta=0.7))
        check_activation_range(F2, ActivationConfig(beta=5.0, activation="identity"))


class TestObserve:
    def test_constant_images(self):
        dump = ActivationDump(np.full((6, 2, 3), 1.5), "x")
        obs = observe(forward(dump, ActivationConfig(beta=0.1), [1.0, 1.0]))
        assert all(m.variance == 0.0 for m in obs.gap)
        assert obs.output.variance == 0.0
        assert_allclose(obs.cov_gap, 0.0)

    def test_needs_two_images(self):
        dump = ActivationDump(np.ones((1, 1, 1)), "x")
        with pytest.raises(DomainError):
            observe(forward(dump, ActivationConfig(), [1.0]))

    def test_confidence_shrinks(self):
        widths = []
        for n in (1000, 10_000, 100_000):
            dump = generate(SyntheticSpec(F2, 0.3, 0.2, 4, n, 19))
            obs = observe(forward(dump, ActivationConfig(beta=0.05), [1.0, 1.0]), with_histograms=False)
            widths.append(obs.output.std / np.sqrt(n))
        assert widths[0] > widths[1] > widths[2]

    def test_correlation_inflates_gap_variance(self):
        cfg = ActivationConfig(beta=0.05)
        dump = generate(SyntheticSpec(F2, 0.3, 0.0, 16, 20_000, 20))
        obs = observe(forward(dump, cfg, [1.0, 1.0]), with_histograms=False)
        for k in range(2):
            assert obs.gap[k].variance > obs.activated[k].variance / 16

    def test_histograms(self):
        dump = generate(SyntheticSpec(F2, 0.3, 0.2, 4, 3000, 21))
        obs = observe(forward(dump, ActivationConfig(beta=0.05), [1.0, 1.0]))
        edges, counts = obs.histograms["output"]
        assert counts.sum() == 3000
        assert len(edges) == len(counts) + 1
        assert len(obs.histograms["gap"]) == 2


class TestHistogram:
    def test_constant(self):
        edges, counts = histogram(np.full(10, 3.0))
        assert counts.tolist() == [10]
        assert edges[0] == 3.0

    def test_bin_cap(self):
        x = np.concatenate([np.zeros(1000), [1e12]])
        edges, counts = histogram(x)
        assert len(counts) <= MAX_HIST_BINS
        assert counts.sum() == 1001

    def test_freedman_diaconis(self):
        x = np.random.default_rng(1).normal(size=10_000)
        edges, counts = histogram(x)
        q75, q25 = np.percentile(x, [75, 25])
        width = 2 * (q75 - q25) / 10_000 ** (1 / 3)
        assert len(counts) == int(np.ceil((x.max() - x.min()) / width))
