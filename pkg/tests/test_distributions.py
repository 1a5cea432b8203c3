import math

import numpy as np
import pytest
import scipy.special
import scipy.stats

from rgevselect.distributions import (
    GevParams,
    NsGevParams,
    WakebyParams,
    digamma,
    gev_cdf,
    gev_quantile,
    rgev_loglik_blocks,
    rgev_negloglik,
    wakeby_quantile,
)
from rgevselect.rlos import RLosSample


class TestGevCdf:
    def test_gumbel_at_zero(self):
        assert gev_cdf(0.0, GevParams(0.0, 1.0, 0.0)) == pytest.approx(math.exp(-1.0), abs=1e-12)

    @pytest.mark.parametrize("sigma,k", [(1.0, 0.0), (2.5, 0.3), (0.7, -0.4)])
    def test_at_location_is_exp_minus_one(self, sigma, k):
        assert gev_cdf(3.0, GevParams(3.0, sigma, k)) == pytest.approx(math.exp(-1.0), abs=1e-12)

    def test_frozen_negative_shape_value(self):
        # oracle: exp(-1.4**-5) evaluated in 40-digit arithmetic
        got = gev_cdf(2.0, GevParams(0.0, 1.0, -0.2))
        assert got == pytest.approx(0.83032803607780859, abs=1e-14)

    def test_monotone_on_support(self):
        for k in (-0.4, -1e-7, 0.0, 1e-7, 0.4):
            params = GevParams(0.0, 1.0, k)
            xs = np.linspace(-2.0, 2.0, 101)
            cdf = gev_cdf(xs, params)
            assert np.all(np.diff(cdf) > 0)

    def test_gumbel_limit_continuity(self):
        xs = np.linspace(-3.0, 5.0, 33)
        base = gev_cdf(xs, GevParams(0.0, 1.0, 0.0))
        for k in (1e-8, -1e-8):
            near = gev_cdf(xs, GevParams(0.0, 1.0, k))
            assert np.max(np.abs(near - base)) <= 1e-6

    def test_out_of_support_boundary_values(self):
        # k > 0: upper endpoint at mu + sigma/k; k < 0: lower endpoint
        assert gev_cdf(10.0, GevParams(0.0, 1.0, 0.5)) == 1.0
        assert gev_cdf(-10.0, GevParams(0.0, 1.0, -0.5)) == 0.0

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            gev_cdf(math.nan, GevParams(0.0, 1.0, 0.0))
        with pytest.raises(ValueError):
            GevParams(0.0, -1.0, 0.0)
        with pytest.raises(ValueError):
            GevParams(0.0, 1.0, math.inf)


class TestGevQuantile:
    def test_gumbel_inverse_of_cdf_example(self):
        assert gev_quantile(math.exp(-1.0), GevParams(0.0, 1.0, 0.0)) == pytest.approx(0.0, abs=1e-12)

    def test_gumbel_closed_form(self):
        assert gev_quantile(0.99, GevParams(0.0, 1.0, 0.0)) == pytest.approx(4.60014922677658, abs=1e-10)

    @pytest.mark.parametrize("k", [-0.3, 0.0, 0.25])
    @pytest.mark.parametrize("p", [0.01, 0.5, 0.99])
    def test_round_trip(self, k, p):
        params = GevParams(1.5, 2.0, k)
        assert gev_cdf(gev_quantile(p, params), params) == pytest.approx(p, rel=1e-10)

    def test_rejects_boundary_p(self):
        for bad in (0.0, 1.0, -0.1, 1.1, math.nan):
            with pytest.raises(ValueError):
                gev_quantile(bad, GevParams(0.0, 1.0, 0.0))


class TestRgevNegloglik:
    def test_r1_matches_scipy_genextreme(self):
        # scipy's genextreme c parameter equals the Hosking-convention k
        rng = np.random.default_rng(5)
        x = scipy.stats.genextreme.rvs(0.15, loc=1.0, scale=2.0, size=40, random_state=rng)
        sample = RLosSample(np.sort(x)[::-1, None].T.reshape(-1, 1))
        params = GevParams(1.0, 2.0, 0.15)
        oracle = -scipy.stats.genextreme.logpdf(x, 0.15, loc=1.0, scale=2.0).sum()
        assert rgev_negloglik(sample, params, 1) == pytest.approx(oracle, rel=1e-12)

    def test_shift_invariance(self):
        rng = np.random.default_rng(7)
        values = np.sort(rng.gumbel(size=(20, 4)), axis=1)[:, ::-1]
        sample = RLosSample(values)
        shifted = RLosSample(values + 12.5)
        a = rgev_negloglik(sample, GevParams(0.3, 1.1, 0.1), 4)
        b = rgev_negloglik(shifted, GevParams(12.8, 1.1, 0.1), 4)
        assert a == pytest.approx(b, rel=1e-12)

    def test_single_block_gumbel_r2_frozen(self):
        # hand value: -(-exp(-1) - (2 + 1)) with mu=0, sigma=1, k=0
        sample = RLosSample(np.array([[2.0, 1.0]]))
        got = rgev_negloglik(sample, GevParams(0.0, 1.0, 0.0), 2)
        assert got == pytest.approx(3.3678794411714423, abs=1e-12)

    def test_gumbel_limit_matches_small_k(self):
        sample = RLosSample(np.array([[2.0, 1.0], [1.5, -0.2]]))
        exact = rgev_negloglik(sample, GevParams(0.1, 1.2, 0.0), 2)
        near = rgev_negloglik(sample, GevParams(0.1, 1.2, 1e-10), 2)
        assert exact == pytest.approx(near, rel=1e-9)

    def test_support_violation_gives_inf(self):
        sample = RLosSample(np.array([[5.0, 1.0]]))
        assert rgev_negloglik(sample, GevParams(0.0, 1.0, 0.5), 2) == math.inf

    def test_block_decomposition(self):
        rng = np.random.default_rng(11)
        values = np.sort(rng.gumbel(size=(30, 5)), axis=1)[:, ::-1]
        sample = RLosSample(values)
        params = GevParams(0.1, 0.9, -0.05)
        blocks = rgev_loglik_blocks(values, params.mu, params.sigma, params.k)
        assert rgev_negloglik(sample, params, 5) == pytest.approx(-blocks.sum(), abs=1e-12)

    def test_r_out_of_range(self):
        sample = RLosSample(np.array([[2.0, 1.0]]))
        with pytest.raises(ValueError):
            rgev_negloglik(sample, GevParams(0.0, 1.0, 0.0), 3)


class TestDigamma:
    def test_recurrence_at_one(self):
        assert digamma(2.0) - digamma(1.0) == pytest.approx(1.0, abs=1e-12)

    def test_euler_mascheroni(self):
        assert digamma(1.0) == pytest.approx(-0.57721566490153286, abs=1e-12)

    def test_half(self):
        assert digamma(0.5) == pytest.approx(-1.9635100260214235, abs=1e-12)

    def test_against_scipy_grid(self):
        zs = np.concatenate([np.linspace(0.05, 2.0, 40), np.linspace(2.0, 60.0, 59)])
        for z in zs:
            assert digamma(float(z)) == pytest.approx(float(scipy.special.digamma(z)), abs=1e-10)

    def test_recurrence_property(self):
        for z in (0.3, 1.7, 4.9, 11.2):
            assert digamma(z + 1.0) == pytest.approx(digamma(z) + 1.0 / z, abs=1e-10)

    def test_rejects_nonpositive(self):
        for bad in (0.0, -1.0, math.nan):
            with pytest.raises(ValueError):
                digamma(bad)


class TestWakeby:
    def test_limit_p_to_zero_with_zero_gamma(self):
        params = WakebyParams(xi=2.0, alpha=1.0, beta=0.5, gamma=0.0, delta=0.0)
        assert wakeby_quantile(1e-12, params) == pytest.approx(2.0, abs=1e-9)

    def test_uniform_segment(self):
        params = WakebyParams(xi=0.5, alpha=1.0, beta=1.0, gamma=0.0, delta=0.0)
        for p in (0.1, 0.4, 0.9):
            assert wakeby_quantile(p, params) == pytest.approx(0.5 + p, abs=1e-12)

    def test_frozen_value(self):
        params = WakebyParams(xi=0.0, alpha=1.0, beta=1.0, gamma=0.1, delta=0.1)
        assert wakeby_quantile(0.5, params) == pytest.approx(0.57177346253629316, abs=1e-14)

    def test_zero_beta_delta_limits(self):
        # both bracket terms collapse to -(alpha+gamma) * log(1-p)
        params = WakebyParams(xi=1.0, alpha=0.7, beta=0.0, gamma=0.3, delta=0.0)
        for p in (0.2, 0.8):
            assert wakeby_quantile(p, params) == pytest.approx(1.0 - math.log(1 - p), abs=1e-12)

    def test_monotone_validation_rejects_bad_params(self):
        with pytest.raises(ValueError):
            WakebyParams(xi=0.0, alpha=-5.0, beta=2.0, gamma=0.0, delta=0.0)

    def test_sampled_uniformity(self):
        params = WakebyParams(xi=0.0, alpha=4.0, beta=0.6, gamma=1.0, delta=0.15)
        rng = np.random.default_rng(3)
        u = rng.random(100_000)
        x = wakeby_quantile(u, params)
        grid = np.linspace(0.001, 0.999, 999)
        qx = wakeby_quantile(grid, params)
        ecdf = np.searchsorted(np.sort(x), qx, side="right") / x.size
        assert np.max(np.abs(ecdf - grid)) < 0.02


class TestNsGevParams:
    def test_links(self):
        params = NsGevParams(mu0=1.0, mu1=0.5, sigma0=0.0, sigma1=0.1, k=0.2)
        t = np.array([1, 2, 3])
        assert np.allclose(params.loc(t), [1.5, 2.0, 2.5])
        assert np.allclose(params.scale(t), np.exp([0.1, 0.2, 0.3]))

    def test_stationary_embedding(self):
        params = NsGevParams(mu0=3.0, mu1=0.0, sigma0=math.log(2.0), sigma1=0.0, k=-0.1)
        flat = params.to_stationary()
        assert flat == GevParams(3.0, 2.0, -0.1)
        with pytest.raises(ValueError):
            NsGevParams(0.0, 0.1, 0.0, 0.0, 0.0).to_stationary()
