import numpy as np
import pytest
from scipy import stats

from hopss import spectral as sp
from hopss.grf import GrfParams, grf_mode_variance, sample_grf
from hopss.spectral import make_grid


def full_spectrum_variance(grid, params):
    """Sum of sigma^2 (|k|^2 + tau^2)^-alpha over every non-zero mode."""
    k = 2 * np.pi * np.fft.fftfreq(grid.n, d=grid.spacing)
    ksq = sum(np.meshgrid(*([k**2] * grid.dims), indexing="ij"))
    var = params.sigma**2 * (ksq + params.tau**2) ** (-params.alpha)
    var.flat[0] = 0.0
    return var.sum()


class TestParams:
    @pytest.mark.parametrize("tau, sigma", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, -2.0)])
    def test_rejects_non_positive(self, tau, sigma):
        with pytest.raises(ValueError):
            GrfParams(tau, 2.5, sigma)

    @pytest.mark.parametrize("dims, alpha", [(1, 0.5), (1, 0.2), (2, 1.0), (2, 0.9)])
    def test_rejects_infinite_variance(self, dims, alpha):
        g = make_grid(dims, 16)
        with pytest.raises(ValueError):
            sample_grf(g, GrfParams(1.0, alpha, 1.0), np.random.default_rng(0))

    def test_default_sigma(self):
        p = GrfParams.with_default_sigma(2.0, 2.5, 2)
        assert p.sigma == pytest.approx(2.0**1.5)

    def test_dict_round_trip(self):
        p = GrfParams(7.0, 2.5, 49.0)
        assert GrfParams.from_dict(p.to_dict()) == p


class TestSample:
    def test_zero_mean_2d(self):
        g = make_grid(2, 128)
        w = sample_grf(g, GrfParams(2.0, 2.5, 1.0), np.random.default_rng(1))
        assert w.shape == (128, 128)
        assert abs(w.mean()) <= 1e-12

    def test_burgers_forcing_draw(self):
        g = make_grid(1, 1024)
        p = GrfParams(7.0, 2.5, 49.0)
        f = sample_grf(g, p, np.random.default_rng(5))
        assert f.shape == (1024,) and np.all(np.isfinite(f))
        assert abs(f.mean()) <= 1e-12
        assert np.array_equal(f, sample_grf(g, p, np.random.default_rng(5)))

    def test_batch_matches_sequential_stream_shape(self):
        g = make_grid(1, 64)
        batch = sample_grf(g, GrfParams(5.0, 2.5, 1.0), np.random.default_rng(2), size=4)
        assert batch.shape == (4, 64)
        assert np.allclose(batch.mean(axis=1), 0, atol=1e-14)

    def test_real_valued(self):
        g = make_grid(2, 16)
        w = sample_grf(g, GrfParams(2.0, 2.5, 1.0), np.random.default_rng(3))
        assert w.dtype == np.float64

    def test_mode_variance_layout(self):
        g = make_grid(2, 8)
        var = grf_mode_variance(g, GrfParams(1.0, 2.0, 3.0))
        assert var.shape == g.spectral_shape and var[0, 0] == 0
        assert var[1, 0] == pytest.approx(9.0 * ((2 * np.pi) ** 2 + 1) ** -2)


class TestStatistics:
    def test_pointwise_variance_matches_spectrum(self):
        g = make_grid(1, 128)
        p = GrfParams(7.0, 2.5, 7.0)
        draws = sample_grf(g, p, np.random.default_rng(11), size=4000)
        expected = full_spectrum_variance(g, p)
        assert draws.var() == pytest.approx(expected, rel=0.05)

    def test_pointwise_variance_2d(self):
        g = make_grid(2, 32)
        p = GrfParams.with_default_sigma(2.0, 2.5, 2)
        draws = sample_grf(g, p, np.random.default_rng(12), size=800)
        assert draws.var() == pytest.approx(full_spectrum_variance(g, p), rel=0.05)

    def test_spectral_slope(self):
        g = make_grid(1, 256)
        p = GrfParams(7.0, 2.5, 7.0)
        draws = sample_grf(g, p, np.random.default_rng(13), size=200)
        power = np.mean(np.abs(sp.forward(draws, g)) ** 2, axis=0)
        j = np.arange(16, 100)
        k = 2 * np.pi * j
        slope = np.polyfit(np.log(k**2 + p.tau**2), np.log(power[j]), 1)[0]
        assert abs(slope + p.alpha) <= 0.1 * p.alpha

    def test_gaussian_marginal(self):
        g = make_grid(1, 64)
        draws = sample_grf(g, GrfParams(5.0, 2.5, 1.0), np.random.default_rng(14), size=2000)
        point = draws[:, 17]
        assert abs(stats.skew(point)) < 0.2
        assert abs(stats.kurtosis(point)) < 0.5
