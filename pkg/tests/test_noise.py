import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hopss.noise import (
    AMPLITUDE_FLOOR,
    NoiseSpec,
    fade,
    multi_sine_pattern,
    noise_amplitude,
    perlin_pattern,
    perlin_raw,
    random_walk_pattern,
    synthesize_noise,
    unit_coordinates,
)

STRUCTURED = ["multi_sine", "perlin", "random_walk"]


def reference(shape=(64,), peak=1.0, seed=0):
    x = np.random.default_rng(seed).uniform(-1, 1, shape)
    return peak * x / np.max(np.abs(x))


class TestAmplitude:
    def test_formula(self):
        ref = np.array([0.5, -2.0, 1.0])
        assert noise_amplitude(1e-3, ref) == pytest.approx(2e-3, rel=1e-15)

    def test_zero_reference_floor(self):
        assert noise_amplitude(1e-3, np.zeros(16)) == AMPLITUDE_FLOOR == 1e-8

    def test_zero_epsilon(self):
        assert noise_amplitude(0.0, reference()) == 0.0
        assert noise_amplitude(0.0, np.zeros(4)) == 0.0

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            noise_amplitude(-1e-3, reference())


class TestSpec:
    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            NoiseSpec("pink")

    @pytest.mark.parametrize("kwargs", [{"epsilon": -1.0}, {"k_modes": 0}, {"cells": 0}, {"std": -1.0}])
    def test_rejects_bad_fields(self, kwargs):
        with pytest.raises(ValueError):
            NoiseSpec(**kwargs)

    def test_dict_round_trip(self):
        spec = NoiseSpec("perlin", 1e-2, 4, 16)
        assert NoiseSpec.from_dict(spec.to_dict()) == spec
        assert NoiseSpec.from_dict(NoiseSpec(std=1e-4).to_dict()).std == 1e-4


class TestSynthesis:
    @pytest.mark.parametrize("eps", [0.0, 1e-3, 1.0])
    def test_zero_kind(self, eps):
        out = synthesize_noise(NoiseSpec("zero", eps), reference(), np.random.default_rng(0))
        assert out.shape == (64,) and not out.any()

    def test_multi_sine_peak(self):
        out = synthesize_noise(NoiseSpec("multi_sine", 1e-3, k_modes=8), reference(), np.random.default_rng(1))
        assert abs(np.max(np.abs(out)) - 1e-3) <= 1e-12

    def test_random_walk_mean_and_peak(self):
        eps = 1e-3
        out = synthesize_noise(NoiseSpec("random_walk", eps), reference(peak=3.0), np.random.default_rng(2))
        assert abs(out.mean()) <= 1e-15
        assert abs(np.max(np.abs(out)) - 3e-3) <= 1e-12

    @settings(max_examples=40, deadline=None)
    @given(
        kind=st.sampled_from(STRUCTURED),
        eps=st.floats(1e-6, 1.0),
        peak=st.floats(1e-3, 1e3),
        length=st.integers(2, 300),
        seed=st.integers(0, 2**31),
    )
    def test_structured_peak_is_amplitude(self, kind, eps, peak, length, seed):
        ref = reference((length,), peak, seed)
        out = synthesize_noise(NoiseSpec(kind, eps), ref, np.random.default_rng(seed))
        amp = noise_amplitude(eps, ref)
        assert abs(np.max(np.abs(out)) - amp) <= 1e-12 * max(1.0, amp)

    def test_gaussian_std(self):
        ref = reference((100, 100), peak=2.0)
        out = synthesize_noise(NoiseSpec("gaussian", 1e-3), ref, np.random.default_rng(3))
        assert out.std() == pytest.approx(2e-3, rel=0.05)

    def test_gaussian_absolute_std(self):
        out = synthesize_noise(NoiseSpec("gaussian", 0.0, std=1e-4), reference((128, 128)), np.random.default_rng(4))
        assert out.std() == pytest.approx(1e-4, rel=0.05)

    @pytest.mark.parametrize("kind", STRUCTURED)
    def test_all_zero_reference_uses_floor(self, kind):
        out = synthesize_noise(NoiseSpec(kind, 1e-3), np.zeros(32), np.random.default_rng(5))
        assert abs(np.max(np.abs(out)) - 1e-8) <= 1e-20

    @pytest.mark.parametrize("kind", STRUCTURED)
    def test_broadcast_along_last_axis(self, kind):
        ref = reference((16, 32))
        out = synthesize_noise(NoiseSpec(kind, 1e-2), ref, np.random.default_rng(6))
        assert out.shape == (16, 32)
        assert np.array_equal(out, np.broadcast_to(out[0], out.shape))

    @pytest.mark.parametrize("kind", STRUCTURED + ["gaussian"])
    def test_deterministic(self, kind):
        a = synthesize_noise(NoiseSpec(kind, 1e-3), reference(), np.random.default_rng(9))
        b = synthesize_noise(NoiseSpec(kind, 1e-3), reference(), np.random.default_rng(9))
        assert np.array_equal(a, b)


class TestPatterns:
    def test_unit_coordinates(self):
        assert np.array_equal(unit_coordinates(4), [0.0, 0.25, 0.5, 0.75])

    def test_fade_endpoints(self):
        assert fade(0.0) == 0.0 and fade(1.0) == 1.0 and fade(0.5) == 0.5

    def test_fade_polynomial(self):
        u = np.linspace(0, 1, 11)
        np.testing.assert_allclose(fade(u), 6 * u**5 - 15 * u**4 + 10 * u**3, atol=1e-15)

    def test_perlin_zero_at_lattice_points(self):
        gradients = np.random.default_rng(0).uniform(-1, 1, 9)
        lattice = np.arange(9) / 8
        assert np.all(perlin_raw(lattice, gradients) == 0.0)

    def test_perlin_continuous_across_cells(self):
        gradients = np.random.default_rng(1).uniform(-1, 1, 5)
        for i in range(1, 4):
            s = i / 4
            left, right = perlin_raw(np.array([s - 1e-9, s + 1e-9]), gradients)
            assert abs(left - right) < 1e-8

    def test_perlin_cell_count_capped(self):
        # C = min(cells, L - 1): with L = 5 only 4 cells, so 5 gradients are drawn
        out = perlin_pattern(5, 32, np.random.default_rng(2))
        gradients = np.random.default_rng(2).uniform(-1, 1, 5)
        assert np.array_equal(out, perlin_raw(np.arange(5) / 5, gradients))
        assert np.count_nonzero(out) == 4

    @pytest.mark.parametrize("length", [2, 3, 17, 33, 64])
    def test_short_perlin_not_degenerate(self, length):
        assert np.max(np.abs(perlin_pattern(length, 32, np.random.default_rng(length)))) > 0

    def test_multi_sine_is_sum_of_modes(self):
        rng = np.random.default_rng(3)
        a, b, phase = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2), rng.uniform(0, 2 * np.pi, 2)
        s = unit_coordinates(50)
        expected = sum(
            a[k] * np.sin(2 * np.pi * (k + 1) * s + phase[k]) + b[k] * np.cos(2 * np.pi * (k + 1) * s + phase[k])
            for k in range(2)
        )
        np.testing.assert_allclose(multi_sine_pattern(50, 2, np.random.default_rng(3)), expected, atol=1e-13)

    def test_random_walk_is_centered_cumsum(self):
        steps = np.random.default_rng(4).uniform(-1, 1, 20)
        walk = np.cumsum(steps)
        np.testing.assert_allclose(random_walk_pattern(20, np.random.default_rng(4)), walk - walk.mean())
