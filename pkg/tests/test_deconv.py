import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tspmeasure import (CapricepSpec, SafeguardConfig, SampledSignal, gen_unit_capricep, measure_ir_circular,
                        measure_ir_linear, safeguard_spectrum)
from tspmeasure.errors import ConfigurationError, DegenerateInputError, InsufficientDataError

from conftest import FS, rel_l2_db


def per_bin_smoothed_floor(X, floor_db, bandwidth):
    """One bin at a time, straight from the window definition."""
    mag2 = np.abs(X) ** 2
    n = len(X)
    a = 2.0 ** (-bandwidth / 2)
    floor = np.empty(n)
    for k in range(n):
        lo = int(np.floor(k * a))
        hi = 1 if k == 0 else int(np.ceil(k / a))
        hi = min(hi, n - 1)
        floor[k] = np.sqrt(np.mean(mag2[lo:hi + 1])) * 10 ** (floor_db / 20)
        if floor[k] == 0:
            floor[k] = np.abs(X).max() * 10 ** (floor_db / 20)
    return floor


def speech_like_spectrum(n=2049, seed=0):
    rng = np.random.default_rng(seed)
    f = np.arange(n) / (n - 1) * 22050
    envelope = 1.0 / (1.0 + (f / 500.0) ** 2) + 0.3 * np.exp(-0.5 * ((f - 1500) / 200) ** 2)
    X = envelope * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    X[rng.random(n) < 0.05] *= 1e-5
    return X


class TestSafeguard:
    @pytest.mark.parametrize("cfg", [SafeguardConfig(), SafeguardConfig(-20.0, "smoothed_magnitude", 1.0)])
    def test_unit_magnitude_unchanged(self, cfg):
        X = np.exp(1j * np.random.default_rng(0).uniform(-np.pi, np.pi, 513))
        np.testing.assert_array_equal(safeguard_spectrum(X, cfg), X)

    def test_zero_bins_flat(self):
        out = safeguard_spectrum(np.array([1, 0, 1, 0], complex), SafeguardConfig(-20.0))
        np.testing.assert_allclose(out, [1, 0.1, 1, 0.1], atol=1e-15)

    def test_phase_kept(self):
        X = np.array([1.0, 1e-4 * 1j, -1e-5])
        out = safeguard_spectrum(X, SafeguardConfig(-20.0))
        np.testing.assert_allclose(out, [1.0, 0.1j, -0.1], atol=1e-15)

    def test_smoothed_matches_per_bin_oracle(self):
        X = speech_like_spectrum()
        cfg = SafeguardConfig(-60.0, "smoothed_magnitude", 1 / 3)
        floor = per_bin_smoothed_floor(X, -60.0, 1 / 3)
        expected_low = np.abs(X) < floor
        out = safeguard_spectrum(X, cfg)
        changed = out != X
        assert expected_low.any()
        np.testing.assert_array_equal(changed, expected_low)
        np.testing.assert_allclose(np.abs(out[changed]), floor[changed], rtol=1e-8)

    def test_all_zero(self):
        with pytest.raises(DegenerateInputError):
            safeguard_spectrum(np.zeros(8))

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            SafeguardConfig(0.0)
        with pytest.raises(ConfigurationError):
            SafeguardConfig(shaping="wiener")

    def test_monotone_convergence(self):
        X = speech_like_spectrum(seed=3)
        Y = X * np.exp(1j * np.arange(len(X)) * 0.01)
        exact = Y / X
        errs = [np.max(np.abs(Y / safeguard_spectrum(X, SafeguardConfig(db)) - exact)) for db in (-40, -80, -160, -300)]
        assert all(a >= b for a, b in zip(errs, errs[1:]))
        assert errs[-1] < 1e-12

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**6), floor_db=st.floats(-80, -5))
    def test_noise_in_floored_bins_is_bounded(self, seed, floor_db):
        rng = np.random.default_rng(seed)
        X = speech_like_spectrum(257, seed)
        H = rng.standard_normal(257) + 1j * rng.standard_normal(257)
        N = 0.01 * (rng.standard_normal(257) + 1j * rng.standard_normal(257))
        cfg = SafeguardConfig(floor_db)
        Xs = safeguard_spectrum(X, cfg)
        floored = Xs != X
        delta = (X * H + N) / Xs - (X * H) / Xs
        floor = np.abs(X).max() * 10 ** (floor_db / 20)
        assert np.all(np.abs(delta[floored]) ** 2 <= np.abs(N[floored]) ** 2 / floor**2 * (1 + 1e-9))


@pytest.fixture(scope="module")
def tsp():
    return gen_unit_capricep(CapricepSpec.for_length(4096, seed=4), FS)


class TestLinear:
    def test_identity(self, tsp):
        h = measure_ir_linear(tsp, tsp, ir_length=64).samples
        assert abs(h[0] - 1) < 1e-10 and np.max(np.abs(h[1:])) < 1e-10

    def test_delay(self, tsp):
        y = np.concatenate([np.zeros(100), tsp.samples])
        h = measure_ir_linear(tsp, SampledSignal(y, FS)).samples
        assert len(h) == 101
        assert abs(h[100] - 1) < 1e-10 and np.max(np.abs(h[:100])) < 1e-10

    def test_fir_brute_force(self, tsp):
        rng = np.random.default_rng(8)
        fir = rng.standard_normal(256)
        x = tsp.samples
        y = np.zeros(len(x) + 255)
        for k in range(256):
            y[k:k + len(x)] += fir[k] * x
        h = measure_ir_linear(tsp, SampledSignal(y, FS), ir_length=256).samples
        assert rel_l2_db(h, fir) < -100

    def test_short_response(self, tsp):
        with pytest.raises(InsufficientDataError):
            measure_ir_linear(tsp, SampledSignal(tsp.samples[:-1], FS))


class TestCircular:
    def test_identity(self, tsp):
        h = measure_ir_circular(tsp, tsp).samples
        np.testing.assert_allclose(h, np.eye(len(tsp))[0], atol=1e-10)

    def test_periodic_fir_oracle(self, tsp):
        rng = np.random.default_rng(9)
        fir = rng.standard_normal(300)
        x = tsp.samples
        n = len(x)
        # steady-state period of the periodic response, by modular indexing
        y = np.zeros(n)
        for k in range(300):
            y += fir[k] * x[(np.arange(n) - k) % n]
        h = measure_ir_circular(tsp, SampledSignal(y, FS)).samples
        truth = np.zeros(n)
        truth[:300] = fir
        assert rel_l2_db(h, truth) < -100

    def test_segment_location_invariance(self, tsp):
        rng = np.random.default_rng(10)
        fir = rng.standard_normal(500)
        n = len(tsp)
        y = np.convolve(np.tile(tsp.samples, 4), fir)
        h2 = measure_ir_circular(tsp, SampledSignal(y[n:2 * n], FS)).samples
        h3 = measure_ir_circular(tsp, SampledSignal(y[2 * n:3 * n], FS)).samples
        assert np.linalg.norm(h2 - h3) / np.linalg.norm(h2) < 1e-10

    def test_length_mismatch(self, tsp):
        with pytest.raises(ConfigurationError):
            measure_ir_circular(tsp, SampledSignal(tsp.samples[:-1], FS))
