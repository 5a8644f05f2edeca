import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tspmeasure import (BandSpec, Decomposition, RoomIrSpec, SampledSignal, SimulatedChannel, analyze,
                        apply_channel, band_snr, decompose, estimate_rt, freq_response, placement_verdict,
                        recover_channels, reverberation_radius, schroeder_decay, split_direct_indirect,
                        synth_room_ir)
from tspmeasure.acoustics import DB_CAP, DecayCurve, band_energies, band_filter
from tspmeasure.errors import ConfigurationError, DegenerateInputError, DetectionError, RangeError

from conftest import FS


def tau_ir(t60, seed, length_s=None, fs=FS):
    """White noise under an exp(-t/tau) envelope with tau set by t60."""
    tau = t60 / (3 * np.log(10))
    n = int((length_s or 1.5 * t60 + 0.2) * fs)
    t = np.arange(n) / fs
    return SampledSignal(np.random.default_rng(seed).standard_normal(n) * np.exp(-t / tau), fs)


def flat_decomposition(n=4096, rtv_db=-30.0):
    lti = np.zeros(n)
    lti[0] = 1.0
    spectrum = np.fft.rfft(lti)
    rtv = np.full(spectrum.shape, 10 ** (rtv_db / 10))
    return Decomposition(SampledSignal(lti, FS), spectrum, rtv, np.zeros_like(rtv), {})


class TestFreqResponse:
    def test_impulse(self):
        _, db = freq_response(SampledSignal(np.eye(64)[0], FS))
        np.testing.assert_allclose(db, 0.0, atol=1e-12)

    def test_half_impulse(self):
        _, db = freq_response(SampledSignal(0.5 * np.eye(64)[0], FS))
        np.testing.assert_allclose(db, 20 * np.log10(0.5), atol=1e-12)

    def test_comb(self):
        freqs, db = freq_response(SampledSignal([1.0, 1.0], FS))
        assert db[0] == pytest.approx(20 * np.log10(2))
        assert freqs[-1] == FS / 2 and db[-1] == -np.inf

    def test_smoothing_preserves_flat(self):
        _, db = freq_response(SampledSignal(np.eye(256)[3], FS), smoothing_octaves=1 / 3)
        np.testing.assert_allclose(db, 0.0, atol=1e-9)


class TestSchroeder:
    def test_single_impulse(self):
        curve = schroeder_decay(SampledSignal(np.eye(100)[0], FS))
        assert curve.level_db[0] == 0.0
        assert np.all(curve.level_db[1:] == -np.inf)

    def test_two_impulses(self):
        k = 40
        h = np.zeros(100)
        h[0] = h[k] = 1.0
        level = schroeder_decay(SampledSignal(h, FS)).level_db
        np.testing.assert_allclose(level[1:k + 1], 10 * np.log10(0.5))
        assert np.all(level[k + 1:] == -np.inf)

    def test_zero_energy(self):
        with pytest.raises(DegenerateInputError):
            schroeder_decay(SampledSignal(np.zeros(10), FS))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**6), n=st.integers(512, 3000))
    def test_non_increasing(self, seed, n):
        h = SampledSignal(np.random.default_rng(seed).standard_normal(n), FS)
        for curve in (schroeder_decay(h), schroeder_decay(h, BandSpec().bands(FS)[2])):
            assert np.all(np.diff(curve.level_db) <= 1e-12)

    def test_t60_from_tau_ir(self):
        estimates = [estimate_rt(schroeder_decay(tau_ir(0.5, seed)), "T30") for seed in range(20)]
        assert np.median(estimates) == pytest.approx(0.5, rel=0.05)


class TestEstimateRT:
    def test_exact_line(self):
        t = np.arange(0, 1.0, 1 / FS)
        curve = DecayCurve(t, -60 * t / 0.3)
        for method in ("T20", "T30"):
            assert estimate_rt(curve, method) == pytest.approx(0.3, rel=0.01)

    def test_smooth_exponential_ir(self):
        t60 = 0.3
        t = np.arange(int(1.0 * FS)) / FS
        h = SampledSignal(np.exp(-t / (t60 / (3 * np.log(10)))), FS)
        assert estimate_rt(schroeder_decay(h), "T30") == pytest.approx(t60, rel=0.01)

    def test_floor_range_error(self):
        t = np.arange(0, 1.0, 1 / FS)
        curve = DecayCurve(t, np.maximum(-60 * t / 0.3, -20.0))
        with pytest.raises(RangeError) as info:
            estimate_rt(curve, "T30")
        assert info.value.achieved_range_db == pytest.approx(20.0, abs=0.1)

    def test_unknown_method(self):
        with pytest.raises(ConfigurationError):
            estimate_rt(DecayCurve(np.arange(3.0), np.zeros(3)), "T60")

    def test_band_decay(self):
        h = tau_ir(0.4, 1)
        band = BandSpec().bands(FS)[3]
        assert estimate_rt(schroeder_decay(h, band), "T20") == pytest.approx(0.4, rel=0.1)


class TestDirectIndirect:
    def test_lone_impulse(self):
        r = split_direct_indirect(SampledSignal(np.eye(4410)[100], FS))
        assert r.indirect_energy == 0 and r.drr_db == DB_CAP

    @pytest.mark.parametrize("a,b", [(1.0, 0.5), (1.0, 0.1), (0.8, 0.7)])
    def test_two_spikes(self, a, b):
        h = np.zeros(4410)
        h[0], h[int(0.02 * FS)] = a, b
        assert split_direct_indirect(SampledSignal(h, FS)).drr_db == pytest.approx(20 * np.log10(a / b))

    def test_distance_law(self):
        pair = [synth_room_ir(RoomIrSpec(direct_gain=0.3 / d, seed=2), FS) for d in (0.3, 0.6)]
        diff = split_direct_indirect(pair[0]).drr_db - split_direct_indirect(pair[1]).drr_db
        assert diff == pytest.approx(6.02, abs=0.1)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**6), peak=st.integers(0, 999))
    def test_energy_conservation(self, seed, peak):
        h = 0.05 * np.random.default_rng(seed).standard_normal(1000)
        h[peak] = 1.0
        r = split_direct_indirect(SampledSignal(h, FS))
        assert r.direct_energy + r.indirect_energy == pytest.approx(np.sum(h**2), rel=1e-12)

    @pytest.mark.parametrize("h", [np.zeros(1000), np.ones(1000)])
    def test_no_peak(self, h):
        with pytest.raises(DetectionError):
            split_direct_indirect(SampledSignal(h, FS))

    def test_window_longer_than_ir(self):
        with pytest.raises(ConfigurationError):
            split_direct_indirect(SampledSignal(np.eye(50)[0], FS))


class TestBands:
    @pytest.mark.parametrize("kind", ["octave", "third_octave"])
    def test_partition_of_energy(self, kind):
        h = SampledSignal(np.random.default_rng(0).standard_normal(3000), FS)
        bands = BandSpec(kind).bands(FS)
        assert np.sum(band_energies(h, bands)) == pytest.approx(np.sum(h.samples**2), rel=0.01)

    def test_octave_labels(self):
        assert [b.label for b in BandSpec().bands(FS)] == ["125", "250", "500", "1000", "2000", "4000", "8000"]

    def test_band_filter_zero_phase(self):
        h = np.eye(2048)[1024]
        out = band_filter(SampledSignal(h, FS), BandSpec().bands(FS)[3])
        assert int(np.argmax(np.abs(out))) == 1024
        np.testing.assert_allclose(out[1024 - 300:1024], out[1025:1025 + 300][::-1], atol=1e-12)

    @pytest.mark.parametrize("spec", [BandSpec(f_min_hz=0.0), BandSpec(f_max_hz=30000.0),
                                      BandSpec("half_octave"), BandSpec(f_min_hz=900, f_max_hz=950)])
    def test_invalid(self, spec):
        with pytest.raises(ConfigurationError):
            spec.bands(FS)


class TestBandSNR:
    def test_zero_rtv(self):
        snr = band_snr(flat_decomposition(rtv_db=-np.inf))
        assert set(snr.values()) == {DB_CAP}

    def test_flat(self):
        for v in band_snr(flat_decomposition(rtv_db=-30.0)).values():
            assert v == pytest.approx(30.0, abs=1e-9)

    def test_band_shaped_noise(self, small_stimulus):
        st_ = small_stimulus
        fir = 0.5 * np.eye(64)[5]
        clean = apply_channel(st_.waveform, SimulatedChannel(fir)).samples
        bands = BandSpec().bands(FS)
        n = len(clean)
        f = np.fft.rfftfreq(n, 1 / FS)
        gains = np.array([0.3, 1.0, 3.0, 0.5, 2.0, 0.1, 1.0]) * 3e-3
        shape = np.sqrt(sum(g**2 * b.power_weights(f) for g, b in zip(gains, bands)))
        noise = np.fft.irfft(np.fft.rfft(np.random.default_rng(7).standard_normal(n)) * shape, n)
        dec = decompose(recover_channels(st_, SampledSignal(clean + noise, FS)))
        measured = band_snr(dec)
        # truth: per-band power ratio in the analysed part of the recording
        seg = slice(st_.super_period, st_.repetitions * st_.super_period)
        fs_ = np.fft.rfftfreq(seg.stop - seg.start, 1 / FS)
        S, N = (np.abs(np.fft.rfft(v[seg])) ** 2 for v in (clean, noise))
        for b in bands:
            w = b.power_weights(fs_)
            truth = 10 * np.log10(np.sum(w * S) / np.sum(w * N))
            assert measured[b.label] == pytest.approx(truth, abs=2.0)


class TestRadius:
    def test_examples(self):
        assert reverberation_radius(0.0, 1.0) == 1.0
        assert reverberation_radius(20 * np.log10(2), 0.3) == pytest.approx(0.6)

    @pytest.mark.parametrize("d", [0.0, -1.0, np.inf])
    def test_bad_distance(self, d):
        with pytest.raises(ConfigurationError):
            reverberation_radius(0.0, d)

    def test_distance_independent(self):
        radii = []
        for d in (0.3, 0.6, 1.2):
            h = synth_room_ir(RoomIrSpec(direct_gain=0.3 / d, tail_gain=0.02, seed=5), FS)
            radii.append(reverberation_radius(split_direct_indirect(h).drr_db, d))
        assert max(radii) / min(radii) < 1.05

    def test_verdict(self):
        assert placement_verdict(0.3, 0.8) is True
        assert placement_verdict(0.3, 0.6) is False
        assert placement_verdict(0.6, 0.8) is False

    @settings(max_examples=15, deadline=None)
    @given(g=st.floats(1e-3, 1e3))
    def test_scale_law(self, g):
        h = synth_room_ir(RoomIrSpec(t60_s=0.3, length_s=0.6, seed=1), FS).samples
        reports = []
        for scale in (1.0, g):
            lti = SampledSignal(scale * h, FS)
            dec = Decomposition(lti, np.fft.rfft(lti.samples), None, None, {})
            reports.append(analyze(dec, source_distance_m=0.3))
        a, b = reports
        assert b.drr_db == pytest.approx(a.drr_db, abs=1e-9)
        assert b.reverberation_radius_m == pytest.approx(a.reverberation_radius_m, rel=1e-9)
        assert b.placement_ok == a.placement_ok
        assert b.rt_seconds["full"]["T30"] == pytest.approx(a.rt_seconds["full"]["T30"], rel=1e-6)


class TestAnalyze:
    def test_report(self, small_stimulus):
        h = synth_room_ir(RoomIrSpec(t60_s=0.05, length_s=0.04, tail_gain=0.05, seed=0), FS).samples
        ch = SimulatedChannel(h, noise_rms=1e-4, seed=1)
        dec = decompose(recover_channels(small_stimulus, apply_channel(small_stimulus.waveform, ch)))
        rep = analyze(dec, source_distance_m=0.3)
        assert rep.band_labels == list(rep.band_snr_db)
        assert rep.reverberation_radius_m is not None and isinstance(rep.placement_ok, bool)
        assert all(np.all(np.diff(c.level_db) <= 1e-12) for c in rep.decay_curves)
        assert all(v is None or v > 0 for d in rep.rt_seconds.values() for v in d.values())
        assert rep.rt_seconds["full"]["T30"] == pytest.approx(0.05, rel=0.1)

    def test_without_distance(self):
        rep = analyze(flat_decomposition())
        assert rep.reverberation_radius_m is None and rep.placement_ok is None
