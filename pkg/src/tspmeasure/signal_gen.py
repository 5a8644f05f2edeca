"""Unit test-signal generators.

CAPRICEP units are all-pass signals whose group delay is a signed sum of
Gaussian bumps placed at random frequencies. Swept sines, maximum length
sequences and a calibration tone cover the classical excitations, and
:func:`gen_field_test_signal` strings a structured signal, silence and the
calibration tone together for recordings made outside the lab.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np
from scipy.signal import max_len_seq

from ._signal import SampledSignal
from ._validation import check_power_of_two, check_same_rate
from .errors import ConfigurationError

SILENCE_S = 3.0
TAPER_FRACTION = 0.01

# Feedback taps per register length (first entry of the Newwave Instruments
# table, as used by scipy). Fixed here so sequences never depend on the
# installed scipy's defaults.
MLS_TAPS = {
    2: [1], 3: [2], 4: [3], 5: [3], 6: [5], 7: [6], 8: [7, 6, 1],
    9: [5], 10: [7], 11: [9], 12: [11, 10, 4], 13: [12, 11, 8],
    14: [13, 12, 2], 15: [14], 16: [15, 13, 4], 17: [14], 18: [11],
    19: [18, 17, 14], 20: [17], 21: [19], 22: [21], 23: [18],
    24: [23, 22, 17],
}


@dataclass(frozen=True)
class CapricepSpec:
    """Parameters of one CAPRICEP unit.

    ``gd_sigma_samples`` is the bump width on the frequency axis, counted in
    DFT bins of ``fft_length``; ``gd_magnitude_samples`` is the bump height
    in samples of delay.
    """

    fft_length: int = 65536
    n_sections: int = 200
    gd_sigma_samples: float = 100.0
    gd_magnitude_samples: float = 600.0
    seed: int = 0
    effective_length: int = 8192

    def validate(self):
        check_power_of_two(self.fft_length, "fft_length")
        if self.fft_length < 4:
            raise ConfigurationError("fft_length must be at least 4")
        if int(self.n_sections) != self.n_sections or self.n_sections < 1:
            raise ConfigurationError(f"n_sections must be an integer >= 1, got {self.n_sections!r}")
        if not self.gd_sigma_samples > 0:
            raise ConfigurationError("gd_sigma_samples must be positive")
        if not np.isfinite(self.gd_magnitude_samples):
            raise ConfigurationError("gd_magnitude_samples must be finite")
        if int(self.effective_length) != self.effective_length or not 1 <= self.effective_length <= self.fft_length:
            raise ConfigurationError(
                f"effective_length must be in [1, fft_length={self.fft_length}], got {self.effective_length!r}"
            )
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def for_length(cls, effective_length: int, seed: int = 0) -> "CapricepSpec":
        """Defaults rescaled to another unit length.

        Keeps the default proportions: FFT eight times the unit length, bump
        width a fixed fraction of the band, peak delay a fixed fraction of
        the unit length.
        """
        if int(effective_length) != effective_length or effective_length < 1:
            raise ConfigurationError("effective_length must be a positive integer")
        ref = cls()
        fft_length = 1 << int(np.ceil(np.log2(max(4, 8 * effective_length))))
        return cls(
            fft_length=fft_length,
            n_sections=ref.n_sections,
            gd_sigma_samples=ref.gd_sigma_samples * fft_length / ref.fft_length,
            gd_magnitude_samples=ref.gd_magnitude_samples * effective_length / ref.effective_length,
            seed=seed,
            effective_length=int(effective_length),
        )


@dataclass(frozen=True)
class SweptSineSpec:
    f_start_hz: float
    f_end_hz: float
    duration_s: float
    sweep_law: Literal["logarithmic", "linear"] = "logarithmic"

    def validate(self, sample_rate):
        if self.sweep_law not in ("logarithmic", "linear"):
            raise ConfigurationError(f"unknown sweep_law {self.sweep_law!r}")
        if not self.duration_s > 0:
            raise ConfigurationError("duration_s must be positive")
        if not 0 < self.f_start_hz <= self.f_end_hz:
            raise ConfigurationError("need 0 < f_start_hz <= f_end_hz")
        if self.f_end_hz >= sample_rate / 2:
            raise ConfigurationError(f"f_end_hz={self.f_end_hz} must be below Nyquist ({sample_rate / 2})")
        return self


def capricep_group_delay(spec: CapricepSpec) -> np.ndarray:
    """Group delay in samples at the ``fft_length // 2 + 1`` rfft bins."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    half = spec.fft_length // 2
    centers = rng.uniform(0.0, half, spec.n_sections)
    polarity = np.where(rng.random(spec.n_sections) < 0.5, -1.0, 1.0)
    k = np.arange(half + 1, dtype=float)
    gd = np.zeros(half + 1)
    # chunked to keep the (bins x sections) temporary small
    for start in range(0, spec.n_sections, 32):
        c = centers[start:start + 32]
        s = polarity[start:start + 32]
        gd += (s * np.exp(-0.5 * ((k[:, None] - c) / spec.gd_sigma_samples) ** 2)).sum(axis=1)
    return spec.gd_magnitude_samples * gd


def capricep_spectrum(spec: CapricepSpec) -> np.ndarray:
    """Unit-magnitude rfft spectrum of the untruncated CAPRICEP."""
    gd = capricep_group_delay(spec)
    n = spec.fft_length
    half = n // 2
    # phase = -2*pi/N * integral of group delay over bins (trapezoid rule)
    phase = np.empty(half + 1)
    phase[0] = 0.0
    phase[1:] = -2.0 * np.pi / n * np.cumsum(0.5 * (gd[1:] + gd[:-1]))
    # A real signal needs the Nyquist bin real: bend the phase by a
    # sub-sample linear term so phase[half] lands on a multiple of pi.
    residual = phase[-1] - np.pi * np.round(phase[-1] / np.pi)
    phase -= residual * np.arange(half + 1) / half
    spectrum = np.exp(1j * phase)
    spectrum[-1] = spectrum[-1].real
    spectrum[0] = 1.0
    return spectrum


def capricep_prototype(spec: CapricepSpec) -> np.ndarray:
    """Full-length (untruncated, unnormalized) time signal, circularly
    rotated so its energy centroid sits at ``fft_length // 2``."""
    n = spec.fft_length
    x = np.fft.irfft(capricep_spectrum(spec), n)
    energy = x**2
    phasor = np.sum(energy * np.exp(2j * np.pi * np.arange(n) / n))
    centroid = np.angle(phasor) / (2 * np.pi) * n
    return np.roll(x, n // 2 - int(np.round(centroid)))


def _edge_taper(length, taper):
    w = np.ones(length)
    if taper > 0:
        ramp = 0.5 - 0.5 * np.cos(np.pi * (np.arange(taper) + 0.5) / taper)
        w[:taper] = ramp
        w[length - taper:] = ramp[::-1]
    return w


def gen_unit_capricep(spec: CapricepSpec, sample_rate: int) -> SampledSignal:
    """Generate one CAPRICEP unit truncated to ``spec.effective_length``.

    The annotation ``discarded_energy_fraction`` reports how much of the
    untruncated signal's energy the window and its tapers removed.
    """
    spec.validate()
    full = capricep_prototype(spec)
    n, length = spec.fft_length, spec.effective_length
    start = n // 2 - length // 2
    taper = int(round(TAPER_FRACTION * length)) if length >= 4 else 0
    unit = full[start:start + length] * _edge_taper(length, min(taper, length // 2))
    total = np.sum(full**2)
    discarded = float(max(0.0, 1.0 - np.sum(unit**2) / total))
    unit = unit / np.max(np.abs(unit))
    return SampledSignal(
        unit,
        sample_rate,
        {"kind": "capricep", "spec": spec.to_dict(), "discarded_energy_fraction": discarded},
    )


def gen_swept_sine(spec: SweptSineSpec, sample_rate: int) -> SampledSignal:
    spec.validate(sample_rate)
    n = int(round(spec.duration_s * sample_rate))
    if n < 1:
        raise ConfigurationError("sweep duration rounds to zero samples")
    t = np.arange(n) / sample_rate
    f1, f2, dur = spec.f_start_hz, spec.f_end_hz, spec.duration_s
    if f1 == f2:
        phase = 2 * np.pi * f1 * t
    elif spec.sweep_law == "logarithmic":
        rate = np.log(f2 / f1)
        phase = 2 * np.pi * f1 * dur / rate * np.expm1(t * rate / dur)
    else:
        phase = 2 * np.pi * (f1 * t + 0.5 * (f2 - f1) / dur * t**2)
    x = np.sin(phase)
    peak = np.max(np.abs(x))
    if peak > 0:
        x = x / peak
    return SampledSignal(x, sample_rate, {"kind": "swept_sine", "spec": asdict(spec)})


def gen_mls(order: int, sample_rate: int = 44100) -> SampledSignal:
    """+/-1 maximum length sequence of length ``2**order - 1``."""
    if int(order) != order or order not in MLS_TAPS:
        raise ConfigurationError(f"MLS order must be an integer in [2, 24], got {order!r}")
    bits, _ = max_len_seq(int(order), taps=MLS_TAPS[int(order)])
    return SampledSignal(2.0 * bits - 1.0, sample_rate, {"kind": "mls", "order": int(order)})


def gen_calibration_tone(freq_hz: float, rms_level_dbfs: float, duration_s: float,
                         sample_rate: int) -> SampledSignal:
    if not 0 < freq_hz < sample_rate / 2:
        raise ConfigurationError(f"freq_hz must lie in (0, {sample_rate / 2}), got {freq_hz!r}")
    if rms_level_dbfs > 0:
        raise ConfigurationError(f"rms_level_dbfs must be <= 0, got {rms_level_dbfs!r}")
    target = 10.0 ** (rms_level_dbfs / 20.0)
    if target * np.sqrt(2.0) > 1.0:
        raise ConfigurationError(f"a sine at {rms_level_dbfs} dBFS RMS would clip; use <= -3.02 dBFS")
    n = int(round(duration_s * sample_rate))
    if n < 1:
        raise ConfigurationError("tone duration rounds to zero samples")
    x = np.sin(2 * np.pi * freq_hz * np.arange(n) / sample_rate)
    rms = np.sqrt(np.mean(x**2))
    if rms == 0:
        raise ConfigurationError("tone has zero RMS at this frequency and sample rate")
    x *= target / rms
    return SampledSignal(
        x,
        sample_rate,
        {"kind": "calibration_tone", "freq_hz": float(freq_hz), "rms_level_dbfs": float(rms_level_dbfs)},
    )


def gen_field_test_signal(structured, calibration: SampledSignal) -> SampledSignal:
    """Structured waveform, 3 s of silence, then the calibration tone.

    Segment boundaries are stored in ``annotations["segments"]`` as
    ``[start, stop)`` sample indices.
    """
    waveform = structured.waveform
    rate = check_same_rate(waveform, calibration)
    n_silence = int(round(SILENCE_S * rate))
    parts = [waveform.samples, np.zeros(n_silence), calibration.samples]
    bounds = np.cumsum([0] + [len(p) for p in parts])
    names = ("structured", "silence", "calibration")
    segments = [
        {"name": name, "start": int(a), "stop": int(b)}
        for name, a, b in zip(names, bounds[:-1], bounds[1:])
    ]
    annotations = {"kind": "field_test_signal", "segments": segments}
    for key in ("freq_hz", "rms_level_dbfs"):
        if key in calibration.annotations:
            annotations[f"calibration_{key}"] = calibration.annotations[key]
    return SampledSignal(np.concatenate(parts), rate, annotations)
