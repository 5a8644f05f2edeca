"""Acoustic attributes derived from a decomposition.

Band analysis uses zero-phase FFT-domain filters with raised-cosine
crossovers on a log-frequency axis. Adjacent bands are power complementary,
so band energies of any signal add up to its full-band energy; the lowest
band of a bank extends down to DC and the highest up to Nyquist.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.fft import next_fast_len

from ._signal import SampledSignal
from ._validation import check_signal
from .deconv import octave_smoothed_power
from .errors import ConfigurationError, DegenerateInputError, DetectionError, InsufficientDataError, RangeError

DB_CAP = 99.0
LEVEL_FLOOR_DB = -300.0
DIRECT_WINDOW_MS = 2.5
PRE_PEAK_MS = 0.5
# peak power over mean power, dB, below which no direct sound is assumed
MIN_CREST_DB = 10.0
RT_RANGES = {"T20": (-5.0, -25.0), "T30": (-5.0, -35.0)}


@dataclass(frozen=True)
class Band:
    label: str
    center_hz: float
    lower_hz: float
    upper_hz: float
    transition_octaves: float
    open_low: bool = False
    open_high: bool = False

    def power_weights(self, freqs_hz) -> np.ndarray:
        f = np.asarray(freqs_hz, dtype=float)
        lower = np.ones_like(f) if self.open_low else _smooth_step(f, self.lower_hz, self.transition_octaves)
        upper = np.zeros_like(f) if self.open_high else _smooth_step(f, self.upper_hz, self.transition_octaves)
        return np.clip(lower - upper, 0.0, 1.0)


def _smooth_step(f, edge, width):
    """0 below ``edge * 2**(-width/2)``, 1 above ``edge * 2**(width/2)``,
    sin^2 ramp on log2 frequency in between."""
    with np.errstate(divide="ignore"):
        u = np.log2(np.where(f > 0, f, 0.0) / edge) / width + 0.5
    u = np.clip(np.nan_to_num(u, neginf=0.0), 0.0, 1.0)
    return np.sin(0.5 * np.pi * u) ** 2


@dataclass(frozen=True)
class BandSpec:
    kind: Literal["octave", "third_octave"] = "octave"
    f_min_hz: float = 125.0
    f_max_hz: float = 8000.0

    @property
    def octaves_per_band(self) -> float:
        return 1.0 if self.kind == "octave" else 1.0 / 3.0

    def validate(self, sample_rate):
        if self.kind not in ("octave", "third_octave"):
            raise ConfigurationError(f"unknown band kind {self.kind!r}")
        if not 0 < self.f_min_hz < self.f_max_hz <= sample_rate / 2:
            raise ConfigurationError(
                f"need 0 < f_min_hz < f_max_hz <= Nyquist ({sample_rate / 2}); "
                f"got {self.f_min_hz}, {self.f_max_hz}"
            )
        return self

    def bands(self, sample_rate) -> list[Band]:
        """Bands with nominal centres ``1000 * 2**(n * b)`` inside
        ``[f_min_hz, f_max_hz]``; edges at ``centre * 2**(+-b/2)``."""
        self.validate(sample_rate)
        b = self.octaves_per_band
        lo = int(np.ceil(np.log2(self.f_min_hz / 1000.0) / b - 1e-9))
        hi = int(np.floor(np.log2(self.f_max_hz / 1000.0) / b + 1e-9))
        nyquist = sample_rate / 2
        out = []
        for n in range(lo, hi + 1):
            fc = 1000.0 * 2.0 ** (n * b)
            if fc * 2.0 ** (b / 4) >= nyquist:
                break
            out.append([f"{fc:.4g}", fc, fc * 2.0 ** (-b / 2), fc * 2.0 ** (b / 2)])
        if not out:
            raise ConfigurationError("no band centre falls inside the requested range")
        return [
            Band(label, fc, fl, fu, b / 2, open_low=(i == 0), open_high=(i == len(out) - 1))
            for i, (label, fc, fl, fu) in enumerate(out)
        ]


@dataclass(eq=False)
class DecayCurve:
    times_s: np.ndarray
    level_db: np.ndarray
    band_label: str = "full"


@dataclass(frozen=True)
class DirectIndirect:
    direct_energy: float
    indirect_energy: float
    drr_db: float
    peak_index: int


@dataclass(eq=False)
class AcousticReport:
    freqs_hz: np.ndarray
    lti_magnitude_db: np.ndarray
    band_labels: list
    band_snr_db: dict | None
    decay_curves: list
    rt_seconds: dict
    drr_db: float
    reverberation_radius_m: float | None = None
    placement_ok: bool | None = None
    source_distance_m: float | None = None
    notes: dict = field(default_factory=dict)


def _cap(value, cap=DB_CAP):
    return float(np.clip(value, -cap, cap))


def freq_response(ir, smoothing_octaves: float = 0.0, sample_rate: int | None = None, n_fft: int | None = None):
    """``(freqs_hz, magnitude_db)`` of the one-sided DFT.

    With ``smoothing_octaves > 0`` the power spectrum is averaged over a
    window of that width on a log-frequency axis before conversion to dB.
    """
    ir = check_signal(ir, sample_rate, name="ir")
    n = n_fft or len(ir)
    power = np.abs(np.fft.rfft(ir.samples, n)) ** 2
    if smoothing_octaves > 0:
        power = octave_smoothed_power(power, smoothing_octaves)
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(power)
    return np.fft.rfftfreq(n, 1.0 / ir.sample_rate_hz), db


def band_filter(ir, band: Band, sample_rate: int | None = None) -> np.ndarray:
    """Zero-phase band-pass output, same length as ``ir``.

    Filtering runs on a buffer padded to at least twice the input so the
    non-causal part of the response wraps into zeros, not into the signal.
    """
    ir = check_signal(ir, sample_rate, name="ir")
    n = next_fast_len(2 * len(ir))
    X = np.fft.rfft(ir.samples, n)
    w = band.power_weights(np.fft.rfftfreq(n, 1.0 / ir.sample_rate_hz))
    return np.fft.irfft(X * np.sqrt(w), n)[:len(ir)]


def band_energies(ir, bands, sample_rate: int | None = None) -> np.ndarray:
    """Energy of each band output over the full padded buffer (Parseval)."""
    ir = check_signal(ir, sample_rate, name="ir")
    n = next_fast_len(2 * len(ir))
    X = np.fft.rfft(ir.samples, n)
    f = np.fft.rfftfreq(n, 1.0 / ir.sample_rate_hz)
    # one-sided bins other than DC (and Nyquist for even n) count twice
    dup = np.full(f.shape, 2.0)
    dup[0] = 1.0
    if n % 2 == 0:
        dup[-1] = 1.0
    return np.array([np.sum(dup * band.power_weights(f) * np.abs(X) ** 2) / n for band in bands])


def schroeder_decay(ir, band: Band | None = None, sample_rate: int | None = None) -> DecayCurve:
    """Backward-integrated energy in dB re the total, one value per sample."""
    ir = check_signal(ir, sample_rate, name="ir")
    h = ir.samples if band is None else band_filter(ir, band)
    energy = np.cumsum((h**2)[::-1])[::-1]
    if not energy[0] > 0:
        raise DegenerateInputError("impulse response has zero energy")
    with np.errstate(divide="ignore"):
        level = 10.0 * np.log10(energy / energy[0])
    times = np.arange(len(h)) / ir.sample_rate_hz
    return DecayCurve(times, level, "full" if band is None else band.label)


def estimate_rt(decay: DecayCurve, method: Literal["T20", "T30"] = "T30") -> float:
    """Least-squares line over the method's level range, extrapolated to -60 dB."""
    if method not in RT_RANGES:
        raise ConfigurationError(f"unknown method {method!r}; use one of {sorted(RT_RANGES)}")
    top, bottom = RT_RANGES[method]
    level = np.asarray(decay.level_db, dtype=float)
    finite = level[np.isfinite(level)]
    achieved = float(-finite.min()) if finite.size else 0.0
    if not np.any(level <= bottom):
        raise RangeError(f"{method} needs the decay to reach {bottom} dB; it reaches {-achieved:.1f} dB", achieved)
    sel = (level <= top) & (level >= bottom)
    if np.count_nonzero(sel) < 2:
        raise RangeError(f"too few samples between {top} and {bottom} dB for {method}", achieved)
    slope, _ = np.polyfit(np.asarray(decay.times_s)[sel], level[sel], 1)
    if not slope < 0:
        raise RangeError("decay curve does not decrease over the fit range", achieved)
    return float(-60.0 / slope)


def split_direct_indirect(ir, direct_window_ms: float = DIRECT_WINDOW_MS,
                          sample_rate: int | None = None) -> DirectIndirect:
    """Direct sound is the energy in ``[peak - 0.5 ms, peak + direct_window_ms]``;
    everything else is indirect. DRR is capped at +/-99 dB."""
    ir = check_signal(ir, sample_rate, name="ir")
    h = ir.samples
    fs = ir.sample_rate_hz
    if direct_window_ms <= 0 or direct_window_ms / 1000.0 >= ir.duration_s:
        raise ConfigurationError("direct window must be positive and shorter than the IR")
    power = h**2
    mean_power = power.mean()
    peak = int(np.argmax(power))
    if not mean_power > 0 or power[peak] < mean_power * 10.0 ** (MIN_CREST_DB / 10.0):
        raise DetectionError("no direct-sound peak stands out from the response")
    start = max(0, peak - int(round(PRE_PEAK_MS * fs / 1000.0)))
    stop = min(len(h), peak + int(round(direct_window_ms * fs / 1000.0)) + 1)
    direct = float(np.sum(power[start:stop]))
    indirect = float(np.sum(power[:start]) + np.sum(power[stop:]))
    if indirect == 0:
        drr = DB_CAP
    else:
        drr = _cap(10.0 * np.log10(direct / indirect))
    return DirectIndirect(direct, indirect, drr, peak)


def band_snr(decomposition, bands: BandSpec | None = None) -> dict:
    """Per band ``10 log10(sum |LTI|^2 / sum RTV)`` with band power weights;
    zero RTV in a band reports +99 dB."""
    bands = bands or BandSpec()
    if decomposition.rtv_power_spectrum is None:
        raise InsufficientDataError("decomposition carries no RTV estimate")
    f = decomposition.freqs_hz
    lti = np.abs(decomposition.lti_spectrum) ** 2
    rtv = np.asarray(decomposition.rtv_power_spectrum)
    out = {}
    for band in bands.bands(decomposition.sample_rate_hz):
        w = band.power_weights(f)
        signal, noise = np.sum(w * lti), np.sum(w * rtv)
        if noise == 0:
            out[band.label] = DB_CAP
        elif signal == 0:
            out[band.label] = -DB_CAP
        else:
            out[band.label] = _cap(10.0 * np.log10(signal / noise))
    return out


def reverberation_radius(drr_db: float, source_distance_m: float) -> float:
    """Distance where direct and indirect levels match, assuming an
    inverse-square direct field over a distance-independent diffuse field."""
    if not np.isfinite(source_distance_m) or source_distance_m <= 0:
        raise ConfigurationError(f"source distance must be positive, got {source_distance_m!r}")
    if not np.isfinite(drr_db):
        raise ConfigurationError("DRR must be finite")
    return float(source_distance_m * 10.0 ** (drr_db / 20.0))


def placement_verdict(source_distance_m: float, reverberation_radius_m: float) -> bool:
    return bool(source_distance_m < reverberation_radius_m / 2.0)


def analyze(decomposition, bands: BandSpec | None = None, source_distance_m: float | None = None,
            direct_window_ms: float = DIRECT_WINDOW_MS, smoothing_octaves: float = 0.0) -> AcousticReport:
    """Assemble an :class:`AcousticReport` for a decomposition."""
    bands = bands or BandSpec()
    lti = decomposition.lti_ir
    band_list = bands.bands(lti.sample_rate_hz)
    freqs, mag = freq_response(lti, smoothing_octaves)

    snr = None if decomposition.rtv_power_spectrum is None else band_snr(decomposition, bands)
    curves = [schroeder_decay(lti)] + [schroeder_decay(lti, b) for b in band_list]
    rt = {}
    for curve in curves:
        rt[curve.band_label] = {}
        for method in RT_RANGES:
            try:
                rt[curve.band_label][method] = estimate_rt(curve, method)
            except RangeError:
                rt[curve.band_label][method] = None
    for curve in curves:
        curve.level_db = np.maximum(curve.level_db, LEVEL_FLOOR_DB)

    split = split_direct_indirect(lti, direct_window_ms)
    radius = placement = None
    notes = {"band_filter": "zero-phase FFT-domain, power-complementary raised-cosine crossovers",
             "direct_window_ms": direct_window_ms}
    if source_distance_m is not None:
        radius = reverberation_radius(split.drr_db, source_distance_m)
        placement = placement_verdict(source_distance_m, radius)
        notes["reverberation_radius_model"] = (
            "radius = distance * 10**(drr/20): inverse-square direct field, distance-independent diffuse field"
        )
    return AcousticReport(
        freqs, np.maximum(mag, LEVEL_FLOOR_DB), [b.label for b in band_list], snr, curves, rt,
        split.drr_db, radius, placement, source_distance_m, notes,
    )
