"""Safeguarded frequency-domain deconvolution.

The transfer function is the ratio of output and input spectra. Before the
division, denominator bins whose magnitude falls below a floor are raised to
the floor (keeping their phase). The floor is either flat, relative to the
largest bin, or follows an octave-smoothed magnitude envelope of the input.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np

from ._signal import SampledSignal
from ._validation import check_same_rate, check_signal
from .errors import ConfigurationError, DegenerateInputError, InsufficientDataError


@dataclass(frozen=True)
class SafeguardConfig:
    relative_floor_db: float = -60.0
    shaping: Literal["flat", "smoothed_magnitude"] = "flat"
    smoothing_bandwidth_octaves: float = 1.0 / 3.0

    def __post_init__(self):
        if not self.relative_floor_db < 0:
            raise ConfigurationError(f"relative_floor_db must be negative, got {self.relative_floor_db!r}")
        if self.shaping not in ("flat", "smoothed_magnitude"):
            raise ConfigurationError(f"unknown shaping {self.shaping!r}")
        if not self.smoothing_bandwidth_octaves > 0:
            raise ConfigurationError("smoothing_bandwidth_octaves must be positive")

    def to_dict(self):
        return asdict(self)


def octave_smoothed_power(power, bandwidth_octaves):
    """Moving average of ``power`` over a log-frequency window.

    Bin ``k`` is averaged over bins ``floor(k * 2**-(b/2)) .. ceil(k * 2**(b/2))``
    (clipped to the array); bin 0 uses bins 0..1.
    """
    power = np.asarray(power, dtype=float)
    n = power.shape[0]
    k = np.arange(n, dtype=float)
    a = 2.0 ** (-bandwidth_octaves / 2.0)
    lo = np.floor(k * a).astype(int)
    hi = np.minimum(np.ceil(k / a).astype(int), n - 1)
    hi[0] = min(1, n - 1)
    csum = np.concatenate(([0.0], np.cumsum(power)))
    return (csum[hi + 1] - csum[lo]) / (hi - lo + 1)


def safeguard_floor(X, cfg: SafeguardConfig) -> np.ndarray:
    """Per-bin magnitude floor used by :func:`safeguard_spectrum`."""
    mag = np.abs(np.asarray(X))
    peak = mag.max()
    gain = 10.0 ** (cfg.relative_floor_db / 20.0)
    flat = np.full(mag.shape, peak * gain)
    if cfg.shaping == "flat":
        return flat
    envelope = np.sqrt(octave_smoothed_power(mag**2, cfg.smoothing_bandwidth_octaves)) * gain
    # a locally silent envelope would leave zeros in the denominator
    return np.where(envelope > 0, envelope, flat)


def safeguard_spectrum(X, cfg: SafeguardConfig | None = None) -> np.ndarray:
    """Raise bins below the floor to the floor magnitude, keeping the phase.

    ``X`` is a one-sided (rfft) spectrum; the smoothed floor treats its index
    as the frequency bin. Zero bins get phase 0.
    """
    cfg = cfg or SafeguardConfig()
    X = np.asarray(X, dtype=complex)
    if X.ndim != 1 or X.size == 0:
        raise ConfigurationError("spectrum must be a nonempty 1-D array")
    mag = np.abs(X)
    if not mag.max() > 0:
        raise DegenerateInputError("cannot safeguard an all-zero spectrum")
    floor = safeguard_floor(X, cfg)
    low = mag < floor
    out = X.copy()
    out[low] = floor[low] * np.exp(1j * np.angle(X[low]))
    return out


def _deconvolve(x, y, n, cfg):
    X = safeguard_spectrum(np.fft.rfft(x, n), cfg)
    return np.fft.irfft(np.fft.rfft(y, n) / X, n)


def measure_ir_linear(x, y, cfg: SafeguardConfig | None = None, ir_length: int | None = None,
                      sample_rate: int | None = None) -> SampledSignal:
    """Impulse response from a finite excitation and its full response.

    The DFT length is the next power of two covering both ``len(y)`` and
    ``len(x) + ir_length``, so the circular quotient equals the linear one.
    ``ir_length`` defaults to ``len(y) - len(x) + 1``.
    """
    x = check_signal(x, sample_rate, name="x")
    y = check_signal(y, x.sample_rate_hz, name="y")
    rate = check_same_rate(x, y)
    if len(y) < len(x):
        raise InsufficientDataError(f"response ({len(y)} samples) is shorter than the excitation ({len(x)})")
    if ir_length is None:
        ir_length = len(y) - len(x) + 1
    if ir_length < 1:
        raise ConfigurationError("ir_length must be >= 1")
    n = 1 << int(np.ceil(np.log2(max(len(x) + ir_length, len(y)))))
    h = _deconvolve(x.samples, y.samples, n, cfg)
    return SampledSignal(h[:ir_length], rate)


def measure_ir_circular(x_period, y_segment, cfg: SafeguardConfig | None = None,
                        sample_rate: int | None = None) -> SampledSignal:
    """Impulse response from one steady-state period of a periodic measurement."""
    x = check_signal(x_period, sample_rate, name="x_period")
    y = check_signal(y_segment, x.sample_rate_hz, name="y_segment")
    if len(x) != len(y):
        raise ConfigurationError(f"segment length {len(y)} differs from period length {len(x)}")
    return SampledSignal(_deconvolve(x.samples, y.samples, len(x), cfg), x.sample_rate_hz)
