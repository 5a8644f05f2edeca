"""Simulated measurement target used as ground truth.

``y = noise + drift_gain(t) * NL(fir * x)`` with a seeded white Gaussian
noise process, a memoryless nonlinearity and an optional slow sinusoidal
gain modulation.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.signal import convolve

from ._signal import SampledSignal
from ._validation import check_signal
from .errors import ConfigurationError

NONLINEARITIES = ("none", "cubic", "tanh")


@dataclass(frozen=True)
class Drift:
    gain_mod_depth: float
    gain_mod_period_s: float

    def __post_init__(self):
        if not 0 <= self.gain_mod_depth < 1:
            raise ConfigurationError("gain_mod_depth must lie in [0, 1)")
        if not self.gain_mod_period_s > 0:
            raise ConfigurationError("gain_mod_period_s must be positive")


@dataclass(frozen=True)
class SimulatedChannel:
    """``nonlinearity_param`` is ``c`` for ``cubic`` (y = x + c x^3) and the
    drive for ``tanh`` (y = tanh(drive x) / drive)."""

    fir: tuple
    nonlinearity: str = "none"
    nonlinearity_param: float = 0.0
    noise_rms: float = 0.0
    drift: Drift | None = None
    seed: int = 0

    def __post_init__(self):
        fir = np.asarray(self.fir, dtype=float).ravel()
        if fir.size == 0 or not np.all(np.isfinite(fir)):
            raise ConfigurationError("fir must be a nonempty finite sequence")
        object.__setattr__(self, "fir", tuple(fir.tolist()))
        if self.nonlinearity not in NONLINEARITIES:
            raise ConfigurationError(f"nonlinearity must be one of {NONLINEARITIES}, got {self.nonlinearity!r}")
        if self.nonlinearity == "tanh" and not self.nonlinearity_param > 0:
            raise ConfigurationError("tanh drive must be positive")
        if not self.noise_rms >= 0:
            raise ConfigurationError("noise_rms must be >= 0")
        if isinstance(self.drift, dict):
            object.__setattr__(self, "drift", Drift(**self.drift))

    def to_dict(self):
        d = asdict(self)
        d["fir"] = list(self.fir)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class RoomIrSpec:
    """Synthetic room: a direct impulse plus an exponentially decaying noise tail.

    The tail starts ``reflection_gap_s`` after the direct sound, so nothing
    but the direct impulse falls into a short direct-sound window.
    """

    direct_delay_s: float = 0.002
    direct_gain: float = 1.0
    t60_s: float = 0.5
    tail_gain: float = 0.1
    length_s: float = 1.0
    seed: int = 0
    reflection_gap_s: float = 0.003

    def validate(self):
        if not self.t60_s > 0:
            raise ConfigurationError(f"t60_s must be positive, got {self.t60_s!r}")
        if not self.length_s > 0:
            raise ConfigurationError("length_s must be positive")
        if self.direct_delay_s < 0 or self.reflection_gap_s < 0:
            raise ConfigurationError("delays must be >= 0")
        if self.direct_gain < 0 or self.tail_gain < 0:
            raise ConfigurationError("gains must be >= 0")
        return self


def synth_room_ir(spec: RoomIrSpec, sample_rate: int) -> SampledSignal:
    spec.validate()
    n = int(round(spec.length_s * sample_rate))
    d = int(round(spec.direct_delay_s * sample_rate))
    if d >= n:
        raise ConfigurationError("direct delay lies beyond the IR length")
    h = np.zeros(n)
    h[d] = spec.direct_gain
    onset = d + max(1, int(round(spec.reflection_gap_s * sample_rate)))
    if onset < n and spec.tail_gain > 0:
        rng = np.random.default_rng(spec.seed)
        t = np.arange(n - onset) / sample_rate
        # amplitude falls 60 dB (factor 1000) per t60
        h[onset:] = spec.tail_gain * rng.standard_normal(n - onset) * 10.0 ** (-3.0 * t / spec.t60_s)
    return SampledSignal(h, sample_rate, {"kind": "room_ir", "spec": asdict(spec)})


def _nonlinear(v, ch: SimulatedChannel):
    if ch.nonlinearity == "cubic":
        return v + ch.nonlinearity_param * v**3
    if ch.nonlinearity == "tanh":
        return np.tanh(ch.nonlinearity_param * v) / ch.nonlinearity_param
    return v


def apply_channel(x, ch: SimulatedChannel, sample_rate: int | None = None) -> SampledSignal:
    """Full linear convolution, nonlinearity, drift, then additive noise.
    Output length is ``len(x) + len(fir) - 1``."""
    x = check_signal(x, sample_rate, name="x")
    y = _nonlinear(convolve(x.samples, np.asarray(ch.fir)), ch)
    if ch.drift is not None and ch.drift.gain_mod_depth > 0:
        t = np.arange(y.size) / x.sample_rate_hz
        y = y * (1.0 + ch.drift.gain_mod_depth * np.sin(2 * np.pi * t / ch.drift.gain_mod_period_s))
    if ch.noise_rms > 0:
        rng = np.random.default_rng(ch.seed)
        y = y + rng.normal(0.0, ch.noise_rms, y.size)
    return SampledSignal(y, x.sample_rate_hz)
