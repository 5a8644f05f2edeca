"""Walsh-Hadamard structured test signals and per-unit response recovery.

A super-period consists of M slots of ``period_samples`` each. Slot ``j``
carries ``sum_i allocation[i, j] * unit_i`` with the unit placed at the slot
start. As long as unit length plus impulse-response length fits in a slot,
responses to different slots do not overlap, and weighting the M slot
responses of one super-period by row ``i`` of the allocation (then dividing
by M) isolates the response to unit ``i`` exactly for an LTI system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import hadamard
from scipy.signal import correlate

from ._signal import SampledSignal
from ._validation import check_power_of_two, check_same_rate, check_signal
from .deconv import SafeguardConfig, safeguard_spectrum
from .errors import AlignmentError, ConfigurationError, DegenerateInputError, InsufficientDataError

ALIGNMENT_THRESHOLD = 4.0


def walsh_hadamard(order: int) -> np.ndarray:
    """Sylvester-construction +/-1 matrix with ``H @ H.T == order * I``."""
    check_power_of_two(order, "Hadamard order")
    return hadamard(int(order)).astype(int)


@dataclass(eq=False)
class StructuredTestSignal:
    units: list
    hadamard_order: int
    period_samples: int
    repetitions: int
    waveform: SampledSignal
    allocation: np.ndarray
    gain: float
    unit_specs: list = field(default_factory=list)

    @property
    def sample_rate_hz(self) -> int:
        return self.waveform.sample_rate_hz

    @property
    def super_period(self) -> int:
        return self.hadamard_order * self.period_samples

    def unit_period(self, i) -> np.ndarray:
        """Unit ``i`` as it appears in a slot: gain applied, zero-padded."""
        out = np.zeros(self.period_samples)
        u = self.units[i].samples
        out[:len(u)] = self.gain * u
        return out


@dataclass(eq=False)
class IRGrid:
    """Recovered impulse responses, shape ``(units, repetitions, period)``."""

    irs: np.ndarray
    sample_rate_hz: int
    offset: int = 0

    def __array__(self, dtype=None, copy=None):
        return self.irs if dtype is None else self.irs.astype(dtype)

    @property
    def shape(self):
        return self.irs.shape


def compose_structured(units, period_samples: int, repetitions: int) -> StructuredTestSignal:
    units = [check_signal(u, name=f"unit {i}") for i, u in enumerate(units)]
    if not units:
        raise ConfigurationError("need at least one unit")
    m = check_power_of_two(len(units), "number of units")
    rate = check_same_rate(*units)
    if int(period_samples) != period_samples or period_samples < 1:
        raise ConfigurationError("period_samples must be a positive integer")
    if int(repetitions) != repetitions or repetitions < 3:
        raise ConfigurationError(f"repetitions must be an integer >= 3, got {repetitions!r}")
    period_samples = int(period_samples)
    for i, u in enumerate(units):
        if len(u) > period_samples:
            raise ConfigurationError(f"unit {i} has {len(u)} samples, longer than the slot ({period_samples})")

    allocation = walsh_hadamard(m)
    padded = np.zeros((m, period_samples))
    for i, u in enumerate(units):
        padded[i, :len(u)] = u.samples
    # slot j = sum_i allocation[i, j] * unit_i
    super_period = (allocation.T @ padded).ravel()
    peak = np.max(np.abs(super_period))
    if peak == 0:
        raise ConfigurationError("all units are zero")
    gain = 1.0 / peak
    waveform = SampledSignal(
        np.tile(super_period * gain, int(repetitions)),
        rate,
        {"kind": "structured", "hadamard_order": m, "period_samples": period_samples,
         "repetitions": int(repetitions), "gain": gain},
    )
    specs = [u.annotations.get("spec") for u in units]
    return StructuredTestSignal(units, m, period_samples, int(repetitions), waveform, allocation, gain,
                                specs if all(s is not None for s in specs) else [])


def align_recording(structured: StructuredTestSignal, recording, threshold: float = ALIGNMENT_THRESHOLD,
                    pre_roll: int | None = None):
    """Locate the stimulus onset in ``recording``.

    Cross-correlates the recording with the first super-period. Because the
    stimulus is periodic, peaks recur every super-period; the earliest one
    above half the maximum marks the strongest arrival. The returned offset
    sits ``pre_roll`` samples (default: 1/16 slot) before it, so the early
    part of the response stays inside the analysis window. Confidence is
    the ratio of the main peak to the largest correlation further than half
    a slot from any periodic repeat.

    Returns ``(offset, confidence)``.
    """
    rec = check_signal(recording, structured.sample_rate_hz, name="recording").samples
    sp = structured.super_period
    if len(rec) < sp:
        raise InsufficientDataError("recording shorter than one super-period")
    template = structured.waveform.samples[:sp]
    corr = np.abs(correlate(rec, template, mode="valid", method="fft"))
    best = int(np.argmax(corr))
    lattice = np.arange(best % sp, len(corr), sp)
    arrival = int(next(lag for lag in lattice if corr[lag] >= 0.5 * corr[best]))
    if pre_roll is None:
        pre_roll = structured.period_samples // 16
    offset = max(0, arrival - int(pre_roll))

    guard = max(1, structured.period_samples // 2)
    lags = np.arange(len(corr))
    dist = np.abs((lags - best + sp // 2) % sp - sp // 2)
    rest = corr[dist > guard]
    second = rest.max() if rest.size else 0.0
    confidence = float(np.inf) if second == 0 else float(corr[best] / second)
    if confidence < threshold:
        raise AlignmentError(
            f"alignment confidence {confidence:.2f} below threshold {threshold}", confidence
        )
    return offset, confidence


def recover_channels(structured: StructuredTestSignal, recording, cfg: SafeguardConfig | None = None,
                     *, offset: int | None = None, align: bool = False) -> IRGrid:
    """Per-unit, per-repetition impulse responses from a recording.

    The first super-period after the onset is discarded. Each later complete
    super-period (at most ``repetitions - 1`` of them) is folded with the
    allocation signs and circularly deconvolved by the matching unit.
    A unit whose spectrum is identically zero yields a zero response.
    """
    cfg = cfg or SafeguardConfig()
    rec = check_signal(recording, structured.sample_rate_hz, name="recording").samples
    if align:
        offset, _ = align_recording(structured, rec)
    offset = int(offset or 0)
    m, p, sp = structured.hadamard_order, structured.period_samples, structured.super_period
    n_super = min((len(rec) - offset) // sp, structured.repetitions)
    if n_super < 2:
        raise InsufficientDataError(
            f"recording covers {max(n_super, 0)} super-period(s) after the onset; at least 2 are needed"
        )
    segments = rec[offset + sp: offset + n_super * sp].reshape(n_super - 1, m, p)
    folded = np.einsum("ij,rjp->irp", structured.allocation, segments) / m

    spectra = np.fft.rfft(folded, axis=-1)
    irs = np.zeros_like(folded)
    for i in range(m):
        U = np.fft.rfft(structured.unit_period(i))
        try:
            U = safeguard_spectrum(U, cfg)
        except DegenerateInputError:
            continue
        irs[i] = np.fft.irfft(spectra[i] / U, p, axis=-1)
    return IRGrid(irs, structured.sample_rate_hz, offset)
