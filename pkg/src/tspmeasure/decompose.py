"""LTI / RTV / SDTI decomposition of a grid of recovered impulse responses.

Spectra are one-sided DFTs (rfft) of the period-length responses. RTV is the
unbiased across-repetition variance per bin, averaged over units. SDTI is
the unbiased across-unit variance of the per-unit mean spectra, minus the
share of RTV that leaks into those means (RTV / number of repetitions),
clamped at zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._signal import SampledSignal
from .errors import ConfigurationError, InsufficientDataError
from .structured import IRGrid


@dataclass(eq=False)
class VarianceEstimate:
    power: np.ndarray
    level_db: float


@dataclass(eq=False)
class Decomposition:
    lti_ir: SampledSignal
    lti_spectrum: np.ndarray
    rtv_power_spectrum: np.ndarray | None
    sdti_power_spectrum: np.ndarray | None
    levels_db: dict

    @property
    def sample_rate_hz(self):
        return self.lti_ir.sample_rate_hz

    @property
    def freqs_hz(self):
        return np.fft.rfftfreq(len(self.lti_ir), 1.0 / self.sample_rate_hz)


def _unbiased_variance(z, axis):
    """Unbiased variance of complex ``z`` along ``axis``, computed on data
    shifted by its first entry so identical entries give exactly zero."""
    d = z - np.take(z, [0], axis=axis)
    n = z.shape[axis]
    return (np.sum(np.abs(d) ** 2, axis=axis) - np.abs(np.sum(d, axis=axis)) ** 2 / n) / (n - 1)


def _as_grid(grid):
    if isinstance(grid, IRGrid):
        return grid.irs, grid.sample_rate_hz
    irs = np.asarray(grid, dtype=float)
    if irs.ndim != 3:
        raise ConfigurationError(f"IR grid must have shape (units, repetitions, length), got {irs.shape}")
    return irs, None


def _level_db(power, reference):
    total = np.sum(power)
    ref = np.sum(reference)
    if ref <= 0:
        raise InsufficientDataError("LTI spectrum has zero energy")
    with np.errstate(divide="ignore"):
        return float(10.0 * np.log10(total / ref))


def estimate_lti(grid, sample_rate: int | None = None) -> SampledSignal:
    """Sample-wise mean over every unit and repetition."""
    irs, rate = _as_grid(grid)
    if irs.size == 0:
        raise InsufficientDataError("empty IR grid")
    rate = rate or sample_rate
    if rate is None:
        raise ConfigurationError("sample_rate is required for a raw array grid")
    return SampledSignal(irs.mean(axis=(0, 1)), rate)


def estimate_rtv(grid) -> VarianceEstimate:
    irs, _ = _as_grid(grid)
    if irs.shape[1] < 2:
        raise InsufficientDataError(f"RTV needs >= 2 repetitions, got {irs.shape[1]}")
    spectra = np.fft.rfft(irs, axis=-1)
    power = np.maximum(_unbiased_variance(spectra, axis=1), 0.0).mean(axis=0)
    lti = np.abs(spectra.mean(axis=(0, 1))) ** 2
    return VarianceEstimate(power, _level_db(power, lti))


def between_unit_variance(grid) -> np.ndarray:
    """Unbiased across-unit variance of the per-unit mean spectra (no RTV
    correction)."""
    irs, _ = _as_grid(grid)
    if irs.shape[0] < 2:
        raise InsufficientDataError(f"SDTI needs >= 2 units, got {irs.shape[0]}")
    means = np.fft.rfft(irs, axis=-1).mean(axis=1)
    return np.maximum(_unbiased_variance(means, axis=0), 0.0)


def estimate_sdti(grid, rtv: VarianceEstimate | None = None) -> VarianceEstimate:
    irs, _ = _as_grid(grid)
    between = between_unit_variance(irs)
    n_rep = irs.shape[1]
    if n_rep >= 2:
        rtv = rtv if rtv is not None else estimate_rtv(irs)
        power = np.maximum(between - rtv.power / n_rep, 0.0)
    else:
        power = between
    lti = np.abs(np.fft.rfft(irs.mean(axis=(0, 1)))) ** 2
    return VarianceEstimate(power, _level_db(power, lti))


def decompose(grid, sample_rate: int | None = None) -> Decomposition:
    """All three components at once. RTV (SDTI) is ``None`` when the grid
    has fewer than two repetitions (units)."""
    irs, rate = _as_grid(grid)
    lti = estimate_lti(grid, sample_rate)
    levels = {}
    rtv = sdti = None
    if irs.shape[1] >= 2:
        rtv = estimate_rtv(irs)
        levels["rtv"] = rtv.level_db
    if irs.shape[0] >= 2:
        sdti = estimate_sdti(irs, rtv)
        levels["sdti"] = sdti.level_db
    levels["lti"] = 0.0
    return Decomposition(
        lti,
        np.fft.rfft(lti.samples),
        None if rtv is None else rtv.power,
        None if sdti is None else sdti.power,
        levels,
    )
