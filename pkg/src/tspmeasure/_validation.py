"""Input validation helpers shared by the functional API and the estimators."""

from __future__ import annotations

import numpy as np

from ._signal import SampledSignal
from .errors import ConfigurationError


def check_signal(x, sample_rate=None, *, min_length=1, name="signal") -> SampledSignal:
    """Coerce ``x`` to a :class:`SampledSignal`.

    Arrays are accepted when ``sample_rate`` is given. When both a signal and
    ``sample_rate`` are passed, the rates must agree.
    """
    if isinstance(x, SampledSignal):
        if sample_rate is not None and int(sample_rate) != x.sample_rate_hz:
            raise ConfigurationError(
                f"{name}: sample rate {x.sample_rate_hz} does not match expected {sample_rate}"
            )
        sig = x
    else:
        if sample_rate is None:
            raise ConfigurationError(f"{name}: sample_rate is required for raw arrays")
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 2 and 1 in arr.shape:
            arr = arr.ravel()
        sig = SampledSignal(arr, sample_rate)
    if len(sig) < min_length:
        raise ConfigurationError(f"{name}: needs at least {min_length} samples, got {len(sig)}")
    return sig


def check_positive(value, name):
    if not np.isfinite(value) or value <= 0:
        raise ConfigurationError(f"{name} must be positive, got {value!r}")
    return value


def is_power_of_two(n) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 1 and (int(n) & (int(n) - 1)) == 0


def check_power_of_two(n, name):
    if not is_power_of_two(n):
        raise ConfigurationError(f"{name} must be a power of two, got {n!r}")
    return int(n)


def check_same_rate(*signals: SampledSignal):
    rates = {s.sample_rate_hz for s in signals}
    if len(rates) > 1:
        raise ConfigurationError(f"sample-rate mismatch: {sorted(rates)}")
    return rates.pop()
