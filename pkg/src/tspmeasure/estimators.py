"""scikit-learn style wrappers around the functional API.

>>> meas = StructuredMeasurement(n_units=2, period_samples=4096, repetitions=3)
>>> stim = meas.make_stimulus()
>>> int(meas.fit(stim.waveform).lti_ir_.samples.argmax())
0
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_signal
from .acoustics import BandSpec, analyze
from .classify import ClassResult, MaterialMetadata, classify_material
from .decompose import Decomposition, decompose
from .deconv import SafeguardConfig
from .signal_gen import CapricepSpec, gen_unit_capricep
from .structured import StructuredTestSignal, compose_structured, recover_channels


class StructuredMeasurement(TransformerMixin, BaseEstimator):
    """Measure LTI / RTV / SDTI components from a recording of a structured stimulus.

    Parameters
    ----------
    n_units : int
        Number of CAPRICEP units (power of two).
    period_samples : int
        Slot length. Unit length plus the system's IR length must fit in it.
    repetitions : int
        Number of super-periods in the stimulus (>= 3).
    sample_rate : int
    unit_spec : CapricepSpec, optional
        Template for the units; unit ``i`` uses seed ``seed + i``. When
        omitted, units are ``period_samples // 2`` long.
    relative_floor_db, shaping, smoothing_bandwidth_octaves
        Safeguard settings, see :class:`~tspmeasure.deconv.SafeguardConfig`.
    align : bool
        Locate the stimulus onset by cross-correlation before recovery.
    seed : int
    stimulus : StructuredTestSignal, optional
        Use this stimulus instead of generating one from the parameters.

    Attributes
    ----------
    stimulus_ : StructuredTestSignal
    ir_grid_ : IRGrid
    decomposition_ : Decomposition
    lti_ir_ : SampledSignal
    offset_ : int
    """

    def __init__(self, n_units=4, period_samples=16384, repetitions=4, sample_rate=44100, unit_spec=None,
                 relative_floor_db=-60.0, shaping="flat", smoothing_bandwidth_octaves=1.0 / 3.0,
                 align=False, seed=0, stimulus=None):
        self.n_units = n_units
        self.period_samples = period_samples
        self.repetitions = repetitions
        self.sample_rate = sample_rate
        self.unit_spec = unit_spec
        self.relative_floor_db = relative_floor_db
        self.shaping = shaping
        self.smoothing_bandwidth_octaves = smoothing_bandwidth_octaves
        self.align = align
        self.seed = seed
        self.stimulus = stimulus

    def _safeguard(self):
        return SafeguardConfig(self.relative_floor_db, self.shaping, self.smoothing_bandwidth_octaves)

    def _unit_template(self):
        if self.unit_spec is not None:
            return self.unit_spec
        return CapricepSpec.for_length(max(1, self.period_samples // 2))

    def make_stimulus(self) -> StructuredTestSignal:
        if self.stimulus is not None:
            return self.stimulus
        template = self._unit_template()
        units = [gen_unit_capricep(replace(template, seed=self.seed + i), self.sample_rate)
                 for i in range(self.n_units)]
        return compose_structured(units, self.period_samples, self.repetitions)

    def fit(self, X, y=None):
        stim = self.make_stimulus()
        rec = check_signal(X, stim.sample_rate_hz, name="recording")
        grid = recover_channels(stim, rec, self._safeguard(), align=self.align)
        self.stimulus_ = stim
        self.ir_grid_ = grid
        self.offset_ = grid.offset
        self.decomposition_ = decompose(grid)
        self.lti_ir_ = self.decomposition_.lti_ir
        return self

    def transform(self, X):
        """Recover the ``(units, repetitions, period)`` IR array from another
        recording of the fitted stimulus."""
        check_is_fitted(self, "stimulus_")
        rec = check_signal(X, self.stimulus_.sample_rate_hz, name="recording")
        return recover_channels(self.stimulus_, rec, self._safeguard(), align=self.align).irs


class AcousticAnalyzer(TransformerMixin, BaseEstimator):
    """Derive an :class:`~tspmeasure.acoustics.AcousticReport`.

    ``transform`` maps a decomposition to its per-band SNR vector, which is
    handy as a feature row.
    """

    def __init__(self, band_kind="octave", f_min_hz=125.0, f_max_hz=8000.0, source_distance_m=None,
                 direct_window_ms=2.5):
        self.band_kind = band_kind
        self.f_min_hz = f_min_hz
        self.f_max_hz = f_max_hz
        self.source_distance_m = source_distance_m
        self.direct_window_ms = direct_window_ms

    def _bands(self):
        return BandSpec(self.band_kind, self.f_min_hz, self.f_max_hz)

    def fit(self, X: Decomposition, y=None):
        self.report_ = analyze(X, self._bands(), self.source_distance_m, self.direct_window_ms)
        return self

    def transform(self, X: Decomposition):
        check_is_fitted(self, "report_")
        rep = analyze(X, self._bands(), self.source_distance_m, self.direct_window_ms)
        return np.array([rep.band_snr_db[label] for label in rep.band_labels])


class MaterialClassifier(ClassifierMixin, BaseEstimator):
    """Rule-based classifier; ``fit`` only records the label set.

    ``X`` is a sequence of ``(report, MaterialMetadata)`` pairs.
    """

    def fit(self, X=None, y=None):
        self.classes_ = np.array([1, 2, 3, 4])
        return self

    def predict_results(self, X) -> list[ClassResult]:
        out = []
        for report, meta in X:
            if isinstance(meta, dict):
                meta = MaterialMetadata(**meta)
            out.append(classify_material(report, meta))
        return out

    def predict(self, X):
        return np.array([r.class_label for r in self.predict_results(X)])
