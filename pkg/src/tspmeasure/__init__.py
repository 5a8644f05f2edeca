"""Impulse-response measurement with structured time-stretched pulses."""

from ._signal import SampledSignal
from ._validation import check_signal
from .acoustics import (AcousticReport, Band, BandSpec, DecayCurve, analyze, band_snr, estimate_rt,
                        freq_response, placement_verdict, reverberation_radius, schroeder_decay,
                        split_direct_indirect)
from .classify import ClassResult, MaterialMetadata, classify_material
from .decompose import Decomposition, decompose, estimate_lti, estimate_rtv, estimate_sdti
from .deconv import SafeguardConfig, measure_ir_circular, measure_ir_linear, safeguard_spectrum
from .signal_gen import (CapricepSpec, SweptSineSpec, gen_calibration_tone, gen_field_test_signal, gen_mls,
                         gen_swept_sine, gen_unit_capricep)
from .simchannel import Drift, RoomIrSpec, SimulatedChannel, apply_channel, synth_room_ir
from .structured import (IRGrid, StructuredTestSignal, align_recording, compose_structured, recover_channels,
                         walsh_hadamard)

__version__ = "0.1.0"

_ESTIMATORS = ("AcousticAnalyzer", "MaterialClassifier", "StructuredMeasurement")


def __getattr__(name):
    # scikit-learn is slow to import; the CLI never needs it
    if name in _ESTIMATORS:
        from . import estimators

        return getattr(estimators, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
