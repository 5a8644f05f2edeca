"""Rule cascade mapping acoustic attributes and acquisition metadata to
material classes 1 (best) to 4.

Every gate is upward closed in its ordering (better SNR, better
calibration, richer annotation), which makes the cascade monotone.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Literal

from .errors import ConfigurationError, IncompleteInputError

RULES_VERSION = "v1"
SNR_GATE_DB = 30.0
# class 2 only asks for "minimum" background noise; declared relaxed gate
CLASS2_SNR_GATE_DB = 20.0

SPL_ORDER = {"none": 0, "sufficient": 1, "precise": 2}
ANNOTATION_ORDER = {"none": 0, "basic": 1, "relevant": 2, "detailed": 3}

REUSABILITY = {
    1: "appropriate for analyzing all acoustic attributes",
    2: "appropriate for analyzing many acoustic attributes",
    3: "appropriate for analyzing some acoustic attributes",
    4: "acoustic attributes analysis can be possible with preprocessing; usable for training",
}


@dataclass(frozen=True)
class MaterialMetadata:
    spl_calibrated: bool = False
    spl_quality: Literal["precise", "sufficient", "none"] = "none"
    annotation_quality: Literal["detailed", "relevant", "basic", "none"] = "none"
    background_recorded: bool = False
    field_test_signal_present: bool = False
    source_distance_m: float | None = None

    def __post_init__(self):
        if self.spl_quality not in SPL_ORDER:
            raise ConfigurationError(f"spl_quality must be one of {sorted(SPL_ORDER)}")
        if self.annotation_quality not in ANNOTATION_ORDER:
            raise ConfigurationError(f"annotation_quality must be one of {sorted(ANNOTATION_ORDER)}")
        if self.spl_calibrated != (self.spl_quality != "none"):
            raise ConfigurationError("spl_calibrated must be true exactly when spl_quality is not 'none'")

    @property
    def spl_rank(self):
        return SPL_ORDER[self.spl_quality]

    @property
    def annotation_rank(self):
        return ANNOTATION_ORDER[self.annotation_quality]

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Criterion:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ClassResult:
    class_label: int
    reasons: list = field(default_factory=list)
    reusability_note: str = ""
    classifier_rules: str = RULES_VERSION

    def to_dict(self):
        return {
            "class_label": self.class_label,
            "reasons": [asdict(r) for r in self.reasons],
            "reusability_note": self.reusability_note,
            "classifier_rules": self.classifier_rules,
        }


def _acoustic_gates(report):
    snr = getattr(report, "band_snr_db", None) if report is not None else None
    placement = getattr(report, "placement_ok", None) if report is not None else None
    if not snr or placement is None:
        return None
    min_snr = min(snr.values())
    detail = f"min band SNR {min_snr:.2f} dB"
    placed = Criterion("placement_within_half_radius", bool(placement), f"placement_ok={placement}")
    return {
        1: [Criterion(f"min_band_snr_above_{SNR_GATE_DB:g}db", min_snr > SNR_GATE_DB, detail), placed],
        2: [Criterion(f"min_band_snr_above_{CLASS2_SNR_GATE_DB:g}db", min_snr > CLASS2_SNR_GATE_DB, detail), placed],
    }


def classify_material(report, meta: MaterialMetadata) -> ClassResult:
    """Class 1: SNR > 30 dB in every band, microphone inside half the
    reverberation radius, precise SPL calibration, detailed annotation and a
    background recording. Class 2 relaxes the SNR gate to 20 dB, calibration
    to sufficient and annotation to relevant. Class 3 needs a background
    recording, any SPL calibration and at least basic annotation. Everything
    else is class 4.

    Without acoustic attributes, a recording lacking the field test signal
    falls through to class 4; one that has it must be analyzed first.
    """
    reasons = []
    acoustic = _acoustic_gates(report)
    if acoustic is None:
        if meta.field_test_signal_present:
            raise IncompleteInputError(
                "report lacks band SNR / placement verdict; analyze the field test signal recording first"
            )
        reasons.append(Criterion("acoustic_attributes_available", False, "no field test signal recorded"))
        acoustic = {1: [], 2: []}
        acoustic_ok = {1: False, 2: False}
    else:
        acoustic_ok = {cls: all(c.passed for c in gates) for cls, gates in acoustic.items()}

    background = Criterion("background_recorded", meta.background_recorded)
    gates = {
        1: [Criterion("spl_precise", meta.spl_rank >= SPL_ORDER["precise"], meta.spl_quality),
            Criterion("annotation_detailed", meta.annotation_rank >= ANNOTATION_ORDER["detailed"],
                      meta.annotation_quality)],
        2: [Criterion("spl_at_least_sufficient", meta.spl_rank >= SPL_ORDER["sufficient"], meta.spl_quality),
            Criterion("annotation_at_least_relevant", meta.annotation_rank >= ANNOTATION_ORDER["relevant"],
                      meta.annotation_quality)],
        3: [Criterion("spl_calibrated", meta.spl_rank >= SPL_ORDER["sufficient"], meta.spl_quality),
            Criterion("annotation_at_least_basic", meta.annotation_rank >= ANNOTATION_ORDER["basic"],
                      meta.annotation_quality)],
    }
    reasons.append(background)
    label = 4
    for cls in (1, 2, 3):
        for c in acoustic.get(cls, []) + gates[cls]:
            reasons.append(Criterion(f"class{cls}:{c.name}", c.passed, c.detail))
        if acoustic_ok.get(cls, True) and background.passed and all(c.passed for c in gates[cls]):
            label = cls
            break
    reasons.append(Criterion("field_test_signal_present", meta.field_test_signal_present))
    return ClassResult(label, reasons, REUSABILITY[label])
