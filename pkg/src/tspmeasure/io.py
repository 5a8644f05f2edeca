"""RIFF/WAVE I/O, JSON sidecars and reports, CSV export.

Sidecars live next to the sound file with a ``.json`` suffix and carry
``"schema": 1``. A stimulus sidecar describes the structured signal well
enough to rebuild it, so a recording plus that sidecar is all ``measure``
needs.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._signal import SampledSignal
from .errors import DataError, UnsupportedFormatError, WavParseError

SCHEMA_VERSION = 1
WAV_FORMATS = {"float32": (3, 32), "pcm16": (1, 16), "pcm24": (1, 24)}
_EXTENSIBLE = 0xFFFE


# -- WAV --------------------------------------------------------------------

def _decode(raw, tag, bits, channels):
    if tag == 1 and bits == 16:
        data = np.frombuffer(raw, "<i2").astype(float) / 32768.0
    elif tag == 1 and bits == 24:
        b = np.frombuffer(raw, np.uint8).reshape(-1, 3).astype(np.int32)
        v = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        v = np.where(v >= 1 << 23, v - (1 << 24), v)
        data = v.astype(float) / float(1 << 23)
    elif tag == 1 and bits == 32:
        data = np.frombuffer(raw, "<i4").astype(float) / float(1 << 31)
    elif tag == 3 and bits == 32:
        data = np.frombuffer(raw, "<f4").astype(float)
    elif tag == 3 and bits == 64:
        data = np.frombuffer(raw, "<f8").copy()
    else:
        raise UnsupportedFormatError(f"unsupported WAV encoding: format tag {tag}, {bits} bits")
    return data.reshape(-1, channels)


def read_wav(path, *, sidecar: bool = True) -> SampledSignal:
    """Read a WAV file. Multichannel files yield their first channel (with a
    warning). Annotations come from the sidecar when one exists."""
    path = Path(path)
    buf = path.read_bytes()
    if len(buf) < 12:
        raise WavParseError("file too short for a RIFF header", len(buf))
    if buf[:4] != b"RIFF":
        raise WavParseError("missing RIFF marker", 0)
    if buf[8:12] != b"WAVE":
        raise WavParseError("missing WAVE marker", 8)
    pos, fmt, data = 12, None, None
    while pos < len(buf):
        if pos + 8 > len(buf):
            raise WavParseError("truncated chunk header", pos)
        chunk_id = buf[pos:pos + 4]
        (size,) = struct.unpack_from("<I", buf, pos + 4)
        body = pos + 8
        if body + size > len(buf):
            raise WavParseError(f"chunk {chunk_id!r} declares {size} bytes beyond end of file", pos)
        if chunk_id == b"fmt ":
            if size < 16:
                raise WavParseError("fmt chunk shorter than 16 bytes", pos)
            tag, channels, rate, _, block_align, bits = struct.unpack_from("<HHIIHH", buf, body)
            if tag == _EXTENSIBLE:
                if size < 40:
                    raise WavParseError("extensible fmt chunk shorter than 40 bytes", pos)
                (tag,) = struct.unpack_from("<H", buf, body + 24)
            if channels < 1 or block_align != channels * bits // 8:
                raise WavParseError("inconsistent fmt chunk", pos)
            fmt = (tag, channels, rate, block_align, bits)
        elif chunk_id == b"data":
            data = (body, size)
        pos = body + size + (size & 1)
        if fmt is not None and data is not None:
            break
    if fmt is None:
        raise WavParseError("no fmt chunk", pos)
    if data is None:
        raise WavParseError("no data chunk", pos)
    tag, channels, rate, block_align, bits = fmt
    start, size = data
    if size % block_align:
        raise WavParseError("data size is not a whole number of frames", start - 8)
    frames = _decode(buf[start:start + size], tag, bits, channels)
    if channels > 1:
        warnings.warn(f"{path.name}: {channels} channels; using the first", stacklevel=2)
    annotations = {}
    if sidecar and sidecar_path(path).exists():
        annotations = read_sidecar(path).get("annotations", {})
    return SampledSignal(frames[:, 0].copy(), rate, annotations)


def write_wav(path, signal: SampledSignal, format: str = "float32", *, sidecar: bool | dict = True):
    """Write a mono WAV. PCM output is clipped to the representable range.

    ``sidecar=True`` writes the signal's annotations (if any) next to the
    file; a dict is merged into the sidecar document.
    """
    if format not in WAV_FORMATS:
        raise UnsupportedFormatError(f"unsupported write format {format!r}; use one of {sorted(WAV_FORMATS)}")
    tag, bits = WAV_FORMATS[format]
    x = np.asarray(signal.samples, dtype=float)
    if format == "float32":
        payload = x.astype("<f4").tobytes()
    elif format == "pcm16":
        payload = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2").tobytes()
    else:
        v = np.clip(np.round(x * float(1 << 23)), -(1 << 23), (1 << 23) - 1).astype("<i4")
        payload = v.view(np.uint8).reshape(-1, 4)[:, :3].tobytes()
    block = bits // 8
    fmt = struct.pack("<HHIIHH", tag, 1, signal.sample_rate_hz, signal.sample_rate_hz * block, block, bits)
    pad = b"\x00" if len(payload) & 1 else b""
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", len(payload)) + payload + pad
    path = Path(path)
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    extra = sidecar if isinstance(sidecar, dict) else {}
    if sidecar is not False and (signal.annotations or extra):
        write_sidecar(path, {"annotations": signal.annotations, **extra})
    return path


# -- JSON -------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def dumps(doc) -> str:
    return json.dumps(doc, default=_jsonable, sort_keys=True, indent=1, allow_nan=False) + "\n"


def finite(value, cap=300.0):
    """Clip infinities to +/-cap so documents stay strict JSON."""
    if value is None:
        return None
    arr = np.asarray(value, dtype=float)
    out = np.clip(np.nan_to_num(arr, nan=-cap, posinf=cap, neginf=-cap), -cap, cap)
    return float(out) if out.ndim == 0 else out.tolist()


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_sidecar(wav_path, doc: dict) -> Path:
    out = sidecar_path(wav_path)
    out.write_text(dumps({"schema": SCHEMA_VERSION, **doc}))
    return out


def read_sidecar(wav_path) -> dict:
    path = sidecar_path(wav_path)
    if not path.exists():
        raise DataError(f"missing stimulus sidecar: {path}")
    return read_json(path)


def read_json(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if doc.get("schema") != SCHEMA_VERSION:
        raise DataError(f"{path}: unsupported schema {doc.get('schema')!r}")
    return doc


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def waveform_digest(samples) -> str:
    return hashlib.sha256(np.ascontiguousarray(samples, dtype="<f8").tobytes()).hexdigest()


# -- structured signal description -----------------------------------------

def structured_to_dict(st) -> dict:
    return {
        "sample_rate_hz": st.sample_rate_hz,
        "hadamard_order": st.hadamard_order,
        "period_samples": st.period_samples,
        "repetitions": st.repetitions,
        "allocation": np.asarray(st.allocation).tolist(),
        "gain": float(st.gain),
        "unit_specs": list(st.unit_specs),
        "waveform_sha256": waveform_digest(st.waveform.samples),
    }


def structured_from_dict(d: dict):
    """Rebuild a structured signal from its description and check it
    reproduces the recorded gain and waveform digest."""
    from .signal_gen import CapricepSpec, gen_unit_capricep
    from .structured import compose_structured

    specs = d.get("unit_specs") or []
    if len(specs) != d["hadamard_order"]:
        raise DataError("sidecar does not describe every unit; cannot rebuild the stimulus")
    units = [gen_unit_capricep(CapricepSpec(**s), d["sample_rate_hz"]) for s in specs]
    st = compose_structured(units, d["period_samples"], d["repetitions"])
    if not np.array_equal(st.allocation, np.asarray(d["allocation"])):
        raise DataError("sidecar allocation differs from the Walsh-Hadamard allocation")
    if waveform_digest(st.waveform.samples) != d["waveform_sha256"]:
        raise DataError("rebuilt stimulus does not match the sidecar digest")
    return st


# -- decomposition / report documents ---------------------------------------

def decomposition_to_dict(dec, extra: dict | None = None) -> dict:
    return {
        "kind": "decomposition",
        "sample_rate_hz": dec.sample_rate_hz,
        "lti_ir": dec.lti_ir.samples.tolist(),
        "rtv_power_spectrum": None if dec.rtv_power_spectrum is None else np.asarray(dec.rtv_power_spectrum).tolist(),
        "sdti_power_spectrum": None if dec.sdti_power_spectrum is None else np.asarray(dec.sdti_power_spectrum).tolist(),
        "levels_db": {k: finite(v) for k, v in dec.levels_db.items()},
        **(extra or {}),
    }


def decomposition_from_dict(d: dict):
    from .decompose import Decomposition

    lti = SampledSignal(np.asarray(d["lti_ir"], dtype=float), d["sample_rate_hz"])
    rtv = d.get("rtv_power_spectrum")
    sdti = d.get("sdti_power_spectrum")
    return Decomposition(
        lti,
        np.fft.rfft(lti.samples),
        None if rtv is None else np.asarray(rtv, dtype=float),
        None if sdti is None else np.asarray(sdti, dtype=float),
        dict(d["levels_db"]),
    )


def acoustic_report_to_dict(rep, decay_step_s: float = 1e-3) -> dict:
    """Decay curves are decimated to roughly ``decay_step_s``; the CSV export
    keeps every sample."""
    times = rep.decay_curves[0].times_s
    dt = float(times[1] - times[0]) if len(times) > 1 else 0.0
    stride = max(1, int(round(decay_step_s / dt))) if dt > 0 else 1
    return {
        "freqs_hz": np.asarray(rep.freqs_hz).tolist(),
        "lti_magnitude_db": finite(rep.lti_magnitude_db),
        "band_labels": list(rep.band_labels),
        "band_snr_db": None if rep.band_snr_db is None else {k: finite(v) for k, v in rep.band_snr_db.items()},
        "decay_curves": [
            {"band_label": c.band_label, "level_db": finite(np.asarray(c.level_db)[::stride])}
            for c in rep.decay_curves
        ],
        "decay_time_step_s": dt * stride,
        "rt_seconds": rep.rt_seconds,
        "drr_db": finite(rep.drr_db, 99.0),
        "reverberation_radius_m": rep.reverberation_radius_m,
        "placement_ok": rep.placement_ok,
        "source_distance_m": rep.source_distance_m,
        "notes": rep.notes,
    }


def acoustic_report_from_dict(d: dict):
    from .acoustics import AcousticReport, DecayCurve

    step = d["decay_time_step_s"]
    curves = [
        DecayCurve(np.arange(len(c["level_db"])) * step, np.asarray(c["level_db"]), c["band_label"])
        for c in d["decay_curves"]
    ]
    return AcousticReport(
        np.asarray(d["freqs_hz"]), np.asarray(d["lti_magnitude_db"]), list(d["band_labels"]),
        d["band_snr_db"], curves, d["rt_seconds"], d["drr_db"], d["reverberation_radius_m"],
        d["placement_ok"], d["source_distance_m"], d.get("notes", {}),
    )


@dataclass
class ReportDocument:
    tool_version: str
    config_echo: dict = field(default_factory=dict)
    decomposition: dict = field(default_factory=dict)
    acoustic_report: dict | None = None
    class_result: dict | None = None
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        return {"schema": SCHEMA_VERSION, "kind": "report", **asdict(self)}

    @classmethod
    def from_dict(cls, d: dict):
        d = dict(d)
        if d.pop("schema", None) != SCHEMA_VERSION or d.pop("kind", None) != "report":
            raise DataError("not a schema-1 report document")
        return cls(**d)

    def dumps(self) -> str:
        return dumps(self.to_dict())


# -- CSV --------------------------------------------------------------------

def write_decay_csv(path, curves):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s", "value_db", "band_label"])
        for c in curves:
            for t, v in zip(c.times_s, finite(c.level_db)):
                w.writerow([repr(float(t)), repr(v), c.band_label])


def write_response_csv(path, freqs, curves: dict):
    """``curves`` maps a label (``lti``, ``rtv``, ...) to per-bin dB values."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["freq_hz", "value_db", "band_label"])
        for label, values in curves.items():
            for f, v in zip(freqs, finite(values)):
                w.writerow([repr(float(f)), repr(v), label])
