"""Command-line interface.

Workflow::

    tspmeasure compose --out stim.wav
    tspmeasure simulate --input stim.wav --room --t60 0.4 --out rec.wav
    tspmeasure measure rec.wav --sidecar stim.json --out dec.json
    tspmeasure analyze dec.json --source-distance 0.3 --out report.json --csv-dir curves/
    tspmeasure classify report.json --meta meta.json --out classified.json

Exit status: 0 on success, 2 for configuration errors, 3 for data errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from . import io as tio
from ._signal import SampledSignal
from .acoustics import BandSpec, analyze
from .classify import MaterialMetadata, classify_material
from .decompose import decompose
from .deconv import SafeguardConfig
from .errors import ConfigurationError, DataError
from .signal_gen import (CapricepSpec, SweptSineSpec, gen_calibration_tone, gen_field_test_signal, gen_mls,
                         gen_swept_sine, gen_unit_capricep)
from .simchannel import RoomIrSpec, SimulatedChannel, apply_channel, synth_room_ir
from .structured import compose_structured, recover_channels

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigurationError(f"{self.prog}: {message}")


def _emit(args, summary: dict, text: str):
    if args.json:
        sys.stdout.write(tio.dumps(summary))
    else:
        print(text)


def _capricep_args(p):
    ref = CapricepSpec()
    p.add_argument("--fft-length", type=int, default=None, help=f"default: 8x unit length ({ref.fft_length} at 8192)")
    p.add_argument("--n-sections", type=int, default=ref.n_sections)
    p.add_argument("--gd-sigma", type=float, default=None, help="bump width in bins")
    p.add_argument("--gd-magnitude", type=float, default=None, help="bump height in samples")
    p.add_argument("--unit-length", type=int, default=ref.effective_length)


def _capricep_spec(args, seed):
    base = CapricepSpec.for_length(args.unit_length, seed)
    spec = CapricepSpec(
        fft_length=args.fft_length or base.fft_length,
        n_sections=args.n_sections,
        gd_sigma_samples=args.gd_sigma if args.gd_sigma is not None else base.gd_sigma_samples,
        gd_magnitude_samples=args.gd_magnitude if args.gd_magnitude is not None else base.gd_magnitude_samples,
        seed=seed,
        effective_length=args.unit_length,
    )
    return spec.validate()


def _load_structured(path):
    doc = tio.read_sidecar(path) if Path(path).suffix != ".json" else tio.read_json(path)
    if "structured" not in doc:
        raise DataError(f"missing stimulus sidecar: {path} does not describe a structured stimulus")
    return tio.structured_from_dict(doc["structured"]), doc


# -- subcommands --------------------------------------------------------------

def cmd_gen(args):
    rate = args.sample_rate
    if args.kind == "capricep":
        sig = gen_unit_capricep(_capricep_spec(args, args.seed), rate)
    elif args.kind == "sweep":
        sig = gen_swept_sine(SweptSineSpec(args.f_start, args.f_end, args.duration, args.law), rate)
    elif args.kind == "mls":
        sig = gen_mls(args.order, rate)
    else:
        sig = gen_calibration_tone(args.freq, args.level_dbfs, args.duration, rate)
    tio.write_wav(args.out, sig, args.format)
    _emit(args, {"kind": args.kind, "out": Path(args.out).name, "samples": len(sig), "sample_rate_hz": rate},
          f"wrote {args.out} ({len(sig)} samples)")


def cmd_compose(args):
    units = [gen_unit_capricep(_capricep_spec(args, args.seed + i), args.sample_rate) for i in range(args.units)]
    st = compose_structured(units, args.period, args.repetitions)
    tio.write_wav(args.out, st.waveform, args.format,
                  sidecar={"structured": tio.structured_to_dict(st)})
    _emit(args, {"out": Path(args.out).name, "samples": len(st.waveform), "gain": st.gain,
                 "hadamard_order": st.hadamard_order, "period_samples": st.period_samples,
                 "repetitions": st.repetitions},
          f"wrote {args.out} ({len(st.waveform)} samples, M={st.hadamard_order}, R={st.repetitions})")


def cmd_fieldsig(args):
    st, doc = _load_structured(args.stimulus)
    tone = gen_calibration_tone(args.tone_freq, args.tone_level, args.tone_duration, st.sample_rate_hz)
    sig = gen_field_test_signal(st, tone)
    calibration = {"freq_hz": args.tone_freq, "rms_level_dbfs": args.tone_level,
                   "duration_s": args.tone_duration, "spl_db": args.spl_db}
    tio.write_wav(args.out, sig, args.format, sidecar={"structured": doc["structured"], "calibration": calibration})
    _emit(args, {"out": Path(args.out).name, "samples": len(sig), "segments": sig.annotations["segments"]},
          f"wrote {args.out} ({len(sig)} samples)")


def _channel_from_args(args, rate):
    cfg = {}
    if args.config:
        cfg = json.loads(Path(args.config).read_text())
        if not isinstance(cfg, dict):
            raise ConfigurationError("channel config must be a JSON object")
    room = cfg.pop("room", None)
    if args.fir:
        fir = tio.read_wav(args.fir, sidecar=False).samples
    elif args.room or room is not None:
        spec = dict(room or {})
        for key, val in (("t60_s", args.t60), ("direct_gain", args.direct_gain), ("tail_gain", args.tail_gain),
                         ("length_s", args.ir_length), ("direct_delay_s", args.direct_delay)):
            if val is not None:
                spec[key] = val
        spec.setdefault("seed", args.seed)
        fir = synth_room_ir(RoomIrSpec(**spec), rate).samples
    elif "fir" in cfg:
        fir = cfg["fir"]
    else:
        raise ConfigurationError("give --fir, --room or a config with 'fir' or 'room'")
    cfg["fir"] = fir
    for key, val in (("nonlinearity", args.nonlinearity), ("nonlinearity_param", args.nl_param),
                     ("noise_rms", args.noise_rms)):
        if val is not None:
            cfg[key] = val
    if args.drift_depth is not None:
        cfg["drift"] = {"gain_mod_depth": args.drift_depth, "gain_mod_period_s": args.drift_period}
    cfg["seed"] = args.seed
    try:
        return SimulatedChannel(**cfg)
    except TypeError as exc:
        raise ConfigurationError(f"bad channel config: {exc}") from exc


def cmd_simulate(args):
    x = tio.read_wav(args.input, sidecar=False)
    ch = _channel_from_args(args, x.sample_rate_hz)
    y = apply_channel(x, ch)
    echo = ch.to_dict()
    echo["fir_length"] = len(echo.pop("fir"))
    rec = SampledSignal(y.samples, y.sample_rate_hz)
    tio.write_wav(args.out, rec, args.format, sidecar={
        "channel": echo,
        "true_fir": list(ch.fir),
        "provenance": {"input": Path(args.input).name, "input_sha256": tio.sha256_file(args.input)},
    })
    _emit(args, {"out": Path(args.out).name, "samples": len(y), "channel": echo},
          f"wrote {args.out} ({len(y)} samples)")


def cmd_measure(args):
    sidecar = args.sidecar
    if sidecar is None:
        own = tio.sidecar_path(args.recording)
        if not own.exists() or "structured" not in tio.read_json(own):
            raise DataError("missing stimulus sidecar: pass --sidecar pointing at the stimulus description")
        sidecar = own
    if not Path(sidecar).exists():
        raise DataError(f"missing stimulus sidecar: {sidecar}")
    st, _ = _load_structured(sidecar)
    rec = tio.read_wav(args.recording, sidecar=False)
    cfg = SafeguardConfig(args.floor_db, args.shaping, args.smoothing)
    grid = recover_channels(st, rec, cfg, align=args.align)
    dec = decompose(grid)
    doc = tio.decomposition_to_dict(dec, {
        "grid_shape": list(grid.shape),
        "offset": grid.offset,
        "config_echo": {"safeguard": cfg.to_dict(), "align": args.align},
        "provenance": {"recording": Path(args.recording).name, "recording_sha256": tio.sha256_file(args.recording),
                       "sidecar_sha256": tio.sha256_file(sidecar)},
    })
    Path(args.out).write_text(tio.dumps({"schema": tio.SCHEMA_VERSION, **doc}))
    if args.ir_out:
        tio.write_wav(args.ir_out, dec.lti_ir, "float32", sidecar=False)
    levels = doc["levels_db"]
    _emit(args, {"out": Path(args.out).name, "levels_db": levels, "grid_shape": doc["grid_shape"]},
          f"wrote {args.out}; levels re LTI: " + ", ".join(f"{k}={v:.1f} dB" for k, v in sorted(levels.items())))


def _analyze_one(path, args):
    d = tio.read_json(path)
    if d.get("kind") != "decomposition":
        raise DataError(f"{path} is not a decomposition document")
    dec = tio.decomposition_from_dict(d)
    bands = BandSpec(args.bands, args.f_min, args.f_max)
    rep = analyze(dec, bands, args.source_distance, args.direct_window_ms)
    report = tio.ReportDocument(
        tool_version=__version__,
        config_echo={"bands": asdict(bands), "source_distance_m": args.source_distance,
                     "direct_window_ms": args.direct_window_ms, "measure": d.get("config_echo", {})},
        decomposition={"levels_db": d["levels_db"], "grid_shape": d.get("grid_shape"), "offset": d.get("offset")},
        acoustic_report=tio.acoustic_report_to_dict(rep),
        provenance={"decomposition": Path(path).name, "decomposition_sha256": tio.sha256_file(path),
                    **{f"measure_{k}": v for k, v in d.get("provenance", {}).items()}},
    )
    return rep, dec, report


def _write_curves(csv_dir, rep, dec):
    csv_dir = Path(csv_dir)
    csv_dir.mkdir(parents=True, exist_ok=True)
    tio.write_decay_csv(csv_dir / "decay.csv", rep.decay_curves)
    curves = {"lti": rep.lti_magnitude_db}
    with np.errstate(divide="ignore"):
        for name, power in (("rtv", dec.rtv_power_spectrum), ("sdti", dec.sdti_power_spectrum)):
            if power is not None:
                curves[name] = 10.0 * np.log10(power)
    tio.write_response_csv(csv_dir / "response.csv", rep.freqs_hz, curves)


def cmd_analyze(args):
    if args.dir:
        paths = sorted(p for p in Path(args.dir).glob("*.json")
                       if not p.name.endswith(".report.json") and tio.read_json(p).get("kind") == "decomposition")

        def job(p):
            _, _, report = _analyze_one(p, args)
            out = p.with_name(p.stem + ".report.json")
            out.write_text(report.dumps())
            return out.name

        with ThreadPoolExecutor() as pool:
            written = list(pool.map(job, paths))
        _emit(args, {"reports": written}, f"wrote {len(written)} report(s)")
        return
    if not args.decomposition:
        raise ConfigurationError("analyze needs a decomposition file or --dir")
    rep, dec, report = _analyze_one(args.decomposition, args)
    out = Path(args.out or Path(args.decomposition).with_suffix(".report.json"))
    out.write_text(report.dumps())
    if args.csv_dir:
        _write_curves(args.csv_dir, rep, dec)
    ar = report.acoustic_report
    _emit(args, {"out": out.name, "drr_db": ar["drr_db"], "rt_seconds": ar["rt_seconds"],
                 "band_snr_db": ar["band_snr_db"], "reverberation_radius_m": ar["reverberation_radius_m"],
                 "placement_ok": ar["placement_ok"]},
          f"wrote {out}; DRR {ar['drr_db']:.2f} dB")


def cmd_classify(args):
    doc = tio.read_json(args.report)
    report = tio.ReportDocument.from_dict(doc)
    meta_doc = json.loads(Path(args.meta).read_text()) if args.meta else {}
    if args.source_distance is not None:
        meta_doc["source_distance_m"] = args.source_distance
    try:
        meta = MaterialMetadata(**meta_doc)
    except TypeError as exc:
        raise ConfigurationError(f"bad metadata: {exc}") from exc
    acoustic = None if report.acoustic_report is None else tio.acoustic_report_from_dict(report.acoustic_report)
    result = classify_material(acoustic, meta)
    report.class_result = result.to_dict()
    report.config_echo = {**report.config_echo, "metadata": meta.to_dict()}
    out = Path(args.out or args.report)
    out.write_text(report.dumps())
    _emit(args, result.to_dict(), f"class {result.class_label}: {result.reusability_note}")


# -- parser -------------------------------------------------------------------

def build_parser():
    parser = _Parser(prog="tspmeasure", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, out=True):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--json", action="store_true", help="machine-readable summary on stdout")
        if out:
            p.add_argument("--out", required=True)
        return p

    p = common(sub.add_parser("gen", help="generate a unit test signal"))
    p.add_argument("--kind", choices=("capricep", "sweep", "mls", "tone"), required=True)
    p.add_argument("--sample-rate", type=int, default=44100)
    p.add_argument("--format", choices=sorted(tio.WAV_FORMATS), default="float32")
    _capricep_args(p)
    p.add_argument("--f-start", type=float, default=20.0)
    p.add_argument("--f-end", type=float, default=20000.0)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--law", choices=("logarithmic", "linear"), default="logarithmic")
    p.add_argument("--order", type=int, default=16)
    p.add_argument("--freq", type=float, default=1000.0)
    p.add_argument("--level-dbfs", type=float, default=-20.0)
    p.set_defaults(func=cmd_gen)

    p = common(sub.add_parser("compose", help="structured test signal + sidecar"))
    p.add_argument("--units", type=int, default=4)
    p.add_argument("--period", type=int, default=16384)
    p.add_argument("--repetitions", type=int, default=4)
    p.add_argument("--sample-rate", type=int, default=44100)
    p.add_argument("--format", choices=sorted(tio.WAV_FORMATS), default="float32")
    _capricep_args(p)
    p.set_defaults(func=cmd_compose)

    p = common(sub.add_parser("fieldsig", help="structured signal, 3 s silence, calibration tone"))
    p.add_argument("--stimulus", required=True, help="stimulus WAV (its sidecar is read) or sidecar JSON")
    p.add_argument("--tone-freq", type=float, default=1000.0)
    p.add_argument("--tone-level", type=float, default=-20.0)
    p.add_argument("--tone-duration", type=float, default=3.0)
    p.add_argument("--spl-db", type=float, default=None, help="operator-measured SPL of the tone")
    p.add_argument("--format", choices=sorted(tio.WAV_FORMATS), default="float32")
    p.set_defaults(func=cmd_fieldsig)

    p = common(sub.add_parser("simulate", help="pass a signal through a simulated channel"))
    p.add_argument("--input", required=True)
    p.add_argument("--config", help="channel config JSON (keys of SimulatedChannel, or 'room')")
    p.add_argument("--fir", help="FIR as a WAV file")
    p.add_argument("--room", action="store_true", help="synthesize a room IR")
    p.add_argument("--t60", type=float)
    p.add_argument("--direct-gain", type=float)
    p.add_argument("--tail-gain", type=float)
    p.add_argument("--ir-length", type=float, help="room IR length, seconds")
    p.add_argument("--direct-delay", type=float)
    p.add_argument("--nonlinearity", choices=("none", "cubic", "tanh"))
    p.add_argument("--nl-param", type=float)
    p.add_argument("--noise-rms", type=float)
    p.add_argument("--drift-depth", type=float)
    p.add_argument("--drift-period", type=float, default=1.0)
    p.add_argument("--format", choices=sorted(tio.WAV_FORMATS), default="float32")
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("measure", help="recording + stimulus sidecar -> decomposition"))
    p.add_argument("recording")
    p.add_argument("--sidecar", help="stimulus sidecar JSON (or the stimulus WAV)")
    p.add_argument("--floor-db", type=float, default=-60.0)
    p.add_argument("--shaping", choices=("flat", "smoothed_magnitude"), default="flat")
    p.add_argument("--smoothing", type=float, default=1.0 / 3.0)
    p.add_argument("--align", action="store_true", help="locate the onset by cross-correlation")
    p.add_argument("--ir-out", help="also write the LTI impulse response as WAV")
    p.set_defaults(func=cmd_measure)

    p = common(sub.add_parser("analyze", help="decomposition -> acoustic report + CSV curves"), out=False)
    p.add_argument("decomposition", nargs="?")
    p.add_argument("--out")
    p.add_argument("--dir", help="analyze every decomposition JSON in this directory")
    p.add_argument("--csv-dir")
    p.add_argument("--bands", choices=("octave", "third_octave"), default="octave")
    p.add_argument("--f-min", type=float, default=125.0)
    p.add_argument("--f-max", type=float, default=8000.0)
    p.add_argument("--source-distance", type=float, default=None)
    p.add_argument("--direct-window-ms", type=float, default=2.5)
    p.set_defaults(func=cmd_analyze)

    p = common(sub.add_parser("classify", help="report + metadata -> material class"), out=False)
    p.add_argument("report")
    p.add_argument("--meta", help="metadata JSON (MaterialMetadata fields)")
    p.add_argument("--source-distance", type=float, default=None)
    p.add_argument("--out", help="default: update the report in place")
    p.set_defaults(func=cmd_classify)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command in ("gen", "compose") and args.seed < 0:
            raise ConfigurationError("--seed must be >= 0")
        args.func(args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
