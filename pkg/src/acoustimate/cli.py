"""Command-line surface: generation, safeguarding, simulation, measurement.

Subcommands::

    generate         write a periodic test signal (structured or swept) + sidecar
    safeguard        lift weak spectral bins of an arbitrary sound for measurement
    simulate         run a WAV through a simulated target system
    measure          estimate LTI / RTV / SDTI from a test + acquisition pair
    optimize-window  design a wrapped-sum-to-one truncation weighting
    report           re-emit CSV / SVG renderings from a saved JSON report

Every command is deterministic: identical flags and seeds give byte-identical
outputs. Exit codes: 0 success, 2 validation error, 3 estimation/runtime
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .audiofile import WAV_FORMATS, AudioFormatError, read_wav, write_wav
from .capricep import (
    GenerationError,
    HADAMARD4,
    MIX_GAINS,
    PHASE_SHAPES,
    StructuredTestSignal,
    gen_swept_sine,
    make_structured_signal,
    shape_spectrum,
)
from .estimator import (
    InsufficientDataError,
    SafeguardConfig,
    estimate_polarity_pair,
    estimate_simultaneous,
    estimate_with_repetitions,
    safeguard,
    safeguard_threshold,
)
from .plots import render_report
from .report import build_report, from_json, to_csv, to_json
from .signal_core import (
    PeriodicSignal,
    Signal,
    Spectrum,
    ZeroDenominatorError,
    bin_frequencies,
    dft,
    idft,
)
from .simulator import (
    DriftSpec,
    NoiseSpec,
    SimTarget,
    SimulationOverflowError,
    apply_target,
    synth_impulse_response,
)
from .windowing import max_sidelobe_db, optimize_weighting, periodic_weighting

SIDECAR_VERSION = 1
_DEFAULT_SAFEGUARD_PERIOD = 1 << 17


# ---------------------------------------------------------------------------
# sidecar + small helpers
# ---------------------------------------------------------------------------


def sidecar_path(wav_path) -> Path:
    return Path(wav_path).with_suffix(".json")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _parse_seeds(text: str) -> tuple[int, int, int]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"--seed needs three comma-separated integers, got {text!r}")
    return tuple(int(p) for p in parts)


def _load_spectrum_target(spec: str, period_len: int):
    if spec in ("flat", "pink"):
        return spec
    if spec.startswith("file:"):
        magnitude = np.loadtxt(spec[5:], dtype=float, ndmin=1)
        expected = period_len // 2 + 1
        if magnitude.size != expected:
            raise ValueError(
                f"custom spectrum needs {expected} one-sided magnitudes "
                f"for period {period_len}, file has {magnitude.size}"
            )
        return magnitude
    raise ValueError(f"--spectrum must be flat, pink or file:PATH, got {spec!r}")


def _safeguard_config(args) -> SafeguardConfig:
    return SafeguardConfig(
        relative_db=args.safeguard_rel_db,
        absolute_floor_db=args.safeguard_floor_db,
        low_freq_limit_hz=args.safeguard_lf_hz,
    )


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    N = args.period
    P = args.repetitions
    fs = float(args.sample_rate)
    seeds = _parse_seeds(args.seed)
    if args.kind == "structured":
        built = make_structured_signal(
            seeds, N, repetitions=P, sample_rate=fs, shape=args.shape
        )
        period = built.as_periodic
    else:
        period = gen_swept_sine(N, fs)

    target = _load_spectrum_target(args.spectrum, N)
    if isinstance(target, str) and target == "flat":
        # plain rescale: keeps every bin (DC included) exactly invertible
        samples = period.period * (0.9 / float(np.max(np.abs(period.period))))
    else:
        samples = shape_spectrum(period, target).period
    if args.negate:
        samples = -samples

    out = Path(args.out)
    write_wav(out, np.tile(samples, P + 1), fs, args.wav_format)
    _write_json(
        sidecar_path(out),
        {
            "format_version": SIDECAR_VERSION,
            "kind": args.kind,
            "period_len": N,
            "repetitions": P,
            "warmup_periods": 1,
            "seeds": list(seeds) if args.kind == "structured" else None,
            "shape": args.shape if args.kind == "structured" else None,
            "spectrum": args.spectrum,
            "sample_rate": fs,
            "polarity": -1 if args.negate else 1,
            "wav_format": args.wav_format,
        },
    )
    print(f"wrote {out} ({(P + 1) * N} samples) and {sidecar_path(out)}")
    return 0


def cmd_safeguard(args) -> int:
    audio = read_wav(args.input)
    n_in = len(audio)
    if args.period is not None:
        N = args.period
    elif n_in <= _DEFAULT_SAFEGUARD_PERIOD:
        N = _DEFAULT_SAFEGUARD_PERIOD
    else:
        N = 1 << (n_in - 1).bit_length()
    if N < n_in:
        raise ValueError(f"--period {N} is shorter than the input ({n_in} samples)")
    P = args.repetitions

    spectrum = dft(audio.samples, length=N, sample_rate=audio.sample_rate)
    config = _safeguard_config(args)
    theta = safeguard_threshold(spectrum, config=config)
    period = idft(safeguard(spectrum, theta))

    out = Path(args.out)
    write_wav(out, np.tile(period, P + 1), audio.sample_rate, args.wav_format)
    _write_json(
        sidecar_path(out),
        {
            "format_version": SIDECAR_VERSION,
            "kind": "safeguarded",
            "period_len": N,
            "repetitions": P,
            "warmup_periods": 1,
            "seeds": None,
            "shape": None,
            "spectrum": "safeguarded",
            "sample_rate": audio.sample_rate,
            "polarity": 1,
            "wav_format": args.wav_format,
        },
    )
    csv_path = out.with_name(out.stem + "_threshold.csv")
    freqs = bin_frequencies(N, audio.sample_rate)
    lines = ["freq_hz,threshold"]
    lines += [f"{freqs[k]:.12g},{theta[k]:.12g}" for k in range(freqs.size)]
    csv_path.write_text("\n".join(lines) + "\n")
    print(f"wrote {out}, {sidecar_path(out)} and {csv_path}")
    return 0


def _target_from_json(path) -> SimTarget:
    spec = json.loads(Path(path).read_text())
    ir_spec = spec.get("ir", [1.0])
    if isinstance(ir_spec, dict):
        ir = synth_impulse_response(
            seed=int(ir_spec["seed"]),
            decay_time=float(ir_spec["decay_time"]),
            sample_rate=float(ir_spec["sample_rate"]),
            length=int(ir_spec["length"]),
        )
    else:
        ir = np.asarray(ir_spec, dtype=float)
    noise = spec.get("noise", {})
    drift = spec.get("drift", {})
    return SimTarget(
        ir=ir,
        eps2=float(spec.get("eps2", 0.0)),
        eps3=float(spec.get("eps3", 0.0)),
        noise=NoiseSpec(
            kind=noise.get("kind", "white"), level=float(noise.get("level", 0.0))
        ),
        drift=DriftSpec(
            depth=float(drift.get("depth", 0.0)), rate=float(drift.get("rate", 0.0))
        ),
        seed=int(spec.get("seed", 0)),
    )


def cmd_simulate(args) -> int:
    audio = read_wav(args.input)
    target = _target_from_json(args.target)
    acquired = apply_target(target, audio)
    write_wav(args.out, acquired.samples, acquired.sample_rate, args.wav_format)
    print(f"wrote {args.out} ({len(acquired)} samples)")
    return 0


def _reference_with_safeguard(period: np.ndarray, fs: float, config: SafeguardConfig):
    """Return (reference period, safeguarded flag) for division use."""
    spectrum = Spectrum(np.fft.fft(period), fs)
    theta = safeguard_threshold(spectrum, config=config)
    half = period.size // 2 + 1
    if not np.any(np.abs(spectrum.bins[:half]) < theta):
        return period, False
    return idft(safeguard(spectrum, theta)), True


def cmd_measure(args) -> int:
    meta_path = sidecar_path(args.test)
    if not meta_path.exists():
        raise ValueError(f"missing sidecar {meta_path}; generate writes one")
    sidecar = json.loads(meta_path.read_text())
    N = int(sidecar["period_len"])
    warmup = int(sidecar.get("warmup_periods", 1))
    kind = sidecar.get("kind", "structured")
    if sidecar.get("polarity", 1) != 1:
        raise ValueError(
            "measure expects the positive-polarity test file; "
            "the negated recording goes to --acquired-negated"
        )

    test = read_wav(args.test)
    acquired = read_wav(args.acquired)
    if acquired.sample_rate != test.sample_rate:
        raise ValueError(
            f"sample rate mismatch: test {test.sample_rate}, "
            f"acquired {acquired.sample_rate}"
        )
    if len(test) < (warmup + 1) * N:
        raise ValueError("test file is shorter than warmup + one period")
    ref_period = test.samples[warmup * N : (warmup + 1) * N]
    discard = args.discard_head if args.discard_head is not None else warmup

    if kind == "safeguarded":
        # the file already holds the safeguarded signal that was played;
        # re-thresholding would shift the division reference away from it
        ref_used, was_safeguarded = ref_period, False
    else:
        ref_used, was_safeguarded = _reference_with_safeguard(
            ref_period, test.sample_rate, _safeguard_config(args)
        )

    metadata = {
        "kind": kind,
        "seeds": sidecar.get("seeds"),
        "shape": sidecar.get("shape"),
        "spectrum": sidecar.get("spectrum"),
        "discard_head": discard,
        "safeguarded_reference": was_safeguarded,
        "test_file": Path(args.test).name,
        "acquired_file": Path(args.acquired).name,
    }

    if kind == "structured":
        seeds = sidecar.get("seeds")
        signal = StructuredTestSignal(
            period=ref_used,
            sample_rate=test.sample_rate,
            unit_seeds=None if seeds is None else tuple(seeds),
            hadamard=HADAMARD4,
            mix_gains=MIX_GAINS,
            repetitions_built=int(sidecar.get("repetitions", 8)),
        )
        if args.acquired_negated is not None:
            neg = read_wav(args.acquired_negated)
            if neg.sample_rate != test.sample_rate:
                raise ValueError("negated acquisition sample rate mismatch")
            result = estimate_polarity_pair(
                signal, acquired, neg, discard_head=discard, threads=args.threads
            )
            metadata["negated_file"] = Path(args.acquired_negated).name
        else:
            result = estimate_simultaneous(
                signal, acquired, discard_head=discard, threads=args.threads
            )
    else:
        if args.acquired_negated is not None:
            raise ValueError("--acquired-negated applies to structured signals only")
        result = estimate_with_repetitions(
            PeriodicSignal(ref_used, test.sample_rate),
            acquired,
            discard_head=discard,
            threads=args.threads,
        )

    rpt = build_report(result, metadata=metadata)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    json_path = out.with_suffix(".json")
    json_path.write_text(to_json(rpt))
    written = [json_path]
    if args.format == "csv":
        csv_path = out.with_suffix(".csv")
        csv_path.write_text(to_csv(rpt))
        written.append(csv_path)
    written += render_report(rpt, out.parent, out.name)
    print("wrote " + ", ".join(str(p) for p in written))
    return 0


def cmd_optimize_window(args) -> int:
    coeffs = optimize_weighting(
        args.terms,
        period_len=args.period,
        span=args.span,
        budget=args.budget,
        n_starts=args.starts,
    )
    weighting = periodic_weighting(coeffs, args.period, args.span)
    payload = {
        "terms": args.terms,
        "span": args.span,
        "period_len": args.period,
        "coefficients": coeffs.tolist(),
        "max_sidelobe_db": max_sidelobe_db(weighting),
    }
    _write_json(Path(args.out), payload)
    print(f"wrote {args.out} (side lobe {payload['max_sidelobe_db']:.2f} dB)")
    return 0


def cmd_report(args) -> int:
    rpt = from_json(Path(args.input).read_text())
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    written = []
    if args.format == "csv":
        csv_path = out.with_suffix(".csv")
        csv_path.write_text(to_csv(rpt))
        written.append(csv_path)
    else:
        json_path = out.with_suffix(".json")
        json_path.write_text(to_json(rpt))
        written.append(json_path)
    written += render_report(rpt, out.parent, out.name)
    print("wrote " + ", ".join(str(p) for p in written))
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_safeguard_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--safeguard-rel-db", type=float, default=20.0,
                        help="threshold depth below the smoothed magnitude (dB)")
    parser.add_argument("--safeguard-floor-db", type=float, default=80.0,
                        help="absolute floor below the spectral peak (dB)")
    parser.add_argument("--safeguard-lf-hz", type=float, default=20.0,
                        help="below this frequency only the absolute floor applies")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acoustimate",
        description="Periodic test signals and simultaneous LTI/RTV/SDTI measurement.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a periodic test signal")
    gen.add_argument("--out", required=True, help="output WAV path")
    gen.add_argument("--kind", choices=("structured", "swept"), default="structured")
    gen.add_argument("--period", type=int, default=4096, help="period length N")
    gen.add_argument("--repetitions", type=int, default=8, help="period count P")
    gen.add_argument("--seed", default="1,2,3", help="three unit seeds S1,S2,S3")
    gen.add_argument("--shape", choices=PHASE_SHAPES, default="erf")
    gen.add_argument("--spectrum", default="flat", help="flat | pink | file:PATH")
    gen.add_argument("--sample-rate", type=float, default=44100.0)
    gen.add_argument("--wav-format", choices=WAV_FORMATS, default="float32")
    gen.add_argument("--negate", action="store_true",
                     help="emit the sign-flipped signal (for even-order detection)")
    gen.set_defaults(func=cmd_generate)

    safe = sub.add_parser("safeguard", help="make an arbitrary sound measurement-ready")
    safe.add_argument("input", help="mono WAV to safeguard")
    safe.add_argument("--out", required=True, help="output WAV path")
    safe.add_argument("--period", type=int, default=None,
                      help="period length (default 2^17, or next power of two)")
    safe.add_argument("--repetitions", type=int, default=8)
    safe.add_argument("--wav-format", choices=WAV_FORMATS, default="float32")
    _add_safeguard_flags(safe)
    safe.set_defaults(func=cmd_safeguard)

    sim = sub.add_parser("simulate", help="run a WAV through a simulated system")
    sim.add_argument("input", help="test signal WAV")
    sim.add_argument("--target", required=True, help="target description JSON")
    sim.add_argument("--out", required=True, help="acquired WAV path")
    sim.add_argument("--wav-format", choices=WAV_FORMATS, default="float32")
    sim.set_defaults(func=cmd_simulate)

    meas = sub.add_parser("measure", help="estimate LTI / RTV / SDTI components")
    meas.add_argument("test", help="test signal WAV (sidecar JSON alongside)")
    meas.add_argument("acquired", help="recorded response WAV")
    meas.add_argument("--acquired-negated", default=None,
                      help="response recorded with the negated test signal")
    meas.add_argument("--out", required=True, help="report path prefix")
    meas.add_argument("--format", choices=("json", "csv"), default="json")
    meas.add_argument("--discard-head", type=int, default=None,
                      help="leading periods to drop (default: sidecar warmup)")
    meas.add_argument("--threads", type=int, default=1)
    _add_safeguard_flags(meas)
    meas.set_defaults(func=cmd_measure)

    win = sub.add_parser("optimize-window", help="design a truncation weighting")
    win.add_argument("--terms", type=int, required=True, help="cosine terms k >= 2")
    win.add_argument("--period", type=int, default=256)
    win.add_argument("--span", type=int, default=2)
    win.add_argument("--budget", type=int, default=2000)
    win.add_argument("--starts", type=int, default=8)
    win.add_argument("--out", required=True, help="coefficients JSON path")
    win.set_defaults(func=cmd_optimize_window)

    rep = sub.add_parser("report", help="re-render a saved JSON report")
    rep.add_argument("input", help="report JSON file")
    rep.add_argument("--out", required=True, help="output path prefix")
    rep.add_argument("--format", choices=("json", "csv"), default="json")
    rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InsufficientDataError, ZeroDenominatorError) as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return 3
    except (GenerationError, SimulationOverflowError, RuntimeError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3
    except (AudioFormatError, ValueError, TypeError, KeyError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
