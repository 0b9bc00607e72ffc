"""Command-line interface.

Exit codes for detect/compare are pipeline-friendly: 0 = clean,
10 = forgery detected, 1 = error. All other commands use 0/1.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .audio_io import AudioBuffer, load_wav, pre_emphasize, save_wav
from .config import Config, load_config_file
from .constellation import find_peaks
from .forgery_lab import ATTACK_KINDS, AttackSpec, ForgerySpec, apply_attack, make_forgery, run_benchmark
from .matcher import compare, detect, report_to_json
from .probability import sweep_curves, write_curves_csv
from .spectrogram import stft

EXIT_CLEAN = 0
EXIT_ERROR = 1
EXIT_FORGERY = 10

# CLI flag -> Config field
_OVERRIDE_FLAGS = {
    "sr": "sample_rate_hz",
    "fft": "fft_size",
    "hop": "hop",
    "window": "window",
    "alpha": "pre_emphasis",
    "fanout": "fan_out",
    "k": "k",
    "theta": "theta",
    "seed": "seed",
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="key = value config file")
    parser.add_argument("--print-config", action="store_true",
                        help="print the effective configuration and exit")
    parser.add_argument("--sr", type=int, help="sample rate (Hz)")
    parser.add_argument("--fft", type=int, help="FFT size (samples)")
    parser.add_argument("--hop", type=int, help="hop size (samples)")
    parser.add_argument("--window", choices=("hann", "hamming", "rect"))
    parser.add_argument("--alpha", type=float, help="pre-emphasis coefficient")
    parser.add_argument("--fanout", type=int, help="satellites per anchor")
    parser.add_argument("--k", type=int, help="min shared members (exclusive)")
    parser.add_argument("--theta", type=float, help="correlation threshold")
    parser.add_argument("--seed", type=int, help="seed for stochastic commands")


def _effective_config(args) -> Config:
    cfg = Config()
    if getattr(args, "config", None):
        cfg = load_config_file(args.config, base=cfg)
    changes = {}
    for flag, field in _OVERRIDE_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            changes[field] = value
    if changes:
        cfg = cfg.replace(**changes)
    return cfg.validate()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="audiocmf",
        description="Blind audio copy-move forgery detection and localization.",
    )
    parser.add_argument("--config", metavar="FILE", help="key = value config file")
    parser.add_argument("--print-config", action="store_true",
                        help="print the effective configuration and exit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("detect", help="search one recording for copy-move forgeries")
    _add_common(p)
    p.add_argument("input", help="WAV file to analyze")
    p.add_argument("--json", metavar="FILE", help="write the full report as JSON")
    p.add_argument("--plot", metavar="FILE", help="render the annotated spectrogram")

    p = sub.add_parser("compare", help="search for duplicated content across two recordings")
    _add_common(p)
    p.add_argument("input_a")
    p.add_argument("input_b")
    p.add_argument("--json", metavar="FILE")
    p.add_argument("--plot", metavar="FILE")

    p = sub.add_parser("forge", help="create a ground-truth copy-move forgery")
    _add_common(p)
    p.add_argument("input")
    p.add_argument("--src", type=float, required=True, help="source start (s)")
    p.add_argument("--dur", type=float, required=True, help="copied duration (s)")
    p.add_argument("--dst", type=float, required=True, help="destination start (s)")
    p.add_argument("--crossfade", type=float, help="crossfade (ms), default from config")
    p.add_argument("--out", required=True, help="output WAV")

    p = sub.add_parser("attack", help="apply a post-processing attack")
    _add_common(p)
    p.add_argument("input")
    p.add_argument("--kind", required=True, choices=ATTACK_KINDS)
    p.add_argument("--snr", type=float, default=20.0, help="SNR in dB (noise/mix kinds)")
    p.add_argument("--ratio", type=float, default=0.9, help="resample ratio")
    p.add_argument("--cutoff", type=float, default=3400.0, help="lowpass cutoff (Hz)")
    p.add_argument("--jitter", type=int, default=4, help="max jitter samples per block")
    p.add_argument("--crop", type=float, nargs=2, metavar=("START", "END"),
                   help="crop bounds (s)")
    p.add_argument("--interference", help="WAV mixed in for speech-mix/music-mix")
    p.add_argument("--out", required=True, help="output WAV")

    p = sub.add_parser("curves", help="detection-probability curve families")
    _add_common(p)
    p.add_argument("--csv", required=True, metavar="FILE")
    p.add_argument("--plot", metavar="FILE")
    p.add_argument("--trials", type=int, default=0,
                   help="Monte-Carlo trials per grid point (0 = analytic only)")
    p.add_argument("--density", type=float, default=30.0, help="peak density K (1/s)")
    p.add_argument("--steps", type=int, default=51, help="points on the p grid")

    p = sub.add_parser("bench", help="TPR/FPR benchmark over a WAV corpus")
    _add_common(p)
    p.add_argument("corpus", help="directory of WAV files")
    p.add_argument("--csv", required=True, metavar="FILE")
    p.add_argument("--dur", type=float, action="append",
                   help="forgery duration (s); repeatable; default 0.5")
    p.add_argument("--kind", choices=ATTACK_KINDS, help="optional attack on forged files")
    p.add_argument("--snr", type=float, default=20.0)
    p.add_argument("--ratio", type=float, default=0.9)
    p.add_argument("--cutoff", type=float, default=3400.0)
    p.add_argument("--jitter", type=int, default=4)
    p.add_argument("--interference", help="WAV for mix attacks")
    return parser


def _print_segments(report) -> None:
    if not report.segments:
        print("verdict: clean")
        return
    print("verdict: copy-move forgery detected")
    print("  src_start  src_end  dst_start  dst_end   offset  pairs  mean_rho")
    for seg in report.segments:
        print(f"  {seg.src_start_s:9.4f} {seg.src_end_s:8.4f} "
              f"{seg.dst_start_s:10.4f} {seg.dst_end_s:8.4f} "
              f"{seg.offset_s:8.4f} {seg.pair_count:6d} {seg.mean_rho:9.4f}")


def _maybe_plot(args, cfg: Config, buf, report, show_dst: bool = True) -> None:
    if not getattr(args, "plot", None):
        return
    from .plotting import save_detection_figure

    params = cfg.to_params()
    spec = stft(pre_emphasize(buf, params.pre_emphasis), params.stft)
    peaks = find_peaks(spec, params.peaks)
    save_detection_figure(spec, peaks, report, args.plot, show_dst=show_dst)
    print(f"figure written to {args.plot}")


def _cmd_detect(args) -> int:
    cfg = _effective_config(args)
    buf = load_wav(args.input, cfg.sample_rate_hz)
    report = detect(buf, cfg.to_params())
    _print_segments(report)
    d = report.diagnostics
    print(f"peaks={d['peak_count']} landmarks={d['landmark_count']} "
          f"tensors={d['tensor_count']} candidates={d['candidate_pairs']} "
          f"confirmed={d['confirmed_pairs']}")
    if args.json:
        Path(args.json).write_text(report_to_json(report))
        print(f"report written to {args.json}")
    _maybe_plot(args, cfg, buf, report)
    return EXIT_FORGERY if report.verdict else EXIT_CLEAN


def _cmd_compare(args) -> int:
    cfg = _effective_config(args)
    buf_a = load_wav(args.input_a, cfg.sample_rate_hz)
    buf_b = load_wav(args.input_b, cfg.sample_rate_hz)
    report = compare(buf_a, buf_b, cfg.to_params())
    if report.diagnostics.get("identical_input"):
        print("identical input: the two files decode to the same samples")
        if args.json:
            Path(args.json).write_text(report_to_json(report))
        return EXIT_CLEAN
    _print_segments(report)
    if args.json:
        Path(args.json).write_text(report_to_json(report))
        print(f"report written to {args.json}")
    _maybe_plot(args, cfg, buf_a, report, show_dst=False)
    return EXIT_FORGERY if report.verdict else EXIT_CLEAN


def _cmd_forge(args) -> int:
    cfg = _effective_config(args)
    buf = load_wav(args.input, cfg.sample_rate_hz)
    crossfade = cfg.crossfade_ms if args.crossfade is None else args.crossfade
    spec = ForgerySpec(src_start_s=args.src, duration_s=args.dur,
                       dst_start_s=args.dst, crossfade_ms=crossfade)
    forged, truth = make_forgery(buf, spec)
    save_wav(forged, args.out)
    print(f"forged file written to {args.out}")
    print(f"truth: src_start={truth.src_start} dst_start={truth.dst_start} "
          f"length={truth.length} offset_s={truth.offset_samples / truth.sample_rate_hz:.4f}")
    return EXIT_CLEAN


def _cmd_attack(args) -> int:
    cfg = _effective_config(args)
    buf = load_wav(args.input, cfg.sample_rate_hz)
    atk = AttackSpec(
        kind=args.kind,
        snr_db=args.snr,
        resample_ratio=args.ratio,
        cutoff_hz=args.cutoff,
        jitter_max_samples=args.jitter,
        crop_bounds_s=tuple(args.crop) if args.crop else (0.0, buf.duration_s),
        interference_path=args.interference,
    )
    attacked = apply_attack(buf, atk, seed=cfg.seed)
    peak = float(np.max(np.abs(attacked.samples)))
    if peak > 1.0:  # keep WAV in range without altering relative levels
        attacked = AudioBuffer(samples=attacked.samples / peak,
                               sample_rate_hz=attacked.sample_rate_hz,
                               source_path=attacked.source_path)
    save_wav(attacked, args.out)
    print(f"attacked file written to {args.out} ({atk.kind}, {atk.param_label()})")
    return EXIT_CLEAN


def _cmd_curves(args) -> int:
    cfg = _effective_config(args)
    p_values = np.linspace(0.0, 1.0, args.steps)
    rows = sweep_curves(p_values, fan_out=cfg.fan_out, ks=(2, 3),
                        peak_density=args.density, mc_trials=args.trials,
                        seed=cfg.seed)
    write_curves_csv(rows, args.csv)
    print(f"curves written to {args.csv} ({len(rows)} rows)")
    if args.plot:
        from .plotting import save_curves_figure

        save_curves_figure(rows, args.plot)
        print(f"figure written to {args.plot}")
    return EXIT_CLEAN


def _cmd_bench(args) -> int:
    cfg = _effective_config(args)
    attack = None
    if args.kind:
        attack = AttackSpec(kind=args.kind, snr_db=args.snr,
                            resample_ratio=args.ratio, cutoff_hz=args.cutoff,
                            jitter_max_samples=args.jitter,
                            interference_path=args.interference)
    summary = run_benchmark(
        args.corpus,
        durations=tuple(args.dur) if args.dur else (0.5,),
        attacks=(None,) if attack is None else (attack,),
        out_csv=args.csv,
        params=cfg.to_params(),
        seed=cfg.seed,
        crossfade_ms=cfg.crossfade_ms,
        sample_rate_hz=cfg.sample_rate_hz,
    )
    if summary["n_files"] == 0:
        print("error: no WAV files in corpus", file=sys.stderr)
        return EXIT_ERROR
    if summary["skipped"] and summary["n_files"] == len(summary["skipped"]):
        print("error: every corpus file failed to load", file=sys.stderr)
        return EXIT_ERROR
    tpr = "n/a" if summary["tpr"] is None else f"{summary['tpr']:.3f}"
    fpr = "n/a" if summary["fpr"] is None else f"{summary['fpr']:.3f}"
    print(f"bench written to {args.csv}: files={summary['n_files']} "
          f"TPR={tpr} FPR={fpr}")
    return EXIT_CLEAN


_COMMANDS = {
    "detect": _cmd_detect,
    "compare": _cmd_compare,
    "forge": _cmd_forge,
    "attack": _cmd_attack,
    "curves": _cmd_curves,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "print_config", False):
            cfg = _effective_config(args) if args.command else (
                load_config_file(args.config).validate() if args.config
                else Config().validate()
            )
            sys.stdout.write(cfg.to_text())
            return EXIT_CLEAN
        if not args.command:
            parser.print_help()
            return EXIT_ERROR
        return _COMMANDS[args.command](args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
