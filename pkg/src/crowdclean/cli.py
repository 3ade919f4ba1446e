"""Command-line front door: enhance, align, mix, baseline, eval, sweep."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path


from . import __version__
from .align import AlignConfig, AlignmentError, Timeline, TimelineEntry, align_all
from .audio import AudioClip, AudioFormatError, load_wav, resample, save_wav
from .enhance import PHASE_MODES, EnhanceConfig, enhance_timeline
from .metrics import si_snr, snr
from .spectral import StftParams
from .sweep import (METHODS, apply_method, parse_sweep_config, rows_to_csv,
                    run_sweep, summarize, worker_count)
from .synth import MixSpec, synthesize_mixture

logger = logging.getLogger(__name__)


def _add_stft_args(p: argparse.ArgumentParser):
    p.add_argument("--fft-size", type=int, default=2048, help="FFT length")
    p.add_argument("--window-size", type=int, default=2048, help="analysis window length")
    p.add_argument("--hop", type=int, default=512, help="hop between frames")


def _add_enhance_args(p: argparse.ArgumentParser):
    _add_stft_args(p)
    p.add_argument("--lambda1", type=float, default=1.15,
                   help="upper outlier multiplier on the cell median")
    p.add_argument("--lambda2", type=float, default=0.01,
                   help="lower outlier multiplier on the cell median")
    p.add_argument("--gamma", type=float, default=1.1,
                   help="relaxed upper multiplier for neighborhood spreading")
    p.add_argument("--phase-mode", choices=PHASE_MODES, default=PHASE_MODES[0],
                   help="how the fused cell phase is formed")
    p.add_argument("--crossfade", type=int, default=None,
                   help="crossfade samples between segments (default: one window)")


def _add_align_args(p: argparse.ArgumentParser):
    p.add_argument("--peak-nbhd-t", type=int, default=15, help="peak neighborhood, frames")
    p.add_argument("--peak-nbhd-f", type=int, default=15, help="peak neighborhood, bins")
    p.add_argument("--fan-out", type=int, default=15, help="hash pairs per anchor peak")
    p.add_argument("--zone-min", type=int, default=1, help="target zone minimum, frames")
    p.add_argument("--zone-max", type=int, default=200, help="target zone maximum, frames")
    p.add_argument("--min-matches", type=int, default=10,
                   help="votes needed to trust a pairwise offset")


def _stft_params(args) -> StftParams:
    return StftParams(fft_size=args.fft_size, window_size=args.window_size, hop=args.hop)


def _enhance_config(args) -> EnhanceConfig:
    return EnhanceConfig(lambda1=args.lambda1, lambda2=args.lambda2, gamma=args.gamma,
                         stft=_stft_params(args), phase_mode=args.phase_mode,
                         crossfade=args.crossfade)


def _align_config(args) -> AlignConfig:
    return AlignConfig(stft=_stft_params(args), nbhd_t=args.peak_nbhd_t,
                       nbhd_f=args.peak_nbhd_f, fan_out=args.fan_out,
                       zone_min=args.zone_min, zone_max=args.zone_max,
                       min_matches=args.min_matches)


def _load_inputs(paths, rate) -> list[AudioClip]:
    return [resample(load_wav(p), rate) for p in paths]


def _timeline_report(timeline: Timeline) -> dict:
    clips = [{"label": e.clip.label, "offset_seconds": e.offset_seconds,
              "gain": e.gain, "match_count": e.match_count, "excluded": False}
             for e in timeline.entries]
    clips += [{"label": label, "offset_seconds": None, "gain": None,
               "match_count": 0, "excluded": True} for label in timeline.excluded]
    return {"anchor": timeline.entries[timeline.anchor_index].clip.label, "clips": clips}


def _identity_timeline(clips) -> Timeline:
    entries = [TimelineEntry(c, 0.0, 1.0) for c in clips]
    return Timeline(entries, 0)


def cmd_enhance(args) -> int:
    clips = _load_inputs(args.inputs, args.rate)
    if len(clips) == 1:
        logger.warning("single input: writing a gain-normalized passthrough")
        timeline = _identity_timeline(clips)
    elif args.skip_align:
        timeline = _identity_timeline(clips)
    else:
        timeline = align_all(clips, _align_config(args))
    report = _timeline_report(timeline)
    print(json.dumps(report, indent=2))
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2) + "\n")
    out = enhance_timeline(timeline, _enhance_config(args))
    save_wav(args.output, out, format=args.format, normalize=args.normalize)
    logger.info("wrote %s (%.2f s)", args.output, out.duration)
    return 0


def cmd_align(args) -> int:
    clips = _load_inputs(args.inputs, args.rate)
    timeline = align_all(clips, _align_config(args))
    report = _timeline_report(timeline)
    text = json.dumps(report, indent=2)
    print(text)
    if args.json:
        Path(args.json).write_text(text + "\n")
    return 0


def cmd_mix(args) -> int:
    source = resample(load_wav(args.source), args.rate)
    noise_files = args.noise
    noises = [resample(load_wav(noise_files[i % len(noise_files)]), args.rate)
              for i in range(args.k)]
    spec = MixSpec(snr_db=args.snr_db, k=args.k, tau=args.tau,
                   packet_loss_sec=args.packet_loss_sec, dither=args.dither,
                   seed=args.seed)
    channels, manifest = synthesize_mixture(source, noises, spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, (channel, entry) in enumerate(zip(channels, manifest)):
        path = out_dir / f"channel_{i:02d}.wav"
        save_wav(path, channel, format=args.format, normalize=args.normalize)
        entries.append({"path": path.name, "gain": entry["gain"],
                        "loss_start_sec": entry["loss_start_sec"],
                        "loss_end_sec": entry["loss_end_sec"]})
    manifest_doc = {"snr_db": args.snr_db, "tau": args.tau, "seed": args.seed,
                    "k": args.k, "packet_loss_sec": args.packet_loss_sec,
                    "dither": args.dither, "channels": entries}
    (out_dir / "manifest.json").write_text(json.dumps(manifest_doc, indent=2) + "\n")
    logger.info("wrote %d channels to %s", len(channels), out_dir)
    return 0


def cmd_baseline(args) -> int:
    clips = _load_inputs(args.inputs, args.rate)
    out = apply_method(args.method, clips, _enhance_config(args))
    save_wav(args.output, out, format=args.format, normalize=args.normalize)
    return 0


def cmd_eval(args) -> int:
    ref = resample(load_wav(args.ref), args.rate)
    est = resample(load_wav(args.est), args.rate)
    n = min(len(ref), len(est))
    if len(ref) != len(est):
        logger.warning("length mismatch (%d vs %d); evaluating first %d samples",
                       len(ref), len(est), n)
        ref = AudioClip(ref.samples[:n], ref.sample_rate, ref.label)
        est = AudioClip(est.samples[:n], est.sample_rate, est.label)
    metric = si_snr if args.metric == "si-snr" else snr
    value = metric(est, ref)
    print(json.dumps({"metric": args.metric, "value": value}))
    return 0


def cmd_sweep(args) -> int:
    cfg = parse_sweep_config(args.config)
    if args.trials is not None:
        cfg.trials = args.trials
    if args.seed is not None:
        cfg.seed = args.seed
    workers = args.workers if args.workers is not None else worker_count()
    rows = run_sweep(cfg, _enhance_config(args), workers=workers)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "sweep.csv").write_text(rows_to_csv(rows))
    summary = summarize(rows, cfg)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    from .plotting import render_sweep_figure
    render_sweep_figure(summary, out_dir / "sweep.png")
    logger.info("wrote %s, %s, %s", out_dir / "sweep.csv",
                out_dir / "summary.json", out_dir / "sweep.png")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdclean",
        description="Crowdsourced audio enhancement: align independent noisy "
                    "recordings of one event and fuse them by median-based "
                    "time-frequency outlier filtering.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for info, -vv for debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("enhance", formatter_class=fmt,
                       help="align inputs and write the enhanced WAV")
    p.add_argument("inputs", nargs="+", help="input WAV files")
    p.add_argument("-o", "--output", required=True, help="output WAV path")
    p.add_argument("--skip-align", action="store_true",
                   help="treat inputs as already sample-aligned")
    p.add_argument("--rate", type=int, default=16000, help="working sample rate")
    p.add_argument("--report", default=None, help="also write the alignment report JSON here")
    p.add_argument("--format", choices=("float32", "pcm16"), default="float32")
    p.add_argument("--normalize", action="store_true",
                   help="peak-normalize before writing")
    _add_enhance_args(p)
    _add_align_args(p)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("align", formatter_class=fmt,
                       help="report offsets/gains without enhancing")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--rate", type=int, default=16000, help="working sample rate")
    p.add_argument("--json", default=None, help="write the JSON report here too")
    _add_stft_args(p)
    _add_align_args(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("mix", formatter_class=fmt,
                       help="synthesize k noisy channels from a source")
    p.add_argument("--source", required=True)
    p.add_argument("--noise", action="append", required=True,
                   help="noise WAV; repeat for independent noises (cycled to k)")
    p.add_argument("--snr-db", type=float, required=True, help="target windowed-peak SNR")
    p.add_argument("--k", type=int, default=5, help="channel count")
    p.add_argument("--tau", type=float, default=1.0, help="SNR peak window, seconds")
    p.add_argument("--packet-loss-sec", type=float, default=0.0,
                   help="silence interval per channel, seconds")
    p.add_argument("--dither", action="store_true",
                   help="fill loss intervals with -80 dBFS noise instead of silence")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rate", type=int, default=16000, help="working sample rate")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--format", choices=("float32", "pcm16"), default="float32")
    p.add_argument("--normalize", action="store_true")
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("baseline", formatter_class=fmt,
                       help="run one method on pre-aligned inputs")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--rate", type=int, default=16000, help="working sample rate")
    p.add_argument("--format", choices=("float32", "pcm16"), default="float32")
    p.add_argument("--normalize", action="store_true")
    _add_enhance_args(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("eval", formatter_class=fmt,
                       help="compare an estimate against a reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--metric", choices=("si-snr", "snr"), default="si-snr")
    p.add_argument("--rate", type=int, default=16000, help="working sample rate")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", formatter_class=fmt,
                       help="run a benchmark grid from a config file")
    p.add_argument("config", help="plain key=value sweep description")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--trials", type=int, default=None, help="override config trials")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--workers", type=int, default=None,
                   help="worker threads (default: CROWDCLEAN_WORKERS or cores, max 4)")
    _add_enhance_args(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (AudioFormatError, AlignmentError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
