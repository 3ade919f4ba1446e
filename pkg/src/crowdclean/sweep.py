"""Monte-Carlo benchmark grid: mixture synthesis, every method, SI-SNR.

A sweep is described by a plain key=value config file so published runs
can be repeated with one command. Every cell of the grid derives its RNG
from (seed, snr point index, trial), which makes results independent of
worker scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .audio import AudioClip, load_wav, resample
from .baselines import baseline_max_elim, baseline_mean, baseline_median
from .enhance import EnhanceConfig, enhance_segment
from .metrics import aggregate_trials, si_snr
from .synth import MixSpec, synthesize_mixture

METHODS = ("mean", "median", "max-elim", "ours")

CSV_COLUMNS = ("method", "snr_db", "k", "trial", "si_snr")


class SweepRow(NamedTuple):
    method: str
    snr_db: float
    k: int
    trial: int
    si_snr: float


@dataclass
class SweepConfig:
    sources: list[Path]
    noises: list[Path]
    snr_db: list[float]
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    trials: int = 20
    k: int = 5
    seed: int = 0
    rate: int = 16000
    tau: float = 1.0
    packet_loss_sec: float = 0.0
    dither: bool = False
    duration_sec: float | None = None

    def __post_init__(self):
        if not self.sources or not self.noises:
            raise ValueError("sweep needs at least one source and one noise file")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}; choose from {METHODS}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


def parse_sweep_config(path) -> SweepConfig:
    """Read a key = value sweep description; lists are comma separated,
    paths are relative to the config file."""
    path = Path(path)
    base = path.parent
    raw: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        raw[key.strip().lower()] = value.strip()

    def paths(key_single, key_plural):
        value = raw.pop(key_plural, raw.pop(key_single, ""))
        return [base / p.strip() for p in value.split(",") if p.strip()]

    def floats(key, default=""):
        return [float(v) for v in raw.pop(key, default).split(",") if v.strip()]

    duration = raw.pop("duration_sec", None)
    cfg = SweepConfig(
        sources=paths("source", "sources"),
        noises=paths("noise", "noises"),
        snr_db=floats("snr_db"),
        methods=[m.strip() for m in raw.pop("methods", ",".join(METHODS)).split(",") if m.strip()],
        trials=int(raw.pop("trials", 20)),
        k=int(raw.pop("k", 5)),
        seed=int(raw.pop("seed", 0)),
        rate=int(raw.pop("rate", 16000)),
        tau=float(raw.pop("tau", 1.0)),
        packet_loss_sec=float(raw.pop("packet_loss_sec", 0.0)),
        dither=raw.pop("dither", "false").lower() in ("1", "true", "yes"),
        duration_sec=float(duration) if duration else None,
    )
    if raw:
        raise ValueError(f"{path}: unknown keys {sorted(raw)}")
    if not cfg.snr_db:
        raise ValueError(f"{path}: snr_db grid is empty")
    return cfg


def apply_method(method: str, clips: list[AudioClip], cfg: EnhanceConfig) -> AudioClip:
    """Run one enhancement method on pre-aligned, gain-matched clips."""
    if method == "mean":
        return baseline_mean(clips)
    if method == "median":
        return baseline_median(clips, cfg.stft)
    if method == "max-elim":
        return baseline_max_elim(clips, cfg.stft)
    if method == "ours":
        return enhance_segment(clips, cfg)
    raise ValueError(f"unknown method {method!r}")


def _trim(clip: AudioClip, n: int) -> AudioClip:
    return clip if len(clip) <= n else AudioClip(clip.samples[:n], clip.sample_rate, clip.label)


def synthesize_trial(sources: list[AudioClip], noises: list[AudioClip],
                     cfg: SweepConfig, pt_idx: int, trial: int) -> tuple[AudioClip, list[AudioClip]]:
    """Deterministically draw source/noise material and mix one trial."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, pt_idx, trial]))
    source = sources[int(rng.integers(len(sources)))]
    picks = []
    for idx in rng.integers(0, len(noises), size=cfg.k):
        noise = noises[int(idx)]
        if len(noise) > len(source):
            start = int(rng.integers(0, len(noise) - len(source) + 1))
            noise = AudioClip(noise.samples[start:start + len(source)],
                              noise.sample_rate, noise.label)
        picks.append(noise)
    spec = MixSpec(snr_db=cfg.snr_db[pt_idx], k=cfg.k, tau=cfg.tau,
                   packet_loss_sec=cfg.packet_loss_sec, dither=cfg.dither,
                   seed=(cfg.seed, pt_idx, trial))
    channels, _ = synthesize_mixture(source, picks, spec)
    return source, channels


def run_sweep(cfg: SweepConfig, enhance_cfg: EnhanceConfig | None = None,
              workers: int | None = None) -> list[SweepRow]:
    """Run the full (snr x trial x method) grid; rows come back in
    deterministic (snr point, trial, method) order."""
    enhance_cfg = enhance_cfg or EnhanceConfig()
    if workers is None:
        workers = worker_count()
    sources = [resample(load_wav(p), cfg.rate) for p in cfg.sources]
    noises = [resample(load_wav(p), cfg.rate) for p in cfg.noises]
    if cfg.duration_sec is not None:
        limit = int(round(cfg.duration_sec * cfg.rate))
        sources = [_trim(s, limit) for s in sources]

    def run_cell(pt_idx: int, trial: int) -> list[SweepRow]:
        try:
            source, channels = synthesize_trial(sources, noises, cfg, pt_idx, trial)
            return [
                SweepRow(method, cfg.snr_db[pt_idx], cfg.k, trial,
                         si_snr(apply_method(method, channels, enhance_cfg), source))
                for method in cfg.methods
            ]
        except Exception as exc:
            raise RuntimeError(
                f"sweep cell failed (snr_db={cfg.snr_db[pt_idx]}, trial={trial}): {exc}"
            ) from exc

    cells = [(p, t) for p in range(len(cfg.snr_db)) for t in range(cfg.trials)]
    if workers <= 1:
        results = [run_cell(p, t) for p, t in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_cell, p, t) for p, t in cells]
            results = [f.result() for f in futures]
    return [row for rows in results for row in rows]


def worker_count() -> int:
    """Worker pool size: CROWDCLEAN_WORKERS env var, else up to 4 cores."""
    env = os.environ.get("CROWDCLEAN_WORKERS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def rows_to_csv(rows: list[SweepRow]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(f"{row.method},{row.snr_db:g},{row.k},{row.trial},{row.si_snr:.6f}")
    return "\n".join(lines) + "\n"


def summarize(rows: list[SweepRow], cfg: SweepConfig) -> dict:
    """Per (method, snr) mean and 95% CI, in config order."""
    points = []
    for method in cfg.methods:
        for snr_db in cfg.snr_db:
            values = [r.si_snr for r in rows if r.method == method and r.snr_db == snr_db]
            if not values:
                continue
            report = aggregate_trials(values)
            points.append({"method": method, "snr_db": snr_db, "k": cfg.k,
                           "trials": len(values), "mean_si_snr": report.mean,
                           "ci95": report.ci95})
    return {"seed": cfg.seed, "k": cfg.k, "trials": cfg.trials,
            "packet_loss_sec": cfg.packet_loss_sec, "points": points}
