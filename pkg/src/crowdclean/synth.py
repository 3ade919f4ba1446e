"""Synthetic benchmark inputs: duplicate a source to k channels, add
independent noises scaled to a target SNR, optionally drop a random
interval per channel to simulate packet loss.

The SNR convention is windowed-peak based: signal power is the sum of
squared per-window absolute peaks, window length tau (default 1 s, final
partial window included).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .audio import AudioClip

# Dither level used in place of pure silence when requested (-80 dBFS).
DITHER_DBFS = -80.0


@dataclass(frozen=True)
class MixSpec:
    snr_db: float
    k: int
    tau: float = 1.0
    packet_loss_sec: float = 0.0
    dither: bool = False
    seed: int | tuple = 0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.packet_loss_sec < 0:
            raise ValueError("packet_loss_sec must be nonnegative")


def power_peak(clip: AudioClip, tau: float = 1.0) -> float:
    """Sum of squared per-window absolute peaks over consecutive tau-second
    windows; the final partial window counts too."""
    if len(clip) == 0:
        raise ValueError("empty clip")
    if tau <= 0:
        raise ValueError("tau must be positive")
    win = int(round(tau * clip.sample_rate))
    win = max(win, 1)
    mags = np.abs(clip.samples)
    total = 0.0
    for start in range(0, len(mags), win):
        total += float(mags[start:start + win].max()) ** 2
    return total


def noise_gain(source: AudioClip, noise: AudioClip, snr_db: float, tau: float = 1.0) -> float:
    """Scale factor a such that the windowed-peak SNR of (source, a*noise)
    equals snr_db exactly: a = sqrt(P(S) / (10^(snr/10) * P(N)))."""
    p_noise = power_peak(noise, tau)
    if p_noise == 0.0:
        raise ValueError("noise has zero windowed-peak power")
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    p_source = power_peak(source, tau)
    return math.sqrt(p_source / (10.0 ** (snr_db / 10.0) * p_noise))


def fit_length(noise: AudioClip, n: int) -> AudioClip:
    """Loop or truncate a noise clip to exactly n samples."""
    if len(noise) == 0:
        raise ValueError("empty noise clip")
    if len(noise) >= n:
        samples = noise.samples[:n]
    else:
        reps = int(np.ceil(n / len(noise)))
        samples = np.tile(noise.samples, reps)[:n]
    return AudioClip(samples, noise.sample_rate, noise.label)


def synthesize_mixture(source: AudioClip, noises: list[AudioClip],
                       spec: MixSpec) -> tuple[list[AudioClip], list[dict]]:
    """Build k noisy channels: channel i = source + a_i * noise_i.

    Noises are looped/truncated to the source length first. When
    packet_loss_sec > 0, a uniformly random interval of that duration is
    silenced independently per channel (reproducible from spec.seed); with
    spec.dither the silence is replaced by -80 dBFS white Gaussian noise.

    Returns the channels and a per-channel manifest of
    {gain, loss_start_sec, loss_end_sec}.
    """
    if len(noises) != spec.k:
        raise ValueError(f"expected {spec.k} noises, got {len(noises)}")
    rate = source.sample_rate
    for n in noises:
        if n.sample_rate != rate:
            raise ValueError("noise sample rate differs from source")
    n_samples = len(source)
    loss_samples = int(round(spec.packet_loss_sec * rate))
    if loss_samples > n_samples:
        raise ValueError("packet loss interval longer than the source")

    seed_entropy = spec.seed if isinstance(spec.seed, int) else list(spec.seed)
    children = np.random.SeedSequence(seed_entropy).spawn(spec.k)

    channels = []
    manifest = []
    for i, noise in enumerate(noises):
        noise = fit_length(noise, n_samples)
        a = noise_gain(source, noise, spec.snr_db, spec.tau)
        mixed = source.samples + a * noise.samples
        entry = {"gain": a, "loss_start_sec": None, "loss_end_sec": None}
        if loss_samples > 0:
            rng = np.random.default_rng(children[i])
            start = int(rng.integers(0, n_samples - loss_samples + 1))
            if spec.dither:
                sigma = 10.0 ** (DITHER_DBFS / 20.0)
                mixed[start:start + loss_samples] = sigma * rng.standard_normal(loss_samples)
            else:
                mixed[start:start + loss_samples] = 0.0
            entry["loss_start_sec"] = start / rate
            entry["loss_end_sec"] = (start + loss_samples) / rate
        channels.append(AudioClip(mixed, rate, f"{source.label}+{noise.label}#{i}"))
        manifest.append(entry)
    return channels, manifest
