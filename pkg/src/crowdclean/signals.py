"""Deterministic generators for benchmark material.

These stand in for corpus audio when exercising the pipeline at desk
scale: a speech-like source (voiced harmonics through formant resonators
with a syllabic on/off envelope) and local noises that are either more
of the same "speech" or sparse impulsive transients.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter, sawtooth

from .audio import AudioClip


def _resonator(freq: float, bandwidth: float, rate: int):
    """Second-order all-pole resonance (formant-style peak)."""
    r = np.exp(-np.pi * bandwidth / rate)
    theta = 2 * np.pi * freq / rate
    return [1.0 - r], [1.0, -2.0 * r * np.cos(theta), r * r]


def _smooth(x: np.ndarray, width: int) -> np.ndarray:
    if width <= 1:
        return x
    kernel = np.hanning(width)
    return np.convolve(x, kernel / kernel.sum(), mode="same")


def _syllable_envelope(n: int, rate: int, rng: np.random.Generator) -> np.ndarray:
    """Alternating voiced/pause gate with ~10 ms raised-cosine edges."""
    env = np.zeros(n)
    pos = int(rng.integers(0, int(0.1 * rate) + 1))
    while pos < n:
        voiced = int(rng.uniform(0.08, 0.35) * rate)
        env[pos:pos + voiced] = 1.0
        pos += voiced + int(rng.uniform(0.04, 0.25) * rate)
    return _smooth(env, int(0.02 * rate))


def speech_like(duration: float, rate: int = 16000,
                rng: np.random.Generator | None = None,
                peak: float = 0.5, label: str = "speech") -> AudioClip:
    """Speech-like signal: pitch-drifting sawtooth source shaped by three
    random formant resonators, gated by a syllabic envelope, with a weak
    fricative noise component."""
    rng = rng or np.random.default_rng()
    n = int(round(duration * rate))
    f0 = rng.uniform(100.0, 220.0)
    drift = _smooth(rng.standard_normal(n), int(0.05 * rate))
    drift /= max(np.abs(drift).max(), 1e-12)
    inst_freq = f0 * (1.0 + 0.08 * drift)
    phase = 2 * np.pi * np.cumsum(inst_freq) / rate
    voiced = sawtooth(phase)
    for lo, hi in ((250.0, 850.0), (900.0, 2200.0), (2300.0, 3400.0)):
        b, a = _resonator(rng.uniform(lo, hi), rng.uniform(80.0, 200.0), rate)
        voiced = lfilter(b, a, voiced)
    voiced /= max(np.abs(voiced).max(), 1e-12)
    fric = rng.standard_normal(n)
    fric = fric - _smooth(fric, 9)  # crude high-pass
    fric *= _syllable_envelope(n, rate, rng)
    fric /= max(np.abs(fric).max(), 1e-12)
    x = _syllable_envelope(n, rate, rng) * voiced + 0.15 * fric
    x *= peak / max(np.abs(x).max(), 1e-12)
    return AudioClip(x, rate, label)


def impulsive_noise(duration: float, rate: int = 16000,
                    rng: np.random.Generator | None = None,
                    events_per_sec: float = 3.0, peak: float = 0.7,
                    label: str = "impulses") -> AudioClip:
    """Sparse transient noise (hammering/typing-like): Poisson-arriving
    exponentially decaying band-limited bursts."""
    rng = rng or np.random.default_rng()
    n = int(round(duration * rate))
    x = np.zeros(n)
    n_events = rng.poisson(events_per_sec * duration)
    for _ in range(max(n_events, 1)):
        start = int(rng.integers(0, n))
        length = int(rng.uniform(0.005, 0.08) * rate)
        length = min(length, n - start)
        if length <= 0:
            continue
        burst = rng.standard_normal(length)
        b, a = _resonator(rng.uniform(400.0, 6000.0), rng.uniform(300.0, 1500.0), rate)
        burst = lfilter(b, a, burst)
        burst *= np.exp(-np.arange(length) / (0.2 * length + 1))
        x[start:start + length] += rng.uniform(0.3, 1.0) * burst / max(np.abs(burst).max(), 1e-12)
    x *= peak / max(np.abs(x).max(), 1e-12)
    return AudioClip(x, rate, label)


def babble_noise(duration: float, rate: int = 16000,
                 rng: np.random.Generator | None = None,
                 peak: float = 0.6, label: str = "babble") -> AudioClip:
    """Competing-speech noise: two independent speech-like streams."""
    rng = rng or np.random.default_rng()
    a = speech_like(duration, rate, rng, peak=1.0)
    b = speech_like(duration, rate, rng, peak=1.0)
    x = a.samples + 0.8 * b.samples
    x *= peak / max(np.abs(x).max(), 1e-12)
    return AudioClip(x, rate, label)


# Pentatonic pitch set keeps random note stacks consonant-ish.
_SCALE_HZ = 220.0 * 2.0 ** (np.array([0, 2, 4, 7, 9, 12, 14, 16]) / 12.0)


def music_like(duration: float, rate: int = 16000,
               rng: np.random.Generator | None = None,
               tempo_bpm: float = 120.0, peak: float = 0.6,
               label: str = "music") -> AudioClip:
    """Music-like signal: plucked-style harmonic notes on an eighth-note
    grid with percussive hits, the kind of dense stable spectral landmarks
    live-show recordings carry."""
    rng = rng or np.random.default_rng()
    n = int(round(duration * rate))
    x = np.zeros(n)
    step = int(rate * 60.0 / tempo_bpm / 2.0)
    for start in range(0, n, step):
        for _ in range(int(rng.integers(1, 4))):  # small chord
            if rng.uniform() < 0.15:
                continue
            f0 = float(rng.choice(_SCALE_HZ)) * 2.0 ** float(rng.integers(-1, 2))
            length = min(int(rng.uniform(0.2, 0.6) * rate), n - start)
            t = np.arange(length) / rate
            note = np.zeros(length)
            for h in range(1, 6):
                if h * f0 < rate / 2:
                    note += np.sin(2 * np.pi * h * f0 * t + rng.uniform(0, 2 * np.pi)) / h
            note *= np.exp(-t / rng.uniform(0.1, 0.3))
            x[start:start + length] += rng.uniform(0.4, 1.0) * note
        if rng.uniform() < 0.5:  # percussive hit on the beat
            length = min(int(0.03 * rate), n - start)
            x[start:start + length] += (rng.uniform(0.2, 0.5) * rng.standard_normal(length)
                                        * np.exp(-np.arange(length) / (0.1 * length + 1)))
    x *= peak / max(np.abs(x).max(), 1e-12)
    return AudioClip(x, rate, label)
