"""WAV loading/saving, mono conversion, and resampling.

Everything downstream operates on mono float64 clips; 32-bit floats and
integer PCM appear only at file boundaries.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

DEFAULT_RATE = 16000


class AudioFormatError(ValueError):
    """Raised when a file is not a WAV variant this pipeline reads."""


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono sample buffer with its sample rate.

    samples are float64 in nominal [-1, 1] range; processing stages may
    exceed that range, clipping is only a concern when writing PCM.
    """

    samples: np.ndarray
    sample_rate: int
    label: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"clip samples must be 1-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("clip samples must be finite")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


def _format_name(code: int) -> str:
    names = {1: "PCM", 3: "IEEE float", 6: "A-law", 7: "mu-law", 0xFFFE: "extensible"}
    return names.get(code, f"format code {code}")


def _probe_format(path) -> str:
    """Best-effort read of the fmt chunk, for error messages only."""
    try:
        with open(path, "rb") as fh:
            head = fh.read(12)
            if len(head) < 12 or head[:4] != b"RIFF" or head[8:12] != b"WAVE":
                return "not a RIFF/WAVE file"
            while True:
                chunk = fh.read(8)
                if len(chunk) < 8:
                    return "no fmt chunk found"
                cid, size = chunk[:4], struct.unpack("<I", chunk[4:])[0]
                if cid == b"fmt ":
                    body = fh.read(min(size, 16))
                    code, _, _, _, _, bits = struct.unpack("<HHIIHH", body[:16])
                    return f"{_format_name(code)}, {bits}-bit"
                fh.seek(size + (size & 1), 1)
    except OSError as exc:
        return f"unreadable ({exc})"


def to_mono(channels: np.ndarray) -> np.ndarray:
    """Average channels down to mono. (n,) passes through; (n, ch) is averaged."""
    channels = np.asarray(channels, dtype=np.float64)
    if channels.ndim == 1:
        return channels
    return channels.mean(axis=1)


def load_wav(path, label: str | None = None) -> AudioClip:
    """Load a RIFF/WAVE file as a mono float64 clip scaled to [-1, 1].

    Accepts PCM-16, PCM-24, PCM-32 and IEEE float-32/64, any channel count.
    Multi-channel audio is averaged to mono.
    """
    path = Path(path)
    if not path.exists():
        raise AudioFormatError(f"{path}: file does not exist")
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise AudioFormatError(
            f"{path}: unsupported WAV codec ({_probe_format(path)}): {exc}"
        ) from exc
    except OSError as exc:
        raise AudioFormatError(f"{path}: unreadable: {exc}") from exc

    if data.dtype == np.int16:
        samples = data / 32768.0
    elif data.dtype == np.int32:
        # scipy left-justifies 24-bit PCM into int32, so one scale covers both
        samples = data / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    else:
        raise AudioFormatError(f"{path}: unsupported sample type {data.dtype}")

    return AudioClip(to_mono(samples), int(rate), label if label is not None else path.stem)


def save_wav(path, clip: AudioClip, format: str = "float32", normalize: bool = False):
    """Write a clip as WAV, either 'pcm16' or 'float32'.

    pcm16 refuses samples outside [-1, 1] unless normalize=True, which
    peak-normalizes the whole clip first.
    """
    if len(clip) == 0:
        raise ValueError("refusing to write an empty clip")
    samples = clip.samples
    if normalize:
        peak = np.max(np.abs(samples))
        if peak > 0:
            samples = samples * (0.99 / peak)
    if format == "float32":
        wavfile.write(path, clip.sample_rate, samples.astype(np.float32))
    elif format == "pcm16":
        peak = np.max(np.abs(samples))
        if peak > 1.0:
            raise ValueError(
                f"pcm16 requires samples in [-1, 1] (peak {peak:.4g}); pass normalize=True"
            )
        quantized = np.clip(np.round(samples * 32768.0), -32768, 32767).astype(np.int16)
        wavfile.write(path, clip.sample_rate, quantized)
    else:
        raise ValueError(f"unknown format {format!r}, expected 'pcm16' or 'float32'")


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Band-limited (polyphase windowed-sinc) resampling to target_rate.

    Output length is round(len * target_rate / input_rate).
    """
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate == clip.sample_rate:
        return clip
    g = np.gcd(int(target_rate), clip.sample_rate)
    up, down = target_rate // g, clip.sample_rate // g
    out = resample_poly(clip.samples, up, down)
    n_out = int(round(len(clip) * target_rate / clip.sample_rate))
    if len(out) < n_out:
        out = np.pad(out, (0, n_out - len(out)))
    return AudioClip(out[:n_out], int(target_rate), clip.label)
