"""Short-time Fourier transform and its overlap-add inverse.

Defaults follow the processing grid used everywhere in this package:
2048-point FFT, 2048-sample periodic Hann window, hop 512 (75% overlap).
At that hop the squared-window overlap-add sum is the constant 1.5
(WINDOW_OVERLAP_ENERGY), which is what the inverse divides by.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.signal import check_NOLA
from scipy.signal.windows import hann

# Steady-state sum of squared periodic-Hann windows at hop = window/4.
WINDOW_OVERLAP_ENERGY = 1.5

_DUMP_MAGIC = b"CCSPGM01"
_DUMP_HEADER = "<8sIIIIIq"


@dataclass(frozen=True)
class StftParams:
    fft_size: int = 2048
    window_size: int = 2048
    hop: int = 512

    def __post_init__(self):
        if self.window_size > self.fft_size:
            raise ValueError("window_size must not exceed fft_size")
        if not 0 < self.hop <= self.window_size:
            raise ValueError("hop must satisfy 0 < hop <= window_size")
        if not check_NOLA(hann(self.window_size, sym=False), self.window_size,
                          self.window_size - self.hop):
            raise ValueError("window/hop pair fails the overlap-add condition")

    @property
    def bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def pad(self) -> int:
        return self.window_size // 2

    def window(self) -> np.ndarray:
        return hann(self.window_size, sym=False)

    def frame_count(self, n_samples: int) -> int:
        padded = n_samples + 2 * self.pad
        return 1 + (padded - self.window_size) // self.hop


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Complex TF grid indexed (frame, bin), one-sided spectrum."""

    cells: np.ndarray
    params: StftParams
    origin_offset: int = 0  # frames relative to the segment timeline

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.complex128)
        if cells.ndim != 2:
            raise ValueError(f"cells must be 2-D (frames, bins), got shape {cells.shape}")
        if cells.shape[1] != self.params.bins:
            raise ValueError(
                f"expected {self.params.bins} bins for fft_size {self.params.fft_size}, "
                f"got {cells.shape[1]}"
            )
        if not np.all(np.isfinite(cells)):
            raise ValueError("spectrogram cells must be finite")
        object.__setattr__(self, "cells", cells)

    @property
    def frames(self) -> int:
        return self.cells.shape[0]

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.cells)


def stft(clip, params: StftParams | None = None) -> Spectrogram:
    """Forward STFT with reflective center padding.

    The clip is padded by window_size/2 on both ends, so frame m is centered
    on sample m*hop and the frame count is
    1 + floor((len + 2*(window_size/2) - window_size) / hop).
    """
    params = params or StftParams()
    x = np.asarray(clip.samples if hasattr(clip, "samples") else clip, dtype=np.float64)
    if len(x) < 1:
        raise ValueError("clip must contain at least one sample")
    padded = np.pad(x, params.pad, mode="reflect")
    frames = np.lib.stride_tricks.sliding_window_view(padded, params.window_size)[::params.hop]
    cells = np.fft.rfft(frames * params.window(), n=params.fft_size, axis=1)
    return Spectrogram(cells, params)


def istft(spec: Spectrogram, params: StftParams | None = None,
          out_len: int | None = None) -> np.ndarray:
    """Weighted overlap-add inverse; returns float64 samples of length out_len.

    The analysis window is reused for synthesis and the result divided by the
    overlap-added squared window, which is exact wherever that sum is nonzero.
    """
    params = params or spec.params
    if params != spec.params:
        raise ValueError(f"params {params} incompatible with spectrogram params {spec.params}")
    w = params.window()
    frames = np.fft.irfft(spec.cells, n=params.fft_size, axis=1)[:, :params.window_size] * w
    n_frames = frames.shape[0]
    total = (n_frames - 1) * params.hop + params.window_size
    out = np.zeros(total)
    den = np.zeros(total)
    wsq = w * w
    for m in range(n_frames):
        start = m * params.hop
        out[start:start + params.window_size] += frames[m]
        den[start:start + params.window_size] += wsq
    out /= np.maximum(den, 1e-12)
    out = out[params.pad:]
    if out_len is None:
        out_len = total - 2 * params.pad
    if len(out) < out_len:
        out = np.pad(out, (0, out_len - len(out)))
    return out[:out_len]


def window_overlap_energy(params: StftParams | None = None) -> np.ndarray:
    """Steady-state sum of squared shifted windows, one value per hop phase.

    For the default Hann/hop=window/4 pair every entry equals
    WINDOW_OVERLAP_ENERGY.
    """
    params = params or StftParams()
    wsq = params.window() ** 2
    return np.array([wsq[phase::params.hop].sum() for phase in range(params.hop)])


def save_spectrogram(path, spec: Spectrogram):
    """Dump a spectrogram in a flat binary layout for external cross-checks.

    Layout (little-endian): magic "CCSPGM01", then u32 frames, u32 bins,
    u32 fft_size, u32 window_size, u32 hop, i64 origin_offset, then
    frames*bins complex64 values row-major (frame-major).
    """
    p = spec.params
    header = struct.pack(_DUMP_HEADER, _DUMP_MAGIC, spec.frames, p.bins,
                         p.fft_size, p.window_size, p.hop, spec.origin_offset)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(spec.cells.astype(np.complex64)).tobytes())


def load_spectrogram(path) -> Spectrogram:
    with open(path, "rb") as fh:
        raw = fh.read(struct.calcsize(_DUMP_HEADER))
        magic, frames, bins, fft_size, window_size, hop, origin = struct.unpack(_DUMP_HEADER, raw)
        if magic != _DUMP_MAGIC:
            raise ValueError(f"not a spectrogram dump (magic {magic!r})")
        cells = np.frombuffer(fh.read(frames * bins * 8), dtype="<c8").reshape(frames, bins)
    params = StftParams(fft_size=fft_size, window_size=window_size, hop=hop)
    return Spectrogram(cells.astype(np.complex128), params, origin_offset=origin)
