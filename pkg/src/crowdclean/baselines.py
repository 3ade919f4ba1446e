"""Comparison methods: sample-wise mean, per-cell median magnitude, and
maximum-component elimination. The two spectral baselines keep the phase
of the average signal and only replace its magnitude."""

from __future__ import annotations

import numpy as np

from .audio import AudioClip
from .spectral import StftParams, Spectrogram, stft, istft


def _check_aligned(clips) -> int:
    if not clips:
        raise ValueError("need at least one clip")
    n = len(clips[0])
    rate = clips[0].sample_rate
    for c in clips[1:]:
        if len(c) != n:
            raise ValueError(f"length mismatch: {len(c)} vs {n}")
        if c.sample_rate != rate:
            raise ValueError("sample rate mismatch")
    return n


def baseline_mean(clips: list[AudioClip]) -> AudioClip:
    """Sample-wise arithmetic mean of aligned clips."""
    _check_aligned(clips)
    out = np.mean(np.stack([c.samples for c in clips]), axis=0)
    return AudioClip(out, clips[0].sample_rate, "mean")


def rephase_to_average(target_mag: np.ndarray, avg_cells: np.ndarray) -> np.ndarray:
    """Give target magnitudes the phase of the average signal's cells;
    cells where the average has zero magnitude come out zero."""
    mag_avg = np.abs(avg_cells)
    out = np.zeros_like(avg_cells)
    nz = mag_avg > 0
    out[nz] = target_mag[nz] * (avg_cells[nz] / mag_avg[nz])
    return out


def median_magnitude_cells(cells_list: list[np.ndarray], avg_cells: np.ndarray) -> np.ndarray:
    """Per-cell median input magnitude on the average signal's phase."""
    mags = np.stack([np.abs(c) for c in cells_list])
    return rephase_to_average(np.median(mags, axis=0), avg_cells)


def max_elim_cells(cells_list: list[np.ndarray], avg_cells: np.ndarray) -> np.ndarray:
    """Per-cell mean of the k-1 smallest input magnitudes (one maximal value
    removed, ties dropping a single instance) on the average signal's phase."""
    if len(cells_list) < 2:
        raise ValueError("max elimination needs at least 2 clips")
    mags = np.sort(np.stack([np.abs(c) for c in cells_list]), axis=0)
    target = mags[:-1].sum(axis=0) / (len(cells_list) - 1)
    return rephase_to_average(target, avg_cells)


def baseline_median(clips: list[AudioClip], params: StftParams | None = None) -> AudioClip:
    n = _check_aligned(clips)
    params = params or StftParams()
    avg = baseline_mean(clips)
    cells = [stft(c, params).cells for c in clips]
    out_cells = median_magnitude_cells(cells, stft(avg, params).cells)
    out = istft(Spectrogram(out_cells, params), params, out_len=n)
    return AudioClip(out, clips[0].sample_rate, "median")


def baseline_max_elim(clips: list[AudioClip], params: StftParams | None = None) -> AudioClip:
    n = _check_aligned(clips)
    if len(clips) < 2:
        raise ValueError("max elimination needs at least 2 clips")
    params = params or StftParams()
    avg = baseline_mean(clips)
    cells = [stft(c, params).cells for c in clips]
    out_cells = max_elim_cells(cells, stft(avg, params).cells)
    out = istft(Spectrogram(out_cells, params), params, out_len=n)
    return AudioClip(out, clips[0].sample_rate, "max-elim")
