"""Landmark-fingerprint alignment of independently captured clips.

Spectral peaks are paired into (f1, f2, dt) landmark hashes; hash
collisions between two clips vote for their relative frame offset, and
the matched peak magnitudes at the winning offset give the gain ratio
used to normalize levels.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.ndimage import maximum_filter

from .audio import AudioClip
from .spectral import StftParams, Spectrogram, stft

logger = logging.getLogger(__name__)

# Magnitudes are floored here before taking logs so silent cells stay finite.
LOG_FLOOR = 1e-12

# Landmark key packing widths: bin indices and frame deltas must fit 14 bits.
_KEY_BITS = 14


class Peak(NamedTuple):
    frame: int
    bin: int
    log_mag: float


class LandmarkHash(NamedTuple):
    key: int
    anchor_frame: int
    anchor_log_mag: float
    target_log_mag: float


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    offset_frames: int
    offset_seconds: float
    match_count: int
    matched_pairs: np.ndarray  # (match_count, 2) linear magnitudes (X, Y)
    confidence: float


@dataclass(frozen=True, eq=False)
class TimelineEntry:
    clip: AudioClip
    offset_seconds: float
    gain: float
    match_count: int = 0  # votes behind this placement (anchor: total over pairs)


@dataclass(eq=False)
class Timeline:
    """Aligned clips: per-entry start offset and gain, anchor gain is 1."""

    entries: list[TimelineEntry]
    anchor_index: int
    excluded: tuple[str, ...] = ()


@dataclass(frozen=True)
class AlignConfig:
    stft: StftParams = field(default_factory=StftParams)
    nbhd_t: int = 15           # peak neighborhood half-width, frames
    nbhd_f: int = 15           # peak neighborhood half-width, bins
    peak_percentile: float = 10.0
    peak_margin: float = 2.0   # added to the percentile, natural-log units
    fan_out: int = 15
    zone_min: int = 1          # target zone, frames
    zone_max: int = 200
    min_matches: int = 10      # below this a pairing is not trusted


class AlignmentError(RuntimeError):
    """No usable overlap between the given clips."""


def peak_threshold(spec: Spectrogram, percentile: float = 10.0,
                   margin: float = 2.0) -> float:
    """Default peak floor: a low percentile of the log-magnitudes plus a
    fixed margin."""
    log_mags = np.log(np.maximum(np.abs(spec.cells), LOG_FLOOR))
    return float(np.percentile(log_mags, percentile) + margin)


def detect_peaks(spec: Spectrogram, nbhd_t: int = 15, nbhd_f: int = 15,
                 min_log_mag: float | None = None) -> list[Peak]:
    """Cells that are strict log-magnitude maxima of their
    (2*nbhd_t+1) x (2*nbhd_f+1) neighborhood (clipped at edges) and exceed
    min_log_mag (None disables the floor). Sorted by (frame, bin)."""
    if nbhd_t < 1 or nbhd_f < 1:
        raise ValueError("neighborhood dimensions must be >= 1")
    log_mags = np.log(np.maximum(np.abs(spec.cells), LOG_FLOOR))
    floor = -np.inf if min_log_mag is None else min_log_mag
    window_max = maximum_filter(log_mags, size=(2 * nbhd_t + 1, 2 * nbhd_f + 1),
                                mode="constant", cval=-np.inf)
    candidates = (log_mags == window_max) & (log_mags > floor)
    n_frames, n_bins = log_mags.shape
    peaks = []
    for t, f in np.argwhere(candidates):
        window = log_mags[max(0, t - nbhd_t):min(n_frames, t + nbhd_t + 1),
                          max(0, f - nbhd_f):min(n_bins, f + nbhd_f + 1)]
        # a strict maximum is the only cell in its window at that value
        if np.count_nonzero(window == log_mags[t, f]) == 1:
            peaks.append(Peak(int(t), int(f), float(log_mags[t, f])))
    return peaks


def pack_key(f1: int, f2: int, dt: int) -> int:
    return (f1 << (2 * _KEY_BITS)) | (f2 << _KEY_BITS) | dt


def hash_peaks(peaks: list[Peak], fan_out: int = 15,
               target_zone: tuple[int, int] = (1, 200)) -> list[LandmarkHash]:
    """Pair each anchor peak with up to fan_out subsequent peaks whose frame
    delta lies inside the target zone; peaks must be sorted by frame."""
    zone_min, zone_max = target_zone
    if zone_max >= 1 << _KEY_BITS:
        raise ValueError(f"target zone max must be below {1 << _KEY_BITS}")
    hashes = []
    for i, anchor in enumerate(peaks):
        paired = 0
        for target in peaks[i + 1:]:
            dt = target.frame - anchor.frame
            if dt > zone_max:
                break  # peaks sorted by frame, no later match possible
            if dt < zone_min:
                continue
            hashes.append(LandmarkHash(pack_key(anchor.bin, target.bin, dt),
                                       anchor.frame, anchor.log_mag, target.log_mag))
            paired += 1
            if paired >= fan_out:
                break
    return hashes


def fingerprint(clip: AudioClip, cfg: AlignConfig | None = None) -> list[LandmarkHash]:
    """STFT, peak picking with the config's default floor, landmark hashing."""
    cfg = cfg or AlignConfig()
    spec = stft(clip, cfg.stft)
    floor = peak_threshold(spec, cfg.peak_percentile, cfg.peak_margin)
    peaks = detect_peaks(spec, cfg.nbhd_t, cfg.nbhd_f, floor)
    return hash_peaks(peaks, cfg.fan_out, (cfg.zone_min, cfg.zone_max))


def match_offsets(hashes_x: list[LandmarkHash], hashes_y: list[LandmarkHash],
                  frame_period: float) -> AlignmentResult:
    """Vote over key collisions for the modal frame offset
    anchor_frame_x - anchor_frame_y.

    Returns match_count 0 when nothing collides; ties on the vote count are
    broken toward the smallest |offset|. frame_period (hop/rate, seconds)
    converts the offset to seconds."""
    index_y = defaultdict(list)
    for h in hashes_y:
        index_y[h.key].append(h)
    votes = defaultdict(list)
    for hx in hashes_x:
        for hy in index_y.get(hx.key, ()):
            votes[hx.anchor_frame - hy.anchor_frame].append(
                (hx.anchor_log_mag, hy.anchor_log_mag))
    if not votes:
        return AlignmentResult(0, 0.0, 0, np.empty((0, 2)), 0.0)
    offset = min(votes, key=lambda d: (-len(votes[d]), abs(d), d))
    pairs = np.exp(np.asarray(votes[offset], dtype=np.float64))
    confidence = len(pairs) / min(len(hashes_x), len(hashes_y))
    return AlignmentResult(int(offset), offset * frame_period, len(pairs),
                           pairs, float(confidence))


def estimate_gain(matched_pairs) -> float:
    """Gain ratio sum(|P_X|) / sum(|P_Y|) over matched peak pairs: the factor
    that brings Y's level to X's."""
    pairs = np.asarray(matched_pairs, dtype=np.float64)
    if pairs.size == 0:
        raise ValueError("no matched pairs to estimate a gain from")
    num = float(pairs[:, 0].sum())
    den = float(pairs[:, 1].sum())
    if den <= 0.0:
        raise ValueError("matched pair magnitudes must be positive")
    return num / den


def _swap(result: AlignmentResult) -> AlignmentResult:
    return AlignmentResult(-result.offset_frames, -result.offset_seconds,
                           result.match_count, result.matched_pairs[:, ::-1],
                           result.confidence)


def align_all(clips: list[AudioClip], cfg: AlignConfig | None = None) -> Timeline:
    """Recover mutual offsets and gains for >= 2 clips.

    The clip with the most total hash matches becomes the anchor (offset 0,
    gain 1). Others are placed directly against the anchor when that pairing
    has at least min_matches votes, otherwise transitively through the
    best-connected already-placed clip. Unplaceable clips are excluded and
    reported on the timeline."""
    cfg = cfg or AlignConfig()
    if len(clips) < 2:
        raise ValueError("need at least 2 clips to align")
    rate = clips[0].sample_rate
    for c in clips[1:]:
        if c.sample_rate != rate:
            raise ValueError("clips must share one sample rate; resample first")
    frame_period = cfg.stft.hop / rate

    hashes = [fingerprint(c, cfg) for c in clips]
    n = len(clips)
    results: dict[tuple[int, int], AlignmentResult] = {}
    for i in range(n):
        for j in range(i + 1, n):
            r = match_offsets(hashes[i], hashes[j], frame_period)
            results[(i, j)] = r
            results[(j, i)] = _swap(r)

    totals = [sum(results[(i, j)].match_count for j in range(n) if j != i)
              for i in range(n)]
    anchor = int(np.argmax(totals))
    if not any(r.match_count >= cfg.min_matches for r in results.values()):
        raise AlignmentError("no common content detected")

    offsets = {anchor: 0.0}
    gains = {anchor: 1.0}
    counts = {anchor: totals[anchor]}
    for c in range(n):
        if c != anchor and results[(anchor, c)].match_count >= cfg.min_matches:
            r = results[(anchor, c)]
            offsets[c] = r.offset_seconds
            gains[c] = estimate_gain(r.matched_pairs)
            counts[c] = r.match_count
    while True:
        best = None
        for c in range(n):
            if c in offsets:
                continue
            for b in offsets:
                r = results[(b, c)]
                if r.match_count >= cfg.min_matches and \
                        (best is None or r.match_count > best[2].match_count):
                    best = (b, c, r)
        if best is None:
            break
        b, c, r = best
        offsets[c] = offsets[b] + r.offset_seconds
        gains[c] = gains[b] * estimate_gain(r.matched_pairs)
        counts[c] = r.match_count
        logger.info("placed %s through %s (%d matches)",
                    clips[c].label, clips[b].label, r.match_count)

    entries = []
    index_map = {}
    for i in range(n):
        if i in offsets:
            index_map[i] = len(entries)
            entries.append(TimelineEntry(clips[i], offsets[i], gains[i], counts[i]))
    excluded = tuple(clips[i].label for i in range(n) if i not in offsets)
    for label_ in excluded:
        logger.warning("excluded %s: not enough fingerprint matches", label_)
    return Timeline(entries, index_map[anchor], excluded)
