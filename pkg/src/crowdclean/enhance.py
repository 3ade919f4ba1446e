"""Per-cell median outlier filtering of overlapping aligned clips.

For each time segment with a constant set of k overlapping clips, all k
spectrograms are compared against the per-cell median magnitude. Cells
whose magnitude is far above (factor lambda1) or far below (factor
lambda2) the median are removed, removal spreads into neighboring cells
that exceed a relaxed threshold gamma, and cells left with no surviving
clip are re-decided with the upper threshold alone. The output cell is
the average of the surviving complex values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import binary_dilation, label

from .audio import AudioClip
from .align import Timeline
from .spectral import StftParams, Spectrogram, stft, istft

PHASE_MODES = ("masked_complex_average", "all_signal_mean_phase")

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class EnhanceConfig:
    lambda1: float = 1.15      # upper outlier multiplier
    lambda2: float = 0.01      # lower outlier multiplier
    gamma: float = 1.1         # relaxed upper multiplier for neighborhood spread
    stft: StftParams = field(default_factory=StftParams)
    phase_mode: str = "masked_complex_average"
    crossfade: int | None = None  # samples; None means one window_size

    def __post_init__(self):
        if not self.lambda1 > 1:
            raise ValueError("lambda1 must exceed 1")
        if not 1 < self.gamma <= self.lambda1:
            raise ValueError("gamma must satisfy 1 < gamma <= lambda1")
        if not 0 <= self.lambda2 < 1:
            raise ValueError("lambda2 must lie in [0, 1)")
        if self.phase_mode not in PHASE_MODES:
            raise ValueError(f"phase_mode must be one of {PHASE_MODES}")
        if self.crossfade is None:
            object.__setattr__(self, "crossfade", self.stft.window_size)
        elif self.crossfade < 0:
            raise ValueError("crossfade must be nonnegative")


@dataclass(frozen=True)
class Segment:
    """Maximal interval of the timeline covered by a constant clip set."""

    start: float   # seconds
    end: float
    members: tuple[int, ...]  # indices into the timeline's entries

    def __post_init__(self):
        if not self.end > self.start:
            raise ValueError("segment must have positive length")
        if not self.members:
            raise ValueError("segment must have at least one member")


def cell_median(values) -> float:
    """Median of k magnitudes; even k averages the two middle values."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 1:
        raise ValueError("need at least one value")
    return float(np.median(values))


def median_grid(cells_list: list[np.ndarray]) -> np.ndarray:
    """Per-cell median magnitude across clips."""
    return np.median(np.stack([np.abs(c) for c in cells_list]), axis=0)


def initial_mask(cells_list: list[np.ndarray], median: np.ndarray,
                 cfg: EnhanceConfig) -> list[np.ndarray]:
    """Clear cells strictly above lambda1*median or strictly below
    lambda2*median; returns one uint8 grid per clip (1 = kept)."""
    upper = cfg.lambda1 * median
    lower = cfg.lambda2 * median
    masks = []
    for cells in cells_list:
        mags = np.abs(cells)
        cleared = (mags > upper) | (mags < lower)
        masks.append((~cleared).astype(np.uint8))
    return masks


def relax_neighborhood(masks: list[np.ndarray], cells_list: list[np.ndarray],
                       median: np.ndarray, cfg: EnhanceConfig) -> list[np.ndarray]:
    """Spread removals into 8-neighborhoods: any neighbor of a cleared cell
    whose magnitude exceeds gamma*median is cleared too, repeated to a
    fixpoint. Each clip's mask evolves independently.

    The fixpoint equals the set of initially cleared cells plus every
    connected component of {|Y| > gamma*median} that touches a cleared cell
    or its 8-neighborhood, which is what is computed here in one pass.
    """
    threshold = cfg.gamma * median
    out = []
    for mask, cells in zip(masks, cells_list):
        seeds = mask == 0
        if not seeds.any():
            out.append(mask.copy())
            continue
        hot = np.abs(cells) > threshold
        reach = binary_dilation(seeds, structure=_EIGHT_CONNECTED)
        components, _ = label(hot, structure=_EIGHT_CONNECTED)
        hit = np.unique(components[reach & hot])
        cleared = seeds | (np.isin(components, hit[hit > 0]) & hot)
        out.append((~cleared).astype(np.uint8))
    return out


def fallback_empty_cells(masks: list[np.ndarray], cells_list: list[np.ndarray],
                         median: np.ndarray, cfg: EnhanceConfig) -> list[np.ndarray]:
    """Wherever every clip's bit is cleared, re-decide that cell with the
    upper threshold only."""
    total = np.zeros_like(masks[0], dtype=np.int64)
    for mask in masks:
        total += mask
    empty = total == 0
    if not empty.any():
        return [m.copy() for m in masks]
    upper = cfg.lambda1 * median
    out = []
    for mask, cells in zip(masks, cells_list):
        mask = mask.copy()
        mask[empty] = (np.abs(cells)[empty] <= upper[empty]).astype(np.uint8)
        out.append(mask)
    return out


def aggregate(cells_list: list[np.ndarray], masks: list[np.ndarray],
              cfg: EnhanceConfig) -> np.ndarray:
    """Combine surviving cells into one grid.

    masked_complex_average: complex mean of the survivors.
    all_signal_mean_phase: mean surviving magnitude on the circular-mean
    phase of all clips' unit vectors (zero-magnitude cells contribute no
    phase).
    """
    den = np.zeros(cells_list[0].shape, dtype=np.float64)
    if cfg.phase_mode == "masked_complex_average":
        num = np.zeros(cells_list[0].shape, dtype=np.complex128)
        for cells, mask in zip(cells_list, masks):
            num += cells * mask
            den += mask
        if (den == 0).any():
            raise RuntimeError("cell with zero survivors; fallback should prevent this")
        return num / den
    num_mag = np.zeros(cells_list[0].shape, dtype=np.float64)
    unit_sum = np.zeros(cells_list[0].shape, dtype=np.complex128)
    for cells, mask in zip(cells_list, masks):
        mags = np.abs(cells)
        num_mag += mags * mask
        den += mask
        nz = mags > 0
        contrib = np.zeros_like(cells)
        contrib[nz] = cells[nz] / mags[nz]
        unit_sum += contrib
    if (den == 0).any():
        raise RuntimeError("cell with zero survivors; fallback should prevent this")
    return (num_mag / den) * np.exp(1j * np.angle(unit_sum))


def apply_outlier_filter(cells_list: list[np.ndarray],
                         cfg: EnhanceConfig) -> tuple[np.ndarray, list[np.ndarray]]:
    """Full grid pipeline: median, threshold masks, neighborhood relaxation,
    empty-cell fallback, aggregation. Returns the fused grid and the final
    per-clip masks."""
    median = median_grid(cells_list)
    masks = initial_mask(cells_list, median, cfg)
    masks = relax_neighborhood(masks, cells_list, median, cfg)
    masks = fallback_empty_cells(masks, cells_list, median, cfg)
    return aggregate(cells_list, masks, cfg), masks


def enhance_segment(clips: list[AudioClip], cfg: EnhanceConfig | None = None) -> AudioClip:
    """Filter one time segment of k sample-aligned, equal-length clips."""
    cfg = cfg or EnhanceConfig()
    if not clips:
        raise ValueError("need at least one clip")
    n = len(clips[0])
    rate = clips[0].sample_rate
    for c in clips[1:]:
        if len(c) != n:
            raise ValueError(f"length mismatch: {len(c)} vs {n}")
        if c.sample_rate != rate:
            raise ValueError("sample rate mismatch")
    if len(clips) == 1:
        return AudioClip(clips[0].samples, rate, clips[0].label)
    cells_list = [stft(c, cfg.stft).cells for c in clips]
    fused, _ = apply_outlier_filter(cells_list, cfg)
    out = istft(Spectrogram(fused, cfg.stft), cfg.stft, out_len=n)
    return AudioClip(out, rate, "enhanced")


def segment_timeline(timeline: Timeline) -> list[Segment]:
    """Split the aligned timeline into maximal intervals with a constant
    member set by sweeping all clip start/end boundaries. Intervals covered
    by no clip (coverage gaps) are omitted."""
    if not timeline.entries:
        raise ValueError("timeline has no entries")
    rate = timeline.entries[0].clip.sample_rate
    for e in timeline.entries:
        if e.clip.sample_rate != rate:
            raise ValueError("timeline clips must share one sample rate")
    spans = []
    for e in timeline.entries:
        start = int(round(e.offset_seconds * rate))
        spans.append((start, start + len(e.clip)))
    boundaries = sorted({s for span in spans for s in span})
    segments = []
    for a, b in zip(boundaries, boundaries[1:]):
        members = tuple(i for i, (s, e) in enumerate(spans) if s <= a and e >= b)
        if members:
            segments.append(Segment(a / rate, b / rate, members))
    return segments


def enhance_timeline(timeline: Timeline, cfg: EnhanceConfig | None = None) -> AudioClip:
    """Enhance a whole aligned timeline: apply per-clip gains, filter each
    constant-coverage segment, and stitch segments with a linear crossfade.

    Segment slices are extended by up to crossfade/2 samples into
    neighboring segments where all members keep covering, so adjacent
    enhanced chunks overlap and can be mixed without clicks. Coverage gaps
    come out as silence."""
    cfg = cfg or EnhanceConfig()
    if not timeline.entries:
        raise ValueError("timeline has no entries")
    rate = timeline.entries[0].clip.sample_rate
    scaled = [e.gain * e.clip.samples for e in timeline.entries]
    spans = []
    for e in timeline.entries:
        start = int(round(e.offset_seconds * rate))
        spans.append((start, start + len(e.clip)))
    origin = min(s for s, _ in spans)
    total = max(e for _, e in spans) - origin

    out = np.zeros(total)
    written_until = None  # global sample index up to which out holds audio
    half = cfg.crossfade // 2
    for seg in segment_timeline(timeline):
        s = int(round(seg.start * rate))
        e = int(round(seg.end * rate))
        left = min(half, s - max(spans[i][0] for i in seg.members))
        right = min(half, min(spans[i][1] for i in seg.members) - e)
        a, b = s - left, e + right
        chunk_clips = [
            AudioClip(scaled[i][a - spans[i][0]:b - spans[i][0]],
                      rate, timeline.entries[i].clip.label)
            for i in seg.members
        ]
        chunk = enhance_segment(chunk_clips, cfg).samples
        lo, hi = a - origin, b - origin
        if written_until is None or lo >= written_until:
            out[lo:hi] = chunk
        else:
            ov = min(written_until, hi) - lo
            w = np.arange(1, ov + 1) / (ov + 1)
            out[lo:lo + ov] = out[lo:lo + ov] * (1 - w) + chunk[:ov] * w
            out[lo + ov:hi] = chunk[ov:]
        written_until = hi if written_until is None else max(written_until, hi)
    return AudioClip(out, rate, "enhanced")


def save_mask_pgm(path, mask: np.ndarray):
    """Write a mask grid as binary PGM for visual inspection: 0 = removed,
    255 = kept. Columns are frames, rows are bins with low frequencies at
    the bottom."""
    image = (np.asarray(mask).T[::-1] != 0).astype(np.uint8) * 255
    height, width = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(image.tobytes())
