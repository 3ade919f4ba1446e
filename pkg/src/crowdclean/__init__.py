"""Crowdsourced audio enhancement.

Align independent recordings of one event, normalize their gains, and
remove per-recording local noise by median-based time-frequency outlier
filtering, plus the baselines, mixture synthesis, and metrics needed to
benchmark the method.
"""

__version__ = "0.1.0"

from .audio import AudioClip, AudioFormatError, load_wav, resample, save_wav, to_mono
from .spectral import Spectrogram, StftParams, istft, stft
from .align import (AlignConfig, AlignmentError, AlignmentResult, Timeline,
                    TimelineEntry, align_all, detect_peaks, estimate_gain,
                    fingerprint, hash_peaks, match_offsets)
from .enhance import (EnhanceConfig, Segment, aggregate, apply_outlier_filter,
                      cell_median, enhance_segment, enhance_timeline,
                      fallback_empty_cells, initial_mask, median_grid,
                      relax_neighborhood, segment_timeline)
from .baselines import baseline_max_elim, baseline_mean, baseline_median
from .synth import MixSpec, noise_gain, power_peak, synthesize_mixture
from .metrics import EvalReport, aggregate_trials, si_snr, snr
