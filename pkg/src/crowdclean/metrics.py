"""Objective evaluation: SI-SNR, plain SNR, and trial aggregation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Reported instead of +inf when the error vector is (numerically) zero.
SNR_CAP_DB = 100.0


@dataclass
class EvalReport:
    """Per-trial metric values with mean and normal-approximation 95% CI."""

    values: list[float]
    mean: float
    ci95: float  # half-width, 1.96 * stderr
    metadata: dict = field(default_factory=dict)


def _as_vector(x) -> np.ndarray:
    return np.asarray(x.samples if hasattr(x, "samples") else x, dtype=np.float64)


def si_snr(estimate, reference) -> float:
    """Scale-invariant SNR in dB.

    Both signals are zero-meaned, the estimate is projected onto the
    reference, and the ratio of projection energy to residual energy is
    returned, clamped to +/-SNR_CAP_DB ((near-)perfect estimates report
    the cap, estimates with no component along the reference the floor).
    """
    est = _as_vector(estimate)
    ref = _as_vector(reference)
    if est.shape != ref.shape:
        raise ValueError(f"length mismatch: estimate {est.shape} vs reference {ref.shape}")
    est = est - est.mean()
    ref = ref - ref.mean()
    ref_energy = np.dot(ref, ref)
    if ref_energy == 0.0:
        raise ValueError("reference is zero after mean removal")
    target = (np.dot(est, ref) / ref_energy) * ref
    noise = est - target
    target_energy = np.dot(target, target)
    noise_energy = np.dot(noise, noise)
    if target_energy == 0.0:
        return -SNR_CAP_DB  # estimate has no component along the reference
    if noise_energy == 0.0:
        return SNR_CAP_DB
    return float(np.clip(10.0 * np.log10(target_energy / noise_energy),
                         -SNR_CAP_DB, SNR_CAP_DB))


def snr(estimate, reference) -> float:
    """Plain SNR in dB: reference energy over error energy, capped like si_snr."""
    est = _as_vector(estimate)
    ref = _as_vector(reference)
    if est.shape != ref.shape:
        raise ValueError(f"length mismatch: estimate {est.shape} vs reference {ref.shape}")
    ref_energy = np.dot(ref, ref)
    if ref_energy == 0.0:
        raise ValueError("reference is zero")
    err = est - ref
    err_energy = np.dot(err, err)
    if err_energy == 0.0 or 10.0 * np.log10(ref_energy / err_energy) > SNR_CAP_DB:
        return SNR_CAP_DB
    return float(10.0 * np.log10(ref_energy / err_energy))


def aggregate_trials(values, metadata: dict | None = None) -> EvalReport:
    """Mean and 95% CI half-width (1.96 * sample stddev / sqrt(n))."""
    values = [float(v) for v in values]
    if not values:
        raise ValueError("need at least one trial value")
    arr = np.asarray(values)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    ci95 = 1.96 * std / np.sqrt(len(arr))
    return EvalReport(values=values, mean=mean, ci95=float(ci95),
                      metadata=dict(metadata or {}))
