"""Log-spectral distance between a reference and an estimated spectrogram."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PairingError, ValidationError
from .stft import Spectrogram

__all__ = ["DEFAULT_FLOOR", "LsdResult", "lsd", "summarize"]

DEFAULT_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class LsdResult:
    utterance_lsd_db: float
    per_frame_lsd_db: np.ndarray
    frames_used: int


def lsd(spec_ref: Spectrogram, spec_est: Spectrogram, floor: float = DEFAULT_FLOOR) -> LsdResult:
    """Log-spectral distance in dB.

    Per frame, the RMS over all ``K/2+1`` bins of the difference of
    ``20*log10(|X| + floor)``; the utterance score is the mean over all
    frames, silent ones included.
    """
    if not floor > 0:
        raise ValidationError(f"floor must be positive, got {floor}")
    if spec_ref.config != spec_est.config or spec_ref.shape != spec_est.shape:
        raise PairingError(
            f"cannot compare spectrograms of shape {spec_ref.shape} and {spec_est.shape}"
        )
    ref_db = 20.0 * np.log10(np.abs(spec_ref.coefficients) + floor)
    est_db = 20.0 * np.log10(np.abs(spec_est.coefficients) + floor)
    per_frame = np.sqrt(np.mean((ref_db - est_db) ** 2, axis=1))
    return LsdResult(float(np.mean(per_frame)), per_frame, per_frame.size)


def summarize(values) -> dict[str, float]:
    """Box-plot statistics (count, mean, median, quartiles, extremes)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return {"count": 0}
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {
        "count": int(v.size),
        "mean": float(v.mean()),
        "std": float(v.std()),
        "min": float(v.min()),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "max": float(v.max()),
    }
