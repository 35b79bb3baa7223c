"""Short-time Fourier transform with square-root Hann analysis and synthesis.

Conventions
-----------
* Frame ``l`` covers samples ``[l*hop, l*hop + K)``; no leading padding, the
  trailing partial frame is dropped, so ``L = (N - K) // hop + 1``.
* The forward DFT is un-normalized (``numpy.fft.rfft``), the inverse carries
  the ``1/K`` factor (``numpy.fft.irfft``).  With this pair the spectral energy
  of a frame satisfies ``|X[0]|^2 + 2*sum(|X[1:K/2]|^2) + |X[K/2]|^2 = K *
  sum(frame**2)`` for the windowed frame.
* The window is the periodic Hann window under a square root, which makes the
  squared window sum to exactly one at hop ``K/2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, TooShortError, ValidationError

__all__ = [
    "StftConfig",
    "AudioClip",
    "Spectrogram",
    "sqrt_hann_window",
    "analyze",
    "synthesize",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StftConfig:
    """Framing parameters. Only 50 % overlap is supported."""

    frame_len: int = 256
    hop: int = 128
    sample_rate_hz: float = 5000.0

    def __post_init__(self):
        if int(self.frame_len) != self.frame_len or self.frame_len < 4 or self.frame_len % 2:
            raise ConfigError(f"frame_len must be an even integer >= 4, got {self.frame_len}")
        if self.hop != self.frame_len // 2:
            raise ConfigError(f"hop must equal frame_len/2 = {self.frame_len // 2}, got {self.hop}")
        if not self.sample_rate_hz > 0:
            raise ConfigError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "frame_len", int(self.frame_len))
        object.__setattr__(self, "hop", int(self.hop))

    @property
    def num_bins(self) -> int:
        return self.frame_len // 2 + 1

    def num_frames(self, num_samples: int) -> int:
        if num_samples < self.frame_len:
            return 0
        return (num_samples - self.frame_len) // self.hop + 1

    def bin_frequencies(self) -> np.ndarray:
        return np.arange(self.num_bins) * self.sample_rate_hz / self.frame_len


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono waveform stored as a read-only float64 array."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise ValidationError(f"AudioClip must be mono (1-D), got shape {x.shape}")
        if x.size < 1:
            raise ValidationError("AudioClip must contain at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValidationError("AudioClip samples must be finite")
        if not self.sample_rate_hz > 0:
            raise ValidationError(f"sample rate must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", _readonly(x))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Complex STFT grid of shape ``(L, K/2 + 1)``: frames along axis 0."""

    coefficients: np.ndarray
    config: StftConfig

    def __post_init__(self):
        Y = np.array(self.coefficients, dtype=np.complex128)
        if Y.ndim != 2 or Y.shape[1] != self.config.num_bins:
            raise ValidationError(
                f"expected coefficients of shape (L, {self.config.num_bins}), got {Y.shape}"
            )
        if Y.shape[0] < 1:
            raise ValidationError("Spectrogram needs at least one frame")
        if not np.all(np.isfinite(Y)):
            raise ValidationError("Spectrogram coefficients must be finite")
        object.__setattr__(self, "coefficients", _readonly(Y))

    @property
    def num_frames(self) -> int:
        return self.coefficients.shape[0]

    @property
    def num_bins(self) -> int:
        return self.coefficients.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.coefficients.shape


def sqrt_hann_window(K: int) -> np.ndarray:
    """Square root of the periodic Hann window of length `K`.

    >>> np.round(sqrt_hann_window(4) ** 2, 12)
    array([0. , 0.5, 1. , 0.5])
    """
    if int(K) != K or K < 4 or K % 2:
        raise ConfigError(f"window length must be an even integer >= 4, got {K}")
    n = np.arange(K)
    return np.sqrt(0.5 * (1.0 - np.cos(2.0 * np.pi * n / K)))


def _frames(x: np.ndarray, K: int, hop: int) -> np.ndarray:
    L = (x.size - K) // hop + 1
    return np.lib.stride_tricks.as_strided(
        x, shape=(L, K), strides=(hop * x.strides[0], x.strides[0]), writeable=False
    )


def analyze(clip: AudioClip, cfg: StftConfig) -> Spectrogram:
    """Forward STFT of `clip` under `cfg`."""
    if clip.sample_rate_hz != cfg.sample_rate_hz:
        raise ConfigError(
            f"clip sample rate {clip.sample_rate_hz} Hz does not match "
            f"configuration {cfg.sample_rate_hz} Hz"
        )
    K = cfg.frame_len
    if len(clip) < K:
        raise TooShortError(f"clip has {len(clip)} samples, fewer than frame_len={K}")
    x = np.ascontiguousarray(clip.samples)
    Y = np.fft.rfft(_frames(x, K, cfg.hop) * sqrt_hann_window(K), axis=1)
    return Spectrogram(Y, cfg)


def synthesize(spec: Spectrogram) -> AudioClip:
    """Weighted overlap-add inverse of :func:`analyze`.

    The output has ``(L - 1)*hop + K`` samples. Only the first and last
    ``hop`` samples lack a second overlapping frame and are therefore
    attenuated by the window.
    """
    cfg = spec.config
    K, hop = cfg.frame_len, cfg.hop
    frames = np.fft.irfft(spec.coefficients, n=K, axis=1) * sqrt_hann_window(K)
    L = frames.shape[0]
    out = np.zeros((L - 1) * hop + K)
    # hop == K/2: even frames tile the output without overlap, as do odd frames
    half = frames.reshape(L, 2, hop)
    out[: L * hop] += half[:, 0, :].reshape(-1)
    out[hop : (L + 1) * hop] += half[:, 1, :].reshape(-1)
    return AudioClip(out, cfg.sample_rate_hz)
