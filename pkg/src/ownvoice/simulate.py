"""In-ear signal simulation from outer-microphone recordings.

A model identified on delayed in-ear signals predicts the *delayed* in-ear
signal.  :class:`SimulationConfig.compensate_delay` trims the first
``delay_samples`` samples to return to the physical in-ear timeline.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, PairingError
from .labels import UNLABELED, FrameLabels
from .rtf import RtfModel
from .stft import AudioClip, Spectrogram, StftConfig, analyze, synthesize

__all__ = [
    "DEFAULT_DELAY",
    "SimulationConfig",
    "SimulationResult",
    "apply_prediction_delay",
    "apply_speech_independent",
    "apply_speech_dependent",
    "simulate_inear",
]

DEFAULT_DELAY = 11


@dataclass(frozen=True)
class SimulationConfig:
    cfg: StftConfig = field(default_factory=StftConfig)
    delay_samples: int = DEFAULT_DELAY
    compensate_delay: bool = False

    def __post_init__(self):
        if self.delay_samples < 0:
            raise ConfigError(f"delay_samples must be >= 0, got {self.delay_samples}")

    @classmethod
    def for_model(cls, model: RtfModel, compensate_delay: bool = False) -> "SimulationConfig":
        return cls(model.cfg, model.delay_samples, compensate_delay)


@dataclass(frozen=True, eq=False)
class SimulationResult:
    clip: AudioClip
    mode: str
    num_frames: int
    fallback_frames: int
    warnings: tuple[str, ...] = ()


def apply_prediction_delay(clip: AudioClip, delay: int) -> AudioClip:
    """Delay by `delay` samples, zero-filling the start and keeping the length."""
    if delay < 0:
        raise ConfigError(f"delay must be >= 0, got {delay}")
    x = clip.samples
    out = np.zeros_like(x)
    if delay < x.size:
        out[delay:] = x[: x.size - delay]
    return AudioClip(out, clip.sample_rate_hz)


def apply_speech_independent(spec: Spectrogram, H: np.ndarray) -> Spectrogram:
    """Multiply every frame bin-wise by `H`."""
    H = np.asarray(H)
    if H.shape != (spec.num_bins,):
        raise PairingError(f"RTF has shape {H.shape}, spectrogram has {spec.num_bins} bins")
    return Spectrogram(spec.coefficients * H, spec.config)


def apply_speech_dependent(
    spec: Spectrogram, labels: FrameLabels, model: RtfModel
) -> tuple[Spectrogram, int]:
    """Filter frame ``l`` with the RTF of class ``labels[l]``.

    Unlabeled frames and frames whose class has no RTF in the model use the
    global RTF.  Returns the filtered spectrogram and the number of such
    fallback frames.
    """
    if len(labels) != spec.num_frames:
        raise PairingError(f"{len(labels)} labels for {spec.num_frames} frames")
    if labels.num_classes != model.num_classes:
        raise PairingError(
            f"labels use {labels.num_classes} classes, model has {model.num_classes}"
        )
    if spec.num_bins != model.cfg.num_bins:
        raise PairingError(f"model has {model.cfg.num_bins} bins, spectrogram {spec.num_bins}")
    table, fallback = model.rtf_table()
    lab = labels.labels
    rows = np.where(lab == UNLABELED, model.num_classes, lab)
    n_fallback = int(np.count_nonzero(lab == UNLABELED)) + int(
        np.count_nonzero(fallback[lab[lab != UNLABELED]])
    )
    return Spectrogram(spec.coefficients * table[rows], spec.config), n_fallback


def simulate_inear(
    clip_outer: AudioClip,
    labels: FrameLabels | None,
    model: RtfModel,
    sim_cfg: SimulationConfig | None = None,
    mode: str = "dependent",
) -> SimulationResult:
    """Predict the in-ear signal for an outer-microphone clip.

    ``mode="dependent"`` filters frame-wise by phoneme label; without labels
    it degrades to the global RTF and records a warning.
    ``mode="independent"`` always uses the global RTF.  The output keeps the
    input length (samples past the last full frame are zero) unless delay
    compensation removes the first ``delay_samples`` samples.
    """
    if mode not in ("dependent", "independent"):
        raise ConfigError(f"mode must be 'dependent' or 'independent', got {mode!r}")
    sim_cfg = sim_cfg or SimulationConfig.for_model(model)
    if sim_cfg.cfg != model.cfg:
        raise ConfigError(f"simulation configuration {sim_cfg.cfg} differs from model {model.cfg}")
    if clip_outer.sample_rate_hz != model.cfg.sample_rate_hz:
        raise ConfigError(
            f"clip sample rate {clip_outer.sample_rate_hz} Hz differs from model "
            f"{model.cfg.sample_rate_hz} Hz"
        )
    spec = analyze(clip_outer, model.cfg)
    notes: list[str] = []
    if mode == "dependent" and labels is None:
        msg = "no phoneme labels; falling back to speech-independent filtering"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
        mode = "independent"
    if mode == "dependent":
        out_spec, n_fallback = apply_speech_dependent(spec, labels, model)
    else:
        out_spec = apply_speech_independent(spec, model.global_rtf)
        n_fallback = spec.num_frames

    y = np.zeros(len(clip_outer))
    s = synthesize(out_spec).samples
    y[: s.size] = s
    if sim_cfg.compensate_delay:
        y = y[sim_cfg.delay_samples :]
    if y.size == 0:
        raise ConfigError("delay compensation removed every sample")
    return SimulationResult(
        clip=AudioClip(y, clip_outer.sample_rate_hz),
        mode=mode,
        num_frames=spec.num_frames,
        fallback_frames=n_fallback,
        warnings=tuple(notes),
    )
