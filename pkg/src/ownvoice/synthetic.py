"""Synthetic paired recordings with known transfer behaviour.

Used by the test-suite and the demo scripts.  Two flavours are provided:

* spectrogram-level pairs, where the in-ear grid is *exactly* a per-bin
  (optionally per-class) product with the outer grid, and
* waveform corpora written to disk (WAV + label CSV + manifest), where the
  in-ear signal is the outer signal passed through a short FIR filter per
  class and advanced by a few samples, mimicking the earlier arrival of
  body-conducted sound.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Manifest, ManifestEntry, write_manifest, write_wav
from .labels import FrameLabels, LabelSegment, write_segments
from .stft import AudioClip, Spectrogram, StftConfig

__all__ = [
    "random_rtf",
    "random_spectrogram",
    "class_filtered",
    "speechlike",
    "TalkerFilters",
    "random_talker",
    "render_inear",
    "random_segments",
    "write_corpus",
]


def random_rtf(cfg: StftConfig, rng: np.random.Generator, taps: int = 8) -> np.ndarray:
    """Frequency response of a random short FIR filter on the STFT bins."""
    h = rng.standard_normal(taps) * np.exp(-np.arange(taps) / 3.0)
    return np.fft.rfft(h, n=cfg.frame_len)


def random_spectrogram(cfg: StftConfig, num_frames: int, rng: np.random.Generator) -> Spectrogram:
    """Circular complex Gaussian grid (every bin excited)."""
    shape = (num_frames, cfg.num_bins)
    return Spectrogram(rng.standard_normal(shape) + 1j * rng.standard_normal(shape), cfg)


def class_filtered(spec: Spectrogram, labels: FrameLabels, rtfs) -> Spectrogram:
    """In-ear grid with frame ``l`` equal to ``rtfs[labels[l]] * spec[l]``."""
    table = np.asarray(rtfs)
    return Spectrogram(spec.coefficients * table[labels.labels], spec.config)


def _colour(x: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.convolve(x, b)[: x.size]


def speechlike(
    num_samples: int,
    rng: np.random.Generator,
    segments: list[LabelSegment] | None = None,
    colours: np.ndarray | None = None,
) -> np.ndarray:
    """Coloured noise with a slow amplitude envelope.

    With `segments` and per-class FIR `colours`, each segment gets its own
    spectral tilt so clustering can tell classes apart.
    """
    x = rng.standard_normal(num_samples)
    if segments is not None and colours is not None:
        y = np.zeros(num_samples)
        for s in segments:
            y[s.start_sample : s.end_sample] = _colour(x, colours[s.class_id])[s.start_sample : s.end_sample]
        x = y
    env = 0.5 + 0.5 * np.abs(np.sin(np.pi * np.arange(num_samples) / (0.37 * num_samples + 1)))
    x = x * env
    return 0.25 * x / (np.max(np.abs(x)) + 1e-12)


@dataclass(frozen=True)
class TalkerFilters:
    """Per-class FIR filters (``(P, taps)``) and the in-ear lead in samples."""

    firs: np.ndarray
    lead: int = 0


def random_talker(num_classes: int, rng: np.random.Generator, taps: int = 6, lead: int = 0) -> TalkerFilters:
    firs = rng.standard_normal((num_classes, taps)) * np.exp(-np.arange(taps) / 2.0)
    return TalkerFilters(firs, lead)


def render_inear(outer: np.ndarray, segments: list[LabelSegment], talker: TalkerFilters) -> np.ndarray:
    """Segment-wise FIR filtering, then advance by ``talker.lead`` samples.

    Samples outside every segment are filtered with class 0.
    """
    n = outer.size
    cls = np.zeros(n, dtype=np.int64)
    for s in segments:
        cls[s.start_sample : s.end_sample] = s.class_id
    y = np.zeros(n)
    for c in np.unique(cls):
        y[cls == c] = _colour(outer, talker.firs[c])[cls == c]
    out = np.zeros(n)
    out[: n - talker.lead] = y[talker.lead :]
    return out


def random_segments(n: int, num_classes: int, rng: np.random.Generator, mean_len: int) -> list[LabelSegment]:
    segs = []
    start = 0
    while start < n:
        end = min(n, start + int(rng.integers(mean_len // 2, 3 * mean_len // 2 + 1)))
        segs.append(LabelSegment(start, end, int(rng.integers(num_classes))))
        start = end
    return segs


def write_corpus(
    root: str | Path,
    talkers: dict[str, TalkerFilters],
    utterances_per_talker: int,
    duration_s: float,
    sample_rate_hz: int = 5000,
    seed: int = 0,
    with_labels: bool = True,
    encoding: str = "float32",
    segment_len: int = 1024,
) -> Path:
    """Write a paired corpus and its manifest; returns the manifest path.

    All talkers share the class count of their filter banks.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    P = next(iter(talkers.values())).firs.shape[0]
    colours = rng.standard_normal((P, 4)) * np.array([1.0, 0.6, 0.3, 0.1])
    n = int(round(duration_s * sample_rate_hz))
    entries = []
    for talker_id, filt in talkers.items():
        for u in range(utterances_per_talker):
            uid = f"{talker_id}_u{u:03d}"
            segs = random_segments(n, P, rng, segment_len)
            outer = speechlike(n, rng, segs, colours)
            inear = render_inear(outer, segs, filt)
            write_wav(AudioClip(outer, sample_rate_hz), root / f"{uid}_outer.wav", encoding)
            write_wav(AudioClip(inear, sample_rate_hz), root / f"{uid}_inear.wav", encoding)
            labels_path = None
            if with_labels:
                labels_path = root / f"{uid}_labels.csv"
                write_segments(segs, labels_path)
            entries.append(
                ManifestEntry(uid, talker_id, root / f"{uid}_outer.wav", root / f"{uid}_inear.wav", labels_path)
            )
    manifest_path = root / "manifest.csv"
    write_manifest(Manifest(tuple(entries), sample_rate_hz, root), manifest_path)
    return manifest_path
