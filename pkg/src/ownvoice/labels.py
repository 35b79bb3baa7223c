"""Frame-wise phoneme class sequences.

Labels come either from external alignment files (CSV segments in sample
units) or from seeded k-means clustering of log-magnitude frame spectra
("pseudo-phonemes").  Class ids are 0-based; frames without a class carry
:data:`UNLABELED`.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from os import PathLike
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InsufficientFramesError, LabelFileError, ValidationError
from .stft import Spectrogram, StftConfig

__all__ = [
    "UNLABELED",
    "LabelSegment",
    "FrameLabels",
    "load_segments",
    "parse_segments",
    "write_segments",
    "format_segments",
    "segments_to_frames",
    "frames_to_segments",
    "cluster_pseudo_phonemes",
    "kmeans",
]

UNLABELED = -1

KMEANS_MAX_ITER = 100
KMEANS_TOL = 1e-6
FEATURE_FLOOR = 1e-10


@dataclass(frozen=True)
class LabelSegment:
    start_sample: int
    end_sample: int
    class_id: int

    def __post_init__(self):
        if self.start_sample < 0 or self.start_sample >= self.end_sample:
            raise LabelFileError(
                f"segment [{self.start_sample}, {self.end_sample}) is empty or negative"
            )
        if self.class_id < 0:
            raise LabelFileError(f"class_id must be non-negative, got {self.class_id}")


@dataclass(frozen=True, eq=False)
class FrameLabels:
    """One class id (or ``UNLABELED``) per STFT frame."""

    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        lab = np.array(self.labels, dtype=np.int64)
        if lab.ndim != 1:
            raise ValidationError("labels must be one-dimensional")
        if self.num_classes < 1:
            raise ValidationError(f"num_classes must be >= 1, got {self.num_classes}")
        bad = (lab != UNLABELED) & ((lab < 0) | (lab >= self.num_classes))
        if bad.any():
            raise ValidationError(
                f"label {int(lab[bad][0])} outside [0, {self.num_classes}) at frame "
                f"{int(np.flatnonzero(bad)[0])}"
            )
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    def __len__(self) -> int:
        return self.labels.size

    def __eq__(self, other):
        if not isinstance(other, FrameLabels):
            return NotImplemented
        return self.num_classes == other.num_classes and np.array_equal(self.labels, other.labels)

    @property
    def num_unlabeled(self) -> int:
        return int(np.count_nonzero(self.labels == UNLABELED))


# -- label files -------------------------------------------------------------

def parse_segments(text: str, num_classes: int | None = None) -> list[LabelSegment]:
    """Parse label-file text. See :func:`load_segments`."""
    segments: list[LabelSegment] = []
    lines: list[int] = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 3:
            raise LabelFileError(f"line {lineno}: expected 3 fields, got {len(fields)}")
        try:
            start, end, cls = (int(f) for f in fields)
        except ValueError:
            raise LabelFileError(f"line {lineno}: non-integer field in {line!r}") from None
        try:
            seg = LabelSegment(start, end, cls)
        except LabelFileError as exc:
            raise LabelFileError(f"line {lineno}: {exc}") from None
        if num_classes is not None and cls >= num_classes:
            raise LabelFileError(
                f"line {lineno}: class_id {cls} >= number of classes {num_classes}"
            )
        segments.append(seg)
        lines.append(lineno)

    order = sorted(range(len(segments)), key=lambda i: segments[i].start_sample)
    for a, b in zip(order, order[1:]):
        if segments[b].start_sample < segments[a].end_sample:
            first, second = sorted((a, b))
            raise LabelFileError(
                f"overlapping segments on lines {lines[first]} and {lines[second]}: "
                f"{segments[first]} and {segments[second]}"
            )
    return segments


def load_segments(path: str | PathLike, num_classes: int | None = None) -> list[LabelSegment]:
    """Read a label file.

    One segment per line as ``start_sample,end_sample,class_id`` (end
    exclusive); blank lines and ``#`` comments are ignored.  Segments are
    returned in file order.  Sample indices refer to the outer-microphone clip
    before any prediction delay.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        return parse_segments(text, num_classes)
    except LabelFileError as exc:
        raise LabelFileError(f"{path}: {exc}") from None


def format_segments(segments: Iterable[LabelSegment]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for s in segments:
        w.writerow((s.start_sample, s.end_sample, s.class_id))
    return buf.getvalue()


def write_segments(segments: Iterable[LabelSegment], path: str | PathLike) -> None:
    Path(path).write_text(format_segments(segments), encoding="utf-8")


# -- alignment to the STFT grid ----------------------------------------------

def segments_to_frames(
    segments: Sequence[LabelSegment], cfg: StftConfig, num_frames: int, num_classes: int
) -> FrameLabels:
    """Assign each frame the class covering most of its samples.

    Samples covered by no segment count toward ``UNLABELED``.  Ties between
    classes go to the class whose covering segment starts earliest; a tie
    between a class and uncovered samples goes to the class.
    """
    if num_frames < 1:
        raise ValidationError(f"num_frames must be >= 1, got {num_frames}")
    K, hop = cfg.frame_len, cfg.hop
    starts = np.arange(num_frames) * hop
    ends = starts + K
    # coverage[c] accumulates per-frame sample counts; first_start breaks ties
    coverage: dict[int, np.ndarray] = {}
    first_start: dict[int, np.ndarray] = {}
    for seg in segments:
        if seg.class_id >= num_classes:
            raise LabelFileError(f"class_id {seg.class_id} >= number of classes {num_classes}")
        overlap = np.minimum(ends, seg.end_sample) - np.maximum(starts, seg.start_sample)
        overlap = np.maximum(overlap, 0)
        c = seg.class_id
        if c not in coverage:
            coverage[c] = np.zeros(num_frames, dtype=np.int64)
            first_start[c] = np.full(num_frames, np.iinfo(np.int64).max)
        coverage[c] += overlap
        hit = overlap > 0
        first_start[c][hit] = np.minimum(first_start[c][hit], seg.start_sample)

    out = np.full(num_frames, UNLABELED, dtype=np.int64)
    covered = np.zeros(num_frames, dtype=np.int64)
    for cnt in coverage.values():
        covered += cnt
    best_count = np.zeros(num_frames, dtype=np.int64)
    best_start = np.full(num_frames, np.iinfo(np.int64).max)
    for c in sorted(coverage):
        cnt, st = coverage[c], first_start[c]
        better = (cnt > best_count) | ((cnt == best_count) & (cnt > 0) & (st < best_start))
        out[better] = c
        best_count[better] = cnt[better]
        best_start[better] = st[better]
    out[best_count < K - covered] = UNLABELED
    return FrameLabels(out, num_classes)


def frames_to_segments(
    labels: FrameLabels, cfg: StftConfig, num_samples: int | None = None
) -> list[LabelSegment]:
    """Convert frame labels back into sample segments.

    Frame ``l`` claims ``[l*hop, l*hop + K)``; where consecutive frames overlap
    the later frame wins, so each frame effectively owns ``hop`` samples and
    the last one owns ``K``.  Runs of equal class are merged and the final
    segment is stretched to `num_samples` when given.  ``UNLABELED`` frames
    produce gaps.
    """
    lab = labels.labels
    L = lab.size
    hop, K = cfg.hop, cfg.frame_len
    end_total = (L - 1) * hop + K
    if num_samples is not None:
        end_total = max(end_total, int(num_samples))
    segments: list[LabelSegment] = []
    run_start = 0
    for l in range(1, L + 1):
        if l < L and lab[l] == lab[run_start]:
            continue
        c = int(lab[run_start])
        start = run_start * hop
        end = l * hop if l < L else end_total
        if c != UNLABELED:
            segments.append(LabelSegment(start, end, c))
        run_start = l
    return segments


# -- pseudo-phoneme clustering -----------------------------------------------

def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    idx = [int(rng.integers(n))]
    d2 = np.sum((X - X[idx[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            # all remaining points coincide with a chosen centre
            free = np.setdiff1d(np.arange(n), idx)
            nxt = int(rng.choice(free))
        idx.append(nxt)
        d2 = np.minimum(d2, np.sum((X - X[nxt]) ** 2, axis=1))
    return X[idx].copy()


def _assign(X: np.ndarray, centres: np.ndarray, block: int = 2048) -> tuple[np.ndarray, np.ndarray]:
    # explicit differences rather than the |x|^2 - 2xc + |c|^2 expansion, which
    # loses precision when features carry a large common offset
    n = X.shape[0]
    lab = np.empty(n, dtype=np.int64)
    dist = np.empty(n)
    for i in range(0, n, block):
        d2 = np.sum((X[i : i + block, None, :] - centres[None, :, :]) ** 2, axis=2)
        lab[i : i + block] = np.argmin(d2, axis=1)
        dist[i : i + block] = d2[np.arange(d2.shape[0]), lab[i : i + block]]
    return lab, dist


def kmeans(
    X: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = KMEANS_MAX_ITER,
    tol: float = KMEANS_TOL,
) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm with k-means++ seeding.

    Stops when no centre moves by more than `tol` (Euclidean) or after
    `max_iter` iterations.  Empty clusters are re-seeded with the point
    farthest from its centre.  Returns ``(labels, centres)``.
    """
    X = np.asarray(X, dtype=np.float64)
    rng = np.random.default_rng(seed)
    centres = _kmeans_pp_init(X, k, rng)
    lab, dist = _assign(X, centres)
    for _ in range(max_iter):
        new = np.empty_like(centres)
        for c in range(k):
            members = lab == c
            if members.any():
                new[c] = X[members].mean(axis=0)
            else:
                far = int(np.argmax(dist))
                new[c] = X[far]
                dist[far] = -np.inf
        shift = np.sqrt(np.max(np.sum((new - centres) ** 2, axis=1)))
        centres = new
        lab, dist = _assign(X, centres)
        if shift <= tol:
            break
    return lab, centres


def frame_features(spec: Spectrogram) -> np.ndarray:
    """Per-frame log10 magnitude spectra, shape ``(L, K/2 + 1)``."""
    return np.log10(np.abs(spec.coefficients) + FEATURE_FLOOR)


def cluster_pseudo_phonemes(spec: Spectrogram, num_classes: int, seed: int = 0) -> FrameLabels:
    """Label frames by k-means over their log-magnitude spectra."""
    if num_classes < 1:
        raise ValidationError(f"num_classes must be >= 1, got {num_classes}")
    L = spec.num_frames
    if L < num_classes:
        raise InsufficientFramesError(f"{L} frames cannot form {num_classes} clusters")
    if num_classes == 1:
        return FrameLabels(np.zeros(L, dtype=np.int64), 1)
    lab, _ = kmeans(frame_features(spec), num_classes, seed)
    return FrameLabels(lab, num_classes)
