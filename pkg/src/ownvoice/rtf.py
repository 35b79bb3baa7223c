"""Least-squares relative transfer functions between outer and in-ear spectra.

For every frequency bin the estimate is the ratio of the accumulated cross
spectrum ``sum_l conj(Y_o) * Y_i`` to the accumulated outer-mic power
``sum_l |Y_o|^2``.  The speech-independent RTF pools all frames; the
speech-dependent model keeps one pair of sums per phoneme class and selects
frames by their label.

Sums live in an :class:`RtfAccumulator`, which can be filled utterance by
utterance and merged, so a corpus can be processed in any partition.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from os import PathLike
from pathlib import Path

import numpy as np

from .errors import ConfigError, ModelFormatError, NoDataError, PairingError
from .labels import UNLABELED, FrameLabels
from .stft import Spectrogram, StftConfig

__all__ = [
    "FORMAT_VERSION",
    "DEFAULT_MIN_FRAMES",
    "DEFAULT_RELATIVE_EPS",
    "RtfAccumulator",
    "RtfModel",
    "accumulate",
    "merge",
    "finalize_speech_independent",
    "finalize_speech_dependent",
    "default_eps",
    "save_model",
    "load_model",
    "model_to_dict",
    "model_from_dict",
]

FORMAT_VERSION = "1"
DEFAULT_MIN_FRAMES = 5
DEFAULT_RELATIVE_EPS = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RtfAccumulator:
    """Running cross/auto spectral sums, globally and per class.

    ``class_cross`` and ``class_power`` have shape ``(P, K/2+1)``.  Frames
    labeled ``UNLABELED`` (or accumulated without labels) only reach the
    global sums.  Instances are immutable; :func:`accumulate` and
    :func:`merge` return new ones.
    """

    cfg: StftConfig
    num_classes: int
    delay_samples: int
    global_cross: np.ndarray
    global_power: np.ndarray
    global_frames: int
    class_cross: np.ndarray
    class_power: np.ndarray
    class_frames: np.ndarray

    @classmethod
    def empty(cls, cfg: StftConfig, num_classes: int = 0, delay_samples: int = 0) -> "RtfAccumulator":
        if num_classes < 0:
            raise ConfigError(f"num_classes must be >= 0, got {num_classes}")
        if delay_samples < 0:
            raise ConfigError(f"delay_samples must be >= 0, got {delay_samples}")
        B = cfg.num_bins
        return cls(
            cfg=cfg,
            num_classes=int(num_classes),
            delay_samples=int(delay_samples),
            global_cross=_frozen(np.zeros(B, dtype=np.complex128)),
            global_power=_frozen(np.zeros(B)),
            global_frames=0,
            class_cross=_frozen(np.zeros((num_classes, B), dtype=np.complex128)),
            class_power=_frozen(np.zeros((num_classes, B))),
            class_frames=_frozen(np.zeros(num_classes, dtype=np.int64)),
        )

    def _check_compatible(self, other: "RtfAccumulator") -> None:
        if (self.cfg, self.num_classes, self.delay_samples) != (
            other.cfg,
            other.num_classes,
            other.delay_samples,
        ):
            raise ConfigError(
                "cannot merge accumulators with different configuration: "
                f"{(self.cfg, self.num_classes, self.delay_samples)} vs "
                f"{(other.cfg, other.num_classes, other.delay_samples)}"
            )


def accumulate(
    acc: RtfAccumulator,
    spec_outer: Spectrogram,
    spec_inear: Spectrogram,
    labels: FrameLabels | None = None,
) -> RtfAccumulator:
    """Add one utterance to the sums.

    `spec_inear` must come from the in-ear clip after the prediction delay
    has been applied.
    """
    if spec_outer.config != acc.cfg or spec_inear.config != acc.cfg:
        raise PairingError(
            f"spectrogram configuration {spec_outer.config} / {spec_inear.config} "
            f"differs from accumulator configuration {acc.cfg}"
        )
    if spec_outer.shape != spec_inear.shape:
        raise PairingError(f"outer {spec_outer.shape} and in-ear {spec_inear.shape} grids differ")
    Yo, Yi = spec_outer.coefficients, spec_inear.coefficients
    L = Yo.shape[0]

    cross = np.conj(Yo) * Yi
    power = Yo.real**2 + Yo.imag**2
    class_cross = acc.class_cross.copy()
    class_power = acc.class_power.copy()
    class_frames = acc.class_frames.copy()
    if labels is not None:
        if len(labels) != L:
            raise PairingError(f"{len(labels)} labels for {L} frames")
        if labels.num_classes != acc.num_classes:
            raise PairingError(
                f"labels use {labels.num_classes} classes, accumulator {acc.num_classes}"
            )
        lab = labels.labels
        for c in np.unique(lab[lab != UNLABELED]):
            sel = lab == c
            class_cross[c] += cross[sel].sum(axis=0)
            class_power[c] += power[sel].sum(axis=0)
            class_frames[c] += int(np.count_nonzero(sel))

    return RtfAccumulator(
        cfg=acc.cfg,
        num_classes=acc.num_classes,
        delay_samples=acc.delay_samples,
        global_cross=_frozen(acc.global_cross + cross.sum(axis=0)),
        global_power=_frozen(acc.global_power + power.sum(axis=0)),
        global_frames=acc.global_frames + L,
        class_cross=_frozen(class_cross),
        class_power=_frozen(class_power),
        class_frames=_frozen(class_frames),
    )


def merge(a: RtfAccumulator, b: RtfAccumulator) -> RtfAccumulator:
    """Elementwise sum of two compatible accumulators."""
    a._check_compatible(b)
    return RtfAccumulator(
        cfg=a.cfg,
        num_classes=a.num_classes,
        delay_samples=a.delay_samples,
        global_cross=_frozen(a.global_cross + b.global_cross),
        global_power=_frozen(a.global_power + b.global_power),
        global_frames=a.global_frames + b.global_frames,
        class_cross=_frozen(a.class_cross + b.class_cross),
        class_power=_frozen(a.class_power + b.class_power),
        class_frames=_frozen(a.class_frames + b.class_frames),
    )


def default_eps(acc: RtfAccumulator) -> float:
    """Relative regularizer: ``1e-10`` times the mean global outer-mic power."""
    return DEFAULT_RELATIVE_EPS * float(np.mean(acc.global_power))


def _quotient(cross: np.ndarray, power: np.ndarray, eps: float) -> np.ndarray:
    den = power + eps
    out = np.zeros_like(cross)
    np.divide(cross, den, out=out, where=den > 0)
    return out


def _resolve_eps(acc: RtfAccumulator, eps: float | None) -> float:
    if acc.global_frames < 1:
        raise NoDataError("accumulator holds no frames")
    if eps is None:
        return default_eps(acc)
    if not (eps >= 0 and math.isfinite(eps)):
        raise ConfigError(f"eps must be finite and non-negative, got {eps}")
    return float(eps)


def finalize_speech_independent(acc: RtfAccumulator, eps: float | None = None) -> np.ndarray:
    """Pooled least-squares RTF over all accumulated frames.

    Bins that never saw outer-mic energy come out as zero.
    """
    eps = _resolve_eps(acc, eps)
    return _quotient(acc.global_cross, acc.global_power, eps)


@dataclass(frozen=True, eq=False)
class RtfModel:
    """Estimated transfer model of one talker.

    `per_phoneme` maps class id to an RTF for every class observed in at least
    `min_frames` frames; `frame_counts` holds the counts of all ``P`` classes.
    """

    global_rtf: np.ndarray
    per_phoneme: dict[int, np.ndarray]
    frame_counts: np.ndarray
    cfg: StftConfig
    delay_samples: int = 0
    eps: float = 0.0
    min_frames: int = DEFAULT_MIN_FRAMES
    talker_id: str = ""
    global_frames: int = 0

    def __post_init__(self):
        B = self.cfg.num_bins
        g = np.array(self.global_rtf, dtype=np.complex128)
        if g.shape != (B,):
            raise ModelFormatError(f"global RTF must have {B} bins, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ModelFormatError("global RTF contains non-finite values")
        counts = np.array(self.frame_counts, dtype=np.int64).reshape(-1)
        P = counts.size
        table = {}
        for c, h in sorted(self.per_phoneme.items()):
            c = int(c)
            h = np.array(h, dtype=np.complex128)
            if not 0 <= c < P:
                raise ModelFormatError(f"phoneme class {c} outside [0, {P})")
            if h.shape != (B,):
                raise ModelFormatError(f"RTF of class {c} must have {B} bins, got {h.shape}")
            if not np.all(np.isfinite(h)):
                raise ModelFormatError(f"RTF of class {c} contains non-finite values")
            table[c] = _frozen(h)
        object.__setattr__(self, "global_rtf", _frozen(g))
        object.__setattr__(self, "per_phoneme", table)
        object.__setattr__(self, "frame_counts", _frozen(counts))

    @property
    def num_classes(self) -> int:
        return self.frame_counts.size

    def rtf_for(self, class_id: int) -> np.ndarray:
        """RTF used for frames of `class_id` (global fallback when absent)."""
        return self.per_phoneme.get(int(class_id), self.global_rtf)

    def rtf_table(self) -> tuple[np.ndarray, np.ndarray]:
        """``(P+1, B)`` table whose last row is the global RTF, plus a mask of
        classes that fall back to it."""
        P = self.num_classes
        table = np.empty((P + 1, self.cfg.num_bins), dtype=np.complex128)
        table[:] = self.global_rtf
        fallback = np.ones(P, dtype=bool)
        for c, h in self.per_phoneme.items():
            table[c] = h
            fallback[c] = False
        return table, fallback

    def speech_independent(self) -> "RtfModel":
        """Copy of this model with the per-phoneme table dropped."""
        return RtfModel(
            global_rtf=self.global_rtf,
            per_phoneme={},
            frame_counts=self.frame_counts,
            cfg=self.cfg,
            delay_samples=self.delay_samples,
            eps=self.eps,
            min_frames=self.min_frames,
            talker_id=self.talker_id,
            global_frames=self.global_frames,
        )

    def __eq__(self, other):
        if not isinstance(other, RtfModel):
            return NotImplemented
        return (
            (self.cfg, self.delay_samples, self.eps, self.min_frames, self.talker_id, self.global_frames)
            == (other.cfg, other.delay_samples, other.eps, other.min_frames, other.talker_id, other.global_frames)
            and np.array_equal(self.global_rtf, other.global_rtf)
            and np.array_equal(self.frame_counts, other.frame_counts)
            and self.per_phoneme.keys() == other.per_phoneme.keys()
            and all(np.array_equal(h, other.per_phoneme[c]) for c, h in self.per_phoneme.items())
        )

    __hash__ = None


def finalize_speech_dependent(
    acc: RtfAccumulator,
    eps: float | None = None,
    min_frames: int = DEFAULT_MIN_FRAMES,
    talker_id: str = "",
) -> RtfModel:
    """Per-class RTF database plus the pooled global RTF.

    Classes seen in fewer than `min_frames` frames get no entry and are
    filtered with the global RTF at simulation time.  The same `eps` is used
    for every quotient.
    """
    eps = _resolve_eps(acc, eps)
    if min_frames < 1:
        raise ConfigError(f"min_frames must be >= 1, got {min_frames}")
    per_phoneme = {
        c: _quotient(acc.class_cross[c], acc.class_power[c], eps)
        for c in range(acc.num_classes)
        if acc.class_frames[c] >= min_frames
    }
    return RtfModel(
        global_rtf=_quotient(acc.global_cross, acc.global_power, eps),
        per_phoneme=per_phoneme,
        frame_counts=acc.class_frames.copy(),
        cfg=acc.cfg,
        delay_samples=acc.delay_samples,
        eps=eps,
        min_frames=int(min_frames),
        talker_id=talker_id,
        global_frames=acc.global_frames,
    )


# -- persistence -------------------------------------------------------------

def _complex_to_json(h: np.ndarray) -> dict:
    return {"re": [float(v) for v in h.real], "im": [float(v) for v in h.imag]}


def _complex_from_json(obj, what: str) -> np.ndarray:
    try:
        re = np.array(obj["re"], dtype=np.float64)
        im = np.array(obj["im"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{what}: expected {{re: [...], im: [...]}} ({exc})") from None
    if re.shape != im.shape or re.ndim != 1:
        raise ModelFormatError(f"{what}: re/im arrays differ in shape")
    if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
        raise ModelFormatError(f"{what}: non-finite coefficient")
    return re + 1j * im


def model_to_dict(model: RtfModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "K": model.cfg.frame_len,
        "hop": model.cfg.hop,
        "sample_rate_hz": float(model.cfg.sample_rate_hz),
        "delay_samples": model.delay_samples,
        "P": model.num_classes,
        "eps": float(model.eps),
        "min_frames": model.min_frames,
        "talker_id": model.talker_id,
        "global_frames": model.global_frames,
        "frame_counts": [int(n) for n in model.frame_counts],
        "global_rtf": _complex_to_json(model.global_rtf),
        "phonemes": {
            str(c): {**_complex_to_json(h), "frame_count": int(model.frame_counts[c])}
            for c, h in sorted(model.per_phoneme.items())
        },
    }


def model_from_dict(doc: dict) -> RtfModel:
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    version = str(doc.get("format_version"))
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format_version {version!r} (expected {FORMAT_VERSION!r})"
        )
    try:
        cfg = StftConfig(int(doc["K"]), int(doc["hop"]), float(doc["sample_rate_hz"]))
        P = int(doc["P"])
        phonemes = doc["phonemes"]
        counts = doc.get("frame_counts")
        if counts is None:
            counts = [0] * P
            for c, entry in phonemes.items():
                counts[int(c)] = int(entry["frame_count"])
        if len(counts) != P:
            raise ModelFormatError(f"frame_counts has {len(counts)} entries, P = {P}")
        per_phoneme = {}
        for c, entry in phonemes.items():
            per_phoneme[int(c)] = _complex_from_json(entry, f"phoneme {c}")
            if int(entry["frame_count"]) != int(counts[int(c)]):
                raise ModelFormatError(f"phoneme {c}: frame_count disagrees with frame_counts")
        eps = float(doc["eps"])
        if not (math.isfinite(eps) and eps >= 0):
            raise ModelFormatError(f"eps must be finite and non-negative, got {eps}")
        return RtfModel(
            global_rtf=_complex_from_json(doc["global_rtf"], "global_rtf"),
            per_phoneme=per_phoneme,
            frame_counts=np.array(counts, dtype=np.int64),
            cfg=cfg,
            delay_samples=int(doc["delay_samples"]),
            eps=eps,
            min_frames=int(doc["min_frames"]),
            talker_id=str(doc.get("talker_id", "")),
            global_frames=int(doc.get("global_frames", 0)),
        )
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc!r}") from None


def _reject_constant(name):
    raise ModelFormatError(f"non-finite number {name} in model file")


def save_model(model: RtfModel, path: str | PathLike) -> None:
    """Write `model` as versioned JSON. Floats use shortest round-trip repr."""
    text = json.dumps(model_to_dict(model), indent=1, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(path: str | PathLike) -> RtfModel:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from None
    try:
        return model_from_dict(doc)
    except ModelFormatError as exc:
        raise ModelFormatError(f"{path}: {exc}") from None
