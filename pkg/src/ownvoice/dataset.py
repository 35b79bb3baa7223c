"""WAV and corpus-manifest I/O.

WAV support covers mono RIFF/WAVE with 16/24/32-bit integer PCM or 32-bit
IEEE float samples (plain or WAVE_FORMAT_EXTENSIBLE headers).  Integer
samples map to ``[-1, 1)`` by ``value / 2**(bits-1)``.

A manifest is a UTF-8 CSV with the header
``utterance_id,talker_id,outer_path,inear_path,labels_path``; the last two
columns may be empty and paths are relative to the manifest's directory.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from os import PathLike
from pathlib import Path

import numpy as np

from .errors import ManifestError, MissingFileError, WavFormatError
from .stft import AudioClip

__all__ = [
    "ENCODINGS",
    "WavInfo",
    "read_wav",
    "read_wav_info",
    "write_wav",
    "ManifestEntry",
    "Manifest",
    "load_manifest",
    "write_manifest",
]

_PCM = 0x0001
_FLOAT = 0x0003
_EXTENSIBLE = 0xFFFE

# encoding name -> (format tag, bits per sample)
ENCODINGS = {
    "pcm16": (_PCM, 16),
    "pcm24": (_PCM, 24),
    "pcm32": (_PCM, 32),
    "float32": (_FLOAT, 32),
}


@dataclass(frozen=True)
class WavInfo:
    sample_rate_hz: int
    channels: int
    bits_per_sample: int
    format_tag: int
    num_frames: int
    data_offset: int

    @property
    def encoding(self) -> str:
        for name, spec in ENCODINGS.items():
            if spec == (self.format_tag, self.bits_per_sample):
                return name
        raise WavFormatError(
            f"unsupported WAV encoding: format tag {self.format_tag:#06x}, "
            f"{self.bits_per_sample} bits"
        )


def _parse_header(buf: bytes, path) -> WavInfo:
    if len(buf) < 12 or buf[:4] != b"RIFF" or buf[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")
    pos = 12
    fmt = None
    while pos + 8 <= len(buf):
        cid, size = buf[pos : pos + 4], struct.unpack_from("<I", buf, pos + 4)[0]
        body = pos + 8
        if cid == b"fmt ":
            if size < 16 or body + size > len(buf):
                raise WavFormatError(f"{path}: truncated fmt chunk")
            tag, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", buf, body)
            if tag == _EXTENSIBLE:
                if size < 40:
                    raise WavFormatError(f"{path}: truncated WAVE_FORMAT_EXTENSIBLE header")
                tag = struct.unpack_from("<H", buf, body + 24)[0]
            fmt = (tag, channels, rate, bits)
        elif cid == b"data":
            if fmt is None:
                raise WavFormatError(f"{path}: data chunk before fmt chunk")
            tag, channels, rate, bits = fmt
            if bits % 8 or bits == 0:
                raise WavFormatError(f"{path}: unsupported sample width {bits} bits")
            block = channels * bits // 8
            if block == 0:
                raise WavFormatError(f"{path}: zero channels")
            if body + size > len(buf):
                raise WavFormatError(
                    f"{path}: truncated data chunk ({len(buf) - body} of {size} bytes present)"
                )
            if size % block:
                raise WavFormatError(f"{path}: data chunk is not a whole number of frames")
            return WavInfo(rate, channels, bits, tag, size // block, body)
        pos = body + size + (size & 1)
    raise WavFormatError(f"{path}: no data chunk" if fmt else f"{path}: no fmt chunk")


def read_wav_info(path: str | PathLike) -> WavInfo:
    """Parse only the header of a WAV file (the payload must still be present)."""
    return _parse_header(Path(path).read_bytes(), path)


def read_wav(path: str | PathLike) -> AudioClip:
    buf = Path(path).read_bytes()
    info = _parse_header(buf, path)
    if info.channels != 1:
        raise WavFormatError(f"{path}: expected mono, got {info.channels} channels")
    try:
        enc = info.encoding
    except WavFormatError as exc:
        raise WavFormatError(f"{path}: {exc}") from None
    raw = buf[info.data_offset : info.data_offset + info.num_frames * info.bits_per_sample // 8]
    if enc == "float32":
        x = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    elif enc == "pcm24":
        b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        v = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        v = np.where(v >= 1 << 23, v - (1 << 24), v)
        x = v / float(1 << 23)
    else:
        dtype = "<i2" if enc == "pcm16" else "<i4"
        x = np.frombuffer(raw, dtype=dtype) / float(1 << (info.bits_per_sample - 1))
    if x.size == 0:
        raise WavFormatError(f"{path}: no samples")
    return AudioClip(x, info.sample_rate_hz)


def _to_int(x: np.ndarray, bits: int) -> np.ndarray:
    scale = float(1 << (bits - 1))
    v = x * scale
    v = np.sign(v) * np.floor(np.abs(v) + 0.5)  # round half away from zero
    return np.clip(v, -scale, scale - 1).astype(np.int64)


def write_wav(clip: AudioClip, path: str | PathLike, encoding: str = "float32") -> None:
    """Write a mono WAV file.

    Integer encodings round half away from zero and clamp, so ``1.0``
    becomes the largest representable value.
    """
    if encoding not in ENCODINGS:
        raise WavFormatError(f"unknown encoding {encoding!r}; choose from {sorted(ENCODINGS)}")
    tag, bits = ENCODINGS[encoding]
    x = clip.samples
    if encoding == "float32":
        payload = x.astype("<f4").tobytes()
    elif encoding == "pcm24":
        v = _to_int(x, 24).astype("<i4").view(np.uint8).reshape(-1, 4)
        payload = v[:, :3].tobytes()
    else:
        payload = _to_int(x, bits).astype("<i2" if bits == 16 else "<i4").tobytes()
    rate = int(round(clip.sample_rate_hz))
    if rate != clip.sample_rate_hz:
        raise WavFormatError(f"WAV needs an integer sample rate, got {clip.sample_rate_hz}")
    block = bits // 8
    fmt = struct.pack("<HHIIHH", tag, 1, rate, rate * block, block, bits)
    chunks = b"fmt " + struct.pack("<I", len(fmt)) + fmt
    if tag == _FLOAT:
        chunks += b"fact" + struct.pack("<II", 4, x.size)
    chunks += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        chunks += b"\x00"
    Path(path).write_bytes(b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks)


# -- manifests ---------------------------------------------------------------

MANIFEST_COLUMNS = ("utterance_id", "talker_id", "outer_path", "inear_path", "labels_path")


@dataclass(frozen=True)
class ManifestEntry:
    utterance_id: str
    talker_id: str
    outer_path: Path
    inear_path: Path | None = None
    labels_path: Path | None = None


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]
    sample_rate_hz: float
    root: Path = Path(".")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def talkers(self) -> list[str]:
        """Talker ids in order of first appearance."""
        return list(dict.fromkeys(e.talker_id for e in self.entries))

    def by_talker(self) -> dict[str, list[ManifestEntry]]:
        groups: dict[str, list[ManifestEntry]] = {}
        for e in self.entries:
            groups.setdefault(e.talker_id, []).append(e)
        return groups

    def entry(self, utterance_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.utterance_id == utterance_id:
                return e
        raise KeyError(utterance_id)


def _resolve(root: Path, value: str) -> Path | None:
    value = value.strip()
    if not value:
        return None
    p = Path(value)
    return p if p.is_absolute() else root / p


def load_manifest(path: str | PathLike, sample_rate_hz: float = 5000.0) -> Manifest:
    """Read and validate a corpus manifest.

    Every referenced file must exist and every WAV header must report
    `sample_rate_hz`.  Nothing is written or cached.
    """
    path = Path(path)
    root = path.parent
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = tuple(h.strip() for h in (reader.fieldnames or ()))
        missing = [c for c in MANIFEST_COLUMNS[:3] if c not in header]
        if missing:
            raise ManifestError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = list(reader)

    entries = []
    seen: dict[str, int] = {}
    for lineno, row in enumerate(rows, start=2):
        row = {(k or "").strip(): (v or "") for k, v in row.items()}
        uid = row["utterance_id"].strip()
        talker = row["talker_id"].strip()
        if not uid or not talker:
            raise ManifestError(f"{path}:{lineno}: utterance_id and talker_id are required")
        if uid in seen:
            raise ManifestError(
                f"{path}:{lineno}: duplicate utterance_id {uid!r} (first on line {seen[uid]})"
            )
        seen[uid] = lineno
        outer = _resolve(root, row["outer_path"])
        if outer is None:
            raise ManifestError(f"{path}:{lineno}: utterance {uid!r} has no outer_path")
        entry = ManifestEntry(
            uid,
            talker,
            outer,
            _resolve(root, row.get("inear_path", "")),
            _resolve(root, row.get("labels_path", "")),
        )
        for kind in ("outer_path", "inear_path", "labels_path"):
            p = getattr(entry, kind)
            if p is not None and not p.is_file():
                raise MissingFileError(f"utterance {uid!r}: {kind} {p} does not exist")
        for kind in ("outer_path", "inear_path"):
            p = getattr(entry, kind)
            if p is None:
                continue
            rate = read_wav_info(p).sample_rate_hz
            if rate != sample_rate_hz:
                raise ManifestError(
                    f"utterance {uid!r}: {kind} {p} is sampled at {rate} Hz, "
                    f"manifest expects {sample_rate_hz:g} Hz"
                )
        entries.append(entry)
    return Manifest(tuple(entries), sample_rate_hz, root)


def write_manifest(manifest: Manifest, path: str | PathLike) -> None:
    """Write `manifest` as CSV with paths relative to the new file's directory."""
    path = Path(path)
    base = path.parent.resolve()

    def rel(p: Path | None) -> str:
        if p is None:
            return ""
        p = p.resolve()
        try:
            return p.relative_to(base).as_posix()
        except ValueError:
            return str(p)

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_COLUMNS)
        for e in manifest.entries:
            w.writerow(
                (e.utterance_id, e.talker_id, rel(e.outer_path), rel(e.inear_path), rel(e.labels_path))
            )
