import struct
import wave

import numpy as np
import pytest

from ownvoice import AudioClip, load_manifest, read_wav, write_wav
from ownvoice.dataset import read_wav_info
from ownvoice.errors import ManifestError, MissingFileError, WavFormatError


def _pcm16_file(path, values, rate=5000, channels=1):
    with wave.open(str(path), "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(np.asarray(values, dtype="<i2").tobytes())


def test_pcm16_scaling(tmp_path):
    _pcm16_file(tmp_path / "a.wav", [16384, -32768, 0, 32767])
    clip = read_wav(tmp_path / "a.wav")
    assert clip.samples[0] == 0.5 and clip.samples[1] == -1.0 and clip.samples[2] == 0.0
    assert clip.sample_rate_hz == 5000


@pytest.mark.parametrize("encoding,bits", [("pcm16", 16), ("pcm24", 24), ("pcm32", 32)])
def test_integer_round_trip_bit_exact(tmp_path, rng, encoding, bits):
    ints = rng.integers(-(1 << (bits - 1)), 1 << (bits - 1), 1000)
    ints[:2] = [-(1 << (bits - 1)), (1 << (bits - 1)) - 1]
    clip = AudioClip(ints / float(1 << (bits - 1)), 5000)
    write_wav(clip, tmp_path / "a.wav", encoding)
    back = read_wav(tmp_path / "a.wav")
    np.testing.assert_array_equal(back.samples, clip.samples)
    assert read_wav_info(tmp_path / "a.wav").encoding == encoding


def test_pcm16_matches_stdlib_wave(tmp_path, rng):
    x = rng.uniform(-1, 1, 300)
    write_wav(AudioClip(x, 8000), tmp_path / "a.wav", "pcm16")
    with wave.open(str(tmp_path / "a.wav")) as w:
        assert (w.getnchannels(), w.getsampwidth(), w.getframerate(), w.getnframes()) == (1, 2, 8000, 300)
        stored = np.frombuffer(w.readframes(300), dtype="<i2")
    np.testing.assert_array_equal(stored, np.clip(np.sign(x * 32768) * np.floor(np.abs(x * 32768) + 0.5), -32768, 32767))


def test_clamp_and_rounding(tmp_path):
    write_wav(AudioClip([1.0, -1.0, 1.5 / 32768, -1.5 / 32768, 0.0], 5000), tmp_path / "a.wav", "pcm16")
    with wave.open(str(tmp_path / "a.wav")) as w:
        stored = np.frombuffer(w.readframes(5), dtype="<i2")
    assert stored.tolist() == [32767, -32768, 2, -2, 0]


def test_zero_clip_payload(tmp_path):
    write_wav(AudioClip(np.zeros(10), 5000), tmp_path / "a.wav", "pcm16")
    assert (tmp_path / "a.wav").read_bytes()[-20:] == b"\x00" * 20


def test_float32_round_trip(tmp_path, rng):
    x = rng.standard_normal(500).astype(np.float32).astype(np.float64)
    write_wav(AudioClip(x, 5000), tmp_path / "a.wav", "float32")
    np.testing.assert_array_equal(read_wav(tmp_path / "a.wav").samples, x)
    y = rng.standard_normal(500)
    write_wav(AudioClip(y, 5000), tmp_path / "b.wav", "float32")
    back = read_wav(tmp_path / "b.wav").samples
    assert np.all(np.abs(back - y) <= np.spacing(np.abs(y).astype(np.float32)))


def test_rejects_stereo(tmp_path):
    _pcm16_file(tmp_path / "s.wav", [1, 2, 3, 4], channels=2)
    with pytest.raises(WavFormatError, match="mono"):
        read_wav(tmp_path / "s.wav")


def test_rejects_truncated(tmp_path):
    _pcm16_file(tmp_path / "a.wav", np.arange(100))
    data = (tmp_path / "a.wav").read_bytes()
    (tmp_path / "t.wav").write_bytes(data[:-10])
    with pytest.raises(WavFormatError, match="truncated"):
        read_wav(tmp_path / "t.wav")


def test_rejects_unsupported_encoding(tmp_path):
    fmt = struct.pack("<HHIIHH", 1, 1, 5000, 5000, 1, 8)
    body = b"fmt " + struct.pack("<I", 16) + fmt + b"data" + struct.pack("<I", 4) + b"\x80\x80\x80\x80"
    (tmp_path / "u8.wav").write_bytes(b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body)
    with pytest.raises(WavFormatError, match="unsupported"):
        read_wav(tmp_path / "u8.wav")
    (tmp_path / "junk.wav").write_bytes(b"not a wav file at all")
    with pytest.raises(WavFormatError):
        read_wav(tmp_path / "junk.wav")


def test_reads_extensible_float(tmp_path):
    x = np.array([0.25, -0.5, 0.125], dtype="<f4")
    ext = struct.pack("<HHIIHHHHI", 0xFFFE, 1, 5000, 20000, 4, 32, 22, 32, 4)
    ext += struct.pack("<H", 3) + b"\x00\x00\x00\x00\x10\x00\x80\x00\x00\xaa\x008\x9bq"
    body = b"fmt " + struct.pack("<I", len(ext)) + ext + b"data" + struct.pack("<I", 12) + x.tobytes()
    (tmp_path / "e.wav").write_bytes(b"RIFF" + struct.pack("<I", 4 + len(body)) + b"WAVE" + body)
    np.testing.assert_array_equal(read_wav(tmp_path / "e.wav").samples, x)


# -- manifests ---------------------------------------------------------------

def _corpus(tmp_path, rate_b=5000):
    write_wav(AudioClip(np.zeros(600), 5000), tmp_path / "a_o.wav", "pcm16")
    write_wav(AudioClip(np.zeros(600), 5000), tmp_path / "a_i.wav", "pcm16")
    write_wav(AudioClip(np.zeros(600), rate_b), tmp_path / "b_o.wav", "pcm16")
    (tmp_path / "a.csv").write_text("0,600,1\n")


def test_manifest_two_entries(tmp_path):
    _corpus(tmp_path)
    (tmp_path / "m.csv").write_text(
        "utterance_id,talker_id,outer_path,inear_path,labels_path\n"
        "u1,A,a_o.wav,a_i.wav,a.csv\n"
        "u2,B,b_o.wav,,\n"
    )
    m = load_manifest(tmp_path / "m.csv", 5000)
    assert len(m) == 2 and m.talkers == ["A", "B"]
    assert m.entries[0].inear_path == tmp_path / "a_i.wav"
    assert m.entries[1].inear_path is None and m.entries[1].labels_path is None
    assert load_manifest(tmp_path / "m.csv", 5000) == m


def test_manifest_rate_mismatch(tmp_path):
    _corpus(tmp_path, rate_b=16000)
    (tmp_path / "m.csv").write_text(
        "utterance_id,talker_id,outer_path,inear_path,labels_path\nu1,A,a_o.wav,a_i.wav,\nu2,B,b_o.wav,,\n"
    )
    with pytest.raises(ManifestError, match="u2"):
        load_manifest(tmp_path / "m.csv", 5000)


def test_manifest_duplicate_id(tmp_path):
    _corpus(tmp_path)
    (tmp_path / "m.csv").write_text(
        "utterance_id,talker_id,outer_path,inear_path,labels_path\nu1,A,a_o.wav,,\nu1,A,a_o.wav,,\n"
    )
    with pytest.raises(ManifestError, match="duplicate"):
        load_manifest(tmp_path / "m.csv", 5000)


def test_manifest_missing_file(tmp_path):
    _corpus(tmp_path)
    (tmp_path / "m.csv").write_text(
        "utterance_id,talker_id,outer_path,inear_path,labels_path\nu1,A,a_o.wav,nope.wav,\n"
    )
    with pytest.raises(MissingFileError, match="u1"):
        load_manifest(tmp_path / "m.csv", 5000)
