import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ownvoice import (
    UNLABELED,
    AudioClip,
    FrameLabels,
    LabelSegment,
    Spectrogram,
    StftConfig,
    analyze,
    cluster_pseudo_phonemes,
    frames_to_segments,
    load_segments,
    segments_to_frames,
)
from ownvoice.errors import InsufficientFramesError, LabelFileError, ValidationError
from ownvoice.labels import format_segments, parse_segments


def test_single_segment(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("0,16000,5\n")
    assert load_segments(p, 62) == [LabelSegment(0, 16000, 5)]


def test_overlap_names_both_lines(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("0,100,1\n50,150,2\n")
    with pytest.raises(LabelFileError, match="lines 1 and 2"):
        load_segments(p, 62)


def test_empty_file(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("")
    assert load_segments(p) == []


def test_comments_and_file_order():
    text = "# phone alignment\n300,400,7\n\n0,100,2\n# trailing\n"
    assert parse_segments(text, 62) == [LabelSegment(300, 400, 7), LabelSegment(0, 100, 2)]


@pytest.mark.parametrize(
    "text,match",
    [
        ("0,100\n", "line 1"),
        ("0,100,a\n", "line 1"),
        ("# c\n0,100,62\n", "line 2"),
        ("100,100,1\n", "line 1"),
        ("0,10,1\n20,10,1\n", "line 2"),
    ],
)
def test_parse_errors_carry_line_number(text, match):
    with pytest.raises(LabelFileError, match=match):
        parse_segments(text, 62)


def test_all_frames_one_class(cfg):
    fl = segments_to_frames([LabelSegment(0, 4096, 5)], cfg, 31, 62)
    assert np.all(fl.labels == 5) and len(fl) == 31


def test_majority_by_sample_count(cfg):
    fl = segments_to_frames([LabelSegment(0, 100, 1), LabelSegment(100, 256, 2)], cfg, 1, 62)
    assert fl.labels[0] == 2


def test_tie_goes_to_earlier_segment(cfg):
    segs = [LabelSegment(128, 256, 4), LabelSegment(0, 128, 3)]
    assert segments_to_frames(segs, cfg, 1, 62).labels[0] == 3


def test_uncovered_frames(cfg):
    fl = segments_to_frames([LabelSegment(0, 256, 1)], cfg, 4, 62)
    # frame 1 = [128, 384): 128 covered vs 128 uncovered -> class wins the tie
    assert list(fl.labels) == [1, 1, UNLABELED, UNLABELED]
    fl = segments_to_frames([LabelSegment(0, 100, 1)], cfg, 1, 62)
    assert fl.labels[0] == UNLABELED  # 156 uncovered samples outweigh 100


def test_empty_segments_all_unlabeled(cfg):
    fl = segments_to_frames([], cfg, 5, 62)
    assert fl.num_unlabeled == 5


def _brute_force_frames(segments, cfg, L):
    """Per-sample vote counting."""
    out = []
    for l in range(L):
        counts, first = {}, {}
        for n in range(l * cfg.hop, l * cfg.hop + cfg.frame_len):
            owner = [s for s in segments if s.start_sample <= n < s.end_sample]
            if owner:
                c = owner[0].class_id
                counts[c] = counts.get(c, 0) + 1
                first[c] = min(first.get(c, 1 << 60), owner[0].start_sample)
        uncovered = cfg.frame_len - sum(counts.values())
        if not counts:
            out.append(UNLABELED)
            continue
        best = min(counts, key=lambda c: (-counts[c], first[c]))
        out.append(best if counts[best] >= uncovered else UNLABELED)
    return out


@st.composite
def segment_lists(draw):
    n = draw(st.integers(1, 12))
    cuts = sorted(draw(st.lists(st.integers(0, 1200), min_size=2 * n, max_size=2 * n, unique=True)))
    segs = []
    for i in range(n):
        if draw(st.booleans()) or i == 0:
            segs.append(LabelSegment(cuts[2 * i], cuts[2 * i + 1], draw(st.integers(0, 4))))
    return segs


@settings(max_examples=60, deadline=None)
@given(segs=segment_lists(), seed=st.integers(0, 1000))
def test_segments_to_frames_matches_brute_force_and_ignores_order(segs, seed):
    cfg = StftConfig(64, 32, 1000.0)
    L = 20
    expected = segments_to_frames(segs, cfg, L, 5)
    assert list(expected.labels) == _brute_force_frames(segs, cfg, L)
    shuffled = list(segs)
    random.Random(seed).shuffle(shuffled)
    assert segments_to_frames(shuffled, cfg, L, 5) == expected


def test_frame_labels_validation():
    with pytest.raises(ValidationError):
        FrameLabels([0, 3], 3)
    with pytest.raises(ValidationError):
        FrameLabels([0, -2], 3)
    assert len(FrameLabels([0, UNLABELED, 2], 3)) == 3


def test_frames_to_segments_round_trip(cfg, rng):
    lab = FrameLabels(rng.integers(0, 4, 40), 4)
    segs = frames_to_segments(lab, cfg, 41 * 128 + 100)
    assert segs[0].start_sample == 0 and segs[-1].end_sample == 41 * 128 + 100
    assert segments_to_frames(parse_segments(format_segments(segs), 4), cfg, 40, 4) == lab


def test_frames_to_segments_single_class(cfg):
    segs = frames_to_segments(FrameLabels(np.zeros(10, int), 1), cfg, 5000)
    assert segs == [LabelSegment(0, 5000, 0)]


# -- clustering --------------------------------------------------------------

def test_cluster_single_class(cfg, rng):
    spec = analyze(AudioClip(rng.standard_normal(4096), 5000.0), cfg)
    fl = cluster_pseudo_phonemes(spec, 1, seed=0)
    assert np.all(fl.labels == 0) and len(fl) == spec.num_frames


def _alternating_spec(cfg, rng, L=40):
    Y = 1e-3 * (rng.standard_normal((L, cfg.num_bins)) + 1j * rng.standard_normal((L, cfg.num_bins)))
    Y[0::2, 10] += 50.0
    Y[1::2, 40] += 50.0
    return Spectrogram(Y, cfg)


def test_cluster_recovers_alternation(cfg, rng):
    fl = cluster_pseudo_phonemes(_alternating_spec(cfg, rng), 2, seed=3)
    even, odd = fl.labels[0::2], fl.labels[1::2]
    assert len(set(even)) == 1 and len(set(odd)) == 1 and even[0] != odd[0]


def test_cluster_deterministic(cfg, rng):
    spec = analyze(AudioClip(rng.standard_normal(8192), 5000.0), cfg)
    assert cluster_pseudo_phonemes(spec, 5, seed=7) == cluster_pseudo_phonemes(spec, 5, seed=7)


def _same_partition(a, b):
    mapping = {}
    for x, y in zip(a, b):
        if mapping.setdefault(x, y) != y:
            return False
    return len(set(mapping.values())) == len(mapping)


@pytest.mark.parametrize("c", [0.01, 3.0, 250.0])
def test_cluster_scale_invariance(cfg, rng, c):
    x = rng.standard_normal(8192)
    a = cluster_pseudo_phonemes(analyze(AudioClip(x, 5000.0), cfg), 4, seed=1)
    b = cluster_pseudo_phonemes(analyze(AudioClip(c * x, 5000.0), cfg), 4, seed=1)
    assert _same_partition(a.labels, b.labels)


def test_cluster_insufficient_frames(cfg, rng):
    spec = analyze(AudioClip(rng.standard_normal(1024), 5000.0), cfg)
    with pytest.raises(InsufficientFramesError):
        cluster_pseudo_phonemes(spec, spec.num_frames + 1, seed=0)


def test_cluster_duplicate_frames(cfg):
    Y = np.ones((6, cfg.num_bins), dtype=complex)
    fl = cluster_pseudo_phonemes(Spectrogram(Y, cfg), 3, seed=0)
    assert len(fl) == 6
