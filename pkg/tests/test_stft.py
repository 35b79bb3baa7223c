import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import direct_dft_frame
from ownvoice import AudioClip, Spectrogram, StftConfig, analyze, sqrt_hann_window, synthesize
from ownvoice.errors import ConfigError, TooShortError, ValidationError


def test_window_k4_by_hand():
    # periodic Hann at K=4: 0.5*(1 - cos(pi*n/2)) = [0, .5, 1, .5]
    np.testing.assert_allclose(sqrt_hann_window(4), [0, np.sqrt(0.5), 1, np.sqrt(0.5)], atol=1e-15)


def test_window_k8_endpoints():
    w = sqrt_hann_window(8)
    assert w[0] == 0.0
    assert w[4] == 1.0


@pytest.mark.parametrize("K", [4, 6, 8, 64, 256, 1000, 1024])
def test_window_cola_pairs(K):
    w = sqrt_hann_window(K)
    np.testing.assert_allclose(w[: K // 2] ** 2 + w[K // 2 :] ** 2, 1.0, atol=1e-15)


@pytest.mark.parametrize("K", [3, 2, 7, 0])
def test_window_rejects_bad_length(K):
    with pytest.raises(ConfigError):
        sqrt_hann_window(K)


def test_config_validation():
    with pytest.raises(ConfigError):
        StftConfig(256, 64)
    with pytest.raises(ConfigError):
        StftConfig(255, 127)
    with pytest.raises(ConfigError):
        StftConfig(256, 128, 0.0)
    assert StftConfig().num_bins == 129


def test_zero_clip_frame_count(cfg):
    spec = analyze(AudioClip(np.zeros(512), 5000.0), cfg)
    assert spec.shape == (3, 129)
    assert not spec.coefficients.any()


@pytest.mark.parametrize("N,L", [(256, 1), (383, 1), (384, 2), (4096, 31)])
def test_frame_count_formula(cfg, N, L):
    assert analyze(AudioClip(np.ones(N), 5000.0), cfg).num_frames == L == (N - 256) // 128 + 1


def test_impulse_at_window_peak(cfg):
    x = np.zeros(512)
    x[128] = 1.0
    spec = analyze(AudioClip(x, 5000.0), cfg)
    np.testing.assert_allclose(np.abs(spec.coefficients[0]), 1.0, atol=1e-12)
    w = sqrt_hann_window(256)
    frame0 = x[:256] * w
    np.testing.assert_allclose(spec.coefficients[0], direct_dft_frame(frame0), atol=1e-10)


def test_bin_centred_sinusoid_matches_direct_dft(cfg):
    n = np.arange(1024)
    x = np.cos(2 * np.pi * 312.5 * n / 5000.0)
    spec = analyze(AudioClip(x, 5000.0), cfg)
    w = sqrt_hann_window(256)
    for l in range(spec.num_frames):
        oracle = direct_dft_frame(x[l * 128 : l * 128 + 256] * w)
        np.testing.assert_allclose(spec.coefficients[l], oracle, atol=1e-9)
        mag = np.abs(spec.coefficients[l])
        assert np.argmax(mag) == 16
        # sqrt-Hann leaks: neighbours carry one third of the peak
        assert 0.3 < mag[15] / mag[16] < 0.35


def test_sample_rate_mismatch(cfg):
    with pytest.raises(ConfigError):
        analyze(AudioClip(np.zeros(512), 16000.0), cfg)


def test_too_short(cfg):
    with pytest.raises(TooShortError):
        analyze(AudioClip(np.zeros(255), 5000.0), cfg)


def test_audioclip_rejects_non_finite():
    with pytest.raises(ValidationError):
        AudioClip(np.array([0.0, np.nan]), 5000.0)
    with pytest.raises(ValidationError):
        AudioClip(np.array([]), 5000.0)


def test_spectrogram_bin_count(cfg):
    with pytest.raises(ValidationError):
        Spectrogram(np.zeros((2, 128)), cfg)


def test_types_are_immutable(cfg):
    clip = AudioClip(np.zeros(512), 5000.0)
    with pytest.raises(ValueError):
        clip.samples[0] = 1.0
    with pytest.raises(ValueError):
        analyze(clip, cfg).coefficients[0, 0] = 1.0


def test_synthesize_zero(cfg):
    out = synthesize(Spectrogram(np.zeros((5, 129)), cfg))
    assert len(out) == 4 * 128 + 256
    assert not out.samples.any()


def test_round_trip_random(cfg, rng):
    x = rng.standard_normal(4096)
    y = synthesize(analyze(AudioClip(x, 5000.0), cfg)).samples
    assert y.size == 4096
    err = np.max(np.abs(y[128:-128] - x[128:-128])) / np.max(np.abs(x))
    assert err < 1e-10


def test_round_trip_impulse(cfg):
    x = np.zeros(4096)
    x[1000] = 1.0
    y = synthesize(analyze(AudioClip(x, 5000.0), cfg)).samples
    assert np.argmax(np.abs(y)) == 1000
    assert abs(y[1000] - 1.0) < 1e-10
    assert np.max(np.abs(np.delete(y, 1000))) < 1e-10


def test_linearity(cfg, rng):
    x, y = rng.standard_normal(2048), rng.standard_normal(2048)
    a, b = 0.7, -2.3
    lhs = analyze(AudioClip(a * x + b * y, 5000.0), cfg).coefficients
    rhs = a * analyze(AudioClip(x, 5000.0), cfg).coefficients + b * analyze(AudioClip(y, 5000.0), cfg).coefficients
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))


def test_parseval_per_frame(cfg, rng):
    x = rng.standard_normal(2048)
    spec = analyze(AudioClip(x, 5000.0), cfg)
    w = sqrt_hann_window(256)
    for l in range(spec.num_frames):
        frame = x[l * 128 : l * 128 + 256] * w
        X = spec.coefficients[l]
        spectral = (abs(X[0]) ** 2 + 2 * np.sum(np.abs(X[1:-1]) ** 2) + abs(X[-1]) ** 2) / 256
        assert spectral == pytest.approx(np.sum(frame**2), rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(
    K=st.sampled_from([8, 16, 64, 256]),
    extra=st.integers(0, 700),
    seed=st.integers(0, 2**32 - 1),
)
def test_round_trip_property(K, extra, seed):
    cfg = StftConfig(K, K // 2, 1000.0)
    x = np.random.default_rng(seed).standard_normal(K + extra)
    y = synthesize(analyze(AudioClip(x, 1000.0), cfg)).samples
    n_out = y.size
    interior = slice(K // 2, n_out - K // 2)
    assert np.max(np.abs(y[interior] - x[:n_out][interior]), initial=0.0) <= 1e-10 * max(1.0, np.max(np.abs(x)))
