# %% [markdown]
# # STFT framing
#
# Frames of K = 256 samples (51.2 ms at 5 kHz), shifted by 128 samples, with a
# square-root Hann window on both analysis and synthesis. The squared window
# overlap-adds to one, so analysis followed by synthesis is exact away from
# the first and last half frame.

# %%
import numpy as np

from ownvoice import AudioClip, StftConfig, analyze, sqrt_hann_window, synthesize

cfg = StftConfig(frame_len=256, hop=128, sample_rate_hz=5000.0)
w = sqrt_hann_window(cfg.frame_len)
print("w[0], w[K/2]:", w[0], w[cfg.frame_len // 2])
print("max |w^2[n] + w^2[n+K/2] - 1|:", np.max(np.abs(w[:128] ** 2 + w[128:] ** 2 - 1)))

# %%
rng = np.random.default_rng(0)
x = rng.standard_normal(4096)
spec = analyze(AudioClip(x, 5000.0), cfg)
print("grid (frames, bins):", spec.shape)  # (31, 129)

y = synthesize(spec).samples
print("interior reconstruction error:", np.max(np.abs(y[128:-128] - x[128:-128])))

# %% [markdown]
# A sinusoid centred on bin 16 (312.5 Hz) peaks at k = 16. The sqrt-Hann
# window is not band-limited, so neighbouring bins still carry about a third
# of the peak.

# %%
n = np.arange(1024)
tone = analyze(AudioClip(np.cos(2 * np.pi * 312.5 * n / 5000.0), 5000.0), cfg)
mag = np.abs(tone.coefficients[2])
print("peak bin:", int(np.argmax(mag)), " |X[15]|/|X[16]|:", round(mag[15] / mag[16], 3))
