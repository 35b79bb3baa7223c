# %% [markdown]
# # Speech-independent relative transfer function
#
# A single complex gain per frequency bin, estimated by least squares from
# paired outer / in-ear spectrograms and applied frame by frame.

# %%
import numpy as np

from ownvoice import (
    AudioClip,
    RtfAccumulator,
    StftConfig,
    accumulate,
    analyze,
    apply_prediction_delay,
    finalize_speech_dependent,
    lsd,
    simulate_inear,
)
from ownvoice.synthetic import random_talker, render_inear, speechlike
from ownvoice.labels import LabelSegment

cfg = StftConfig()
rng = np.random.default_rng(1)
talker = random_talker(1, rng, lead=11)  # one class: a plain LTI filter

# %% [markdown]
# The in-ear signal leads the outer microphone by 11 samples, so it is
# delayed by the same amount before identification.

# %%
acc = RtfAccumulator.empty(cfg, num_classes=1, delay_samples=11)
pairs = []
for _ in range(5):
    n = 25000
    segs = [LabelSegment(0, n, 0)]
    outer = speechlike(n, rng)
    inear = render_inear(outer, segs, talker)
    o = AudioClip(outer, 5000.0)
    i = apply_prediction_delay(AudioClip(inear, 5000.0), 11)
    acc = accumulate(acc, analyze(o, cfg), analyze(i, cfg))
    pairs.append((o, i))

model = finalize_speech_dependent(acc)
true_response = np.fft.rfft(talker.firs[0], cfg.frame_len)
print("relative RTF error vs. true FIR response:",
      np.median(np.abs(model.global_rtf - true_response) / np.abs(true_response)))

# %%
for o, i in pairs[:2]:
    sim = simulate_inear(o, None, model, mode="independent").clip
    print("LSD real vs simulated: %.2f dB" % lsd(analyze(i, cfg), analyze(sim, cfg)).utterance_lsd_db)
