# %% [markdown]
# # Phoneme-dependent model
#
# One RTF per phoneme class, selected frame by frame through a label
# sequence. Here the "phonemes" are synthetic: each class colours the outer
# signal differently and passes through its own FIR filter to the in-ear
# microphone. When labels are unavailable, k-means pseudo-phonemes stand in.

# %%
import numpy as np

from ownvoice import (
    AudioClip,
    RtfAccumulator,
    StftConfig,
    accumulate,
    analyze,
    apply_prediction_delay,
    cluster_pseudo_phonemes,
    finalize_speech_dependent,
    lsd,
    segments_to_frames,
    simulate_inear,
)
from ownvoice.synthetic import random_segments, random_talker, render_inear, speechlike

cfg = StftConfig()
P = 6
rng = np.random.default_rng(2)
talker = random_talker(P, rng, lead=11)
colours = rng.standard_normal((P, 4)) * np.array([1.0, 0.6, 0.3, 0.1])


def utterance(n=25000):
    segs = random_segments(n, P, rng, 1024)
    outer = speechlike(n, rng, segs, colours)
    inear = render_inear(outer, segs, talker)
    o = AudioClip(outer, 5000.0)
    i = apply_prediction_delay(AudioClip(inear, 5000.0), 11)
    return o, i, segs


corpus = [utterance() for _ in range(8)]

# %%
acc = RtfAccumulator.empty(cfg, P, 11)
for o, i, segs in corpus:
    Yo = analyze(o, cfg)
    acc = accumulate(acc, Yo, analyze(i, cfg), segments_to_frames(segs, cfg, Yo.num_frames, P))
model = finalize_speech_dependent(acc)
print("frames per class:", model.frame_counts.tolist())

# %%
for o, i, segs in corpus[:3]:
    labels = segments_to_frames(segs, cfg, cfg.num_frames(len(o)), P)
    ref = analyze(i, cfg)
    dep = simulate_inear(o, labels, model).clip
    ind = simulate_inear(o, None, model, mode="independent").clip
    print("LSD dependent %.2f dB   independent %.2f dB" % (
        lsd(ref, analyze(dep, cfg)).utterance_lsd_db, lsd(ref, analyze(ind, cfg)).utterance_lsd_db))

# %% [markdown]
# Pseudo-phonemes: cluster the outer log spectra instead of using the true
# segments, identify again and compare.

# %%
acc = RtfAccumulator.empty(cfg, P, 11)
pseudo = []
for o, i, _ in corpus:
    Yo = analyze(o, cfg)
    lab = cluster_pseudo_phonemes(Yo, P, seed=0)
    pseudo.append(lab)
    acc = accumulate(acc, Yo, analyze(i, cfg), lab)
pmodel = finalize_speech_dependent(acc)
scores = [lsd(analyze(i, cfg), analyze(simulate_inear(o, lab, pmodel).clip, cfg)).utterance_lsd_db
          for (o, i, _), lab in zip(corpus, pseudo)]
print("pseudo-phoneme model, mean LSD %.2f dB" % np.mean(scores))
