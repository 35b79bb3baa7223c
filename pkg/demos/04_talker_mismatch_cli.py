# %% [markdown]
# # Same-talker vs. talker-mismatch evaluation with the command line
#
# Writes a small synthetic corpus of three talkers, identifies one model
# per talker and runs both evaluation conditions. Equivalent shell session:
#
#     ownvoice identify corpus/manifest.csv models --num-classes 4
#     ownvoice experiment corpus/manifest.csv models results --num-classes 4 --seed 42

# %%
import csv
import tempfile
from pathlib import Path

import numpy as np

from ownvoice.cli import main
from ownvoice.synthetic import random_talker, write_corpus

work = Path(tempfile.mkdtemp(prefix="ownvoice-demo-"))
rng = np.random.default_rng(3)
talkers = {name: random_talker(4, rng, lead=11) for name in ("anna", "ben", "cleo")}
manifest = write_corpus(work / "corpus", talkers, utterances_per_talker=4, duration_s=5.0, seed=3)

# %%
flags = ["--num-classes", "4", "--seed", "42"]
assert main(["identify", str(manifest), str(work / "models"), *flags]) == 0
assert main(["experiment", str(manifest), str(work / "models"), str(work / "results"), *flags]) == 0

# %%
for condition in ("same_talker", "talker_mismatch"):
    with open(work / "results" / condition / "summary.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            print(f"{condition:16s} {row['group']:12s} mean {float(row['mean']):6.2f} dB"
                  f"  median {float(row['median']):6.2f} dB")
print("outputs in", work)
