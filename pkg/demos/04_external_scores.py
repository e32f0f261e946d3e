"""Analyzing an external model through the score-import path.

Any model family, however heavy, can feed these analyses: a harness exports
one line per held-out instance with the gold label's log-probability under
the input-conditioned and null-trained models, and import_scores turns those
into the same PVI records the built-in families produce. This demo fakes an
"external" model with a noisy oracle to show the mechanics end to end.

Run:  python3 demos/04_external_scores.py
"""

import math
import os
import tempfile

import numpy as np

from vinfo import (FamilySpec, FeatureSpec, OptimizerSpec, PlantedSpec,
                   compute_all, correct_incorrect_gap, generate_planted,
                   import_scores, load_scores, pvi_correlation, train_pair,
                   write_scores)
from vinfo.io import ScoreRow, ScoreSet

train, dev, test, truth = generate_planted(PlantedSpec(n=4000, flip_rate=0.1, seed=29))
rng = np.random.default_rng(0)

# ---------------------------------------------------------------------------
# 1. Pretend an external harness scored the held-out split.
#
# The "external model" here knows the construction: it reads the trigger and
# reports a slightly noisy 0.9 on the trigger's class. Scores are written in
# nats (log_base "e") to show the conversion on ingest.

rows = []
for inst in test:
    cue_class = int([t for t in inst.fields["text"].split() if t.startswith("cue")][0][3])
    p_gold = 0.9 if inst.gold == cue_class else 0.1
    p_gold = min(max(p_gold + rng.normal(0, 0.02), 1e-6), 1 - 1e-6)
    dist = [p_gold, 1 - p_gold] if inst.gold == 0 else [1 - p_gold, p_gold]
    rows.append(ScoreRow(
        id=inst.id,
        logp_gold_given_x=math.log(p_gold),
        logp_gold_null=math.log(0.5),
        label_logps_x=tuple(math.log(p) for p in dist),
        label_logps_null=(math.log(0.5), math.log(0.5)),
    ))
scores = ScoreSet(log_base="e", model={"name": "noisy-oracle", "seed": 0}, rows=tuple(rows))

path = os.path.join(tempfile.mkdtemp(), "scores.jsonl")
write_scores(scores, path)
print(f"wrote {path} ({len(rows)} scored instances, log base e)")

# ---------------------------------------------------------------------------
# 2. Import and analyze exactly like an in-toolkit run.

records, summary = import_scores(load_scores(path), test)
print(f"\nimported estimate: {summary.v_information:.4f} bits (truth {truth:.4f})")
gap = correct_incorrect_gap(records)
print(f"correct/incorrect gap: {gap.gap_bits:.3f} bits, p={gap.p_value:.2e}")

# ---------------------------------------------------------------------------
# 3. Compare the external model's difficulty ranking with a built-in family.

family = FamilySpec(kind="bow_linear",
                    features=FeatureSpec(hash_dim=2 ** 14, ngram_orders=(1,)),
                    optimizer=OptimizerSpec(learning_rate=0.01),
                    seed=3)
pair = train_pair(family, train, dev)
records_local, summary_local = compute_all(pair, test)
r = pvi_correlation(records, records_local)
print(f"\nbuilt-in family estimate: {summary_local.v_information:.4f} bits")
print(f"cross-family PVI correlation: r = {r:.4f}")
print("the two families agree on which instances are hard: the flipped ones")
