"""Finding token-level artefacts and hard slices.

Leave-one-out scoring ranks the tokens of a class by how much the model's
gold-label confidence drops when the token is removed, using the already
fitted model (no retraining). Slice means compare relative difficulty of
subsets; the planted trigger should dominate its class, and flipped-label
instances should drag their slice down.

Run:  python3 demos/03_token_artefacts_and_slices.py
"""

from vinfo import (FamilySpec, FeatureSpec, OptimizerSpec, PlantedSpec, SliceSpec,
                   compute_all, generate_planted, loo_artefacts, pvi_correlation,
                   slice_by_class, slice_mean_pvi, train_pair)

train, dev, test, truth = generate_planted(
    PlantedSpec(n=5000, flip_rate=0.1, seed=23, triggers_per_class=2))

family = FamilySpec(kind="bow_linear",
                    features=FeatureSpec(hash_dim=2 ** 14, ngram_orders=(1,)),
                    optimizer=OptimizerSpec(learning_rate=0.01),
                    seed=2)
pair = train_pair(family, train, dev)
records, summary = compute_all(pair, test)
print(f"dataset estimate: {summary.v_information:.4f} bits (truth {truth:.4f})\n")

# ---------------------------------------------------------------------------
# 1. Token-level artefacts by leave-one-out, per class.

for label in test.label_space.labels:
    arts = loo_artefacts(pair.input_model, test, label, min_count=15, top_k=4)
    pretty = ", ".join(f"{a.token} ({a.delta_bits:.3f})" for a in arts)
    print(f"class {label}: {pretty}")
print("the class triggers top their lists; filler deltas sit near zero\n")

# ---------------------------------------------------------------------------
# 2. Slice means: per class, and the flipped-label sub-population.
#
# The generator hides which labels were flipped, but flipped instances are
# exactly those whose trigger disagrees with the gold label, so we can build
# that slice predicate and watch it sink.


def trigger_class(inst):
    cue = [t for t in inst.fields["text"].split() if t.startswith("cue")][0]
    return int(cue[3])


slices = [slice_by_class(test, label) for label in test.label_space.labels]
slices.append(SliceSpec(name="label==trigger",
                        predicate=lambda inst, rec: inst.gold == trigger_class(inst)))
slices.append(SliceSpec(name="label!=trigger (flipped)",
                        predicate=lambda inst, rec: inst.gold != trigger_class(inst)))

report = slice_mean_pvi(records, test, slices)
print(f"{'slice':28s} {'n':>5s} {'mean PVI':>9s}")
for row in report.rows:
    flag = "  (small slice)" if row.flagged else ""
    print(f"{row.slice:28s} {row.n:5d} {row.mean_pvi_bits:9.4f}{flag}")
print(f"note: {report.note}\n")

# ---------------------------------------------------------------------------
# 3. Stability: a different seed ranks instances almost identically.

pair_b = train_pair(FamilySpec(kind="bow_linear", features=family.features,
                               optimizer=family.optimizer, seed=200), train, dev)
records_b, _ = compute_all(pair_b, test)
print(f"cross-seed PVI correlation: r = {pvi_correlation(records, records_b):.4f}")
