"""Slices, the correct/incorrect gap, leave-one-out artefacts, correlation."""

import math

import numpy as np
import pytest

from vinfo import (Dataset, EmptyDataError, Instance, LabelSpace, PviRecord,
                   SliceSpec, UndefinedStatisticError, ValidationError, compute_all,
                   correct_incorrect_gap, correlation_of_maps, loo_artefacts,
                   overlap_length, pvi_correlation, scalar_correlation,
                   serialize_input, slice_by_class, slice_by_ids,
                   slice_by_scalar_range, slice_mean_pvi,
                   train_pair, whitespace_tokens)
from vinfo.core import PROB_FLOOR
from vinfo.synthetic import PlantedSpec, generate_planted

from helpers import small_family


def fake_record(i, pvi_bits, correct=True, gold=0):
    return PviRecord(id=f"i{i:05d}", gold=gold, pvi_bits=pvi_bits,
                     logp_x_bits=pvi_bits - 1.0, logp_null_bits=-1.0,
                     predicted=gold if correct else 1 - gold, correct=correct)


@pytest.fixture(scope="module")
def planted_run():
    train, dev, test, truth = generate_planted(PlantedSpec(n=4000, flip_rate=0.1, seed=31))
    pair = train_pair(small_family(seed=5), train, dev)
    records, summary = compute_all(pair, test)
    return pair, test, records, summary


# ---------------------------------------------------------------------------
# slice_mean_pvi


def test_whole_dataset_slice_equals_summary_exactly(planted_run):
    _, test, records, summary = planted_run
    whole = SliceSpec(name="all", predicate=lambda inst, rec: True)
    report = slice_mean_pvi(records, test, [whole])
    assert report.rows[0].mean_pvi_bits == summary.v_information
    assert report.rows[0].n == summary.n
    assert "usable information" in report.note


def test_small_slice_flagged_not_dropped(planted_run):
    _, test, records, _ = planted_run
    tiny = slice_by_ids([test.instances[0].id], name="one")
    report = slice_mean_pvi(records, test, [tiny], min_slice_n=10)
    row = report.rows[0]
    assert row.n == 1 and row.flagged
    assert math.isfinite(row.mean_pvi_bits)


def test_empty_slice_flagged_nan(planted_run):
    _, test, records, _ = planted_run
    report = slice_mean_pvi(records, test, [slice_by_ids([], name="none")])
    assert report.rows[0].n == 0 and report.rows[0].flagged
    assert math.isnan(report.rows[0].mean_pvi_bits)


def test_misaligned_records_error(planted_run):
    _, test, records, _ = planted_run
    with pytest.raises(ValidationError):
        slice_mean_pvi(records[:-5], test, [slice_by_class(test, "c0")])


def test_single_informative_class_has_higher_mean_pvi():
    # three classes; only class 0 carries a trigger token, the other two are
    # indistinguishable filler, so class 0's mean PVI must sit well above.
    rng = np.random.default_rng(32)
    space = LabelSpace(("c0", "c1", "c2"))
    fillers = [f"w{i}" for i in range(150)]

    def build(n, split):
        instances = []
        for i in range(n):
            c = int(rng.integers(0, 3))
            toks = [fillers[int(j)] for j in rng.integers(0, len(fillers), size=8)]
            if c == 0:
                toks.insert(int(rng.integers(0, 9)), "cuezero")
            label = c if rng.random() >= 0.1 else int(rng.choice([k for k in range(3) if k != c]))
            instances.append(Instance(id=f"{split}{i:05d}", fields={"text": " ".join(toks)},
                                      gold=label))
        return Dataset(schema=("text",), label_space=space,
                       instances=tuple(instances), split=split)

    train, dev, test = build(3000, "train"), build(500, "dev"), build(1000, "test")
    pair = train_pair(small_family(seed=6), train, dev)
    records, _ = compute_all(pair, test)
    report = slice_mean_pvi(records, test, [slice_by_class(test, c) for c in space.labels])
    means = {r.slice: r.mean_pvi_bits for r in report.rows}
    assert means["class=c0"] > means["class=c1"] + 0.2
    assert means["class=c0"] > means["class=c2"] + 0.2


def test_overlap_bins_reproduce_copy_artefact_shape():
    # NLI-style construction: entailment hypotheses copy premise tokens, so
    # zero-overlap entailment instances are the hardest slice.
    rng = np.random.default_rng(33)
    space = LabelSpace(("entailment", "contradiction"))
    vocab_p = [f"p{i}" for i in range(120)]
    vocab_h = [f"h{i}" for i in range(120)]

    def build(n, split):
        instances = []
        for i in range(n):
            gold = int(rng.integers(0, 2))
            prem = [vocab_p[j] for j in rng.choice(len(vocab_p), size=8, replace=False)]
            hyp = [vocab_h[j] for j in rng.choice(len(vocab_h), size=5, replace=False)]
            # entailment hypotheses usually copy; contradictions sometimes do,
            # which keeps overlap an imperfect cue and makes zero-overlap
            # entailment the hardest corner
            copy_rate = 0.85 if gold == 0 else 0.30
            if rng.random() < copy_rate:
                hyp[:3] = prem[:3]
            instances.append(Instance(id=f"{split}{i:05d}",
                                      fields={"premise": " ".join(prem),
                                              "hypothesis": " ".join(hyp)}, gold=gold))
        return Dataset(schema=("premise", "hypothesis"), label_space=space,
                       instances=tuple(instances), split=split)

    train, dev, test = build(2500, "train"), build(400, "dev"), build(1000, "test")
    # small vocab makes repeated-token bigrams a learnable overlap cue
    pair = train_pair(small_family(seed=7, orders=(1, 2), hash_dim=2 ** 16), train, dev)
    records, _ = compute_all(pair, test)

    def cls_bin(label, lo, hi):
        idx = space.index_of(label)
        return SliceSpec(
            name=f"{label}/overlap[{lo},{hi})",
            predicate=lambda inst, rec, idx=idx, lo=lo, hi=hi:
                inst.gold == idx and lo <= overlap_length(inst, "premise", "hypothesis") < hi)

    slices = [cls_bin(label, lo, hi)
              for label in space.labels for lo, hi in [(0, 1), (1, 99)]]
    report = slice_mean_pvi(records, test, slices, min_slice_n=5)
    means = {r.slice: r.mean_pvi_bits for r in report.rows}
    zero_overlap_entailment = means["entailment/overlap[0,1)"]
    assert zero_overlap_entailment == min(means.values())
    assert zero_overlap_entailment < means["entailment/overlap[1,99)"]


def test_scalar_range_slice(planted_run):
    _, test, records, _ = planted_run
    values = {inst.id: float(i % 4) for i, inst in enumerate(test)}
    report = slice_mean_pvi(records, test, [slice_by_scalar_range(values, 0.0, 2.0)])
    assert report.rows[0].n == sum(1 for i, _ in enumerate(test) if i % 4 in (0, 1))


# ---------------------------------------------------------------------------
# correct_incorrect_gap


def test_gap_requires_both_groups():
    with pytest.raises(UndefinedStatisticError, match="incorrectly"):
        correct_incorrect_gap([fake_record(i, 1.0, correct=True) for i in range(5)])
    with pytest.raises(UndefinedStatisticError, match="correctly"):
        correct_incorrect_gap([fake_record(i, -1.0, correct=False) for i in range(5)])


def test_gap_matches_direct_group_means(planted_run):
    _, _, records, _ = planted_run
    report = correct_incorrect_gap(records)
    right = [r.pvi_bits for r in records if r.correct]
    wrong = [r.pvi_bits for r in records if not r.correct]
    assert report.gap_bits == pytest.approx(np.mean(right) - np.mean(wrong), abs=1e-12)
    assert report.n_correct == len(right) and report.n_incorrect == len(wrong)
    assert report.gap_bits > 1.0
    assert report.p_value < 0.01


def test_gap_crossover_threshold_sits_between_groups():
    records = ([fake_record(i, -2.0 + 0.01 * i, correct=False) for i in range(60)]
               + [fake_record(100 + i, 1.0 + 0.01 * i, correct=True) for i in range(60)])
    report = correct_incorrect_gap(records)
    assert report.crossover_pvi_bits is not None
    assert -2.0 < report.crossover_pvi_bits <= 1.0


def test_gap_crossover_none_when_all_bins_majority_correct():
    records = ([fake_record(i, 0.5 + 0.01 * i, correct=True) for i in range(40)]
               + [fake_record(100 + i, 0.5 + 0.01 * i, correct=False) for i in range(10)])
    assert correct_incorrect_gap(records).crossover_pvi_bits is None


# ---------------------------------------------------------------------------
# loo_artefacts


def test_loo_recovers_planted_trigger(planted_run):
    pair, test, _, _ = planted_run
    arts = loo_artefacts(pair.input_model, test, "c1", min_count=20, top_k=10)
    assert arts, "expected at least one artefact"
    assert arts[0].token == "cue1x0"
    assert arts[0].delta_bits >= 0.5
    assert arts[0].count >= 20
    assert arts == sorted(arts, key=lambda a: -a.delta_bits)


def test_loo_delta_matches_direct_recomputation(planted_run):
    pair, test, _, _ = planted_run
    arts = loo_artefacts(pair.input_model, test, "c1", min_count=20, top_k=1)
    token = arts[0].token
    idx = test.label_space.index_of("c1")
    members = [inst for inst in test
               if inst.gold == idx and token in whitespace_tokens(inst.fields["text"])]
    terms = []
    for inst in members:
        full = serialize_input(inst, test.schema)
        ablated = " ".join(t for t in inst.fields["text"].split() if t != token)
        without = serialize_input(Instance(id=inst.id, fields={"text": ablated},
                                           gold=inst.gold), test.schema)
        p_full = max(pair.input_model.predict_proba(full)[inst.gold], PROB_FLOOR)
        p_wo = max(pair.input_model.predict_proba(without)[inst.gold], PROB_FLOOR)
        terms.append(math.log2(p_full) - math.log2(p_wo))
    assert arts[0].count == len(members)
    assert arts[0].delta_bits == pytest.approx(np.mean(terms), abs=1e-9)


def test_loo_token_absent_from_instance_changes_nothing(planted_run):
    pair, test, _, _ = planted_run
    inst = test.instances[0]
    absent = "neverseen_token"
    assert absent not in whitespace_tokens(inst.fields["text"])
    full = serialize_input(inst, test.schema)
    stripped = " ".join(t for t in inst.fields["text"].split() if t != absent)
    same = serialize_input(Instance(id=inst.id, fields={"text": stripped}, gold=inst.gold),
                           test.schema)
    a = pair.input_model.predict_proba(full)
    b = pair.input_model.predict_proba(same)
    assert np.array_equal(a, b)   # the per-instance term is exactly zero


def test_loo_excludes_tokens_of_other_classes(planted_run):
    pair, test, _, _ = planted_run
    arts = loo_artefacts(pair.input_model, test, "c1", min_count=5, top_k=10_000)
    tokens = {a.token for a in arts}
    assert "cue0x0" not in tokens or any(
        inst.gold == 1 and "cue0x0" in whitespace_tokens(inst.fields["text"])
        for inst in test)


def test_loo_empty_class_slice_raises(planted_run):
    pair, test, _, _ = planted_run
    one_class = test.with_instances([i for i in test if i.gold == 0])
    with pytest.raises(EmptyDataError):
        loo_artefacts(pair.input_model, one_class, "c1")


def test_loo_is_invariant_to_dataset_order(planted_run):
    pair, test, _, _ = planted_run
    arts = loo_artefacts(pair.input_model, test, "c1", min_count=20, top_k=5)
    shuffled = test.with_instances(tuple(reversed(test.instances)))
    arts_rev = loo_artefacts(pair.input_model, shuffled, "c1", min_count=20, top_k=5)
    assert arts == arts_rev


# ---------------------------------------------------------------------------
# correlation


def test_correlation_of_identical_vectors_is_one(planted_run):
    _, _, records, _ = planted_run
    assert pvi_correlation(records, records) == 1.0


def test_correlation_of_negated_vector_is_minus_one(planted_run):
    _, _, records, _ = planted_run
    flipped = [PviRecord(id=r.id, gold=r.gold, pvi_bits=-r.pvi_bits,
                         logp_x_bits=r.logp_x_bits, logp_null_bits=r.logp_null_bits,
                         predicted=r.predicted, correct=r.correct) for r in records]
    assert pvi_correlation(records, flipped) == pytest.approx(-1.0, abs=1e-12)


def test_correlation_is_exactly_symmetric(planted_run):
    _, _, records, _ = planted_run
    rng = np.random.default_rng(0)
    noisy = [PviRecord(id=r.id, gold=r.gold, pvi_bits=r.pvi_bits + float(rng.normal(0, 0.3)),
                       logp_x_bits=r.logp_x_bits, logp_null_bits=r.logp_null_bits,
                       predicted=r.predicted, correct=r.correct) for r in records]
    assert pvi_correlation(records, noisy) == pvi_correlation(noisy, records)


def test_correlation_id_mismatch_lists_ids():
    a = [fake_record(i, float(i)) for i in range(5)]
    b = [fake_record(i + 1, float(i)) for i in range(5)]
    with pytest.raises(ValidationError, match="i00000"):
        pvi_correlation(a, b)


def test_correlation_needs_three_points_and_variance():
    a = [fake_record(i, float(i)) for i in range(2)]
    with pytest.raises(ValidationError):
        pvi_correlation(a, a)
    flat = [fake_record(i, 1.0) for i in range(5)]
    with pytest.raises(UndefinedStatisticError):
        pvi_correlation(flat, flat)


def test_scalar_correlation_against_external_vector(planted_run):
    _, _, records, _ = planted_run
    agreement = {r.id: (1.0 if r.correct else 0.4) for r in records}
    r = scalar_correlation(records, agreement)
    assert r > 0.3   # easy instances get higher agreement by construction


def test_correlation_of_maps_matches_numpy(rng):
    a = {f"i{i}": float(v) for i, v in enumerate(rng.normal(size=50))}
    b = {k: v * 2 + float(rng.normal(0, 0.1)) for k, v in a.items()}
    ids = sorted(a)
    expected = np.corrcoef([a[i] for i in ids], [b[i] for i in ids])[0, 1]
    assert correlation_of_maps(a, b) == pytest.approx(float(expected), abs=1e-12)
