"""Acceptance suite: one test per release criterion, each printing a
pass/fail line (run with ``pytest tests/test_acceptance.py -s`` to watch).

Tolerances are fixed here, not calibrated: 0.531004... bits is the
closed-form content of the flip-0.1 balanced binary construction (see the
enumeration oracle in test_synthetic.py), 0.05/0.03/0.02 bit tolerances and
the r >= 0.85 stability bar come with the criteria themselves.
"""

import json
import os
import time

import numpy as np
import pytest

from vinfo import (Dataset, FamilySpec, FeatureSpec, Instance, OptimizerSpec,
                   TransformSpec, apply, compute_all, conditional_v_information,
                   fraction_sweep, generate_independent, generate_planted,
                   loo_artefacts, pvi_correlation, serialize_input, split_dataset,
                   train_pair, whitespace_tokens, write_pvi_csv)
from vinfo.cli import main
from vinfo.synthetic import PlantedSpec

TRUTH = 0.5310044064107188          # 1 - H_b(0.1), frozen from the oracle
PLANTED_SEED = 20260809


def check(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def small_planted_family(seed: int, orders=(1,), **opt) -> FamilySpec:
    opt.setdefault("learning_rate", 0.01)
    opt.setdefault("batch_size", 64)
    return FamilySpec(kind="bow_linear",
                      features=FeatureSpec(hash_dim=2 ** 14, ngram_orders=orders),
                      optimizer=OptimizerSpec(**opt), seed=seed)


@pytest.fixture(scope="module")
def pipeline_10k():
    """Full default-family pipeline on the n=10000 construction, timed."""
    t0 = time.perf_counter()
    train, dev, test, truth = generate_planted(
        PlantedSpec(n=10000, flip_rate=0.1, seed=PLANTED_SEED))
    pair = train_pair(FamilySpec(kind="bow_linear", seed=7), train, dev)
    records, summary = compute_all(pair, test)
    elapsed = time.perf_counter() - t0
    return {"truth": truth, "records": records, "summary": summary,
            "elapsed": elapsed, "splits": (train, dev, test), "pair": pair}


@pytest.fixture(scope="module")
def planted_6k():
    return generate_planted(PlantedSpec(n=6000, flip_rate=0.1, seed=31337))


@pytest.fixture(scope="module")
def pair_6k(planted_6k):
    train, dev, _, _ = planted_6k
    return train_pair(small_planted_family(seed=101), train, dev)


def test_c01_planted_information_recovery(pipeline_10k):
    est = pipeline_10k["summary"].v_information
    err = abs(est - TRUTH)
    elapsed = pipeline_10k["elapsed"]
    check("C01 planted-recovery",
          err <= 0.05 and elapsed < 60.0,
          f"estimate={est:.4f} truth={TRUTH:.4f} err={err:.4f} (<=0.05), "
          f"runtime={elapsed:.1f}s (<60s)")


def test_c02_independence(pipeline_10k):
    train, dev, test = split_dataset(generate_independent(10000, 2, seed=606))
    pair = train_pair(FamilySpec(kind="bow_linear", seed=9), train, dev)
    _, summary = compute_all(pair, test)
    bound = max(0.02, 3.0 * summary.pvi_std_err)
    check("C02 independence",
          abs(summary.v_information) <= bound,
          f"|v|={abs(summary.v_information):.5f} <= max(0.02, 3*std_err)={bound:.5f}")


def test_c03_mean_pvi_identity(pipeline_10k):
    summary = pipeline_10k["summary"]
    mean = float(np.mean([r.pvi_bits for r in pipeline_10k["records"]]))
    check("C03 mean-pvi-identity",
          summary.v_information == mean,
          f"summary={summary.v_information!r} == mean(pvi_bits)={mean!r} (exact)")


def test_c04_shuffle_order_invariance(planted_6k, tmp_path):
    train, dev, test, _ = planted_6k
    fam = small_planted_family(seed=11, orders=(1, 2))
    paths = {}
    for name, spec in (("identity", TransformSpec(kind="identity")),
                       ("shuffle", TransformSpec(kind="shuffle", params={"seed": 13}))):
        pair = train_pair(fam, apply(spec, train), apply(spec, dev))
        records, _ = compute_all(pair, apply(spec, test))
        paths[name] = str(tmp_path / f"{name}.csv")
        write_pvi_csv(records, test.label_space, paths[name])
    a = open(paths["identity"], "rb").read()
    b = open(paths["shuffle"], "rb").read()
    check("C04 order-invariance", a == b,
          f"identity and shuffle PVI CSVs byte-identical ({len(a)} bytes)")


def test_c05_encryption_collapse(planted_6k):
    train, dev, test, _ = planted_6k
    fam = small_planted_family(seed=17)
    enc = TransformSpec(kind="sentence_encrypt", params={"seed": 19})
    pair_id = train_pair(fam, train, dev)
    _, sum_id = compute_all(pair_id, test)
    pair_enc = train_pair(fam, apply(enc, train), apply(enc, dev))
    _, sum_enc = compute_all(pair_enc, apply(enc, test))
    check("C05 encryption-collapse",
          sum_enc.v_information <= 0.05 and sum_id.v_information >= 0.45,
          f"encrypted={sum_enc.v_information:.4f} (<=0.05), "
          f"identity={sum_id.v_information:.4f} (>=0.45)")


def test_c06_family_monotonicity():
    train, dev, _, _ = generate_planted(PlantedSpec(n=4000, flip_rate=0.1, seed=11))
    worst = None
    for seed in (1, 2, 3):
        best = {}
        for orders in ((1,), (1, 2)):
            fam = FamilySpec(kind="bow_linear",
                             features=FeatureSpec(hash_dim=2 ** 16, ngram_orders=orders),
                             seed=seed)
            pair = train_pair(fam, train, dev)
            best[orders] = min(pair.metadata["dev_entropy_input_bits"])
        margin = best[(1,)] - (best[(1, 2)] - 0.03)
        worst = margin if worst is None else min(worst, margin)
    check("C06 monotonicity", worst >= 0.0,
          f"min over 3 seeds of H_dev(uni) - (H_dev(uni+bi) - 0.03) = {worst:.4f} >= 0")


def test_c07_loo_artefact_recovery(planted_6k, pair_6k):
    _, _, test, _ = planted_6k
    arts = loo_artefacts(pair_6k.input_model, test, "c1", min_count=20, top_k=10)
    top = arts[0]
    # a token absent from an instance leaves that instance's term exactly 0
    inst = test.instances[0]
    assert "ghost_token" not in whitespace_tokens(inst.fields["text"])
    kept = " ".join(t for t in inst.fields["text"].split() if t != "ghost_token")
    same = Instance(id=inst.id, fields={"text": kept}, gold=inst.gold)
    p_a = pair_6k.input_model.predict_proba(serialize_input(inst, test.schema))
    p_b = pair_6k.input_model.predict_proba(serialize_input(same, test.schema))
    zero_term = bool(np.array_equal(p_a, p_b))
    check("C07 loo-artefacts",
          top.token == "cue1x0" and top.delta_bits >= 0.5 and zero_term,
          f"top={top.token} delta={top.delta_bits:.3f} bits (>=0.5, rank 1), "
          f"absent-token term exactly 0: {zero_term}")


def test_c08_conditional_information(planted_6k):
    train, dev, test, _ = planted_6k
    fam = small_planted_family(seed=23)

    def duplicated(ds):
        instances = tuple(Instance(id=i.id, fields={"text": i.fields["text"],
                                                    "copy": i.fields["text"]}, gold=i.gold)
                          for i in ds)
        return Dataset(schema=("text", "copy"), label_space=ds.label_space,
                       instances=instances, split=ds.split)

    dup = conditional_v_information(fam, duplicated(train), duplicated(test),
                                    ["copy"], ["text"], dev=duplicated(dev))
    empty_b = conditional_v_information(fam, train, test, [], ["text"], dev=dev)
    pair = train_pair(fam, train, dev)
    _, summary = compute_all(pair, test)
    plain = summary.v_information
    check("C08 conditional-information",
          abs(dup) <= 0.05 and abs(empty_b - plain) <= 0.05,
          f"condition-out-self={dup:.4f} (|.|<=0.05), "
          f"empty-conditioning={empty_b:.4f} vs plain={plain:.4f} (|diff|<=0.05)")


def test_c09_cross_seed_stability(planted_6k, pair_6k):
    train, dev, test, _ = planted_6k
    pair_b = train_pair(small_planted_family(seed=202), train, dev)
    rec_a, _ = compute_all(pair_6k, test)
    rec_b, _ = compute_all(pair_b, test)
    r = pvi_correlation(rec_a, rec_b)
    check("C09 cross-seed-stability", r >= 0.85, f"pearson r={r:.4f} >= 0.85")


def test_c10_fraction_sweep_plateau(planted_6k):
    train, dev, test, _ = planted_6k
    fam = small_planted_family(seed=29)
    rows = fraction_sweep(fam, train, test, [0.8, 1.0], repeats=3, dev=dev)
    by_frac = {row.fraction: row for row in rows}
    diff = abs(by_frac[0.8].mean_bits - by_frac[1.0].mean_bits)
    check("C10 sweep-plateau", diff <= 0.03,
          f"|mean(0.8)-mean(1.0)|={diff:.4f} <= 0.03 "
          f"(0.8: {by_frac[0.8].mean_bits:.4f}, 1.0: {by_frac[1.0].mean_bits:.4f})")


def test_c11_run_determinism(tmp_path):
    cfg_path = str(tmp_path / "run.json")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        json.dump({
            "seed": 99,
            "datasets": {"train": "data/train.jsonl", "dev": "data/dev.jsonl",
                         "test": "data/test.jsonl"},
            "family": {"kind": "bow_linear",
                       "features": {"hash_dim": 4096, "ngram_orders": [1]},
                       "optimizer": {"learning_rate": 0.01, "batch_size": 64,
                                     "max_epochs": 10, "early_stop_patience": 3}},
            "synth": {"kind": "planted", "n": 1500, "flip_rate": 0.1, "vocab_size": 120},
            "sweep": {"fractions": [0.5, 1.0], "repeats": 2},
        }, fh)

    produced = {}
    for run in ("one", "two"):
        data_dir = str(tmp_path / run / "data")
        out_dir = str(tmp_path / run / "out")
        assert main(["synth", "--config", cfg_path, "--out", data_dir]) == 0
        # point the config's dataset paths at this run's synth output
        run_cfg = str(tmp_path / run / "run.json")
        with open(cfg_path, encoding="utf-8") as fh:
            raw = json.load(fh)
        raw["datasets"] = {s: os.path.join(data_dir, f"{s}.jsonl")
                           for s in ("train", "dev", "test")}
        with open(run_cfg, "w", encoding="utf-8") as fh:
            json.dump(raw, fh)
        assert main(["pvi", "--config", run_cfg, "--out", out_dir]) == 0
        assert main(["sweep", "--config", run_cfg, "--out", out_dir]) == 0
        files = {}
        for name in ("data/train.jsonl", "data/dev.jsonl", "data/test.jsonl",
                     "data/synth.json", "out/pvi.csv", "out/summary.json",
                     "out/sweep.csv", "out/sweep.json"):
            files[name] = open(os.path.join(str(tmp_path / run), name), "rb").read()
        produced[run] = files

    mismatched = [n for n in produced["one"]
                  if produced["one"][n] != produced["two"][n]]
    check("C11 determinism", not mismatched,
          f"two invocations, {len(produced['one'])} report files byte-identical"
          + (f"; MISMATCH in {mismatched}" if mismatched else ""))
