"""Generators and the closed-form oracle they are checked against.

`mutual_information_by_enumeration` below is the independent oracle: it sums
the joint (trigger class, label) table directly and never touches the
generator's closed form.
"""

import math

import numpy as np
import pytest

from vinfo import (ConfigurationError, EmptyDataError, compute_all, fraction_sweep,
                   generate_independent, generate_planted, planted_true_info_bits,
                   train_pair)
from vinfo.synthetic import PlantedSpec

from helpers import small_family


def mutual_information_by_enumeration(eps: float, k: int) -> float:
    """I(T; Y) in bits for a uniform trigger class T and the planted label
    rule, summed over the full joint table."""
    mi = 0.0
    p_t = 1.0 / k
    p_y = 1.0 / k   # symmetry: marginal over labels is uniform
    for t in range(k):
        for y in range(k):
            p_joint = p_t * ((1.0 - eps) if y == t else eps / (k - 1))
            if p_joint > 0.0:
                mi += p_joint * math.log2(p_joint / (p_t * p_y))
    return mi


FROZEN_PLANTED_01_BINARY = 0.5310044064107188   # from the oracle above


def test_oracle_agrees_with_closed_form_on_a_grid():
    for k in (2, 3, 5):
        for eps in (0.0, 0.05, 0.1, 0.25, 0.4, 0.499):
            assert planted_true_info_bits(eps, k) == pytest.approx(
                mutual_information_by_enumeration(eps, k), abs=1e-12)


def test_frozen_reference_values():
    assert mutual_information_by_enumeration(0.1, 2) == pytest.approx(
        FROZEN_PLANTED_01_BINARY, abs=1e-12)
    assert planted_true_info_bits(0.1, 2) == pytest.approx(
        FROZEN_PLANTED_01_BINARY, abs=1e-12)
    assert planted_true_info_bits(0.0, 2) == 1.0
    # independence limit: a vanishing flip margin leaves almost nothing
    assert planted_true_info_bits(0.4999999, 2) < 1e-6


def test_true_info_monotonically_decreasing_in_flip_rate():
    values = [planted_true_info_bits(eps, 2) for eps in np.linspace(0.0, 0.49, 25)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_generate_planted_shapes_and_balance():
    spec = PlantedSpec(n=4000, flip_rate=0.1, seed=41)
    train, dev, test, truth = generate_planted(spec)
    assert (len(train), len(dev), len(test)) == (2800, 400, 800)
    assert truth == pytest.approx(FROZEN_PLANTED_01_BINARY, abs=1e-12)
    assert {d.split for d in (train, dev, test)} == {"train", "dev", "test"}
    counts = np.bincount([i.gold for i in train], minlength=2)
    assert abs(counts[0] / len(train) - 0.5) <= 0.02
    for inst in train:
        cues = [t for t in inst.fields["text"].split() if t.startswith("cue")]
        assert len(cues) == 1


def test_generate_planted_premise_hypothesis_layout_plants_in_hypothesis():
    spec = PlantedSpec(n=400, flip_rate=0.0, seed=42, layout="premise_hypothesis")
    train, _, _, _ = generate_planted(spec)
    assert train.schema == ("premise", "hypothesis")
    for inst in train:
        assert not any(t.startswith("cue") for t in inst.fields["premise"].split())
        assert sum(t.startswith("cue") for t in inst.fields["hypothesis"].split()) == 1


def test_generate_planted_is_seed_deterministic():
    a = generate_planted(PlantedSpec(n=200, flip_rate=0.2, seed=7))
    b = generate_planted(PlantedSpec(n=200, flip_rate=0.2, seed=7))
    assert a[:3] == b[:3]
    c = generate_planted(PlantedSpec(n=200, flip_rate=0.2, seed=8))
    assert c[0] != a[0]


def test_planted_validation_errors():
    with pytest.raises(ConfigurationError):
        PlantedSpec(n=1000, flip_rate=0.5)
    with pytest.raises(ConfigurationError):
        PlantedSpec(n=1000, flip_rate=0.1, vocab_size=4, n_classes=2, triggers_per_class=2)
    with pytest.raises(ConfigurationError):
        PlantedSpec(n=4, flip_rate=0.1)


def test_estimate_never_exceeds_truth_by_much():
    for eps in (0.1, 0.3):
        train, dev, test, truth = generate_planted(PlantedSpec(n=3000, flip_rate=eps, seed=43))
        pair = train_pair(small_family(seed=1), train, dev)
        _, summary = compute_all(pair, test)
        assert summary.v_information <= truth + 0.05


def test_generate_independent_bounds_and_errors():
    with pytest.raises(EmptyDataError):
        generate_independent(0, 2, seed=1)
    a = generate_independent(50, 2, seed=1)
    b = generate_independent(50, 2, seed=2)
    assert a != b
    assert len(a) == 50


def test_independent_data_has_no_usable_information_two_seeds():
    for seed in (44, 45):
        whole = generate_independent(4000, 2, seed=seed)
        from vinfo import split_dataset
        train, dev, test = split_dataset(whole)
        pair = train_pair(small_family(seed=seed), train, dev)
        _, summary = compute_all(pair, test)
        assert abs(summary.v_information) <= max(0.02, 3.0 * summary.pvi_std_err)


# ---------------------------------------------------------------------------
# fraction_sweep


@pytest.fixture(scope="module")
def sweep_data():
    return generate_planted(PlantedSpec(n=3000, flip_rate=0.1, seed=46))


def test_sweep_full_fraction_equals_direct_estimate_exactly(sweep_data):
    train, dev, test, _ = sweep_data
    fam = small_family(seed=2)
    rows = fraction_sweep(fam, train, test, [1.0], repeats=1, dev=dev)
    pair = train_pair(fam, train, dev)
    _, summary = compute_all(pair, test)
    assert rows[0].mean_bits == summary.v_information
    assert rows[0].std_bits == 0.0


def test_sweep_tiny_fraction_degrades_and_spreads(sweep_data):
    train, dev, test, _ = sweep_data
    fam = small_family(seed=2)
    rows = fraction_sweep(fam, train, test, [0.01, 1.0], repeats=3, dev=dev)
    tiny, full = rows
    assert tiny.n_train == round(0.01 * len(train))
    assert tiny.mean_bits < full.mean_bits - 0.1
    assert tiny.std_bits > full.std_bits


def test_sweep_flags_fractions_below_two_per_class(sweep_data):
    train, dev, test, _ = sweep_data
    rows = fraction_sweep(small_family(seed=2), train, test, [0.001], repeats=1, dev=dev)
    assert rows[0].flagged


def test_sweep_rejects_bad_fractions(sweep_data):
    train, dev, test, _ = sweep_data
    with pytest.raises(ConfigurationError):
        fraction_sweep(small_family(), train, test, [0.0, 0.5], repeats=1, dev=dev)
    with pytest.raises(ConfigurationError):
        fraction_sweep(small_family(), train, test, [1.5], repeats=1, dev=dev)
    with pytest.raises(ConfigurationError):
        fraction_sweep(small_family(), train, test, [0.5], repeats=0, dev=dev)
