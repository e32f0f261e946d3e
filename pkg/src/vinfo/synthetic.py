"""Synthetic datasets with analytically known information content.

The planted construction puts exactly one class-linked trigger token in every
instance among uninformative filler tokens; the label follows the trigger's
class except for an independent flip with probability ``flip_rate`` (then
uniform over the other classes). Because fillers carry zero label information
by construction, the dataset's true usable information has a closed form, and
these generators double as the oracle layer for the estimator tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import compute_all
from .data import Dataset, Instance, LabelSpace, subset_with_fresh_ids
from .errors import ConfigurationError, EmptyDataError

_SPLIT_FRACTIONS = (0.7, 0.1, 0.2)


@dataclass(frozen=True)
class PlantedSpec:
    """Configuration of the planted-trigger generator.

    ``n`` is the total instance count, split 70/10/20 into train/dev/test.
    ``vocab_size`` counts the whole vocabulary; triggers are carved out of it
    and the rest serves as filler.
    """

    n: int
    flip_rate: float
    vocab_size: int = 200
    n_classes: int = 2
    triggers_per_class: int = 1
    filler_len: tuple[int, int] = (5, 15)
    layout: str = "single"
    seed: int = 0

    def __post_init__(self):
        if self.n < 10:
            raise ConfigurationError("need n >= 10 to populate all three splits")
        if not (0.0 <= self.flip_rate < 0.5):
            raise ConfigurationError(f"flip_rate must be in [0, 0.5), got {self.flip_rate}")
        if self.n_classes < 2:
            raise ConfigurationError("need at least 2 classes")
        if self.triggers_per_class < 1:
            raise ConfigurationError("triggers_per_class must be >= 1")
        if self.layout not in ("single", "premise_hypothesis"):
            raise ConfigurationError(f"unknown layout {self.layout!r}")
        lo, hi = self.filler_len
        if not (1 <= lo <= hi):
            raise ConfigurationError(f"bad filler length range {self.filler_len}")
        if self.vocab_size - self.n_classes * self.triggers_per_class < 1:
            raise ConfigurationError(
                f"vocab_size {self.vocab_size} too small to host "
                f"{self.n_classes * self.triggers_per_class} triggers plus fillers")

    def to_dict(self) -> dict:
        return {"n": self.n, "flip_rate": self.flip_rate, "vocab_size": self.vocab_size,
                "n_classes": self.n_classes, "triggers_per_class": self.triggers_per_class,
                "filler_len": list(self.filler_len), "layout": self.layout, "seed": self.seed}


def planted_true_info_bits(flip_rate: float, n_classes: int = 2) -> float:
    """Closed-form usable information of the planted construction, in bits.

    With balanced trigger classes the label marginal is uniform, so the
    information is log2(K) minus the label entropy given the trigger.
    """
    k = n_classes
    eps = flip_rate
    h = 0.0
    if eps > 0.0:
        h += -eps * np.log2(eps / (k - 1))
    if eps < 1.0:
        h += -(1.0 - eps) * np.log2(1.0 - eps)
    return float(np.log2(k) - h)


def _trigger_tokens(spec: PlantedSpec) -> list[list[str]]:
    return [[f"cue{c}x{j}" for j in range(spec.triggers_per_class)]
            for c in range(spec.n_classes)]


def _filler_tokens(spec: PlantedSpec) -> list[str]:
    n_fillers = spec.vocab_size - spec.n_classes * spec.triggers_per_class
    return [f"w{i}" for i in range(n_fillers)]


def _balanced_classes(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    base = np.repeat(np.arange(k), n // k)
    extra = np.arange(n - base.size) % k
    classes = np.concatenate([base, extra])
    rng.shuffle(classes)
    return classes


def _sample_fields(spec: PlantedSpec, trigger: str, fillers: list[str],
                   rng: np.random.Generator) -> dict[str, str]:
    lo, hi = spec.filler_len
    def filler_run() -> list[str]:
        length = int(rng.integers(lo, hi + 1))
        return [fillers[int(i)] for i in rng.integers(0, len(fillers), size=length)]

    if spec.layout == "single":
        toks = filler_run()
        toks.insert(int(rng.integers(0, len(toks) + 1)), trigger)
        return {"text": " ".join(toks)}
    premise = filler_run()
    hypothesis = filler_run()
    hypothesis.insert(int(rng.integers(0, len(hypothesis) + 1)), trigger)
    return {"premise": " ".join(premise), "hypothesis": " ".join(hypothesis)}


def _schema(spec: PlantedSpec) -> tuple[str, ...]:
    return ("text",) if spec.layout == "single" else ("premise", "hypothesis")


def _generate_split(spec: PlantedSpec, n: int, split: str,
                    rng: np.random.Generator) -> Dataset:
    space = LabelSpace(tuple(f"c{c}" for c in range(spec.n_classes)))
    triggers = _trigger_tokens(spec)
    fillers = _filler_tokens(spec)
    classes = _balanced_classes(n, spec.n_classes, rng)
    instances = []
    for i in range(n):
        c = int(classes[i])
        trigger = triggers[c][int(rng.integers(0, spec.triggers_per_class))]
        label = c
        if spec.flip_rate > 0.0 and rng.random() < spec.flip_rate:
            others = [k for k in range(spec.n_classes) if k != c]
            label = others[int(rng.integers(0, len(others)))]
        fields = _sample_fields(spec, trigger, fillers, rng)
        instances.append(Instance(id=f"{split}-{i:06d}", fields=fields, gold=label))
    return Dataset(schema=_schema(spec), label_space=space,
                   instances=tuple(instances), split=split)


def generate_planted(spec: PlantedSpec) -> tuple[Dataset, Dataset, Dataset, float]:
    """Train/dev/test splits plus the construction's true information (bits)."""
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    n_train = int(round(_SPLIT_FRACTIONS[0] * spec.n))
    n_dev = int(round(_SPLIT_FRACTIONS[1] * spec.n))
    n_test = spec.n - n_train - n_dev
    train = _generate_split(spec, n_train, "train", rng)
    dev = _generate_split(spec, n_dev, "dev", rng)
    test = _generate_split(spec, n_test, "test", rng)
    return train, dev, test, planted_true_info_bits(spec.flip_rate, spec.n_classes)


def generate_independent(n: int, n_classes: int, seed: int,
                         vocab_size: int = 200, filler_len: tuple[int, int] = (5, 15)) -> Dataset:
    """Labels drawn independently of the text (true information is zero)."""
    if n < 1:
        raise EmptyDataError("cannot generate an empty dataset (n >= 1 required)")
    if n_classes < 2:
        raise ConfigurationError("need at least 2 classes")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    space = LabelSpace(tuple(f"c{c}" for c in range(n_classes)))
    fillers = [f"w{i}" for i in range(vocab_size)]
    lo, hi = filler_len
    instances = []
    for i in range(n):
        length = int(rng.integers(lo, hi + 1))
        toks = [fillers[int(j)] for j in rng.integers(0, len(fillers), size=length)]
        instances.append(Instance(id=f"ind-{i:06d}", fields={"text": " ".join(toks)},
                                  gold=int(rng.integers(0, n_classes))))
    return Dataset(schema=("text",), label_space=space, instances=tuple(instances),
                   split="train")


@dataclass(frozen=True)
class SweepRow:
    fraction: float
    n_train: int
    mean_bits: float
    std_bits: float
    flagged: bool


def fraction_sweep(spec, train: Dataset, eval: Dataset, fractions: Sequence[float],
                   repeats: int, dev: Dataset | None = None) -> list[SweepRow]:
    """Usable-information estimates from resampled training fractions.

    Every fraction below 1.0 is drawn with replacement from the training
    split, ``repeats`` times; fraction 1.0 uses the training split as-is so
    it reproduces the direct pipeline estimate exactly. Rows whose resample
    would hold fewer than two instances per class are flagged (and still
    computed when possible). ``dev`` drives epoch selection, default eval.
    """
    from .families import train_pair  # deferred: families imports core

    if repeats < 1:
        raise ConfigurationError("repeats must be >= 1")
    bad = [f for f in fractions if not (0.0 < f <= 1.0)]
    if bad:
        raise ConfigurationError(f"fractions must lie in (0, 1], got {bad}")
    dev = dev if dev is not None else eval
    n = len(train)
    rows = []
    for i_frac, frac in enumerate(fractions):
        m = int(round(frac * n))
        flagged = m < 2 * len(train.label_space)
        vals = []
        for rep in range(repeats):
            if frac == 1.0:
                sub = train
            else:
                rng = np.random.default_rng(np.random.SeedSequence((spec.seed, 7001, i_frac, rep)))
                idx = rng.integers(0, n, size=max(m, 1))
                sub = subset_with_fresh_ids(train, [int(i) for i in idx],
                                            prefix=f"f{i_frac}r{rep}-")
            pair = train_pair(spec, sub, dev)
            _, summary = compute_all(pair, eval)
            vals.append(summary.v_information)
        arr = np.array(vals, dtype=np.float64)
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        rows.append(SweepRow(fraction=float(frac), n_train=m,
                             mean_bits=float(arr.mean()), std_bits=std, flagged=flagged))
    return rows
