"""Usable-information estimates over a trained predictor pair.

Everything here is defined in bits (base-2 logs) over two fitted predictors:
one trained on real inputs, one trained on the null input. The dataset-level
estimate is the difference of two held-out cross-entropies, and it equals the
mean of the per-instance scores (PVI) by construction: we compute it as that
mean, so the identity holds to the last representable digit.

Sign conventions:
  label entropy        H(Y)   = mean over instances of -log2 p_null(gold)
  conditional entropy  H(Y|X) = mean over instances of -log2 p_input(gold)
  usable information   I      = H(Y) - H(Y|X) = mean PVI
  PVI of one instance         = log2 p_input(gold) - log2 p_null(gold)

A negative PVI means the instance is easier to get right from the label
marginal alone than from its input. The estimate is reported raw (it can dip
below zero on finite samples) together with the standard error of the
per-instance terms so callers can judge significance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Protocol, Sequence

import numpy as np

from .data import NULL_INPUT, Dataset, Instance, LabelSpace, select_fields, serialize_input
from .errors import ConfigurationError, EmptyDataError, ValidationError

if TYPE_CHECKING:  # pragma: no cover
    from .families import FamilySpec, TrainedPair

# Probability floor applied to every probability that enters a log. Softmax
# outputs are strictly positive so this binds only for imported scores, where
# it keeps PVI finite for truncated or degenerate external values.
PROB_FLOOR = 1e-10

LOG2_FLOOR = float(np.log2(PROB_FLOOR))


def floor_probs(probs: np.ndarray) -> np.ndarray:
    """Clamp probabilities into [PROB_FLOOR, 1] and renormalize."""
    p = np.clip(np.asarray(probs, dtype=np.float64), PROB_FLOOR, 1.0)
    return p / p.sum()


@dataclass(frozen=True)
class CategoricalDistribution:
    """A probability vector aligned to a label space."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", p)
        if p.ndim != 1 or p.size == 0:
            raise ValidationError("distribution must be a non-empty vector")
        if abs(float(p.sum()) - 1.0) > 1e-9:
            raise ValidationError(f"distribution sums to {float(p.sum())}, not 1")
        if float(p.min()) < PROB_FLOOR * (1.0 - 1e-6):
            raise ValidationError("distribution entry below the probability floor")

    def __getitem__(self, idx: int) -> float:
        return float(self.probs[idx])

    def argmax(self) -> int:
        # np.argmax returns the lowest index among maxima: deterministic ties.
        return int(np.argmax(self.probs))


class Predictor(Protocol):
    """A conditional distribution over labels given one text input.

    Implementations must be deterministic (identical input, identical output)
    and must accept the null input ``""``, which routes through the bias-only
    path. ``descriptor`` records how the predictor came to be (family spec
    digest, seed, selected epoch).
    """

    label_space: LabelSpace
    descriptor: dict

    def predict_proba(self, text: str) -> np.ndarray: ...

    def predict_proba_batch(self, texts: Sequence[str]) -> np.ndarray: ...


@dataclass(frozen=True)
class EntropyEstimate:
    """Empirical mean of per-instance surprisals, in bits."""

    bits: float
    n: int
    std_err: float

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("entropy estimate needs n >= 1")
        if self.std_err < 0:
            raise ValidationError("std_err must be >= 0")


@dataclass(frozen=True)
class PviRecord:
    """Per-instance difficulty: the gold label's log-probability gain from
    seeing the input. ``pvi_bits == logp_x_bits - logp_null_bits`` exactly.

    ``predicted`` is None only for imported scores that omit the full label
    distribution and put at most half the mass on gold (argmax unknowable);
    ``correct`` then falls back to the majority-mass rule p(gold) > 1/2.
    """

    id: str
    gold: int
    pvi_bits: float
    logp_x_bits: float
    logp_null_bits: float
    predicted: int | None
    correct: bool


@dataclass(frozen=True)
class AnalysisSummary:
    """Dataset-level results: the usable-information estimate plus the two
    entropies it is the difference of. ``v_information`` is the arithmetic
    mean of the emitted ``pvi_bits`` (exact identity)."""

    v_information: float
    label_entropy: EntropyEstimate
    conditional_entropy: EntropyEstimate
    pvi_std_err: float
    n: int


def _std_err(terms: np.ndarray) -> float:
    if terms.size < 2:
        return 0.0
    return float(np.std(terms, ddof=1) / np.sqrt(terms.size))


def _gold_indices(data: Dataset) -> np.ndarray:
    return np.fromiter((inst.gold for inst in data), dtype=np.int64, count=len(data))


def _check_schema(predictor: Predictor, data: Dataset) -> None:
    schema = predictor.descriptor.get("schema")
    if schema is not None and tuple(schema) != tuple(data.schema):
        raise ValidationError(
            f"predictor was trained on schema {list(schema)},"
            f" dataset has {list(data.schema)}"
        )


def _serialized(data: Dataset) -> list[str]:
    return [serialize_input(inst, data.schema) for inst in data]


def label_entropy(null_model: Predictor, data: Dataset) -> EntropyEstimate:
    """Mean surprisal of gold labels under the null-input predictor."""
    data.require_nonempty()
    dist = floor_probs(null_model.predict_proba(NULL_INPUT))
    terms = -np.log2(dist[_gold_indices(data)])
    return EntropyEstimate(bits=float(terms.mean()), n=len(data), std_err=_std_err(terms))


def conditional_entropy(input_model: Predictor, data: Dataset) -> EntropyEstimate:
    """Mean surprisal of gold labels under the input-conditioned predictor."""
    data.require_nonempty()
    _check_schema(input_model, data)
    probs = input_model.predict_proba_batch(_serialized(data))
    probs = np.clip(probs, PROB_FLOOR, 1.0)
    terms = -np.log2(probs[np.arange(len(data)), _gold_indices(data)])
    return EntropyEstimate(bits=float(terms.mean()), n=len(data), std_err=_std_err(terms))


def _check_label_spaces(null_model: Predictor, input_model: Predictor) -> None:
    if null_model.label_space != input_model.label_space:
        raise ConfigurationError(
            "predictors disagree on the label space: "
            f"{list(null_model.label_space.labels)} vs "
            f"{list(input_model.label_space.labels)}"
        )


def pvi(null_model: Predictor, input_model: Predictor, inst: Instance,
        schema: Sequence[str] | None = None) -> PviRecord:
    """Pointwise score of one instance. Negative values are meaningful: the
    null predictor beat the conditioned one on this instance."""
    _check_label_spaces(null_model, input_model)
    if schema is None:
        schema = input_model.descriptor.get("schema") or tuple(sorted(inst.fields))
    text = serialize_input(inst, schema)
    p_x = floor_probs(input_model.predict_proba(text))
    p_null = floor_probs(null_model.predict_proba(NULL_INPUT))
    logp_x = float(np.log2(p_x[inst.gold]))
    logp_null = float(np.log2(p_null[inst.gold]))
    predicted = int(np.argmax(p_x))
    return PviRecord(
        id=inst.id,
        gold=inst.gold,
        pvi_bits=logp_x - logp_null,
        logp_x_bits=logp_x,
        logp_null_bits=logp_null,
        predicted=predicted,
        correct=predicted == inst.gold,
    )


def records_from_logps(data: Dataset, logp_x_bits: np.ndarray,
                       logp_null_bits: np.ndarray,
                       predicted: Sequence[int | None],
                       correct: Sequence[bool]) -> list[PviRecord]:
    """Assemble aligned per-instance arrays into PviRecords (input order)."""
    out = []
    for i, inst in enumerate(data):
        lx = float(logp_x_bits[i])
        ln = float(logp_null_bits[i])
        out.append(PviRecord(
            id=inst.id, gold=inst.gold, pvi_bits=lx - ln,
            logp_x_bits=lx, logp_null_bits=ln,
            predicted=predicted[i], correct=bool(correct[i]),
        ))
    return out


def summarize_records(records: Sequence[PviRecord]) -> AnalysisSummary:
    """Dataset summary recomputed from per-instance records.

    ``v_information`` is defined as the mean of ``pvi_bits``; the entropies
    are the means of the corresponding per-instance surprisals.
    """
    if not records:
        raise EmptyDataError("no records to summarize")
    pvis = np.array([r.pvi_bits for r in records], dtype=np.float64)
    null_terms = np.array([-r.logp_null_bits for r in records], dtype=np.float64)
    cond_terms = np.array([-r.logp_x_bits for r in records], dtype=np.float64)
    n = len(records)
    return AnalysisSummary(
        v_information=float(pvis.mean()),
        label_entropy=EntropyEstimate(float(null_terms.mean()), n, _std_err(null_terms)),
        conditional_entropy=EntropyEstimate(float(cond_terms.mean()), n, _std_err(cond_terms)),
        pvi_std_err=_std_err(pvis),
        n=n,
    )


def compute_all(pair: "TrainedPair", data: Dataset) -> tuple[list[PviRecord], AnalysisSummary]:
    """Score every instance of a held-out split under a trained pair.

    One record per instance, in input order; linear in the number of
    instances (two batched predictor passes). The summary's usable
    information equals mean(pvi_bits) exactly.
    """
    data.require_nonempty()
    _check_label_spaces(pair.null_model, pair.input_model)
    _check_schema(pair.input_model, data)

    gold = _gold_indices(data)
    p_null = floor_probs(pair.null_model.predict_proba(NULL_INPUT))
    probs_x = np.clip(pair.input_model.predict_proba_batch(_serialized(data)), PROB_FLOOR, 1.0)

    logp_null = np.log2(p_null[gold])
    logp_x = np.log2(probs_x[np.arange(len(data)), gold])
    predicted = np.argmax(probs_x, axis=1)
    correct = predicted == gold

    records = records_from_logps(data, logp_x, logp_null,
                                 [int(p) for p in predicted], correct.tolist())
    return records, summarize_records(records)


def v_information(null_model: Predictor, input_model: Predictor, data: Dataset) -> float:
    """Usable information of a dataset, in bits: mean per-instance PVI.

    Equal to label_entropy minus conditional_entropy; computed as the mean of
    per-instance scores so it matches compute_all's summary exactly.
    """
    data.require_nonempty()
    _check_label_spaces(null_model, input_model)
    _check_schema(input_model, data)
    gold = _gold_indices(data)
    p_null = floor_probs(null_model.predict_proba(NULL_INPUT))
    probs_x = np.clip(input_model.predict_proba_batch(_serialized(data)), PROB_FLOOR, 1.0)
    pvis = np.log2(probs_x[np.arange(len(data)), gold]) - np.log2(p_null[gold])
    return float(pvis.mean())


def conditional_v_information(family: "FamilySpec", train: Dataset, eval: Dataset,
                              b_fields: Sequence[str], x_fields: Sequence[str],
                              dev: Dataset | None = None) -> float:
    """Usable information in ``x_fields`` beyond what ``b_fields`` provide.

    Trains two predictors with the same family spec: one seeing only the
    conditioning fields, one seeing conditioning and target fields together
    (field concatenation per the serialization rule), and differences their
    held-out conditional entropies. An empty ``b_fields`` reduces to the
    plain usable-information estimate, since a zero-field input is the null
    input.

    ``dev`` controls epoch selection; defaults to ``eval``.
    """
    from .families import train_model_on  # deferred: families imports core

    overlap = set(b_fields) & set(x_fields)
    if overlap:
        raise ConfigurationError(f"conditioning and target fields overlap: {sorted(overlap)}")
    for name, fields in (("b_fields", b_fields), ("x_fields", x_fields)):
        unknown = [f for f in fields if f not in train.schema]
        if unknown:
            raise ConfigurationError(f"{name} {unknown} not in schema {list(train.schema)}")

    dev = dev if dev is not None else eval
    bx_fields = list(b_fields) + [f for f in x_fields if f not in b_fields]

    h_bits = []
    for fields in (list(b_fields), bx_fields):
        tr = select_fields(train, fields)
        dv = select_fields(dev, fields)
        ev = select_fields(eval, fields)
        model = train_model_on(family, tr, dv)
        h_bits.append(conditional_entropy(model, ev).bits)
    return h_bits[0] - h_bits[1]
