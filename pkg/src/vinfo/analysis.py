"""Slice-level difficulty, correct/incorrect gap, token-level artefact
ranking by leave-one-out, and correlation of per-instance scores.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats

from .core import PROB_FLOOR, Predictor, PviRecord
from .data import Dataset, Instance, serialize_input, tokenize, whitespace_tokens
from .errors import EmptyDataError, UndefinedStatisticError, ValidationError

SLICE_NOTE = ("Mean PVI over a slice is a relative-difficulty measure, not the slice's "
              "usable information: the predictors are fit to the whole distribution.")


@dataclass(frozen=True)
class SliceSpec:
    """A named deterministic predicate over (instance, record) pairs."""

    name: str
    predicate: Callable[[Instance, PviRecord], bool]


def slice_by_class(data_or_space, label: str) -> SliceSpec:
    space = getattr(data_or_space, "label_space", data_or_space)
    idx = space.index_of(label)
    return SliceSpec(name=f"class={label}", predicate=lambda inst, rec: inst.gold == idx)


def slice_by_ids(ids: Sequence[str], name: str | None = None) -> SliceSpec:
    id_set = frozenset(ids)
    return SliceSpec(name=name or f"ids(n={len(id_set)})",
                     predicate=lambda inst, rec: inst.id in id_set)


def overlap_length(inst: Instance, field_a: str, field_b: str) -> int:
    """Number of distinct (case-folded) tokens shared by two fields."""
    a = {t.casefold() for t in tokenize(inst.fields[field_a])}
    b = {t.casefold() for t in tokenize(inst.fields[field_b])}
    return len(a & b)


def slice_by_overlap_bin(field_a: str, field_b: str, lo: int, hi: int) -> SliceSpec:
    """Instances whose two-field overlap length falls in [lo, hi)."""
    return SliceSpec(
        name=f"overlap[{lo},{hi})",
        predicate=lambda inst, rec: lo <= overlap_length(inst, field_a, field_b) < hi)


def slice_by_scalar_range(values: Mapping[str, float], lo: float, hi: float,
                          name: str | None = None) -> SliceSpec:
    """Instances whose external per-id scalar falls in [lo, hi)."""
    return SliceSpec(
        name=name or f"scalar[{lo},{hi})",
        predicate=lambda inst, rec: inst.id in values and lo <= values[inst.id] < hi)


@dataclass(frozen=True)
class SliceRow:
    slice: str
    n: int
    mean_pvi_bits: float
    flagged: bool


@dataclass(frozen=True)
class SliceReport:
    rows: tuple[SliceRow, ...]
    note: str


def _align(records: Sequence[PviRecord], data: Dataset) -> list[tuple[Instance, PviRecord]]:
    by_id = {r.id: r for r in records}
    missing = [inst.id for inst in data if inst.id not in by_id]
    if missing:
        shown = ", ".join(missing[:10]) + ("..." if len(missing) > 10 else "")
        raise ValidationError(f"{len(missing)} dataset ids have no PVI record: {shown}")
    return [(inst, by_id[inst.id]) for inst in data]


def slice_mean_pvi(records: Sequence[PviRecord], data: Dataset,
                   slices: Sequence[SliceSpec], min_slice_n: int = 10) -> SliceReport:
    """Mean PVI per slice. Slices smaller than ``min_slice_n`` (including
    empty ones) are flagged, never dropped."""
    pairs = _align(records, data)
    rows = []
    for spec in slices:
        vals = [rec.pvi_bits for inst, rec in pairs if spec.predicate(inst, rec)]
        n = len(vals)
        mean = float(np.mean(vals)) if n else float("nan")
        rows.append(SliceRow(slice=spec.name, n=n, mean_pvi_bits=mean, flagged=n < min_slice_n))
    return SliceReport(rows=tuple(rows), note=SLICE_NOTE)


@dataclass(frozen=True)
class GapReport:
    gap_bits: float
    mean_correct: float
    mean_incorrect: float
    n_correct: int
    n_incorrect: int
    p_value: float
    crossover_pvi_bits: float | None


_CROSSOVER_BIN = 0.25


def _crossover(pvis: np.ndarray, correct: np.ndarray) -> float | None:
    """Upper edge of the maximal initial run of 0.25-bit bins in which the
    majority of predictions are incorrect; None when even the lowest bin is
    majority-correct."""
    bins = np.floor(pvis / _CROSSOVER_BIN).astype(np.int64)
    edge = None
    for b in np.unique(bins):
        acc = float(correct[bins == b].mean())
        if acc < 0.5:
            edge = (int(b) + 1) * _CROSSOVER_BIN
        else:
            break
    return edge


def correct_incorrect_gap(records: Sequence[PviRecord]) -> GapReport:
    """Difference in mean PVI between correctly and incorrectly predicted
    instances, with a two-sample unequal-variance t-test p-value and the
    empirical crossover threshold."""
    pvis = np.array([r.pvi_bits for r in records], dtype=np.float64)
    correct = np.array([r.correct for r in records], dtype=bool)
    right = pvis[correct]
    wrong = pvis[~correct]
    if right.size == 0:
        raise UndefinedStatisticError("gap undefined: no correctly predicted instances")
    if wrong.size == 0:
        raise UndefinedStatisticError("gap undefined: no incorrectly predicted instances")
    t = stats.ttest_ind(right, wrong, equal_var=False)
    return GapReport(
        gap_bits=float(right.mean() - wrong.mean()),
        mean_correct=float(right.mean()),
        mean_incorrect=float(wrong.mean()),
        n_correct=int(right.size),
        n_incorrect=int(wrong.size),
        p_value=float(t.pvalue),
        crossover_pvi_bits=_crossover(pvis, correct),
    )


@dataclass(frozen=True)
class TokenArtefact:
    token: str
    label: str
    delta_bits: float
    count: int


def _without_token(inst: Instance, schema: Sequence[str], token: str) -> Instance:
    # All whitespace-token occurrences are removed, in every field.
    fields = {
        name: " ".join(t for t in whitespace_tokens(inst.fields[name]) if t != token)
        for name in schema
    }
    return Instance(id=inst.id, fields=fields, gold=inst.gold)


def loo_artefacts(input_model: Predictor, data: Dataset, label: str | int,
                  min_count: int = 20, top_k: int = 10) -> list[TokenArtefact]:
    """Rank tokens of one class by the mean rise in gold surprisal when the
    token is omitted from the inputs that contain it.

    Candidates are the (case-sensitive) whitespace tokens of the class's own
    instances with at least ``min_count`` containing instances; the same
    fitted model scores original and ablated inputs, so no retraining
    happens. Instances not containing a token contribute exactly zero by
    construction and are excluded from its slice.
    """
    space = input_model.label_space
    idx = space.index_of(label) if isinstance(label, str) else int(label)
    label_name = space.labels[idx]
    members = [inst for inst in data if inst.gold == idx]
    if not members:
        raise EmptyDataError(f"no instances with label {label_name!r} in this dataset")

    members.sort(key=lambda inst: inst.id)  # deltas invariant to dataset order
    containing: dict[str, list[int]] = {}
    for i, inst in enumerate(members):
        toks = {t for name in data.schema for t in whitespace_tokens(inst.fields[name])}
        for t in toks:
            containing.setdefault(t, []).append(i)
    candidates = sorted(t for t, rows in containing.items() if len(rows) >= min_count)
    if not candidates:
        return []

    texts = [serialize_input(inst, data.schema) for inst in members]
    base = np.clip(input_model.predict_proba_batch(texts), PROB_FLOOR, 1.0)
    base_logp = np.log2(base[np.arange(len(members)), [inst.gold for inst in members]])

    ablated_texts: list[str] = []
    spans: list[tuple[str, list[int]]] = []
    for t in candidates:
        rows = containing[t]
        spans.append((t, rows))
        for i in rows:
            ablated_texts.append(serialize_input(_without_token(members[i], data.schema, t), data.schema))
    probs = np.clip(input_model.predict_proba_batch(ablated_texts), PROB_FLOOR, 1.0)

    artefacts = []
    cursor = 0
    for t, rows in spans:
        chunk = probs[cursor:cursor + len(rows)]
        cursor += len(rows)
        gold = np.array([members[i].gold for i in rows])
        ablated_logp = np.log2(chunk[np.arange(len(rows)), gold])
        delta = float(np.mean(base_logp[rows] - ablated_logp))
        artefacts.append(TokenArtefact(token=t, label=label_name,
                                       delta_bits=delta, count=len(rows)))
    artefacts.sort(key=lambda a: (-a.delta_bits, a.token))
    return artefacts[:top_k]


def _aligned_vectors(a_map: Mapping[str, float], b_map: Mapping[str, float],
                     what: str) -> tuple[np.ndarray, np.ndarray]:
    only_a = sorted(set(a_map) - set(b_map))
    only_b = sorted(set(b_map) - set(a_map))
    if only_a or only_b:
        parts = []
        if only_a:
            parts.append(f"ids only in the first {what}: {only_a[:10]}")
        if only_b:
            parts.append(f"ids only in the second {what}: {only_b[:10]}")
        raise ValidationError("id mismatch; " + "; ".join(parts))
    ids = sorted(a_map)
    if len(ids) < 3:
        raise ValidationError(f"need at least 3 shared ids, got {len(ids)}")
    x = np.array([a_map[i] for i in ids], dtype=np.float64)
    y = np.array([b_map[i] for i in ids], dtype=np.float64)
    for side, v in (("first", x), ("second", y)):
        if float(np.ptp(v)) == 0.0:
            raise UndefinedStatisticError(f"correlation undefined: {side} {what} has zero variance")
    return x, y


def correlation_of_maps(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    """Pearson correlation between two id-keyed scalar maps."""
    x, y = _aligned_vectors(dict(a), dict(b), "vector")
    return float(np.corrcoef(x, y)[0, 1])


def pvi_correlation(a: Sequence[PviRecord], b: Sequence[PviRecord]) -> float:
    """Pearson correlation between two PVI vectors aligned by id. Alignment
    is by sorted id, so the result is exactly symmetric in its arguments."""
    x, y = _aligned_vectors({r.id: r.pvi_bits for r in a},
                            {r.id: r.pvi_bits for r in b}, "record list")
    return float(np.corrcoef(x, y)[0, 1])


def scalar_correlation(records: Sequence[PviRecord], values: Mapping[str, float]) -> float:
    """Pearson correlation of PVI against any external per-id scalar."""
    x, y = _aligned_vectors({r.id: r.pvi_bits for r in records}, dict(values), "vector")
    return float(np.corrcoef(x, y)[0, 1])
