"""Core data model: label spaces, instances, datasets, and the input
serialization rule.

A dataset is an ordered list of labeled text records. Each record ("instance")
carries named text fields; the schema fixes the field order. Models never see
the fields directly: they see one string produced by :func:`serialize_input`,
which is the single place the field-to-text convention lives.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .errors import ConfigurationError, EmptyDataError, ValidationError

# The null input: a text input carrying no information about the label.
NULL_INPUT = ""


@dataclass(frozen=True)
class LabelSpace:
    """Ordered set of distinct label names. Index order is fixed for the
    lifetime of an analysis; every label reference below is an index into
    this list."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.labels:
            raise ValidationError("label space must be non-empty")
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError(f"label space has duplicates: {self.labels}")

    def __len__(self) -> int:
        return len(self.labels)

    def index_of(self, name: str) -> int:
        try:
            return self.labels.index(name)
        except ValueError:
            raise ValidationError(
                f"label {name!r} not in label space {list(self.labels)}"
            ) from None


@dataclass(frozen=True)
class Instance:
    """One labeled record: unique id, named text fields, gold label index."""

    id: str
    fields: Mapping[str, str]
    gold: int


@dataclass(frozen=True)
class Dataset:
    schema: tuple[str, ...]
    label_space: LabelSpace
    instances: tuple[Instance, ...]
    split: str = "train"

    def __post_init__(self):
        if self.split not in ("train", "dev", "test"):
            raise ValidationError(f"unknown split tag {self.split!r}")
        seen = set()
        schema_set = set(self.schema)
        for inst in self.instances:
            if inst.id in seen:
                raise ValidationError(f"duplicate instance id {inst.id!r}")
            seen.add(inst.id)
            if set(inst.fields.keys()) != schema_set:
                raise ValidationError(
                    f"instance {inst.id!r} fields {sorted(inst.fields)} do not"
                    f" match schema {list(self.schema)}"
                )
            if not (0 <= inst.gold < len(self.label_space)):
                raise ValidationError(
                    f"instance {inst.id!r} gold index {inst.gold} outside"
                    f" label space of size {len(self.label_space)}"
                )

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def require_nonempty(self, what: str = "dataset") -> None:
        if not self.instances:
            raise EmptyDataError(f"{what} is empty")

    def with_instances(self, instances: Iterable[Instance], split: str | None = None) -> "Dataset":
        return Dataset(
            schema=self.schema,
            label_space=self.label_space,
            instances=tuple(instances),
            split=split if split is not None else self.split,
        )


def serialize_input(instance: Instance, schema: Sequence[str]) -> str:
    """Render an instance as the single text string models consume.

    Rule (bit-exact): fields are joined in schema order as ``NAME: value``
    segments, NAME uppercased, segments separated by one space. A zero-field
    schema serializes to the empty string, which is the null input.
    """
    for name in schema:
        if name not in instance.fields:
            raise ValidationError(
                f"instance {instance.id!r} is missing field {name!r}"
            )
    return " ".join(f"{name.upper()}: {instance.fields[name]}" for name in schema)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str, lowercase: bool = False, split_punctuation: bool = True) -> list[str]:
    """Unicode-whitespace tokenizer with optional punctuation peeling.

    ``split_punctuation`` detaches leading/trailing punctuation characters of
    each whitespace chunk into their own single-character tokens ("cheeks."
    becomes ["cheeks", "."]); interior punctuation (don't, e-mail) stays put.
    """
    if lowercase:
        text = text.lower()
    tokens: list[str] = []
    for chunk in text.split():
        if not split_punctuation:
            tokens.append(chunk)
            continue
        head: list[str] = []
        while chunk and _is_punct(chunk[0]):
            head.append(chunk[0])
            chunk = chunk[1:]
        tail: list[str] = []
        while chunk and _is_punct(chunk[-1]):
            tail.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.extend(head)
        if chunk:
            tokens.append(chunk)
        tokens.extend(reversed(tail))
    return tokens


def whitespace_tokens(text: str) -> list[str]:
    """Plain Unicode-whitespace tokens, punctuation left attached."""
    return text.split()


def select_fields(data: Dataset, fields: Sequence[str]) -> Dataset:
    """Project a dataset onto a subset of its schema (order preserved).

    An empty selection is allowed and yields instances whose serialized input
    is the null input; callers use this to realize input-free baselines.
    """
    unknown = [f for f in fields if f not in data.schema]
    if unknown:
        raise ConfigurationError(f"fields {unknown} not in schema {list(data.schema)}")
    keep = tuple(f for f in data.schema if f in set(fields))
    instances = tuple(
        Instance(id=inst.id, fields={f: inst.fields[f] for f in keep}, gold=inst.gold)
        for inst in data.instances
    )
    return Dataset(schema=keep, label_space=data.label_space,
                   instances=instances, split=data.split)


def split_dataset(data: Dataset, fractions: tuple[float, float, float] = (0.7, 0.1, 0.2)) -> tuple[Dataset, Dataset, Dataset]:
    """Deterministically slice one dataset into train/dev/test parts."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigurationError(f"split fractions {fractions} must sum to 1")
    n = len(data)
    n_train = int(round(fractions[0] * n))
    n_dev = int(round(fractions[1] * n))
    parts = (
        data.instances[:n_train],
        data.instances[n_train:n_train + n_dev],
        data.instances[n_train + n_dev:],
    )
    return tuple(
        Dataset(schema=data.schema, label_space=data.label_space,
                instances=part, split=tag)
        for part, tag in zip(parts, ("train", "dev", "test"))
    )


def subset_with_fresh_ids(data: Dataset, indices: Sequence[int], prefix: str) -> Dataset:
    """Row subset by position with fresh positional ids, so sampling with
    replacement cannot violate id uniqueness."""
    instances = tuple(
        replace(data.instances[i], id=f"{prefix}{j:06d}")
        for j, i in enumerate(indices)
    )
    return data.with_instances(instances)
