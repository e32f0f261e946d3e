"""Attribute-isolating input transformations.

Each transform rewrites instance text while leaving ids, gold labels, and the
label space untouched, so usable-information estimates on transformed data
measure how much a single attribute contributes. Stochastic kinds draw their
randomness from (seed, instance id) so dataset order never changes results.

Kinds:
  identity          no-op copy (the baseline row of every report)
  shuffle           per-field uniform permutation of tokens (seeded per id)
  select_fields     keep only the named fields; schema shrinks accordingly
  overlap_mask      keep tokens occurring in both fields, mask the rest
  token_filter      keep only allowlisted tokens, in order
  token_remap       seeded bijection of the dataset vocabulary onto itself
  sentence_encrypt  replace each distinct serialized input by an opaque token
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import compute_all
from .data import Dataset, Instance, select_fields as _project_fields, serialize_input, tokenize
from .errors import ConfigurationError, VinfoError

KINDS = ("identity", "shuffle", "select_fields", "overlap_mask",
         "token_filter", "token_remap", "sentence_encrypt")

_STOCHASTIC = ("shuffle", "token_remap", "sentence_encrypt")

DEFAULT_MASK_TOKEN = "[MASK]"


@dataclass(frozen=True)
class TransformSpec:
    kind: str
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown transform kind {self.kind!r}; expected one of {KINDS}")
        p = dict(self.params)
        object.__setattr__(self, "params", p)
        if self.kind in _STOCHASTIC and "seed" not in p:
            raise ConfigurationError(f"transform {self.kind!r} requires a seed")
        if self.kind == "select_fields" and not p.get("fields"):
            raise ConfigurationError("select_fields requires a non-empty field list")
        if self.kind == "token_filter" and not p.get("allowlist"):
            raise ConfigurationError("token_filter requires a non-empty allowlist")

    @property
    def name(self) -> str:
        if self.kind == "select_fields":
            return f"select_fields({','.join(self.params['fields'])})"
        return self.kind

    @staticmethod
    def from_dict(d: dict, default_seed: int | None = None) -> "TransformSpec":
        params = dict(d.get("params", {}))
        kind = d["kind"]
        if kind in _STOCHASTIC and "seed" not in params and default_seed is not None:
            params["seed"] = default_seed
        return TransformSpec(kind=kind, params=params)


def _stable_int(*parts: object) -> int:
    key = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest(), "little")


def _per_field_rng(seed: object, inst_id: str, field_name: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(_stable_int(seed, inst_id, field_name)))


def load_allowlist(path: str) -> list[str]:
    """One token per line; blank lines and #-comments ignored."""
    tokens = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                tokens.append(line)
    return tokens


def placeholder_allowlist_path() -> str:
    """Path of the shipped placeholder allowlist. The real list is always
    operator-supplied; this file only demonstrates the format."""
    from importlib import resources
    return str(resources.files("vinfo").joinpath("wordlists/token_filter_placeholder.txt"))


def _shuffle(data: Dataset, seed: object) -> Dataset:
    out = []
    for inst in data:
        fields = {}
        for name in data.schema:
            toks = tokenize(inst.fields[name])
            rng = _per_field_rng(seed, inst.id, name)
            order = rng.permutation(len(toks))
            fields[name] = " ".join(toks[i] for i in order)
        out.append(Instance(id=inst.id, fields=fields, gold=inst.gold))
    return data.with_instances(out)


def _overlap_mask(data: Dataset, mask_token: str) -> Dataset:
    if len(data.schema) != 2:
        raise ConfigurationError(
            f"overlap_mask needs a schema with exactly two fields, got {list(data.schema)}")
    a, b = data.schema
    out = []
    for inst in data:
        tok_a = tokenize(inst.fields[a])
        tok_b = tokenize(inst.fields[b])
        shared = {t.casefold() for t in tok_a} & {t.casefold() for t in tok_b}
        fields = {
            a: " ".join(t if t.casefold() in shared else mask_token for t in tok_a),
            b: " ".join(t if t.casefold() in shared else mask_token for t in tok_b),
        }
        out.append(Instance(id=inst.id, fields=fields, gold=inst.gold))
    return data.with_instances(out)


def _token_filter(data: Dataset, allowlist: Iterable[str]) -> Dataset:
    allowed = {t.casefold() for t in allowlist}
    out = []
    for inst in data:
        fields = {
            name: " ".join(t for t in tokenize(inst.fields[name]) if t.casefold() in allowed)
            for name in data.schema
        }
        out.append(Instance(id=inst.id, fields=fields, gold=inst.gold))
    return data.with_instances(out)


def _token_remap(data: Dataset, seed: object) -> Dataset:
    vocab = sorted({t for inst in data for name in data.schema
                    for t in tokenize(inst.fields[name])})
    rng = np.random.default_rng(np.random.SeedSequence(_stable_int(seed, "token_remap")))
    order = rng.permutation(len(vocab))
    mapping = {tok: vocab[order[i]] for i, tok in enumerate(vocab)}
    out = []
    for inst in data:
        fields = {
            name: " ".join(mapping[t] for t in tokenize(inst.fields[name]))
            for name in data.schema
        }
        out.append(Instance(id=inst.id, fields=fields, gold=inst.gold))
    return data.with_instances(out)


def _sentence_encrypt(data: Dataset, seed: object) -> Dataset:
    # One opaque token per distinct serialized input; the instance-to-label
    # mapping is preserved bijectively, only the surface form is destroyed.
    mapping: dict[str, str] = {}
    taken: set[str] = set()
    for inst in data:
        text = serialize_input(inst, data.schema)
        if text in mapping:
            continue
        digest = hashlib.blake2b(f"{seed}\x1f{text}".encode("utf-8"), digest_size=32).hexdigest()
        width = 16
        token = f"enc{digest[:width]}"
        while token in taken:
            width += 4
            token = f"enc{digest[:width]}"
        mapping[text] = token
        taken.add(token)
    instances = tuple(
        Instance(id=inst.id, fields={"text": mapping[serialize_input(inst, data.schema)]},
                 gold=inst.gold)
        for inst in data
    )
    return Dataset(schema=("text",), label_space=data.label_space,
                   instances=instances, split=data.split)


def apply(t: TransformSpec, data: Dataset) -> Dataset:
    """Transformed copy of a dataset; ids, labels, and label space unchanged."""
    if t.kind == "identity":
        return data.with_instances(data.instances)
    if t.kind == "shuffle":
        return _shuffle(data, t.params["seed"])
    if t.kind == "select_fields":
        return _project_fields(data, t.params["fields"])
    if t.kind == "overlap_mask":
        return _overlap_mask(data, str(t.params.get("mask_token", DEFAULT_MASK_TOKEN)))
    if t.kind == "token_filter":
        allow = t.params["allowlist"]
        if isinstance(allow, str):
            allow = load_allowlist(allow)
        if not allow:
            raise ConfigurationError("token_filter allowlist is empty")
        return _token_filter(data, allow)
    if t.kind == "token_remap":
        return _token_remap(data, t.params["seed"])
    if t.kind == "sentence_encrypt":
        return _sentence_encrypt(data, t.params["seed"])
    raise ConfigurationError(f"unhandled transform kind {t.kind!r}")


@dataclass(frozen=True)
class TransformRow:
    transform: str
    v_information_bits: float | None
    std_err: float | None
    n: int | None
    selected_epoch_input: int | None = None
    selected_epoch_null: int | None = None
    error: str | None = None


@dataclass(frozen=True)
class TransformReport:
    rows: tuple[TransformRow, ...]
    note: str


REPORT_NOTE = ("Each row retrains the family on the transformed inputs. A transform can make "
               "prediction easier, so transformed rows may exceed the identity row.")


def attribute_report(specs: Sequence[TransformSpec], family, train: Dataset,
                     eval: Dataset, dev: Dataset | None = None) -> TransformReport:
    """Usable information per attribute: one row per transform, identity first.

    Rows are computed independently (fresh training per transform applied to
    both splits); a failing row carries its error and the rest still run.
    ``dev`` drives epoch selection and defaults to ``eval``.
    """
    from .families import train_pair  # deferred to keep import graph acyclic

    ordered = list(specs)
    if not any(s.kind == "identity" for s in ordered):
        ordered.insert(0, TransformSpec(kind="identity"))
    dev = dev if dev is not None else eval

    rows = []
    for t in ordered:
        try:
            t_train = apply(t, train)
            t_dev = apply(t, dev)
            t_eval = apply(t, eval)
            pair = train_pair(family, t_train, t_dev)
            _, summary = compute_all(pair, t_eval)
            rows.append(TransformRow(
                transform=t.name,
                v_information_bits=summary.v_information,
                std_err=summary.pvi_std_err,
                n=summary.n,
                selected_epoch_input=pair.metadata["selected_epoch_input"],
                selected_epoch_null=pair.metadata["selected_epoch_null"],
            ))
        except VinfoError as exc:
            rows.append(TransformRow(transform=t.name, v_information_bits=None,
                                     std_err=None, n=None, error=str(exc)))
    return TransformReport(rows=tuple(rows), note=REPORT_NOTE)
