"""Reader for the analysis toolkit's dataset files.

The exporter talks to the toolkit only through file formats, so the small
amount of parsing lives here rather than importing the toolkit: the first
line declares schema/labels/split, every following line is one instance, and
inputs are serialized as uppercase "NAME: value" segments joined by single
spaces (the toolkit's bit-exact rule). The null input is the empty string.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

NULL_INPUT = ""


@dataclass(frozen=True)
class Record:
    id: str
    text: str
    label: int


@dataclass(frozen=True)
class LoadedSplit:
    labels: tuple[str, ...]
    records: tuple[Record, ...]


def serialize(fields: dict, schema: list[str]) -> str:
    return " ".join(f"{name.upper()}: {fields[name]}" for name in schema)


def load_split(path: str) -> LoadedSplit:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty dataset file")
    header = json.loads(lines[0])
    schema = list(header["schema"])
    labels = tuple(header["labels"])
    index = {name: i for i, name in enumerate(labels)}
    records = []
    seen = set()
    for lineno, raw in enumerate(lines[1:], start=2):
        obj = json.loads(raw)
        rid = str(obj["id"])
        if rid in seen:
            raise ValueError(f"{path}:{lineno}: duplicate id {rid!r}")
        seen.add(rid)
        if obj["label"] not in index:
            raise ValueError(f"{path}:{lineno}: label {obj['label']!r} not in {list(labels)}")
        records.append(Record(id=rid, text=serialize(obj["fields"], schema),
                              label=index[obj["label"]]))
    return LoadedSplit(labels=labels, records=tuple(records))
