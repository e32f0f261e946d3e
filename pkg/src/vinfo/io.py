"""File formats and run configuration.

Dataset format (line-delimited JSON). The first line declares the schema and
label space; every following line is one instance. Ordering is significant
(loading preserves file order) and every error names its line number.

    {"schema": ["premise", "hypothesis"], "labels": ["yes", "no"], "split": "train"}
    {"id": "a1", "fields": {"premise": "...", "hypothesis": "..."}, "label": "yes"}

Score format (line-delimited JSON). Produced by external model harnesses so
arbitrary families can be analyzed without in-toolkit training. The header
must declare the log base of the scores (2 or "e"; nats are converted on
ingest) and may carry a free-form model descriptor. Per line: the instance
id, the gold label's log-probability with and without the input, and
optionally the full per-label log-probability vectors.

    {"log_base": "e", "model": {"name": "external-run-3"}}
    {"id": "a1", "logp_gold_given_x": -0.11, "logp_gold_null": -0.69,
     "label_logps_x": [-0.11, -2.3], "label_logps_null": [-0.69, -0.69]}

When the full vectors are present, predicted labels come from their argmax
(lowest index on ties). Without them, correctness falls back to the
majority-mass rule p(gold) > 1/2 (which implies the argmax is gold); a
record failing that rule is counted incorrect and its predicted label is
left empty.

PVI tables are CSV with columns id, gold, predicted, correct, pvi_bits,
logp_x_bits, logp_null_bits, one row per instance in input order. All report
files are written atomically (temp then rename) and carry no timestamps, so
identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import (LOG2_FLOOR, AnalysisSummary, PviRecord, floor_probs,
                   records_from_logps, summarize_records)
from .data import Dataset, Instance, LabelSpace
from .errors import ConfigurationError, ValidationError

LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# Atomic writers


def atomic_write_text(path: str, text: str) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_json(obj, path: str) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_csv(path: str, fieldnames: Sequence[str], rows: Sequence[Mapping]) -> None:
    import io as _io
    buf = _io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    atomic_write_text(path, buf.getvalue())


# ---------------------------------------------------------------------------
# Dataset files


def write_dataset(data: Dataset, path: str) -> None:
    lines = [json.dumps({"schema": list(data.schema),
                         "labels": list(data.label_space.labels),
                         "split": data.split}, sort_keys=True)]
    for inst in data:
        lines.append(json.dumps(
            {"id": inst.id,
             "fields": {k: inst.fields[k] for k in data.schema},
             "label": data.label_space.labels[inst.gold]},
            sort_keys=True, ensure_ascii=False))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _parse_line(raw: str, lineno: int, path: str) -> dict:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}:{lineno}: expected a JSON object")
    return obj


def load_dataset(path: str) -> Dataset:
    """Parse and validate a dataset file; instance order follows the file."""
    with open(path, encoding="utf-8") as fh:
        raw_lines = [ln for ln in fh.read().splitlines()]
    lines = [(i + 1, ln) for i, ln in enumerate(raw_lines) if ln.strip()]
    if not lines:
        raise ValidationError(f"{path}: empty file (header line required)")

    lineno, raw = lines[0]
    header = _parse_line(raw, lineno, path)
    for key in ("schema", "labels"):
        if key not in header:
            raise ValidationError(f"{path}:{lineno}: header is missing {key!r}")
    schema = tuple(header["schema"])
    space = LabelSpace(tuple(header["labels"]))
    split = header.get("split", "train")

    instances = []
    seen: set[str] = set()
    for lineno, raw in lines[1:]:
        obj = _parse_line(raw, lineno, path)
        for key in ("id", "fields", "label"):
            if key not in obj:
                raise ValidationError(f"{path}:{lineno}: record is missing {key!r}")
        rid = str(obj["id"])
        if rid in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate id {rid!r}")
        seen.add(rid)
        if obj["label"] not in space.labels:
            raise ValidationError(
                f"{path}:{lineno}: label {obj['label']!r} not in declared label space "
                f"{list(space.labels)}")
        fields = obj["fields"]
        if not isinstance(fields, dict) or set(fields) != set(schema):
            got = sorted(fields) if isinstance(fields, dict) else type(fields).__name__
            raise ValidationError(
                f"{path}:{lineno}: fields {got} do not match schema {list(schema)}")
        instances.append(Instance(id=rid, fields={k: str(v) for k, v in fields.items()},
                                  gold=space.index_of(obj["label"])))
    return Dataset(schema=schema, label_space=space, instances=tuple(instances), split=split)


# ---------------------------------------------------------------------------
# Score files


@dataclass(frozen=True)
class ScoreRow:
    id: str
    logp_gold_given_x: float
    logp_gold_null: float
    label_logps_x: tuple[float, ...] | None
    label_logps_null: tuple[float, ...] | None


@dataclass(frozen=True)
class ScoreSet:
    log_base: str  # "2" or "e"
    model: dict
    rows: tuple[ScoreRow, ...]


def write_scores(scores: ScoreSet, path: str) -> None:
    lines = [json.dumps({"log_base": scores.log_base, "model": scores.model}, sort_keys=True)]
    for row in scores.rows:
        obj = {"id": row.id,
               "logp_gold_given_x": row.logp_gold_given_x,
               "logp_gold_null": row.logp_gold_null}
        if row.label_logps_x is not None:
            obj["label_logps_x"] = list(row.label_logps_x)
        if row.label_logps_null is not None:
            obj["label_logps_null"] = list(row.label_logps_null)
        lines.append(json.dumps(obj, sort_keys=True))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _parse_base(header: dict, path: str, lineno: int) -> str:
    if "log_base" not in header:
        raise ValidationError(f"{path}:{lineno}: score header must declare log_base (2 or \"e\")")
    base = header["log_base"]
    if base in (2, "2"):
        return "2"
    if base == "e":
        return "e"
    raise ValidationError(f"{path}:{lineno}: log_base must be 2 or \"e\", got {base!r}")


def _float_field(obj: dict, key: str, path: str, lineno: int) -> float:
    if key not in obj:
        raise ValidationError(f"{path}:{lineno}: score record is missing {key!r}")
    try:
        return float(obj[key])
    except (TypeError, ValueError):
        raise ValidationError(f"{path}:{lineno}: {key} is not a number") from None


def load_scores(path: str) -> ScoreSet:
    with open(path, encoding="utf-8") as fh:
        lines = [(i + 1, ln) for i, ln in enumerate(fh.read().splitlines()) if ln.strip()]
    if not lines:
        raise ValidationError(f"{path}: empty score file (header line required)")
    lineno, raw = lines[0]
    header = _parse_line(raw, lineno, path)
    base = _parse_base(header, path, lineno)
    model = header.get("model", {})

    rows = []
    seen: set[str] = set()
    for lineno, raw in lines[1:]:
        obj = _parse_line(raw, lineno, path)
        if "id" not in obj:
            raise ValidationError(f"{path}:{lineno}: score record is missing 'id'")
        rid = str(obj["id"])
        if rid in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate id {rid!r}")
        seen.add(rid)
        lx = _float_field(obj, "logp_gold_given_x", path, lineno)
        ln_ = _float_field(obj, "logp_gold_null", path, lineno)
        dists = {}
        for key in ("label_logps_x", "label_logps_null"):
            if key in obj:
                vec = obj[key]
                if not isinstance(vec, list) or not vec:
                    raise ValidationError(f"{path}:{lineno}: {key} must be a non-empty list")
                dists[key] = tuple(float(v) for v in vec)
        rows.append(ScoreRow(id=rid, logp_gold_given_x=lx, logp_gold_null=ln_,
                             label_logps_x=dists.get("label_logps_x"),
                             label_logps_null=dists.get("label_logps_null")))
    return ScoreSet(log_base=base, model=dict(model) if isinstance(model, dict) else {"descriptor": model},
                    rows=tuple(rows))


def _to_bits(value: float, base: str) -> float:
    bits = value / LN2 if base == "e" else value
    return float(min(max(bits, LOG2_FLOOR), 0.0))


def import_scores(scores: ScoreSet | str, data: Dataset) -> tuple[list[PviRecord], AnalysisSummary]:
    """Turn externally computed gold log-probabilities into PVI records.

    Scores are converted to bits, floored, and must cover the dataset ids
    exactly. The records feed every downstream analysis exactly like records
    from in-toolkit predictors.
    """
    if isinstance(scores, str):
        scores = load_scores(scores)
    by_id = {row.id: row for row in scores.rows}
    data_ids = [inst.id for inst in data]
    missing = [i for i in data_ids if i not in by_id]
    extra = sorted(set(by_id) - set(data_ids))
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"{len(missing)} dataset ids missing from scores: {missing[:10]}")
        if extra:
            parts.append(f"{len(extra)} score ids not in the dataset: {extra[:10]}")
        raise ValidationError("score/dataset id mismatch; " + "; ".join(parts))

    k = len(data.label_space)
    logp_x = np.empty(len(data))
    logp_null = np.empty(len(data))
    predicted: list[int | None] = []
    correct: list[bool] = []
    for i, inst in enumerate(data):
        row = by_id[inst.id]
        logp_x[i] = _to_bits(row.logp_gold_given_x, scores.log_base)
        logp_null[i] = _to_bits(row.logp_gold_null, scores.log_base)
        if row.label_logps_x is not None:
            if len(row.label_logps_x) != k:
                raise ValidationError(
                    f"score for id {inst.id!r} has {len(row.label_logps_x)} label log-probs, "
                    f"label space has {k}")
            vec = np.array([_to_bits(v, scores.log_base) for v in row.label_logps_x])
            probs = floor_probs(np.exp2(vec))
            pred = int(np.argmax(probs))
            predicted.append(pred)
            correct.append(pred == inst.gold)
        else:
            is_majority = logp_x[i] > -1.0  # p(gold) > 1/2 guarantees argmax == gold
            predicted.append(inst.gold if is_majority else None)
            correct.append(bool(is_majority))
    records = records_from_logps(data, logp_x, logp_null, predicted, correct)
    return records, summarize_records(records)


# ---------------------------------------------------------------------------
# PVI tables


PVI_FIELDS = ("id", "gold", "predicted", "correct", "pvi_bits", "logp_x_bits", "logp_null_bits")


def write_pvi_csv(records: Sequence[PviRecord], space: LabelSpace, path: str) -> None:
    rows = []
    for r in records:
        rows.append({
            "id": r.id,
            "gold": space.labels[r.gold],
            "predicted": "" if r.predicted is None else space.labels[r.predicted],
            "correct": "true" if r.correct else "false",
            "pvi_bits": repr(r.pvi_bits),
            "logp_x_bits": repr(r.logp_x_bits),
            "logp_null_bits": repr(r.logp_null_bits),
        })
    write_csv(path, PVI_FIELDS, rows)


def read_pvi_csv(path: str, space: LabelSpace) -> list[PviRecord]:
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        got = tuple(reader.fieldnames or ())
        if got != PVI_FIELDS:
            raise ValidationError(f"{path}: unexpected PVI columns {list(got)}")
        for row in reader:
            predicted = space.index_of(row["predicted"]) if row["predicted"] else None
            records.append(PviRecord(
                id=row["id"],
                gold=space.index_of(row["gold"]),
                pvi_bits=float(row["pvi_bits"]),
                logp_x_bits=float(row["logp_x_bits"]),
                logp_null_bits=float(row["logp_null_bits"]),
                predicted=predicted,
                correct=row["correct"] == "true",
            ))
    return records


def read_scalar_csv(path: str) -> dict[str, float]:
    """Two-column (id, value) CSV; a header row is detected and skipped."""
    out: dict[str, float] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            if len(row) < 2:
                raise ValidationError(f"{path}:{i + 1}: expected two columns (id, value)")
            try:
                value = float(row[1])
            except ValueError:
                if i == 0:
                    continue  # header row
                raise ValidationError(f"{path}:{i + 1}: {row[1]!r} is not a number") from None
            out[row[0]] = value
    if not out:
        raise ValidationError(f"{path}: no (id, value) rows found")
    return out


# ---------------------------------------------------------------------------
# Run configuration


@dataclass(frozen=True)
class RunConfig:
    """Parsed run configuration; the single seed feeds every random choice."""

    seed: int
    raw: dict
    base_dir: str

    def _resolve(self, p: str) -> str:
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)

    def dataset_path(self, split: str) -> str:
        paths = self.raw.get("datasets", {})
        if split not in paths:
            raise ConfigurationError(f"config has no dataset path for split {split!r}")
        full = self._resolve(paths[split])
        if not os.path.exists(full):
            raise ConfigurationError(f"dataset path for {split!r} does not exist: {full}")
        return full

    def has_dataset(self, split: str) -> bool:
        return split in self.raw.get("datasets", {})

    def load_split(self, split: str) -> Dataset:
        return load_dataset(self.dataset_path(split))

    def family(self, kind_override: str | None = None):
        from .families import FamilySpec
        spec_dict = dict(self.raw.get("family", {"kind": "bow_linear"}))
        if kind_override:
            spec_dict["kind"] = kind_override
        return FamilySpec.from_dict(spec_dict, default_seed=self.seed)

    def transforms(self, kinds_filter: Sequence[str] | None = None):
        from .transforms import TransformSpec
        specs = [TransformSpec.from_dict(d, default_seed=self.seed)
                 for d in self.raw.get("transforms", [])]
        if kinds_filter:
            wanted = set(kinds_filter)
            specs = [s for s in specs if s.kind in wanted]
            missing = wanted - {s.kind for s in specs}
            for kind in sorted(missing):
                specs.append(TransformSpec.from_dict({"kind": kind}, default_seed=self.seed))
        return specs

    def out_dir(self, override: str | None = None) -> str:
        out = override or self.raw.get("out_dir", "out")
        return self._resolve(out)


def load_config(path: str, seed_override: int | None = None) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    seed = seed_override if seed_override is not None else raw.get("seed")
    if seed is None:
        raise ConfigurationError(f"{path}: config requires a seed")
    base_dir = os.path.dirname(os.path.abspath(path))
    # dataset paths are validated lazily, when a command references the split
    # (synth writes them, so they need not exist up front)
    return RunConfig(seed=int(seed), raw=raw, base_dir=base_dir)


def provenance_block(seed: int, family=None, pair_metadata: dict | None = None) -> dict:
    block: dict = {"seed": seed}
    if family is not None:
        block["family"] = family.to_dict()
        block["family_digest"] = family.digest()
    if pair_metadata is not None:
        block["selected_epoch_input"] = pair_metadata.get("selected_epoch_input")
        block["selected_epoch_null"] = pair_metadata.get("selected_epoch_null")
    return block
