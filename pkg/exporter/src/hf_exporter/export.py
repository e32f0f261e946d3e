"""Fine-tune a sequence classifier twice and export held-out scores.

The first run sees the serialized inputs, the second sees only the null
input (empty string), so the second model can learn nothing beyond the label
marginal. Each run keeps the checkpoint with the lowest dev conditional
entropy (mean gold-label surprisal, nats). The held-out split is then scored
by both selected checkpoints and written in the toolkit's score-file format
with log_base "e"; all the information-theoretic math stays in the analysis
toolkit, which converts and floors on ingest.

Determinism: seeds are set for torch and python, but bit-identical outputs
across runs are only as strong as the torch backend's own guarantees.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field

import numpy as np
import torch
from torch.nn.functional import log_softmax
from transformers import AutoModelForSequenceClassification, AutoTokenizer

from .data import NULL_INPUT, LoadedSplit, load_split

MAX_LENGTH = 128


@dataclass(frozen=True)
class ExportConfig:
    model: str                      # hub id or local checkpoint directory
    train_path: str
    dev_path: str
    test_path: str
    out_path: str
    epochs: int = 3
    batch_size: int = 16
    learning_rate: float = 5e-5
    seed: int = 0
    null_input_both: bool = False   # calibration switch: feed "" to both runs
    extra_metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def _batches(n: int, batch_size: int, generator: torch.Generator):
    order = torch.randperm(n, generator=generator).tolist()
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def _encode(tokenizer, texts: list[str]):
    return tokenizer(texts, padding=True, truncation=True,
                     max_length=MAX_LENGTH, return_tensors="pt")


@torch.no_grad()
def _gold_logps(model, tokenizer, texts: list[str], labels: list[int],
                batch_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-instance (log p(gold), full label log-probs) in nats."""
    model.eval()
    gold = []
    full = []
    for start in range(0, len(texts), batch_size):
        chunk = texts[start:start + batch_size]
        enc = _encode(tokenizer, chunk)
        logp = log_softmax(model(**enc).logits, dim=-1)
        rows = torch.arange(len(chunk))
        batch_labels = torch.tensor(labels[start:start + batch_size])
        gold.append(logp[rows, batch_labels])
        full.append(logp)
    return (torch.cat(gold).double().numpy(),
            torch.cat(full).double().numpy())


def _finetune(config: ExportConfig, tokenizer, texts: list[str], labels: list[int],
              dev_texts: list[str], dev_labels: list[int],
              num_labels: int, run_seed: int) -> tuple[torch.nn.Module, int, list[float]]:
    """One fine-tuning run; returns (best model, selected epoch, dev entropies)."""
    torch.manual_seed(run_seed)
    model = AutoModelForSequenceClassification.from_pretrained(
        config.model, num_labels=num_labels)
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
    generator = torch.Generator().manual_seed(run_seed)
    loss_fn = torch.nn.CrossEntropyLoss()

    def dev_entropy() -> float:
        gold_logp, _ = _gold_logps(model, tokenizer, dev_texts, dev_labels,
                                   config.batch_size)
        return float(-gold_logp.mean())

    best_bits = dev_entropy()   # epoch 0: the pretrained head as-is
    best_state = copy.deepcopy(model.state_dict())
    best_epoch = 0
    history = [best_bits]
    for epoch in range(1, config.epochs + 1):
        model.train()
        for idx in _batches(len(texts), config.batch_size, generator):
            enc = _encode(tokenizer, [texts[i] for i in idx])
            target = torch.tensor([labels[i] for i in idx])
            loss = loss_fn(model(**enc).logits, target)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
        bits = dev_entropy()
        history.append(bits)
        if bits < best_bits:
            best_bits, best_epoch = bits, epoch
            best_state = copy.deepcopy(model.state_dict())
    model.load_state_dict(best_state)
    model.eval()
    return model, best_epoch, history


def export(config: ExportConfig) -> str:
    """Run both fine-tunes and write the score file; returns its path."""
    train = load_split(config.train_path)
    dev = load_split(config.dev_path)
    test = load_split(config.test_path)
    for split_name, split in (("dev", dev), ("test", test)):
        if split.labels != train.labels:
            raise ValueError(f"{split_name} label space {list(split.labels)} does not "
                             f"match train {list(train.labels)}")

    tokenizer = AutoTokenizer.from_pretrained(config.model)
    num_labels = len(train.labels)

    def texts_of(split: LoadedSplit, null: bool) -> list[str]:
        return [NULL_INPUT if null else r.text for r in split.records]

    labels_tr = [r.label for r in train.records]
    labels_dev = [r.label for r in dev.records]
    runs = {}
    for role, null in (("input", config.null_input_both), ("null", True)):
        model, epoch, history = _finetune(
            config, tokenizer,
            texts_of(train, null), labels_tr,
            texts_of(dev, null), labels_dev,
            num_labels, run_seed=config.seed)
        gold_logp, full_logp = _gold_logps(
            model, tokenizer, texts_of(test, null),
            [r.label for r in test.records], config.batch_size)
        runs[role] = {"epoch": epoch, "history": history,
                      "gold": gold_logp, "full": full_logp}

    header = {
        "log_base": "e",
        "model": {
            "name": config.model,
            "seed": config.seed,
            "selected_epoch_input": runs["input"]["epoch"],
            "selected_epoch_null": runs["null"]["epoch"],
            "epochs": config.epochs,
            "batch_size": config.batch_size,
            "learning_rate": config.learning_rate,
            "null_input_both": config.null_input_both,
            **config.extra_metadata,
        },
    }
    lines = [json.dumps(header, sort_keys=True)]
    for i, rec in enumerate(test.records):
        lines.append(json.dumps({
            "id": rec.id,
            "logp_gold_given_x": float(runs["input"]["gold"][i]),
            "logp_gold_null": float(runs["null"]["gold"][i]),
            "label_logps_x": [float(v) for v in runs["input"]["full"][i]],
            "label_logps_null": [float(v) for v in runs["null"]["full"][i]],
        }, sort_keys=True))

    tmp = f"{config.out_path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, config.out_path)
    return config.out_path
