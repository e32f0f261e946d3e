import json
import os

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

from vinfo import PlantedSpec, generate_planted, write_dataset


def build_tiny_model(model_dir: str, texts: list[str], num_labels: int) -> str:
    """A from-scratch word-level BERT small enough to fine-tune in tests."""
    from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors
    from transformers import (BertConfig, BertForSequenceClassification,
                              PreTrainedTokenizerFast)

    words = sorted({w.lower() for t in texts for w in t.split()})
    specials = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    vocab = {t: i for i, t in enumerate(specials + words)}
    tok = Tokenizer(models.WordPiece(vocab=vocab, unk_token="[UNK]"))
    tok.normalizer = normalizers.Lowercase()
    tok.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
    tok.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    fast = PreTrainedTokenizerFast(tokenizer_object=tok, unk_token="[UNK]",
                                   pad_token="[PAD]", cls_token="[CLS]",
                                   sep_token="[SEP]", mask_token="[MASK]")
    config = BertConfig(vocab_size=len(vocab), hidden_size=32, num_hidden_layers=2,
                        num_attention_heads=2, intermediate_size=64,
                        max_position_embeddings=64, num_labels=num_labels)
    model = BertForSequenceClassification(config)
    model.save_pretrained(model_dir)
    fast.save_pretrained(model_dir)
    return model_dir


@pytest.fixture(scope="session")
def toy_workspace(tmp_path_factory):
    """Planted toy data in the toolkit's format plus a matching tiny model."""
    root = tmp_path_factory.mktemp("exporter")
    train, dev, test, truth = generate_planted(
        PlantedSpec(n=1000, flip_rate=0.1, vocab_size=60, seed=77,
                    filler_len=(4, 8)))
    paths = {}
    for name, split in (("train", train), ("dev", dev), ("test", test)):
        paths[name] = str(root / f"{name}.jsonl")
        write_dataset(split, paths[name])
    texts = ["TEXT: " + inst.fields["text"] for inst in train]
    model_dir = build_tiny_model(str(root / "tiny-model"), texts, len(train.label_space))
    return {"root": root, "paths": paths, "model": model_dir,
            "splits": (train, dev, test), "truth": truth}
