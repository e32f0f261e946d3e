"""Shared builders for the test suite."""

import numpy as np

from vinfo import Dataset, FamilySpec, FeatureSpec, Instance, LabelSpace, OptimizerSpec


def make_dataset(texts, golds, space=None, split="test", schema=("text",)):
    space = space or LabelSpace(("c0", "c1"))
    instances = tuple(
        Instance(id=f"i{k:05d}",
                 fields={schema[0]: t} if isinstance(t, str) else dict(t),
                 gold=g)
        for k, (t, g) in enumerate(zip(texts, golds))
    )
    return Dataset(schema=tuple(schema), label_space=space, instances=instances, split=split)


def small_family(seed=0, orders=(1,), kind="bow_linear", hash_dim=2 ** 14, **opt):
    opt.setdefault("learning_rate", 0.005 if kind == "mlp" else 0.01)
    return FamilySpec(
        kind=kind,
        features=FeatureSpec(hash_dim=hash_dim, ngram_orders=orders),
        hidden_sizes=(16,) if kind == "mlp" else (),
        optimizer=OptimizerSpec(**opt),
        seed=seed,
    )


class FixedPredictor:
    """Test double: returns canned distributions keyed by input text, with a
    default for everything else (including the null input)."""

    def __init__(self, space, default, by_text=None, schema=("text",)):
        self.label_space = space
        self.descriptor = {"schema": tuple(schema), "family_digest": "fixed", "seed": 0}
        self._default = np.asarray(default, dtype=np.float64)
        self._by_text = {k: np.asarray(v, dtype=np.float64) for k, v in (by_text or {}).items()}

    def predict_proba(self, text):
        return self._by_text.get(text, self._default).copy()

    def predict_proba_batch(self, texts):
        return np.stack([self.predict_proba(t) for t in texts])
