"""Built-in predictive families and their training procedure.

Three families are shipped, chosen to be cheap, deterministic, and strictly
orderable so containment properties can be exercised:

  null_only   bias-only softmax; always ignores the input (the label marginal)
  bow_linear  log-linear softmax over hashed bag-of-n-gram counts
  mlp         one or two ReLU hidden layers over the same hashed features

Feature vectors are a pure function of the token multiset: n-grams are read
from a canonically sorted copy of the token sequence, so any permutation of
the input tokens produces an identical feature vector (and hence identical
predictions) for every configuration. Hashing is seed-free and stable across
processes; unknown tokens hash like any others.

Training minimizes cross-entropy with Adam over shuffled mini-batches. After
every epoch the model is scored on the dev split (mean gold surprisal, bits);
the returned parameters are those of the dev-minimizing epoch, with early
stopping once no improvement has been seen for ``early_stop_patience`` epochs.
The untrained initial state takes part in that selection as epoch 0, so a
family never returns a model worse on dev than its input-free prior. Given
the same spec, seed, and data, training is byte-deterministic.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .data import Dataset, LabelSpace, serialize_input, tokenize
from .core import CategoricalDistribution, floor_probs
from .errors import ConfigurationError, ValidationError

_NGRAM_SEP = "\x1f"


@dataclass(frozen=True)
class FeatureSpec:
    """Hashed bag-of-n-grams configuration."""

    hash_dim: int = 2 ** 18
    ngram_orders: tuple[int, ...] = (1, 2)
    lowercase: bool = True
    signed_hashing: bool = True

    def __post_init__(self):
        object.__setattr__(self, "ngram_orders", tuple(self.ngram_orders))
        if self.hash_dim < 2 or (self.hash_dim & (self.hash_dim - 1)) != 0:
            raise ConfigurationError(f"hash_dim must be a power of two >= 2, got {self.hash_dim}")
        if not self.ngram_orders:
            raise ConfigurationError("ngram_orders must be non-empty")
        if any(n < 1 for n in self.ngram_orders):
            raise ConfigurationError(f"ngram orders must be >= 1, got {self.ngram_orders}")
        if list(self.ngram_orders) != sorted(self.ngram_orders):
            raise ConfigurationError(f"ngram orders must be ascending, got {self.ngram_orders}")

    def to_dict(self) -> dict:
        return {"hash_dim": self.hash_dim, "ngram_orders": list(self.ngram_orders),
                "lowercase": self.lowercase, "signed_hashing": self.signed_hashing}


@dataclass(frozen=True)
class OptimizerSpec:
    learning_rate: float
    batch_size: int = 64
    max_epochs: int = 20
    early_stop_patience: int = 3

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ConfigurationError("max_epochs must be >= 1")
        if self.early_stop_patience < 1:
            raise ConfigurationError("early_stop_patience must be >= 1")

    def to_dict(self) -> dict:
        return {"learning_rate": self.learning_rate, "batch_size": self.batch_size,
                "max_epochs": self.max_epochs, "early_stop_patience": self.early_stop_patience}


KINDS = ("null_only", "bow_linear", "mlp")

# Adam takes near-constant-size steps per parameter regardless of gradient
# magnitude, so one-hit n-gram features memorize their instance's label at a
# rate set purely by the learning rate while the shared signal features gain
# one step per batch. Small batches plus a small rate keep that ratio sane;
# lr 0.05 with batch 256 provably loses the family-containment property on
# separable synthetic data (bigger family stuck at a worse dev entropy).
_DEFAULT_LR = {"null_only": 0.01, "bow_linear": 0.01, "mlp": 0.005}


@dataclass(frozen=True)
class FamilySpec:
    """User-facing description of one predictive family plus its optimizer.

    ``seed`` drives every random choice in training (init, batch order); the
    null- and input-trained models use independent child streams of it.
    """

    kind: str
    features: FeatureSpec = field(default_factory=FeatureSpec)
    hidden_sizes: tuple[int, ...] = ()
    optimizer: OptimizerSpec | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown family kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "hidden_sizes", tuple(self.hidden_sizes))
        if self.kind == "mlp":
            if not self.hidden_sizes:
                raise ConfigurationError("mlp requires non-empty hidden_sizes")
            if any(h < 1 for h in self.hidden_sizes):
                raise ConfigurationError(f"hidden sizes must be >= 1, got {self.hidden_sizes}")
        if self.optimizer is None:
            object.__setattr__(self, "optimizer", OptimizerSpec(learning_rate=_DEFAULT_LR[self.kind]))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "features": self.features.to_dict(),
            "hidden_sizes": list(self.hidden_sizes),
            "optimizer": self.optimizer.to_dict(),
            "seed": self.seed,
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]

    @staticmethod
    def from_dict(d: dict, default_seed: int | None = None) -> "FamilySpec":
        feats = FeatureSpec(**d["features"]) if "features" in d else FeatureSpec()
        opt = OptimizerSpec(**d["optimizer"]) if d.get("optimizer") else None
        seed = d.get("seed", default_seed)
        if seed is None:
            raise ConfigurationError("family spec needs a seed (or a run-level seed)")
        return FamilySpec(kind=d["kind"], features=feats,
                          hidden_sizes=tuple(d.get("hidden_sizes", ())),
                          optimizer=opt, seed=int(seed))


# ---------------------------------------------------------------------------
# Feature hashing


def _hash64(key: str) -> int:
    return int.from_bytes(hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest(), "little")


def featurize_texts(texts: Sequence[str], spec: FeatureSpec) -> sp.csr_matrix:
    """Hashed, signed n-gram count matrix (rows follow input order).

    Tokens are sorted before n-gram extraction, making every row invariant to
    token order within the text.
    """
    mask = spec.hash_dim - 1
    indptr = [0]
    indices: list[int] = []
    values: list[float] = []
    for text in texts:
        toks = sorted(tokenize(text, lowercase=spec.lowercase))
        for n in spec.ngram_orders:
            for i in range(len(toks) - n + 1):
                key = f"{n}{_NGRAM_SEP}" + _NGRAM_SEP.join(toks[i:i + n])
                h = _hash64(key)
                indices.append(h & mask)
                sign = -1.0 if (spec.signed_hashing and (h >> 63) & 1) else 1.0
                values.append(sign)
        indptr.append(len(indices))
    mat = sp.csr_matrix(
        (np.asarray(values, dtype=np.float64),
         np.asarray(indices, dtype=np.int64),
         np.asarray(indptr, dtype=np.int64)),
        shape=(len(texts), spec.hash_dim),
    )
    mat.sum_duplicates()
    return mat


# ---------------------------------------------------------------------------
# Models


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class _Params:
    """Weight container: a stack of (W, b) layers; empty W list for
    bias-only models. Forward pass covers all three family kinds."""

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        self.weights = weights
        self.biases = biases

    def copy(self) -> "_Params":
        return _Params([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def forward(self, x: sp.csr_matrix | None, n_rows: int) -> np.ndarray:
        if not self.weights or x is None:
            logits = np.broadcast_to(self.biases[-1], (n_rows, self.biases[-1].size))
            return _softmax(np.asarray(logits, dtype=np.float64))
        h = x @ self.weights[0] + self.biases[0]
        for w, b in zip(self.weights[1:], self.biases[1:]):
            h = np.maximum(h, 0.0) @ w + b
        return _softmax(h)


class TrainedPredictor:
    """Immutable fitted predictor; deterministic by construction.

    The null input routes through the bias-only path: an empty text has no
    tokens, hence a zero feature vector, so only the biases speak. null_only
    predictors ignore features for every input.
    """

    def __init__(self, family: FamilySpec, label_space: LabelSpace,
                 schema: tuple[str, ...], params: _Params, descriptor: dict):
        self.family = family
        self.label_space = label_space
        self.schema = schema
        self._params = params
        self.descriptor = descriptor

    def predict_proba_batch(self, texts: Sequence[str]) -> np.ndarray:
        if self.family.kind == "null_only":
            return self._params.forward(None, len(texts)).copy()
        x = featurize_texts(texts, self.family.features)
        return self._params.forward(x, len(texts))

    def predict_proba(self, text: str) -> np.ndarray:
        return self.predict_proba_batch([text])[0]


def predict(p: TrainedPredictor, text: str) -> CategoricalDistribution:
    """Label distribution for one input (``""`` is the null input)."""
    return CategoricalDistribution(floor_probs(p.predict_proba(text)))


# ---------------------------------------------------------------------------
# Training


class _Adam:
    def __init__(self, shapes: list[tuple[int, ...]], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _init_params(kind: str, dim: int, hidden: tuple[int, ...], n_labels: int,
                 rng: np.random.Generator) -> _Params:
    if kind == "null_only":
        return _Params([], [np.zeros(n_labels)])
    sizes = [dim, *hidden, n_labels] if kind == "mlp" else [dim, n_labels]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        if kind == "bow_linear":
            w = np.zeros((fan_in, fan_out))
        else:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return _Params(weights, biases)


def _dev_entropy_bits(params: _Params, dev_x: sp.csr_matrix | None,
                      dev_gold: np.ndarray) -> float:
    probs = params.forward(dev_x, dev_gold.size)
    return float(np.mean(-np.log2(np.maximum(probs[np.arange(dev_gold.size), dev_gold], 1e-300))))


def _grads(params: _Params, x: sp.csr_matrix | None, gold: np.ndarray,
           n_labels: int, bias_only: bool) -> list[np.ndarray]:
    """Cross-entropy gradients, mean over the batch. Returns the flat list
    [W1, b1, W2, b2, ...] (biases only when bias_only)."""
    n = gold.size
    onehot = np.zeros((n, n_labels))
    onehot[np.arange(n), gold] = 1.0
    if bias_only or x is None:
        probs = params.forward(None, n)
        return [(probs - onehot).sum(axis=0) / n]
    # forward with cached activations
    acts = []
    h = x @ params.weights[0] + params.biases[0]
    for w, b in zip(params.weights[1:], params.biases[1:]):
        acts.append(h)
        h = np.maximum(h, 0.0) @ w + b
    probs = _softmax(h)
    delta = (probs - onehot) / n
    grads: list[np.ndarray] = []
    for layer in range(len(params.weights) - 1, 0, -1):
        a = np.maximum(acts[layer - 1], 0.0)
        grads.append(delta.sum(axis=0))
        grads.append(a.T @ delta)
        delta = (delta @ params.weights[layer].T) * (acts[layer - 1] > 0.0)
    grads.append(delta.sum(axis=0))
    grads.append((x.T @ delta) if sp.issparse(x) else x.T @ delta)
    grads.reverse()  # -> [W1, b1, W2, b2, ...]
    return grads


def _train_model(spec: FamilySpec, train_x: sp.csr_matrix | None, train_gold: np.ndarray,
                 dev_x: sp.csr_matrix | None, dev_gold: np.ndarray,
                 n_labels: int, seed_seq: np.random.SeedSequence) -> tuple[_Params, list[float], int]:
    """Fit one model; returns (best params, dev entropies in bits indexed by
    epoch with entry 0 the untrained state, selected epoch).

    The untrained state competes for selection: when no amount of training
    improves dev entropy (e.g. labels independent of inputs), the model falls
    back to its input-free prior instead of shipping memorized noise.
    """
    rng = np.random.default_rng(seed_seq)
    opt = spec.optimizer
    bias_only = spec.kind == "null_only" or train_x is None or train_x.nnz == 0
    params = _init_params(spec.kind, spec.features.hash_dim, spec.hidden_sizes, n_labels, rng)

    if bias_only:
        flat = params.biases[-1:]
    else:
        flat = []
        for w, b in zip(params.weights, params.biases):
            flat.extend((w, b))
    adam = _Adam([p.shape for p in flat], lr=opt.learning_rate)

    n = train_gold.size
    eval_x = None if bias_only else dev_x
    best_bits = _dev_entropy_bits(params, eval_x, dev_gold)
    best_params, best_epoch = params.copy(), 0
    history = [best_bits]
    since_best = 0
    for epoch in range(1, opt.max_epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, opt.batch_size):
            idx = order[start:start + opt.batch_size]
            xb = None if bias_only else train_x[idx]
            grads = _grads(params, xb, train_gold[idx], n_labels, bias_only)
            adam.step(flat, grads)
        bits = _dev_entropy_bits(params, eval_x, dev_gold)
        history.append(bits)
        if bits < best_bits:
            best_bits, best_params, best_epoch = bits, params.copy(), epoch
            since_best = 0
        else:
            since_best += 1
            if since_best >= opt.early_stop_patience:
                break
    return best_params, history, best_epoch


@dataclass(frozen=True)
class TrainedPair:
    """The two fitted predictors every estimate is defined over: one trained
    on real inputs, one trained on the null input (the label marginal)."""

    input_model: TrainedPredictor
    null_model: TrainedPredictor
    metadata: dict


def _check_compatible(train: Dataset, dev: Dataset) -> None:
    if train.schema != dev.schema:
        raise ValidationError(
            f"train schema {list(train.schema)} != dev schema {list(dev.schema)}")
    if train.label_space != dev.label_space:
        missing = [l for l in dev.label_space.labels if l not in train.label_space.labels]
        raise ValidationError(
            "train and dev label spaces differ"
            + (f"; labels {missing} absent from the training label space" if missing else ""))


def train_model_on(spec: FamilySpec, train: Dataset, dev: Dataset,
                   seed_key: int = 0) -> TrainedPredictor:
    """Fit a single input-conditioned model of this family (used directly by
    the conditioning analysis; train_pair is the main entry point)."""
    _check_compatible(train, dev)
    train.require_nonempty("training split")
    dev.require_nonempty("dev split")
    n_labels = len(train.label_space)
    feats = spec.features
    x_tr = None
    x_dev = None
    if spec.kind != "null_only":
        x_tr = featurize_texts([serialize_input(i, train.schema) for i in train], feats)
        x_dev = featurize_texts([serialize_input(i, dev.schema) for i in dev], feats)
    gold_tr = np.fromiter((i.gold for i in train), dtype=np.int64, count=len(train))
    gold_dev = np.fromiter((i.gold for i in dev), dtype=np.int64, count=len(dev))
    seq = np.random.SeedSequence((spec.seed, seed_key))
    params, history, epoch = _train_model(spec, x_tr, gold_tr, x_dev, gold_dev, n_labels, seq)
    descriptor = {
        "family": spec.to_dict(),
        "family_digest": spec.digest(),
        "seed": spec.seed,
        "role": "input",
        "selected_epoch": epoch,
        "dev_entropy_bits": history,
        "schema": tuple(train.schema),
    }
    return TrainedPredictor(spec, train.label_space, tuple(train.schema), params, descriptor)


def train_pair(spec: FamilySpec, train: Dataset, dev: Dataset) -> TrainedPair:
    """Fit the (input, null) predictor pair by cross-entropy descent.

    Both models share the family spec and label space; each is returned at
    its own dev-entropy-minimizing epoch. The null model is trained on the
    null input, so it can only fit the label marginal.
    """
    _check_compatible(train, dev)
    train.require_nonempty("training split")
    dev.require_nonempty("dev split")
    n_labels = len(train.label_space)
    gold_tr = np.fromiter((i.gold for i in train), dtype=np.int64, count=len(train))
    gold_dev = np.fromiter((i.gold for i in dev), dtype=np.int64, count=len(dev))
    root = np.random.SeedSequence(spec.seed)
    seq_input, seq_null = root.spawn(2)

    x_tr = x_dev = None
    if spec.kind != "null_only":
        x_tr = featurize_texts([serialize_input(i, train.schema) for i in train], spec.features)
        x_dev = featurize_texts([serialize_input(i, dev.schema) for i in dev], spec.features)
    p_in, hist_in, ep_in = _train_model(spec, x_tr, gold_tr, x_dev, gold_dev, n_labels, seq_input)
    p_null, hist_null, ep_null = _train_model(spec, None, gold_tr, None, gold_dev, n_labels, seq_null)

    base = {"family": spec.to_dict(), "family_digest": spec.digest(), "seed": spec.seed,
            "schema": tuple(train.schema)}
    input_model = TrainedPredictor(
        spec, train.label_space, tuple(train.schema), p_in,
        {**base, "role": "input", "selected_epoch": ep_in, "dev_entropy_bits": hist_in})
    null_model = TrainedPredictor(
        spec, train.label_space, tuple(train.schema), p_null,
        {**base, "role": "null", "selected_epoch": ep_null, "dev_entropy_bits": hist_null})
    metadata = {
        "selected_epoch_input": ep_in,
        "selected_epoch_null": ep_null,
        "dev_entropy_input_bits": hist_in,
        "dev_entropy_null_bits": hist_null,
        "seed": spec.seed,
        "family_digest": spec.digest(),
    }
    return TrainedPair(input_model=input_model, null_model=null_model, metadata=metadata)


# ---------------------------------------------------------------------------
# Persistence (used by the CLI's train subcommand)


def save_pair(pair: TrainedPair, path: str) -> None:
    arrays = {}
    meta = {
        "metadata": pair.metadata,
        "family": pair.input_model.family.to_dict(),
        "labels": list(pair.input_model.label_space.labels),
        "schema": list(pair.input_model.schema),
        "descriptors": {"input": _json_safe(pair.input_model.descriptor),
                        "null": _json_safe(pair.null_model.descriptor)},
        "layout": {},
    }
    for role, model in (("input", pair.input_model), ("null", pair.null_model)):
        meta["layout"][role] = {"n_weights": len(model._params.weights),
                                "n_biases": len(model._params.biases)}
        for k, w in enumerate(model._params.weights):
            arrays[f"{role}_w{k}"] = w
        for k, b in enumerate(model._params.biases):
            arrays[f"{role}_b{k}"] = b
    arrays["meta_json"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def _json_safe(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, tuple):
            out[k] = list(v)
        else:
            out[k] = v
    return out


def load_pair(path: str) -> TrainedPair:
    with np.load(path) as z:
        meta = json.loads(bytes(z["meta_json"]).decode("utf-8"))
        spec = FamilySpec.from_dict(meta["family"])
        labels = LabelSpace(tuple(meta["labels"]))
        schema = tuple(meta["schema"])
        models = {}
        for role in ("input", "null"):
            layout = meta["layout"][role]
            weights = [z[f"{role}_w{k}"] for k in range(layout["n_weights"])]
            biases = [z[f"{role}_b{k}"] for k in range(layout["n_biases"])]
            desc = meta["descriptors"][role]
            desc["schema"] = tuple(desc["schema"])
            models[role] = TrainedPredictor(spec, labels, schema, _Params(weights, biases), desc)
    return TrainedPair(input_model=models["input"], null_model=models["null"],
                       metadata=meta["metadata"])
