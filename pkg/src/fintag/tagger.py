"""Trainable tagger: hashed sparse contextual features, softmax or CRF head.

A linear scorer over hashed string features substitutes for neural encoders
at desk scale. The feature hash is pinned (blake2b, 8-byte digest, little
endian, reduced modulo the hash dimension) so models are reproducible
bit-for-bit across platforms. "O" is label index 0 everywhere, so the
zero-weight argmax tie-break lands on the safe default.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import crf as crf_mod
from .labels import LabelSet, PoolingStrategy, align_to_subwords, collapse_to_words
from .tokenization import (
    NUM_TOKEN,
    NumericPolicy,
    ShapeVocab,
    SubwordVocab,
    build_subword_vocab,
    detect_number,
    normalize_numeric,
    shape_of,
    wordpiece_tokenize,
)

MODEL_MAGIC = b"FTM1"
MODEL_VERSION = 1
HASH_ALGORITHM = "blake2b-64"


class TaggerError(ValueError):
    """Raised for invalid tagger configuration or inputs."""


class FingerprintMismatch(TaggerError):
    """A model was paired with a vocab or label set it was not trained with."""


class TrainingDiverged(TaggerError):
    """Training loss became non-finite."""


@dataclass(frozen=True)
class FeatureConfig:
    hash_dimension: int = 2**20
    context_window: int = 2

    def __post_init__(self) -> None:
        d = self.hash_dimension
        if d < 2**10 or d & (d - 1):
            raise TaggerError("hash_dimension must be a power of two >= 2^10")
        if self.context_window < 0:
            raise TaggerError("context_window must be >= 0")

    @property
    def features_per_position(self) -> int:
        return 13 + 2 * self.context_window


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    learning_rate: float = 0.25
    l2_strength: float = 0.0
    batch_size: int = 32
    seed: int = 0
    patience: int = 5

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise TaggerError("epochs and batch_size must be positive")
        if self.learning_rate <= 0 or self.l2_strength < 0 or self.patience < 0:
            raise TaggerError("bad learning_rate / l2_strength / patience")


def hash_feature(text: str) -> int:
    """Pinned 64-bit string hash used for the feature space."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class _FeatureHasher:
    """Caches hashed indices of feature strings; one instance per extraction."""

    def __init__(self, dimension: int):
        self.dimension = dimension
        self._cache: dict[str, int] = {}
        self._unit_cache: dict[str, list[int]] = {}

    def index(self, text: str) -> int:
        idx = self._cache.get(text)
        if idx is None:
            idx = hash_feature(text) % self.dimension
            self._cache[text] = idx
        return idx

    def unit_features(self, unit: str) -> list[int]:
        cached = self._unit_cache.get(unit)
        if cached is None:
            cached = [self.index(s) for s in _unit_feature_strings(unit)]
            self._unit_cache[unit] = cached
        return cached


def _unit_feature_strings(unit: str) -> list[str]:
    """Position-independent feature strings of one unit (11 of them)."""
    is_num = detect_number(unit)
    if is_num:
        sh = shape_of(unit)
        numeric = "1"
    elif unit == NUM_TOKEN or (unit.startswith("[") and unit.endswith("]")):
        sh = unit
        numeric = "1"
    else:
        sh = "-"
        numeric = "0"
    n = len(unit)
    return [
        "id=" + unit,
        "lo=" + unit.lower(),
        "cont=" + ("1" if unit.startswith("##") else "0"),
        "num=" + numeric,
        "sh=" + sh,
        "pre1=" + unit[: min(1, n)],
        "pre2=" + unit[: min(2, n)],
        "pre3=" + unit[: min(3, n)],
        "suf1=" + unit[n - min(1, n) :],
        "suf2=" + unit[n - min(2, n) :],
        "suf3=" + unit[n - min(3, n) :],
    ]


def _position_feature_strings(units, i: int, window: int) -> list[str]:
    strings = _unit_feature_strings(units[i])
    for d in range(-window, window + 1):
        if d == 0:
            continue
        j = i + d
        if j < 0:
            neighbor = "<s>"
        elif j >= len(units):
            neighbor = "</s>"
        else:
            neighbor = units[j]
        strings.append(f"nb[{d:+d}]=" + neighbor)
    strings.append("bos=" + ("1" if i == 0 else "0"))
    strings.append("eos=" + ("1" if i == len(units) - 1 else "0"))
    return strings


def extract_features(units, i: int, config: FeatureConfig) -> frozenset[int]:
    """Hashed feature indices for position i; deterministic and local."""
    if not 0 <= i < len(units):
        raise TaggerError(f"position {i} out of range for {len(units)} units")
    strings = _position_feature_strings(units, i, config.context_window)
    return frozenset(hash_feature(s) % config.hash_dimension for s in strings)


def _feature_matrix(units, config: FeatureConfig, hasher: _FeatureHasher) -> np.ndarray:
    """(T, F) int32 feature-index matrix; duplicate indices within a row are
    replaced by the padding column so row sums follow set semantics."""
    window = config.context_window
    T = len(units)
    F = config.features_per_position
    X = np.empty((T, F), dtype=np.int32)
    for i in range(T):
        row = list(hasher.unit_features(units[i]))
        for d in range(-window, window + 1):
            if d == 0:
                continue
            j = i + d
            if j < 0:
                neighbor = "<s>"
            elif j >= T:
                neighbor = "</s>"
            else:
                neighbor = units[j]
            row.append(hasher.index(f"nb[{d:+d}]=" + neighbor))
        row.append(hasher.index("bos=" + ("1" if i == 0 else "0")))
        row.append(hasher.index("eos=" + ("1" if i == T - 1 else "0")))
        X[i] = row
    X.sort(axis=1)
    dup = X[:, 1:] == X[:, :-1]
    X[:, 1:][dup] = config.hash_dimension  # padding column, weight pinned to 0
    return X


@dataclass
class PackedDataset:
    """Pre-extracted features, gold unit labels, and piece bookkeeping."""

    feature_rows: list[np.ndarray]
    gold_units: list[np.ndarray]
    piece_counts: list[list[int]]
    word_labels: list[tuple[str, ...]]


@dataclass
class PredictionDetail:
    word_labels: list[str]
    unit_labels: list[str]
    units: list[str]
    piece_counts: list[int]


@dataclass
class TaggerModel:
    """Linear tagger with metadata pinning its tokenization regime."""

    weights: np.ndarray  # (hash_dimension + 1, L) float32; last row is padding
    head: str  # "softmax" | "crf"
    granularity: str  # "word" | "subword"
    policy: NumericPolicy
    feature_config: FeatureConfig
    labelset: LabelSet
    vocab: SubwordVocab | None = None
    shape_vocab: ShapeVocab | None = None
    crf_params: crf_mod.CrfParams | None = None
    train_seed: int = 0
    history: list[dict] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        if self.head not in ("softmax", "crf"):
            raise TaggerError(f"unknown head {self.head!r}")
        if self.granularity not in ("word", "subword"):
            raise TaggerError(f"unknown granularity {self.granularity!r}")
        self.policy = NumericPolicy(self.policy)
        if self.granularity == "subword" and self.vocab is None:
            raise TaggerError("subword granularity requires a subword vocabulary")
        if self.policy is NumericPolicy.SHAPE and self.shape_vocab is None:
            raise TaggerError("shape policy requires a shape vocabulary")
        if self.head == "crf" and self.crf_params is None:
            raise TaggerError("crf head requires CRF parameters")

    @property
    def n_labels(self) -> int:
        return len(self.labelset.labels)

    def fingerprints(self) -> dict:
        return {
            "labelset": self.labelset.fingerprint(),
            "vocab": self.vocab.fingerprint() if self.vocab else None,
            "shape_vocab": self.shape_vocab.fingerprint() if self.shape_vocab else None,
        }


def _units_and_counts(model: TaggerModel, tokens) -> tuple[list[str], list[int]]:
    if not tokens:
        raise TaggerError("empty sentence")
    normalized = normalize_numeric(tokens, model.policy, model.shape_vocab)
    if model.granularity == "word":
        return normalized, [1] * len(normalized)
    units: list[str] = []
    counts: list[int] = []
    for word in normalized:
        pieces = wordpiece_tokenize(word, model.vocab)
        units.extend(pieces)
        counts.append(len(pieces))
    return units, counts


def emissions(model: TaggerModel, units) -> np.ndarray:
    """Per-position label scores: the sum of hashed feature weights."""
    hasher = _FeatureHasher(model.feature_config.hash_dimension)
    X = _feature_matrix(list(units), model.feature_config, hasher)
    return _score_matrix(model.weights, X)


def _score_matrix(weights: np.ndarray, X: np.ndarray) -> np.ndarray:
    return weights[X].sum(axis=1, dtype=np.float64)


def pack_dataset(
    sentences,
    labelset: LabelSet,
    feature_config: FeatureConfig,
    policy: NumericPolicy | str,
    granularity: str,
    vocab: SubwordVocab | None,
    shape_vocab: ShapeVocab | None,
) -> PackedDataset:
    """Extract features and gold unit labels once; reusable across seeds."""
    policy = NumericPolicy(policy)
    hasher = _FeatureHasher(feature_config.hash_dimension)
    rows: list[np.ndarray] = []
    gold: list[np.ndarray] = []
    counts_all: list[list[int]] = []
    word_labels: list[tuple[str, ...]] = []
    for sentence in sentences:
        normalized = normalize_numeric(sentence.tokens, policy, shape_vocab)
        if granularity == "word":
            units, counts = normalized, [1] * len(normalized)
            unit_labels = list(sentence.labels)
        else:
            units, counts = [], []
            for word in normalized:
                pieces = wordpiece_tokenize(word, vocab)
                units.extend(pieces)
                counts.append(len(pieces))
            unit_labels = align_to_subwords(sentence.labels, counts)
        rows.append(_feature_matrix(units, feature_config, hasher))
        gold.append(np.array([labelset.label_index(lab) for lab in unit_labels], dtype=np.int64))
        counts_all.append(counts)
        word_labels.append(sentence.labels)
    return PackedDataset(rows, gold, counts_all, word_labels)


def _within_word_mask(labelset: LabelSet) -> np.ndarray:
    """Transitions legal inside a word under B-propagation alignment:
    O continues as O, B-t and I-t continue as I-t."""
    L = len(labelset.labels)
    allowed = np.zeros((L, L), dtype=bool)
    allowed[0, 0] = True
    for tag in labelset.tags:
        b, i = labelset.b_index(tag), labelset.i_index(tag)
        allowed[b, i] = True
        allowed[i, i] = True
    return allowed


def _subword_step_masks(piece_counts, labelset: LabelSet) -> np.ndarray | None:
    """Per-step masks restricting decoding to word-aligned label structure,
    so collapsed word labels are always IOB2-valid."""
    total = sum(piece_counts)
    if total <= 1:
        return None
    within = _within_word_mask(labelset)
    L = len(labelset.labels)
    steps = np.ones((total - 1, L, L), dtype=bool)
    pos = 0
    for count in piece_counts:
        for k in range(count - 1):
            steps[pos + k] = within
        pos += count
    return steps


def _decode_units(
    model: TaggerModel, scores: np.ndarray, piece_counts
) -> list[int]:
    if model.head == "softmax":
        return [int(i) for i in np.argmax(scores, axis=1)]
    mask = crf_mod.iob2_constraint_mask(model.labelset)
    step_allowed = None
    if model.granularity == "subword":
        step_allowed = _subword_step_masks(piece_counts, model.labelset)
    path, _ = crf_mod.viterbi_decode(scores, model.crf_params, mask, step_allowed)
    return path


def predict_detailed(model: TaggerModel, tokens) -> PredictionDetail:
    """Full pipeline with unit-level labels kept for diagnostics."""
    units, counts = _units_and_counts(model, list(tokens))
    scores = emissions(model, units)
    indices = _decode_units(model, scores, counts)
    unit_labels = [model.labelset.labels[i] for i in indices]
    if model.granularity == "subword":
        word_labels, _ = collapse_to_words(unit_labels, counts, PoolingStrategy.FIRST)
    else:
        word_labels = list(unit_labels)
    return PredictionDetail(word_labels, unit_labels, units, counts)


def predict(model: TaggerModel, tokens) -> list[str]:
    """Word-level labels for one sentence."""
    return predict_detailed(model, tokens).word_labels


def topk_tags(model: TaggerModel, tokens, index: int, k: int) -> list[tuple[str, float]]:
    """The k most probable entity tags for the word at ``index``.

    B-t and I-t probability mass is merged per tag and O is excluded; ties
    break by tag order. For the CRF head the per-position distribution comes
    from forward-backward marginals.
    """
    tokens = list(tokens)
    if not 0 <= index < len(tokens):
        raise TaggerError(f"index {index} out of range for {len(tokens)} words")
    n_tags = len(model.labelset.tags)
    if not 1 <= k <= n_tags:
        raise TaggerError(f"k must be in [1, {n_tags}], got {k}")
    units, counts = _units_and_counts(model, tokens)
    scores = emissions(model, units)
    pos = sum(counts[:index])  # first piece of the word
    if model.head == "softmax":
        row = scores[pos]
        row = row - row.max()
        p = np.exp(row)
        p /= p.sum()
    else:
        p = crf_mod.marginals(scores, model.crf_params)[pos]
    order = sorted(
        range(n_tags),
        key=lambda t: (-(p[model.labelset.b_index(model.labelset.tags[t])]
                         + p[model.labelset.i_index(model.labelset.tags[t])]), t),
    )
    result = []
    for t in order[:k]:
        tag = model.labelset.tags[t]
        mass = float(p[model.labelset.b_index(tag)] + p[model.labelset.i_index(tag)])
        result.append((tag, mass))
    return result


# --------------------------------------------------------------------------
# Training
# --------------------------------------------------------------------------


def _entity_micro_f1(model: TaggerModel, packed: PackedDataset) -> float:
    from .evaluation import entity_prf

    predicted = []
    for X, counts in zip(packed.feature_rows, packed.piece_counts):
        scores = _score_matrix(model.weights, X)
        indices = _decode_units(model, scores, counts)
        unit_labels = [model.labelset.labels[i] for i in indices]
        if model.granularity == "subword":
            words, _ = collapse_to_words(unit_labels, counts, PoolingStrategy.FIRST)
        else:
            words = unit_labels
        predicted.append(words)
    gold = [list(labels) for labels in packed.word_labels]
    return entity_prf(gold, predicted, model.labelset).micro_f1


def train(
    train_set,
    dev_set,
    labelset: LabelSet,
    feature_config: FeatureConfig | None = None,
    train_config: TrainConfig | None = None,
    head: str = "softmax",
    granularity: str = "word",
    policy: NumericPolicy | str = NumericPolicy.NONE,
    vocab: SubwordVocab | None = None,
    shape_vocab: ShapeVocab | None = None,
    packed_train: PackedDataset | None = None,
    packed_dev: PackedDataset | None = None,
) -> TaggerModel:
    """Mini-batch gradient descent; deterministic given the seed.

    The softmax head minimizes per-token cross-entropy, the CRF head the
    sentence negative log-likelihood, both with optional L2. When a dev set
    is given, training keeps the snapshot with the best dev entity micro-F1
    and stops early after ``patience`` epochs without improvement.
    """
    train_set = list(train_set)
    dev_set = list(dev_set) if dev_set is not None else []
    if not train_set:
        raise TaggerError("empty training set")
    feature_config = feature_config or FeatureConfig()
    train_config = train_config or TrainConfig()
    policy = NumericPolicy(policy)

    if granularity == "subword" and vocab is None:
        vocab = build_subword_vocab(
            train_set,
            shape_vocab if policy is NumericPolicy.SHAPE else None,
        )
    if policy is NumericPolicy.SHAPE and shape_vocab is None:
        shape_vocab = ShapeVocab.from_sentences(train_set)
        if granularity == "subword":
            vocab = build_subword_vocab(train_set, shape_vocab)

    if packed_train is None:
        packed_train = pack_dataset(
            train_set, labelset, feature_config, policy, granularity, vocab, shape_vocab
        )
    if packed_dev is None and dev_set:
        packed_dev = pack_dataset(
            dev_set, labelset, feature_config, policy, granularity, vocab, shape_vocab
        )

    L = len(labelset.labels)
    D = feature_config.hash_dimension
    weights = np.zeros((D + 1, L), dtype=np.float32)
    scale = 1.0
    params = crf_mod.CrfParams.zeros(L) if head == "crf" else None

    model = TaggerModel(
        weights=weights,
        head=head,
        granularity=granularity,
        policy=policy,
        feature_config=feature_config,
        labelset=labelset,
        vocab=vocab,
        shape_vocab=shape_vocab,
        crf_params=params,
        train_seed=train_config.seed,
    )

    rng = np.random.default_rng(train_config.seed)
    n = len(packed_train.feature_rows)
    lr = train_config.learning_rate
    l2 = train_config.l2_strength

    best_f1 = -1.0
    best_weights: np.ndarray | None = None
    best_params: crf_mod.CrfParams | None = None
    epochs_since_best = 0
    history: list[dict] = []

    for epoch in range(train_config.epochs):
        order = rng.permutation(n)
        total_loss = 0.0
        total_tokens = 0
        if head == "softmax":
            for b0 in range(0, n, train_config.batch_size):
                batch = order[b0 : b0 + train_config.batch_size]
                X = np.concatenate([packed_train.feature_rows[i] for i in batch])
                y = np.concatenate([packed_train.gold_units[i] for i in batch])
                P = X.shape[0]
                scores = weights[X].sum(axis=1, dtype=np.float64) * scale
                scores -= scores.max(axis=1, keepdims=True)
                probs = np.exp(scores)
                probs /= probs.sum(axis=1, keepdims=True)
                total_loss += -np.log(
                    np.maximum(probs[np.arange(P), y], 1e-300)
                ).sum()
                total_tokens += P
                grad = probs
                grad[np.arange(P), y] -= 1.0
                if l2 > 0.0:
                    scale *= 1.0 - lr * l2
                delta = grad * (-lr / (scale * P))
                np.add.at(weights, X.ravel(), np.repeat(delta, X.shape[1], axis=0).astype(np.float32))
                weights[D] = 0.0
        else:
            for i in order:
                X = packed_train.feature_rows[i]
                y = packed_train.gold_units[i]
                T = X.shape[0]
                scores = weights[X].sum(axis=1, dtype=np.float64) * scale
                loss, grad_e, grad_p = crf_mod.nll_and_gradient(scores, params, y)
                total_loss += loss
                total_tokens += T
                if l2 > 0.0:
                    scale *= 1.0 - lr * l2
                delta = grad_e * (-lr / (scale * T))
                np.add.at(weights, X.ravel(), np.repeat(delta, X.shape[1], axis=0).astype(np.float32))
                weights[D] = 0.0
                step = lr / T
                params.transitions -= step * grad_p.transitions
                params.start -= step * grad_p.start
                params.end -= step * grad_p.end
                if l2 > 0.0:
                    params.transitions *= 1.0 - lr * l2
                    params.start *= 1.0 - lr * l2
                    params.end *= 1.0 - lr * l2

        loss_per_token = total_loss / max(total_tokens, 1)
        if not np.isfinite(loss_per_token):
            raise TrainingDiverged(
                f"loss became non-finite at epoch {epoch} (lr={lr}, l2={l2})"
            )
        record = {"epoch": epoch, "train_loss_per_token": float(loss_per_token)}

        if packed_dev is not None:
            snapshot = (weights * np.float32(scale)) if scale != 1.0 else weights
            model.weights = snapshot
            dev_f1 = _entity_micro_f1(model, packed_dev)
            model.weights = weights
            record["dev_micro_f1"] = dev_f1
            if dev_f1 > best_f1:
                best_f1 = dev_f1
                best_weights = np.ascontiguousarray(weights * np.float32(scale))
                if params is not None:
                    best_params = crf_mod.CrfParams(
                        params.transitions.copy(), params.start.copy(), params.end.copy()
                    )
                epochs_since_best = 0
            else:
                epochs_since_best += 1
                if epochs_since_best > train_config.patience:
                    history.append(record)
                    break
        history.append(record)

    if best_weights is not None:
        model.weights = best_weights
        if best_params is not None:
            model.crf_params = best_params
    else:
        model.weights = np.ascontiguousarray(weights * np.float32(scale))
    model.history = history
    return model


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------
#
# Binary layout, all little-endian:
#   magic "FTM1" | u16 version | u32 header_len | header JSON (sorted keys)
#   u32 n_cols | n_cols x u32 column ids | n_cols x L float32 weight rows
#   [crf head only] L*L float64 transitions | L float64 start | L float64 end
# The header pins head, granularity, policy, feature config, hash algorithm,
# training seed, and the labelset/vocab/shape fingerprints. Loading rejects
# any version or fingerprint mismatch.


def save_model(model: TaggerModel, path) -> None:
    L = model.n_labels
    D = model.feature_config.hash_dimension
    header = {
        "head": model.head,
        "granularity": model.granularity,
        "policy": model.policy.value,
        "hash_algorithm": HASH_ALGORITHM,
        "hash_dimension": D,
        "context_window": model.feature_config.context_window,
        "n_labels": L,
        "train_seed": model.train_seed,
        "fingerprints": model.fingerprints(),
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    cols = np.flatnonzero(np.any(model.weights != 0, axis=1)).astype(np.uint32)
    cols = cols[cols < D]  # padding column is never stored
    values = model.weights[cols].astype("<f4")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<H", MODEL_VERSION))
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(struct.pack("<I", len(cols)))
        fh.write(cols.astype("<u4").tobytes())
        fh.write(values.tobytes())
        if model.head == "crf":
            fh.write(model.crf_params.transitions.astype("<f8").tobytes())
            fh.write(model.crf_params.start.astype("<f8").tobytes())
            fh.write(model.crf_params.end.astype("<f8").tobytes())


def read_model_header(path) -> dict:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MODEL_MAGIC:
            raise TaggerError(f"not a model file (magic {magic!r})")
        (version,) = struct.unpack("<H", fh.read(2))
        if version != MODEL_VERSION:
            raise TaggerError(f"unsupported model version {version}")
        (header_len,) = struct.unpack("<I", fh.read(4))
        return json.loads(fh.read(header_len).decode("utf-8"))


def load_model(
    path,
    labelset: LabelSet,
    vocab: SubwordVocab | None = None,
    shape_vocab: ShapeVocab | None = None,
) -> TaggerModel:
    """Load a model, verifying fingerprints against the supplied artifacts."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MODEL_MAGIC:
            raise TaggerError(f"not a model file (magic {magic!r})")
        (version,) = struct.unpack("<H", fh.read(2))
        if version != MODEL_VERSION:
            raise TaggerError(f"unsupported model version {version}")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        if header["hash_algorithm"] != HASH_ALGORITHM:
            raise TaggerError(f"unsupported hash algorithm {header['hash_algorithm']!r}")

        prints = header["fingerprints"]
        if prints["labelset"] != labelset.fingerprint():
            raise FingerprintMismatch("label set does not match the model")
        if prints["vocab"] is not None:
            if vocab is None or vocab.fingerprint() != prints["vocab"]:
                raise FingerprintMismatch("subword vocabulary does not match the model")
        if prints["shape_vocab"] is not None:
            if shape_vocab is None or shape_vocab.fingerprint() != prints["shape_vocab"]:
                raise FingerprintMismatch("shape vocabulary does not match the model")

        L = header["n_labels"]
        if L != len(labelset.labels):
            raise FingerprintMismatch(
                f"model has {L} labels, label set has {len(labelset.labels)}"
            )
        D = header["hash_dimension"]
        config = FeatureConfig(hash_dimension=D, context_window=header["context_window"])
        (n_cols,) = struct.unpack("<I", fh.read(4))
        cols = np.frombuffer(fh.read(4 * n_cols), dtype="<u4").astype(np.int64)
        values = np.frombuffer(fh.read(4 * n_cols * L), dtype="<f4").reshape(n_cols, L)
        weights = np.zeros((D + 1, L), dtype=np.float32)
        weights[cols] = values
        params = None
        if header["head"] == "crf":
            trans = np.frombuffer(fh.read(8 * L * L), dtype="<f8").reshape(L, L)
            start = np.frombuffer(fh.read(8 * L), dtype="<f8")
            end = np.frombuffer(fh.read(8 * L), dtype="<f8")
            params = crf_mod.CrfParams(trans.copy(), start.copy(), end.copy())
    return TaggerModel(
        weights=weights,
        head=header["head"],
        granularity=header["granularity"],
        policy=NumericPolicy(header["policy"]),
        feature_config=config,
        labelset=labelset,
        vocab=vocab,
        shape_vocab=shape_vocab,
        crf_params=params,
        train_seed=header["train_seed"],
    )
