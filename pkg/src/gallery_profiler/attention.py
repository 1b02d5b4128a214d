"""Attention pooling of a photo set into one user descriptor.

Each of the M photo features x(m) (length K) is squeezed to s(m) =
W_s x(m) (length Kt, Kt < K); softmax over q.s(m) gives per-photo
weights, and the descriptor is the weighted sum of the s(m). A bank of C
logistic regressors on the descriptor scores the interest categories.
The attention block adds exactly (K+1)*Kt parameters (W_s plus q) on top
of plain averaging, and with q = 0 it IS plain averaging, which is also
where training starts.

Everything is trained by mini-batch gradient descent with hand-derived
gradients; no autodiff dependency. An average-pooling baseline (mean
feature vector into the same kind of logistic head) ships alongside for
comparison.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

_WEIGHT_FLOOR = np.finfo(float).tiny


@dataclass(frozen=True)
class UserExample:
    """One training unit: a user's photo features and binary interests."""

    features: np.ndarray  # M x K
    targets: np.ndarray   # length C, entries in {0, 1}

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ValueError("features must be a nonempty M x K matrix")
        if self.targets.ndim != 1:
            raise ValueError("targets must be a flat binary vector")


@dataclass
class AggregatorModel:
    squeeze: np.ndarray       # Kt x K
    query: np.ndarray         # Kt
    head_weights: np.ndarray  # C x Kt
    head_biases: np.ndarray   # C

    def __post_init__(self):
        kt, k = self.squeeze.shape
        if kt >= k:
            raise ValueError(f"squeeze dim {kt} must be smaller than "
                             f"feature dim {k}")
        if self.query.shape != (kt,):
            raise ValueError("query length must equal the squeeze dim")
        if self.head_weights.shape[1] != kt:
            raise ValueError("head width must equal the squeeze dim")
        if self.head_biases.shape != (self.head_weights.shape[0],):
            raise ValueError("one bias per category required")

    @property
    def feature_dim(self) -> int:
        return self.squeeze.shape[1]

    @property
    def squeeze_dim(self) -> int:
        return self.squeeze.shape[0]

    @property
    def num_categories(self) -> int:
        return self.head_weights.shape[0]

    @property
    def attention_parameter_count(self) -> int:
        # W_s (Kt*K) plus q (Kt): the cost of attention over plain averaging
        return self.squeeze.size + self.query.size


def stable_softmax(logits: np.ndarray) -> np.ndarray:
    """Softmax that keeps every weight strictly positive.

    Max-subtraction bounds the exponent at 0; weights that underflow to 0
    are floored at the smallest positive normal double and the vector is
    renormalized, so downstream log/division never sees a hard zero.
    """
    z = np.asarray(logits, dtype=float)
    e = np.exp(z - z.max())
    w = e / e.sum()
    w = np.maximum(w, _WEIGHT_FLOOR)
    return w / w.sum()


def attention_weights(model: AggregatorModel, features: np.ndarray,
                      ) -> np.ndarray:
    """Per-photo softmax weights from the squeezed features."""
    features = _check_features(model, features)
    squeezed = features @ model.squeeze.T
    return stable_softmax(squeezed @ model.query)


def aggregate(model: AggregatorModel, features: np.ndarray) -> np.ndarray:
    """The user descriptor: attention-weighted sum of squeezed features."""
    features = _check_features(model, features)
    squeezed = features @ model.squeeze.T
    weights = stable_softmax(squeezed @ model.query)
    return weights @ squeezed


def average_baseline(features: np.ndarray) -> np.ndarray:
    """Component-wise mean of the raw photo features."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[0] < 1:
        raise ValueError("features must be a nonempty M x K matrix")
    return features.mean(axis=0)


def _check_features(model: AggregatorModel, features) -> np.ndarray:
    features = np.atleast_2d(np.asarray(features, dtype=float))
    if features.shape[0] < 1:
        raise ValueError("at least one photo feature is required")
    if features.shape[1] != model.feature_dim:
        raise ValueError(
            f"feature length {features.shape[1]} does not match the "
            f"model's K={model.feature_dim}")
    return features


def _sigmoid(z):
    out = np.empty_like(z, dtype=float)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    exp_z = np.exp(z[~positive])
    out[~positive] = exp_z / (1.0 + exp_z)
    return out


def predict_scores(model: AggregatorModel, features: np.ndarray,
                   ) -> np.ndarray:
    descriptor = aggregate(model, features)
    return _sigmoid(model.head_weights @ descriptor + model.head_biases)


def predict_user_profile(model: AggregatorModel, features: np.ndarray,
                         k: int) -> tuple[np.ndarray, list[int]]:
    """(category scores, top-k category indices). Sorting is by
    descending score with ties resolved to the lowest index."""
    scores = predict_scores(model, features)
    if not 1 <= k <= scores.shape[0]:
        raise ValueError(f"k must lie in [1, {scores.shape[0]}]")
    order = np.argsort(-scores, kind="stable")
    return scores, [int(i) for i in order[:k]]


def user_loss(model: AggregatorModel, example: UserExample) -> float:
    """Mean binary cross-entropy over categories for one user."""
    scores = predict_scores(model, example.features)
    eps = 1e-12
    y = example.targets
    return float(-np.mean(y * np.log(scores + eps)
                          + (1.0 - y) * np.log(1.0 - scores + eps)))


@dataclass
class _Gradients:
    squeeze: np.ndarray
    query: np.ndarray
    head_weights: np.ndarray
    head_biases: np.ndarray


def _user_gradients(model: AggregatorModel, example: UserExample,
                    ) -> tuple[float, _Gradients]:
    """Loss and analytic gradients for one user.

    Chain: logits u = H x + b with x the descriptor; dL/du = (sigmoid(u)
    - y)/C; back through the weighted sum, the softmax Jacobian, and the
    shared squeeze matrix (W_s appears in both the descriptor and the
    attention logits, so its gradient collects both paths).
    """
    features = _check_features(model, example.features)
    squeezed = features @ model.squeeze.T          # M x Kt
    logits = squeezed @ model.query                # M
    weights = stable_softmax(logits)               # M
    descriptor = weights @ squeezed                # Kt
    raw = model.head_weights @ descriptor + model.head_biases
    scores = _sigmoid(raw)

    y = example.targets.astype(float)
    c = scores.shape[0]
    eps = 1e-12
    loss = float(-np.mean(y * np.log(scores + eps)
                          + (1.0 - y) * np.log(1.0 - scores + eps)))

    d_raw = (scores - y) / c                       # C
    d_head_w = np.outer(d_raw, descriptor)         # C x Kt
    d_head_b = d_raw
    d_descriptor = model.head_weights.T @ d_raw    # Kt

    d_weights = squeezed @ d_descriptor            # M
    d_logits = weights * (d_weights - float(weights @ d_weights))  # M
    # s(m) feeds the descriptor (weighted) and the attention logit (via q)
    d_squeezed = np.outer(weights, d_descriptor) + np.outer(d_logits,
                                                            model.query)
    d_query = squeezed.T @ d_logits                # Kt
    d_squeeze = d_squeezed.T @ features            # Kt x K
    return loss, _Gradients(squeeze=d_squeeze, query=d_query,
                            head_weights=d_head_w, head_biases=d_head_b)


@dataclass(frozen=True)
class AggregatorConfig:
    squeeze_dim: int = 128
    learning_rate: float = 0.5
    epochs: int = 100
    batch_size: int = 16
    seed: int = 0
    fixed_set_size: int = 10

    def __post_init__(self):
        if self.squeeze_dim < 1 or self.epochs < 0 or self.batch_size < 1 \
                or self.fixed_set_size < 1:
            raise ValueError("aggregator config values must be positive")


def init_aggregator(feature_dim: int, num_categories: int,
                    config: AggregatorConfig) -> AggregatorModel:
    """Seeded init. q starts at zero, so the untrained model aggregates
    with uniform weights, i.e. average pooling of squeezed features."""
    if config.squeeze_dim >= feature_dim:
        raise ValueError(
            f"squeeze_dim {config.squeeze_dim} must be smaller than the "
            f"feature dim {feature_dim}")
    rng = np.random.default_rng(config.seed)
    squeeze = rng.uniform(-1, 1, size=(config.squeeze_dim, feature_dim)) \
        / math.sqrt(feature_dim)
    head = rng.uniform(-1, 1, size=(num_categories, config.squeeze_dim)) \
        / math.sqrt(config.squeeze_dim)
    return AggregatorModel(squeeze=squeeze,
                           query=np.zeros(config.squeeze_dim),
                           head_weights=head,
                           head_biases=np.zeros(num_categories))


def train_aggregator(train: Sequence[UserExample],
                     config: AggregatorConfig = AggregatorConfig(),
                     ) -> AggregatorModel:
    """Mini-batch gradient descent over users, deterministic under the
    seed. Sets larger than fixed_set_size are subsampled anew each epoch;
    smaller sets are used whole."""
    if not train:
        raise ValueError("training set is empty")
    num_categories = train[0].targets.shape[0]
    feature_dim = train[0].features.shape[1]
    for example in train:
        if example.targets.shape[0] != num_categories:
            raise ValueError("all users must share the same category count")
        if example.features.shape[1] != feature_dim:
            raise ValueError("all users must share the same feature length")

    model = init_aggregator(feature_dim, num_categories, config)
    rng = np.random.default_rng(config.seed)
    n = len(train)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            grads = _Gradients(squeeze=np.zeros_like(model.squeeze),
                               query=np.zeros_like(model.query),
                               head_weights=np.zeros_like(model.head_weights),
                               head_biases=np.zeros_like(model.head_biases))
            for index in batch:
                example = train[index]
                if example.features.shape[0] > config.fixed_set_size:
                    chosen = rng.choice(example.features.shape[0],
                                        size=config.fixed_set_size,
                                        replace=False)
                    example = UserExample(example.features[chosen],
                                          example.targets)
                _, g = _user_gradients(model, example)
                grads.squeeze += g.squeeze
                grads.query += g.query
                grads.head_weights += g.head_weights
                grads.head_biases += g.head_biases
            scale = config.learning_rate / len(batch)
            model.squeeze -= scale * grads.squeeze
            model.query -= scale * grads.query
            model.head_weights -= scale * grads.head_weights
            model.head_biases -= scale * grads.head_biases
    return model


@dataclass
class AverageBaselineModel:
    """Logistic heads over the mean feature vector (no attention)."""

    head_weights: np.ndarray  # C x K
    head_biases: np.ndarray   # C

    def predict(self, features: np.ndarray) -> np.ndarray:
        mean = average_baseline(features)
        return _sigmoid(self.head_weights @ mean + self.head_biases)


def train_average_baseline(train: Sequence[UserExample],
                           config: AggregatorConfig = AggregatorConfig(),
                           ) -> AverageBaselineModel:
    """Same loss, optimizer and schedule as the aggregator, applied to
    mean-pooled features, so comparisons isolate the pooling choice."""
    if not train:
        raise ValueError("training set is empty")
    num_categories = train[0].targets.shape[0]
    feature_dim = train[0].features.shape[1]
    rng = np.random.default_rng(config.seed)
    head = rng.uniform(-1, 1, size=(num_categories, feature_dim)) \
        / math.sqrt(feature_dim)
    biases = np.zeros(num_categories)

    n = len(train)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            d_head = np.zeros_like(head)
            d_biases = np.zeros_like(biases)
            for index in batch:
                example = train[index]
                features = example.features
                if features.shape[0] > config.fixed_set_size:
                    chosen = rng.choice(features.shape[0],
                                        size=config.fixed_set_size,
                                        replace=False)
                    features = features[chosen]
                mean = average_baseline(features)
                scores = _sigmoid(head @ mean + biases)
                d_raw = (scores - example.targets) / num_categories
                d_head += np.outer(d_raw, mean)
                d_biases += d_raw
            scale = config.learning_rate / len(batch)
            head -= scale * d_head
            biases -= scale * d_biases
    return AverageBaselineModel(head_weights=head, head_biases=biases)


def top_k_f1(scores: np.ndarray, targets: np.ndarray, k: int) -> float:
    """Mean per-user F1 of the top-k predicted categories against the
    true interest sets. Users without any positive target are skipped."""
    scores = np.atleast_2d(scores)
    targets = np.atleast_2d(targets)
    if scores.shape != targets.shape:
        raise ValueError("scores and targets must align")
    f1_values = []
    for row_scores, row_targets in zip(scores, targets):
        positives = int(row_targets.sum())
        if positives == 0:
            continue
        top = np.argsort(-row_scores, kind="stable")[:k]
        hits = int(row_targets[top].sum())
        f1_values.append(2.0 * hits / (k + positives))
    if not f1_values:
        raise ValueError("no user has a positive target")
    return float(np.mean(f1_values))


def save_aggregator(model: AggregatorModel, path: str | Path) -> None:
    payload = {
        "kind": "aggregator",
        "dims": {"K": model.feature_dim, "Kt": model.squeeze_dim,
                 "C": model.num_categories},
        "squeeze": model.squeeze.tolist(),
        "query": model.query.tolist(),
        "head_weights": model.head_weights.tolist(),
        "head_biases": model.head_biases.tolist(),
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True),
                          encoding="utf-8")


def load_aggregator(path: str | Path) -> AggregatorModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("kind") != "aggregator":
        raise ValueError(f"{path} is not an aggregator model file")
    return AggregatorModel(
        squeeze=np.asarray(payload["squeeze"], dtype=float),
        query=np.asarray(payload["query"], dtype=float),
        head_weights=np.asarray(payload["head_weights"], dtype=float),
        head_biases=np.asarray(payload["head_biases"], dtype=float))
