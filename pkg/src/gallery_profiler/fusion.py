"""Three-view image representation and weighted classifier fusion.

Each image is seen through three vectors: the scene embedding f, the
scene score distribution p, and the per-class maximal object confidence
o. One softmax linear classifier is trained per view; their score
vectors are then mixed with nonnegative weights found by exhaustive
search over a simplex grid, keeping the first grid point (in ascending
lexicographic order) that attains the best validation accuracy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .records import ImageFeatureRecord

VIEWS = ("f", "p", "o")


@dataclass(frozen=True)
class ImageRepresentation:
    """The (f, p, o) triple for one image; concatenates to a K = D+S+O
    vector when a single flat feature is needed."""

    f: np.ndarray
    p: np.ndarray
    o: np.ndarray

    def view(self, name: str) -> np.ndarray:
        if name not in VIEWS:
            raise ValueError(f"unknown view {name!r}")
        return getattr(self, name)

    def concat(self) -> np.ndarray:
        return np.concatenate([self.f, self.p, self.o])


def representation_of(record: ImageFeatureRecord) -> ImageRepresentation:
    return ImageRepresentation(f=record.scene_embedding,
                               p=record.scene_scores,
                               o=record.object_confidences)


def object_confidence_vector(detections: Sequence[tuple[int, float]],
                             num_objects: int) -> np.ndarray:
    """Per-class maximum over detection scores; classes never detected
    stay 0. Bounding boxes are not part of the input on purpose."""
    out = np.zeros(num_objects)
    for class_index, score in detections:
        if not 0 <= class_index < num_objects:
            raise ValueError(
                f"class index {class_index} outside [0, {num_objects})")
        if not 0.0 <= score <= 1.0:
            raise ValueError(f"detection score {score} outside [0, 1]")
        if score > out[class_index]:
            out[class_index] = score
    return out


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    iterations: int = 500
    seed: int = 0
    l2: float = 1e-4


@dataclass
class LinearSoftmaxClassifier:
    """Multinomial logistic regression; emits C scores summing to 1."""

    weights: np.ndarray  # C x dim
    biases: np.ndarray   # C

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    def score_batch(self, vectors: np.ndarray) -> np.ndarray:
        vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        if vectors.shape[1] != self.weights.shape[1]:
            raise ValueError(
                f"input dimension {vectors.shape[1]} does not match the "
                f"classifier's {self.weights.shape[1]}")
        logits = vectors @ self.weights.T + self.biases
        return _softmax_rows(logits)

    def scores(self, vector: np.ndarray) -> np.ndarray:
        return self.score_batch(vector)[0]


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def train_view_classifier(view: str, vectors: Sequence[np.ndarray],
                          labels: Sequence[int],
                          config: TrainConfig = TrainConfig(),
                          num_classes: int | None = None,
                          ) -> LinearSoftmaxClassifier:
    """Full-batch gradient descent on mean cross-entropy with a small L2
    penalty. Deterministic: seeded init, fixed iteration count."""
    if view not in VIEWS:
        raise ValueError(f"view must be one of {VIEWS}")
    if len(vectors) == 0:
        raise ValueError("empty training set")
    if len(vectors) != len(labels):
        raise ValueError("vectors and labels differ in length")
    x = np.vstack([np.asarray(v, dtype=float) for v in vectors])
    y = np.asarray(labels, dtype=int)
    classes_present = np.unique(y)
    if classes_present.size < 2:
        raise ValueError("training set must contain at least 2 classes")
    c = int(num_classes) if num_classes is not None \
        else int(classes_present.max()) + 1
    if classes_present.min() < 0 or classes_present.max() >= c:
        raise ValueError(f"labels must lie in [0, {c})")

    n, dim = x.shape
    rng = np.random.default_rng(config.seed)
    weights = rng.uniform(-1, 1, size=(c, dim)) / math.sqrt(dim)
    biases = np.zeros(c)
    onehot = np.zeros((n, c))
    onehot[np.arange(n), y] = 1.0

    for _ in range(config.iterations):
        probs = _softmax_rows(x @ weights.T + biases)
        d_logits = (probs - onehot) / n
        weights -= config.learning_rate * (d_logits.T @ x
                                           + config.l2 * weights)
        biases -= config.learning_rate * d_logits.sum(axis=0)
    return LinearSoftmaxClassifier(weights=weights, biases=biases)


@dataclass(frozen=True)
class FusionWeights:
    w_f: float
    w_p: float
    w_o: float
    accuracy: float


@dataclass
class FusionModel:
    classifier_f: LinearSoftmaxClassifier
    classifier_p: LinearSoftmaxClassifier
    classifier_o: LinearSoftmaxClassifier
    weights: tuple[float, float, float]
    num_classes: int

    def classifier(self, view: str) -> LinearSoftmaxClassifier:
        return {"f": self.classifier_f, "p": self.classifier_p,
                "o": self.classifier_o}[view]


def weight_grid(grid_step: float) -> Iterator[tuple[float, float, float]]:
    """All (w_f, w_p, w_o) with entries in {0, step, ..., 1} summing to 1,
    in ascending lexicographic order, computed as exact grid fractions."""
    if not 0.0 < grid_step <= 1.0:
        raise ValueError("grid_step must lie in (0, 1]")
    n = round(1.0 / grid_step)
    if abs(n * grid_step - 1.0) > 1e-9:
        raise ValueError("grid_step must divide 1 evenly (e.g. 0.1, 0.25)")
    for i in range(n + 1):
        for j in range(n + 1 - i):
            yield i / n, j / n, (n - i - j) / n


def fused_scores(score_f: np.ndarray, score_p: np.ndarray,
                 score_o: np.ndarray,
                 weights: tuple[float, float, float]) -> np.ndarray:
    w_f, w_p, w_o = weights
    return w_f * score_f + w_p * score_p + w_o * score_o


def fit_fusion_weights(classifiers: tuple[LinearSoftmaxClassifier,
                                          LinearSoftmaxClassifier,
                                          LinearSoftmaxClassifier],
                       validation: Sequence[ImageRepresentation],
                       labels: Sequence[int],
                       grid_step: float = 0.1) -> FusionWeights:
    """Exhaustive grid search for the mixing weights.

    Ties keep the earliest grid point: a later point replaces the current
    best only when its accuracy is strictly higher.
    """
    if len(validation) == 0:
        raise ValueError("validation set is empty")
    if len(validation) != len(labels):
        raise ValueError("validation and labels differ in length")
    clf_f, clf_p, clf_o = classifiers
    score_f = clf_f.score_batch(np.vstack([r.f for r in validation]))
    score_p = clf_p.score_batch(np.vstack([r.p for r in validation]))
    score_o = clf_o.score_batch(np.vstack([r.o for r in validation]))
    truth = np.asarray(labels, dtype=int)

    best: FusionWeights | None = None
    for weights in weight_grid(grid_step):
        fused = fused_scores(score_f, score_p, score_o, weights)
        predictions = fused.argmax(axis=1)
        accuracy = float(np.mean(predictions == truth))
        if best is None or accuracy > best.accuracy:
            best = FusionWeights(*weights, accuracy=accuracy)
    return best


def predict_fused(model: FusionModel, rep: ImageRepresentation,
                  ) -> tuple[int, np.ndarray]:
    """(argmax class, fused score vector); ties go to the lowest index."""
    cs = fused_scores(model.classifier_f.scores(rep.f),
                      model.classifier_p.scores(rep.p),
                      model.classifier_o.scores(rep.o),
                      model.weights)
    return int(np.argmax(cs)), cs


def evaluate_fused(model: FusionModel,
                   representations: Sequence[ImageRepresentation],
                   labels: Sequence[int]) -> float:
    if len(representations) == 0:
        raise ValueError("empty evaluation set")
    hits = sum(predict_fused(model, rep)[0] == label
               for rep, label in zip(representations, labels))
    return hits / len(representations)


def train_fusion_model(train_reps: Sequence[ImageRepresentation],
                       train_labels: Sequence[int],
                       val_reps: Sequence[ImageRepresentation],
                       val_labels: Sequence[int],
                       grid_step: float = 0.1,
                       config: TrainConfig = TrainConfig()) -> FusionModel:
    """Train the three per-view classifiers, then pick fusion weights on
    the validation set."""
    num_classes = int(max(max(train_labels), max(val_labels))) + 1
    classifiers = tuple(
        train_view_classifier(view, [rep.view(view) for rep in train_reps],
                              train_labels, config, num_classes=num_classes)
        for view in VIEWS)
    weights = fit_fusion_weights(classifiers, val_reps, val_labels, grid_step)
    return FusionModel(classifier_f=classifiers[0],
                       classifier_p=classifiers[1],
                       classifier_o=classifiers[2],
                       weights=(weights.w_f, weights.w_p, weights.w_o),
                       num_classes=num_classes)


def save_fusion_model(model: FusionModel, path: str | Path) -> None:
    payload = {
        "kind": "fusion",
        "num_classes": model.num_classes,
        "weights": list(model.weights),
        "classifiers": {
            view: {
                "weights": model.classifier(view).weights.tolist(),
                "biases": model.classifier(view).biases.tolist(),
            }
            for view in VIEWS
        },
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True),
                          encoding="utf-8")


def load_fusion_model(path: str | Path) -> FusionModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("kind") != "fusion":
        raise ValueError(f"{path} is not a fusion model file")
    classifiers = {
        view: LinearSoftmaxClassifier(
            weights=np.asarray(payload["classifiers"][view]["weights"]),
            biases=np.asarray(payload["classifiers"][view]["biases"]))
        for view in VIEWS
    }
    return FusionModel(classifier_f=classifiers["f"],
                       classifier_p=classifiers["p"],
                       classifier_o=classifiers["o"],
                       weights=tuple(payload["weights"]),
                       num_classes=payload["num_classes"])
