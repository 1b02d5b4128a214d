"""Private/public routing of photos and videos.

A photo stays private when any of these fires, checked in a fixed order:
the global force-private switch, sensitive recognized text, a portrait
(large centrally placed face), or a face from an important cluster (one
with enough photos over enough days). The first firing rule is recorded
as the decision's reason. A video is public only when every selected
frame is public.

The text check is a bag-of-words two-hidden-layer network trained on a
small synthetic corpus of document-like vs. menu-like token bags; it
stands in for a production sensitive-text classifier behind the same
interface.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .faces import DemographyReport, important_clusters
from .records import ImageFeatureRecord

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_NUM_TOKEN = "<num>"


class Verdict(str, Enum):
    PRIVATE = "private"
    PUBLIC = "public"


class Reason(str, Enum):
    SENSITIVE_TEXT = "sensitive_text"
    PORTRAIT = "portrait"
    IMPORTANT_PERSON = "important_person"
    FORCED_PRIVATE = "forced_private"


@dataclass(frozen=True)
class RoutingDecision:
    photo_id: str
    verdict: Verdict
    reasons: frozenset[Reason]

    def __post_init__(self):
        if (self.verdict is Verdict.PRIVATE) != bool(self.reasons):
            raise ValueError(
                "private verdicts must carry reasons and public ones none")

    @property
    def is_private(self) -> bool:
        return self.verdict is Verdict.PRIVATE


@dataclass(frozen=True)
class PrivacyConfig:
    portrait_width_ratio_threshold: float = 0.05
    central_fraction: float = 2.0 / 3.0
    min_cluster_photos: int = 5
    min_cluster_days: int = 2
    force_all_private: bool = True

    def __post_init__(self):
        if not 0.0 < self.portrait_width_ratio_threshold < 1.0:
            raise ValueError(
                "portrait_width_ratio_threshold must lie in (0, 1)")
        if not 0.0 < self.central_fraction <= 1.0:
            raise ValueError("central_fraction must lie in (0, 1]")
        if self.min_cluster_photos < 1 or self.min_cluster_days < 1:
            raise ValueError("cluster thresholds must be at least 1")


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens; digit runs collapse into one number token."""
    tokens = []
    for raw in _TOKEN_RE.findall(text.lower()):
        tokens.append(_NUM_TOKEN if raw.isdigit() else raw)
    return tokens


@dataclass
class TextSensitivityModel:
    """Token-presence features into two tanh hidden layers and a logistic
    output; returns the positive (sensitive) class score."""

    vocabulary: dict[str, int]
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w_out: np.ndarray
    b_out: float

    def features(self, text: str) -> np.ndarray:
        vec = np.zeros(len(self.vocabulary))
        for token in tokenize(text):
            index = self.vocabulary.get(token)
            if index is not None:
                vec[index] = 1.0
        return vec

    def score(self, text: str) -> float:
        h1 = np.tanh(self.w1 @ self.features(text) + self.b1)
        h2 = np.tanh(self.w2 @ h1 + self.b2)
        return float(_sigmoid(self.w_out @ h2 + self.b_out))


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def classify_text_sensitivity(text: str, model: TextSensitivityModel,
                              ) -> tuple[bool, float]:
    """(sensitive?, positive-class confidence); text without a single
    token is never sensitive and scores 0.0."""
    if not tokenize(text):
        return False, 0.0
    confidence = model.score(text)
    return confidence > 0.5, confidence


def train_text_sensitivity(documents: Sequence[tuple[str, bool]],
                           hidden: tuple[int, int] = (16, 8),
                           learning_rate: float = 0.5,
                           epochs: int = 300,
                           seed: int = 0) -> TextSensitivityModel:
    """Full-batch gradient descent on logistic loss; deterministic under
    the seed. The vocabulary is every token seen in training, sorted."""
    if not documents:
        raise ValueError("training corpus is empty")
    labels = np.array([float(label) for _, label in documents])
    if labels.min() == labels.max():
        raise ValueError("training corpus needs both classes")

    vocab_tokens = sorted({token for text, _ in documents
                           for token in tokenize(text)})
    vocabulary = {token: i for i, token in enumerate(vocab_tokens)}
    features = np.zeros((len(documents), len(vocabulary)))
    for row, (text, _) in enumerate(documents):
        for token in tokenize(text):
            features[row, vocabulary[token]] = 1.0

    rng = np.random.default_rng(seed)
    h1, h2 = hidden
    dim = len(vocabulary)
    w1 = rng.uniform(-1, 1, size=(h1, dim)) / math.sqrt(dim)
    b1 = np.zeros(h1)
    w2 = rng.uniform(-1, 1, size=(h2, h1)) / math.sqrt(h1)
    b2 = np.zeros(h2)
    w_out = rng.uniform(-1, 1, size=h2) / math.sqrt(h2)
    b_out = 0.0

    n = len(documents)
    for _ in range(epochs):
        a1 = np.tanh(features @ w1.T + b1)
        a2 = np.tanh(a1 @ w2.T + b2)
        scores = _sigmoid(a2 @ w_out + b_out)

        # d(mean BCE)/d(logit), then plain backprop through the tanh stack
        d_logit = (scores - labels) / n
        d_w_out = a2.T @ d_logit
        d_b_out = float(d_logit.sum())
        d_a2 = np.outer(d_logit, w_out) * (1.0 - a2 ** 2)
        d_w2 = d_a2.T @ a1
        d_b2 = d_a2.sum(axis=0)
        d_a1 = (d_a2 @ w2) * (1.0 - a1 ** 2)
        d_w1 = d_a1.T @ features
        d_b1 = d_a1.sum(axis=0)

        w_out -= learning_rate * d_w_out
        b_out -= learning_rate * d_b_out
        w2 -= learning_rate * d_w2
        b2 -= learning_rate * d_b2
        w1 -= learning_rate * d_w1
        b1 -= learning_rate * d_b1

    return TextSensitivityModel(vocabulary=vocabulary, w1=w1, b1=b1,
                                w2=w2, b2=b2, w_out=w_out, b_out=b_out)


_SENSITIVE_WORDS = (
    "passport", "identity", "card", "series", "number", "issued", "authority",
    "surname", "given", "name", "birth", "date", "nationality", "document",
    "expiry", "signature", "holder", "code", "valid", "registration",
)
_BENIGN_WORDS = (
    "menu", "pizza", "salad", "coffee", "tea", "price", "lunch", "dinner",
    "special", "soup", "grilled", "chicken", "dessert", "juice", "breakfast",
    "pasta", "table", "order", "fresh", "daily",
)
_SHARED_WORDS = ("the", "of", "and", "no", "page", _NUM_TOKEN)


def build_text_corpus(seed: int = 7, train_per_class: int = 30,
                      test_per_class: int = 8,
                      ) -> tuple[list[tuple[str, bool]], list[tuple[str, bool]]]:
    """Synthetic labeled corpus: document-like (sensitive) vs. menu-like
    (benign) token bags. Both classes contain numbers, so digits alone
    cannot separate them. Returns (train, held-out test)."""
    rng = np.random.default_rng(seed)

    def make_doc(words: tuple[str, ...]) -> str:
        count = int(rng.integers(8, 15))
        picks = list(rng.choice(words, size=count))
        picks += list(rng.choice(_SHARED_WORDS, size=4))
        picks += [str(int(rng.integers(10, 999999)))
                  for _ in range(int(rng.integers(1, 4)))]
        order = rng.permutation(len(picks))
        return " ".join(picks[i] for i in order)

    docs = []
    for _ in range(train_per_class + test_per_class):
        docs.append((make_doc(_SENSITIVE_WORDS), True))
        docs.append((make_doc(_BENIGN_WORDS), False))
    split = 2 * train_per_class
    return docs[:split], docs[split:]


@lru_cache(maxsize=1)
def default_text_model() -> TextSensitivityModel:
    """The bundled model, trained deterministically on the synthetic
    corpus the first time it is needed."""
    train, _ = build_text_corpus()
    return train_text_sensitivity(train)


def is_portrait(record: ImageFeatureRecord,
                config: PrivacyConfig = PrivacyConfig()) -> bool:
    """True when a face whose center lies in the central horizontal band
    is at least the threshold fraction of the image width wide."""
    margin = (1.0 - config.central_fraction) / 2.0
    for face in record.faces:
        x, _, width, _ = face.bbox
        image_width = face.image_size[0]
        center = (x + width / 2.0) / image_width
        if not margin <= center <= 1.0 - margin:
            continue
        if width / image_width >= config.portrait_width_ratio_threshold:
            return True
    return False


def route_photo(record: ImageFeatureRecord,
                demography: DemographyReport,
                face_labels: Mapping[tuple[str, int], int],
                config: PrivacyConfig = PrivacyConfig(),
                text_model: TextSensitivityModel | None = None,
                ) -> RoutingDecision:
    """Route one photo. Rules run as force-private, then sensitive text,
    then portrait, then important person; the first hit decides. A face
    missing from face_labels means demography was not computed over this
    record and is reported as an error rather than guessed around.
    """
    for face_index in range(len(record.faces)):
        if (record.photo_id, face_index) not in face_labels:
            raise ValueError(
                f"no cluster label for face {face_index} of record "
                f"{record.photo_id!r}; demography must cover the routed "
                f"gallery")

    if config.force_all_private:
        return _private(record.photo_id, Reason.FORCED_PRIVATE)
    if record.ocr_text is not None:
        if text_model is None:
            text_model = default_text_model()
        sensitive, _ = classify_text_sensitivity(record.ocr_text, text_model)
        if sensitive:
            return _private(record.photo_id, Reason.SENSITIVE_TEXT)
    if is_portrait(record, config):
        return _private(record.photo_id, Reason.PORTRAIT)
    important = important_clusters(demography, config.min_cluster_photos,
                                   config.min_cluster_days)
    if important:
        for face_index in range(len(record.faces)):
            if face_labels[(record.photo_id, face_index)] in important:
                return _private(record.photo_id, Reason.IMPORTANT_PERSON)
    return RoutingDecision(record.photo_id, Verdict.PUBLIC, frozenset())


def _private(photo_id: str, reason: Reason) -> RoutingDecision:
    return RoutingDecision(photo_id, Verdict.PRIVATE, frozenset({reason}))


def route_video(frame_decisions: Sequence[RoutingDecision],
                video_id: str | None = None) -> RoutingDecision:
    """Fold frame decisions into one video decision: public only when all
    frames are public, otherwise private with the union of frame reasons."""
    if not frame_decisions:
        raise ValueError("a video needs at least one frame decision")
    name = video_id if video_id is not None else frame_decisions[0].photo_id
    reasons = frozenset().union(*(d.reasons for d in frame_decisions))
    if reasons:
        return RoutingDecision(name, Verdict.PRIVATE, reasons)
    return RoutingDecision(name, Verdict.PUBLIC, frozenset())
