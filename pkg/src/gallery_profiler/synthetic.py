"""Seeded generators for fixture and benchmark data.

Everything here is deterministic in the seed, so tests and the CLI can
regenerate identical inputs anywhere: a hand-built 12-record gallery
covering every privacy-rule boundary, random-but-valid galleries,
labeled three-view datasets for fusion training, and synthetic user
galleries whose interest signal rewards attention over plain averaging.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .attention import UserExample
from .fusion import ImageRepresentation
from .records import (DEFAULT_AGE_BIN_EDGES, ExifMeta, FaceObservation,
                      Gallery, GalleryHeader, ImageFeatureRecord)

_FIXTURE_SCENES = 337
_FIXTURE_OBJECTS = 145
_FIXTURE_D = 8
_FIXTURE_DFACE = 8
_AGE_BINS = len(DEFAULT_AGE_BIN_EDGES) - 1


def _onehot(size: int, index: int, value: float = 1.0) -> np.ndarray:
    out = np.zeros(size)
    out[index] = value
    return out


def _fixture_face(identity: int, jitter: int, *, bbox, image_size=(1000, 750),
                  age_bin: int, gender: tuple[float, float],
                  ethnicity: int) -> FaceObservation:
    embedding = _onehot(_FIXTURE_DFACE, identity)
    embedding[_FIXTURE_DFACE - 1] = 0.002 * jitter
    return FaceObservation(
        bbox=tuple(float(v) for v in bbox),
        image_size=tuple(float(v) for v in image_size),
        embedding=embedding,
        age_scores=_onehot(_AGE_BINS, age_bin),
        gender_scores=np.asarray(gender, dtype=float),
        ethnicity_scores=_onehot(3, ethnicity),
    )


def _fixture_record(photo_id: str, *, scene: int, timestamp: str,
                    faces=(), objects: dict[int, float] | None = None,
                    geo=None, is_selfie=None, media_kind="photo",
                    video_id=None, frame_index=None) -> ImageFeatureRecord:
    object_confidences = np.zeros(_FIXTURE_OBJECTS)
    for index, value in (objects or {}).items():
        object_confidences[index] = value
    return ImageFeatureRecord(
        photo_id=photo_id,
        media_kind=media_kind,
        scene_embedding=_onehot(_FIXTURE_D, scene % _FIXTURE_D),
        scene_scores=_onehot(_FIXTURE_SCENES, scene),
        object_confidences=object_confidences,
        faces=tuple(faces),
        exif=ExifMeta(
            timestamp=datetime.fromisoformat(timestamp).replace(
                tzinfo=timezone.utc),
            camera_model="front camera" if is_selfie else "main camera",
            focal_length_mm=3.5 if is_selfie else 4.5,
            is_selfie=is_selfie,
            geo=geo,
        ),
        tier="fast",
        video_id=video_id,
        frame_index=frame_index,
    )


# Face identities: axis 0 = person A (important: 5 faces over 2 days),
# axis 1 = person B (4 faces over 2 days), axis 2 = person G (5 faces in
# 1 day), axes 3-4 = one-off faces.
_A, _B, _G, _LONE1, _LONE2 = range(5)


def build_privacy_fixture() -> Gallery:
    """Twelve records exercising every routing-rule boundary.

    Portraits at width ratio 0.049 (public), 0.050 and 0.051 (private);
    face clusters at 5 photos/2 days (private), 4 photos/2 days and
    5 photos/1 day (both public); one two-frame video with exactly one
    private frame (video private). Day one is 2021-06-05.
    """
    day1 = "2021-06-05T{}:00"
    day2 = "2021-06-06T{}:00"

    def centered(width: float) -> tuple[float, float, float, float]:
        return (500.0 - width / 2.0, 100.0, width, 60.0)

    tiny = centered(20.0)       # ratio 0.02, never a portrait
    g_kwargs = dict(age_bin=5, gender=(0.1, 0.9), ethnicity=2)
    a_kwargs = dict(age_bin=6, gender=(0.9, 0.1), ethnicity=0)
    b_kwargs = dict(age_bin=8, gender=(0.8, 0.2), ethnicity=1)

    records = [
        # Portrait-rule boundaries; the face identity is person G in all
        # three so G also covers the 5-photos-in-1-day cluster boundary.
        _fixture_record(
            "p_low", scene=3, timestamp=day1.format("09:00"),
            geo=(48.8566, 2.3522),
            faces=[
                _fixture_face(_G, 0, bbox=centered(49.0), **g_kwargs),
                # wide face whose center (x=50) sits outside the central
                # 2/3 band, so it must not trigger the portrait rule
                _fixture_face(_LONE1, 0, bbox=(0.0, 200.0, 100.0, 70.0),
                              age_bin=4, gender=(0.5, 0.5), ethnicity=1),
            ]),
        _fixture_record(
            "p_at", scene=44, timestamp=day1.format("09:10"),
            faces=[_fixture_face(_G, 1, bbox=centered(50.0), **g_kwargs)]),
        _fixture_record(
            "p_high", scene=52, timestamp=day1.format("09:20"),
            faces=[_fixture_face(_G, 2, bbox=centered(51.0), **g_kwargs)]),
        # Person A: five photos across two days, two of them selfies, so
        # the cluster is important and its photos stay private.
        _fixture_record(
            "a1", scene=61, timestamp=day1.format("10:00"), is_selfie=True,
            geo=(40.7500, -73.9800), objects={5: 0.9},
            faces=[_fixture_face(_A, 0, bbox=tiny, **a_kwargs)]),
        _fixture_record(
            "a2", scene=61, timestamp=day1.format("10:05"), is_selfie=True,
            geo=(40.7505, -73.9800), objects={5: 0.9},
            faces=[_fixture_face(_A, 1, bbox=tiny, **a_kwargs)]),
        _fixture_record(
            "a3", scene=61, timestamp=day1.format("10:10"),
            geo=(40.7510, -73.9800), objects={5: 0.9},
            faces=[_fixture_face(_A, 2, bbox=tiny, **a_kwargs)]),
        _fixture_record(
            "a4", scene=61, timestamp=day2.format("11:00"),
            geo=(40.7515, -73.9800), objects={5: 0.9},
            faces=[_fixture_face(_A, 3, bbox=tiny, **a_kwargs)]),
        _fixture_record(
            "a5", scene=61, timestamp=day2.format("11:05"),
            geo=(40.7520, -73.9800), objects={5: 0.9},
            faces=[_fixture_face(_A, 4, bbox=tiny, **a_kwargs)]),
        # Person B: four photos across two days, one short of important.
        _fixture_record(
            "b1", scene=88, timestamp=day1.format("12:00"),
            objects={31: 0.6, 12: 0.3},
            faces=[_fixture_face(_B, 0, bbox=tiny, **b_kwargs),
                   _fixture_face(_G, 3, bbox=tiny, **g_kwargs)]),
        _fixture_record(
            "b2", scene=96, timestamp=day2.format("12:30"),
            faces=[_fixture_face(_B, 1, bbox=tiny, **b_kwargs)]),
        # One video: first frame public, second frame a portrait, so the
        # whole video must route private.
        _fixture_record(
            "v1_f0", scene=17, timestamp=day1.format("15:00"),
            media_kind="video_frame", video_id="vid1", frame_index=0,
            faces=[_fixture_face(_B, 2, bbox=tiny, **b_kwargs),
                   _fixture_face(_G, 4, bbox=tiny, **g_kwargs)]),
        _fixture_record(
            "v1_f4", scene=17, timestamp=day2.format("15:01"),
            media_kind="video_frame", video_id="vid1", frame_index=4,
            faces=[_fixture_face(_B, 3, bbox=tiny, **b_kwargs),
                   _fixture_face(_LONE2, 0, bbox=centered(200.0),
                                 age_bin=7, gender=(0.6, 0.4), ethnicity=1)]),
    ]
    header = GalleryHeader(scene_embedding_dim=_FIXTURE_D,
                           num_scenes=_FIXTURE_SCENES,
                           num_objects=_FIXTURE_OBJECTS,
                           face_embedding_dim=_FIXTURE_DFACE)
    return Gallery(records, header)


def make_random_gallery(num_photos: int = 20, num_videos: int = 1,
                        frames_per_video: int = 3, seed: int = 0,
                        scene_embedding_dim: int = 16,
                        num_scenes: int = 337, num_objects: int = 145,
                        face_embedding_dim: int = 8,
                        tier: str = "fast") -> Gallery:
    """A random valid gallery: recurring face identities, geo clusters
    around two spots, occasional recognized text, one video block."""
    rng = np.random.default_rng(seed)
    header = GalleryHeader(scene_embedding_dim=scene_embedding_dim,
                           num_scenes=num_scenes, num_objects=num_objects,
                           face_embedding_dim=face_embedding_dim)
    identities = rng.normal(size=(4, face_embedding_dim))
    identities /= np.linalg.norm(identities, axis=1, keepdims=True)
    spots = [(40.75, -73.98), (51.51, -0.13)]
    texts = ["passport number 7712 issued 2019 name and birth date",
             "lunch menu grilled chicken soup of the day 12",
             None, None, None]

    def random_faces() -> list[FaceObservation]:
        faces = []
        for _ in range(int(rng.integers(0, 3))):
            identity = int(rng.integers(0, identities.shape[0]))
            embedding = identities[identity] \
                + 0.05 * rng.normal(size=face_embedding_dim)
            age = np.abs(rng.normal(size=_AGE_BINS))
            gender = np.abs(rng.normal(size=2)) + 0.1
            ethnicity = np.abs(rng.normal(size=3)) + 0.1
            width = float(rng.uniform(20, 120))
            x = float(rng.uniform(0, 1000 - width))
            faces.append(FaceObservation(
                bbox=(x, 50.0, width, 80.0),
                image_size=(1000.0, 750.0),
                embedding=embedding,
                age_scores=age / age.sum(),
                gender_scores=gender / gender.sum(),
                ethnicity_scores=ethnicity / ethnicity.sum(),
            ))
        return faces

    def random_record(photo_id: str, media_kind: str = "photo",
                      video_id=None, frame_index=None) -> ImageFeatureRecord:
        raw = np.abs(rng.normal(size=num_scenes)) ** 3
        objects = np.zeros(num_objects)
        hot = rng.integers(0, num_objects, size=3)
        objects[hot] = rng.uniform(0.2, 1.0, size=3)
        day = int(rng.integers(1, 28))
        spot = spots[int(rng.integers(0, len(spots)))]
        has_geo = rng.uniform() < 0.7
        return ImageFeatureRecord(
            photo_id=photo_id,
            media_kind=media_kind,
            scene_embedding=rng.normal(size=scene_embedding_dim),
            scene_scores=raw / raw.sum(),
            object_confidences=objects,
            faces=tuple(random_faces()),
            ocr_text=texts[int(rng.integers(0, len(texts)))],
            exif=ExifMeta(
                timestamp=datetime(2021, 7, day,
                                   int(rng.integers(0, 24)),
                                   int(rng.integers(0, 60)),
                                   tzinfo=timezone.utc),
                camera_model="main camera",
                focal_length_mm=4.5,
                is_selfie=bool(rng.uniform() < 0.2),
                geo=(spot[0] + float(rng.normal()) * 0.005,
                     spot[1] + float(rng.normal()) * 0.005)
                if has_geo else None,
            ),
            tier=tier,
            video_id=video_id,
            frame_index=frame_index,
        )

    records = [random_record(f"photo_{i:03d}") for i in range(num_photos)]
    for v in range(num_videos):
        for f in range(frames_per_video):
            records.append(random_record(
                f"video_{v:02d}_frame_{f * 4}", media_kind="video_frame",
                video_id=f"video_{v:02d}", frame_index=f * 4))
    return Gallery(records, header)


def make_fusion_dataset(num_train: int = 160, num_val: int = 120,
                        num_classes: int = 4, seed: int = 0,
                        scene_embedding_dim: int = 16, num_scenes: int = 24,
                        num_objects: int = 12,
                        ) -> tuple[list[ImageRepresentation], list[int],
                                   list[ImageRepresentation], list[int]]:
    """Labeled three-view samples with class structure in every view:
    class c concentrates scene scores near scene c, raises object c's
    confidence, and shifts the embedding toward a class center."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(num_classes, scene_embedding_dim))

    def sample(label: int) -> ImageRepresentation:
        f = centers[label] + rng.normal(size=scene_embedding_dim)
        logits = rng.normal(size=num_scenes)
        logits[label % num_scenes] += 2.5
        p = np.exp(logits - logits.max())
        o = rng.uniform(0.0, 0.4, size=num_objects)
        o[label % num_objects] = rng.uniform(0.5, 1.0)
        return ImageRepresentation(f=f, p=p / p.sum(), o=o)

    def batch(count: int) -> tuple[list[ImageRepresentation], list[int]]:
        labels = [int(rng.integers(0, num_classes)) for _ in range(count)]
        return [sample(label) for label in labels], labels

    train_reps, train_labels = batch(num_train)
    val_reps, val_labels = batch(num_val)
    return train_reps, train_labels, val_reps, val_labels


def fusion_gallery(representations: Sequence[ImageRepresentation],
                   prefix: str) -> Gallery:
    """Wrap bare representations in records so they can travel through
    the gallery file format (labels travel separately)."""
    records = []
    for i, rep in enumerate(representations):
        records.append(ImageFeatureRecord(
            photo_id=f"{prefix}_{i:04d}",
            media_kind="photo",
            scene_embedding=rep.f,
            scene_scores=rep.p,
            object_confidences=rep.o,
        ))
    header = GalleryHeader(scene_embedding_dim=representations[0].f.shape[0],
                           num_scenes=representations[0].p.shape[0],
                           num_objects=representations[0].o.shape[0])
    return Gallery(records, header)


def make_synthetic_users(num_users: int = 200, feature_dim: int = 40,
                         num_categories: int = 8, seed: int = 0,
                         min_photos: int = 8, max_photos: int = 25,
                         signal_rate: float = 0.45,
                         signal_shift: float = 1.2,
                         noise_scale: float = 0.35) -> list[UserExample]:
    """Galleries where category evidence sits on a minority of photos.

    Each category has a prototype direction. A user's interest photos are
    drawn around the prototypes of their positive categories and carry a
    shared +signal_shift offset along one fixed marker direction. Their
    distractor photos concentrate on two random "junk theme" categories
    (independent of the interests) with the opposite marker offset, so
    mean pooling sees junk-theme evidence at least as strong as the true
    interests, while a pooling that keys on the marker direction can keep
    only the informative photos.
    """
    rng = np.random.default_rng(seed)

    def unit_rows(count: int) -> np.ndarray:
        rows = rng.normal(size=(count, feature_dim))
        return rows / np.linalg.norm(rows, axis=1, keepdims=True)

    prototypes = unit_rows(num_categories) * 2.0
    signal_direction = unit_rows(1)[0]

    users = []
    for _ in range(num_users):
        targets = (rng.uniform(size=num_categories) < 0.35).astype(float)
        if targets.sum() == 0:
            targets[int(rng.integers(0, num_categories))] = 1.0
        positives = np.flatnonzero(targets)
        junk_themes = rng.choice(num_categories, size=2, replace=False)
        count = int(rng.integers(min_photos, max_photos + 1))
        photos = np.empty((count, feature_dim))
        for m in range(count):
            noise = noise_scale * rng.normal(size=feature_dim)
            if rng.uniform() < signal_rate:
                category = int(rng.choice(positives))
                photos[m] = (prototypes[category]
                             + signal_shift * signal_direction + noise)
            else:
                category = int(rng.choice(junk_themes))
                photos[m] = (prototypes[category]
                             - signal_shift * signal_direction + noise)
        users.append(UserExample(features=photos, targets=targets))
    return users


def write_users_file(users: Sequence[UserExample], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for user in users:
            fh.write(json.dumps({
                "features": user.features.tolist(),
                "targets": user.targets.tolist(),
            }) + "\n")


def load_users_file(path: str | Path) -> list[UserExample]:
    users = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            raw = json.loads(line)
            users.append(UserExample(
                features=np.asarray(raw["features"], dtype=float),
                targets=np.asarray(raw["targets"], dtype=float)))
    return users


def write_labels_file(labels: Sequence[int], photo_ids: Sequence[str],
                      path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for photo_id, label in zip(photo_ids, labels):
            fh.write(f"{photo_id}\t{label}\n")


def load_labels_file(path: str | Path) -> dict[str, int]:
    labels: dict[str, int] = {}
    for lineno, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected photo_id<TAB>label")
        labels[parts[0]] = int(parts[1])
    return labels
