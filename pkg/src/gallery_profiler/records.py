"""Per-photo feature records and the line-delimited gallery file format.

A gallery file is UTF-8 text: one JSON header line declaring ``version``,
``D`` (scene embedding length), ``S`` (scene score length), ``O`` (object
confidence length) and ``D_face`` (face embedding length), followed by one
JSON record per line. Floats are serialized at full round-trip precision,
so write-then-load is the identity on valid records.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

FORMAT_VERSION = 1
DEFAULT_NUM_SCENES = 337
DEFAULT_NUM_OBJECTS = 145
# 5-year bins from 0 to 100; a record's age score vector has one entry per bin.
DEFAULT_AGE_BIN_EDGES = tuple(float(a) for a in range(0, 105, 5))

SCENE_SUM_TOL = 1e-4
FACE_SUM_TOL = 1e-4
UNIT_NORM_TOL = 1e-6

MEDIA_KINDS = ("photo", "video_frame")
TIERS = ("fast", "accurate")
GENDER_LABELS = ("male", "female")


class GalleryFormatError(ValueError):
    """A gallery file or record violates the format contract.

    Carries the 1-based line number and the offending field name when they
    are known, so callers can point at the exact violation.
    """

    def __init__(self, message: str, *, line: int | None = None,
                 field_name: str | None = None):
        self.line = line
        self.field_name = field_name
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field_name is not None:
            prefix += f"field '{field_name}': "
        super().__init__(prefix + message)


@dataclass(frozen=True)
class GalleryHeader:
    """Dataset-wide dimensions declared on the first line of a gallery file."""

    scene_embedding_dim: int
    num_scenes: int = DEFAULT_NUM_SCENES
    num_objects: int = DEFAULT_NUM_OBJECTS
    face_embedding_dim: int = 1
    age_bin_edges: tuple[float, ...] = DEFAULT_AGE_BIN_EDGES
    ethnicity_labels: tuple[str, ...] | None = None
    version: int = FORMAT_VERSION

    def __post_init__(self):
        for name in ("scene_embedding_dim", "num_scenes", "num_objects",
                     "face_embedding_dim"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise GalleryFormatError(
                    f"{name} must be a nonnegative integer, got {v!r}")
        edges = self.age_bin_edges
        if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
            raise GalleryFormatError(
                "age_bin_edges must be strictly increasing with >= 2 entries")

    @property
    def num_age_bins(self) -> int:
        return len(self.age_bin_edges) - 1

    def age_bin_midpoints(self) -> np.ndarray:
        edges = np.asarray(self.age_bin_edges, dtype=float)
        return (edges[:-1] + edges[1:]) / 2.0

    def to_json(self) -> str:
        payload = {
            "version": self.version,
            "D": self.scene_embedding_dim,
            "S": self.num_scenes,
            "O": self.num_objects,
            "D_face": self.face_embedding_dim,
            "age_bin_edges": list(self.age_bin_edges),
        }
        if self.ethnicity_labels is not None:
            payload["ethnicity_labels"] = list(self.ethnicity_labels)
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GalleryHeader":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GalleryFormatError(f"header is not valid JSON: {exc}",
                                     line=1) from exc
        if not isinstance(raw, dict):
            raise GalleryFormatError("header must be a JSON object", line=1)
        for key in ("version", "D", "S", "O", "D_face"):
            if key not in raw:
                raise GalleryFormatError("header missing required key",
                                         line=1, field_name=key)
        labels = raw.get("ethnicity_labels")
        return cls(
            scene_embedding_dim=raw["D"],
            num_scenes=raw["S"],
            num_objects=raw["O"],
            face_embedding_dim=raw["D_face"],
            age_bin_edges=tuple(raw.get("age_bin_edges",
                                        DEFAULT_AGE_BIN_EDGES)),
            ethnicity_labels=tuple(labels) if labels is not None else None,
            version=raw["version"],
        )


@dataclass(frozen=True)
class ExifMeta:
    """Optional camera metadata; absent fields stay None, never zero."""

    timestamp: datetime | None = None
    camera_model: str | None = None
    focal_length_mm: float | None = None
    is_selfie: bool | None = None
    geo: tuple[float, float] | None = None  # (latitude, longitude), degrees


@dataclass(frozen=True)
class FaceObservation:
    """One detected face: box, identity embedding and attribute scores.

    ``gender_scores`` is ordered (male, female). The embedding is stored as
    found in the file; :func:`load_gallery` rescales it to unit L2 norm.
    """

    bbox: tuple[float, float, float, float]  # x, y, width, height (pixels)
    image_size: tuple[float, float]          # width, height (pixels)
    embedding: np.ndarray
    age_scores: np.ndarray
    gender_scores: np.ndarray
    ethnicity_scores: np.ndarray


@dataclass(frozen=True)
class ImageFeatureRecord:
    """All extractor outputs for one photo or one selected video frame."""

    photo_id: str
    media_kind: str
    scene_embedding: np.ndarray    # length D
    scene_scores: np.ndarray       # length S, sums to 1
    object_confidences: np.ndarray  # length O, per-class max detection score
    faces: tuple[FaceObservation, ...] = ()
    ocr_text: str | None = None
    exif: ExifMeta = field(default_factory=ExifMeta)
    tier: str = "fast"
    video_id: str | None = None
    frame_index: int | None = None


class Gallery(list):
    """A validated list of records plus the dataset header they share."""

    def __init__(self, records: Iterable[ImageFeatureRecord] = (),
                 header: GalleryHeader | None = None):
        super().__init__(records)
        if header is None:
            header = infer_header(self)
        self.header = header


def _as_float_vector(value, *, name: str, line: int | None) -> np.ndarray:
    if not isinstance(value, (list, tuple, np.ndarray)):
        raise GalleryFormatError("expected a list of numbers",
                                 line=line, field_name=name)
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 1:
        raise GalleryFormatError("expected a flat list of numbers",
                                 line=line, field_name=name)
    if not np.all(np.isfinite(arr)):
        raise GalleryFormatError("values must be finite",
                                 line=line, field_name=name)
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.flags.writeable = False
    return arr


def parse_timestamp(value: str, *, line: int | None = None) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    try:
        ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError as exc:
        raise GalleryFormatError(f"bad ISO-8601 timestamp {value!r}",
                                 line=line, field_name="exif.timestamp") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).isoformat()


def validate_record(record: ImageFeatureRecord, header: GalleryHeader, *,
                    line: int | None = None) -> None:
    """Check every type invariant; raises GalleryFormatError naming the
    violated invariant, the field and (when loading) the line number."""
    if not record.photo_id:
        raise GalleryFormatError("photo_id must be a nonempty string",
                                 line=line, field_name="photo_id")
    if record.media_kind not in MEDIA_KINDS:
        raise GalleryFormatError(
            f"media_kind must be one of {MEDIA_KINDS}, got "
            f"{record.media_kind!r}", line=line, field_name="media_kind")
    if record.tier not in TIERS:
        raise GalleryFormatError(f"tier must be one of {TIERS}",
                                 line=line, field_name="tier")
    if record.media_kind == "video_frame":
        if not record.video_id:
            raise GalleryFormatError("video_frame records need a video_id",
                                     line=line, field_name="video_id")
        if record.frame_index is None or record.frame_index < 0:
            raise GalleryFormatError(
                "video_frame records need a nonnegative frame_index",
                line=line, field_name="frame_index")
    else:
        if record.video_id is not None or record.frame_index is not None:
            raise GalleryFormatError(
                "photo records must not carry video_id/frame_index",
                line=line, field_name="video_id")

    if record.scene_embedding.shape != (header.scene_embedding_dim,):
        raise GalleryFormatError(
            f"scene embedding length {record.scene_embedding.shape[0]} does "
            f"not match the gallery's D={header.scene_embedding_dim}",
            line=line, field_name="f")
    p = record.scene_scores
    if p.shape != (header.num_scenes,):
        raise GalleryFormatError(
            f"scene score length {p.shape[0]} does not match the gallery's "
            f"S={header.num_scenes}", line=line, field_name="p")
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise GalleryFormatError("every scene score must lie in [0, 1]",
                                 line=line, field_name="p")
    total = float(p.sum())
    if abs(total - 1.0) > SCENE_SUM_TOL:
        raise GalleryFormatError(
            f"scene scores must sum to 1 within {SCENE_SUM_TOL} "
            f"(got {total:.6g})", line=line, field_name="p")
    o = record.object_confidences
    if o.shape != (header.num_objects,):
        raise GalleryFormatError(
            f"object confidence length {o.shape[0]} does not match the "
            f"gallery's O={header.num_objects}", line=line, field_name="o")
    if np.any(o < 0.0) or np.any(o > 1.0):
        raise GalleryFormatError(
            "every object confidence must lie in [0, 1]",
            line=line, field_name="o")

    for i, face in enumerate(record.faces):
        _validate_face(face, header, index=i, line=line)

    exif = record.exif
    if exif.focal_length_mm is not None and exif.focal_length_mm <= 0:
        raise GalleryFormatError("focal_length_mm must be positive",
                                 line=line, field_name="exif.focal_length_mm")
    if exif.geo is not None:
        lat, lon = exif.geo
        if not (-90.0 <= lat <= 90.0):
            raise GalleryFormatError("latitude must lie in [-90, 90]",
                                     line=line, field_name="exif.lat")
        if not (-180.0 <= lon <= 180.0):
            raise GalleryFormatError("longitude must lie in [-180, 180]",
                                     line=line, field_name="exif.lon")


def _validate_face(face: FaceObservation, header: GalleryHeader, *,
                   index: int, line: int | None) -> None:
    where = f"faces[{index}]"
    x, y, w, h = face.bbox
    img_w, img_h = face.image_size
    if img_w <= 0 or img_h <= 0:
        raise GalleryFormatError("image_size must be positive",
                                 line=line, field_name=f"{where}.image_size")
    if w <= 0 or h <= 0:
        raise GalleryFormatError("bbox width and height must be positive",
                                 line=line, field_name=f"{where}.bbox")
    if x < 0 or y < 0 or x + w > img_w or y + h > img_h:
        raise GalleryFormatError(
            "bbox must lie fully within image_size",
            line=line, field_name=f"{where}.bbox")
    if face.embedding.shape != (header.face_embedding_dim,):
        raise GalleryFormatError(
            f"face embedding length {face.embedding.shape[0]} does not match "
            f"the gallery's D_face={header.face_embedding_dim}",
            line=line, field_name=f"{where}.x")
    norm = float(np.linalg.norm(face.embedding))
    if norm == 0.0:
        raise GalleryFormatError(
            "face embedding must be nonzero (cannot be L2-normalized)",
            line=line, field_name=f"{where}.x")
    if face.age_scores.shape != (header.num_age_bins,):
        raise GalleryFormatError(
            f"age score length {face.age_scores.shape[0]} does not match the "
            f"gallery's {header.num_age_bins} age bins",
            line=line, field_name=f"{where}.a")
    if face.gender_scores.shape != (2,):
        raise GalleryFormatError("gender scores must have length 2",
                                 line=line, field_name=f"{where}.g")
    if header.ethnicity_labels is not None and \
            face.ethnicity_scores.shape != (len(header.ethnicity_labels),):
        raise GalleryFormatError(
            "ethnicity score length does not match the gallery's "
            "ethnicity_labels", line=line, field_name=f"{where}.e")
    for name, scores in (("a", face.age_scores), ("g", face.gender_scores),
                         ("e", face.ethnicity_scores)):
        if scores.ndim != 1 or scores.size == 0:
            raise GalleryFormatError("score vector must be nonempty",
                                     line=line, field_name=f"{where}.{name}")
        if np.any(scores < 0.0):
            raise GalleryFormatError("scores must be nonnegative",
                                     line=line, field_name=f"{where}.{name}")
        total = float(scores.sum())
        if abs(total - 1.0) > FACE_SUM_TOL:
            raise GalleryFormatError(
                f"scores must sum to 1 within {FACE_SUM_TOL} "
                f"(got {total:.6g})", line=line, field_name=f"{where}.{name}")


def normalize_face_embeddings(record: ImageFeatureRecord) -> ImageFeatureRecord:
    """Rescale each face embedding to unit L2 norm (ingestion step)."""
    if not record.faces:
        return record
    faces = []
    for face in record.faces:
        norm = float(np.linalg.norm(face.embedding))
        if abs(norm - 1.0) <= UNIT_NORM_TOL:
            faces.append(face)
        else:
            faces.append(replace(face, embedding=_frozen(face.embedding / norm)))
    return replace(record, faces=tuple(faces))


def _face_from_json(raw: dict, *, index: int, line: int) -> FaceObservation:
    where = f"faces[{index}]"
    if not isinstance(raw, dict):
        raise GalleryFormatError("face entry must be an object",
                                 line=line, field_name=where)
    for key in ("bbox", "image_size", "x", "a", "g", "e"):
        if key not in raw:
            raise GalleryFormatError("face entry missing required key",
                                     line=line, field_name=f"{where}.{key}")
    bbox = raw["bbox"]
    size = raw["image_size"]
    if not (isinstance(bbox, list) and len(bbox) == 4):
        raise GalleryFormatError("bbox must be [x, y, width, height]",
                                 line=line, field_name=f"{where}.bbox")
    if not (isinstance(size, list) and len(size) == 2):
        raise GalleryFormatError("image_size must be [width, height]",
                                 line=line, field_name=f"{where}.image_size")
    return FaceObservation(
        bbox=tuple(float(v) for v in bbox),
        image_size=tuple(float(v) for v in size),
        embedding=_frozen(_as_float_vector(raw["x"], name=f"{where}.x", line=line)),
        age_scores=_frozen(_as_float_vector(raw["a"], name=f"{where}.a", line=line)),
        gender_scores=_frozen(_as_float_vector(raw["g"], name=f"{where}.g", line=line)),
        ethnicity_scores=_frozen(_as_float_vector(raw["e"], name=f"{where}.e", line=line)),
    )


def _exif_from_json(raw: dict | None, *, line: int) -> ExifMeta:
    if raw is None:
        return ExifMeta()
    if not isinstance(raw, dict):
        raise GalleryFormatError("exif must be an object or null",
                                 line=line, field_name="exif")
    ts = raw.get("timestamp")
    lat, lon = raw.get("lat"), raw.get("lon")
    if (lat is None) != (lon is None):
        raise GalleryFormatError("lat and lon must be present together",
                                 line=line, field_name="exif.lat")
    return ExifMeta(
        timestamp=parse_timestamp(ts, line=line) if ts is not None else None,
        camera_model=raw.get("camera_model"),
        focal_length_mm=raw.get("focal_length_mm"),
        is_selfie=raw.get("is_selfie"),
        geo=(float(lat), float(lon)) if lat is not None else None,
    )


def record_from_json(text: str, *, line: int) -> ImageFeatureRecord:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GalleryFormatError(f"record is not valid JSON: {exc}",
                                 line=line) from exc
    if not isinstance(raw, dict):
        raise GalleryFormatError("record must be a JSON object", line=line)
    for key in ("photo_id", "media_kind", "f", "p", "o", "tier"):
        if key not in raw:
            raise GalleryFormatError("record missing required key",
                                     line=line, field_name=key)
    faces_raw = raw.get("faces") or []
    if not isinstance(faces_raw, list):
        raise GalleryFormatError("faces must be a list",
                                 line=line, field_name="faces")
    return ImageFeatureRecord(
        photo_id=raw["photo_id"],
        media_kind=raw["media_kind"],
        scene_embedding=_frozen(_as_float_vector(raw["f"], name="f", line=line)),
        scene_scores=_frozen(_as_float_vector(raw["p"], name="p", line=line)),
        object_confidences=_frozen(_as_float_vector(raw["o"], name="o", line=line)),
        faces=tuple(_face_from_json(f, index=i, line=line)
                    for i, f in enumerate(faces_raw)),
        ocr_text=raw.get("ocr_text"),
        exif=_exif_from_json(raw.get("exif"), line=line),
        tier=raw["tier"],
        video_id=raw.get("video_id"),
        frame_index=raw.get("frame_index"),
    )


def record_to_json(record: ImageFeatureRecord) -> str:
    exif = record.exif
    payload = {
        "photo_id": record.photo_id,
        "media_kind": record.media_kind,
        "video_id": record.video_id,
        "frame_index": record.frame_index,
        "f": record.scene_embedding.tolist(),
        "p": record.scene_scores.tolist(),
        "o": record.object_confidences.tolist(),
        "faces": [
            {
                "bbox": list(face.bbox),
                "image_size": list(face.image_size),
                "x": face.embedding.tolist(),
                "a": face.age_scores.tolist(),
                "g": face.gender_scores.tolist(),
                "e": face.ethnicity_scores.tolist(),
            }
            for face in record.faces
        ],
        "ocr_text": record.ocr_text,
        "exif": {
            "timestamp": format_timestamp(exif.timestamp)
            if exif.timestamp is not None else None,
            "camera_model": exif.camera_model,
            "focal_length_mm": exif.focal_length_mm,
            "is_selfie": exif.is_selfie,
            "lat": exif.geo[0] if exif.geo is not None else None,
            "lon": exif.geo[1] if exif.geo is not None else None,
        },
        "tier": record.tier,
    }
    return json.dumps(payload, sort_keys=True)


def infer_header(records: Sequence[ImageFeatureRecord],
                 age_bin_edges: tuple[float, ...] = DEFAULT_AGE_BIN_EDGES,
                 ethnicity_labels: tuple[str, ...] | None = None,
                 ) -> GalleryHeader:
    """Derive a header from the first record; empty galleries fall back to
    the defaults S=337, O=145 with placeholder embedding dims."""
    if isinstance(records, Gallery):
        return records.header
    if not records:
        return GalleryHeader(scene_embedding_dim=1,
                             face_embedding_dim=1,
                             age_bin_edges=age_bin_edges,
                             ethnicity_labels=ethnicity_labels)
    first = records[0]
    d_face = 1
    for rec in records:
        if rec.faces:
            d_face = rec.faces[0].embedding.shape[0]
            age_bins = rec.faces[0].age_scores.shape[0]
            if age_bins != len(age_bin_edges) - 1:
                # keep the score length authoritative; synthesize uniform bins
                age_bin_edges = tuple(float(v) for v in
                                      np.linspace(0.0, 100.0, age_bins + 1))
            break
    return GalleryHeader(
        scene_embedding_dim=first.scene_embedding.shape[0],
        num_scenes=first.scene_scores.shape[0],
        num_objects=first.object_confidences.shape[0],
        face_embedding_dim=d_face,
        age_bin_edges=age_bin_edges,
        ethnicity_labels=ethnicity_labels,
    )


def load_gallery(path: str | Path) -> Gallery:
    """Load and validate a gallery file.

    Face embeddings are L2-normalized here, at ingestion; files keep the
    extractor output verbatim. Records are returned in file order and are
    immutable (their arrays are marked read-only).
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].strip():
        raise GalleryFormatError("gallery file must start with a header line",
                                 line=1)
    header = GalleryHeader.from_json(lines[0])

    records: list[ImageFeatureRecord] = []
    seen: dict[tuple[str, str], int] = {}
    ethnicity_dim: tuple[int, str] | None = None
    for lineno, text in enumerate(lines[1:], start=2):
        if not text.strip():
            continue
        record = record_from_json(text, line=lineno)
        validate_record(record, header, line=lineno)
        key = (record.photo_id, record.tier)
        if key in seen:
            raise GalleryFormatError(
                f"photo_id {record.photo_id!r} at tier {record.tier!r} "
                f"already appeared on line {seen[key]}",
                line=lineno, field_name="photo_id")
        seen[key] = lineno
        for face in record.faces:
            dim = face.ethnicity_scores.shape[0]
            if ethnicity_dim is None:
                ethnicity_dim = (dim, record.photo_id)
            elif dim != ethnicity_dim[0]:
                raise GalleryFormatError(
                    f"ethnicity score length {dim} conflicts with record "
                    f"{ethnicity_dim[1]!r} (length {ethnicity_dim[0]})",
                    line=lineno, field_name="faces.e")
        records.append(normalize_face_embeddings(record))
    return Gallery(records, header)


def write_gallery(records: Sequence[ImageFeatureRecord], path: str | Path,
                  header: GalleryHeader | None = None) -> None:
    """Validate the records and write them as a gallery file."""
    if header is None:
        header = infer_header(records)
    for record in records:
        validate_record(record, header)
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(header.to_json() + "\n")
        for record in records:
            fh.write(record_to_json(record) + "\n")
