"""Record file format: validation, serialization, round-trips."""

import json
from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gallery_profiler.records import (
    ExifMeta,
    FaceObservation,
    GalleryFormatError,
    GalleryHeader,
    ImageFeatureRecord,
    infer_header,
    load_gallery,
    normalize_face_embeddings,
    parse_timestamp,
    record_from_json,
    record_to_json,
    validate_record,
    write_gallery,
)
from gallery_profiler.synthetic import make_random_gallery

HEADER = GalleryHeader(scene_embedding_dim=4, num_scenes=6, num_objects=5,
                       face_embedding_dim=3, age_bin_edges=(0.0, 50.0, 100.0))


def make_face(embedding=(1.0, 0.0, 0.0), bbox=(10.0, 10.0, 50.0, 60.0),
              image_size=(640.0, 480.0), gender=(0.7, 0.3)):
    return FaceObservation(
        bbox=bbox,
        image_size=image_size,
        embedding=np.asarray(embedding, dtype=float),
        age_scores=np.array([0.25, 0.75]),
        gender_scores=np.asarray(gender, dtype=float),
        ethnicity_scores=np.array([0.5, 0.5]),
    )


def make_record(photo_id="r1", faces=(), exif=None, **overrides):
    fields = dict(
        photo_id=photo_id,
        media_kind="photo",
        scene_embedding=np.array([0.5, -1.5, 2.0, 0.0]),
        scene_scores=np.array([0.5, 0.1, 0.1, 0.1, 0.1, 0.1]),
        object_confidences=np.array([0.0, 0.9, 0.0, 0.2, 1.0]),
        faces=tuple(faces),
        exif=exif if exif is not None else ExifMeta(),
        tier="fast",
    )
    fields.update(overrides)
    return ImageFeatureRecord(**fields)


def test_empty_gallery_round_trips(tmp_path):
    path = tmp_path / "empty.jsonl"
    write_gallery([], path, header=HEADER)
    loaded = load_gallery(path)
    assert list(loaded) == []
    assert loaded.header == HEADER


def test_single_record_round_trip_is_exact():
    record = make_record(
        faces=[make_face()],
        exif=ExifMeta(timestamp=datetime(2021, 6, 5, 9, 30,
                                         tzinfo=timezone.utc),
                      camera_model="front camera", focal_length_mm=3.5,
                      is_selfie=True, geo=(40.75, -73.98)),
        ocr_text="receipt total 42",
    )
    decoded = record_from_json(record_to_json(record), line=2)
    assert decoded.photo_id == record.photo_id
    assert decoded.ocr_text == record.ocr_text
    assert decoded.exif == record.exif
    assert np.array_equal(decoded.scene_embedding, record.scene_embedding)
    assert np.array_equal(decoded.scene_scores, record.scene_scores)
    assert np.array_equal(decoded.object_confidences,
                          record.object_confidences)
    assert len(decoded.faces) == 1
    assert decoded.faces[0].bbox == record.faces[0].bbox
    assert np.array_equal(decoded.faces[0].embedding,
                          record.faces[0].embedding)


def test_thousand_record_round_trip_error_below_1e_9(tmp_path):
    gallery = make_random_gallery(num_photos=994, num_videos=2,
                                  frames_per_video=3, seed=3)
    # Records count as valid once ingested, i.e. with unit-norm embeddings.
    records = [normalize_face_embeddings(r) for r in gallery]
    assert len(records) == 1000
    path = tmp_path / "big.jsonl"
    write_gallery(records, path, header=gallery.header)
    loaded = load_gallery(path)
    assert len(loaded) == 1000
    worst = 0.0
    for before, after in zip(records, loaded):
        worst = max(worst, float(np.max(np.abs(
            before.scene_embedding - after.scene_embedding))))
        worst = max(worst, float(np.max(np.abs(
            before.scene_scores - after.scene_scores))))
        worst = max(worst, float(np.max(np.abs(
            before.object_confidences - after.object_confidences))))
        for f_before, f_after in zip(before.faces, after.faces):
            worst = max(worst, float(np.max(np.abs(
                f_before.embedding - f_after.embedding))))
            worst = max(worst, float(np.max(np.abs(
                f_before.age_scores - f_after.age_scores))))
        if before.exif.geo is not None:
            worst = max(worst,
                        abs(before.exif.geo[0] - after.exif.geo[0]),
                        abs(before.exif.geo[1] - after.exif.geo[1]))
        assert before.exif.timestamp == after.exif.timestamp
    assert worst < 1e-9


def test_scene_score_sum_violation_names_line_and_field(tmp_path):
    path = tmp_path / "bad.jsonl"
    write_gallery([make_record("a"), make_record("b")], path, header=HEADER)
    lines = path.read_text(encoding="utf-8").splitlines()
    raw = json.loads(lines[2])
    raw["p"] = [v / 2.0 for v in raw["p"]]
    lines[2] = json.dumps(raw)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    with pytest.raises(GalleryFormatError) as err:
        load_gallery(path)
    assert "line 3" in str(err.value)
    assert "'p'" in str(err.value)
    assert err.value.line == 3


def test_non_unit_embedding_is_rescaled_on_load(tmp_path):
    record = make_record(faces=[make_face(embedding=(2.0, 0.0, 0.0))])
    path = tmp_path / "norm.jsonl"
    write_gallery([record], path, header=HEADER)
    # The file keeps the extractor output verbatim ...
    stored = json.loads(path.read_text(encoding="utf-8").splitlines()[1])
    assert stored["faces"][0]["x"] == [2.0, 0.0, 0.0]
    # ... and ingestion rescales it to unit norm.
    loaded = load_gallery(path)
    embedding = loaded[0].faces[0].embedding
    assert np.allclose(embedding, [1.0, 0.0, 0.0])
    assert abs(float(np.linalg.norm(embedding)) - 1.0) < 1e-12


def test_duplicate_photo_id_and_tier_names_both_lines(tmp_path):
    path = tmp_path / "dup.jsonl"
    with path.open("w", encoding="utf-8") as fh:
        fh.write(HEADER.to_json() + "\n")
        fh.write(record_to_json(make_record("dup")) + "\n")
        fh.write(record_to_json(make_record("dup")) + "\n")
    with pytest.raises(GalleryFormatError) as err:
        load_gallery(path)
    message = str(err.value)
    assert "line 2" in message and "line 3" in message
    assert "'dup'" in message


def test_same_photo_id_at_two_tiers_is_allowed(tmp_path):
    path = tmp_path / "tiers.jsonl"
    write_gallery([make_record("x", tier="fast"),
                   make_record("x", tier="accurate")], path, header=HEADER)
    assert len(load_gallery(path)) == 2


def test_ethnicity_length_conflict_names_both_records(tmp_path):
    first = make_record("e3", faces=[make_face()])
    bad_face = FaceObservation(
        bbox=(10.0, 10.0, 50.0, 60.0), image_size=(640.0, 480.0),
        embedding=np.array([1.0, 0.0, 0.0]),
        age_scores=np.array([0.25, 0.75]),
        gender_scores=np.array([0.5, 0.5]),
        ethnicity_scores=np.array([0.2, 0.3, 0.5]),
    )
    second = make_record("e4", faces=[bad_face])
    path = tmp_path / "ethnicity.jsonl"
    with path.open("w", encoding="utf-8") as fh:
        fh.write(HEADER.to_json() + "\n")
        fh.write(record_to_json(first) + "\n")
        fh.write(record_to_json(second) + "\n")
    with pytest.raises(GalleryFormatError) as err:
        load_gallery(path)
    assert "'e3'" in str(err.value)
    assert err.value.line == 3


@pytest.mark.parametrize("mutate, field", [
    (lambda r: make_record(scene_scores=np.full(6, 0.5 / 6.0)), "p"),
    (lambda r: make_record(object_confidences=np.array(
        [0.0, 1.4, 0.0, 0.0, 0.0])), "o"),
    (lambda r: make_record(scene_embedding=np.zeros(3)), "f"),
    (lambda r: make_record(faces=[make_face(bbox=(600.0, 10.0, 50.0,
                                                  60.0))]), "bbox"),
    (lambda r: make_record(faces=[make_face(gender=(0.3, 0.3))]), "g"),
    (lambda r: make_record(exif=ExifMeta(geo=(95.0, 10.0))), "lat"),
    (lambda r: make_record(media_kind="clip"), "media_kind"),
])
def test_invariant_violations_name_the_field(mutate, field):
    with pytest.raises(GalleryFormatError) as err:
        validate_record(mutate(None), HEADER)
    assert field in str(err.value)


def test_video_frame_requires_video_id_and_index():
    frame = make_record("v0", media_kind="video_frame", video_id="vid",
                        frame_index=0)
    validate_record(frame, HEADER)  # well-formed frame passes
    with pytest.raises(GalleryFormatError):
        validate_record(make_record("v1", media_kind="video_frame"), HEADER)


def test_timestamp_z_suffix_parses_as_utc():
    parsed = parse_timestamp("2021-06-05T09:00:00Z")
    assert parsed == datetime(2021, 6, 5, 9, 0, tzinfo=timezone.utc)


def test_gallery_without_header_is_rejected(tmp_path):
    path = tmp_path / "headerless.jsonl"
    path.write_text(record_to_json(make_record()) + "\n", encoding="utf-8")
    with pytest.raises(GalleryFormatError):
        load_gallery(path)


def test_infer_header_reads_dimensions_from_records():
    header = infer_header([make_record(faces=[make_face()])])
    assert header.scene_embedding_dim == 4
    assert header.num_scenes == 6
    assert header.num_objects == 5
    assert header.face_embedding_dim == 3


scalar_exif = st.builds(
    ExifMeta,
    timestamp=st.one_of(st.none(), st.datetimes(
        min_value=datetime(1990, 1, 1), max_value=datetime(2035, 1, 1),
        timezones=st.just(timezone.utc))),
    camera_model=st.one_of(st.none(), st.text(max_size=30)),
    focal_length_mm=st.one_of(st.none(), st.floats(
        min_value=0.1, max_value=500.0, allow_nan=False)),
    is_selfie=st.one_of(st.none(), st.booleans()),
    geo=st.one_of(st.none(), st.tuples(
        st.floats(min_value=-90.0, max_value=90.0, allow_nan=False),
        st.floats(min_value=-180.0, max_value=180.0, allow_nan=False))),
)


@settings(max_examples=60, deadline=None)
@given(exif=scalar_exif, ocr=st.one_of(st.none(), st.text(max_size=50)))
def test_serialization_round_trips_scalar_fields(exif, ocr):
    record = make_record(exif=exif, ocr_text=ocr)
    decoded = record_from_json(record_to_json(record), line=2)
    assert decoded.exif == record.exif
    assert decoded.ocr_text == record.ocr_text
