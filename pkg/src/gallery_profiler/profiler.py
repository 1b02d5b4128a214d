"""End-to-end gallery profiling: demography, routing, category counters.

A gallery may carry one record per photo or two (one per model tier).
Demography and routing always run on the on-device view (fast tier when
both exist). Categorization then reads the accurate-tier record for
public photos when one is present, falling back to the fast tier with a
logged warning; private photos never leave the fast tier. Video frames
are routed individually and folded into one decision per video, and each
video contributes to the counters once, with the union of its frames'
categories.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .clustering import cluster_labels, cluster_members
from .faces import ClusteringParams, DemographyReport, analyze_demography
from .privacy import (PrivacyConfig, RoutingDecision, TextSensitivityModel,
                      Verdict, route_photo, route_video)
from .records import Gallery, ImageFeatureRecord, infer_header

logger = logging.getLogger(__name__)

GROUP_NAMES = ("outdoors", "indoors", "sports", "food", "activity",
               "fashion", "musical instruments", "transport", "services",
               "appliances", "toys")

VALID_STRIDES = (3, 4, 5)


@dataclass(frozen=True)
class CategoryMap:
    """Index-to-category tables for scenes and objects, and the group each
    category belongs to."""

    scene_to_category: dict[int, str]
    object_to_category: dict[int, str]
    groups: dict[str, str]

    def __post_init__(self):
        used = set(self.scene_to_category.values()) \
            | set(self.object_to_category.values())
        unmapped = sorted(used - set(self.groups))
        if unmapped:
            raise ValueError(f"categories without a group: {unmapped}")

    def validate_ranges(self, num_scenes: int, num_objects: int) -> None:
        for index in self.scene_to_category:
            if not 0 <= index < num_scenes:
                raise ValueError(f"scene index {index} outside [0, "
                                 f"{num_scenes})")
        for index in self.object_to_category:
            if not 0 <= index < num_objects:
                raise ValueError(f"object index {index} outside [0, "
                                 f"{num_objects})")

    def group_of(self, category: str) -> str:
        return self.groups[category]


def _category_map_from_dict(raw: dict) -> CategoryMap:
    return CategoryMap(
        scene_to_category={int(k): v
                           for k, v in raw.get("scene_to_category",
                                               {}).items()},
        object_to_category={int(k): v
                            for k, v in raw.get("object_to_category",
                                                {}).items()},
        groups=dict(raw.get("groups", {})),
    )


def load_category_map(path: str | Path) -> CategoryMap:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return _category_map_from_dict(raw)


def default_category_map() -> CategoryMap:
    text = resources.files("gallery_profiler").joinpath(
        "data/default_categories.json").read_text(encoding="utf-8")
    return _category_map_from_dict(json.loads(text))


@dataclass(frozen=True)
class CategorizeThresholds:
    scene_top_k: int = 1
    object_min_conf: float = 0.5

    def __post_init__(self):
        if self.scene_top_k < 1:
            raise ValueError("scene_top_k must be at least 1")
        if not 0.0 <= self.object_min_conf <= 1.0:
            raise ValueError("object_min_conf must lie in [0, 1]")


@dataclass(frozen=True)
class ProfileConfig:
    """Everything build_profile needs besides the gallery itself."""

    privacy: PrivacyConfig = PrivacyConfig()
    clustering: ClusteringParams = ClusteringParams()
    thresholds: CategorizeThresholds = CategorizeThresholds()
    category_map: CategoryMap = field(default_factory=default_category_map)
    geo_radius_deg: float = 0.1
    text_model: TextSensitivityModel | None = None


@dataclass(frozen=True)
class GeoCluster:
    label: int
    count: int
    center_lat: float
    center_lon: float


@dataclass(frozen=True)
class UserProfile:
    category_counters: dict[str, int]
    group_histogram: dict[str, int]
    top_locations: tuple[GeoCluster, ...]
    demography: DemographyReport
    routing_stats: tuple[int, int]  # (num_private, num_public)
    decisions: tuple[RoutingDecision, ...]  # one per photo, one per video


def select_video_frames(frame_indices: Sequence[int], stride: int = 4,
                        ) -> list[int]:
    """Every stride-th entry of the list, starting with the first."""
    if stride not in VALID_STRIDES:
        raise ValueError(f"stride must be one of {VALID_STRIDES}")
    return list(frame_indices[::stride])


def categorize_record(record: ImageFeatureRecord, category_map: CategoryMap,
                      thresholds: CategorizeThresholds = CategorizeThresholds(),
                      ) -> set[str]:
    """Categories of the top scenes plus every object over the confidence
    threshold. Scene ties resolve to the lowest index."""
    categories: set[str] = set()
    order = np.argsort(-record.scene_scores, kind="stable")
    for scene_index in order[:thresholds.scene_top_k]:
        category = category_map.scene_to_category.get(int(scene_index))
        if category is not None:
            categories.add(category)
    for object_index, confidence in enumerate(record.object_confidences):
        if confidence >= thresholds.object_min_conf:
            category = category_map.object_to_category.get(object_index)
            if category is not None:
                categories.add(category)
    return categories


def _base_view(records_by_tier: Mapping[str, ImageFeatureRecord],
               ) -> ImageFeatureRecord:
    # The on-device record: fast tier when present, else whatever exists.
    return records_by_tier.get("fast") or records_by_tier["accurate"]


def _analysis_view(records_by_tier: Mapping[str, ImageFeatureRecord],
                   decision: RoutingDecision) -> ImageFeatureRecord:
    if decision.verdict is Verdict.PUBLIC:
        accurate = records_by_tier.get("accurate")
        if accurate is not None:
            return accurate
        fast = records_by_tier["fast"]
        logger.warning(
            "photo %s routed public but has no accurate-tier record; "
            "using the fast tier", fast.photo_id)
        return fast
    return _base_view(records_by_tier)


def build_profile(gallery: Sequence[ImageFeatureRecord],
                  config: ProfileConfig = ProfileConfig()) -> UserProfile:
    """Run the full pipeline over a validated gallery. Deterministic for
    identical inputs and config."""
    header = gallery.header if isinstance(gallery, Gallery) \
        else infer_header(gallery)
    config.category_map.validate_ranges(header.num_scenes,
                                        header.num_objects)

    photos: dict[str, dict[str, ImageFeatureRecord]] = {}
    videos: dict[str, dict[int, dict[str, ImageFeatureRecord]]] = {}
    photo_order: list[str] = []
    video_order: list[str] = []
    for record in gallery:
        if record.media_kind == "video_frame":
            frames = videos.setdefault(record.video_id, {})
            if record.video_id not in video_order:
                video_order.append(record.video_id)
            frames.setdefault(record.frame_index, {})[record.tier] = record
        else:
            if record.photo_id not in photos:
                photo_order.append(record.photo_id)
            photos.setdefault(record.photo_id, {})[record.tier] = record

    base_records = [_base_view(photos[pid]) for pid in photo_order]
    base_frames = {
        video_id: [_base_view(frames[idx]) for idx in sorted(frames)]
        for video_id, frames in videos.items()
    }
    demography_input = Gallery(
        base_records + [r for vid in video_order for r in base_frames[vid]],
        header)
    demography = analyze_demography(demography_input, config.clustering)

    decisions: list[RoutingDecision] = []
    chosen_records: list[tuple[ImageFeatureRecord, ...]] = []
    for photo_id in photo_order:
        decision = route_photo(_base_view(photos[photo_id]), demography,
                               demography.face_labels, config.privacy,
                               config.text_model)
        decisions.append(decision)
        chosen_records.append((_analysis_view(photos[photo_id], decision),))
    for video_id in video_order:
        frame_decisions = [
            route_photo(frame, demography, demography.face_labels,
                        config.privacy, config.text_model)
            for frame in base_frames[video_id]
        ]
        decision = route_video(frame_decisions, video_id=video_id)
        decisions.append(decision)
        frames = videos[video_id]
        chosen_records.append(tuple(
            _analysis_view(frames[idx], decision) for idx in sorted(frames)))

    category_counters: dict[str, int] = {}
    for records in chosen_records:
        categories: set[str] = set()
        for record in records:
            categories |= categorize_record(record, config.category_map,
                                            config.thresholds)
        for category in sorted(categories):
            category_counters[category] = category_counters.get(category,
                                                                0) + 1

    group_histogram: dict[str, int] = {}
    for category, count in category_counters.items():
        group = config.category_map.group_of(category)
        group_histogram[group] = group_histogram.get(group, 0) + count

    num_private = sum(d.is_private for d in decisions)
    return UserProfile(
        category_counters=category_counters,
        group_histogram=group_histogram,
        top_locations=tuple(geo_locations(demography_input,
                                          config.geo_radius_deg)),
        demography=demography,
        routing_stats=(num_private, len(decisions) - num_private),
        decisions=tuple(decisions),
    )


def geo_locations(gallery: Iterable[ImageFeatureRecord],
                  radius_deg: float = 0.1) -> list[GeoCluster]:
    """Density clusters of the records' geo tags, largest first. Records
    without coordinates are skipped; isolated points are dropped."""
    points = [record.exif.geo for record in gallery
              if record.exif.geo is not None]
    if not points:
        return []
    coords = np.asarray(points, dtype=float)
    labels = cluster_labels(coords, eps=radius_deg, min_samples=2)
    clusters = []
    for label, members in sorted(cluster_members(labels).items()):
        center = coords[members].mean(axis=0)
        clusters.append(GeoCluster(label=int(label), count=len(members),
                                   center_lat=float(center[0]),
                                   center_lon=float(center[1])))
    clusters.sort(key=lambda c: (-c.count, c.label))
    return clusters
