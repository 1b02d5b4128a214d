"""Identity clustering over face observations and per-cluster demography.

Faces from the whole gallery are clustered by their identity embeddings;
each cluster then gets fused attributes (gender, ethnicity, age, birth
year) by averaging member score vectors, a selfie count, and the number
of distinct calendar days its photos span. The gallery owner is the
cluster holding the unique maximal positive selfie count; when that
cluster does not exist the report carries a status string instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .clustering import NOISE, cluster_labels, cluster_members
from .records import GENDER_LABELS, Gallery, ImageFeatureRecord, infer_header

OWNER_UNRESOLVED_STATUS = (
    "Photos in the gallery are not enough to perform demography analysis")

# Decade buckets for the cluster histogram; the last one is open-ended.
AGE_BUCKET_EDGES = tuple(range(0, 90, 10))


@dataclass(frozen=True)
class ClusteringParams:
    """Density-clustering knobs: neighborhood radius and minimal cluster size.

    The default eps suits Euclidean distance between L2-normalized
    embeddings; see the README for how to calibrate it against a labeled
    same-person/different-person pair set.
    """

    eps: float = 0.9
    min_samples: int = 2

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")
        if self.min_samples < 1:
            raise ValueError("min_samples must be at least 1")


@dataclass(frozen=True)
class ClusterMember:
    photo_id: str
    face_index: int
    timestamp: datetime | None


@dataclass(frozen=True)
class FaceCluster:
    """One recurring identity with attributes fused across its faces."""

    cluster_id: int
    members: tuple[ClusterMember, ...]
    fused_age: float
    fused_birth_year: float | None  # None when no member has a timestamp
    fused_gender: str
    fused_gender_confidence: float
    fused_ethnicity: str
    fused_ethnicity_confidence: float
    selfie_count: int
    distinct_days: int

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class DemographyReport:
    clusters: tuple[FaceCluster, ...]
    histogram: dict[tuple[str, str], int]  # (gender, age bucket) -> clusters
    owner: int | None
    status: str | None
    # label per face, keyed by (photo_id, face index); -1 marks noise
    face_labels: dict[tuple[str, int], int]

    def cluster_by_id(self, cluster_id: int) -> FaceCluster:
        for cluster in self.clusters:
            if cluster.cluster_id == cluster_id:
                return cluster
        raise KeyError(cluster_id)


def age_bucket(age: float) -> str:
    """Decade label for an age: "0-9", "10-19", ..., "80+"."""
    if age >= AGE_BUCKET_EDGES[-1]:
        return f"{AGE_BUCKET_EDGES[-1]}+"
    low = int(age // 10) * 10
    low = max(low, 0)
    return f"{low}-{low + 9}"


def expected_age(age_scores: np.ndarray, bin_midpoints: np.ndarray) -> float:
    """Score-weighted mean of the age-bin midpoints."""
    return float(np.dot(age_scores, bin_midpoints))


def _ethnicity_name(index: int, labels: tuple[str, ...] | None) -> str:
    if labels is not None and index < len(labels):
        return labels[index]
    return f"ethnicity_{index}"


def analyze_demography(gallery: list[ImageFeatureRecord],
                       params: ClusteringParams = ClusteringParams(),
                       ) -> DemographyReport:
    """Cluster every face in the gallery and fuse per-cluster attributes.

    Deterministic: faces are gathered in record order, face order; cluster
    ids follow discovery order. A gallery without faces yields an empty
    report with the unresolved-owner status.
    """
    header = gallery.header if isinstance(gallery, Gallery) \
        else infer_header(gallery)
    midpoints = header.age_bin_midpoints()

    embeddings: list[np.ndarray] = []
    keys: list[tuple[str, int]] = []
    timestamps: list[datetime | None] = []
    selfies: list[bool] = []
    ages: list[np.ndarray] = []
    genders: list[np.ndarray] = []
    ethnicities: list[np.ndarray] = []
    for record in gallery:
        for face_index, face in enumerate(record.faces):
            embeddings.append(face.embedding)
            keys.append((record.photo_id, face_index))
            timestamps.append(record.exif.timestamp)
            selfies.append(bool(record.exif.is_selfie))
            ages.append(face.age_scores)
            genders.append(face.gender_scores)
            ethnicities.append(face.ethnicity_scores)

    if not embeddings:
        return DemographyReport(clusters=(), histogram={}, owner=None,
                                status=OWNER_UNRESOLVED_STATUS, face_labels={})

    labels = cluster_labels(np.vstack(embeddings), params.eps,
                            params.min_samples)
    face_labels = {key: int(label) for key, label in zip(keys, labels)}

    clusters: list[FaceCluster] = []
    for cluster_id, member_indices in sorted(cluster_members(labels).items()):
        members = tuple(ClusterMember(keys[i][0], keys[i][1], timestamps[i])
                        for i in member_indices)
        mean_age_scores = np.mean([ages[i] for i in member_indices], axis=0)
        mean_gender = np.mean([genders[i] for i in member_indices], axis=0)
        mean_ethnicity = np.mean([ethnicities[i] for i in member_indices],
                                 axis=0)
        fused_age = expected_age(mean_age_scores, midpoints)

        birth_years = [timestamps[i].year - expected_age(ages[i], midpoints)
                       for i in member_indices if timestamps[i] is not None]
        gender_index = int(np.argmax(mean_gender))
        ethnicity_index = int(np.argmax(mean_ethnicity))
        days = {ts.astimezone(timezone.utc).date()
                for i in member_indices
                if (ts := timestamps[i]) is not None}
        clusters.append(FaceCluster(
            cluster_id=int(cluster_id),
            members=members,
            fused_age=fused_age,
            fused_birth_year=float(np.mean(birth_years)) if birth_years
            else None,
            fused_gender=GENDER_LABELS[gender_index],
            fused_gender_confidence=float(mean_gender[gender_index]),
            fused_ethnicity=_ethnicity_name(ethnicity_index,
                                            header.ethnicity_labels),
            fused_ethnicity_confidence=float(mean_ethnicity[ethnicity_index]),
            selfie_count=sum(selfies[i] for i in member_indices),
            distinct_days=len(days),
        ))

    histogram: dict[tuple[str, str], int] = {}
    for cluster in clusters:
        key = (cluster.fused_gender, age_bucket(cluster.fused_age))
        histogram[key] = histogram.get(key, 0) + 1

    owner = _resolve_owner(clusters)
    return DemographyReport(
        clusters=tuple(clusters),
        histogram=histogram,
        owner=owner,
        status=None if owner is not None else OWNER_UNRESOLVED_STATUS,
        face_labels=face_labels,
    )


def _resolve_owner(clusters: list[FaceCluster]) -> int | None:
    # Owner = the cluster with the unique maximal positive selfie count.
    # Zero selfies everywhere or a tie leaves the owner undetermined.
    best = max((c.selfie_count for c in clusters), default=0)
    if best <= 0:
        return None
    holders = [c.cluster_id for c in clusters if c.selfie_count == best]
    if len(holders) != 1:
        return None
    return holders[0]


def important_clusters(report: DemographyReport, min_photos: int = 5,
                       min_days: int = 2) -> set[int]:
    """Clusters large and temporally spread enough to mark photos private:
    at least min_photos member faces spanning at least min_days dates."""
    return {cluster.cluster_id for cluster in report.clusters
            if cluster.size >= min_photos
            and cluster.distinct_days >= min_days}


def demography_to_dict(report: DemographyReport) -> dict:
    """JSON-ready view of the report (used by the text report writer)."""
    histogram: dict[str, dict[str, int]] = {}
    for (gender, bucket), count in sorted(report.histogram.items()):
        histogram.setdefault(gender, {})[bucket] = count
    return {
        "clusters": [
            {
                "cluster_id": c.cluster_id,
                "size": c.size,
                "members": [
                    {
                        "photo_id": m.photo_id,
                        "face_index": m.face_index,
                        "timestamp": m.timestamp.isoformat()
                        if m.timestamp is not None else None,
                    }
                    for m in c.members
                ],
                "age": round(c.fused_age, 6),
                "birth_year": round(c.fused_birth_year, 6)
                if c.fused_birth_year is not None else None,
                "gender": c.fused_gender,
                "gender_confidence": round(c.fused_gender_confidence, 6),
                "ethnicity": c.fused_ethnicity,
                "ethnicity_confidence": round(c.fused_ethnicity_confidence, 6),
                "selfie_count": c.selfie_count,
                "distinct_days": c.distinct_days,
            }
            for c in report.clusters
        ],
        "histogram": histogram,
        "owner": report.owner,
        "status": report.status,
    }
