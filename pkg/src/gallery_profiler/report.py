"""Profile report rendering: JSON + TSV tables + PNG bar charts.

Output is fully deterministic for a given profile: JSON keys are sorted,
tables have a fixed sort order, and figures are drawn on the Agg backend
with fixed geometry and no timestamps, so identical profiles produce
byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .faces import AGE_BUCKET_EDGES, demography_to_dict
from .profiler import UserProfile
from .records import GENDER_LABELS

REPORT_JSON = "report.json"
CATEGORIES_TSV = "categories.tsv"
AUDIT_TSV = "audit.tsv"
GROUPS_PNG = "groups.png"
DEMOGRAPHY_PNG = "demography.png"

_FIGURE_DPI = 100


def profile_to_dict(profile: UserProfile) -> dict:
    num_private, num_public = profile.routing_stats
    return {
        "category_counters": dict(sorted(profile.category_counters.items())),
        "group_histogram": dict(sorted(profile.group_histogram.items())),
        "top_locations": [
            {
                "label": cluster.label,
                "count": cluster.count,
                "center_lat": round(cluster.center_lat, 6),
                "center_lon": round(cluster.center_lon, 6),
            }
            for cluster in profile.top_locations
        ],
        "demography": demography_to_dict(profile.demography),
        "routing": {
            "num_private": num_private,
            "num_public": num_public,
        },
    }


def write_report(profile: UserProfile, out_dir: str | Path,
                 category_groups: dict[str, str] | None = None) -> Path:
    """Write every report artifact into out_dir and return the directory."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    payload = profile_to_dict(profile)
    (out_dir / REPORT_JSON).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")

    lines = ["category\tgroup\tcount"]
    ranked = sorted(profile.category_counters.items(),
                    key=lambda item: (-item[1], item[0]))
    for category, count in ranked:
        group = (category_groups or {}).get(category, "")
        lines.append(f"{category}\t{group}\t{count}")
    (out_dir / CATEGORIES_TSV).write_text("\n".join(lines) + "\n",
                                          encoding="utf-8")

    lines = ["photo_id\tverdict\treasons"]
    for decision in profile.decisions:
        reasons = ",".join(sorted(r.value for r in decision.reasons))
        lines.append(f"{decision.photo_id}\t{decision.verdict.value}"
                     f"\t{reasons}")
    (out_dir / AUDIT_TSV).write_text("\n".join(lines) + "\n",
                                     encoding="utf-8")

    _draw_group_histogram(profile, out_dir / GROUPS_PNG)
    _draw_demography(profile, out_dir / DEMOGRAPHY_PNG)
    return out_dir


def _save(figure, path: Path) -> None:
    # Pin the metadata so the PNG bytes depend only on the drawn content.
    figure.savefig(path, dpi=_FIGURE_DPI,
                   metadata={"Software": "gallery-profiler"})
    plt.close(figure)


def _draw_group_histogram(profile: UserProfile, path: Path) -> None:
    items = sorted(profile.group_histogram.items(),
                   key=lambda item: (-item[1], item[0]))
    figure, axes = plt.subplots(figsize=(8, 4.5))
    if items:
        names = [name for name, _ in items]
        counts = [count for _, count in items]
        axes.barh(range(len(items)), counts, color="#4878a8")
        axes.set_yticks(range(len(items)))
        axes.set_yticklabels(names)
        axes.invert_yaxis()
    axes.set_xlabel("photos")
    axes.set_title("Interest groups")
    figure.tight_layout()
    _save(figure, path)


def _draw_demography(profile: UserProfile, path: Path) -> None:
    buckets = [f"{low}-{low + 9}" for low in AGE_BUCKET_EDGES[:-1]]
    buckets.append(f"{AGE_BUCKET_EDGES[-1]}+")
    histogram = profile.demography.histogram

    figure, axes = plt.subplots(figsize=(8, 4.5))
    bottom = [0] * len(buckets)
    colors = {"male": "#4878a8", "female": "#d1605e"}
    for gender in GENDER_LABELS:
        counts = [histogram.get((gender, bucket), 0) for bucket in buckets]
        axes.bar(range(len(buckets)), counts, bottom=bottom,
                 color=colors[gender], label=gender)
        bottom = [b + c for b, c in zip(bottom, counts)]
    axes.set_xticks(range(len(buckets)))
    axes.set_xticklabels(buckets, rotation=45)
    axes.set_ylabel("people")
    axes.set_title("People by age and gender")
    axes.legend()
    figure.tight_layout()
    _save(figure, path)


def render_demography_table(profile_or_report) -> str:
    """Small fixed-width summary of the clusters for terminal output."""
    report = getattr(profile_or_report, "demography", profile_or_report)
    lines = [f"{'cluster':>7}  {'size':>4}  {'days':>4}  {'selfies':>7}  "
             f"{'gender':<6}  {'age':>5}  ethnicity"]
    for cluster in report.clusters:
        lines.append(
            f"{cluster.cluster_id:>7}  {cluster.size:>4}  "
            f"{cluster.distinct_days:>4}  {cluster.selfie_count:>7}  "
            f"{cluster.fused_gender:<6}  {cluster.fused_age:>5.1f}  "
            f"{cluster.fused_ethnicity}")
    if report.owner is not None:
        lines.append(f"owner: cluster {report.owner}")
    else:
        lines.append(f"owner: undetermined ({report.status})")
    return "\n".join(lines)
