"""Report artifacts: JSON payload, delimited tables, rendered figures."""

import json

from gallery_profiler.profiler import build_profile, default_category_map
from gallery_profiler.report import (
    AUDIT_TSV,
    CATEGORIES_TSV,
    DEMOGRAPHY_PNG,
    GROUPS_PNG,
    REPORT_JSON,
    profile_to_dict,
    render_demography_table,
    write_report,
)

ARTIFACTS = (REPORT_JSON, CATEGORIES_TSV, AUDIT_TSV, GROUPS_PNG,
             DEMOGRAPHY_PNG)


def test_report_writes_every_artifact(tmp_path, fixture_gallery,
                                      rule_config):
    profile = build_profile(fixture_gallery, rule_config)
    out = write_report(profile, tmp_path / "report",
                       category_groups=default_category_map().groups)
    for name in ARTIFACTS:
        assert (out / name).is_file(), name

    payload = json.loads((out / REPORT_JSON).read_text(encoding="utf-8"))
    assert payload["routing"] == {"num_private": 8, "num_public": 3}
    assert payload["category_counters"]

    categories = (out / CATEGORIES_TSV).read_text(encoding="utf-8")
    lines = categories.splitlines()
    assert lines[0] == "category\tgroup\tcount"
    counts = [int(line.split("\t")[2]) for line in lines[1:]]
    assert counts == sorted(counts, reverse=True)

    audit = (out / AUDIT_TSV).read_text(encoding="utf-8").splitlines()
    assert audit[0] == "photo_id\tverdict\treasons"
    assert len(audit) == 1 + len(profile.decisions)
    assert any(line.startswith("p_at\tprivate\tportrait")
               for line in audit)


def test_report_bytes_are_stable_across_runs(tmp_path, fixture_gallery,
                                             rule_config):
    profile = build_profile(fixture_gallery, rule_config)
    groups = default_category_map().groups
    first = write_report(profile, tmp_path / "one", category_groups=groups)
    second = write_report(build_profile(fixture_gallery, rule_config),
                          tmp_path / "two", category_groups=groups)
    for name in ARTIFACTS:
        assert (first / name).read_bytes() == (second / name).read_bytes(), \
            name


def test_profile_dict_is_json_serializable(fixture_gallery, rule_config):
    profile = build_profile(fixture_gallery, rule_config)
    text = json.dumps(profile_to_dict(profile), sort_keys=True)
    assert "routing" in text


def test_demography_table_mentions_the_owner(fixture_gallery, rule_config):
    profile = build_profile(fixture_gallery, rule_config)
    table = render_demography_table(profile)
    assert "owner" in table.lower()
    assert "male" in table
