"""End-to-end acceptance checks.

One test per release criterion, each printing a single summary line with
the measured numbers next to the required bound. Everything here runs on
generated data; no external datasets or model weights are involved.
"""

import dataclasses
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from gallery_profiler.attention import (
    AggregatorConfig,
    AggregatorModel,
    UserExample,
    attention_weights,
    init_aggregator,
    predict_scores,
    top_k_f1,
    train_aggregator,
    train_average_baseline,
    user_loss,
)
from gallery_profiler.attention import _user_gradients
from gallery_profiler.clustering import cluster_labels
from gallery_profiler.fusion import (
    ImageRepresentation,
    fit_fusion_weights,
    weight_grid,
)
from gallery_profiler.privacy import PrivacyConfig, Reason, Verdict
from gallery_profiler.profiler import ProfileConfig, build_profile
from gallery_profiler.synthetic import build_privacy_fixture
from oracles import (
    TableScorer,
    brute_force_dbscan,
    central_difference_gradient,
    planted_fusion_setup,
    random_clustering_instance,
    relative_error,
)


def test_clustering_matches_brute_force_on_500_random_instances():
    rng = np.random.default_rng(2024)
    started = time.perf_counter()
    checked = 0
    for _ in range(500):
        points, eps, min_samples = random_clustering_instance(rng)
        ours = cluster_labels(points, eps=eps, min_samples=min_samples)
        reference = brute_force_dbscan(points, eps, min_samples)
        assert ours.tolist() == reference
        checked += 1
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    print(f"PASS clustering oracle: {checked} instances identical "
          f"in {elapsed:.1f}s (< 60s)")


def test_aggregator_gradients_match_finite_differences():
    rng = np.random.default_rng(99)
    started = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        k = int(rng.integers(3, 9))
        kt = int(rng.integers(1, min(k, 5)))
        c = int(rng.integers(1, 4))
        m = int(rng.integers(1, 6))
        model = AggregatorModel(
            squeeze=rng.normal(size=(kt, k)),
            query=rng.normal(size=kt),
            head_weights=rng.normal(size=(c, kt)),
            head_biases=rng.normal(size=c),
        )
        example = UserExample(
            features=rng.normal(size=(m, k)),
            targets=rng.integers(0, 2, size=c).astype(float),
        )
        _, grads = _user_gradients(model, example)
        for name in ("squeeze", "query", "head_weights", "head_biases"):
            def loss_at(value, _name=name):
                probe = dataclasses.replace(model, **{_name: value})
                return user_loss(probe, example)

            numeric = central_difference_gradient(
                loss_at, getattr(model, name), step=1e-5)
            worst = max(worst, relative_error(getattr(grads, name),
                                              numeric))
    elapsed = time.perf_counter() - started
    assert worst < 1e-4
    assert elapsed < 10.0
    print(f"PASS gradient check: 20 instances, max relative error "
          f"{worst:.2e} (< 1e-4) in {elapsed:.1f}s (< 10s)")


def test_attention_block_parameter_count_is_k_plus_1_times_kt():
    checked = []
    for k, kt in [(10, 2), (40, 16), (100, 16), (100, 99), (490, 128),
                  (7, 1)]:
        model = init_aggregator(k, 4, AggregatorConfig(squeeze_dim=kt))
        assert model.attention_parameter_count == (k + 1) * kt, (k, kt)
        checked.append((k, kt))
    print(f"PASS parameter count: (K+1)*Kt holds for {len(checked)} "
          f"configurations incl. (100, 16) -> 1616")


def test_attention_weight_invariants_on_1000_draws():
    rng = np.random.default_rng(7)
    worst_sum = 0.0
    for i in range(1000):
        k = int(rng.integers(2, 12))
        kt = int(rng.integers(1, k))
        m = int(rng.integers(1, 12))
        scale = float(rng.choice([1.0, 10.0, 1e3]))
        model = AggregatorModel(
            squeeze=rng.normal(size=(kt, k)),
            query=rng.normal(size=kt) * (scale if i % 2 else 1.0),
            head_weights=np.zeros((1, kt)),
            head_biases=np.zeros(1),
        )
        features = rng.uniform(-scale, scale, size=(m, k))
        weights = attention_weights(model, features)
        assert np.all(weights > 0.0)
        assert np.all(np.isfinite(weights))
        worst_sum = max(worst_sum, abs(float(weights.sum()) - 1.0))
        order = rng.permutation(m)
        permuted = attention_weights(model, features[order])
        assert np.allclose(weights[order], permuted, rtol=0.0, atol=1e-12)
    assert worst_sum <= 1e-9
    print(f"PASS softmax invariants: 1000 draws positive, permutation "
          f"equivariant, worst |sum-1| = {worst_sum:.1e} (<= 1e-9)")


def test_fusion_weight_search_recovers_the_planted_view():
    oracle, rand1, rand2, _, labels = planted_fusion_setup(
        num_samples=200, num_classes=4, margin=0.04, seed=11)
    reps = [ImageRepresentation(f=np.array([float(i)]),
                                p=np.array([float(i)]),
                                o=np.array([float(i)]))
            for i in range(len(labels))]
    best = fit_fusion_weights((oracle, rand1, rand2), reps, labels)
    assert (best.w_f, best.w_p, best.w_o) == (1.0, 0.0, 0.0)
    assert best.accuracy == 1.0

    rng = np.random.default_rng(5)
    table = rng.uniform(size=(50, 4))
    table /= table.sum(axis=1, keepdims=True)
    same = TableScorer(table)
    same_labels = rng.integers(0, 4, size=50)
    expected = float(np.mean(table.argmax(axis=1) == same_labels))
    tied = fit_fusion_weights((same, same, same), reps[:50], same_labels)
    assert tied.accuracy == pytest.approx(expected)

    assert len(list(weight_grid(0.1))) == 66
    print(f"PASS fusion search: planted view recovered at (1,0,0) with "
          f"accuracy 1.0; identical views tie at {expected:.3f}; "
          f"grid(0.1) = 66 points")


def test_privacy_rules_on_the_boundary_fixture():
    gallery = build_privacy_fixture()
    assert len(gallery) == 12
    config = ProfileConfig(privacy=PrivacyConfig(force_all_private=False))
    profile = build_profile(gallery, config)
    decisions = {d.photo_id: d for d in profile.decisions}

    # width-ratio boundary: 0.049 stays public, 0.050 and 0.051 flip
    assert decisions["p_low"].verdict is Verdict.PUBLIC
    assert decisions["p_at"].reasons == {Reason.PORTRAIT}
    assert decisions["p_high"].reasons == {Reason.PORTRAIT}
    # cluster boundary: 5 photos / 2 days private, 4/2 and 5/1 public
    for pid in ("a1", "a2", "a3", "a4", "a5"):
        assert decisions[pid].reasons == {Reason.IMPORTANT_PERSON}
    assert decisions["b1"].verdict is Verdict.PUBLIC
    assert decisions["b2"].verdict is Verdict.PUBLIC
    # video rule: one private frame makes the whole video private
    assert decisions["vid1"].verdict is Verdict.PRIVATE
    assert decisions["vid1"].reasons == {Reason.PORTRAIT}
    print("PASS privacy fixture: 12 records hit every rule boundary "
          "(ratios 0.049/0.050/0.051; clusters 5x2d/5x1d/4x2d; video)")


def test_attention_beats_average_pooling_by_at_least_3_points():
    from gallery_profiler.synthetic import make_synthetic_users

    started = time.perf_counter()
    users = make_synthetic_users(num_users=200, feature_dim=40,
                                 num_categories=8, seed=42)
    train, test = users[:140], users[140:]
    config = AggregatorConfig(squeeze_dim=16, learning_rate=0.5,
                              epochs=150, batch_size=16, seed=1)
    attention = train_aggregator(train, config)
    baseline = train_average_baseline(train, config)

    targets = np.stack([u.targets for u in test])
    attention_f1 = top_k_f1(
        np.stack([predict_scores(attention, u.features) for u in test]),
        targets, k=5)
    baseline_f1 = top_k_f1(
        np.stack([baseline.predict(u.features) for u in test]),
        targets, k=5)
    elapsed = time.perf_counter() - started
    gap = attention_f1 - baseline_f1
    assert gap >= 0.03
    assert elapsed < 120.0
    print(f"PASS synthetic aggregation: top-5 F1 {attention_f1:.4f} vs "
          f"{baseline_f1:.4f} (gap {gap:+.4f} >= 0.03) in {elapsed:.1f}s "
          f"(< 2 min)")


def test_profile_report_is_byte_identical_across_three_runs(tmp_path):
    gallery = tmp_path / "fixture.jsonl"
    config = tmp_path / "config.json"
    config.write_text('{"privacy": {"force_all_private": false}}',
                      encoding="utf-8")

    def run(*args):
        result = subprocess.run(
            [sys.executable, "-m", "gallery_profiler.cli", *args],
            capture_output=True, text=True, cwd=tmp_path)
        assert result.returncode == 0, result.stderr
        return result

    run("gen-synthetic", "privacy-fixture", "--out", str(gallery))

    digests = []
    for attempt in range(3):
        out = tmp_path / f"report_{attempt}"
        run("profile", str(gallery), "--config", str(config),
            "--out", str(out))
        digests.append({p.name: p.read_bytes()
                        for p in sorted(Path(out).iterdir())})
    assert digests[0] == digests[1] == digests[2]
    assert set(digests[0]) == {"report.json", "categories.tsv",
                               "audit.tsv", "groups.png", "demography.png"}
    print("PASS determinism: 3 profile runs produced byte-identical "
          "reports (5 artifacts each)")
