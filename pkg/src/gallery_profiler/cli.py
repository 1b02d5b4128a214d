"""Command-line entry point.

Subcommands mirror the library: `profile` runs the whole pipeline and
writes a report directory (JSON + TSV tables + PNG charts), `demography`
and `route` expose the two analysis stages, `train-fusion`/`eval-fusion`
and `train-aggregator`/`predict-profile` train and apply the two model
kinds, and `gen-synthetic` writes the seeded fixture/benchmark inputs.

Exit codes: 0 on success, 1 when the input fails validation, 2 on I/O
problems (missing or unwritable files).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import attention, fusion, synthetic
from .faces import ClusteringParams, analyze_demography, demography_to_dict
from .privacy import PrivacyConfig
from .profiler import (CategorizeThresholds, ProfileConfig, build_profile,
                       default_category_map, load_category_map)
from .records import Gallery, GalleryFormatError, load_gallery, write_gallery
from .report import render_demography_table, write_report


def _load_config(path: str | None, force_private: bool | None,
                 ) -> ProfileConfig:
    raw = {}
    if path is not None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    privacy_raw = dict(raw.get("privacy", {}))
    if force_private is not None:
        privacy_raw["force_all_private"] = force_private
    category_map = default_category_map()
    if "category_map" in raw:
        category_map = load_category_map(raw["category_map"])
    return ProfileConfig(
        privacy=PrivacyConfig(**privacy_raw),
        clustering=ClusteringParams(**raw.get("clustering", {})),
        thresholds=CategorizeThresholds(**raw.get("thresholds", {})),
        category_map=category_map,
        geo_radius_deg=float(raw.get("geo_radius_deg", 0.1)),
    )


def _representations(gallery: Gallery) -> list[fusion.ImageRepresentation]:
    return [fusion.representation_of(record) for record in gallery]


def _labeled(gallery: Gallery, labels_path: str,
             ) -> tuple[list[fusion.ImageRepresentation], list[int]]:
    labels = synthetic.load_labels_file(labels_path)
    missing = [r.photo_id for r in gallery if r.photo_id not in labels]
    if missing:
        raise ValueError(f"labels file lacks entries for {missing[:5]}"
                         + ("..." if len(missing) > 5 else ""))
    return _representations(gallery), [labels[r.photo_id] for r in gallery]


def _cmd_profile(args) -> int:
    config = _load_config(args.config, True if args.force_private else None)
    gallery = load_gallery(args.gallery)
    profile = build_profile(gallery, config)
    out_dir = write_report(profile, args.out,
                           category_groups=config.category_map.groups)
    num_private, num_public = profile.routing_stats
    print(f"profiled {len(gallery)} records: {num_private} private, "
          f"{num_public} public")
    ranked = sorted(profile.category_counters.items(),
                    key=lambda item: (-item[1], item[0]))
    for category, count in ranked[:args.top_k]:
        print(f"  {category}: {count}")
    print(f"report written to {out_dir}")
    return 0


def _cmd_demography(args) -> int:
    gallery = load_gallery(args.gallery)
    params = ClusteringParams(eps=args.eps, min_samples=args.min_samples)
    report = analyze_demography(gallery, params)
    print(render_demography_table(report))
    if args.out:
        Path(args.out).write_text(
            json.dumps(demography_to_dict(report), indent=2, sort_keys=True)
            + "\n", encoding="utf-8")
    return 0


def _cmd_route(args) -> int:
    config = _load_config(args.config, True if args.force_private else None)
    gallery = load_gallery(args.gallery)
    profile = build_profile(gallery, config)
    lines = ["photo_id\tverdict\treasons"]
    for decision in profile.decisions:
        reasons = ",".join(sorted(r.value for r in decision.reasons))
        lines.append(f"{decision.photo_id}\t{decision.verdict.value}"
                     f"\t{reasons}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_train_fusion(args) -> int:
    train_reps, train_labels = _labeled(load_gallery(args.train),
                                        args.train_labels)
    val_reps, val_labels = _labeled(load_gallery(args.val), args.val_labels)
    config = fusion.TrainConfig(learning_rate=args.learning_rate,
                                iterations=args.iterations, seed=args.seed)
    model = fusion.train_fusion_model(train_reps, train_labels, val_reps,
                                      val_labels, grid_step=args.grid_step,
                                      config=config)
    fusion.save_fusion_model(model, args.out)
    accuracy = fusion.evaluate_fused(model, val_reps, val_labels)
    w_f, w_p, w_o = model.weights
    print(f"weights: w_f={w_f:.2f} w_p={w_p:.2f} w_o={w_o:.2f}; "
          f"validation accuracy {accuracy:.4f}")
    print(f"model written to {args.out}")
    return 0


def _cmd_eval_fusion(args) -> int:
    model = fusion.load_fusion_model(args.model)
    reps, labels = _labeled(load_gallery(args.gallery), args.labels)
    accuracy = fusion.evaluate_fused(model, reps, labels)
    print(f"accuracy {accuracy:.4f} on {len(reps)} images")
    return 0


def _cmd_train_aggregator(args) -> int:
    users = synthetic.load_users_file(args.users)
    config = attention.AggregatorConfig(
        squeeze_dim=args.squeeze_dim, learning_rate=args.learning_rate,
        epochs=args.epochs, batch_size=args.batch_size, seed=args.seed,
        fixed_set_size=args.fixed_set_size)
    model = attention.train_aggregator(users, config)
    attention.save_aggregator(model, args.out)
    print(f"trained on {len(users)} users "
          f"(K={model.feature_dim}, Kt={model.squeeze_dim}, "
          f"C={model.num_categories}); model written to {args.out}")
    return 0


def _cmd_predict_profile(args) -> int:
    model = attention.load_aggregator(args.model)
    if args.users:
        feature_sets = [u.features for u in
                        synthetic.load_users_file(args.users)]
    else:
        gallery = load_gallery(args.gallery)
        features = np.vstack([fusion.representation_of(r).concat()
                              for r in gallery])
        feature_sets = [features]
    lines = ["user\ttop_categories\tscores"]
    for index, features in enumerate(feature_sets):
        scores, top = attention.predict_user_profile(model, features,
                                                     args.top_k)
        top_text = ",".join(str(c) for c in top)
        score_text = ",".join(f"{scores[c]:.4f}" for c in top)
        lines.append(f"{index}\t{top_text}\t{score_text}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_gen_synthetic(args) -> int:
    kind = args.kind
    out = Path(args.out)
    if kind == "privacy-fixture":
        gallery = synthetic.build_privacy_fixture()
        write_gallery(gallery, out, gallery.header)
        print(f"wrote {len(gallery)} fixture records to {out}")
    elif kind == "gallery":
        gallery = synthetic.make_random_gallery(
            num_photos=args.num_photos, seed=args.seed)
        write_gallery(gallery, out, gallery.header)
        print(f"wrote {len(gallery)} records to {out}")
    elif kind == "users":
        users = synthetic.make_synthetic_users(
            num_users=args.num_users, feature_dim=args.features,
            num_categories=args.categories, seed=args.seed)
        synthetic.write_users_file(users, out)
        print(f"wrote {len(users)} users to {out}")
    elif kind == "fusion":
        out.mkdir(parents=True, exist_ok=True)
        train_reps, train_labels, val_reps, val_labels = \
            synthetic.make_fusion_dataset(seed=args.seed)
        for name, reps, labels in (("train", train_reps, train_labels),
                                   ("val", val_reps, val_labels)):
            gallery = synthetic.fusion_gallery(reps, name)
            write_gallery(gallery, out / f"{name}.jsonl", gallery.header)
            synthetic.write_labels_file(labels,
                                        [r.photo_id for r in gallery],
                                        out / f"{name}_labels.tsv")
        print(f"wrote fusion train/val galleries and labels to {out}")
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown kind {kind!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gallery-profiler",
        description="Privacy-aware photo gallery profiling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="run the full pipeline on a gallery")
    p.add_argument("gallery")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--force-private", action="store_true",
                   help="route every photo private (overrides config)")
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--out", default="profile_report",
                   help="report output directory")
    p.set_defaults(func=_cmd_profile)

    p = sub.add_parser("demography", help="cluster faces and fuse attributes")
    p.add_argument("gallery")
    p.add_argument("--eps", type=float, default=0.9)
    p.add_argument("--min-samples", type=int, default=2)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=_cmd_demography)

    p = sub.add_parser("route", help="print per-photo routing decisions")
    p.add_argument("gallery")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--force-private", action="store_true")
    p.add_argument("--out", help="write the audit TSV here")
    p.set_defaults(func=_cmd_route)

    p = sub.add_parser("train-fusion",
                       help="train per-view classifiers and fusion weights")
    p.add_argument("--train", required=True, help="training gallery file")
    p.add_argument("--train-labels", required=True)
    p.add_argument("--val", required=True, help="validation gallery file")
    p.add_argument("--val-labels", required=True)
    p.add_argument("--grid-step", type=float, default=0.1)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=_cmd_train_fusion)

    p = sub.add_parser("eval-fusion", help="accuracy of a fusion model")
    p.add_argument("--model", required=True)
    p.add_argument("--gallery", required=True)
    p.add_argument("--labels", required=True)
    p.set_defaults(func=_cmd_eval_fusion)

    p = sub.add_parser("train-aggregator",
                       help="train the attention aggregation model")
    p.add_argument("--users", required=True, help="users JSONL file")
    p.add_argument("--squeeze-dim", type=int, default=128)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fixed-set-size", type=int, default=10)
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=_cmd_train_aggregator)

    p = sub.add_parser("predict-profile",
                       help="score categories for user galleries")
    p.add_argument("--model", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--users", help="users JSONL file")
    group.add_argument("--gallery", help="gallery file (one user)")
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--out", help="write the TSV here")
    p.set_defaults(func=_cmd_predict_profile)

    p = sub.add_parser("gen-synthetic", help="write seeded synthetic inputs")
    p.add_argument("kind", choices=("privacy-fixture", "gallery", "users",
                                    "fusion"))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-photos", type=int, default=20)
    p.add_argument("--num-users", type=int, default=200)
    p.add_argument("--features", type=int, default=40)
    p.add_argument("--categories", type=int, default=8)
    p.set_defaults(func=_cmd_gen_synthetic)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GalleryFormatError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
