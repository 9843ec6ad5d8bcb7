"""Command-line driver: ensemble generation, preprocessing, matching, evaluation, serving."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from surfpatch.flow import (
    FIELD_KINDS,
    EnsembleParams,
    TraceParams,
    generate_ensemble,
    make_field,
)
from surfpatch.mesh import load_obj
from surfpatch.pipeline import (
    PipelineConfig,
    cluster_surfaces,
    delta_from_slider,
    embed_patches,
    evaluate_matching,
    match_patches,
    patch_tree,
    preprocess_surface,
    segment_patches,
    vertex_tree,
)
from surfpatch.store import FeatureStore, StoreError


def _positive_int(value: str) -> int:
    n = int(value)
    if n <= 0:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return n


def _slider(value: str) -> float:
    x = float(value)
    if not 0.0 <= x <= 100.0:
        raise argparse.ArgumentTypeError(f"delta sliders live in [0, 100], got {value}")
    return x


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="surfpatch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic stream-surface ensemble")
    gen.add_argument("--field", required=True, choices=(*FIELD_KINDS, "custom"))
    gen.add_argument("--expression", help="velocity expression for --field custom, e.g. '(-y, x, 0)'")
    gen.add_argument("--count", type=_positive_int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.add_argument("--max-steps", type=_positive_int, default=500)
    gen.add_argument("--front-samples", type=_positive_int, default=EnsembleParams.front_samples)
    gen.add_argument("--min-vertices", type=_positive_int, default=EnsembleParams.min_vertices)
    gen.add_argument("--json", action="store_true")

    pre = sub.add_parser("preprocess", help="build a feature store from an OBJ directory")
    pre.add_argument("--in", dest="in_dir", required=True)
    pre.add_argument("--store", required=True)
    pre.add_argument("--epsilon", type=float, default=0.5)
    pre.add_argument("--d", type=_positive_int, default=128)
    pre.add_argument("--k", type=_positive_int, default=128)
    pre.add_argument("--min-vertices", type=_positive_int, default=1200)
    pre.add_argument("--seed", type=int, default=0)
    pre.add_argument("--jobs", type=_positive_int, default=None,
                     help="worker processes (default: SURFPATCH_JOBS or 1)")
    pre.add_argument("--json", action="store_true")

    match = sub.add_parser("match", help="match one patch within a surface selection")
    match.add_argument("--store", required=True)
    match.add_argument("--surface", required=True)
    match.add_argument("--patch", type=int, required=True)
    match.add_argument("--delta1", type=_slider, default=50.0)
    match.add_argument("--delta2", type=_slider, default=50.0)
    match.add_argument("--with", dest="extra", default="",
                       help="comma-separated additional surface ids")
    match.add_argument("--feature-mode", choices=("signature_profile", "umap_aggregate"),
                       default="signature_profile")
    match.add_argument("--json", action="store_true")

    ev = sub.add_parser("evaluate", help="matched-vs-random metric report")
    ev.add_argument("--store", required=True)
    ev.add_argument("--queries", type=_positive_int, default=100)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--delta1", type=_slider, default=50.0)
    ev.add_argument("--delta2", type=_slider, default=50.0)
    ev.add_argument("--feature-mode", choices=("signature_profile", "umap_aggregate"),
                    default="signature_profile")
    ev.add_argument("--out", help="write the JSON report here as well")
    ev.add_argument("--json", action="store_true")

    cl = sub.add_parser("cluster", help="cluster surfaces and persist gallery order")
    cl.add_argument("--store", required=True)
    cl.add_argument("--delta1", type=_slider, default=50.0)
    cl.add_argument("--delta-s", type=_slider, default=50.0)
    cl.add_argument("--feature-mode", choices=("signature_profile", "umap_aggregate"),
                    default="signature_profile")
    cl.add_argument("--seed", type=int, default=0)
    cl.add_argument("--json", action="store_true")

    srv = sub.add_parser("serve", help="run the HTTP query service")
    srv.add_argument("--store", action="append", required=True,
                     help="feature store directory (repeatable)")
    srv.add_argument("--port", type=int, default=8080)
    srv.add_argument("--host", default="127.0.0.1")

    return parser


def _echo(payload: dict, as_json: bool, text: str) -> None:
    print(json.dumps(payload, indent=1) if as_json else text)


def cmd_gen(args) -> int:
    field = make_field(args.field, expression=args.expression)
    params = EnsembleParams(
        trace=TraceParams(max_steps=args.max_steps),
        front_samples=args.front_samples,
        min_vertices=args.min_vertices,
    )
    manifest = generate_ensemble(field, args.count, args.seed, args.out, params)
    _echo(
        {"manifest": str(manifest), "count": args.count, "field": args.field},
        args.json,
        str(manifest),
    )
    return 0


def _preprocess_one(task):
    path_str, surface_id, config = task
    timings: dict = {}
    mesh = load_obj(path_str)
    record = preprocess_surface(mesh, surface_id, config, timings=timings)
    return record, timings


def cmd_preprocess(args) -> int:
    in_dir = Path(args.in_dir)
    obj_paths = sorted(in_dir.glob("*.obj"))
    if not obj_paths:
        print(f"no .obj files in {in_dir}", file=sys.stderr)
        return 1
    config = PipelineConfig(
        epsilon=args.epsilon,
        min_vertices=args.min_vertices,
        d=args.d,
        k=args.k,
        dataset_seed=args.seed,
    )
    store_dir = Path(args.store)
    field_kind = "external"
    manifest_path = in_dir / "manifest.json"
    if manifest_path.exists():
        entries = json.loads(manifest_path.read_text(encoding="utf-8"))
        if entries:
            field_kind = entries[0].get("field", "external")
    if (store_dir / "manifest.json").exists():
        store = FeatureStore.open(store_dir)
    else:
        store = FeatureStore.create(
            store_dir,
            dataset_id=store_dir.name,
            dataset_seed=args.seed,
            d=args.d,
            k=args.k,
            epsilon=args.epsilon,
            field_kind=field_kind,
        )

    todo = [(str(p), p.stem, config) for p in obj_paths if not store.has_surface(p.stem)]
    if not todo:
        _echo({"status": "up to date", "surfaces": len(obj_paths)}, args.json, "up to date")
        return 0

    jobs = args.jobs or int(os.environ.get("SURFPATCH_JOBS", "1"))
    failures = 0
    results = []
    if jobs > 1:
        import multiprocessing as mp

        with mp.Pool(jobs) as pool:
            for (path_str, sid, _), outcome in zip(
                todo, pool.imap(_try_preprocess, todo)
            ):
                results.append((sid, outcome))
    else:
        for task in todo:
            results.append((task[1], _try_preprocess(task)))

    for sid, outcome in results:
        if isinstance(outcome, tuple):
            record, timings = outcome
            store.add_surface(record)
            print(
                f"{sid}: {record.mesh.n_vertices} verts"
                f"  simplification {timings['simplification']:.2f}s"
                f"  hks {timings['hks']:.2f}s  dr {timings['dr']:.2f}s",
                file=sys.stderr,
            )
        else:
            failures += 1
            store.add_failure(sid, outcome)
            print(f"{sid}: FAILED: {outcome}", file=sys.stderr)

    ready = len(store.surface_ids())
    _echo(
        {"store": str(store_dir), "ready": ready, "failed": failures},
        args.json,
        f"{ready} ready, {failures} failed -> {store_dir}",
    )
    return 0 if ready else 1


def _try_preprocess(task):
    try:
        return _preprocess_one(task)
    except Exception as exc:  # per-surface failures must not kill the batch
        return f"{type(exc).__name__}: {exc}"


def _load_embedding(store: FeatureStore, surface_ids: list[str], delta1: float, config: PipelineConfig):
    segmented = []
    for sid in surface_ids:
        record = store.read_surface(sid)
        tree = vertex_tree(record)
        seg = segment_patches(record, delta_from_slider(tree, delta1), tree)
        segmented.append((record, seg))
    emb = embed_patches(segmented, seed=config.dataset_seed, config=config)
    return emb


def cmd_match(args) -> int:
    store = FeatureStore.open(args.store)
    config = PipelineConfig(
        dataset_seed=store.manifest["dataset_seed"], patch_feature=args.feature_mode
    )
    surface_ids = [args.surface] + [s for s in args.extra.split(",") if s]
    for sid in surface_ids:
        store.entry(sid)  # raises on unknown ids
    emb = _load_embedding(store, surface_ids, args.delta1, config)
    tree = patch_tree(emb, config)
    result = match_patches(
        emb,
        (args.surface, args.patch),
        delta_from_slider(tree, args.delta2),
        tree=tree,
        config=config,
        delta1=args.delta1,
    )
    payload = {
        "query": {"surface_id": args.surface, "patch_id": args.patch},
        "delta1": args.delta1,
        "delta2": args.delta2,
        "matches": [
            {
                "surface_id": sid,
                "patch_id": pid,
                "rank": rank,
                "vertices": emb.vertex_lists[(sid, pid)].tolist(),
            }
            for rank, (sid, pid) in enumerate(result.matches)
        ],
    }
    print(json.dumps(payload, indent=None if args.json else 1))
    return 0


def cmd_evaluate(args) -> int:
    store = FeatureStore.open(args.store)
    config = PipelineConfig(
        dataset_seed=store.manifest["dataset_seed"], patch_feature=args.feature_mode
    )
    report = evaluate_matching(
        store,
        n_queries=args.queries,
        delta1_slider=args.delta1,
        delta2_slider=args.delta2,
        seed=args.seed,
        config=config,
    )
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=1), encoding="utf-8")
    if args.json:
        print(json.dumps(report, indent=1))
    else:
        summary = report["summary"]
        print(f"{'metric':<10}{'matched mean':>14}{'std':>10}{'random mean':>14}{'std':>10}")
        for key in ("hausdorff", "chamfer", "rmse"):
            m, b = summary[key], summary["baseline"][key]
            print(f"{key:<10}{m['mean']:>14.4f}{m['std']:>10.4f}{b['mean']:>14.4f}{b['std']:>10.4f}")
    return 0


def cmd_cluster(args) -> int:
    store = FeatureStore.open(args.store)
    config = PipelineConfig(
        dataset_seed=store.manifest["dataset_seed"], patch_feature=args.feature_mode
    )
    ids = store.surface_ids()
    records = [store.read_surface(sid) for sid in ids]
    t0 = time.perf_counter()
    result = cluster_surfaces(
        records,
        delta1_slider=args.delta1,
        delta_s_slider=args.delta_s,
        seed=args.seed,
        config=config,
    )
    payload = {
        "surface_ids": result.surface_ids,
        "points": result.projection.points.tolist(),
        "labels": result.clusters.labels.tolist(),
        "representatives": [result.surface_ids[i] for i in result.representatives],
        "gallery": result.gallery,
        "features": result.features.tolist(),
        "delta1": args.delta1,
        "delta_s": args.delta_s,
        "seed": args.seed,
    }
    store.write_clusters(payload)
    _echo(
        {
            "clusters": result.clusters.cluster_count,
            "surfaces": len(ids),
            "seconds": round(time.perf_counter() - t0, 2),
        },
        args.json,
        f"{result.clusters.cluster_count} clusters over {len(ids)} surfaces",
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from surfpatch.service import create_app

    stores = [FeatureStore.open(p) for p in args.store]
    app = create_app(stores)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except SystemExit as exc:  # uvicorn exits via SystemExit on bind errors
        return int(exc.code or 1)
    except OSError as exc:
        print(f"serve failed: {exc}", file=sys.stderr)
        return 1
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "preprocess": cmd_preprocess,
    "match": cmd_match,
    "evaluate": cmd_evaluate,
    "cluster": cmd_cluster,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (StoreError, FileNotFoundError, ValueError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
