"""Single entry point: ingest, mine-candidates, features, train, simulate, serve, report.

Config file (JSON) plus flag overrides, flags win. Every subcommand honors
--seed; omitting it picks a random seed and prints it so the run can be
replayed. Identical (config, seed) produces byte-identical outputs across
runs and parallelism levels.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
from pathlib import Path

from . import candidates as cand
from . import corpus, features, simulate
from .errors import PtdError
from .forest import Hyperparams, predict_matrix, save_forest, train_forest
from .loop import PoolState, SelectionPolicy, reports_to_csv, read_reports_csv

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    seed = secrets.randbits(32)
    print(f"seed: {seed} (chosen randomly; pass --seed {seed} to replay)")
    return seed


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise PtdError(f"config file not found: {p}")
    return json.loads(p.read_text(encoding="utf-8"))


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise PtdError(f"{what} not found: {p}")
    return p


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _policy_from(args, config: dict) -> SelectionPolicy:
    if getattr(args, "top_k", None) is not None:
        return SelectionPolicy.top_k(args.top_k)
    if getattr(args, "threshold", None) is not None:
        return SelectionPolicy.threshold(args.threshold)
    policy_cfg = config.get("policy", {})
    if "threshold" in policy_cfg:
        return SelectionPolicy.threshold(policy_cfg["threshold"])
    return SelectionPolicy.top_k(policy_cfg.get("top_k", 200))


def _hyperparams_from(config: dict) -> Hyperparams:
    return Hyperparams(**config.get("hyperparams", {}))


def _lexicons_from(args, catalog) -> features.Lexicons:
    brands = features.load_lexicon(args.brands) if getattr(args, "brands", None) else None
    units = features.load_lexicon(args.units) if getattr(args, "units", None) else features.DEFAULT_UNITS
    stop = features.load_lexicon(args.stopwords) if getattr(args, "stopwords", None) else features.DEFAULT_STOPWORDS
    if brands is None:
        brands = features.brands_from_catalog(catalog)
    return features.Lexicons(brands=brands, units=units, stopwords=stop)


def cmd_ingest(args) -> int:
    catalog = corpus.load_catalog(_require_file(args.catalog, "catalog"))
    query_log = corpus.load_query_log(_require_file(args.queries, "query log"))
    out = _out_dir(args)
    corpus.write_catalog(out / "catalog.norm.jsonl", catalog)
    corpus.write_query_log(out / "queries.norm.jsonl", query_log)
    summary = {
        "skus": len(catalog),
        "queries": len(query_log),
        "catalog_digest": catalog.digest,
        "query_log_digest": query_log.digest,
    }
    (out / "ingest.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(f"ingested {len(catalog)} skus, {len(query_log)} queries -> {out}")
    return EXIT_OK


def cmd_mine_candidates(args) -> int:
    catalog = corpus.load_catalog(_require_file(args.catalog, "catalog"))
    query_log = corpus.load_query_log(_require_file(args.queries, "query log"))
    pool, _ = cand.mine_pool(catalog, query_log, args.min_volume, args.min_count)
    out = _out_dir(args)
    cand.write_candidates(out / "candidates.jsonl", pool)
    print(f"mined {len(pool)} candidates -> {out / 'candidates.jsonl'}")
    return EXIT_OK


def cmd_features(args) -> int:
    catalog = corpus.load_catalog(_require_file(args.catalog, "catalog"))
    query_log = corpus.load_query_log(_require_file(args.queries, "query log"))
    pool = cand.read_candidates(_require_file(args.candidates, "candidate export"))
    lexicons = _lexicons_from(args, catalog)
    stats = features.compute_corpus_stats(catalog, query_log, lexicons)
    store = features.build_feature_store(pool, stats)
    out = _out_dir(args)
    features.write_feature_csv(out / "features.csv", store)
    print(f"extracted {len(store.phrases)} x {features.FEATURE_DIM} features -> {out / 'features.csv'}")
    return EXIT_OK


def cmd_train(args) -> int:
    seed = _resolve_seed(args)
    config = _load_config(args.config)
    catalog = corpus.load_catalog(_require_file(args.catalog, "catalog"))
    query_log = corpus.load_query_log(_require_file(args.queries, "query log"))
    known = {
        line.strip()
        for line in _require_file(args.known, "known-PT file").read_text(encoding="utf-8").splitlines()
        if line.strip()
    }
    pool, ngrams = cand.mine_pool(catalog, query_log, args.min_volume, args.min_count)
    lexicons = _lexicons_from(args, catalog)
    stats = features.compute_corpus_stats(catalog, query_log, lexicons, ngrams=ngrams)
    store = features.build_feature_store(pool, stats)
    pools = PoolState.from_candidates(store.phrases, known)
    hp = _hyperparams_from(config)
    forest = train_forest(
        store.rows_for(pools.positive),
        store.rows_for(pools.training_negatives()),
        store.matrix,
        hp,
        master_seed=seed,
        schema_digest=store.digest,
        parallelism=args.parallelism,
    )
    out = _out_dir(args)
    save_forest(forest, out / "model.npz")
    conf = predict_matrix(forest, store.matrix)
    with open(out / "scores.csv", "w", encoding="utf-8") as fh:
        fh.write("phrase,confidence\n")
        for phrase, c in zip(store.phrases, conf):
            fh.write(f"{phrase},{repr(float(c))}\n")
    print(f"trained {forest.n_trees} trees on {len(store.phrases)} candidates -> {out / 'model.npz'}")
    return EXIT_OK


def _world_config_from(config: dict, seed: int) -> simulate.WorldConfig:
    world_cfg = dict(config.get("world", {}))
    world_cfg["seed"] = seed
    if "noise_rates" in world_cfg:
        world_cfg["noise_rates"] = tuple(world_cfg["noise_rates"])
    return simulate.WorldConfig(**world_cfg)


def cmd_simulate(args) -> int:
    seed = _resolve_seed(args)
    config = _load_config(args.config)
    hp = _hyperparams_from(config)
    policy = _policy_from(args, config)
    n_iterations = args.iterations or config.get("iterations", 50)
    min_volume = args.min_volume if args.min_volume is not None else config.get("min_volume", simulate.DEFAULT_MIN_VOLUME)
    min_count = config.get("min_count", cand.DEFAULT_MIN_COUNT)
    truth_variant = args.truth or config.get("truth_variant", "clean")
    out = _out_dir(args)

    seeds = [seed + i for i in range(args.seeds)] if args.seeds > 1 else [seed]
    arms = args.arms.split(",") if args.arms else [truth_variant]
    single = len(seeds) == 1 and len(arms) == 1

    summary_rows = []
    for run_seed in seeds:
        world = simulate.generate_world(_world_config_from(config, run_seed))
        if args.export_world:
            simulate.export_world(world, out / "world" if single else out / f"world-{run_seed}")
        pipeline = simulate.prepare_pipeline(world, min_volume, min_count)
        for arm in arms:
            reports = simulate.run_simulation(
                world,
                hp=hp,
                policy=policy,
                n_iterations=n_iterations,
                truth_variant=arm,
                parallelism=args.parallelism,
                pipeline=pipeline,
            )
            report_path = out / "report.csv" if single else out / f"s{run_seed}-{arm}" / "report.csv"
            report_path.parent.mkdir(parents=True, exist_ok=True)
            report_path.write_text(reports_to_csv(reports), encoding="utf-8")
            row = simulate.summary_row(run_seed, arm, reports)
            summary_rows.append(row)
            print(
                f"simulated {n_iterations} iterations (seed {run_seed}, {arm}): "
                f"discovered {row['cumulative_discovered']}, coverage {row['final_coverage']:.3f} "
                f"-> {report_path}"
            )
    simulate.write_summary_csv(out / "summary.csv", summary_rows)
    (out / "summary.json").write_text(json.dumps(summary_rows, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import LoopRuntime, create_app

    seed = _resolve_seed(args)
    config = _load_config(args.config)
    hp = _hyperparams_from(config)
    policy = _policy_from(args, config)
    min_count = config.get("min_count", cand.DEFAULT_MIN_COUNT)
    min_volume = args.min_volume if args.min_volume is not None else config.get("min_volume", simulate.DEFAULT_MIN_VOLUME)

    if args.catalog and args.queries:
        catalog = corpus.load_catalog(_require_file(args.catalog, "catalog"))
        query_log = corpus.load_query_log(_require_file(args.queries, "query log"))
        known = set()
        if args.known:
            known = {
                line.strip()
                for line in _require_file(args.known, "known-PT file").read_text(encoding="utf-8").splitlines()
                if line.strip()
            }
    else:
        world = simulate.generate_world(_world_config_from(config, seed))
        catalog, query_log = world.catalog, world.query_log
        known = set(world.v1.pts)
        print(f"serving a generated world (seed {seed}); V1 seeds the positive pool")

    pool, ngrams = cand.mine_pool(catalog, query_log, min_volume, min_count)
    lexicons = features.default_lexicons(catalog)
    stats = features.compute_corpus_stats(catalog, query_log, lexicons, ngrams=ngrams)
    store = features.build_feature_store(pool, stats)
    pools = PoolState.from_candidates(store.phrases, known)
    runtime = LoopRuntime(
        store=store,
        pools=pools,
        catalog=catalog,
        query_log=query_log,
        hp=hp,
        policy=policy,
        master_seed=seed,
        parallelism=args.parallelism,
    )
    static_dir = args.ui_dir if args.ui_dir and Path(args.ui_dir).is_dir() else None
    app = create_app(runtime, static_dir=static_dir)
    print(f"labeling service on http://{args.host}:{args.port} ({len(store.phrases)} candidates)")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_report(args) -> int:
    runs = [Path(p) for p in args.runs]
    out = _out_dir(args)
    rows: list[tuple[str, int, float, float | None, int]] = []
    for path in runs:
        reports = read_reports_csv(_require_file(path, "report csv"))
        name = path.parent.name or path.stem
        for r in reports:
            rows.append((name, r.iteration, r.precision, r.coverage, r.cumulative_discovered))
    with open(out / "curves.csv", "w", encoding="utf-8") as fh:
        fh.write("run,iteration,precision,coverage,cumulative_discovered\n")
        for name, it, prec, cov, disc in rows:
            cov_s = "" if cov is None else repr(cov)
            fh.write(f"{name},{it},{repr(prec)},{cov_s},{disc}\n")
    for path in runs:
        reports = read_reports_csv(path)
        first = sum(r.precision for r in reports[:3]) / min(3, len(reports))
        last = sum(r.precision for r in reports[-3:]) / min(3, len(reports))
        final = reports[-1]
        print(
            f"{path}: {len(reports)} iterations, precision {first:.3f} -> {last:.3f}, "
            f"discovered {final.cumulative_discovered}"
            + (f", coverage {final.coverage:.3f}" if final.coverage is not None else "")
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seed=True):
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--config", default=None, help="JSON config file (flags win)")
        p.add_argument("--parallelism", type=int, default=1, help="worker threads for training")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="master seed (random if omitted)")

    p = sub.add_parser("ingest", help="load and normalize catalog + query log")
    p.add_argument("--catalog", required=True)
    p.add_argument("--queries", required=True)
    add_common(p, seed=False)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("mine-candidates", help="build the candidate pool")
    p.add_argument("--catalog", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--min-volume", type=int, default=simulate.DEFAULT_MIN_VOLUME)
    p.add_argument("--min-count", type=int, default=cand.DEFAULT_MIN_COUNT)
    add_common(p, seed=False)
    p.set_defaults(func=cmd_mine_candidates)

    p = sub.add_parser("features", help="extract the 30-feature matrix")
    p.add_argument("--catalog", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--brands", default=None, help="brand lexicon file (default: catalog brands)")
    p.add_argument("--units", default=None)
    p.add_argument("--stopwords", default=None)
    add_common(p, seed=False)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train the PT classifier")
    p.add_argument("--catalog", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--known", required=True, help="known-PT file, one phrase per line")
    p.add_argument("--min-volume", type=int, default=simulate.DEFAULT_MIN_VOLUME)
    p.add_argument("--min-count", type=int, default=cand.DEFAULT_MIN_COUNT)
    p.add_argument("--brands", default=None)
    p.add_argument("--units", default=None)
    p.add_argument("--stopwords", default=None)
    add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("simulate", help="run the V1->V2 simulation")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--min-volume", type=int, default=None)
    p.add_argument("--truth", choices=["clean", "noisy"], default=None)
    p.add_argument("--seeds", type=int, default=1, help="run N consecutive seeds starting at --seed")
    p.add_argument("--arms", default=None, help="comma-separated truth variants, e.g. clean,noisy")
    p.add_argument("--export-world", action="store_true", help="also write the world snapshot")
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="run the labeling service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--catalog", default=None)
    p.add_argument("--queries", default=None)
    p.add_argument("--known", default=None)
    p.add_argument("--min-volume", type=int, default=None)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--ui-dir", default=None, help="built frontend to serve at /")
    add_common(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("report", help="aggregate report CSVs into plot-ready curves")
    p.add_argument("runs", nargs="+", help="one or more report.csv paths")
    add_common(p, seed=False)
    p.set_defaults(func=cmd_report)

    return parser


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except PtdError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
