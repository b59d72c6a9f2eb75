"""Synthetic worlds and the simulated V1-to-V2 labeling protocol.

A world is a catalog, a query log, and three ontology snapshots: V1 (the
seed positives), V2 (the clean ground truth), and V2_noisy (V2 with injected
false positives and removed missing positives). True PTs receive
systematically stronger signal than designed noise phrases: higher query
volume, clicks concentrated on fewer SKUs, earlier title positions, tighter
token co-occurrence; the separation scales with ``signal_strength``. Worlds
are fully determined by their seed and can be exported to the corpus file
formats and re-ingested through the normal pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .candidates import DEFAULT_MIN_COUNT, mine_pool
from .corpus import (
    Catalog,
    QueryLog,
    QueryRecord,
    Sku,
    catalog_from_skus,
    load_catalog,
    load_query_log,
    query_log_from_records,
    write_catalog,
    write_query_log,
)
from .errors import ConfigError
from .features import build_feature_store, compute_corpus_stats, default_lexicons, FeatureStore
from .forest.rng import derive_child_seed
from .loop import (
    APPROVED,
    IterationReport,
    LabelDecision,
    PoolState,
    REJECTED,
    SelectionPolicy,
    apply_labels,
    compute_coverage,
    run_iteration,
)
from .forest import Hyperparams

DEFAULT_MIN_VOLUME = 5

_UNIT_PAIRS = (("cu", "ft"), ("mm",), ("volt",), ("in",), ("gal",), ("oz",), ("amp",), ("watt",))


@dataclass(frozen=True)
class Ontology:
    """One versioned snapshot of the PT set."""

    version: str
    pts: frozenset[str]

    def __len__(self) -> int:
        return len(self.pts)


@dataclass(frozen=True)
class WorldConfig:
    n_true_pts: int = 300
    n_v1_pts: int = 60
    n_noise_candidates: int = 1700
    n_skus: int = 2500
    n_queries: int = 1600
    signal_strength: float = 3.0
    noise_rates: tuple[float, float] = (0.15, 0.15)  # (false_positive, missing_positive)
    seed: int = 0

    def __post_init__(self):
        for name in ("n_true_pts", "n_v1_pts", "n_noise_candidates", "n_skus", "n_queries"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.n_v1_pts >= self.n_true_pts:
            raise ConfigError("n_v1_pts must be smaller than n_true_pts")
        fp, mp = self.noise_rates
        if not (0.0 <= fp < 1.0 and 0.0 <= mp < 1.0):
            raise ConfigError("noise rates must lie in [0, 1)")
        if self.n_queries < self.n_true_pts:
            raise ConfigError("n_queries must cover at least the true PTs")
        if self.signal_strength <= 0:
            raise ConfigError("signal_strength must be positive")


@dataclass
class World:
    """Everything generate_world produces, plus host bookkeeping for context."""

    catalog: Catalog
    query_log: QueryLog
    v1: Ontology
    v2: Ontology
    v2_noisy: Ontology
    config: WorldConfig


def _unique_phrases(rng: np.random.Generator, tokens: list[str], count: int,
                    taken: set[str], lengths=(1, 2, 3), weights=(0.25, 0.5, 0.25)) -> list[str]:
    phrases: list[str] = []
    while len(phrases) < count:
        n = int(rng.choice(lengths, p=weights))
        n = min(n, len(tokens))
        picks = rng.choice(len(tokens), size=n, replace=False)
        phrase = " ".join(tokens[i] for i in picks)
        if phrase not in taken:
            taken.add(phrase)
            phrases.append(phrase)
    return phrases


def _measurement_phrase(rng: np.random.Generator, taken: set[str]) -> str:
    while True:
        value = f"{rng.integers(1, 99)}.{rng.integers(0, 9)}"
        unit = _UNIT_PAIRS[int(rng.integers(0, len(_UNIT_PAIRS)))]
        phrase = " ".join((value,) + unit)
        if phrase not in taken:
            taken.add(phrase)
            return phrase


def generate_world(cfg: WorldConfig) -> World:
    """Generate a synthetic world, fully determined by cfg.seed.

    Raises:
        ConfigError: counts that cannot be laid out (e.g. too few SKUs to
        host every true PT at mining frequency).
    """
    rng = np.random.default_rng(cfg.seed)
    s = cfg.signal_strength

    pt_tokens = [f"pt{i:03d}" for i in range(max(8, round(cfg.n_true_pts * 0.7)))]
    noise_tokens = [f"nz{i:03d}" for i in range(max(8, round(cfg.n_noise_candidates * 0.4)))]
    attr_tokens = [f"attr{i:03d}" for i in range(200)]
    brands = [f"brand{i:02d}" for i in range(max(3, min(30, cfg.n_skus // 80)))]
    categories = [f"cat{i:02d}" for i in range(12)]

    taken: set[str] = set()
    true_pts = _unique_phrases(rng, pt_tokens, cfg.n_true_pts, taken)
    n_measure = round(cfg.n_noise_candidates * 0.15)
    noise_phrases = [_measurement_phrase(rng, taken) for _ in range(n_measure)]
    noise_phrases += _unique_phrases(rng, noise_tokens, cfg.n_noise_candidates - n_measure, taken)

    v2 = Ontology("V2", frozenset(true_pts))
    v1_picks = rng.choice(cfg.n_true_pts, size=cfg.n_v1_pts, replace=False)
    v1 = Ontology("V1", frozenset(true_pts[i] for i in v1_picks))
    fp_rate, mp_rate = cfg.noise_rates
    n_removed = round(mp_rate * cfg.n_true_pts)
    n_injected = round(fp_rate * cfg.n_noise_candidates)
    removed = {true_pts[i] for i in rng.choice(cfg.n_true_pts, size=n_removed, replace=False)}
    injected = {noise_phrases[i] for i in rng.choice(len(noise_phrases), size=n_injected, replace=False)}
    v2_noisy = Ontology("V2-noisy", (v2.pts - removed) | injected)

    home_cat = {pt: categories[int(rng.integers(0, len(categories)))] for pt in true_pts}

    # title slots: every true PT anchors 3-5 titles; remaining SKUs anchor noise
    true_slots: list[str] = []
    for pt in true_pts:
        true_slots.extend([pt] * int(rng.integers(3, 6)))
    if len(true_slots) > cfg.n_skus:
        raise ConfigError(
            f"n_skus={cfg.n_skus} cannot host {len(true_slots)} true-PT title slots"
        )
    rng.shuffle(true_slots)

    noise_cycle = list(noise_phrases)
    rng.shuffle(noise_cycle)
    noise_i = 0

    def next_noise() -> str:
        nonlocal noise_i
        phrase = noise_cycle[noise_i % len(noise_cycle)]
        noise_i += 1
        return phrase

    def some_attrs(k: int) -> list[str]:
        return [attr_tokens[int(rng.integers(0, len(attr_tokens)))] for _ in range(k)]

    skus: list[Sku] = []
    hosts: dict[str, list[str]] = {}
    title_counts: dict[str, int] = {}

    def note_host(phrase: str, sku_id: str, in_title: bool) -> None:
        hosts.setdefault(phrase, []).append(sku_id)
        if in_title:
            title_counts[phrase] = title_counts.get(phrase, 0) + 1

    for k in range(cfg.n_skus):
        sku_id = f"S{k:05d}"
        brand = brands[int(rng.integers(0, len(brands)))] if rng.random() < 0.65 else None
        toks: list[str] = [brand] if brand else []
        if k < len(true_slots):
            pt = true_slots[k]
            toks.extend(pt.split(" "))
            toks.extend(some_attrs(int(rng.integers(1, 3))))
            category = home_cat[pt] if rng.random() < 0.8 else categories[int(rng.integers(0, len(categories)))]
            note_host(pt, sku_id, in_title=True)
            if rng.random() < 0.35:
                extra = next_noise()
                toks.extend(extra.split(" "))
                note_host(extra, sku_id, in_title=True)
        else:
            # noise-anchored title: anchor sits deeper, pushed by signal strength
            toks.extend(some_attrs(1 + int(rng.integers(0, max(1, round(s))))))
            anchor = next_noise()
            toks.extend(anchor.split(" "))
            toks.extend(some_attrs(int(rng.integers(0, 2))))
            category = categories[int(rng.integers(0, len(categories)))]
            note_host(anchor, sku_id, in_title=True)
        skus.append(Sku(sku_id, tuple(toks), (), category, brand))

    # descriptions: top up occurrence counts so every designed phrase is minable
    pending: list[str] = []
    for pt in true_pts:
        pending.extend([pt] * int(rng.integers(1, 3)))
    for phrase in noise_phrases:
        need = max(0, DEFAULT_MIN_COUNT - title_counts.get(phrase, 0))
        pending.extend([phrase] * (need + int(rng.integers(0, 2))))
    rng.shuffle(pending)
    per_sku = -(-len(pending) // cfg.n_skus)  # ceil division
    cursor = 0
    for k in range(cfg.n_skus):
        if cursor >= len(pending):
            break
        mentions = pending[cursor : cursor + per_sku]
        cursor += per_sku
        desc: list[str] = []
        for m in mentions:
            desc.extend(m.split(" "))
            desc.extend(some_attrs(1))
        sku = skus[k]
        skus[k] = Sku(sku.sku_id, sku.title, tuple(desc), sku.category, sku.brand)
        for m in mentions:
            note_host(m, sku.sku_id, in_title=False)

    catalog = catalog_from_skus(skus)

    # query log: all true PTs, then noise phrases, then brand junk, to quota
    records: list[QueryRecord] = []

    def click_map(phrase: str, total_clicks: int, concentration: float) -> dict[str, int]:
        sku_ids = hosts.get(phrase, [])
        if not sku_ids or total_clicks <= 0:
            return {}
        # low decay base -> clicks pile on few SKUs; near 1.0 -> spread wide
        k = min(len(sku_ids), 4 if concentration <= 0.5 else 10)
        weights = np.array([concentration ** i for i in range(k)], dtype=np.float64)
        weights /= weights.sum()
        clicks = {}
        for i, sid in enumerate(sku_ids[:k]):
            c = int(round(total_clicks * weights[i]))
            if c > 0:
                clicks[sid] = c
        return clicks

    for pt in true_pts:
        volume = max(DEFAULT_MIN_VOLUME, int(round(30 * s * float(rng.lognormal(0.0, 0.5)))))
        cats = {home_cat[pt]: int(round(volume * (s / (s + 1.0))))}
        spill = categories[int(rng.integers(0, len(categories)))]
        remaining = volume - cats[home_cat[pt]]
        if remaining > 0:
            cats[spill] = cats.get(spill, 0) + remaining // 2
        records.append(
            QueryRecord(pt, volume, cats, click_map(pt, int(round(volume * 0.5)), 0.3))
        )

    n_junk = min(len(brands), max(0, cfg.n_queries - cfg.n_true_pts) // 10)
    n_noise_q = cfg.n_queries - cfg.n_true_pts - n_junk
    for phrase in noise_cycle[: max(0, n_noise_q)]:
        volume = max(1, int(round(8 * float(rng.lognormal(0.0, 0.6)))))
        spread = {}
        for _ in range(int(rng.integers(3, 6))):
            cat = categories[int(rng.integers(0, len(categories)))]
            spread[cat] = spread.get(cat, 0) + max(1, volume // 6)
        while sum(spread.values()) > volume:
            top = max(spread, key=lambda c: (spread[c], c))
            spread[top] -= 1
            if spread[top] <= 0:
                del spread[top]
        records.append(QueryRecord(phrase, volume, spread, click_map(phrase, volume // 3, 0.95)))
    for brand in brands[:n_junk]:
        volume = int(rng.integers(20, 60))
        records.append(QueryRecord(brand, volume, {}, {}))

    query_log = query_log_from_records(records)
    return World(catalog, query_log, v1, v2, v2_noisy, cfg)


def simulated_oracle(batch: Sequence[tuple[str, float]], truth: Ontology) -> list[LabelDecision]:
    """Approve exactly the batch phrases present in the truth ontology."""
    return [
        LabelDecision(phrase, APPROVED if phrase in truth.pts else REJECTED)
        for phrase, _ in batch
    ]


@dataclass
class SimPipeline:
    """Mined pool and feature store for one world (shared between arms)."""

    store: FeatureStore
    candidate_phrases: tuple[str, ...]


def prepare_pipeline(
    world: World,
    min_volume: int = DEFAULT_MIN_VOLUME,
    min_count: int = DEFAULT_MIN_COUNT,
) -> SimPipeline:
    """Run the standard mining + feature pipeline over a generated world."""
    pool, ngrams = mine_pool(world.catalog, world.query_log, min_volume, min_count)
    lexicons = default_lexicons(world.catalog)
    stats = compute_corpus_stats(world.catalog, world.query_log, lexicons, ngrams=ngrams)
    store = build_feature_store(pool, stats)
    return SimPipeline(store=store, candidate_phrases=store.phrases)


def initial_pools(world: World, pipeline: SimPipeline, truth_variant: str) -> tuple[PoolState, Ontology]:
    """Seed pools from V1 restricted to the chosen truth variant."""
    if truth_variant not in ("clean", "noisy"):
        raise ConfigError(f"unknown truth variant {truth_variant!r}")
    truth = world.v2 if truth_variant == "clean" else world.v2_noisy
    known = world.v1.pts & truth.pts
    return PoolState.from_candidates(pipeline.candidate_phrases, known), truth


def run_simulation(
    world: World,
    hp: Hyperparams | None = None,
    policy: SelectionPolicy | None = None,
    n_iterations: int = 50,
    truth_variant: str = "clean",
    min_volume: int = DEFAULT_MIN_VOLUME,
    min_count: int = DEFAULT_MIN_COUNT,
    parallelism: int = 1,
    pipeline: SimPipeline | None = None,
) -> list[IterationReport]:
    """Drive the active loop against the simulated oracle.

    Coverage in every report is measured against the clean truth, so paired
    clean/noisy runs (same world, same seed) are directly comparable.
    """
    if n_iterations < 1:
        raise ConfigError("n_iterations must be >= 1")
    hp = hp or Hyperparams()
    policy = policy or SelectionPolicy.top_k(200)
    if pipeline is None:
        pipeline = prepare_pipeline(world, min_volume, min_count)
    state, truth = initial_pools(world, pipeline, truth_variant)
    clean_truth = world.v2.pts
    loop_master = derive_child_seed(world.config.seed, 0x51)
    reports: list[IterationReport] = []
    for it in range(n_iterations):
        seed = derive_child_seed(loop_master, it)
        state, report = run_iteration(
            state,
            pipeline.store,
            lambda batch: simulated_oracle(batch, truth),
            hp,
            policy,
            seed,
            parallelism=parallelism,
            coverage_truth=clean_truth,
        )
        reports.append(report)
    return reports


def run_random_baseline(
    world: World,
    k: int,
    n_iterations: int,
    truth_variant: str = "clean",
    min_volume: int = DEFAULT_MIN_VOLUME,
    min_count: int = DEFAULT_MIN_COUNT,
    pipeline: SimPipeline | None = None,
) -> list[IterationReport]:
    """Random-selection control arm: k uniform unlabeled picks per iteration.

    Selection ignores the classifier entirely (no training), isolating the
    value of confidence-ranked selection.
    """
    if pipeline is None:
        pipeline = prepare_pipeline(world, min_volume, min_count)
    state, truth = initial_pools(world, pipeline, truth_variant)
    clean_truth = world.v2.pts
    rng = np.random.default_rng(derive_child_seed(world.config.seed, 0x52))
    reports: list[IterationReport] = []
    for it in range(n_iterations):
        unlabeled = sorted(state.unlabeled)
        size = min(k, len(unlabeled))
        picks = rng.choice(len(unlabeled), size=size, replace=False) if size else []
        batch = [(unlabeled[i], 0.0) for i in sorted(int(i) for i in picks)]
        decisions = simulated_oracle(batch, truth)
        state = apply_labels(state, decisions)
        approved = sum(1 for d in decisions if d.verdict == APPROVED)
        reports.append(
            IterationReport(
                iteration=it + 1,
                presented=len(batch),
                approved=approved,
                precision=approved / len(batch) if batch else 0.0,
                cumulative_discovered=len(state.discovered),
                coverage=compute_coverage(state, clean_truth),
            )
        )
    return reports


def summary_row(seed: int, arm: str, reports: Sequence[IterationReport]) -> dict:
    """Final metrics for one (seed, arm) simulation run."""
    final = reports[-1]
    head = reports[:3]
    tail = reports[-3:]
    return {
        "seed": seed,
        "arm": arm,
        "iterations": len(reports),
        "cumulative_discovered": final.cumulative_discovered,
        "final_coverage": final.coverage,
        "mean_precision_first3": sum(r.precision for r in head) / len(head),
        "mean_precision_last3": sum(r.precision for r in tail) / len(tail),
    }


SUMMARY_COLUMNS = (
    "seed",
    "arm",
    "iterations",
    "cumulative_discovered",
    "final_coverage",
    "mean_precision_first3",
    "mean_precision_last3",
)


def write_summary_csv(path: str | Path, rows: Sequence[dict]) -> None:
    """Per-seed, per-arm final metrics (deterministic float formatting)."""
    lines = [",".join(SUMMARY_COLUMNS)]
    for row in rows:
        rendered = []
        for col in SUMMARY_COLUMNS:
            value = row[col]
            if value is None:
                rendered.append("")
            elif isinstance(value, float):
                rendered.append(repr(value))
            else:
                rendered.append(str(value))
        lines.append(",".join(rendered))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def export_world(world: World, out_dir: str | Path) -> dict[str, Path]:
    """Write all five world components in the corpus/ontology file formats."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "catalog": out / "catalog.jsonl",
        "query_log": out / "queries.jsonl",
        "v1": out / "ontology_v1.txt",
        "v2": out / "ontology_v2.txt",
        "v2_noisy": out / "ontology_v2_noisy.txt",
    }
    write_catalog(paths["catalog"], world.catalog)
    write_query_log(paths["query_log"], world.query_log)
    for key, onto in (("v1", world.v1), ("v2", world.v2), ("v2_noisy", world.v2_noisy)):
        paths[key].write_text("\n".join(sorted(onto.pts)) + "\n", encoding="utf-8")
    return paths


def load_ontology(path: str | Path, version: str) -> Ontology:
    pts = frozenset(
        line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()
    )
    return Ontology(version, pts)


def import_world(in_dir: str | Path, cfg: WorldConfig) -> World:
    """Re-ingest an exported world through the normal loaders."""
    src = Path(in_dir)
    return World(
        catalog=load_catalog(src / "catalog.jsonl"),
        query_log=load_query_log(src / "queries.jsonl"),
        v1=load_ontology(src / "ontology_v1.txt", "V1"),
        v2=load_ontology(src / "ontology_v2.txt", "V2"),
        v2_noisy=load_ontology(src / "ontology_v2_noisy.txt", "V2-noisy"),
        config=cfg,
    )
