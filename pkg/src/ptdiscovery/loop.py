"""The iteration engine: train, score, select, label, update, report.

PoolState partitions every candidate into positive / unlabeled / rejected /
deferred. Candidates are never created or destroyed by the loop, a phrase
approved or rejected is never presented again, and deferred phrases sit in a
separate review queue outside automatic selection. Selection is deliberately
high-confidence (cost-sensitive), not uncertainty sampling.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConfigError, DuplicateDecision, EmptyTruth, UnknownPhrase
from .features import FeatureStore
from .forest import Forest, Hyperparams, predict_matrix, train_forest

APPROVED = "approved"
REJECTED = "rejected"
DEFERRED = "deferred"
VERDICTS = (APPROVED, REJECTED, DEFERRED)


@dataclass(frozen=True)
class LabelDecision:
    phrase: str
    verdict: str

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")


@dataclass(frozen=True)
class SelectionPolicy:
    """Batch selection rule: top_k(k) or threshold(tau); ties break lexicographically."""

    kind: str
    k: int = 0
    tau: float = 0.0

    def __post_init__(self):
        if self.kind == "top_k":
            if self.k < 1:
                raise ConfigError("top_k policy needs k >= 1")
        elif self.kind == "threshold":
            if not 0.0 <= self.tau <= 1.0:
                raise ConfigError("threshold policy needs tau in [0, 1]")
        else:
            raise ConfigError(f"unknown selection policy {self.kind!r}")

    @classmethod
    def top_k(cls, k: int) -> "SelectionPolicy":
        return cls(kind="top_k", k=k)

    @classmethod
    def threshold(cls, tau: float) -> "SelectionPolicy":
        return cls(kind="threshold", tau=tau)


@dataclass(frozen=True)
class PoolState:
    """Disjoint partition of the candidate universe; union is constant."""

    positive: frozenset[str]
    unlabeled: frozenset[str]
    rejected: frozenset[str]
    deferred: frozenset[str]
    iteration: int
    initial_known: frozenset[str]

    @classmethod
    def from_candidates(cls, phrases: Iterable[str], known_pts: Iterable[str]) -> "PoolState":
        """Seed positives with the known PTs present in the pool; rest unlabeled."""
        universe = frozenset(phrases)
        known = frozenset(known_pts) & universe
        return cls(
            positive=known,
            unlabeled=universe - known,
            rejected=frozenset(),
            deferred=frozenset(),
            iteration=0,
            initial_known=known,
        )

    @property
    def universe(self) -> frozenset[str]:
        return self.positive | self.unlabeled | self.rejected | self.deferred

    @property
    def discovered(self) -> frozenset[str]:
        return self.positive - self.initial_known

    def training_negatives(self) -> frozenset[str]:
        """The noisy negative pool: everything not currently trusted positive."""
        return self.unlabeled | self.rejected | self.deferred


@dataclass(frozen=True)
class IterationReport:
    iteration: int
    presented: int
    approved: int
    precision: float
    cumulative_discovered: int
    coverage: float | None = None


def rank_candidates(
    scores: dict[str, float],
    unlabeled: frozenset[str],
    policy: SelectionPolicy,
) -> list[tuple[str, float]]:
    """Order unlabeled candidates by (confidence desc, phrase asc) and cut per policy."""
    eligible = [(p, scores[p]) for p in scores if p in unlabeled]
    eligible.sort(key=lambda item: (-item[1], item[0]))
    if policy.kind == "top_k":
        return eligible[: policy.k]
    return [item for item in eligible if item[1] >= policy.tau]


def score_unlabeled(forest: Forest, pools: PoolState, store: FeatureStore) -> dict[str, float]:
    """Confidence for every unlabeled candidate."""
    phrases = sorted(pools.unlabeled)
    if not phrases:
        return {}
    rows = np.array([store.index[p] for p in phrases], dtype=np.int64)
    conf = predict_matrix(forest, store.matrix[rows])
    return dict(zip(phrases, conf.tolist()))


def select_batch(
    forest: Forest,
    pools: PoolState,
    store: FeatureStore,
    policy: SelectionPolicy,
) -> list[tuple[str, float]]:
    """High-confidence batch from the unlabeled pool (may be empty)."""
    return rank_candidates(score_unlabeled(forest, pools, store), pools.unlabeled, policy)


def apply_labels(pools: PoolState, decisions: Sequence[LabelDecision]) -> PoolState:
    """Move each decided phrase out of unlabeled into its verdict set.

    Raises:
        UnknownPhrase: decision on a phrase not currently unlabeled.
        DuplicateDecision: two decisions on the same phrase.
    """
    seen: set[str] = set()
    approved: set[str] = set()
    rejected: set[str] = set()
    deferred: set[str] = set()
    for d in decisions:
        if d.phrase in seen:
            raise DuplicateDecision(f"two decisions for {d.phrase!r}")
        seen.add(d.phrase)
        if d.phrase not in pools.unlabeled:
            raise UnknownPhrase(f"{d.phrase!r} is not in the unlabeled pool")
        if d.verdict == APPROVED:
            approved.add(d.phrase)
        elif d.verdict == REJECTED:
            rejected.add(d.phrase)
        else:
            deferred.add(d.phrase)
    return replace(
        pools,
        positive=pools.positive | approved,
        unlabeled=pools.unlabeled - seen,
        rejected=pools.rejected | rejected,
        deferred=pools.deferred | deferred,
    )


def train_on_pools(
    pools: PoolState,
    store: FeatureStore,
    hp: Hyperparams,
    seed: int,
    parallelism: int = 1,
) -> Forest:
    """Fresh forest on the current partition (full resample each call)."""
    pos_rows = store.rows_for(pools.positive)
    neg_rows = store.rows_for(pools.training_negatives())
    return train_forest(
        pos_rows,
        neg_rows,
        store.matrix,
        hp,
        master_seed=seed,
        schema_digest=store.digest,
        parallelism=parallelism,
    )


def run_iteration(
    state: PoolState,
    store: FeatureStore,
    oracle: Callable[[list[tuple[str, float]]], Sequence[LabelDecision]],
    hp: Hyperparams,
    policy: SelectionPolicy,
    seed: int,
    parallelism: int = 1,
    coverage_truth: frozenset[str] | None = None,
) -> tuple[PoolState, IterationReport]:
    """One full cycle: train, select, label via the oracle, update, report."""
    forest = train_on_pools(state, store, hp, seed, parallelism)
    batch = select_batch(forest, state, store, policy)
    decisions = list(oracle(batch)) if batch else []
    new_state = apply_labels(state, decisions)
    new_state = replace(new_state, iteration=state.iteration + 1)
    approved = sum(1 for d in decisions if d.verdict == APPROVED)
    presented = len(batch)
    report = IterationReport(
        iteration=new_state.iteration,
        presented=presented,
        approved=approved,
        precision=approved / presented if presented else 0.0,
        cumulative_discovered=len(new_state.discovered),
        coverage=compute_coverage(new_state, coverage_truth) if coverage_truth is not None else None,
    )
    return new_state, report


def compute_coverage(pools: PoolState, truth_positives: frozenset[str] | set[str]) -> float:
    """Fraction of discoverable truth PTs found so far.

    Discoverable targets are the truth PTs beyond the initially known ones;
    with no discoverable targets coverage is vacuously 1.0.

    Raises:
        EmptyTruth: empty truth set.
    """
    if not truth_positives:
        raise EmptyTruth("truth set is empty")
    targets = frozenset(truth_positives) - pools.initial_known
    if not targets:
        return 1.0
    return len(pools.discovered & targets) / len(targets)


REPORT_COLUMNS = ("iteration", "presented", "approved", "precision", "cumulative_discovered", "coverage")


def reports_to_csv(reports: Sequence[IterationReport]) -> str:
    """Render reports as CSV text (deterministic float formatting via repr)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for r in reports:
        writer.writerow(
            [
                r.iteration,
                r.presented,
                r.approved,
                repr(float(r.precision)),
                r.cumulative_discovered,
                "" if r.coverage is None else repr(float(r.coverage)),
            ]
        )
    return buf.getvalue()


def write_reports_csv(path: str | Path, reports: Sequence[IterationReport]) -> None:
    Path(path).write_text(reports_to_csv(reports), encoding="utf-8")


def read_reports_csv(path: str | Path) -> list[IterationReport]:
    reports = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            reports.append(
                IterationReport(
                    iteration=int(row["iteration"]),
                    presented=int(row["presented"]),
                    approved=int(row["approved"]),
                    precision=float(row["precision"]),
                    cumulative_discovered=int(row["cumulative_discovered"]),
                    coverage=float(row["coverage"]) if row["coverage"] else None,
                )
            )
    return reports
