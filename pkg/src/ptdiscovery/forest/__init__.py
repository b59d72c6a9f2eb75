"""Positive-only distant-trained random forest.

Each base classifier is an unpruned Gini decision tree learned from a
perturbed training set: a fixed share of positives drawn with replacement
from the trusted positive pool, the remainder drawn with replacement from the
noisy unlabeled pool and treated as negatives. Confidence is the fraction of
trees voting positive, so it is always an integer multiple of 1/n_trees.

Training is deterministic and parallelism-invariant: tree i derives its own
seed from (master_seed, i), samples with a numpy PCG64 stream, and drives its
per-node feature subsets with a SplitMix64 stream shared by both backends.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import EmptyPool, SchemaMismatch
from .backend import active_backend, get_backend
from .rng import derive_child_seed

DEFAULT_N_TREES = 256
DEFAULT_MAX_FEATURES_FRACTION = 0.5
DEFAULT_EXAMPLES_PER_TREE = 2000
DEFAULT_POSITIVE_FRACTION = 0.10

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Hyperparams:
    """Grid-searched training knobs; defaults are the selected values."""

    n_trees: int = DEFAULT_N_TREES
    max_features_fraction: float = DEFAULT_MAX_FEATURES_FRACTION
    n_examples_per_tree: int = DEFAULT_EXAMPLES_PER_TREE
    positive_fraction: float = DEFAULT_POSITIVE_FRACTION

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if not 0.0 < self.max_features_fraction <= 1.0:
            raise ValueError("max_features_fraction must be in (0, 1]")
        if self.n_examples_per_tree < 1:
            raise ValueError("n_examples_per_tree must be >= 1")
        if not 0.0 < self.positive_fraction < 1.0:
            raise ValueError("positive_fraction must be in (0, 1)")

    @property
    def n_positive_per_tree(self) -> int:
        return round(self.n_examples_per_tree * self.positive_fraction)

    def max_features_per_split(self, n_features: int) -> int:
        return max(1, round(n_features * self.max_features_fraction))


@dataclass(frozen=True)
class DecisionTree:
    """Flat preorder node arrays; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    def predict_row(self, x: np.ndarray) -> int:
        node = 0
        while self.feature[node] >= 0:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
        return int(self.label[node])


@dataclass
class Forest:
    """Trained ensemble plus everything needed to reproduce or validate it."""

    trees: list[DecisionTree]
    hp: Hyperparams
    master_seed: int
    n_features: int
    schema_digest: str
    _flat: dict | None = field(default=None, repr=False, compare=False)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def flat_arrays(self) -> dict:
        """Concatenated node arrays with absolute child indices (cached)."""
        if self._flat is None:
            roots = np.zeros(len(self.trees), dtype=np.int32)
            offset = 0
            feats, thrs, lefts, rights, labels = [], [], [], [], []
            for i, t in enumerate(self.trees):
                roots[i] = offset
                feats.append(t.feature)
                thrs.append(t.threshold)
                shift = np.where(t.left >= 0, t.left + offset, -1).astype(np.int32)
                lefts.append(shift)
                shift = np.where(t.right >= 0, t.right + offset, -1).astype(np.int32)
                rights.append(shift)
                labels.append(t.label)
                offset += t.n_nodes
            self._flat = {
                "feature": np.concatenate(feats),
                "threshold": np.concatenate(thrs),
                "left": np.concatenate(lefts),
                "right": np.concatenate(rights),
                "label": np.concatenate(labels),
                "roots": roots,
            }
        return self._flat


@dataclass(frozen=True)
class PerturbedSample:
    """Per-tree training set drawn with replacement from the two pools.

    Rows are (feature vector, label) pairs; the first n_positive sampled
    indices point into the positive pool, the rest into the unlabeled pool.
    """

    X: np.ndarray
    positive_indices: np.ndarray
    negative_indices: np.ndarray

    @property
    def n_rows(self) -> int:
        return len(self.positive_indices) + len(self.negative_indices)

    @property
    def n_positive(self) -> int:
        return len(self.positive_indices)

    def rows(self) -> tuple[np.ndarray, np.ndarray]:
        """Materialized (matrix, labels) with one row per drawn example."""
        rows = np.concatenate([self.positive_indices, self.negative_indices])
        labels = np.zeros(len(rows), dtype=np.int8)
        labels[: len(self.positive_indices)] = 1
        return self.X[rows], labels


def sample_perturbed_set(
    positive_rows: np.ndarray,
    unlabeled_rows: np.ndarray,
    X: np.ndarray,
    hp: Hyperparams,
    rng: np.random.Generator,
) -> PerturbedSample:
    """Draw one perturbed training set.

    Exactly round(n_examples_per_tree * positive_fraction) positives are
    drawn with replacement from the positive pool; the remainder with
    replacement from the unlabeled pool, labeled negative.

    Raises:
        EmptyPool: either pool is empty.
    """
    if len(positive_rows) == 0:
        raise EmptyPool("positive")
    if len(unlabeled_rows) == 0:
        raise EmptyPool("unlabeled")
    n_pos = hp.n_positive_per_tree
    n_neg = hp.n_examples_per_tree - n_pos
    pos = np.asarray(positive_rows)[rng.integers(0, len(positive_rows), size=n_pos)]
    neg = np.asarray(unlabeled_rows)[rng.integers(0, len(unlabeled_rows), size=n_neg)]
    return PerturbedSample(X=X, positive_indices=pos, negative_indices=neg)


def _dedup_sample(sample: PerturbedSample) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Collapse repeated draws into (unique rows, labels, multiplicities).

    Weighted Gini over multiplicities is exactly equivalent to training on
    the duplicated rows, and unique rows keep the kernel's per-node sorts
    small. Positives and negatives come from disjoint pools, so a row index
    has a single label.
    """
    pos_u, pos_c = np.unique(sample.positive_indices, return_counts=True)
    neg_u, neg_c = np.unique(sample.negative_indices, return_counts=True)
    rows = np.concatenate([pos_u, neg_u])
    y = np.zeros(len(rows), dtype=np.int8)
    y[: len(pos_u)] = 1
    w = np.concatenate([pos_c, neg_c]).astype(np.float64)
    X = np.ascontiguousarray(sample.X[rows], dtype=np.float64)
    return X, y, w


def train_tree(
    sample: PerturbedSample,
    hp: Hyperparams,
    seed: int,
    backend_name: str | None = None,
) -> DecisionTree:
    """Grow one unpruned decision tree from a perturbed sample."""
    backend = get_backend(backend_name)
    X, y, w = _dedup_sample(sample)
    max_features = hp.max_features_per_split(X.shape[1])
    arrays = backend.build_tree(X, y, w, seed, max_features)
    return DecisionTree(*arrays)


def train_forest(
    positive_rows: np.ndarray | Sequence[int],
    unlabeled_rows: np.ndarray | Sequence[int],
    X: np.ndarray,
    hp: Hyperparams,
    master_seed: int,
    schema_digest: str = "",
    parallelism: int = 1,
    backend_name: str | None = None,
) -> Forest:
    """Train the full ensemble.

    Tree i is fully determined by derive_child_seed(master_seed, i), so the
    result is independent of training order and parallelism level.
    """
    positive_rows = np.asarray(positive_rows, dtype=np.int64)
    unlabeled_rows = np.asarray(unlabeled_rows, dtype=np.int64)
    if len(positive_rows) == 0:
        raise EmptyPool("positive")
    if len(unlabeled_rows) == 0:
        raise EmptyPool("unlabeled")
    X = np.ascontiguousarray(X, dtype=np.float64)
    backend = get_backend(backend_name)
    max_features = hp.max_features_per_split(X.shape[1])

    def build(i: int) -> DecisionTree:
        child = derive_child_seed(master_seed, i)
        rng = np.random.default_rng(child)
        sample = sample_perturbed_set(positive_rows, unlabeled_rows, X, hp, rng)
        Xs, y, w = _dedup_sample(sample)
        arrays = backend.build_tree(Xs, y, w, child, max_features)
        return DecisionTree(*arrays)

    if parallelism > 1:
        # contiguous chunks keep thread overhead off the per-tree path;
        # per-tree seeds make the result identical at any worker count
        bounds = [round(i * hp.n_trees / parallelism) for i in range(parallelism + 1)]

        def build_range(span: tuple[int, int]) -> list[DecisionTree]:
            return [build(i) for i in range(span[0], span[1])]

        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            chunks = pool.map(build_range, [(bounds[i], bounds[i + 1]) for i in range(parallelism)])
        trees = [t for chunk in chunks for t in chunk]
    else:
        trees = [build(i) for i in range(hp.n_trees)]
    return Forest(
        trees=trees,
        hp=hp,
        master_seed=master_seed,
        n_features=X.shape[1],
        schema_digest=schema_digest,
    )


def predict_matrix(forest: Forest, X: np.ndarray, backend_name: str | None = None) -> np.ndarray:
    """Confidence (positive-vote fraction) for each row of X."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise SchemaMismatch(
            f"matrix has {X.shape[1] if X.ndim == 2 else '?'} features, model expects {forest.n_features}"
        )
    flat = forest.flat_arrays()
    backend = get_backend(backend_name)
    votes = backend.predict_votes(
        flat["feature"], flat["threshold"], flat["left"], flat["right"], flat["label"], flat["roots"], X
    )
    return votes.astype(np.float64) / forest.n_trees


def predict_confidence(forest: Forest, fv, backend_name: str | None = None) -> float:
    """Confidence for a single feature vector (FeatureVector or 1-d array)."""
    values = getattr(fv, "values", fv)
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (forest.n_features,):
        raise SchemaMismatch(f"vector shape {arr.shape}, model expects ({forest.n_features},)")
    return float(predict_matrix(forest, arr.reshape(1, -1), backend_name)[0])


def forests_equal(a: Forest, b: Forest) -> bool:
    """Structural equality over every node of every tree."""
    if a.n_trees != b.n_trees or a.n_features != b.n_features:
        return False
    for ta, tb in zip(a.trees, b.trees):
        if ta.n_nodes != tb.n_nodes:
            return False
        if not (
            np.array_equal(ta.feature, tb.feature)
            and np.array_equal(ta.threshold, tb.threshold)
            and np.array_equal(ta.left, tb.left)
            and np.array_equal(ta.right, tb.right)
            and np.array_equal(ta.label, tb.label)
        ):
            return False
    return True


def save_forest(forest: Forest, path: str | Path) -> None:
    """Serialize to a versioned npz; round-trip is prediction-identical."""
    flat = forest.flat_arrays()
    meta = {
        "format_version": MODEL_FORMAT_VERSION,
        "n_trees": forest.n_trees,
        "n_features": forest.n_features,
        "schema_digest": forest.schema_digest,
        "master_seed": forest.master_seed,
        "hyperparams": {
            "n_trees": forest.hp.n_trees,
            "max_features_fraction": forest.hp.max_features_fraction,
            "n_examples_per_tree": forest.hp.n_examples_per_tree,
            "positive_fraction": forest.hp.positive_fraction,
        },
        "n_nodes": [t.n_nodes for t in forest.trees],
    }
    with open(path, "wb") as fh:
        np.savez(
            fh,
            meta=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
            feature=flat["feature"],
            threshold=flat["threshold"],
            left=flat["left"],
            right=flat["right"],
            label=flat["label"],
            roots=flat["roots"],
        )


def load_forest(path: str | Path) -> Forest:
    """Load a forest saved by :func:`save_forest`."""
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        if meta.get("format_version") != MODEL_FORMAT_VERSION:
            raise SchemaMismatch(f"unsupported model format {meta.get('format_version')!r}")
        feature = data["feature"]
        threshold = data["threshold"]
        left = data["left"]
        right = data["right"]
        label = data["label"]
        roots = data["roots"]
    trees = []
    offsets = list(roots) + [len(feature)]
    for i in range(len(roots)):
        lo, hi = int(offsets[i]), int(offsets[i + 1])
        rel_left = np.where(feature[lo:hi] >= 0, left[lo:hi] - lo, -1).astype(np.int32)
        rel_right = np.where(feature[lo:hi] >= 0, right[lo:hi] - lo, -1).astype(np.int32)
        trees.append(
            DecisionTree(
                feature=feature[lo:hi].copy(),
                threshold=threshold[lo:hi].copy(),
                left=rel_left,
                right=rel_right,
                label=label[lo:hi].copy(),
            )
        )
    hp = Hyperparams(**meta["hyperparams"])
    return Forest(
        trees=trees,
        hp=hp,
        master_seed=meta["master_seed"],
        n_features=meta["n_features"],
        schema_digest=meta["schema_digest"],
    )


def backend_name() -> str:
    """Name of the backend selected at import ("cython" or "python")."""
    return active_backend().name
