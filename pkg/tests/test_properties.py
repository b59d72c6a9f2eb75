"""Randomized invariant suite (1,000+ cases per property).

Covers pool partition conservation, no re-presentation of decided phrases,
vote-fraction confidences, coverage monotonicity, normalization idempotence,
and save/load prediction identity.
"""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from ptdiscovery.corpus import normalize_phrase
from ptdiscovery.errors import EmptyPhrase
from ptdiscovery.forest import Hyperparams, load_forest, predict_matrix, save_forest, train_forest
from ptdiscovery.loop import (
    APPROVED,
    DEFERRED,
    REJECTED,
    LabelDecision,
    PoolState,
    SelectionPolicy,
    apply_labels,
    compute_coverage,
    rank_candidates,
)

CASES = settings(
    max_examples=1000,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)

phrase_st = st.text(alphabet="abcdefgh", min_size=1, max_size=4)


def build_state(universe: list[str], n_known: int) -> PoolState:
    return PoolState.from_candidates(universe, universe[:n_known])


@CASES
@given(
    universe=st.lists(phrase_st, min_size=2, max_size=18, unique=True),
    data=st.data(),
)
def test_pool_partition_conserved_under_random_decisions(universe, data):
    n_known = data.draw(st.integers(0, len(universe) - 1))
    state = build_state(universe, n_known)
    expected_universe = state.universe
    for _ in range(data.draw(st.integers(1, 4))):
        unlabeled = sorted(state.unlabeled)
        if not unlabeled:
            break
        picks = data.draw(
            st.lists(st.sampled_from(unlabeled), max_size=len(unlabeled), unique=True)
        )
        verdicts = [
            data.draw(st.sampled_from([APPROVED, REJECTED, DEFERRED])) for _ in picks
        ]
        state = apply_labels(state, [LabelDecision(p, v) for p, v in zip(picks, verdicts)])
        parts = (state.positive, state.unlabeled, state.rejected, state.deferred)
        assert state.universe == expected_universe
        assert sum(len(p) for p in parts) == len(expected_universe)
        for i in range(4):
            for j in range(i + 1, 4):
                assert not (parts[i] & parts[j])


@CASES
@given(
    universe=st.lists(phrase_st, min_size=3, max_size=15, unique=True),
    seed=st.integers(0, 2**32 - 1),
    k=st.integers(1, 5),
    data=st.data(),
)
def test_decided_phrases_never_represented(universe, seed, k, data):
    """Approved/Rejected leave the presentable set; Deferred sits in review."""
    rng = np.random.default_rng(seed)
    n_known = data.draw(st.integers(0, len(universe) - 1))
    state = build_state(universe, n_known)
    decided: set[str] = set()
    for _ in range(4):
        scores = {p: float(rng.random()) for p in universe}
        batch = rank_candidates(scores, state.unlabeled, SelectionPolicy.top_k(k))
        phrases = [p for p, _ in batch]
        assert not (set(phrases) & decided)
        assert set(phrases) <= state.unlabeled
        decisions = [
            LabelDecision(p, [APPROVED, REJECTED, DEFERRED][i % 3])
            for i, p in enumerate(phrases)
        ]
        state = apply_labels(state, decisions)
        decided |= {d.phrase for d in decisions}  # deferred never auto-presented either


@CASES
@given(
    seed=st.integers(0, 2**32 - 1),
    n_trees=st.integers(1, 6),
    n_rows=st.integers(6, 24),
)
def test_confidence_is_integer_multiple_of_vote(seed, n_trees, n_rows):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n_rows, 4))
    n_pos = max(1, n_rows // 3)
    hp = Hyperparams(n_trees=n_trees, n_examples_per_tree=12, positive_fraction=0.25)
    forest = train_forest(
        np.arange(n_pos), np.arange(n_pos, n_rows), X, hp, master_seed=seed
    )
    conf = predict_matrix(forest, X)
    assert np.all(conf >= 0.0) and np.all(conf <= 1.0)
    votes = conf * n_trees
    assert np.allclose(votes, np.round(votes), atol=0.0)


@CASES
@given(
    universe=st.lists(phrase_st, min_size=3, max_size=15, unique=True),
    data=st.data(),
)
def test_coverage_monotone_under_approvals(universe, data):
    n_known = data.draw(st.integers(0, len(universe) - 1))
    state = build_state(universe, n_known)
    truth = frozenset(
        data.draw(st.lists(st.sampled_from(universe), min_size=1, unique=True))
    )
    last = compute_coverage(state, truth)
    for phrase in sorted(state.unlabeled):
        if data.draw(st.booleans()):
            state = apply_labels(state, [LabelDecision(phrase, APPROVED)])
            cov = compute_coverage(state, truth)
            assert cov >= last
            assert 0.0 <= cov <= 1.0
            last = cov


@CASES
@given(raw=st.text(max_size=30))
def test_normalize_idempotent(raw):
    try:
        once = normalize_phrase(raw)
    except EmptyPhrase:
        return
    assert normalize_phrase(once) == once


@pytest.fixture(scope="module")
def model_path(tmp_path_factory):
    return tmp_path_factory.mktemp("models") / "roundtrip.npz"


@CASES
@given(
    seed=st.integers(0, 2**32 - 1),
    n_trees=st.integers(1, 5),
)
def test_save_load_prediction_identity(model_path, seed, n_trees):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(14, 5))
    hp = Hyperparams(n_trees=n_trees, n_examples_per_tree=10, positive_fraction=0.3)
    forest = train_forest(np.arange(4), np.arange(4, 14), X, hp, master_seed=seed)
    save_forest(forest, model_path)
    loaded = load_forest(model_path)
    assert np.array_equal(predict_matrix(forest, X), predict_matrix(loaded, X))
