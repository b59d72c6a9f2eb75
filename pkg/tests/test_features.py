"""Feature schema: 30 finite values, zero-fill rules, entropy contracts."""

import math

import numpy as np
import pytest

from ptdiscovery.candidates import Candidate
from ptdiscovery.corpus import QueryRecord, Sku, catalog_from_skus, query_log_from_records
from ptdiscovery.errors import EmptyLexicon, SchemaMismatch
from ptdiscovery.features import (
    FEATURE_DIM,
    FEATURE_NAMES,
    FeatureVector,
    Lexicons,
    click_entropy,
    compute_corpus_stats,
    extract_features,
    load_lexicon,
    schema_digest,
)

from oracles import brute_ngram_stats

LEX = Lexicons(
    brands=frozenset({"gorilla", "ge"}),
    units=frozenset({"cu", "ft", "oz"}),
    stopwords=frozenset({"the", "with"}),
)


def small_corpus():
    skus = [
        Sku("A", ("gorilla", "wood", "glue", "16", "oz"), ("strong", "wood", "glue"), "adhesives", "gorilla"),
        Sku("B", ("wood", "glue", "bottle"), (), "adhesives", None),
        Sku("C", ("utility", "sink"), ("deep", "utility", "sink"), "plumbing", None),
        Sku("D", ("wood", "glue"), (), "hardware", None),
    ]
    records = [
        QueryRecord("wood glue", 40, {"adhesives": 30, "hardware": 5}, {"A": 6, "B": 2}),
        QueryRecord("utility sink", 10, {"plumbing": 10}, {"C": 4}),
    ]
    return catalog_from_skus(skus), query_log_from_records(records)


class TestClickEntropy:
    def test_uniform_over_four(self):
        assert click_entropy({"a": 5, "b": 5, "c": 5, "d": 5}) == pytest.approx(2.0)

    def test_single_sku(self):
        assert click_entropy({"a": 9}) == 0.0

    def test_three_one_split(self):
        # -0.75*log2(0.75) - 0.25*log2(0.25), worked by hand
        assert click_entropy({"a": 3, "b": 1}) == pytest.approx(0.811278, abs=1e-6)

    def test_empty_and_zero(self):
        assert click_entropy({}) == 0.0
        assert click_entropy({"a": 0}) == 0.0

    def test_bounded_by_log2_distinct(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            k = int(rng.integers(1, 9))
            clicks = {f"s{i}": int(rng.integers(1, 50)) for i in range(k)}
            assert click_entropy(clicks) <= math.log2(k) + 1e-12


class TestExtractFeatures:
    def setup_method(self):
        catalog, qlog = small_corpus()
        self.stats = compute_corpus_stats(catalog, qlog, LEX)

    def test_vector_length_and_schema(self):
        c = Candidate("wood glue", True, True, 40, quality=0.7)
        fv = extract_features(c, self.stats)
        assert fv.values.shape == (FEATURE_DIM,)
        assert len(FEATURE_NAMES) == 30
        assert len(set(FEATURE_NAMES)) == 30

    def test_digit_and_unit_lexicon(self):
        c = Candidate("7.4 cu ft", False, True, quality=0.1)
        fv = extract_features(c, self.stats).as_dict()
        assert fv["has_digit"] == 1.0
        assert fv["has_unit"] == 1.0
        assert fv["has_brand"] == 0.0

    def test_brand_features(self):
        c = Candidate("gorilla wood glue", False, True, quality=0.2)
        fv = extract_features(c, self.stats).as_dict()
        assert fv["has_brand"] == 1.0
        assert fv["starts_with_brand"] == 1.0
        c2 = Candidate("wood glue gorilla", False, True, quality=0.2)
        fv2 = extract_features(c2, self.stats).as_dict()
        assert fv2["has_brand"] == 1.0
        assert fv2["starts_with_brand"] == 0.0

    def test_catalog_only_candidate_zero_fills_search_block(self):
        c = Candidate("utility sink", False, True, quality=0.5)
        fv = extract_features(c, self.stats).as_dict()
        search_names = FEATURE_NAMES[18:28]
        assert all(fv[name] == 0.0 for name in search_names)
        assert fv["from_query"] == 0.0
        assert fv["from_catalog"] == 1.0
        assert fv["in_both"] == 0.0

    def test_search_features_present_for_query_candidate(self):
        c = Candidate("wood glue", True, True, 40, quality=0.7)
        fv = extract_features(c, self.stats).as_dict()
        assert fv["from_query"] == 1.0
        assert fv["log_query_volume"] == pytest.approx(math.log1p(40))
        assert fv["top_category_volume_share"] == pytest.approx(30 / 40)
        assert fv["max_sku_click_share"] == pytest.approx(6 / 8)
        assert fv["clicks_per_volume"] == pytest.approx(8 / 40)
        assert fv["in_both"] == 1.0

    def test_exact_title_match_ratio(self):
        # clicks on D (title exactly "wood glue") count as exact matches
        catalog, _ = small_corpus()
        qlog = query_log_from_records([QueryRecord("wood glue", 20, {}, {"D": 3, "A": 1})])
        stats = compute_corpus_stats(catalog, qlog, LEX)
        c = Candidate("wood glue", True, True, 20, quality=0.7)
        fv = extract_features(c, stats).as_dict()
        assert fv["exact_title_match_ratio"] == pytest.approx(3 / 4)

    def test_pure_function(self):
        c = Candidate("wood glue", True, True, 40, quality=0.7)
        a = extract_features(c, self.stats)
        b = extract_features(c, self.stats)
        assert np.array_equal(a.values, b.values)

    def test_all_finite_on_world_pool(self, small_pipeline):
        assert np.all(np.isfinite(small_pipeline.store.matrix))

    def test_missing_lexicons_schema_mismatch(self):
        self.stats.lexicons = None
        with pytest.raises(SchemaMismatch):
            extract_features(Candidate("wood glue", True, True, 40), self.stats)


class TestComputeCorpusStats:
    def test_title_occurrences_match_brute_force(self):
        catalog, qlog = small_corpus()
        stats = compute_corpus_stats(catalog, qlog, LEX)
        oracle = brute_ngram_stats([(s.title, s.description) for s in catalog])
        for phrase in ("wood glue", "utility sink", "wood", "glue bottle"):
            assert stats.ngrams[phrase].title_occurrences == oracle[phrase]["title_occ"]

    def test_order_independent(self):
        catalog, qlog = small_corpus()
        a = compute_corpus_stats(catalog, qlog, LEX)
        reversed_catalog = catalog_from_skus(list(catalog)[::-1])
        b = compute_corpus_stats(reversed_catalog, qlog, LEX)
        for phrase, st in a.ngrams.items():
            other = b.ngrams[phrase]
            assert st.corpus_count == other.corpus_count
            assert st.title_occurrences == other.title_occurrences
            assert st.mean_title_position == pytest.approx(other.mean_title_position)
        assert a.global_query_total == b.global_query_total
        assert a.category_query_totals == b.category_query_totals

    def test_empty_brand_lexicon_rejected(self):
        catalog, qlog = small_corpus()
        empty = Lexicons(brands=frozenset(), units=LEX.units, stopwords=LEX.stopwords)
        with pytest.raises(EmptyLexicon):
            compute_corpus_stats(catalog, qlog, empty)

    def test_query_totals(self):
        catalog, qlog = small_corpus()
        stats = compute_corpus_stats(catalog, qlog, LEX)
        assert stats.global_query_total == 50
        assert stats.category_query_totals["adhesives"] == 30


class TestFeatureStore:
    def test_store_shape_and_digest(self, small_pipeline):
        store = small_pipeline.store
        assert store.matrix.shape == (len(store.phrases), FEATURE_DIM)
        assert store.digest == schema_digest()

    def test_rows_for_sorted(self, small_pipeline):
        store = small_pipeline.store
        subset = set(store.phrases[:5]) | {store.phrases[-1]}
        rows = store.rows_for(subset)
        assert list(rows) == sorted(rows)


def test_feature_vector_validation():
    with pytest.raises(SchemaMismatch):
        FeatureVector(values=np.zeros(29))
    with pytest.raises(SchemaMismatch):
        FeatureVector(values=np.full(30, np.nan))


def test_load_lexicon(tmp_path):
    path = tmp_path / "units.txt"
    path.write_text("Cu\nFT\n\n  mm \n", encoding="utf-8")
    assert load_lexicon(path) == frozenset({"cu", "ft", "mm"})
