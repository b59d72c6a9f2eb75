"""Candidate pool construction: counting, mining, thresholds, union."""

import pytest

from ptdiscovery.candidates import (
    Candidate,
    best_split_npmi,
    build_candidate_pool,
    count_ngrams,
    entropy_bits,
    extract_query_candidates,
    mine_quality_phrases,
    quality_components,
    read_candidates,
    total_token_count,
    write_candidates,
)
from ptdiscovery.corpus import Catalog, QueryLog, QueryRecord, Sku, catalog_from_skus
from ptdiscovery.errors import DegenerateCorpus

from oracles import brute_best_split_npmi, brute_entropy_bits, brute_ngram_stats

# 20-title fixture: "ceiling fan" tokens always co-occur; "wood" and "glue"
# are frequent tokens that mostly occur apart, with "wood glue" at count 3.
FIXTURE_TITLES = [
    "hampton ceiling fan",
    "ceiling fan white",
    "hunter ceiling fan",
    "ceiling fan 52 in",
    "quiet ceiling fan",
    "wood table",
    "wood shelf",
    "glue stick",
    "glue gun",
    "wood glue",
    "wood glue bottle",
    "wood glue classic",
    "oak wood panel",
    "super glue gel",
    "pine wood board",
    "glue dots",
    "wood crate",
    "glue brush",
    "wood stain",
    "glue tape",
]


def fixture_catalog() -> Catalog:
    skus = [
        Sku(f"S{i}", tuple(title.split(" ")), (), "cat0", None)
        for i, title in enumerate(FIXTURE_TITLES)
    ]
    return catalog_from_skus(skus)


class TestCountNgrams:
    def test_simple_counts(self):
        catalog = catalog_from_skus(
            [
                Sku("A", ("wood", "glue"), (), "c", None),
                Sku("B", ("wood", "glue", "bottle"), (), "c", None),
            ]
        )
        stats = count_ngrams(catalog)
        assert stats["wood glue"].corpus_count == 2
        assert stats["wood"].corpus_count == 2
        assert stats["wood glue bottle"].corpus_count == 1
        assert stats["wood glue"].right_neighbor_counts == {"bottle": 1}

    def test_max_len_cutoff(self):
        title = tuple(f"t{i}" for i in range(7))
        stats = count_ngrams(catalog_from_skus([Sku("A", title, (), "c", None)]), max_len=6)
        assert " ".join(title) not in stats
        assert " ".join(title[:6]) in stats

    def test_title_initial_phrase_position_zero(self):
        catalog = catalog_from_skus(
            [
                Sku("A", ("drill", "bit", "set"), (), "c", None),
                Sku("B", ("drill", "bit", "kit"), (), "c", None),
            ]
        )
        assert count_ngrams(catalog)["drill bit"].mean_title_position == 0.0

    def test_empty_catalog(self):
        assert count_ngrams(catalog_from_skus([])) == {}

    def test_unigram_conservation(self):
        catalog = fixture_catalog()
        stats = count_ngrams(catalog)
        total_tokens = sum(len(s.title) + len(s.description) for s in catalog)
        assert total_token_count(stats) == total_tokens

    def test_matches_brute_force_recount(self):
        """Every count, neighbor map, and title position against the oracle."""
        catalog = fixture_catalog()
        stats = count_ngrams(catalog)
        oracle = brute_ngram_stats([(s.title, s.description) for s in catalog])
        assert set(stats) == set(oracle)
        for phrase, st in stats.items():
            ref = oracle[phrase]
            assert st.corpus_count == ref["count"]
            assert st.left_neighbor_counts == dict(ref["left"])
            assert st.right_neighbor_counts == dict(ref["right"])
            assert st.title_occurrences == ref["title_occ"]
            assert st.title_final_count == ref["title_final"]
            assert st.full_title_count == ref["full_title"]
            assert st.description_occurrences == ref["desc_occ"]
            if ref["title_occ"]:
                assert st.mean_title_position == pytest.approx(
                    ref["pos_sum"] / ref["title_occ"], abs=1e-12
                )


class TestMineQualityPhrases:
    def test_concordance_higher_for_cooccurring_pair(self):
        stats = count_ngrams(fixture_catalog())
        total = total_token_count(stats)
        npmi_cf = best_split_npmi(stats, "ceiling fan", total)
        npmi_wg = best_split_npmi(stats, "wood glue", total)
        assert npmi_cf == pytest.approx(1.0, abs=1e-12)
        assert npmi_cf > npmi_wg
        components = quality_components(stats, min_count=3)
        assert components["ceiling fan"][1] > components["wood glue"][1]

    def test_npmi_and_entropy_match_brute_force(self):
        stats = count_ngrams(fixture_catalog())
        oracle = brute_ngram_stats([(tuple(t.split(" ")), ()) for t in FIXTURE_TITLES])
        counts = {p: b["count"] for p, b in oracle.items()}
        total = sum(c for p, c in counts.items() if " " not in p)
        for phrase, st in stats.items():
            if st.corpus_count < 3:
                continue
            assert best_split_npmi(stats, phrase, total) == pytest.approx(
                brute_best_split_npmi(counts, phrase, total), abs=1e-9
            )
            assert entropy_bits(st.left_neighbor_counts.values()) == pytest.approx(
                brute_entropy_bits(oracle[phrase]["left"].values()), abs=1e-9
            )
            assert entropy_bits(st.right_neighbor_counts.values()) == pytest.approx(
                brute_entropy_bits(oracle[phrase]["right"].values()), abs=1e-9
            )

    def test_min_count_threshold(self):
        catalog = catalog_from_skus(
            [
                Sku("A", ("wood", "glue"), (), "c", None),
                Sku("B", ("wood", "glue"), (), "c", None),
                Sku("C", ("wood", "saw"), (), "c", None),
                Sku("D", ("hand", "saw"), (), "c", None),
                Sku("E", ("table", "saw"), (), "c", None),
            ]
        )
        quality = mine_quality_phrases(count_ngrams(catalog), min_count=3)
        assert "wood glue" not in quality  # count 2 < 3
        assert "wood" in quality
        assert "saw" in quality

    def test_degenerate_corpus(self):
        catalog = catalog_from_skus([Sku("A", ("wood",), (), "c", None)] * 1)
        with pytest.raises(DegenerateCorpus):
            mine_quality_phrases(count_ngrams(catalog), min_count=1)

    def test_scores_in_unit_interval_and_normalization_attains_bounds(self):
        stats = count_ngrams(fixture_catalog())
        quality = mine_quality_phrases(stats, min_count=3)
        assert all(0.0 <= q <= 1.0 for q in quality.values())
        components = quality_components(stats, min_count=3)
        for i in range(3):
            values = [c[i] for c in components.values()]
            assert min(values) == 0.0
            assert max(values) == 1.0


class TestExtractQueryCandidates:
    def make_log(self, volumes):
        return QueryLog(
            records={q: QueryRecord(q, v) for q, v in volumes.items()}, digest="x"
        )

    def test_threshold_filter(self):
        log = self.make_log({"hammer": 100, "ge": 50, "drill bit": 5})
        assert extract_query_candidates(log, 10) == {"hammer", "ge"}

    def test_vacuous_threshold(self):
        log = self.make_log({"a": 1, "b": 2})
        assert extract_query_candidates(log, 1) == {"a", "b"}

    def test_empty_log(self):
        assert extract_query_candidates(self.make_log({}), 5) == set()


class TestBuildCandidatePool:
    def test_phrase_in_both_sources(self):
        pool = build_candidate_pool({"flashlight": 40}, {"flashlight": 0.8})
        c = pool["flashlight"]
        assert c.from_query and c.from_catalog
        assert c.query_volume == 40
        assert c.quality == 0.8

    def test_disjoint_union_size(self):
        pool = build_candidate_pool(
            {"a": 1, "b": 2, "c": 3}, {"d": 0.1, "e": 0.2, "f": 0.3, "g": 0.4}
        )
        assert len(pool) == 7

    def test_too_long_query_dropped(self):
        eight = " ".join(f"t{i}" for i in range(8))
        pool = build_candidate_pool({eight: 50, "ok": 5}, {})
        assert eight not in pool
        assert "ok" in pool

    def test_size_bounded_by_inputs(self):
        q = {"a": 1, "b": 2}
        m = {"b": 0.5, "c": 0.6}
        pool = build_candidate_pool(q, m)
        assert len(pool) == 3 < len(q) + len(m)

    def test_export_round_trip(self, tmp_path):
        pool = build_candidate_pool({"a": 1, "b": 2}, {"b": 0.5, "c": 0.25})
        path = tmp_path / "pool.jsonl"
        write_candidates(path, pool)
        again = read_candidates(path)
        assert set(again) == set(pool)
        for phrase in pool:
            assert again[phrase].quality == pool[phrase].quality
            assert again[phrase].from_query == pool[phrase].from_query


def test_candidate_validation():
    with pytest.raises(ValueError):
        Candidate("x", from_query=False, from_catalog=False)
    with pytest.raises(ValueError):
        Candidate("x", from_query=True, from_catalog=False, quality=1.5)
