"""Candidate pool construction from the two knowledge sources.

Frequent search queries pass a volume threshold; catalog phrases are mined
with a transparent statistical scorer (frequency + best-split concordance +
branching entropy) standing in for an external phrase-mining tool. The union
of the two sources, keyed by normalized phrase, is the pool every downstream
stage consumes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import Catalog, QueryLog, phrase_tokens
from .errors import DegenerateCorpus

MAX_PHRASE_TOKENS = 6
DEFAULT_MIN_COUNT = 3


def entropy_bits(counts: Iterable[int | float]) -> float:
    """Shannon entropy (base 2) of a count distribution. Empty/all-zero -> 0."""
    total = 0.0
    for c in counts:
        total += c
    if total <= 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    return h


@dataclass
class NgramStats:
    """Corpus statistics for one contiguous n-gram.

    ``mean_title_position`` is the token start index divided by title length,
    averaged over title occurrences (0.0 when the phrase never appears in a
    title). Neighbor maps skip field boundaries, so corpus_count bounds every
    neighbor total from above.
    """

    phrase: str
    corpus_count: int = 0
    left_neighbor_counts: dict[str, int] = field(default_factory=dict)
    right_neighbor_counts: dict[str, int] = field(default_factory=dict)
    title_occurrences: int = 0
    mean_title_position: float = 0.0
    description_occurrences: int = 0
    doc_count: int = 0
    title_final_count: int = 0
    full_title_count: int = 0
    categories: set[str] = field(default_factory=set)

    # internal accumulator; folded into mean_title_position by count_ngrams
    _title_position_sum: float = 0.0


def count_ngrams(catalog: Catalog, max_len: int = MAX_PHRASE_TOKENS) -> dict[str, NgramStats]:
    """Count every contiguous n-gram (1..max_len tokens) of titles and descriptions.

    Neighbor maps record the token immediately left/right of each occurrence
    within the same field. An empty catalog yields an empty map.
    """
    stats: dict[str, NgramStats] = {}
    for sku in catalog:
        seen_in_doc: set[str] = set()
        for field_name, toks in (("title", sku.title), ("description", sku.description)):
            length = len(toks)
            is_title = field_name == "title"
            for n in range(1, min(max_len, length) + 1):
                for i in range(length - n + 1):
                    phrase = " ".join(toks[i : i + n])
                    st = stats.get(phrase)
                    if st is None:
                        st = NgramStats(phrase)
                        stats[phrase] = st
                    st.corpus_count += 1
                    if i > 0:
                        tok = toks[i - 1]
                        st.left_neighbor_counts[tok] = st.left_neighbor_counts.get(tok, 0) + 1
                    if i + n < length:
                        tok = toks[i + n]
                        st.right_neighbor_counts[tok] = st.right_neighbor_counts.get(tok, 0) + 1
                    if is_title:
                        st.title_occurrences += 1
                        st._title_position_sum += i / length
                        if i + n == length:
                            st.title_final_count += 1
                        if n == length:
                            st.full_title_count += 1
                    else:
                        st.description_occurrences += 1
                    if phrase not in seen_in_doc:
                        seen_in_doc.add(phrase)
                        st.doc_count += 1
                        st.categories.add(sku.category)
    for st in stats.values():
        if st.title_occurrences:
            st.mean_title_position = st._title_position_sum / st.title_occurrences
    return stats


def total_token_count(stats: Mapping[str, NgramStats]) -> int:
    """Total token occurrences in the corpus (sum over unigram counts)."""
    return sum(st.corpus_count for p, st in stats.items() if " " not in p)


def best_split_npmi(stats: Mapping[str, NgramStats], phrase: str, total_tokens: int) -> float:
    """Normalized PMI of the phrase's best binary token split.

    All probabilities share the single space p(x) = count(x) / total_tokens,
    so perfect co-occurrence scores exactly 1.0. Unigrams, which have no
    split, take the neutral value 1.0.
    """
    toks = phrase.split(" ")
    if len(toks) < 2:
        return 1.0
    st = stats.get(phrase)
    if st is None or st.corpus_count == 0 or total_tokens <= 0:
        return 0.0
    log_pw = math.log(st.corpus_count / total_tokens)
    best = -1.0
    for k in range(1, len(toks)):
        left = " ".join(toks[:k])
        right = " ".join(toks[k:])
        left_st = stats.get(left)
        right_st = stats.get(right)
        if left_st is None or right_st is None:
            continue
        pmi = (
            log_pw
            - math.log(left_st.corpus_count / total_tokens)
            - math.log(right_st.corpus_count / total_tokens)
        )
        npmi = pmi / -log_pw
        if npmi > best:
            best = npmi
    return best


def _min_max(values: list[float]) -> list[float]:
    lo = min(values)
    hi = max(values)
    if hi == lo:
        return [0.5] * len(values)
    span = hi - lo
    return [(v - lo) / span for v in values]


def quality_components(
    stats: Mapping[str, NgramStats], min_count: int = DEFAULT_MIN_COUNT
) -> dict[str, tuple[float, float, float]]:
    """Per-phrase normalized (frequency, concordance, entropy) components.

    Raises:
        DegenerateCorpus: fewer than 2 phrases survive min_count.
    """
    surviving = [st for st in stats.values() if st.corpus_count >= min_count]
    if len(surviving) < 2:
        raise DegenerateCorpus(
            f"only {len(surviving)} phrase(s) with count >= {min_count}; need at least 2"
        )
    total = total_token_count(stats)
    freq_raw = [math.log(st.corpus_count) for st in surviving]
    conc_raw = [best_split_npmi(stats, st.phrase, total) for st in surviving]
    ent_raw = [
        min(entropy_bits(st.left_neighbor_counts.values()), entropy_bits(st.right_neighbor_counts.values()))
        for st in surviving
    ]
    f_norm = _min_max(freq_raw)
    c_norm = _min_max(conc_raw)
    e_norm = _min_max(ent_raw)
    return {
        st.phrase: (f_norm[i], c_norm[i], e_norm[i]) for i, st in enumerate(surviving)
    }


def mine_quality_phrases(
    stats: Mapping[str, NgramStats], min_count: int = DEFAULT_MIN_COUNT
) -> dict[str, float]:
    """Score phrases with corpus_count >= min_count.

    quality = mean of min-max-normalized log-frequency, best-split NPMI
    (unigrams neutral 1.0 pre-normalization), and min(left, right) neighbor
    entropy, all normalized over the surviving set.
    """
    components = quality_components(stats, min_count)
    return {p: (f + c + e) / 3.0 for p, (f, c, e) in components.items()}


def extract_query_candidates(log: QueryLog, min_volume: int) -> set[str]:
    """Queries whose volume meets the threshold, as normalized phrases."""
    return {rec.query for rec in log if rec.volume >= min_volume}


@dataclass
class Candidate:
    """A pool member: one normalized phrase plus its source flags and scores."""

    phrase: str
    from_query: bool
    from_catalog: bool
    query_volume: int = 0
    ngram: NgramStats | None = None
    quality: float = 0.0

    def __post_init__(self):
        if not (self.from_query or self.from_catalog):
            raise ValueError(f"candidate {self.phrase!r} has no source")
        if not 0.0 <= self.quality <= 1.0:
            raise ValueError(f"quality {self.quality} outside [0, 1]")
        n = len(phrase_tokens(self.phrase))
        if not 1 <= n <= MAX_PHRASE_TOKENS:
            raise ValueError(f"phrase {self.phrase!r} has {n} tokens")


def build_candidate_pool(
    query_volumes: Mapping[str, int],
    quality_scores: Mapping[str, float],
    stats: Mapping[str, NgramStats] | None = None,
) -> dict[str, Candidate]:
    """Union the two candidate sources, keyed by phrase.

    A phrase present in both sources carries both flags and both statistics.
    Query-only candidates take quality 0 unless the mining pass scored them.
    Phrases longer than 6 tokens (or empty) are dropped. The result dict is
    ordered by phrase for deterministic export.
    """
    stats = stats or {}
    pool: dict[str, Candidate] = {}
    for phrase in sorted(set(query_volumes) | set(quality_scores)):
        n_tokens = len(phrase.split(" ")) if phrase else 0
        if not 1 <= n_tokens <= MAX_PHRASE_TOKENS or not phrase:
            continue
        pool[phrase] = Candidate(
            phrase=phrase,
            from_query=phrase in query_volumes,
            from_catalog=phrase in quality_scores,
            query_volume=query_volumes.get(phrase, 0),
            ngram=stats.get(phrase),
            quality=quality_scores.get(phrase, 0.0),
        )
    return pool


def write_candidates(path: str | Path, pool: Mapping[str, Candidate]) -> None:
    """Export the pool as line-delimited records (phrase, flags, volume, quality)."""
    with open(path, "w", encoding="utf-8") as fh:
        for phrase in sorted(pool):
            c = pool[phrase]
            fh.write(
                json.dumps(
                    {
                        "phrase": c.phrase,
                        "from_query": c.from_query,
                        "from_catalog": c.from_catalog,
                        "query_volume": c.query_volume,
                        "quality": c.quality,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_candidates(path: str | Path) -> dict[str, Candidate]:
    """Load a pool export written by :func:`write_candidates`."""
    pool: dict[str, Candidate] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            pool[rec["phrase"]] = Candidate(
                phrase=rec["phrase"],
                from_query=rec["from_query"],
                from_catalog=rec["from_catalog"],
                query_volume=rec.get("query_volume", 0),
                quality=rec.get("quality", 0.0),
            )
    return pool


def mine_pool(
    catalog: Catalog,
    query_log: QueryLog,
    min_volume: int,
    min_count: int = DEFAULT_MIN_COUNT,
    max_len: int = MAX_PHRASE_TOKENS,
) -> tuple[dict[str, Candidate], dict[str, NgramStats]]:
    """End-to-end pool construction; returns (pool, ngram stats)."""
    stats = count_ngrams(catalog, max_len)
    quality = mine_quality_phrases(stats, min_count)
    volumes = {q: query_log.records[q].volume for q in extract_query_candidates(query_log, min_volume)}
    return build_candidate_pool(volumes, quality, stats), stats
