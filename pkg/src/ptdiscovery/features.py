"""Fixed 30-dimension feature schema over candidates.

Four signal families: the mined quality score, intrinsic phrase shape,
catalog context, and search-log context, plus two source flags. Features
whose source data is absent are zero-filled; presence is indicated by the
source-flag features, so every value is finite for every pool candidate.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .candidates import Candidate, NgramStats, best_split_npmi, count_ngrams, entropy_bits, total_token_count
from .corpus import Catalog, QueryLog, QueryRecord, normalize_phrase, phrase_tokens
from .errors import EmptyLexicon, EmptyPhrase, SchemaMismatch

FEATURE_NAMES: tuple[str, ...] = (
    "quality_score",
    # intrinsic
    "token_count",
    "char_count",
    "has_digit",
    "has_unit",
    "has_brand",
    "starts_with_brand",
    "has_stopword",
    # catalog context
    "log_title_occurrences",
    "log_description_occurrences",
    "doc_frequency_ratio",
    "mean_title_position",
    "title_final_fraction",
    "distinct_category_count",
    "left_neighbor_entropy",
    "right_neighbor_entropy",
    "best_split_npmi",
    "full_title_ratio",
    # search context
    "from_query",
    "log_query_volume",
    "global_volume_share",
    "top_category_volume_share",
    "category_volume_entropy",
    "log_distinct_clicked_skus",
    "click_entropy",
    "max_sku_click_share",
    "clicks_per_volume",
    "exact_title_match_ratio",
    # source flags
    "from_catalog",
    "in_both",
)

FEATURE_DIM = len(FEATURE_NAMES)
assert FEATURE_DIM == 30

DEFAULT_UNITS = frozenset(
    "cu ft mm cm in inch volt v watt w amp gal gallon oz lb pound qt kw hp psi ah mil ml liter".split()
)
DEFAULT_STOPWORDS = frozenset(
    "the a an and or of for with to in on by at from per without".split()
)


def schema_digest() -> str:
    """Stable digest of the feature schema; stored with every trained model."""
    return hashlib.sha256(",".join(FEATURE_NAMES).encode("utf-8")).hexdigest()[:16]


def click_entropy(sku_clicks: Mapping[str, int]) -> float:
    """Shannon entropy (base 2) of the click distribution over SKUs."""
    return entropy_bits(sku_clicks.values())


@dataclass(frozen=True)
class Lexicons:
    """External term lists feeding the intrinsic features."""

    brands: frozenset[str]
    units: frozenset[str]
    stopwords: frozenset[str]


def load_lexicon(path: str | Path) -> frozenset[str]:
    """Read one normalized term per line; blank lines ignored."""
    terms = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            try:
                terms.add(normalize_phrase(line))
            except EmptyPhrase:
                continue
    return frozenset(terms)


def brands_from_catalog(catalog: Catalog) -> frozenset[str]:
    """Brand lexicon read off the catalog's own brand column."""
    return frozenset(sku.brand for sku in catalog if sku.brand)


def default_lexicons(catalog: Catalog | None = None, brands: frozenset[str] | None = None) -> Lexicons:
    if brands is None:
        brands = brands_from_catalog(catalog) if catalog is not None else frozenset()
    return Lexicons(brands=brands, units=DEFAULT_UNITS, stopwords=DEFAULT_STOPWORDS)


@dataclass
class CorpusStats:
    """Deterministic corpus-level aggregates feeding feature extraction."""

    ngrams: dict[str, NgramStats]
    total_tokens: int
    n_docs: int
    query_records: dict[str, QueryRecord]
    category_query_totals: dict[str, int]
    global_query_total: int
    sku_titles: dict[str, str]
    lexicons: Lexicons | None


def compute_corpus_stats(
    catalog: Catalog,
    query_log: QueryLog,
    lexicons: Lexicons,
    ngrams: dict[str, NgramStats] | None = None,
) -> CorpusStats:
    """Aggregate both stores into the statistics extract_features consumes.

    Document order does not affect the result. Pass precomputed ``ngrams`` to
    skip recounting when the mining stage already ran.

    Raises:
        EmptyLexicon: any of the three lexicons is empty.
    """
    for name in ("brands", "units", "stopwords"):
        if not getattr(lexicons, name):
            raise EmptyLexicon(f"{name} lexicon is empty")
    if ngrams is None:
        ngrams = count_ngrams(catalog)
    category_totals: dict[str, int] = {}
    global_total = 0
    for rec in query_log:
        global_total += rec.volume
        for cat, vol in rec.category_volumes.items():
            category_totals[cat] = category_totals.get(cat, 0) + vol
    return CorpusStats(
        ngrams=ngrams,
        total_tokens=total_token_count(ngrams),
        n_docs=len(catalog),
        query_records=dict(query_log.records),
        category_query_totals=category_totals,
        global_query_total=global_total,
        sku_titles={sku.sku_id: " ".join(sku.title) for sku in catalog},
        lexicons=lexicons,
    )


@dataclass(frozen=True)
class FeatureVector:
    """Exactly 30 finite values in FEATURE_NAMES order."""

    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (FEATURE_DIM,):
            raise SchemaMismatch(f"expected {FEATURE_DIM} values, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise SchemaMismatch("non-finite feature value")

    def as_dict(self) -> dict[str, float]:
        return {name: float(v) for name, v in zip(FEATURE_NAMES, self.values)}


def _has_span_in(tokens: tuple[str, ...], lexicon: frozenset[str]) -> bool:
    n = len(tokens)
    for i in range(n):
        for j in range(i + 1, n + 1):
            if " ".join(tokens[i:j]) in lexicon:
                return True
    return False


def _starts_with_span_in(tokens: tuple[str, ...], lexicon: frozenset[str]) -> bool:
    for j in range(1, len(tokens) + 1):
        if " ".join(tokens[:j]) in lexicon:
            return True
    return False


def extract_features(c: Candidate, stats: CorpusStats) -> FeatureVector:
    """Map one candidate to its 30-feature vector (pure function of inputs).

    Raises:
        SchemaMismatch: corpus stats carry no lexicons.
    """
    if stats.lexicons is None:
        raise SchemaMismatch("corpus stats have no lexicons attached")
    lex = stats.lexicons
    toks = phrase_tokens(c.phrase)
    v = np.zeros(FEATURE_DIM, dtype=np.float64)

    v[0] = c.quality
    v[1] = len(toks)
    v[2] = len(c.phrase)
    v[3] = 1.0 if any(ch.isdigit() for ch in c.phrase) else 0.0
    v[4] = 1.0 if any(t in lex.units for t in toks) else 0.0
    v[5] = 1.0 if _has_span_in(toks, lex.brands) else 0.0
    v[6] = 1.0 if _starts_with_span_in(toks, lex.brands) else 0.0
    v[7] = 1.0 if any(t in lex.stopwords for t in toks) else 0.0

    st = stats.ngrams.get(c.phrase)
    if st is not None:
        v[8] = math.log1p(st.title_occurrences)
        v[9] = math.log1p(st.description_occurrences)
        v[10] = st.doc_count / stats.n_docs if stats.n_docs else 0.0
        v[11] = st.mean_title_position
        v[12] = st.title_final_count / st.title_occurrences if st.title_occurrences else 0.0
        v[13] = len(st.categories)
        v[14] = entropy_bits(st.left_neighbor_counts.values())
        v[15] = entropy_bits(st.right_neighbor_counts.values())
        v[16] = best_split_npmi(stats.ngrams, c.phrase, stats.total_tokens)
        v[17] = st.full_title_count / st.title_occurrences if st.title_occurrences else 0.0

    rec = stats.query_records.get(c.phrase)
    if rec is not None and c.from_query:
        v[18] = 1.0
        v[19] = math.log1p(rec.volume)
        v[20] = rec.volume / stats.global_query_total if stats.global_query_total else 0.0
        if rec.category_volumes and rec.volume:
            v[21] = max(rec.category_volumes.values()) / rec.volume
        v[22] = entropy_bits(rec.category_volumes.values())
        clicked = [n for n in rec.sku_clicks.values() if n > 0]
        v[23] = math.log1p(len(clicked))
        v[24] = click_entropy(rec.sku_clicks)
        total_clicks = rec.total_clicks
        if total_clicks:
            v[25] = max(rec.sku_clicks.values()) / total_clicks
            exact = sum(
                n for sku_id, n in rec.sku_clicks.items() if stats.sku_titles.get(sku_id) == c.phrase
            )
            v[27] = exact / total_clicks
        if rec.volume:
            v[26] = total_clicks / rec.volume

    v[28] = 1.0 if c.from_catalog else 0.0
    v[29] = 1.0 if (c.from_query and c.from_catalog) else 0.0
    return FeatureVector(values=v)


@dataclass
class FeatureStore:
    """Pool-wide feature matrix with a stable phrase ordering."""

    phrases: tuple[str, ...]
    matrix: np.ndarray
    digest: str

    def __post_init__(self):
        self.index = {p: i for i, p in enumerate(self.phrases)}

    def rows_for(self, phrases: Iterable[str]) -> np.ndarray:
        """Row indices for the given phrases, in sorted-phrase order."""
        return np.array(sorted(self.index[p] for p in phrases), dtype=np.int64)


def build_feature_store(pool: Mapping[str, Candidate], stats: CorpusStats) -> FeatureStore:
    """Extract every pool candidate into one (n, 30) float64 matrix."""
    phrases = tuple(sorted(pool))
    matrix = np.empty((len(phrases), FEATURE_DIM), dtype=np.float64)
    for i, phrase in enumerate(phrases):
        matrix[i] = extract_features(pool[phrase], stats).values
    return FeatureStore(phrases=phrases, matrix=matrix, digest=schema_digest())


def write_feature_csv(path: str | Path, store: FeatureStore) -> None:
    """Feature-matrix export: phrase key column + the 30 feature columns."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("phrase," + ",".join(FEATURE_NAMES) + "\n")
        for i, phrase in enumerate(store.phrases):
            row = ",".join(repr(float(x)) for x in store.matrix[i])
            fh.write(f"{phrase},{row}\n")
