"""Active-learning toolkit for product-type phrase discovery.

Pipeline: ingest catalog + query log, mine a candidate pool, extract a fixed
30-feature vector per candidate, train a positive-only distant random forest,
and iterate high-confidence labeling batches through either a simulated
oracle or a human labeling service.
"""

from .candidates import (
    Candidate,
    NgramStats,
    build_candidate_pool,
    count_ngrams,
    extract_query_candidates,
    mine_pool,
    mine_quality_phrases,
)
from .corpus import Catalog, QueryLog, QueryRecord, Sku, load_catalog, load_query_log, normalize_phrase
from .features import (
    FEATURE_DIM,
    FEATURE_NAMES,
    CorpusStats,
    FeatureStore,
    FeatureVector,
    Lexicons,
    build_feature_store,
    click_entropy,
    compute_corpus_stats,
    extract_features,
)
from .forest import (
    DecisionTree,
    Forest,
    Hyperparams,
    PerturbedSample,
    backend_name,
    load_forest,
    predict_confidence,
    predict_matrix,
    sample_perturbed_set,
    save_forest,
    train_forest,
    train_tree,
)
from .loop import (
    IterationReport,
    LabelDecision,
    PoolState,
    SelectionPolicy,
    apply_labels,
    compute_coverage,
    run_iteration,
    select_batch,
)
from .simulate import (
    Ontology,
    World,
    WorldConfig,
    generate_world,
    run_simulation,
    simulated_oracle,
)

__version__ = "0.1.0"
