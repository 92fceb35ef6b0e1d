"""Compliance-report text mining toolkit.

Pipeline: ingest violation records, preprocess inspection comments, train
skip-gram word embeddings, compute keyword cosine-similarity matrices, and
extract location -> operation -> contaminant relation chains.
"""

from .errors import ConfigError, DataError, InternalError, PipelineError
from .preprocess import (
    PreprocessConfig,
    TokenStream,
    lemmatize,
    preprocess,
    remove_stopwords,
    stem,
    tokenize,
)
from .records import (
    ColumnMap,
    ComplianceRecord,
    ViolationStats,
    ViolationType,
    compute_stats,
    filter_records,
    parse_report,
    top_violation_codes,
    write_records,
)
from .relations import (
    OperationLink,
    RelationChain,
    build_chains,
    chains_to_delimited,
    parse_chains_delimited,
    render_report,
    upper_quartile_select,
)
from .similarity import (
    SimilarityMatrix,
    annotate_extremes,
    cosine,
    nearest_neighbors,
    pairwise_matrix,
)
from .trainer import (
    EmbeddingModel,
    Objective,
    TrainingConfig,
    TrainingPair,
    generate_pairs,
    load_model,
    save_model,
    softmax_distribution,
    step_full_softmax,
    step_negative_sampling,
    train,
)
from .vocab import (
    KeywordCatalog,
    KeywordCategory,
    Vocabulary,
    build_vocabulary,
    load_keyword_catalog,
    top_frequent,
)

__version__ = "0.1.0"
