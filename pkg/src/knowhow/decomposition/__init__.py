from ..text import tokenize
from .features import DEFAULT_SCHEMA, FeatureSchema, SchemaMismatch, context_of, extract_features
from .forest import (
    ConfigurationError,
    CVResult,
    ForestModel,
    Hyperparameters,
    SingleClassData,
    TooFewExamples,
    cross_validate,
    kfold_indices,
    predict,
    train_forest,
)
from .index import (
    DEFAULT_K,
    CandidatePair,
    InvertedIndex,
    build_index,
    idf,
    pair_score,
    retrieve_candidates,
)
from .pipeline import (
    DecompositionLink,
    LabeledPair,
    apply_links,
    featurize,
    generate_links,
    make_pair,
    read_labeled_pairs,
    read_links,
    write_labeled_pairs,
    write_links,
)

__all__ = [
    "CVResult",
    "CandidatePair",
    "ConfigurationError",
    "DEFAULT_K",
    "DEFAULT_SCHEMA",
    "DecompositionLink",
    "FeatureSchema",
    "ForestModel",
    "Hyperparameters",
    "InvertedIndex",
    "LabeledPair",
    "SchemaMismatch",
    "SingleClassData",
    "TooFewExamples",
    "apply_links",
    "build_index",
    "context_of",
    "cross_validate",
    "extract_features",
    "featurize",
    "generate_links",
    "idf",
    "kfold_indices",
    "make_pair",
    "pair_score",
    "predict",
    "read_labeled_pairs",
    "read_links",
    "retrieve_candidates",
    "tokenize",
    "train_forest",
    "write_labeled_pairs",
    "write_links",
]
