"""Pair features for the decomposition-link classifier."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

from ..core.model import KnowHowGraph, ProcessEntity
from ..text import jaccard, tokenize
from .index import CandidatePair, InvertedIndex, idf


class SchemaMismatch(ValueError):
    pass


def context_of(graph: KnowHowGraph, uri: str, stopwords=None) -> set[str]:
    """Label tokens of every other entity in the same document, minus the entity's own."""
    e = graph.entity(uri)
    own = set(tokenize(e.label, stopwords))
    ctx = set()
    for other in graph.document_entities(e.source_doc):
        if other.uri != uri:
            ctx.update(tokenize(other.label, stopwords))
    return ctx - own


@dataclass
class PairView:
    """Lazily computed token/category/context sets for one candidate pair."""

    graph: KnowHowGraph
    index: InvertedIndex
    pair: CandidatePair

    @cached_property
    def complex(self) -> ProcessEntity:
        return self.graph.entity(self.pair.complex)

    @cached_property
    def primitive(self) -> ProcessEntity:
        return self.graph.entity(self.pair.primitive)

    @cached_property
    def complex_tokens(self) -> list[str]:
        return tokenize(self.complex.label)

    @cached_property
    def primitive_tokens(self) -> list[str]:
        return tokenize(self.primitive.label)

    @cached_property
    def shared(self) -> list[str]:
        return sorted(set(self.complex_tokens) & set(self.primitive_tokens))

    @cached_property
    def shared_idf(self) -> list[float]:
        if self.index.doc_count == 0:
            return [0.0 for _ in self.shared]
        return [idf(self.index, t) for t in self.shared]

    @cached_property
    def complex_categories(self) -> set[str]:
        return {c.casefold() for c in self.complex.categories}

    @cached_property
    def primitive_categories(self) -> set[str]:
        return {c.casefold() for c in self.primitive.categories}

    @cached_property
    def complex_context(self) -> set[str]:
        return context_of(self.graph, self.complex.uri)

    @cached_property
    def primitive_context(self) -> set[str]:
        return context_of(self.graph, self.primitive.uri)


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def _length_ratio(v: PairView) -> float:
    a, b = len(v.complex_tokens), len(v.primitive_tokens)
    return _ratio(min(a, b), max(a, b))


@dataclass(frozen=True)
class FeatureSchema:
    name: str
    version: str
    features: tuple[tuple[str, Callable[[PairView], float]], ...]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.features)

    @property
    def tag(self) -> str:
        return f"{self.name}/{self.version}"

    def __len__(self):
        return len(self.features)


DEFAULT_SCHEMA = FeatureSchema(
    "default",
    "1",
    (
        ("shared_idf_sum", lambda v: sum(v.shared_idf)),
        ("shared_idf_max", lambda v: max(v.shared_idf, default=0.0)),
        ("shared_over_complex", lambda v: _ratio(len(v.shared), len(set(v.complex_tokens)))),
        ("label_jaccard", lambda v: jaccard(v.complex_tokens, v.primitive_tokens)),
        ("shared_categories", lambda v: float(len(v.complex_categories & v.primitive_categories))),
        ("category_jaccard", lambda v: jaccard(v.complex_categories, v.primitive_categories)),
        ("shared_context", lambda v: float(len(v.complex_context & v.primitive_context))),
        ("context_jaccard", lambda v: jaccard(v.complex_context, v.primitive_context)),
        ("label_length_ratio", _length_ratio),
        ("retrieval_score", lambda v: v.pair.retrieval_score),
        # labels equal once case, punctuation and stopwords are ignored
        ("label_match", lambda v: float(bool(v.complex_tokens) and v.complex_tokens == v.primitive_tokens)),
        ("same_repository", lambda v: float(v.complex.repository == v.primitive.repository)),
    ),
)


def extract_features(
    graph: KnowHowGraph, index: InvertedIndex, pair: CandidatePair, schema: FeatureSchema = DEFAULT_SCHEMA
) -> list[float]:
    view = PairView(graph, index, pair)
    values = [float(fn(view)) for _, fn in schema.features]
    for name, x in zip(schema.names, values):
        if not math.isfinite(x):
            raise ValueError(f"feature {name} is not finite: {x}")
    return values


def check_vector(values: Sequence[float], width: int) -> None:
    if len(values) != width:
        raise SchemaMismatch(f"expected {width} features, got {len(values)}")
    if not all(math.isfinite(x) for x in values):
        raise SchemaMismatch("feature vector contains non-finite values")
