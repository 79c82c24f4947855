"""Labeled pairs, link generation and link files for decomposition linking."""
from __future__ import annotations

import copy
import csv
import io
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import numpy as np

from ..core.model import KnowHowGraph, Relation, is_primitive, top_level
from ..core.vocab import Origin, Property
from .features import DEFAULT_SCHEMA, FeatureSchema, extract_features
from .forest import ConfigurationError, ForestModel
from .index import DEFAULT_K, CandidatePair, InvertedIndex, pair_score, query_terms, retrieve_candidates

LABELED_COLUMNS = ("complex_uri", "primitive_uri", "label")
LINK_COLUMNS = ("primitive_uri", "complex_uri", "score")


class Classifier(Protocol):
    def predict(self, fv: Sequence[float]) -> tuple[bool, float]: ...


@dataclass(frozen=True)
class LabeledPair:
    pair: CandidatePair
    label: bool


@dataclass(frozen=True, order=True)
class DecompositionLink:
    primitive: str
    complex: str
    score: float

    @property
    def source(self) -> str:
        return self.primitive

    @property
    def link_id(self) -> str:
        return f"D|{self.primitive}|{self.complex}"

    def relation(self) -> Relation:
        return Relation(self.primitive, Property.HAS_METHOD, self.complex, Origin.MACHINE_LINKED)


def make_pair(graph: KnowHowGraph, index: InvertedIndex, complex_uri: str, primitive_uri: str) -> CandidatePair:
    """A candidate pair outside retrieval, scored the same way retrieval would."""
    c, p = graph.entity(complex_uri), graph.entity(primitive_uri)
    if c.uri == p.uri:
        raise ValueError("a pair needs two distinct entities")
    if c.source_doc == p.source_doc:
        raise ValueError(f"{c.uri} and {p.uri} come from the same document")
    if not is_primitive(graph, p.uri):
        raise ValueError(f"{p.uri} is not primitive")
    return CandidatePair(c.uri, p.uri, pair_score(index, query_terms(c.label), p.uri))


def read_labeled_pairs(text: str, graph: KnowHowGraph, index: InvertedIndex) -> list[LabeledPair]:
    rows = list(csv.reader(io.StringIO(text), delimiter="\t"))
    if not rows or tuple(rows[0]) != LABELED_COLUMNS:
        raise ValueError("labeled pairs file must start with a complex_uri/primitive_uri/label header")
    out = []
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != 3 or row[2] not in ("0", "1"):
            raise ValueError(f"labeled pairs row {n}: expected complex, primitive, 0/1")
        out.append(LabeledPair(make_pair(graph, index, row[0], row[1]), row[2] == "1"))
    return out


def write_labeled_pairs(pairs: Iterable[LabeledPair]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(LABELED_COLUMNS)
    for lp in pairs:
        w.writerow((lp.pair.complex, lp.pair.primitive, int(lp.label)))
    return buf.getvalue()


def featurize(
    graph: KnowHowGraph, index: InvertedIndex, pairs: Iterable[CandidatePair], schema: FeatureSchema = DEFAULT_SCHEMA
) -> np.ndarray:
    rows = [extract_features(graph, index, p, schema) for p in pairs]
    return np.asarray(rows, dtype=float).reshape(len(rows), len(schema))


def _check_classifier(classifier, schema: FeatureSchema) -> None:
    if isinstance(classifier, ForestModel):
        if not classifier.trees:
            raise ConfigurationError("model has no trees")
        if classifier.feature_names != schema.names:
            raise ConfigurationError(f"model was trained on {classifier.schema_tag}, not {schema.tag}")


def generate_links(
    graph: KnowHowGraph,
    index: InvertedIndex,
    classifier: Classifier,
    k: int = DEFAULT_K,
    schema: FeatureSchema = DEFAULT_SCHEMA,
) -> list[DecompositionLink]:
    """Classify the top-k candidates of every top-level process; keep positives."""
    _check_classifier(classifier, schema)
    pairs = []
    for task in top_level(graph):
        if is_primitive(graph, task.uri):
            continue
        pairs.extend(retrieve_candidates(index, task, k))
    if not pairs:
        return []
    X = featurize(graph, index, pairs, schema)
    if isinstance(classifier, ForestModel):
        scores = classifier.scores(X)
        decisions = [(s >= classifier.threshold, float(s)) for s in scores]
    else:
        decisions = [classifier.predict(list(row)) for row in X]
    return sorted(
        DecompositionLink(p.primitive, p.complex, float(score))
        for p, (positive, score) in zip(pairs, decisions)
        if positive
    )


def apply_links(graph: KnowHowGraph, links: Iterable[DecompositionLink]) -> KnowHowGraph:
    """A copy of ``graph`` with each link added as a machine-linked has_method."""
    out = copy.deepcopy(graph)
    for link in sorted(links):
        out.add_relation(link.relation())
    return out


def write_links(links: Iterable[DecompositionLink]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(LINK_COLUMNS)
    for l in sorted(links):
        w.writerow((l.primitive, l.complex, repr(l.score)))
    return buf.getvalue()


def read_links(text: str) -> list[DecompositionLink]:
    rows = list(csv.reader(io.StringIO(text), delimiter="\t"))
    if not rows or tuple(rows[0]) != LINK_COLUMNS:
        raise ValueError("not a decomposition links file")
    return sorted(DecompositionLink(p, c, float(s)) for p, c, s in rows[1:])
