"""Inverted index over primitive entities and idf-weighted candidate retrieval.

On-disk format (``index.bin``): the ASCII line ``KNOWHOW-INDEX <version>\\n``
followed by a gzip stream (mtime 0) of UTF-8 JSON with keys ``version``,
``kinds``, ``doc_lengths`` {uri: n}, ``doc_source`` {uri: source doc} and
``postings`` {term: [[uri, tf], ...]}; all keys sorted, postings by URI.
"""
from __future__ import annotations

import gzip
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..core.model import KnowHowGraph, ProcessEntity, is_primitive
from ..core.vocab import Kind
from ..text import tokenize

INDEX_VERSION = 1
MAGIC = b"KNOWHOW-INDEX"
DEFAULT_K = 50
INDEXED_KINDS = (Kind.STEP,)


@dataclass(frozen=True)
class CandidatePair:
    complex: str
    primitive: str
    retrieval_score: float


@dataclass
class InvertedIndex:
    postings: dict[str, list[tuple[str, int]]] = field(default_factory=dict)
    doc_lengths: dict[str, int] = field(default_factory=dict)
    doc_source: dict[str, str] = field(default_factory=dict)
    kinds: tuple[str, ...] = tuple(k.value for k in INDEXED_KINDS)
    _doc_terms: Optional[dict[str, frozenset[str]]] = field(default=None, repr=False, compare=False)

    def terms_of(self, uri: str) -> frozenset[str]:
        if self._doc_terms is None:
            terms = defaultdict(set)
            for t, ps in self.postings.items():
                for u, _ in ps:
                    terms[u].add(t)
            self._doc_terms = {u: frozenset(ts) for u, ts in terms.items()}
        return self._doc_terms.get(uri, frozenset())

    @property
    def doc_count(self) -> int:
        return len(self.doc_lengths)

    @property
    def doc_freq(self) -> dict[str, int]:
        return {t: len(p) for t, p in self.postings.items()}

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def to_bytes(self) -> bytes:
        body = {
            "version": INDEX_VERSION,
            "kinds": list(self.kinds),
            "doc_lengths": self.doc_lengths,
            "doc_source": self.doc_source,
            "postings": {t: [list(p) for p in ps] for t, ps in self.postings.items()},
        }
        raw = json.dumps(body, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode()
        return MAGIC + f" {INDEX_VERSION}\n".encode() + gzip.compress(raw, mtime=0)

    @classmethod
    def from_bytes(cls, data: bytes) -> "InvertedIndex":
        header, _, payload = data.partition(b"\n")
        name, _, version = header.partition(b" ")
        if name != MAGIC:
            raise ValueError("not an index file")
        if int(version) != INDEX_VERSION:
            raise ValueError(f"unsupported index version {int(version)}")
        body = json.loads(gzip.decompress(payload))
        return cls(
            postings={t: [(u, tf) for u, tf in ps] for t, ps in body["postings"].items()},
            doc_lengths=body["doc_lengths"],
            doc_source=body["doc_source"],
            kinds=tuple(body["kinds"]),
        )


def entity_text(e: ProcessEntity) -> str:
    return e.label if e.detail is None else f"{e.label} {e.detail}"


def indexable(graph: KnowHowGraph, kinds: Iterable[Kind] = INDEXED_KINDS) -> list[ProcessEntity]:
    kinds = set(kinds)
    return [
        e for u, e in sorted(graph.entities.items()) if e.kind in kinds and is_primitive(graph, u)
    ]


def build_index(graph: KnowHowGraph, kinds: Iterable[Kind] = INDEXED_KINDS, stopwords=None) -> InvertedIndex:
    """Index label and detail text of the graph's primitive entities."""
    kinds = tuple(kinds)
    postings: dict[str, list[tuple[str, int]]] = defaultdict(list)
    lengths, sources = {}, {}
    for e in indexable(graph, kinds):
        tokens = tokenize(entity_text(e), stopwords)
        lengths[e.uri] = len(tokens)
        sources[e.uri] = e.source_doc
        for term, tf in sorted(Counter(tokens).items()):
            postings[term].append((e.uri, tf))
    return InvertedIndex(
        postings={t: postings[t] for t in sorted(postings)},
        doc_lengths=lengths,
        doc_source=sources,
        kinds=tuple(k.value for k in kinds),
    )


def idf(index: InvertedIndex, term: str) -> float:
    """ln(N / (1 + df)), clamped at zero."""
    if index.doc_count <= 0:
        raise ValueError("idf is undefined on an empty index")
    return max(0.0, math.log(index.doc_count / (1 + index.df(term))))


def query_terms(text: str, stopwords=None) -> list[str]:
    return sorted(set(tokenize(text, stopwords)))


def pair_score(index: InvertedIndex, terms: Iterable[str], primitive: str) -> float:
    """Retrieval score of one indexed entity for sorted, distinct query terms."""
    n = index.doc_lengths.get(primitive, 0)
    if not n:
        return 0.0
    own = index.terms_of(primitive)
    total = 0.0
    for t in terms:
        if t in own:
            total += idf(index, t)
    return total / n


def retrieve_candidates(
    index: InvertedIndex, complex: ProcessEntity, k: int = DEFAULT_K, stopwords=None
) -> list[CandidatePair]:
    """Top-k indexed entities from other documents sharing a term with ``complex``.

    Score is the idf sum over shared distinct terms divided by the entity's
    token count; ties fall to URI order.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if index.doc_count == 0:
        return []
    acc: dict[str, float] = defaultdict(float)
    for t in query_terms(complex.label, stopwords):
        ps = index.postings.get(t)
        if not ps:
            continue
        w = idf(index, t)
        for uri, _ in ps:
            if index.doc_source[uri] != complex.source_doc:
                acc[uri] += w
    ranked = sorted(((s / index.doc_lengths[u], u) for u, s in acc.items()), key=lambda x: (-x[0], x[1]))
    return [CandidatePair(complex.uri, u, s) for s, u in ranked[:k]]
