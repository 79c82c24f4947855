"""Input/output links between process entities and catalog entities."""
from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

from ..core.model import KnowHowGraph, top_level
from ..core.vocab import Kind, Property
from ..text import default_creation_verbs, similarity, words
from .catalog import BackendUnavailable, CatalogEntity, LookupBackend

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.8
DEFAULT_MAX_HITS = 10
LEADING_DETERMINERS = frozenset(
    {"a", "an", "the", "your", "some", "my", "our", "their", "his", "her", "its"}
)

ENTITY_LINK_COLUMNS = ("process_uri", "direction", "catalog_uri", "similarity", "mention_uri")
IO_LINK_COLUMNS = ("producer_uri", "consumer_uri", "via_uri")


class Direction(str, Enum):
    INPUT = "Input"
    OUTPUT = "Output"


@dataclass(frozen=True)
class EntityLink:
    """``process_entity`` consumes (Input) or produces (Output) ``catalog_entity``.

    ``mention`` is the entity whose label was looked up: the requirement for
    inputs, the top-level process itself for outputs.
    """

    process_entity: str
    catalog_entity: CatalogEntity
    direction: Direction
    similarity: float
    mention: Optional[str] = None

    @property
    def catalog_uri(self) -> str:
        return self.catalog_entity.catalog_uri

    @property
    def link_id(self) -> str:
        return f"{self.direction.value}|{self.mention or self.process_entity}|{self.catalog_uri}"


@dataclass(frozen=True, order=True)
class IOLink:
    producer: str
    consumer: str
    via: str

    def __post_init__(self):
        if self.producer == self.consumer:
            raise ValueError("an I/O link needs two distinct processes")

    @property
    def source(self) -> str:
        # the consumer holds the requirement that the link explains
        return self.consumer

    @property
    def link_id(self) -> str:
        return f"IO|{self.producer}|{self.consumer}|{self.via}"


def choose_candidate(
    label: str, candidates: Sequence[CatalogEntity], threshold: float = DEFAULT_THRESHOLD
) -> Optional[tuple[CatalogEntity, float]]:
    """Most similar candidate label; ties go to the smaller lookup rank."""
    best = None
    for c in candidates:
        key = (similarity(label, c.label), -c.lookup_rank)
        if best is None or key > best[0]:
            best = (key, c)
    if best is None or best[0][0] < threshold:
        return None
    return best[1], best[0][0]


def detect_output(title: str, creation_verbs: Optional[Iterable[str]] = None) -> Optional[str]:
    """Object phrase of the first creation verb in ``title``, if any.

    >>> detect_output("make a pancake")
    'pancake'
    """
    if not title or not title.strip():
        raise ValueError("title must be non-empty")
    verbs = default_creation_verbs() if creation_verbs is None else frozenset(creation_verbs)
    tokens = words(title)
    for i, tok in enumerate(tokens):
        if tok in verbs:
            rest = [t for t in tokens[i + 1 :] if t != tok]
            while rest and rest[0] in LEADING_DETERMINERS:
                rest.pop(0)
            return " ".join(rest) or None
    return None


def _requirers(graph: KnowHowGraph, uri: str) -> list[str]:
    return sorted(
        r.subject
        for r in graph._in.get(uri, ())
        if r.property is Property.REQUIRES and graph.entities[r.subject].kind is not Kind.REQUIREMENT
    )


def link_corpus(
    graph: KnowHowGraph,
    backend: LookupBackend,
    threshold: float = DEFAULT_THRESHOLD,
    creation_verbs: Optional[Iterable[str]] = None,
    max_hits: int = DEFAULT_MAX_HITS,
    workers: int = 1,
) -> set[EntityLink]:
    """Input links from requirement labels, output links from top-level titles.

    Each distinct label is looked up once; ``workers`` > 1 issues lookups
    concurrently. A failing backend call drops that label (logged) without
    aborting the run.
    """
    verbs = default_creation_verbs() if creation_verbs is None else frozenset(creation_verbs)
    cache: dict[str, Optional[tuple[CatalogEntity, float]]] = {}

    def resolve(label: str):
        if label not in cache:
            try:
                cache[label] = choose_candidate(label, backend.lookup(label, max_hits), threshold)
            except BackendUnavailable as exc:
                log.warning("lookup failed for %r: %s", label, exc)
                cache[label] = None
        return cache[label]

    requirements = sorted(u for u, e in graph.entities.items() if e.kind is Kind.REQUIREMENT)
    outputs = [(t.uri, detect_output(t.label, verbs)) for t in top_level(graph)]
    labels = sorted({graph.entities[u].label for u in requirements} | {p for _, p in outputs if p})
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(resolve, labels))

    links = set()
    for uri in requirements:
        e = graph.entities[uri]
        hit = resolve(e.label)
        if hit is None:
            continue
        for process in _requirers(graph, uri):
            links.add(EntityLink(process, hit[0], Direction.INPUT, hit[1], mention=uri))
    for task_uri, phrase in outputs:
        if phrase is None:
            continue
        hit = resolve(phrase)
        if hit is not None:
            links.add(EntityLink(task_uri, hit[0], Direction.OUTPUT, hit[1], mention=task_uri))
    return links


def compose_io_links(links: Iterable[EntityLink]) -> set[IOLink]:
    """Join outputs and inputs on catalog IRI; drops pairs of the same process."""
    producers: dict[str, set[str]] = {}
    inputs = []
    for link in links:
        if link.direction is Direction.OUTPUT:
            producers.setdefault(link.catalog_uri, set()).add(link.process_entity)
        else:
            inputs.append(link)
    out = set()
    for link in inputs:
        for producer in producers.get(link.catalog_uri, ()):
            if producer != link.process_entity:
                out.add(IOLink(producer, link.process_entity, link.catalog_uri))
    return out


def composed_precision(p_in: float, p_out: float) -> float:
    """Probability that both constituent links of an I/O link are correct."""
    for p in (p_in, p_out):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"precision {p} outside [0, 1]")
    return p_in * p_out


def _tsv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_entity_links(links: Iterable[EntityLink]) -> str:
    rows = sorted(
        (l.process_entity, l.direction.value, l.catalog_uri, repr(l.similarity), l.mention or "")
        for l in links
    )
    return _tsv(ENTITY_LINK_COLUMNS, rows)


def read_entity_links(text: str) -> set[EntityLink]:
    rows = list(csv.reader(io.StringIO(text), delimiter="\t"))
    if not rows or tuple(rows[0]) != ENTITY_LINK_COLUMNS:
        raise ValueError("not an entity links file")
    out = set()
    for process, direction, catalog_uri, sim, mention in rows[1:]:
        # only the URI survives the file; the label is a placeholder
        cat = CatalogEntity(catalog_uri, catalog_uri)
        out.add(EntityLink(process, cat, Direction(direction), float(sim), mention or None))
    return out


def write_io_links(links: Iterable[IOLink]) -> str:
    return _tsv(IO_LINK_COLUMNS, sorted((l.producer, l.consumer, l.via) for l in links))


def read_io_links(text: str) -> set[IOLink]:
    rows = list(csv.reader(io.StringIO(text), delimiter="\t"))
    if not rows or tuple(rows[0]) != IO_LINK_COLUMNS:
        raise ValueError("not an I/O links file")
    return {IOLink(*r) for r in rows[1:]}
