"""Entities, relations, annotations and the in-memory know-how graph."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional
from urllib.parse import quote

from .vocab import DEFAULT_BASE, Kind, Origin, Property

# RFC 3987 unreserved plus sub-delims, ':' and '@'. Everything else is percent-encoded.
_SAFE = "-._~!$&'()*+,;=:@"


class GraphError(Exception):
    """Base class for graph construction and parsing errors."""


class InvalidPath(GraphError, ValueError):
    pass


class DanglingEndpoint(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class UnknownEntity(GraphError, KeyError):
    pass


class OriginMismatch(GraphError):
    """A relation's origin disagrees with whether it crosses documents."""


class IntegrityError(GraphError):
    pass


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


def _segments(path: str, what: str) -> list[str]:
    parts = path.split("/")
    if not path or any(p == "" for p in parts):
        raise InvalidPath(f"{what} has empty segments: {path!r}")
    return parts


def mint_uri(source_doc: str, fragment_path: str, base: str = DEFAULT_BASE) -> str:
    """Deterministic IRI ``<base>/<source>/<slug>#<fragment-path>``.

    Path segments of ``source_doc`` stay ``/``-separated, fragment segments are
    joined with ``-``. Reserved characters are percent-encoded per segment.
    """
    doc = "/".join(quote(s, safe=_SAFE) for s in _segments(source_doc, "source_doc"))
    frag = "-".join(quote(s, safe=_SAFE) for s in _segments(fragment_path, "fragment_path"))
    return f"{base.rstrip('/')}/{doc}#{frag}"


def annotation_uri(target: str) -> str:
    # Minted fragments never contain '/', so these suffixes cannot collide with entities.
    return target + "/annotation"


def selector_uri(target: str) -> str:
    return target + "/selector"


@dataclass(frozen=True)
class ProcessEntity:
    uri: str
    label: str
    kind: Kind
    source_doc: str
    categories: tuple[str, ...] = ()
    detail: Optional[str] = None

    def __post_init__(self):
        label = normalize_ws(self.label)
        if not label:
            raise ValueError(f"empty label for {self.uri}")
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "categories", tuple(sorted(set(self.categories))))
        if self.detail is not None and not self.detail.strip():
            object.__setattr__(self, "detail", None)

    @property
    def repository(self) -> str:
        return self.source_doc.split("/", 1)[0]


@dataclass(frozen=True)
class Relation:
    subject: str
    property: Property
    object: str
    origin: Origin = Origin.EXTRACTED

    def __post_init__(self):
        object.__setattr__(self, "property", Property(self.property))
        object.__setattr__(self, "origin", Origin(self.origin))

    @property
    def triple(self) -> tuple[str, Property, str]:
        return (self.subject, self.property, self.object)


@dataclass(frozen=True)
class Selector:
    source_doc: str
    path: str
    start: int
    end: int


@dataclass(frozen=True)
class Annotation:
    target: str
    body_text: str
    selector: Selector


@dataclass
class KnowHowGraph:
    """Triple store over the three PROHOW properties plus entity metadata.

    Built by a single writer; treat as read-only once handed to readers.
    Triples whose predicate the model does not understand are kept in
    ``extra_triples`` (N-Triples-encoded term tuples) and written back out.
    """

    entities: dict[str, ProcessEntity] = field(default_factory=dict)
    relations: set[Relation] = field(default_factory=set)
    annotations: dict[str, Annotation] = field(default_factory=dict)
    extra_triples: set[tuple[str, str, str]] = field(default_factory=set)
    _out: dict = field(default_factory=lambda: defaultdict(set), repr=False, compare=False)
    _in: dict = field(default_factory=lambda: defaultdict(set), repr=False, compare=False)
    _by_doc: dict = field(default_factory=lambda: defaultdict(set), repr=False, compare=False)
    _triples: dict = field(default_factory=dict, repr=False, compare=False)

    def __eq__(self, other):
        if not isinstance(other, KnowHowGraph):
            return NotImplemented
        return (
            self.entities == other.entities
            and self.relations == other.relations
            and self.annotations == other.annotations
            and self.extra_triples == other.extra_triples
        )

    def __contains__(self, uri: str) -> bool:
        return uri in self.entities

    def add_entity(self, entity: ProcessEntity) -> ProcessEntity:
        existing = self.entities.get(entity.uri)
        if existing is not None and existing != entity:
            raise IntegrityError(f"conflicting definitions for {entity.uri}")
        self.entities[entity.uri] = entity
        self._by_doc[entity.source_doc].add(entity.uri)
        return entity

    def add_annotation(self, annotation: Annotation) -> None:
        if annotation.target not in self.entities:
            raise DanglingEndpoint(f"annotation target {annotation.target} is not in the graph")
        existing = self.annotations.get(annotation.target)
        if existing is not None and existing != annotation:
            raise IntegrityError(f"entity {annotation.target} already has an annotation")
        self.annotations[annotation.target] = annotation

    def add_relation(self, rel: Relation) -> "KnowHowGraph":
        """Add ``rel`` once; re-adding the same triple is a no-op."""
        if rel.subject == rel.object:
            raise SelfLoop(f"{rel.subject} {rel.property.value} itself")
        for end in (rel.subject, rel.object):
            if end not in self.entities:
                raise DanglingEndpoint(f"unknown endpoint {end}")
        cross = self.entities[rel.subject].source_doc != self.entities[rel.object].source_doc
        if cross != (rel.origin is Origin.MACHINE_LINKED):
            raise OriginMismatch(
                f"{rel.origin.value} relation {rel.triple} "
                f"{'crosses' if cross else 'stays within'} a document"
            )
        if rel.triple in self._triples:
            return self
        self._triples[rel.triple] = rel
        self.relations.add(rel)
        self._out[rel.subject].add(rel)
        self._in[rel.object].add(rel)
        return self

    def entity(self, uri: str) -> ProcessEntity:
        try:
            return self.entities[uri]
        except KeyError:
            raise UnknownEntity(uri) from None

    def outgoing(self, uri: str) -> set[Relation]:
        return set(self._out.get(uri, ()))

    def incoming(self, uri: str) -> set[Relation]:
        return set(self._in.get(uri, ()))

    def document_entities(self, source_doc: str) -> list[ProcessEntity]:
        return [self.entities[u] for u in sorted(self._by_doc.get(source_doc, ()))]

    def documents(self) -> list[str]:
        return sorted(d for d, uris in self._by_doc.items() if uris)

    def merge(self, other: "KnowHowGraph") -> "KnowHowGraph":
        for e in other.entities.values():
            self.add_entity(e)
        for a in other.annotations.values():
            self.add_annotation(a)
        for r in sorted(other.relations, key=_rel_key):
            self.add_relation(r)
        self.extra_triples |= other.extra_triples
        return self

    def check_integrity(self) -> None:
        for rel in self.relations:
            for end in (rel.subject, rel.object):
                if end not in self.entities:
                    raise IntegrityError(f"relation endpoint {end} is not declared")
        for target in self.annotations:
            if target not in self.entities:
                raise IntegrityError(f"annotation target {target} is not declared")


def _rel_key(r: Relation):
    return (r.subject, r.property.value, r.object)


def add_relation(graph: KnowHowGraph, rel: Relation) -> KnowHowGraph:
    return graph.add_relation(rel)


def query(
    graph: KnowHowGraph,
    subject: Optional[str] = None,
    property: Optional[Property] = None,
    object: Optional[str] = None,
) -> set[Relation]:
    """Relations matching the pattern; ``None`` is a wildcard."""
    if subject is not None:
        pool: Iterable[Relation] = graph._out.get(subject, ())
    elif object is not None:
        pool = graph._in.get(object, ())
    else:
        pool = graph.relations
    return {
        r
        for r in pool
        if (subject is None or r.subject == subject)
        and (property is None or r.property == property)
        and (object is None or r.object == object)
    }


def _objects(graph: KnowHowGraph, uri: str, prop: Property) -> list[ProcessEntity]:
    graph.entity(uri)
    return sorted(
        (graph.entities[r.object] for r in query(graph, uri, prop)), key=lambda e: e.uri
    )


def methods_of(graph: KnowHowGraph, uri: str) -> list[ProcessEntity]:
    return _objects(graph, uri, Property.HAS_METHOD)


def requirements_of(graph: KnowHowGraph, uri: str) -> list[ProcessEntity]:
    return _objects(graph, uri, Property.REQUIRES)


def steps_of(graph: KnowHowGraph, uri: str) -> list[ProcessEntity]:
    """Direct steps of ``uri`` and of every method reachable through has_method."""
    seen, stack, steps = {uri}, [uri], {}
    while stack:
        current = stack.pop()
        for e in _objects(graph, current, Property.HAS_STEP):
            steps[e.uri] = e
        for m in _objects(graph, current, Property.HAS_METHOD):
            if m.uri not in seen:
                seen.add(m.uri)
                stack.append(m.uri)
    return [steps[u] for u in sorted(steps)]


def top_level(graph: KnowHowGraph) -> list[ProcessEntity]:
    return sorted(
        (e for e in graph.entities.values() if e.kind is Kind.MAIN_TASK), key=lambda e: e.uri
    )


def is_primitive(graph: KnowHowGraph, uri: str) -> bool:
    """True when the entity has no outgoing has_step or has_method relation."""
    graph.entity(uri)
    return not any(
        r.property in (Property.HAS_STEP, Property.HAS_METHOD) for r in graph._out.get(uri, ())
    )
