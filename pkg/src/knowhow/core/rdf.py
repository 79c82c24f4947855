"""N-Triples / Turtle serialization of :class:`KnowHowGraph`.

Terms are handled in their canonical N-Triples spelling (``<iri>``,
``"lit"``, ``"3"^^<dt>``, ``"x"@en``, ``_:b0``) so that ordering, equality and
the unknown-triple side list are all plain string operations.
"""
from __future__ import annotations

import re
from collections import defaultdict
from enum import Enum
from typing import Iterable, Optional, Union

from . import vocab as V
from .model import (
    Annotation,
    IntegrityError,
    KnowHowGraph,
    ProcessEntity,
    Relation,
    Selector,
    annotation_uri,
    selector_uri,
)
from .vocab import Kind, Origin, Property

Triple = tuple[str, str, str]


class Format(str, Enum):
    NTRIPLES = "nt"
    TURTLE = "ttl"


class RDFSyntaxError(SyntaxError):
    def __init__(self, message: str, lineno: int):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


_IRI_FORBIDDEN = re.compile(r'[\x00-\x20<>"{}|^`\\]')
_ECHAR_OUT = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}
_NEEDS_ESCAPE = re.compile(r'[\\"\x00-\x1f\x7f]')


def _escape(text: str) -> str:
    return _NEEDS_ESCAPE.sub(lambda m: _ECHAR_OUT.get(m.group(), f"\\u{ord(m.group()):04X}"), text)


def iri(value: str) -> str:
    if _IRI_FORBIDDEN.search(value):
        raise ValueError(f"IRI contains characters not allowed in N-Triples: {value!r}")
    return f"<{value}>"


def literal(value: str, datatype: Optional[str] = None, lang: Optional[str] = None) -> str:
    out = f'"{_escape(value)}"'
    if datatype and datatype != V.XSD + "string":
        out += "^^" + iri(datatype)
    elif lang:
        out += "@" + lang.lower()
    return out


def is_iri(term: str) -> bool:
    return term.startswith("<")


def iri_value(term: str) -> str:
    return term[1:-1]


def plain_value(term: str) -> Optional[str]:
    """The lexical form of a plain string literal, else None."""
    if not term.startswith('"') or not term.endswith('"'):
        return None
    return _unescape(term[1:-1])


def int_value(term: str) -> Optional[int]:
    suffix = '"^^' + iri(V.XSD_INTEGER)
    if term.startswith('"') and term.endswith(suffix):
        try:
            return int(term[1 : -len(suffix)])
        except ValueError:
            return None
    return None


# ----------------------------------------------------------------------------
# graph <-> triples


def graph_triples(graph: KnowHowGraph) -> list[Triple]:
    graph.check_integrity()
    rdf_type, label, src = iri(V.RDF_TYPE), iri(V.RDFS_LABEL), iri(V.META_SOURCE_DOC)
    out: set[Triple] = set()
    for e in graph.entities.values():
        s = iri(e.uri)
        out.add((s, rdf_type, iri(e.kind.iri)))
        out.add((s, label, literal(e.label)))
        out.add((s, src, literal(e.source_doc)))
        for c in e.categories:
            out.add((s, iri(V.META_CATEGORY), literal(c)))
        if e.detail is not None:
            out.add((s, iri(V.META_DETAIL), literal(e.detail)))
    for r in graph.relations:
        out.add((iri(r.subject), iri(r.property.iri), iri(r.object)))
    for a in graph.annotations.values():
        A, S = iri(annotation_uri(a.target)), iri(selector_uri(a.target))
        out.add((A, rdf_type, iri(V.OA_ANNOTATION)))
        out.add((A, iri(V.OA_HAS_TARGET), iri(a.target)))
        out.add((A, iri(V.OA_BODY_VALUE), literal(a.body_text)))
        out.add((A, iri(V.OA_HAS_SELECTOR), S))
        out.add((S, rdf_type, iri(V.OA_TEXT_POSITION_SELECTOR)))
        out.add((S, src, literal(a.selector.source_doc)))
        out.add((S, iri(V.META_PATH), literal(a.selector.path)))
        out.add((S, iri(V.OA_START), literal(str(a.selector.start), V.XSD_INTEGER)))
        out.add((S, iri(V.OA_END), literal(str(a.selector.end), V.XSD_INTEGER)))
    out |= graph.extra_triples
    return sorted(out)


def _single(props: dict, pred: str, subject: str, required: bool = True) -> Optional[str]:
    values = props.get(pred, [])
    if len(values) > 1:
        raise IntegrityError(f"{subject} has {len(values)} values for {pred}")
    if not values:
        if required:
            raise IntegrityError(f"{subject} is missing {pred}")
        return None
    return values[0]


def triples_to_graph(triples: Iterable[Triple]) -> KnowHowGraph:
    """Rebuild a graph from canonical triples; unmodelled triples land in extras."""
    triples = set(triples)
    by_subject: dict[str, dict[str, list[str]]] = defaultdict(lambda: defaultdict(list))
    for s, p, o in triples:
        by_subject[s][p].append(o)
    consumed: set[Triple] = set()
    graph = KnowHowGraph()

    rdf_type = iri(V.RDF_TYPE)
    kinds = {iri(k.iri): k for k in Kind}

    def take(subject: str, pred: str, require=True, convert=plain_value) -> Optional[str]:
        # Only values that convert cleanly are modelled; the rest stay as extras.
        values = [o for o in by_subject[subject].get(pred, []) if convert(o) is not None]
        raw = _single({pred: values}, pred, subject, required=require)
        if raw is None:
            return None
        consumed.add((subject, pred, raw))
        return convert(raw)

    for s in sorted(by_subject):
        props = by_subject[s]
        declared = [o for o in props.get(rdf_type, []) if o in kinds]
        if not declared:
            continue
        if len(declared) > 1 or not is_iri(s):
            raise IntegrityError(f"{s} declares {len(declared)} kinds")
        consumed.add((s, rdf_type, declared[0]))
        cats = [o for o in props.get(iri(V.META_CATEGORY), []) if plain_value(o) is not None]
        consumed.update((s, iri(V.META_CATEGORY), o) for o in cats)
        graph.add_entity(
            ProcessEntity(
                uri=iri_value(s),
                label=take(s, iri(V.RDFS_LABEL)),
                kind=kinds[declared[0]],
                source_doc=take(s, iri(V.META_SOURCE_DOC)),
                categories=tuple(plain_value(c) for c in cats),
                detail=take(s, iri(V.META_DETAIL), require=False),
            )
        )

    for s in sorted(by_subject):
        props = by_subject[s]
        if iri(V.OA_ANNOTATION) not in props.get(rdf_type, []):
            continue
        consumed.add((s, rdf_type, iri(V.OA_ANNOTATION)))
        target = take(s, iri(V.OA_HAS_TARGET), convert=lambda o: o if is_iri(o) else None)
        body = take(s, iri(V.OA_BODY_VALUE))
        sel = take(s, iri(V.OA_HAS_SELECTOR), convert=lambda o: o if is_iri(o) else None)
        if iri(V.OA_TEXT_POSITION_SELECTOR) not in by_subject[sel].get(rdf_type, []):
            raise IntegrityError(f"selector {sel} of {s} is not described")
        consumed.add((sel, rdf_type, iri(V.OA_TEXT_POSITION_SELECTOR)))
        selector = Selector(
            source_doc=take(sel, iri(V.META_SOURCE_DOC)),
            path=take(sel, iri(V.META_PATH)),
            start=take(sel, iri(V.OA_START), convert=int_value),
            end=take(sel, iri(V.OA_END), convert=int_value),
        )
        if iri_value(target) not in graph.entities:
            raise IntegrityError(f"annotation {s} targets undeclared entity {target}")
        graph.add_annotation(Annotation(iri_value(target), body, selector))

    relations = []
    for s, p, o in sorted(triples):
        if not (is_iri(p) and iri_value(p).startswith(V.PROHOW)):
            continue
        prop = V.PROPERTY_BY_IRI.get(iri_value(p))
        if prop is None:
            raise IntegrityError(f"unknown prohow property {p}")
        for end in (s, o):
            if not is_iri(end) or iri_value(end) not in graph.entities:
                raise IntegrityError(f"relation {s} {p} {o} references undeclared entity {end}")
        subj, obj = graph.entities[iri_value(s)], graph.entities[iri_value(o)]
        origin = Origin.MACHINE_LINKED if subj.source_doc != obj.source_doc else Origin.EXTRACTED
        relations.append(Relation(subj.uri, prop, obj.uri, origin))
        consumed.add((s, p, o))
    for r in relations:
        graph.add_relation(r)

    graph.extra_triples = triples - consumed
    return graph


# ----------------------------------------------------------------------------
# N-Triples

_IRIREF = r'<(?:[^\x00-\x20<>"{}|^`\\]|\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8})*>'
_BNODE = r"_:[A-Za-z0-9_\u00C0-\uFFFF](?:[A-Za-z0-9_.\-\u00B7\u00C0-\uFFFF]*[A-Za-z0-9_\-\u00B7\u00C0-\uFFFF])?"
_STRING = r'"(?:[^"\\\n\r]|\\[tbnrf"\'\\]|\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8})*"'
_LANG = r"@[a-zA-Z]+(?:-[a-zA-Z0-9]+)*"
_LITERAL = rf"{_STRING}(?:\^\^{_IRIREF}|{_LANG})?"
_LINE = re.compile(
    rf"[ \t]*({_IRIREF}|{_BNODE})[ \t]*({_IRIREF})[ \t]*({_IRIREF}|{_BNODE}|{_LITERAL})"
    r"[ \t]*\.[ \t]*(?:#.*)?"
)
_EOL = re.compile(r"\r\n|\r|\n")
_UNESCAPE = re.compile(r'\\(u[0-9A-Fa-f]{4}|U[0-9A-Fa-f]{8}|[tbnrf"\'\\])')
_ECHAR_IN = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _unescape(text: str) -> str:
    def repl(m):
        g = m.group(1)
        return chr(int(g[1:], 16)) if g[0] in "uU" else _ECHAR_IN[g]

    return _UNESCAPE.sub(repl, text)


def _canonical(term: str) -> str:
    """Re-spell a parsed term so escapes and language tags have one canonical form."""
    if term.startswith("<"):
        return iri(_unescape(term[1:-1]))
    if term.startswith("_:"):
        return term
    end = term.rfind('"')
    value = _unescape(term[1:end])
    rest = term[end + 1 :]
    if rest.startswith("^^"):
        return literal(value, datatype=_unescape(rest[3:-1]))
    if rest.startswith("@"):
        return literal(value, lang=rest[1:])
    return literal(value)


def parse_ntriples(data: Union[bytes, str]) -> list[Triple]:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    out = []
    # only CR/LF end a line; str.splitlines would also break on U+0085 or U+2028
    for lineno, line in enumerate(_EOL.split(text), start=1):
        stripped = line.strip(" \t")
        if not stripped or stripped.startswith("#"):
            continue
        m = _LINE.fullmatch(line)
        if m is None:
            raise RDFSyntaxError(f"malformed triple: {line[:80]!r}", lineno)
        try:
            out.append(tuple(_canonical(t) for t in m.groups()))
        except ValueError as exc:
            raise RDFSyntaxError(str(exc), lineno) from None
    return out


def write_ntriples(triples: Iterable[Triple]) -> bytes:
    return "".join(f"{s} {p} {o} .\n" for s, p, o in triples).encode("utf-8")


# ----------------------------------------------------------------------------
# Turtle

_LOCAL = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _turtle_term(term: str) -> str:
    if not is_iri(term):
        if "^^<" in term and term.endswith(">"):
            head, dt = term.rsplit("^^", 1)
            return head + "^^" + _turtle_term(dt)
        return term
    value = iri_value(term)
    for prefix, ns in V.PREFIXES:
        if value.startswith(ns) and _LOCAL.fullmatch(value[len(ns) :]):
            return f"{prefix}:{value[len(ns):]}"
    return term


def write_turtle(triples: Iterable[Triple]) -> bytes:
    lines = [f"@prefix {p}: <{ns}> ." for p, ns in V.PREFIXES]
    lines.append("")
    lines.extend(f"{_turtle_term(s)} {_turtle_term(p)} {_turtle_term(o)} ." for s, p, o in triples)
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_turtle(data: Union[bytes, str]) -> list[Triple]:
    import rdflib
    from rdflib.term import BNode, Literal, URIRef

    g = rdflib.Graph()
    try:
        g.parse(data=data.decode("utf-8") if isinstance(data, bytes) else data, format="turtle")
    except Exception as exc:  # rdflib raises a variety of parser exceptions
        lineno = getattr(exc, "lines", None) or getattr(exc, "lineno", None) or 0
        raise RDFSyntaxError(str(exc).splitlines()[0] if str(exc) else repr(exc), lineno) from None

    def conv(t) -> str:
        if isinstance(t, URIRef):
            return iri(str(t))
        if isinstance(t, BNode):
            return f"_:{t}"
        assert isinstance(t, Literal)
        return literal(str(t), datatype=str(t.datatype) if t.datatype else None, lang=t.language)

    return [(conv(s), conv(p), conv(o)) for s, p, o in g]


# ----------------------------------------------------------------------------
# public entry points


def serialize(graph: KnowHowGraph, format: Format = Format.NTRIPLES) -> bytes:
    """Serialize with triples sorted by (subject, predicate, object) spelling."""
    triples = graph_triples(graph)
    if Format(format) is Format.TURTLE:
        return write_turtle(triples)
    return write_ntriples(triples)


def parse(stream: Union[bytes, str], format: Format = Format.NTRIPLES) -> KnowHowGraph:
    if Format(format) is Format.TURTLE:
        return triples_to_graph(parse_turtle(stream))
    return triples_to_graph(parse_ntriples(stream))
