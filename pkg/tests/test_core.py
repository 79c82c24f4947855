from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import is_absolute_iri, ntriples_errors, pancake_doc, random_graph
from knowhow.core import vocab as V
from knowhow.core.model import (
    Annotation,
    DanglingEndpoint,
    InvalidPath,
    KnowHowGraph,
    OriginMismatch,
    ProcessEntity,
    Relation,
    Selector,
    SelfLoop,
    UnknownEntity,
    is_primitive,
    methods_of,
    mint_uri,
    query,
    requirements_of,
    steps_of,
    top_level,
)
from knowhow.core.rdf import Format, RDFSyntaxError, parse, serialize
from knowhow.core.vocab import Kind, Origin, Property
from knowhow.extractor import extract

BASE = V.DEFAULT_BASE


@pytest.fixture(scope="module")
def pancake():
    graph, _ = extract(pancake_doc())
    return graph


def by_label(graph, label, kind=None):
    hits = [e for e in graph.entities.values() if e.label == label and (kind is None or e.kind is kind)]
    assert len(hits) == 1, hits
    return hits[0].uri


# --- URIs ---------------------------------------------------------------------

def test_mint_uri_scheme():
    assert mint_uri("wikihow/Make-a-Pancake", "method1/step2") == f"{BASE}/wikihow/Make-a-Pancake#method1-step2"


def test_mint_uri_is_deterministic():
    assert mint_uri("wikihow/Make-a-Pancake", "method1/step2") == mint_uri("wikihow/Make-a-Pancake", "method1/step2")


def test_mint_uri_percent_encodes_space():
    uri = mint_uri("snapguide/x y", "req/1")
    assert uri == f"{BASE}/snapguide/x%20y#req-1"
    assert is_absolute_iri(uri)


@pytest.mark.parametrize("path", ["", "a//b", "/a", "a/"])
def test_mint_uri_rejects_empty_segments(path):
    with pytest.raises(InvalidPath):
        mint_uri("wikihow/x", path)


def test_mint_uri_custom_base():
    assert mint_uri("a/b", "task", "http://example.org/kb/").startswith("http://example.org/kb/a/b#")


@given(
    st.lists(st.text(min_size=1, max_size=8).filter(lambda s: "/" not in s), min_size=1, max_size=3),
    st.lists(st.text(min_size=1, max_size=8).filter(lambda s: "/" not in s), min_size=1, max_size=3),
)
def test_minted_uris_are_valid_iris(doc_parts, frag_parts):
    uri = mint_uri("/".join(doc_parts), "/".join(frag_parts))
    assert is_absolute_iri(uri)
    assert uri.count("#") == 1


# --- relations ------------------------------------------------------------------

def test_pancake_has_step_example(pancake):
    method = by_label(pancake, "make a pancake", Kind.METHOD)
    mix = by_label(pancake, "mix the ingredients")
    assert query(pancake, method, Property.HAS_STEP, mix)


def test_add_relation_is_idempotent(pancake):
    g = KnowHowGraph().merge(pancake)
    rel = next(iter(sorted(g.relations, key=lambda r: r.triple)))
    before = (set(g.relations), len(serialize(g)))
    g.add_relation(rel)
    assert (set(g.relations), len(serialize(g))) == before


def test_self_loop_rejected(pancake):
    put = by_label(pancake, "put the mix on a pan")
    with pytest.raises(SelfLoop):
        KnowHowGraph().merge(pancake).add_relation(Relation(put, Property.REQUIRES, put))


def test_dangling_endpoint_rejected(pancake):
    put = by_label(pancake, "put the mix on a pan")
    with pytest.raises(DanglingEndpoint):
        KnowHowGraph().merge(pancake).add_relation(Relation(put, Property.REQUIRES, BASE + "/x/y#nope"))


def test_origin_must_match_document_crossing():
    g = KnowHowGraph()
    a = g.add_entity(ProcessEntity(mint_uri("r/a", "task"), "a", Kind.MAIN_TASK, "r/a"))
    b = g.add_entity(ProcessEntity(mint_uri("r/b", "task"), "b", Kind.MAIN_TASK, "r/b"))
    with pytest.raises(OriginMismatch):
        g.add_relation(Relation(a.uri, Property.HAS_METHOD, b.uri, Origin.EXTRACTED))
    g.add_relation(Relation(a.uri, Property.HAS_METHOD, b.uri, Origin.MACHINE_LINKED))


def test_empty_label_rejected():
    with pytest.raises(ValueError):
        ProcessEntity(mint_uri("r/a", "task"), "  \n ", Kind.MAIN_TASK, "r/a")


# --- queries ----------------------------------------------------------------------

def test_steps_of_main_task(pancake):
    task = top_level(pancake)[0]
    labels = sorted(e.label for e in steps_of(pancake, task.uri))
    assert labels == sorted(
        ["mix the ingredients", "put the mix on a pan", "flip the pancake",
         "squeeze a lemon into the batter", "cook the pancake"]
    )


def test_wildcard_query_returns_everything(pancake):
    assert query(pancake) == pancake.relations


def test_methods_of_step_is_empty(pancake):
    assert methods_of(pancake, by_label(pancake, "flip the pancake")) == []


def test_requirements_of_task(pancake):
    task = top_level(pancake)[0]
    assert sorted(e.label for e in requirements_of(pancake, task.uri)) == ["eggs", "flour", "milk"]


def test_top_level_is_main_tasks(pancake):
    assert [e.kind for e in top_level(pancake)] == [Kind.MAIN_TASK]


def test_is_primitive(pancake):
    task = top_level(pancake)[0]
    assert is_primitive(pancake, by_label(pancake, "flip the pancake"))
    assert not is_primitive(pancake, task.uri)
    assert is_primitive(pancake, by_label(pancake, "milk"))
    with pytest.raises(UnknownEntity):
        is_primitive(pancake, BASE + "/nope#x")


def test_primitive_step_like_prepare_a_resume():
    g = KnowHowGraph()
    task = g.add_entity(ProcessEntity(mint_uri("w/Get-a-Job", "task"), "get a job", Kind.MAIN_TASK, "w/Get-a-Job"))
    step = g.add_entity(ProcessEntity(mint_uri("w/Get-a-Job", "step1"), "prepare a resume", Kind.STEP, "w/Get-a-Job"))
    g.add_relation(Relation(task.uri, Property.HAS_STEP, step.uri))
    assert is_primitive(g, step.uri)


def test_primitive_partition(pancake):
    for uri in pancake.entities:
        decomposes = any(r.property in (Property.HAS_STEP, Property.HAS_METHOD) for r in pancake.outgoing(uri))
        assert is_primitive(pancake, uri) != decomposes


def test_main_task_has_no_incoming_decomposition_in_document(pancake):
    task = top_level(pancake)[0]
    assert not any(r.property in (Property.HAS_STEP, Property.HAS_METHOD) for r in pancake.incoming(task.uri))


# --- serialization ---------------------------------------------------------------

def test_one_relation_graph_line_count():
    g = KnowHowGraph()
    a = g.add_entity(ProcessEntity(mint_uri("r/a", "task"), "a", Kind.MAIN_TASK, "r/a"))
    b = g.add_entity(ProcessEntity(mint_uri("r/a", "step1"), "b", Kind.STEP, "r/a"))
    g.add_relation(Relation(a.uri, Property.HAS_STEP, b.uri))
    lines = serialize(g).decode().splitlines()
    relation_lines = [l for l in lines if f"<{V.PROHOW}" in l.split(" ")[1]]
    assert len(relation_lines) == 1
    # type, label and source for each of the two entities
    assert len(lines) == 1 + 2 * 3


def test_pancake_passes_independent_grammar_check(pancake):
    data = serialize(pancake)
    assert ntriples_errors(data) == []
    assert f"<{V.PROHOW}has_step>".encode() in data


def test_serialization_is_sorted(pancake):
    lines = serialize(pancake).decode().splitlines()
    assert lines == sorted(lines)


def test_round_trip_pancake(pancake):
    data = serialize(pancake)
    assert parse(data) == pancake
    assert serialize(parse(data)) == data


def test_turtle_round_trip_and_prefixes(pancake):
    ttl = serialize(pancake, Format.TURTLE)
    assert f"@prefix prohow: <{V.PROHOW}> .".encode() in ttl
    assert b"prohow:has_step" in ttl
    assert parse(ttl, Format.TURTLE) == pancake


def test_annotations_round_trip(pancake):
    g = parse(serialize(pancake))
    assert set(g.annotations) == set(g.entities)
    for a in g.annotations.values():
        assert a.body_text[a.selector.start:a.selector.end] or a.selector.start == a.selector.end


def test_empty_stream_gives_empty_graph():
    assert parse(b"") == KnowHowGraph()


def test_undeclared_object_is_integrity_error():
    a = mint_uri("r/a", "task")
    data = (
        f'<{a}> <{V.RDF_TYPE}> <{Kind.MAIN_TASK.iri}> .\n'
        f'<{a}> <{V.RDFS_LABEL}> "a" .\n'
        f'<{a}> <{V.META_SOURCE_DOC}> "r/a" .\n'
        f'<{a}> <{V.PROHOW}has_step> <{BASE}/r/a#ghost> .\n'
    )
    from knowhow.core.model import IntegrityError

    with pytest.raises(IntegrityError):
        parse(data.encode())


def test_syntax_error_reports_line():
    with pytest.raises(RDFSyntaxError) as info:
        parse(b"\n<http://a> <http://b> .\n")
    assert info.value.lineno == 2
    assert isinstance(info.value, SyntaxError)


def test_unknown_predicates_are_kept(pancake):
    data = serialize(pancake) + b'<http://example.org/s> <http://example.org/p> "o"@en .\n'
    g = parse(data)
    assert ('<http://example.org/s>', '<http://example.org/p>', '"o"@en') in g.extra_triples
    assert b"http://example.org/p" in serialize(g)


def test_random_graphs_round_trip():
    rng = random.Random(11)
    for _ in range(25):
        g = random_graph(rng)
        data = serialize(g)
        assert ntriples_errors(data) == []
        assert parse(data) == g
        assert serialize(parse(data)) == data
        assert parse(serialize(g, Format.TURTLE), Format.TURTLE) == g


@settings(max_examples=60, deadline=None)
@given(st.text(min_size=1).filter(lambda s: s.strip()))
def test_any_label_round_trips(label):
    g = KnowHowGraph()
    e = g.add_entity(ProcessEntity(mint_uri("r/a", "task"), label, Kind.MAIN_TASK, "r/a"))
    g.add_annotation(Annotation(e.uri, label, Selector("r/a", "task", 0, len(label))))
    data = serialize(g)
    assert ntriples_errors(data) == []
    assert parse(data) == g
