from __future__ import annotations

import random
from collections import Counter

import pytest

from helpers import pancake_doc
from knowhow.core.model import query
from knowhow.core.rdf import serialize
from knowhow.core.vocab import Kind, Property
from knowhow.extractor import CorpusReport, DuplicateDocId, extract, extract_corpus
from knowhow.ingestion import HowToDocument, MethodBlock, StepBlock, normalize_document
from knowhow.synthetic import make_corpus


def uri_of(graph, label, kind=None):
    (uri,) = [u for u, e in graph.entities.items() if e.label == label and (kind is None or e.kind is kind)]
    return uri


def expected_entities(doc) -> int:
    steps = sum(1 for _ in doc.all_steps())
    return 1 + len(doc.requirements) + (len(doc.methods) if len(doc.methods) > 1 else 0) + steps


@pytest.fixture(scope="module")
def pancake():
    return extract(pancake_doc())


def test_pancake_counts(pancake):
    graph, report = pancake
    assert len(graph.entities) == 11
    counts = Counter(r.property.value for r in graph.relations)
    assert counts == {"has_method": 2, "has_step": 5, "requires": 6}
    assert len(graph.relations) == 13
    assert report.entity_count == 11
    assert report.relation_count_by_property == dict(counts)


def test_pancake_example_triples(pancake):
    graph, _ = pancake
    mix = uri_of(graph, "mix the ingredients")
    put = uri_of(graph, "put the mix on a pan")
    method = uri_of(graph, "make a pancake", Kind.METHOD)
    assert query(graph, method, Property.HAS_STEP, mix)
    assert query(graph, put, Property.REQUIRES, mix)


def test_requirements_attach_to_main_task(pancake):
    graph, _ = pancake
    task = uri_of(graph, "make a pancake", Kind.MAIN_TASK)
    assert {graph.entities[r.object].label for r in query(graph, task, Property.REQUIRES)} == {"milk", "flour", "eggs"}


def test_single_method_unordered():
    doc = normalize_document(HowToDocument("t/x", "tie a knot", [MethodBlock([StepBlock("loop"), StepBlock("pull")], ordered=False)]))
    graph, report = extract(doc)
    assert report.relation_count_by_property == {"has_method": 0, "has_step": 2, "requires": 0}
    task = uri_of(graph, "tie a knot")
    assert len(query(graph, task, Property.HAS_STEP)) == 2


def test_substeps_use_has_step_and_do_not_chain():
    steps = [StepBlock("a", substeps=[StepBlock("a1"), StepBlock("a2")]), StepBlock("b")]
    doc = normalize_document(HowToDocument("t/x", "task", [MethodBlock(steps)]))
    graph, _ = extract(doc)
    a = uri_of(graph, "a")
    assert {graph.entities[r.object].label for r in query(graph, a, Property.HAS_STEP)} == {"a1", "a2"}
    ordering = {(graph.entities[r.subject].label, graph.entities[r.object].label)
                for r in graph.relations if r.property is Property.REQUIRES}
    assert ordering == {("b", "a")}


def test_every_entity_has_source_annotation(pancake):
    graph, _ = pancake
    assert set(graph.annotations) == set(graph.entities)
    cook = uri_of(graph, "cook the pancake")
    assert graph.annotations[cook].body_text == "cook the   pancake"
    assert graph.annotations[cook].selector.path == "method2/step2"


def test_invalid_document_is_a_programmer_error():
    with pytest.raises(ValueError):
        extract(HowToDocument("t/x", "", [MethodBlock([StepBlock("a")])]))


def test_corpus_invariants():
    docs = make_corpus(50, seed=3).docs
    graph, report = extract_corpus(docs)
    per_doc = [extract(d)[1] for d in docs]
    assert report.entity_count == sum(r.entity_count for r in per_doc) == len(graph.entities)
    totals = Counter()
    for r in per_doc:
        totals.update(r.relation_count_by_property)
    assert report.relation_count_by_property == dict(totals)
    for doc in docs:
        fragment, r = extract(doc)
        assert r.entity_count == expected_entities(doc)
        ordering = sum(len(m.steps) - 1 for m in doc.methods if m.ordered)
        requires = sum(1 for x in fragment.relations if x.property is Property.REQUIRES)
        assert requires == ordering + len(doc.requirements)
        assert {e.source_doc for e in fragment.entities.values()} == {doc.doc_id}


def test_corpus_is_order_independent():
    docs = make_corpus(20, seed=5).docs
    shuffled = docs[:]
    random.Random(1).shuffle(shuffled)
    assert serialize(extract_corpus(docs)[0]) == serialize(extract_corpus(shuffled, workers=4)[0])


def test_disjoint_docs_add_up(pancake):
    other = normalize_document(HowToDocument("t/x", "tie a knot", [MethodBlock([StepBlock("loop")])]))
    graph, report = extract_corpus([pancake_doc(), other])
    assert len(graph.entities) == 11 + 2
    assert report.entity_count == 13


def test_duplicate_doc_id():
    with pytest.raises(DuplicateDocId):
        extract_corpus([pancake_doc(), pancake_doc()])


def test_invalid_docs_reported_as_skipped():
    bad = HowToDocument("t/bad", "title", [MethodBlock([])])
    graph, report = extract_corpus([pancake_doc(), bad])
    skipped = [r for r in report.documents if r.skipped]
    assert [r.doc_id for r in skipped] == ["t/bad"] and "EmptyMethod" in skipped[0].reason
    assert len(graph.entities) == 11


def test_report_tsv_round_trip():
    _, report = extract_corpus(make_corpus(10, seed=1).docs)
    text = report.to_tsv()
    assert text.splitlines()[0].split("\t") == ["doc_id", "entities", "has_step", "has_method", "requires", "skipped"]
    assert CorpusReport.from_tsv(text).to_tsv() == text
