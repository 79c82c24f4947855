from __future__ import annotations

import os
import random
import threading
import time
from functools import lru_cache

import pytest
import requests
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import pancake_doc
from knowhow.core.model import KnowHowGraph, ProcessEntity, Relation, mint_uri, top_level
from knowhow.core.vocab import Kind, Property
from knowhow.extractor import extract, extract_corpus
from knowhow.linking import (
    BackendUnavailable,
    CatalogEntity,
    Direction,
    EntityLink,
    IOLink,
    OfflineCatalog,
    RemoteLookup,
    choose_candidate,
    compose_io_links,
    composed_precision,
    detect_output,
    link_corpus,
    lookup,
    parse_lookup_response,
    read_entity_links,
    read_io_links,
    write_entity_links,
    write_io_links,
)
from knowhow.synthetic import make_corpus
from knowhow.text import default_creation_verbs, jaccard, levenshtein, similarity, tokenize, use_stopwords

DBR = "http://dbpedia.org/resource/"


def lev_oracle(a: str, b: str) -> int:
    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0 or j == 0:
            return i + j
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))

    return d(len(a), len(b))


@pytest.fixture
def five():
    return OfflineCatalog([
        CatalogEntity(DBR + "Milk", "Milk", ("http://dbpedia.org/ontology/Food",)),
        CatalogEntity(DBR + "Pancake", "Pancake"),
        CatalogEntity(DBR + "Silk", "Silk"),
        CatalogEntity(DBR + "Milk_chocolate", "Milk chocolate"),
        CatalogEntity(DBR + "Flour", "Flour"),
    ])


# --- text -------------------------------------------------------------------------

def test_similarity_examples():
    assert similarity("Pancake", "pancake") == 1.0
    assert similarity("milk", "silk") == 0.75
    assert similarity("", "abc") == 0.0
    assert similarity("", "") == 1.0
    assert similarity("cover   letter", "Cover letter") == 1.0


@settings(max_examples=200)
@given(st.text(max_size=8), st.text(max_size=8))
def test_levenshtein_matches_oracle(a, b):
    assert levenshtein(a, b) == lev_oracle(a, b)
    s = similarity(a, b)
    assert 0.0 <= s <= 1.0
    assert s == similarity(b, a)


def test_tokenize_drops_stopwords():
    assert tokenize("How to Make a Pancake!") == ["make", "pancake"]
    with use_stopwords({"pancake"}):
        assert tokenize("make a pancake") == ["make", "a"]
    assert tokenize("make a pancake") == ["make", "pancake"]


def test_jaccard():
    assert jaccard("ab", "bc") == pytest.approx(1 / 3)
    assert jaccard([], []) == 0.0


# --- lookup -----------------------------------------------------------------------

def test_lookup_exact_label_first(five):
    hits = lookup(five, "milk")
    assert hits[0].catalog_uri == DBR + "Milk"
    assert [h.lookup_rank for h in hits] == list(range(1, len(hits) + 1))
    assert {h.catalog_uri for h in hits} == {DBR + "Milk", DBR + "Milk_chocolate"}


def test_lookup_empty_label_is_rejected(five):
    with pytest.raises(ValueError):
        five.lookup("")


def test_lookup_no_match(five):
    assert five.lookup("bicycle") == []


def test_lookup_max_hits(five):
    assert len(five.lookup("milk", max_hits=1)) == 1


def test_catalog_tsv_round_trip(five):
    again = OfflineCatalog.from_tsv(five.to_tsv())
    assert again.entries == five.entries
    assert again.to_tsv() == five.to_tsv()


# --- choose_candidate ---------------------------------------------------------------

def test_exact_candidate_wins(five):
    hit, sim = choose_candidate("milk", five.lookup("milk"))
    assert hit.catalog_uri == DBR + "Milk" and sim == 1.0


def test_tie_goes_to_lower_rank():
    a = CatalogEntity(DBR + "A", "milk", lookup_rank=2)
    b = CatalogEntity(DBR + "B", "Milk", lookup_rank=1)
    assert choose_candidate("milk", [a, b])[0] is b


def test_below_threshold_is_none():
    assert choose_candidate("milk", [CatalogEntity(DBR + "Silk", "silky")]) is None
    assert choose_candidate("milk", []) is None


@given(st.permutations(list(range(6))))
def test_choose_candidate_order_invariant(perm):
    labels = ["milk", "Milk", "milky", "silk", "mild", "milk shake"]
    cands = [CatalogEntity(DBR + str(i), l, lookup_rank=i + 1) for i, l in enumerate(labels)]
    assert choose_candidate("milk", [cands[i] for i in perm]) == choose_candidate("milk", cands)


# --- detect_output ---------------------------------------------------------------

@pytest.mark.parametrize("title,expected", [
    ("make a pancake", "pancake"),
    ("avoid smoking", None),
    ("build", None),
    ("How to Write a Cover Letter", "cover letter"),
    ("how to make your own soap", "own soap"),
    ("bake the bread and make jam", "bread and make jam"),
])
def test_detect_output(title, expected):
    assert detect_output(title) == expected


def test_detect_output_requires_title():
    with pytest.raises(ValueError):
        detect_output("  ")


@given(st.lists(st.sampled_from(["make", "a", "the", "cake", "build", "big", "house", "make"]), min_size=1, max_size=7))
def test_detect_output_never_returns_the_verb(tokens):
    title = " ".join(tokens)
    phrase = detect_output(title)
    if phrase is not None:
        first = next(t for t in tokens if t in default_creation_verbs())
        assert first not in phrase.split()


# --- link_corpus ---------------------------------------------------------------

def tiny_graph(title: str, requirements: list[str], doc: str = "t/Doc") -> KnowHowGraph:
    g = KnowHowGraph()
    task = g.add_entity(ProcessEntity(mint_uri(doc, "task"), title, Kind.MAIN_TASK, doc))
    for i, r in enumerate(requirements, start=1):
        e = g.add_entity(ProcessEntity(mint_uri(doc, f"req{i}"), r, Kind.REQUIREMENT, doc))
        g.add_relation(Relation(task.uri, Property.REQUIRES, e.uri))
    return g


def test_link_corpus_fixture(five):
    g = tiny_graph("make a pancake", ["milk"])
    links = link_corpus(g, five)
    got = {(l.direction, l.catalog_uri) for l in links}
    assert got == {(Direction.INPUT, DBR + "Milk"), (Direction.OUTPUT, DBR + "Pancake")}
    assert all(l.process_entity == mint_uri("t/Doc", "task") for l in links)


def test_link_corpus_nothing_to_link(five):
    assert link_corpus(tiny_graph("avoid smoking", []), five) == set()


def test_pancake_document_links(five):
    graph, _ = extract(pancake_doc())
    links = link_corpus(graph, five)
    inputs = {l.catalog_uri for l in links if l.direction is Direction.INPUT}
    assert inputs == {DBR + "Milk", DBR + "Flour"}
    assert {l.catalog_uri for l in links if l.direction is Direction.OUTPUT} == {DBR + "Pancake"}


def brute_force_links(graph, entries, tau=0.8):
    """Scan every entity and every catalog entry; no postings, no caching."""
    def candidates(label):
        q = set(tokenize(label))
        scored = [(jaccard(q, tokenize(e.label)), e) for e in entries if q & set(tokenize(e.label))]
        scored.sort(key=lambda p: (-p[0], p[1].catalog_uri))
        return [(rank, e) for rank, (_, e) in enumerate(scored[:10], start=1)]

    def best(label):
        top = None
        for rank, e in candidates(label):
            s = similarity(label, e.label)
            if top is None or s > top[0] or (s == top[0] and rank < top[1]):
                top = (s, rank, e)
        return top if top and top[0] >= tau else None

    out = set()
    for uri, e in graph.entities.items():
        if e.kind is Kind.REQUIREMENT:
            hit = best(e.label)
            for r in graph.relations:
                if hit and r.object == uri and r.property is Property.REQUIRES and \
                        graph.entities[r.subject].kind is not Kind.REQUIREMENT:
                    out.add((r.subject, "Input", hit[2].catalog_uri, uri))
        if e.kind is Kind.MAIN_TASK:
            phrase = detect_output(e.label)
            hit = best(phrase) if phrase else None
            if hit:
                out.add((uri, "Output", hit[2].catalog_uri, uri))
    return out


def test_link_corpus_matches_brute_force_on_200_processes():
    corpus = make_corpus(200, seed=2)
    graph, _ = extract_corpus(corpus.docs)
    catalog = OfflineCatalog(corpus.catalog)
    links = link_corpus(graph, catalog, workers=4)
    got = {(l.process_entity, l.direction.value, l.catalog_uri, l.mention) for l in links}
    assert got == brute_force_links(graph, corpus.catalog)
    assert all(l.similarity >= 0.8 for l in links)


def test_lower_threshold_only_adds_links():
    corpus = make_corpus(60, seed=4)
    graph, _ = extract_corpus(corpus.docs)
    catalog = OfflineCatalog(corpus.catalog)
    strict = {l.link_id for l in link_corpus(graph, catalog, threshold=0.9)}
    loose = {l.link_id for l in link_corpus(graph, catalog, threshold=0.5)}
    assert strict <= loose


class FlakyBackend:
    def __init__(self, inner):
        self.inner = inner

    def lookup(self, label, max_hits=10):
        if label == "milk":
            raise BackendUnavailable("down")
        return self.inner.lookup(label, max_hits)


def test_backend_failure_drops_only_that_label(five, caplog):
    g = tiny_graph("make a pancake", ["milk", "flour"])
    links = link_corpus(g, FlakyBackend(five))
    assert {l.catalog_uri for l in links} == {DBR + "Flour", DBR + "Pancake"}
    assert "milk" in caplog.text


# --- I/O composition -------------------------------------------------------------

def link(process, direction, via):
    return EntityLink(process, CatalogEntity(via, "x"), direction, 1.0, mention=process + "/m")


def compose_oracle(links):
    out = set()
    for a in links:
        for b in links:
            if a.direction is Direction.OUTPUT and b.direction is Direction.INPUT and \
                    a.catalog_uri == b.catalog_uri and a.process_entity != b.process_entity:
                out.add(IOLink(a.process_entity, b.process_entity, a.catalog_uri))
    return out


def test_cover_letter_io_link():
    writer = "http://ex.org/w#how-to-write-a-cover-letter"
    applicant = "http://ex.org/a#how-to-apply-for-a-job"
    links = {link(writer, Direction.OUTPUT, DBR + "Cover_letter"), link(applicant, Direction.INPUT, DBR + "Cover_letter")}
    assert compose_io_links(links) == {IOLink(writer, applicant, DBR + "Cover_letter")}


def test_only_inputs_compose_to_nothing():
    assert compose_io_links({link("http://ex.org/p", Direction.INPUT, DBR + "X")}) == set()


def test_self_pairs_are_dropped():
    p = "http://ex.org/p"
    assert compose_io_links({link(p, Direction.INPUT, DBR + "X"), link(p, Direction.OUTPUT, DBR + "X")}) == set()
    with pytest.raises(ValueError):
        IOLink(p, p, DBR + "X")


def test_compose_matches_oracle_on_random_links():
    rng = random.Random(8)
    for _ in range(20):
        links = {
            link(f"http://ex.org/p{rng.randrange(15)}", rng.choice(list(Direction)), DBR + str(rng.randrange(6)))
            for _ in range(50)
        }
        assert compose_io_links(links) == compose_oracle(links)


def test_composed_precision():
    assert composed_precision(0.96, 0.983) == pytest.approx(0.94368, abs=1e-12)
    assert composed_precision(1.0, 0.7) == 0.7
    assert composed_precision(0.0, 0.7) == 0.0
    with pytest.raises(ValueError):
        composed_precision(1.2, 0.5)


def test_link_files_round_trip(five):
    g = tiny_graph("make a pancake", ["milk"])
    links = link_corpus(g, five)
    text = write_entity_links(links)
    back = read_entity_links(text)
    assert {l.link_id for l in back} == {l.link_id for l in links}
    assert write_entity_links(back) == text
    io = {IOLink("http://ex.org/a", "http://ex.org/b", DBR + "X")}
    assert read_io_links(write_io_links(io)) == io


# --- remote client ---------------------------------------------------------------

class FakeResponse:
    def __init__(self, status, payload):
        self.status_code, self._payload = status, payload

    def json(self):
        return self._payload

    def raise_for_status(self):
        if self.status_code >= 400:
            raise requests.HTTPError(f"HTTP {self.status_code}")


class FakeSession:
    def __init__(self, responses, delay=0.0):
        self.responses, self.delay = list(responses), delay
        self.calls, self.active, self.peak = [], 0, 0
        self._lock = threading.Lock()

    def get(self, url, params=None, timeout=None, headers=None):
        with self._lock:
            self.calls.append(params)
            self.active += 1
            self.peak = max(self.peak, self.active)
            item = self.responses.pop(0) if len(self.responses) > 1 else self.responses[0]
        time.sleep(self.delay)
        with self._lock:
            self.active -= 1
        if isinstance(item, Exception):
            raise item
        return item


DOCS_PAYLOAD = {"docs": [
    {"resource": [DBR + "Milk"], "label": ["<B>Milk</B>"], "type": ["http://dbpedia.org/ontology/Food"]},
    {"resource": [DBR + "Milk_tea"], "label": ["Milk tea"], "type": []},
]}


def test_parse_lookup_response_shapes():
    hits = parse_lookup_response(DOCS_PAYLOAD)
    assert [(h.label, h.lookup_rank) for h in hits] == [("Milk", 1), ("Milk tea", 2)]
    old = {"results": [{"uri": DBR + "Milk", "label": "Milk", "classes": [{"uri": "http://x/Food"}]}]}
    assert parse_lookup_response(old)[0].types == ("http://x/Food",)


def test_remote_lookup_success():
    session = FakeSession([FakeResponse(200, DOCS_PAYLOAD)])
    client = RemoteLookup("http://lookup.example/api/search", max_hits=5, session=session)
    hits = client.lookup("milk")
    assert hits[0].catalog_uri == DBR + "Milk"
    assert session.calls[0] == {"QueryString": "milk", "MaxHits": 5, "format": "json"}


def test_remote_lookup_retries_then_fails():
    session = FakeSession([FakeResponse(503, {})])
    client = RemoteLookup("http://lookup.example", retries=2, backoff=0.0, session=session)
    with pytest.raises(BackendUnavailable):
        client.lookup("milk")
    assert len(session.calls) == 3


def test_remote_lookup_recovers_after_error():
    session = FakeSession([requests.ConnectionError("reset"), FakeResponse(200, DOCS_PAYLOAD)])
    client = RemoteLookup("http://lookup.example", retries=1, backoff=0.0, session=session)
    assert client.lookup("milk")[0].label == "Milk"


def test_remote_lookup_bounds_concurrency():
    from concurrent.futures import ThreadPoolExecutor

    session = FakeSession([FakeResponse(200, DOCS_PAYLOAD)], delay=0.02)
    client = RemoteLookup("http://lookup.example", max_concurrency=2, session=session)
    with ThreadPoolExecutor(max_workers=8) as pool:
        list(pool.map(client.lookup, [f"milk {i}" for i in range(16)]))
    assert session.peak <= 2


@pytest.mark.integration
@pytest.mark.skipif(not os.environ.get("KNOWHOW_LOOKUP_ENDPOINT"), reason="set KNOWHOW_LOOKUP_ENDPOINT to run")
def test_live_lookup():
    client = RemoteLookup(os.environ["KNOWHOW_LOOKUP_ENDPOINT"])
    assert client.lookup("pancake")
