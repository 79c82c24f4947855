"""Shared test utilities: random graphs and independent syntax checkers."""
from __future__ import annotations

import random
import re
from pathlib import Path

from knowhow.core.model import Annotation, KnowHowGraph, ProcessEntity, Relation, Selector, mint_uri
from knowhow.core.vocab import Kind, Origin, Property
from knowhow.ingestion import parse_canonical

FIXTURES = Path(__file__).parent / "fixtures"

# W3C N-Triples productions, written out independently of the library's parser.
_HEX = r"[0-9A-Fa-f]"
_UCHAR = rf"(?:\\u{_HEX}{{4}}|\\U{_HEX}{{8}})"
_ECHAR = r'\\[tbnrf"\'\\]'
_IRIREF = rf'<(?:[^\x00-\x20<>"{{}}|^`\\]|{_UCHAR})*>'
_PN_CHARS_BASE = (
    r"A-Za-z\u00C0-\u00D6\u00D8-\u00F6\u00F8-\u02FF\u0370-\u037D\u037F-\u1FFF"
    r"\u200C-\u200D\u2070-\u218F\u2C00-\u2FEF\u3001-\uD7FF\uF900-\uFDCF\uFDF0-\uFFFD"
)
_BNODE = rf"_:[{_PN_CHARS_BASE}_0-9](?:[{_PN_CHARS_BASE}_0-9.\-\u00B7]*[{_PN_CHARS_BASE}_0-9\-\u00B7])?"
_STRING = rf'"(?:[^"\\\n\r]|{_ECHAR}|{_UCHAR})*"'
_LANGTAG = r"@[a-zA-Z]+(?:-[a-zA-Z0-9]+)*"
_LITERAL = rf"{_STRING}(?:\^\^{_IRIREF}|{_LANGTAG})?"
NT_TRIPLE = re.compile(
    rf"[ \t]*(?:{_IRIREF}|{_BNODE})[ \t]*{_IRIREF}[ \t]*(?:{_IRIREF}|{_BNODE}|{_LITERAL})[ \t]*\.[ \t]*(?:#.*)?"
)
NT_BLANK = re.compile(r"[ \t]*(?:#.*)?")


def ntriples_errors(data: bytes) -> list[int]:
    """Line numbers that are neither a triple nor blank/comment."""
    text = data.decode("utf-8")
    if text and not text.endswith("\n"):
        return [text.count("\n") + 1]
    return [
        n
        for n, line in enumerate(text.split("\n")[:-1], start=1)
        if not (NT_TRIPLE.fullmatch(line) or NT_BLANK.fullmatch(line))
    ]


# RFC 3987 absolute IRI, simplified: scheme, no forbidden characters, well-formed escapes.
_IRI = re.compile(r"[A-Za-z][A-Za-z0-9+.\-]*:[^\x00-\x20<>\"{}|\\^`]*")
_BAD_PCT = re.compile(r"%(?![0-9A-Fa-f]{2})")


def is_absolute_iri(value: str) -> bool:
    if not _IRI.fullmatch(value) or _BAD_PCT.search(value):
        return False
    return value.count("#") <= 1


def pancake_doc():
    return parse_canonical((FIXTURES / "pancake.howto.json").read_bytes())


_WORDS = ["mix", "pan", "flip", "ca\u00f1a", "\u5149", "quote\"d", "back\\slash", "tab\there", "new\nline", "x"]


def random_graph(rng: random.Random, max_entities: int = 12) -> KnowHowGraph:
    """Entities over a few documents with legal relations, annotations and extras."""
    g = KnowHowGraph()
    n = rng.randint(0, max_entities)
    docs = [f"repo{rng.randint(0, 1)}/Doc {i}" for i in range(rng.randint(1, 3))]
    uris = []
    for i in range(n):
        doc = rng.choice(docs)
        path = f"n{i}" if rng.random() < 0.5 else f"method{i}/step{rng.randint(1, 3)}"
        label = " ".join(rng.choice(_WORDS) for _ in range(rng.randint(1, 4)))
        cats = tuple(rng.sample(["Food", "Crafts", "Caf\u00e9 & Bar"], rng.randint(0, 2)))
        detail = rng.choice([None, "some detail", "line one\r\nline two"])
        e = ProcessEntity(mint_uri(doc, path), label, rng.choice(list(Kind)), doc, cats, detail)
        if e.uri in g.entities:
            continue
        g.add_entity(e)
        uris.append(e.uri)
        if rng.random() < 0.8:
            g.add_annotation(Annotation(e.uri, "  " + label, Selector(doc, path, 2, 2 + len(label))))
    for _ in range(rng.randint(0, 2 * n)):
        if len(uris) < 2:
            break
        s, o = rng.sample(uris, 2)
        cross = g.entities[s].source_doc != g.entities[o].source_doc
        g.add_relation(Relation(s, rng.choice(list(Property)), o, Origin.MACHINE_LINKED if cross else Origin.EXTRACTED))
    if uris and rng.random() < 0.5:
        g.extra_triples.add((f"<{uris[0]}>", "<http://example.org/p>", '"extra"@en'))
    return g


VOCAB = [f"w{i}" for i in range(120)]


def primitive_fixture(n_primitives: int = 1000, steps_per_doc: int = 10, seed: int = 0) -> KnowHowGraph:
    """Documents of one task plus ``steps_per_doc`` primitive steps with skewed vocabulary."""
    rng = random.Random(seed)
    weights = [1.0 / (i + 1) for i in range(len(VOCAB))]
    g = KnowHowGraph()
    for d in range(n_primitives // steps_per_doc):
        doc = f"fx/doc{d:04d}"
        task = ProcessEntity(mint_uri(doc, "task"), " ".join(rng.choices(VOCAB, weights, k=rng.randint(2, 5))),
                             Kind.MAIN_TASK, doc)
        g.add_entity(task)
        for s in range(1, steps_per_doc + 1):
            words = rng.choices(VOCAB, weights, k=rng.randint(1, 6))
            detail = " ".join(rng.choices(VOCAB, weights, k=3)) if rng.random() < 0.3 else None
            step = ProcessEntity(mint_uri(doc, f"step{s}"), " ".join(words), Kind.STEP, doc, detail=detail)
            g.add_entity(step)
            g.add_relation(Relation(task.uri, Property.HAS_STEP, step.uri))
    return g
