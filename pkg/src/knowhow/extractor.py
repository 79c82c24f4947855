"""Convert how-to documents into know-how graph fragments."""
from __future__ import annotations

import csv
import io
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core.model import Annotation, KnowHowGraph, ProcessEntity, Relation, Selector, mint_uri
from .core.vocab import DEFAULT_BASE, Kind, Property
from .ingestion.document import HowToDocument, StepBlock, validate

REPORT_COLUMNS = ("doc_id", "entities", "has_step", "has_method", "requires", "skipped")


class DuplicateDocId(ValueError):
    pass


@dataclass
class ExtractionReport:
    doc_id: str
    entity_count: int = 0
    relation_count_by_property: dict[str, int] = field(
        default_factory=lambda: {p.value: 0 for p in Property}
    )
    skipped: bool = False
    reason: str = ""

    @property
    def relation_count(self) -> int:
        return sum(self.relation_count_by_property.values())

    def row(self) -> tuple:
        c = self.relation_count_by_property
        return (
            self.doc_id,
            self.entity_count,
            c["has_step"],
            c["has_method"],
            c["requires"],
            self.reason if self.skipped else "",
        )


@dataclass
class CorpusReport:
    documents: list[ExtractionReport] = field(default_factory=list)

    @property
    def entity_count(self) -> int:
        return sum(r.entity_count for r in self.documents)

    @property
    def relation_count_by_property(self) -> dict[str, int]:
        total = Counter({p.value: 0 for p in Property})
        for r in self.documents:
            total.update(r.relation_count_by_property)
        return dict(total)

    @property
    def extracted(self) -> list[ExtractionReport]:
        return [r for r in self.documents if not r.skipped]

    def to_tsv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, delimiter="\t", lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in self.documents:
            w.writerow(r.row())
        return buf.getvalue()

    @classmethod
    def from_tsv(cls, text: str) -> "CorpusReport":
        rows = list(csv.reader(io.StringIO(text), delimiter="\t"))
        if not rows or tuple(rows[0]) != REPORT_COLUMNS:
            raise ValueError("not an extraction report")
        docs = []
        for doc_id, ents, hs, hm, rq, skipped in rows[1:]:
            docs.append(
                ExtractionReport(
                    doc_id,
                    int(ents),
                    {"has_step": int(hs), "has_method": int(hm), "requires": int(rq)},
                    skipped=bool(skipped),
                    reason=skipped,
                )
            )
        return cls(docs)


def _add(graph: KnowHowGraph, uri: str, label: str, kind: Kind, doc: HowToDocument,
         raw: str, selector: Selector, detail: Optional[str] = None) -> str:
    graph.add_entity(ProcessEntity(uri, label, kind, doc.doc_id, tuple(doc.categories), detail))
    graph.add_annotation(Annotation(uri, raw, selector))
    return uri


def extract(doc: HowToDocument, base: str = DEFAULT_BASE) -> tuple[KnowHowGraph, ExtractionReport]:
    """Entities, PROHOW relations and annotations for a single valid document.

    Multi-method documents get one Method node per block under ``has_method``;
    a single method attaches its steps straight to the main task. Ordered lists
    chain consecutive top-level steps with ``requires`` (later requires earlier).
    """
    problems = validate(doc)
    if problems:
        raise ValueError(f"{doc.doc_id} is not a valid document: {problems[0]}")
    g = KnowHowGraph()
    did = doc.doc_id
    rel = lambda s, p, o: g.add_relation(Relation(s, p, o))  # noqa: E731

    task = _add(g, mint_uri(did, "task", base), doc.title, Kind.MAIN_TASK, doc, doc.raw_title, doc.selector)
    for req in doc.requirements:
        uri = _add(g, mint_uri(did, req.selector.path, base), req.text, Kind.REQUIREMENT, doc, req.raw, req.selector)
        rel(task, Property.REQUIRES, uri)

    def add_step(step: StepBlock) -> str:
        uri = _add(g, mint_uri(did, step.selector.path, base), step.headline, Kind.STEP, doc,
                   step.raw_headline, step.selector, step.detail)
        for sub in step.substeps:
            rel(uri, Property.HAS_STEP, add_step(sub))
        return uri

    multi = len(doc.methods) > 1
    for method in doc.methods:
        parent = task
        if multi:
            # An unnamed method stands for the task itself, so it takes the title.
            parent = _add(g, mint_uri(did, method.selector.path, base), method.name or doc.title,
                          Kind.METHOD, doc, method.raw_name or doc.raw_title, method.selector)
            rel(task, Property.HAS_METHOD, parent)
        previous = None
        for step in method.steps:
            uri = add_step(step)
            rel(parent, Property.HAS_STEP, uri)
            if method.ordered and previous is not None:
                rel(uri, Property.REQUIRES, previous)
            previous = uri

    report = ExtractionReport(did, len(g.entities))
    for r in g.relations:
        report.relation_count_by_property[r.property.value] += 1
    return g, report


def _extract_or_skip(doc: HowToDocument, base: str) -> tuple[Optional[KnowHowGraph], ExtractionReport]:
    problems = validate(doc)
    if problems:
        return None, ExtractionReport(doc.doc_id, skipped=True, reason=str(problems[0]))
    return extract(doc, base)


def extract_corpus(
    docs: Iterable[HowToDocument], base: str = DEFAULT_BASE, workers: int = 1
) -> tuple[KnowHowGraph, CorpusReport]:
    """Merge per-document fragments in doc-id order. Invalid documents are
    reported as skipped. ``workers`` > 1 extracts documents concurrently."""
    by_id: dict[str, HowToDocument] = {}
    for d in docs:
        if d.doc_id in by_id:
            raise DuplicateDocId(d.doc_id)
        by_id[d.doc_id] = d
    ordered = [by_id[did] for did in sorted(by_id)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda d: _extract_or_skip(d, base), ordered))
    else:
        results = [_extract_or_skip(d, base) for d in ordered]
    graph, report = KnowHowGraph(), CorpusReport()
    for fragment, r in results:
        if fragment is not None:
            graph.merge(fragment)
        report.documents.append(r)
    return graph, report
