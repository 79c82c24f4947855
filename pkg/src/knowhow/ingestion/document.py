"""Canonical how-to document model and its validation rules."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional

from ..core.model import Selector, normalize_ws

DEFAULT_MAX_DEPTH = 4

_BCP47 = re.compile(r"[A-Za-z]{2,8}(-[A-Za-z0-9]{1,8})*")


@dataclass
class StepBlock:
    headline: str
    detail: Optional[str] = None
    substeps: list["StepBlock"] = field(default_factory=list)
    refs: list[str] = field(default_factory=list)
    raw_headline: Optional[str] = None
    selector: Optional[Selector] = None

    def walk(self, depth: int = 1) -> Iterator[tuple["StepBlock", int]]:
        yield self, depth
        for sub in self.substeps:
            yield from sub.walk(depth + 1)


@dataclass
class MethodBlock:
    steps: list[StepBlock]
    name: Optional[str] = None
    ordered: bool = True
    raw_name: Optional[str] = None
    selector: Optional[Selector] = None


@dataclass
class Requirement:
    text: str
    refs: list[str] = field(default_factory=list)
    raw: Optional[str] = None
    selector: Optional[Selector] = None


@dataclass
class HowToDocument:
    doc_id: str
    title: str
    methods: list[MethodBlock]
    categories: list[str] = field(default_factory=list)
    requirements: list[Requirement] = field(default_factory=list)
    language: str = "en"
    raw_title: Optional[str] = None
    selector: Optional[Selector] = None

    @property
    def repository(self) -> str:
        return self.doc_id.split("/", 1)[0]

    def all_steps(self) -> Iterator[tuple[StepBlock, int]]:
        for m in self.methods:
            for s in m.steps:
                yield from s.walk()


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str
    detail: str = ""

    def __str__(self):
        return f"{self.rule} at {self.field}" + (f": {self.detail}" if self.detail else "")


def _key(text: str) -> str:
    return normalize_ws(text).casefold()


def validate(doc: HowToDocument, max_depth: int = DEFAULT_MAX_DEPTH) -> list[Violation]:
    """All invariant violations of ``doc``; empty when the document is usable."""
    out = []
    if not doc.doc_id or any(not p for p in doc.doc_id.split("/")):
        out.append(Violation("doc_id", "EmptyDocId", repr(doc.doc_id)))
    if not normalize_ws(doc.title or ""):
        out.append(Violation("title", "EmptyTitle"))
    if not _BCP47.fullmatch(doc.language or ""):
        out.append(Violation("language", "InvalidLanguage", repr(doc.language)))
    if not doc.methods:
        out.append(Violation("methods", "NoMethods"))
    seen = set()
    for i, req in enumerate(doc.requirements):
        key = _key(req.text)
        if not key:
            out.append(Violation(f"requirements[{i}]", "EmptyRequirement"))
        elif key in seen:
            out.append(Violation(f"requirements[{i}]", "DuplicateRequirement", req.text))
        seen.add(key)
    for j, method in enumerate(doc.methods):
        if not method.steps:
            out.append(Violation(f"methods[{j}].steps", "EmptyMethod"))
        for k, step in enumerate(method.steps):
            for node, depth in step.walk():
                where = f"methods[{j}].steps[{k}]"
                if not normalize_ws(node.headline or ""):
                    out.append(Violation(where, "EmptyHeadline"))
                if depth > max_depth:
                    out.append(Violation(where, "DepthExceeded", f"depth {depth} > {max_depth}"))
                    break
    return out


def _span(raw: str) -> tuple[int, int]:
    start = len(raw) - len(raw.lstrip())
    return start, len(raw.rstrip())


def _sel(doc_id: str, path: str, raw: str) -> Selector:
    start, end = _span(raw)
    return Selector(doc_id, path, start, end)


def _norm_opt(text: Optional[str]) -> Optional[str]:
    if text is None:
        return None
    return normalize_ws(text) or None


def normalize_document(doc: HowToDocument) -> HowToDocument:
    """Collapse whitespace, keep source text, merge duplicate requirements and
    assign structural selectors. Paths match the fragment paths used for URIs."""
    did = doc.doc_id
    doc.raw_title = doc.title if doc.raw_title is None else doc.raw_title
    doc.title = normalize_ws(doc.title)
    doc.selector = _sel(did, "task", doc.raw_title)
    doc.categories = list(dict.fromkeys(c for c in (normalize_ws(c) for c in doc.categories) if c))

    merged: dict[str, Requirement] = {}
    for req in doc.requirements:
        raw = req.text if req.raw is None else req.raw
        key = _key(raw)
        if key in merged:
            merged[key].refs.extend(r for r in req.refs if r not in merged[key].refs)
            continue
        merged[key] = Requirement(normalize_ws(raw), list(dict.fromkeys(req.refs)), raw)
    doc.requirements = list(merged.values())
    for i, req in enumerate(doc.requirements, start=1):
        req.selector = _sel(did, f"req{i}", req.raw)

    multi = len(doc.methods) > 1

    def fix_step(step: StepBlock, path: str) -> None:
        step.raw_headline = step.headline if step.raw_headline is None else step.raw_headline
        step.headline = normalize_ws(step.headline)
        step.detail = _norm_opt(step.detail)
        step.refs = list(dict.fromkeys(step.refs))
        step.selector = _sel(did, path, step.raw_headline)
        for n, sub in enumerate(step.substeps, start=1):
            fix_step(sub, f"{path}/step{n}")

    for j, method in enumerate(doc.methods, start=1):
        if method.name is not None and method.raw_name is None:
            method.raw_name = method.name
        method.name = _norm_opt(method.name)
        if method.name is None:
            method.raw_name = None
        method.selector = _sel(did, f"method{j}", method.raw_name or doc.raw_title)
        prefix = f"method{j}/" if multi else ""
        for k, step in enumerate(method.steps, start=1):
            fix_step(step, f"{prefix}step{k}")
    return doc
