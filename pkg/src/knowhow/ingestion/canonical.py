"""Reader and writer for the ``.howto.json`` interchange format.

One document per file::

    {"doc_id": "wikihow/Make-a-Pancake", "title": "...", "language": "en",
     "categories": [...], "requirements": ["milk", {"text": "...", "refs": [...]}],
     "methods": [{"name": null, "ordered": true,
                  "steps": [{"headline": "...", "detail": null, "substeps": [], "refs": []}]}]}

A requirement may be a bare string or an object carrying ``refs``
(cross-references to other documents). Step ``refs`` is optional.
"""
from __future__ import annotations

import json
from typing import Any, Union

from .document import (
    DEFAULT_MAX_DEPTH,
    HowToDocument,
    MethodBlock,
    Requirement,
    StepBlock,
    normalize_document,
    validate,
)

SUFFIX = ".howto.json"


class SchemaError(ValueError):
    pass


class EncodingError(ValueError):
    pass


def _str(obj: Any, where: str, optional: bool = False):
    if obj is None and optional:
        return None
    if not isinstance(obj, str):
        raise SchemaError(f"{where} must be a string")
    return obj


def _list(obj: Any, where: str) -> list:
    if obj is None:
        return []
    if not isinstance(obj, list):
        raise SchemaError(f"{where} must be a list")
    return obj


def _refs(obj: Any, where: str) -> list[str]:
    return [_str(r, f"{where}[{i}]") for i, r in enumerate(_list(obj, where))]


def _step(obj: Any, where: str) -> StepBlock:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where} must be an object")
    if "headline" not in obj:
        raise SchemaError(f"{where}.headline is missing")
    return StepBlock(
        headline=_str(obj["headline"], f"{where}.headline"),
        detail=_str(obj.get("detail"), f"{where}.detail", optional=True),
        substeps=[_step(s, f"{where}.substeps[{i}]") for i, s in enumerate(_list(obj.get("substeps"), f"{where}.substeps"))],
        refs=_refs(obj.get("refs"), f"{where}.refs"),
    )


def _requirement(obj: Any, where: str) -> Requirement:
    if isinstance(obj, str):
        return Requirement(obj)
    if isinstance(obj, dict) and "text" in obj:
        return Requirement(_str(obj["text"], f"{where}.text"), _refs(obj.get("refs"), f"{where}.refs"))
    raise SchemaError(f"{where} must be a string or an object with 'text'")


def document_from_dict(data: Any, max_depth: int = DEFAULT_MAX_DEPTH) -> HowToDocument:
    if not isinstance(data, dict):
        raise SchemaError("document must be a JSON object")
    for key in ("doc_id", "title"):
        if not data.get(key):
            raise SchemaError(f"missing {key}")
    methods = []
    for j, m in enumerate(_list(data.get("methods"), "methods")):
        if not isinstance(m, dict):
            raise SchemaError(f"methods[{j}] must be an object")
        ordered = m.get("ordered", True)
        if not isinstance(ordered, bool):
            raise SchemaError(f"methods[{j}].ordered must be a boolean")
        methods.append(
            MethodBlock(
                steps=[_step(s, f"methods[{j}].steps[{k}]") for k, s in enumerate(_list(m.get("steps"), f"methods[{j}].steps"))],
                name=_str(m.get("name"), f"methods[{j}].name", optional=True),
                ordered=ordered,
            )
        )
    doc = HowToDocument(
        doc_id=_str(data["doc_id"], "doc_id"),
        title=_str(data["title"], "title"),
        methods=methods,
        categories=[_str(c, f"categories[{i}]") for i, c in enumerate(_list(data.get("categories"), "categories"))],
        requirements=[_requirement(r, f"requirements[{i}]") for i, r in enumerate(_list(data.get("requirements"), "requirements"))],
        language=_str(data.get("language", "en"), "language"),
    )
    normalize_document(doc)
    problems = validate(doc, max_depth)
    if problems:
        raise SchemaError("; ".join(str(p) for p in problems))
    return doc


def parse_canonical(stream: Union[bytes, str], max_depth: int = DEFAULT_MAX_DEPTH) -> HowToDocument:
    if isinstance(stream, bytes):
        try:
            stream = stream.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EncodingError(f"document is not valid UTF-8: {exc}") from None
    try:
        data = json.loads(stream)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not a JSON document: {exc}") from None
    return document_from_dict(data, max_depth)


def _step_dict(step: StepBlock) -> dict:
    out = {
        "headline": step.raw_headline if step.raw_headline is not None else step.headline,
        "detail": step.detail,
        "substeps": [_step_dict(s) for s in step.substeps],
    }
    if step.refs:
        out["refs"] = list(step.refs)
    return out


def document_to_dict(doc: HowToDocument) -> dict:
    reqs = []
    for r in doc.requirements:
        text = r.raw if r.raw is not None else r.text
        reqs.append({"text": text, "refs": list(r.refs)} if r.refs else text)
    return {
        "doc_id": doc.doc_id,
        "title": doc.raw_title if doc.raw_title is not None else doc.title,
        "language": doc.language,
        "categories": list(doc.categories),
        "requirements": reqs,
        "methods": [
            {
                "name": m.raw_name if m.raw_name is not None else m.name,
                "ordered": m.ordered,
                "steps": [_step_dict(s) for s in m.steps],
            }
            for m in doc.methods
        ],
    }


def serialize_canonical(doc: HowToDocument) -> bytes:
    return (json.dumps(document_to_dict(doc), indent=2, ensure_ascii=False) + "\n").encode("utf-8")
