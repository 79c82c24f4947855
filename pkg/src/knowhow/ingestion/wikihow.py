"""Best-effort adapter for archived wikiHow article snapshots.

Recognized markers:

* title: ``h1.firstHeading`` (falls back to the first ``h1``)
* doc id: ``link[rel=canonical]`` slug, else the ``doc_id`` argument
* categories: ``/Category:`` links in ``#breadcrumb`` (or ``#breadcrumbs``)
* requirements: list items of ``div.ingredients`` and ``div.thingsyoullneed``
* methods: each ``div.steps`` section; its ``h3`` is the method name and its
  first ``ol``/``ul`` the step list. Within a step, a leading ``<b>`` is the
  headline and the remaining text the detail; nested lists are substeps.

Anything short of a title plus a complete step list for every method section
raises :class:`UnrecognizedLayout`; pages are never partially extracted.
"""
from __future__ import annotations

import copy
import re
from typing import Optional, Union
from urllib.parse import unquote, urlparse

from bs4 import BeautifulSoup, Tag

from .document import (
    DEFAULT_MAX_DEPTH,
    HowToDocument,
    MethodBlock,
    Requirement,
    StepBlock,
    normalize_document,
    validate,
)

REPOSITORY = "wikihow"

_METHOD_PREFIX = re.compile(r"^\s*(?:method|part)\s+\d+(?:\s+of\s+\d+)?\s*[:.]?\s*", re.I)
_NON_ARTICLE = ("Category:", "Image:", "Special:", "User:", "Main-Page", "index.php")


class UnrecognizedLayout(ValueError):
    pass


def _article_slug(href: str) -> Optional[str]:
    parsed = urlparse(href)
    if parsed.netloc and "wikihow." not in parsed.netloc:
        return None
    path = unquote(parsed.path).lstrip("/")
    if not path or "/" in path or path.startswith(_NON_ARTICLE) or ":" in path:
        return None
    return path


def _refs(el: Tag) -> list[str]:
    out = []
    for a in el.find_all("a", href=True):
        slug = _article_slug(a["href"])
        if slug:
            out.append(f"{REPOSITORY}/{slug}")
    return out


def _without_lists(el: Tag) -> Tag:
    el = copy.copy(el)
    for nested in el.find_all(["ul", "ol"]):
        nested.decompose()
    return el


def _parse_step(li: Tag) -> StepBlock:
    body = _without_lists(li)
    bold = body.find(["b", "strong"])
    if bold is not None and bold.get_text(strip=True):
        headline = bold.get_text()
        bold.extract()
        detail = body.get_text() or None
    else:
        headline, detail = body.get_text(), None
    substeps = []
    for lst in li.find_all(["ul", "ol"], recursive=True):
        # only lists whose closest enclosing li is this one
        if lst.find_parent("li") is li:
            substeps.extend(_parse_step(sub) for sub in lst.find_all("li", recursive=False))
    return StepBlock(headline=headline, detail=detail, substeps=substeps, refs=_refs(body))


def _doc_id(soup: BeautifulSoup, fallback: Optional[str]) -> Optional[str]:
    link = soup.find("link", rel="canonical")
    if link is not None and link.get("href"):
        slug = _article_slug(link["href"])
        if slug:
            return f"{REPOSITORY}/{slug}"
    return fallback


def parse_wikihow_markup(
    page: Union[bytes, str], doc_id: Optional[str] = None, max_depth: int = DEFAULT_MAX_DEPTH
) -> HowToDocument:
    soup = BeautifulSoup(page, "html.parser")

    h1 = soup.find("h1", class_="firstHeading") or soup.find("h1")
    title = h1.get_text() if h1 is not None else ""
    if not title.strip():
        raise UnrecognizedLayout("page has no title")
    did = _doc_id(soup, doc_id)
    if not did:
        raise UnrecognizedLayout("page has no canonical link and no doc id was given")

    crumbs = soup.find(id="breadcrumb") or soup.find(id="breadcrumbs")
    categories = []
    if crumbs is not None:
        for a in crumbs.find_all("a", href=True):
            if "Category:" in unquote(a["href"]):
                categories.append(a.get_text())

    requirements = []
    for cls in ("ingredients", "thingsyoullneed"):
        for section in soup.find_all("div", class_=cls):
            for li in section.find_all("li"):
                requirements.append(Requirement(_without_lists(li).get_text(), _refs(li)))

    methods = []
    sections = soup.find_all("div", class_="steps")
    if not sections:
        raise UnrecognizedLayout("page has no step list")
    for section in sections:
        lst = section.find(["ol", "ul"])
        items = lst.find_all("li", recursive=False) if lst is not None else []
        if not items:
            raise UnrecognizedLayout("method section without a step list")
        heading = section.find(["h2", "h3"])
        name = _METHOD_PREFIX.sub("", heading.get_text()) if heading is not None else None
        methods.append(
            MethodBlock(
                steps=[_parse_step(li) for li in items],
                name=name if name and name.strip() else None,
                ordered=lst.name == "ol",
            )
        )

    html = soup.find("html")
    lang = html.get("lang") if html is not None and html.get("lang") else "en"
    doc = normalize_document(
        HowToDocument(
            doc_id=did,
            title=title,
            methods=methods,
            categories=categories,
            requirements=requirements,
            language=lang,
        )
    )
    problems = validate(doc, max_depth)
    if problems:
        raise UnrecognizedLayout("; ".join(str(p) for p in problems))
    return doc
