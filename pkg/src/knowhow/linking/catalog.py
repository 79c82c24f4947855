"""Entity catalog backends: an offline delimited file and a remote lookup client."""
from __future__ import annotations

import csv
import io
import logging
import re
import threading
import time
from collections import defaultdict
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Protocol, Union

import requests

from ..text import jaccard, tokenize

log = logging.getLogger(__name__)

CATALOG_COLUMNS = ("catalog_uri", "label", "types")


class BackendUnavailable(RuntimeError):
    pass


@dataclass(frozen=True)
class CatalogEntity:
    catalog_uri: str
    label: str
    types: tuple[str, ...] = ()
    lookup_rank: int = 1

    def __post_init__(self):
        if not self.label.strip():
            raise ValueError(f"catalog entity {self.catalog_uri} has an empty label")
        if self.lookup_rank < 1:
            raise ValueError("lookup_rank starts at 1")
        object.__setattr__(self, "types", tuple(sorted(set(self.types))))


class LookupBackend(Protocol):
    def lookup(self, label: str, max_hits: int = 10) -> list[CatalogEntity]: ...


def _require_label(label: str) -> None:
    if not label or not label.strip():
        raise ValueError("lookup label must be non-empty")


class OfflineCatalog:
    """In-memory keyword search over catalog labels.

    A catalog entry is a hit when it shares at least one non-stopword token
    with the query; hits are ranked by token Jaccard overlap, then by URI.
    """

    def __init__(self, entries: list[CatalogEntity]):
        self.entries = sorted(entries, key=lambda e: e.catalog_uri)
        self._tokens = {e.catalog_uri: frozenset(tokenize(e.label)) for e in self.entries}
        self._by_uri = {e.catalog_uri: e for e in self.entries}
        self._postings: dict[str, set[str]] = defaultdict(set)
        for uri, toks in self._tokens.items():
            for t in toks:
                self._postings[t].add(uri)

    def __len__(self):
        return len(self.entries)

    @classmethod
    def from_tsv(cls, text: str) -> "OfflineCatalog":
        entries = []
        for i, row in enumerate(csv.reader(io.StringIO(text), delimiter="\t"), start=1):
            if not row or row[0].startswith("#") or (i == 1 and tuple(row) == CATALOG_COLUMNS):
                continue
            if len(row) < 2:
                raise ValueError(f"catalog row {i}: expected uri, label[, types]")
            types = tuple(t.strip() for t in row[2].split(",") if t.strip()) if len(row) > 2 else ()
            entries.append(CatalogEntity(row[0].strip(), row[1].strip(), types))
        return cls(entries)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "OfflineCatalog":
        return cls.from_tsv(Path(path).read_text("utf-8"))

    def to_tsv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, delimiter="\t", lineterminator="\n")
        w.writerow(CATALOG_COLUMNS)
        for e in self.entries:
            w.writerow((e.catalog_uri, e.label, ",".join(e.types)))
        return buf.getvalue()

    def lookup(self, label: str, max_hits: int = 10) -> list[CatalogEntity]:
        _require_label(label)
        query = frozenset(tokenize(label))
        hits = set().union(*(self._postings.get(t, ()) for t in query)) if query else set()
        ranked = sorted(hits, key=lambda u: (-jaccard(query, self._tokens[u]), u))
        return [replace(self._by_uri[u], lookup_rank=r) for r, u in enumerate(ranked[:max_hits], start=1)]


_TAG = re.compile(r"<[^>]+>")


def _first(value):
    if isinstance(value, list):
        return value[0] if value else None
    return value


def parse_lookup_response(payload: dict) -> list[CatalogEntity]:
    """Candidates from a keyword-search JSON response.

    Understands both ``{"docs": [{"resource": [...], "label": [...], "type": [...]}]}``
    and the older ``{"results": [{"uri", "label", "classes": [{"uri"}]}]}`` shapes.
    Highlight markup in labels is stripped.
    """
    out = []
    if "docs" in payload:
        for d in payload["docs"]:
            uri, label = _first(d.get("resource")), _first(d.get("label"))
            types = d.get("type") or []
            if uri and label:
                out.append((uri, label, tuple(types)))
    else:
        for d in payload.get("results", []):
            classes = tuple(c["uri"] for c in d.get("classes") or [] if c.get("uri"))
            if d.get("uri") and d.get("label"):
                out.append((d["uri"], d["label"], classes))
    return [
        CatalogEntity(uri, _TAG.sub("", label).strip(), types, lookup_rank=i)
        for i, (uri, label, types) in enumerate(out, start=1)
        if _TAG.sub("", label).strip()
    ]


class RemoteLookup:
    """HTTP GET keyword-search client with bounded concurrency and retries."""

    def __init__(
        self,
        endpoint: str,
        max_hits: int = 10,
        timeout: float = 10.0,
        max_concurrency: int = 4,
        retries: int = 2,
        backoff: float = 0.5,
        session: Optional[requests.Session] = None,
    ):
        self.endpoint = endpoint
        self.max_hits = max_hits
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.session = session or requests.Session()
        self._slots = threading.BoundedSemaphore(max_concurrency)

    def lookup(self, label: str, max_hits: Optional[int] = None) -> list[CatalogEntity]:
        _require_label(label)
        hits = max_hits or self.max_hits
        params = {"QueryString": label, "MaxHits": hits, "format": "json"}
        last: Exception = RuntimeError("no attempt made")
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * attempt)
            try:
                with self._slots:
                    resp = self.session.get(
                        self.endpoint, params=params, timeout=self.timeout,
                        headers={"Accept": "application/json"},
                    )
                if resp.status_code >= 500:
                    raise requests.HTTPError(f"HTTP {resp.status_code}")
                resp.raise_for_status()
                return parse_lookup_response(resp.json())[:hits]
            except (requests.RequestException, ValueError) as exc:
                last = exc
                log.debug("lookup %r attempt %d failed: %s", label, attempt + 1, exc)
        raise BackendUnavailable(f"lookup for {label!r} failed after {self.retries + 1} attempts: {last}")
