"""Tokenization, word lists and string similarity shared by the linkers."""
from __future__ import annotations

import re
from contextlib import contextmanager
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

from .core.model import normalize_ws

_WORD = re.compile(r"[^\W_]+")
_override: Optional[frozenset[str]] = None


def load_wordlist(path: Union[str, Path, None] = None, bundled: str = "stopwords.txt") -> frozenset[str]:
    """Lowercase words, one per line; ``#`` starts a comment."""
    if path is None:
        text = resources.files("knowhow").joinpath("data", bundled).read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    words = (line.split("#", 1)[0].strip().lower() for line in text.splitlines())
    return frozenset(w for w in words if w)


@lru_cache(maxsize=None)
def default_stopwords() -> frozenset[str]:
    return load_wordlist(bundled="stopwords.txt")


@lru_cache(maxsize=None)
def default_creation_verbs() -> frozenset[str]:
    return load_wordlist(bundled="creation_verbs.txt")


@contextmanager
def use_stopwords(stopwords: Iterable[str]) -> Iterator[None]:
    """Within the block, ``tokenize`` calls without explicit stopwords use ``stopwords``."""
    global _override
    previous, _override = _override, frozenset(stopwords)
    try:
        yield
    finally:
        _override = previous


def words(text: str) -> list[str]:
    """Lowercased alphanumeric runs, stopwords kept."""
    return _WORD.findall(text.lower())


def tokenize(text: str, stopwords: Optional[Iterable[str]] = None) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop stopwords. No stemming."""
    if stopwords is not None:
        stop = stopwords
    else:
        stop = default_stopwords() if _override is None else _override
    return [w for w in words(text) if w not in stop]


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def normalize_label(text: str) -> str:
    return normalize_ws(text).lower()


def similarity(a: str, b: str) -> float:
    """1 - levenshtein / max length, on lowercased whitespace-collapsed text."""
    a, b = normalize_label(a), normalize_label(b)
    if a == b:
        return 1.0
    return 1.0 - levenshtein(a, b) / max(len(a), len(b))


def jaccard(a: Iterable, b: Iterable) -> float:
    a, b = set(a), set(b)
    union = a | b
    return len(a & b) / len(union) if union else 0.0
