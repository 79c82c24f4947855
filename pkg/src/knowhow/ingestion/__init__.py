import logging
from pathlib import Path
from typing import Iterator, Union

from .canonical import (
    SUFFIX,
    EncodingError,
    SchemaError,
    document_from_dict,
    document_to_dict,
    parse_canonical,
    serialize_canonical,
)
from .document import (
    DEFAULT_MAX_DEPTH,
    HowToDocument,
    MethodBlock,
    Requirement,
    StepBlock,
    Violation,
    normalize_document,
    validate,
)
from .wikihow import UnrecognizedLayout, parse_wikihow_markup

log = logging.getLogger(__name__)

ARCHIVE_SUFFIXES = (".html", ".htm")


def iter_corpus(root: Union[str, Path], max_depth: int = DEFAULT_MAX_DEPTH) -> Iterator[HowToDocument]:
    """Yield documents from canonical files and archived pages under ``root``.

    Files are visited in sorted path order. Archived pages that the adapter
    cannot recognize are logged and skipped; canonical files must be valid.
    """
    for path in sorted(Path(root).rglob("*")):
        if not path.is_file():
            continue
        if path.name.endswith(SUFFIX):
            yield parse_canonical(path.read_bytes(), max_depth)
        elif path.suffix.lower() in ARCHIVE_SUFFIXES:
            try:
                yield parse_wikihow_markup(path.read_bytes(), doc_id=f"wikihow/{path.stem}", max_depth=max_depth)
            except UnrecognizedLayout as exc:
                log.warning("skipping %s: %s", path, exc)


__all__ = [
    "DEFAULT_MAX_DEPTH",
    "EncodingError",
    "HowToDocument",
    "MethodBlock",
    "Requirement",
    "SUFFIX",
    "SchemaError",
    "StepBlock",
    "UnrecognizedLayout",
    "Violation",
    "document_from_dict",
    "document_to_dict",
    "iter_corpus",
    "normalize_document",
    "parse_canonical",
    "parse_wikihow_markup",
    "serialize_canonical",
    "validate",
]
