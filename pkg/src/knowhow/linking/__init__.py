from ..text import similarity
from .catalog import (
    BackendUnavailable,
    CatalogEntity,
    LookupBackend,
    OfflineCatalog,
    RemoteLookup,
    parse_lookup_response,
)
from .entity import (
    DEFAULT_THRESHOLD,
    Direction,
    EntityLink,
    IOLink,
    choose_candidate,
    compose_io_links,
    composed_precision,
    detect_output,
    link_corpus,
    read_entity_links,
    read_io_links,
    write_entity_links,
    write_io_links,
)


def lookup(backend: LookupBackend, label: str, max_hits: int = 10) -> list[CatalogEntity]:
    return backend.lookup(label, max_hits)


__all__ = [
    "BackendUnavailable",
    "CatalogEntity",
    "DEFAULT_THRESHOLD",
    "Direction",
    "EntityLink",
    "IOLink",
    "LookupBackend",
    "OfflineCatalog",
    "RemoteLookup",
    "choose_candidate",
    "compose_io_links",
    "composed_precision",
    "detect_output",
    "link_corpus",
    "lookup",
    "parse_lookup_response",
    "read_entity_links",
    "read_io_links",
    "similarity",
    "write_entity_links",
    "write_io_links",
]
