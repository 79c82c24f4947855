from .model import (
    Annotation,
    DanglingEndpoint,
    GraphError,
    IntegrityError,
    InvalidPath,
    KnowHowGraph,
    OriginMismatch,
    ProcessEntity,
    Relation,
    Selector,
    SelfLoop,
    UnknownEntity,
    add_relation,
    is_primitive,
    methods_of,
    mint_uri,
    normalize_ws,
    query,
    requirements_of,
    steps_of,
    top_level,
)
from .rdf import Format, RDFSyntaxError, parse, serialize
from .vocab import DEFAULT_BASE, PROHOW, Kind, Origin, Property

__all__ = [
    "Annotation",
    "DEFAULT_BASE",
    "DanglingEndpoint",
    "Format",
    "GraphError",
    "IntegrityError",
    "InvalidPath",
    "Kind",
    "KnowHowGraph",
    "Origin",
    "OriginMismatch",
    "PROHOW",
    "ProcessEntity",
    "Property",
    "RDFSyntaxError",
    "Relation",
    "Selector",
    "SelfLoop",
    "UnknownEntity",
    "add_relation",
    "is_primitive",
    "methods_of",
    "mint_uri",
    "normalize_ws",
    "parse",
    "query",
    "requirements_of",
    "serialize",
    "steps_of",
    "top_level",
]
