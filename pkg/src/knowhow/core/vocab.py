"""Namespaces and terms used in the know-how graph."""
from __future__ import annotations

from enum import Enum

PROHOW = "http://vocab.inf.ed.ac.uk/prohow#"
RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
XSD = "http://www.w3.org/2001/XMLSchema#"
OA = "http://www.w3.org/ns/oa#"
# Artifact-local metadata (kinds, source document, categories, step detail).
META = "http://w3id.org/prohow/meta#"

DEFAULT_BASE = "http://w3id.org/prohow/data"

# Emission order of @prefix lines in Turtle output.
PREFIXES = (
    ("prohow", PROHOW),
    ("rdf", RDF),
    ("rdfs", RDFS),
    ("xsd", XSD),
    ("oa", OA),
    ("meta", META),
)

RDF_TYPE = RDF + "type"
RDFS_LABEL = RDFS + "label"
XSD_INTEGER = XSD + "integer"

META_SOURCE_DOC = META + "sourceDoc"
META_CATEGORY = META + "category"
META_DETAIL = META + "detail"
META_PATH = META + "path"

OA_ANNOTATION = OA + "Annotation"
OA_TEXT_POSITION_SELECTOR = OA + "TextPositionSelector"
OA_HAS_TARGET = OA + "hasTarget"
OA_BODY_VALUE = OA + "bodyValue"
OA_HAS_SELECTOR = OA + "hasSelector"
OA_START = OA + "start"
OA_END = OA + "end"


class Property(str, Enum):
    HAS_STEP = "has_step"
    HAS_METHOD = "has_method"
    REQUIRES = "requires"

    @property
    def iri(self) -> str:
        return PROHOW + self.value

    @classmethod
    def from_iri(cls, iri: str) -> "Property":
        if not iri.startswith(PROHOW):
            raise ValueError(f"not a prohow property: {iri}")
        return cls(iri[len(PROHOW):])


class Kind(str, Enum):
    MAIN_TASK = "MainTask"
    METHOD = "Method"
    STEP = "Step"
    REQUIREMENT = "Requirement"

    @property
    def iri(self) -> str:
        return META + self.value


class Origin(str, Enum):
    EXTRACTED = "Extracted"
    MACHINE_LINKED = "MachineLinked"


KIND_BY_IRI = {k.iri: k for k in Kind}
PROPERTY_BY_IRI = {p.iri: p for p in Property}
