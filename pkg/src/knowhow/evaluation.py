"""Link-quality metrics (precision, link count, coverage) and comparison tables."""
from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from .core.model import KnowHowGraph, mint_uri
from .core.vocab import DEFAULT_BASE, Kind
from .ingestion.document import HowToDocument

JUDGMENT_COLUMNS = ("link_id", "correct")


class SampleTooLarge(ValueError):
    pass


class EmptyJudgments(ValueError):
    pass


class DanglingJudgment(KeyError):
    pass


class LinkType(str, Enum):
    IO = "IO"
    DECOMPOSITION = "Decomposition"
    TOTAL = "Total"


def sample_links(link_ids: Iterable[str], n: int, seed: int) -> list[str]:
    """Uniform sample without replacement; independent of input order."""
    pool = sorted(set(link_ids))
    if n > len(pool):
        raise SampleTooLarge(f"cannot sample {n} of {len(pool)} links")
    return random.Random(seed).sample(pool, n)


@dataclass
class GoldJudgments:
    judgments: dict[str, bool]
    seed: Optional[int] = None
    sample_size: Optional[int] = None

    def __len__(self):
        return len(self.judgments)

    def check(self, link_ids: Iterable[str]) -> None:
        known = set(link_ids)
        missing = sorted(set(self.judgments) - known)
        if missing:
            raise DanglingJudgment(f"{len(missing)} judged links are not in the link set, e.g. {missing[0]}")


def read_judgments(text: str, link_ids: Optional[Iterable[str]] = None) -> GoldJudgments:
    """Rows of ``link_id<TAB>0|1`` under a header; ``# seed=N size=M`` comments record the sampling."""
    judgments, meta = {}, {}
    rows = csv.reader(io.StringIO(text), delimiter="\t")
    for n, row in enumerate(rows, start=1):
        if not row:
            continue
        if row[0].startswith("#"):
            for part in row[0].lstrip("#").split():
                key, _, value = part.partition("=")
                if key in ("seed", "size") and value.isdigit():
                    meta[key] = int(value)
            continue
        if tuple(row) == JUDGMENT_COLUMNS:
            continue
        if len(row) != 2 or row[1] not in ("0", "1"):
            raise ValueError(f"judgments row {n}: expected link_id and 0/1")
        judgments[row[0]] = row[1] == "1"
    gold = GoldJudgments(judgments, meta.get("seed"), meta.get("size"))
    if link_ids is not None:
        gold.check(link_ids)
    return gold


def write_judgments(gold: GoldJudgments) -> str:
    buf = io.StringIO()
    if gold.seed is not None:
        buf.write(f"# seed={gold.seed} size={gold.sample_size if gold.sample_size is not None else len(gold)}\n")
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(JUDGMENT_COLUMNS)
    for k in sorted(gold.judgments):
        w.writerow((k, int(gold.judgments[k])))
    return buf.getvalue()


def precision(judgments: Union[GoldJudgments, Mapping[str, bool]]) -> float:
    j = judgments.judgments if isinstance(judgments, GoldJudgments) else judgments
    if not j:
        raise EmptyJudgments("no judged links")
    return sum(1 for v in j.values() if v) / len(j)


def _task_by_doc(graph: KnowHowGraph) -> dict[str, set[str]]:
    out: dict[str, set[str]] = {}
    for e in graph.entities.values():
        if e.kind is Kind.MAIN_TASK:
            out.setdefault(e.source_doc, set()).add(e.uri)
    return out


def covered_processes(links: Iterable, processes: Iterable[str], graph: KnowHowGraph) -> set[str]:
    """Main processes whose own document holds the source side of some link.

    ``links`` items expose ``.source`` (an entity URI) or are URIs themselves.
    """
    processes = set(processes)
    tasks = _task_by_doc(graph)
    covered = set()
    for link in links:
        src = link if isinstance(link, str) else link.source
        entity = graph.entities.get(src)
        if entity is None:
            raise DanglingJudgment(f"link source {src} is not in the graph")
        covered |= tasks.get(entity.source_doc, set()) & processes
    return covered


def coverage(links: Iterable, processes: Iterable[str], graph: KnowHowGraph) -> tuple[int, float]:
    processes = set(processes)
    covered = covered_processes(links, processes, graph)
    return len(covered), (len(covered) / len(processes) if processes else 0.0)


def percent(num: int, den: int, places: int = 1) -> str:
    """Exact rational percentage rounded half-up, e.g. ``percent(45999, 167232) == '27.5%'``."""
    if den == 0:
        return "n/a"
    value = Fraction(num * 100, den)
    q = Decimal(value.numerator) / Decimal(value.denominator)
    return f"{q.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)}%"


def percent_of(p: Optional[float], places: int = 1) -> str:
    if p is None:
        return "n/a"
    f = Fraction(p).limit_denominator(10**9)
    return percent(f.numerator, f.denominator, places)


@dataclass
class MetricsReport:
    link_type: LinkType
    precision: Optional[float]
    link_count: int
    covered_processes: int
    denominator: int
    judged: int = 0

    def __post_init__(self):
        self.link_type = LinkType(self.link_type)
        if self.precision is not None and not 0.0 <= self.precision <= 1.0:
            raise ValueError("precision must lie in [0, 1]")
        if self.covered_processes > self.denominator:
            raise ValueError("more covered processes than processes")

    @property
    def coverage(self) -> float:
        return self.covered_processes / self.denominator if self.denominator else 0.0

    def coverage_cell(self) -> str:
        if not self.denominator:
            return "n/a"
        return f"{self.covered_processes:,} ({percent(self.covered_processes, self.denominator)})"

    def to_dict(self) -> dict:
        return {**asdict(self), "link_type": self.link_type.value, "coverage": self.coverage}


def total_report(parts: Sequence[MetricsReport], covered_processes: int, denominator: int) -> MetricsReport:
    """Totals row: counts add up; precision is the link-count-weighted mean."""
    count = sum(p.link_count for p in parts)
    weighted = [p for p in parts if p.precision is not None and p.link_count]
    prec = None
    if weighted and sum(p.link_count for p in weighted) == count:
        prec = sum(p.precision * p.link_count for p in weighted) / count
    return MetricsReport(
        LinkType.TOTAL, prec, count, covered_processes, denominator, sum(p.judged for p in parts)
    )


_ROWS = (
    (LinkType.IO, "Precision of I/O links", "Number of I/O links", "Coverage of I/O links"),
    (LinkType.DECOMPOSITION, "Precision of decomposition links", "Number of decomposition links",
     "Coverage of decomposition links"),
    (LinkType.TOTAL, "Total precision of the links", "Total number of links", "Total coverage of the links"),
)


@dataclass
class ComparisonTable:
    columns: list[str]
    reports: dict[str, dict[LinkType, MetricsReport]]
    rows: list[tuple[str, list[str]]] = field(default_factory=list)
    deltas: dict[str, dict[str, float]] = field(default_factory=dict)

    def render(self) -> str:
        head = ["metric", *self.columns, *(f"delta {c}" for c in self.columns[1:])]
        body = []
        for (label, cells), key in zip(self.rows, self._keys()):
            extra = [_fmt_delta(key, self.deltas[c].get(key)) for c in self.columns[1:]]
            body.append([label, *cells, *extra])
        widths = [max(len(r[i]) for r in [head, *body]) for i in range(len(head))]
        line = lambda r: " | ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()  # noqa: E731
        sep = "-+-".join("-" * w for w in widths)
        return "\n".join([line(head), sep, *(line(r) for r in body)]) + "\n"

    def _keys(self) -> list[str]:
        return [f"{t.value}.{m}" for t, *_ in _ROWS for m in ("precision", "link_count", "coverage")]

    def to_dict(self) -> dict:
        return {
            "columns": self.columns,
            "reports": {c: {t.value: r.to_dict() for t, r in rs.items()} for c, rs in self.reports.items()},
            "deltas": self.deltas,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _fmt_delta(key: str, value: Optional[float]) -> str:
    if value is None:
        return "n/a"
    if key.endswith("link_count"):
        return f"{int(value):+,}"
    return f"{value * 100:+.1f} pp"


def compare(columns: Mapping[str, Sequence[MetricsReport]]) -> ComparisonTable:
    """Side-by-side table; deltas are relative to the first column."""
    if len(columns) < 2:
        raise ValueError("a comparison needs at least two columns")
    names = list(columns)
    by_type: dict[str, dict[LinkType, MetricsReport]] = {}
    for name in names:
        reps = {r.link_type: r for r in columns[name]}
        parts = [reps[t] for t in (LinkType.IO, LinkType.DECOMPOSITION) if t in reps]
        if parts:
            # union coverage cannot be derived from the parts, so it comes from the given Total
            given = reps.get(LinkType.TOTAL)
            reps[LinkType.TOTAL] = total_report(
                parts, given.covered_processes if given else 0, given.denominator if given else 0
            )
        by_type[name] = reps

    table = ComparisonTable(names, by_type)
    for t, p_label, n_label, c_label in _ROWS:
        def cells(fn):
            return [fn(by_type[c][t]) if t in by_type[c] else "n/a" for c in names]

        table.rows.append((p_label, cells(lambda r: percent_of(r.precision))))
        table.rows.append((n_label, cells(lambda r: f"{r.link_count:,}")))
        table.rows.append((c_label, cells(lambda r: r.coverage_cell())))

    def values(r: Optional[MetricsReport]) -> dict[str, Optional[float]]:
        if r is None:
            return {"precision": None, "link_count": None, "coverage": None}
        return {"precision": r.precision, "link_count": r.link_count, "coverage": r.coverage}

    first = by_type[names[0]]
    for c in names[1:]:
        d = {}
        for t, *_ in _ROWS:
            a, b = values(first.get(t)), values(by_type[c].get(t))
            for m in ("precision", "link_count", "coverage"):
                d[f"{t.value}.{m}"] = None if a[m] is None or b[m] is None else b[m] - a[m]
        table.deltas[c] = d
    return table


class Role(str, Enum):
    IO = "IO"
    DECOMPOSITION = "Decomposition"


@dataclass(frozen=True, order=True)
class CommunityLink:
    """A hand-made cross-reference from an entity to another document's main task."""

    source: str
    target: str
    role: Role

    @property
    def link_id(self) -> str:
        return f"C|{self.role.value}|{self.source}|{self.target}"


def extract_community_links(
    docs: Iterable[HowToDocument], base: str = DEFAULT_BASE
) -> tuple[set[CommunityLink], set[CommunityLink]]:
    """Split embedded references into requirement-borne (I/O role) and
    step-borne (decomposition role) links. Self-references are ignored."""
    io_links, dec_links = set(), set()
    for doc in docs:
        for req in doc.requirements:
            src = mint_uri(doc.doc_id, req.selector.path, base)
            for ref in req.refs:
                if ref != doc.doc_id:
                    io_links.add(CommunityLink(src, mint_uri(ref, "task", base), Role.IO))
        for step, _ in doc.all_steps():
            src = mint_uri(doc.doc_id, step.selector.path, base)
            for ref in step.refs:
                if ref != doc.doc_id:
                    dec_links.add(CommunityLink(src, mint_uri(ref, "task", base), Role.DECOMPOSITION))
    return io_links, dec_links


def write_community_links(links: Iterable[CommunityLink]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(("source_uri", "target_uri", "role"))
    for l in sorted(links):
        w.writerow((l.source, l.target, l.role.value))
    return buf.getvalue()
