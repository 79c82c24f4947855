"""``knowhow``: run the integration pipeline stage by stage.

Each stage reads earlier artifacts from the output directory and writes its
own; ``all`` runs every stage in order.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .config import ConfigError, PipelineConfig, load_config
from .core.model import KnowHowGraph
from .core.rdf import parse, serialize
from .core.vocab import Kind
from .decomposition import (
    DEFAULT_SCHEMA,
    ForestModel,
    InvertedIndex,
    apply_links,
    build_index,
    cross_validate,
    featurize,
    generate_links,
    read_labeled_pairs,
    read_links,
    train_forest,
    write_links,
)
from .evaluation import (
    LinkType,
    MetricsReport,
    compare,
    covered_processes,
    extract_community_links,
    precision,
    read_judgments,
    total_report,
    write_community_links,
)
from .extractor import CorpusReport, extract_corpus
from .ingestion import (
    SUFFIX,
    HowToDocument,
    UnrecognizedLayout,
    parse_canonical,
    parse_wikihow_markup,
    serialize_canonical,
)
from .ingestion.canonical import EncodingError, SchemaError
from .linking import (
    Direction,
    OfflineCatalog,
    RemoteLookup,
    compose_io_links,
    composed_precision,
    link_corpus,
    read_entity_links,
    read_io_links,
    write_entity_links,
    write_io_links,
)
from .text import load_wordlist, use_stopwords

log = logging.getLogger("knowhow")

DOCUMENTS = "documents"
INGEST_REPORT = "ingest-report.tsv"
GRAPH = "graph.nt"
EXTRACTION_REPORT = "extraction-report.tsv"
ENTITY_LINKS = "entity-links.tsv"
IO_LINKS = "io-links.tsv"
INDEX = "index.bin"
MODEL = "forest.model"
CV_METRICS = "cv-metrics.json"
DECOMPOSITION_LINKS = "decomposition-links.tsv"
LINKED_GRAPH = "linked-graph.nt"
COMMUNITY_LINKS = "community-links.tsv"
REPORT = "report.txt"
REPORT_JSON = "report.json"
STATS = "stats.tsv"


class MissingArtifact(FileNotFoundError):
    pass


class StageError(RuntimeError):
    pass


@dataclass
class Context:
    config: PipelineConfig

    @property
    def out(self) -> Path:
        return self.config.output_dir

    def path(self, name: str, stage: str) -> Path:
        p = self.out / name
        if not p.exists():
            raise MissingArtifact(f"{name} not found in {self.out}; run the stage that writes it before {stage}")
        return p

    def write(self, name: str, data) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        target = self.out / name
        tmp = target.with_name(target.name + ".tmp")
        if isinstance(data, str):
            data = data.encode("utf-8")
        tmp.write_bytes(data)
        tmp.replace(target)

    def graph(self, stage: str, name: str = GRAPH) -> KnowHowGraph:
        return parse(self.path(name, stage).read_bytes())

    def documents(self, stage: str) -> list[HowToDocument]:
        folder = self.path(DOCUMENTS, stage)
        return [parse_canonical(p.read_bytes(), self.config.max_depth) for p in sorted(folder.glob("*" + SUFFIX))]


def _tsv(header, rows) -> str:
    return "\n".join("\t".join(str(c) for c in r) for r in [header, *rows]) + "\n"


def _load_source(path: Path, max_depth: int) -> tuple[Path, Optional[HowToDocument], str]:
    try:
        if path.name.endswith(SUFFIX):
            return path, parse_canonical(path.read_bytes(), max_depth), ""
        doc = parse_wikihow_markup(path.read_bytes(), doc_id=f"wikihow/{path.stem}", max_depth=max_depth)
        return path, doc, ""
    except (SchemaError, EncodingError, UnrecognizedLayout) as exc:
        return path, None, str(exc).replace("\t", " ").replace("\n", " ")


def stage_ingest(ctx: Context) -> None:
    cfg = ctx.config
    sources = sorted(
        p for p in cfg.corpus_dir.rglob("*")
        if p.is_file() and (p.name.endswith(SUFFIX) or p.suffix.lower() in (".html", ".htm"))
    )
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        results = list(pool.map(lambda p: _load_source(p, cfg.max_depth), sources))
    folder = ctx.out / DOCUMENTS
    folder.mkdir(parents=True, exist_ok=True)
    for stale in folder.glob("*" + SUFFIX):
        stale.unlink()
    rows, seen = [], {}
    for path, doc, error in results:
        rel = path.relative_to(cfg.corpus_dir).as_posix()
        if doc is None:
            log.warning("ingest: rejected %s: %s", rel, error)
            rows.append((rel, "", "rejected", error))
            continue
        if doc.doc_id in seen:
            raise StageError(f"{rel} repeats doc id {doc.doc_id} already read from {seen[doc.doc_id]}")
        seen[doc.doc_id] = rel
        (folder / (doc.doc_id.replace("/", "__") + SUFFIX)).write_bytes(serialize_canonical(doc))
        rows.append((rel, doc.doc_id, "ok", ""))
    ctx.write(INGEST_REPORT, _tsv(("source", "doc_id", "status", "reason"), rows))
    log.info("ingest: %d documents, %d rejected", len(seen), len(rows) - len(seen))


def stage_extract(ctx: Context) -> None:
    graph, report = extract_corpus(ctx.documents("extract"), ctx.config.base, ctx.config.workers)
    ctx.write(GRAPH, serialize(graph))
    ctx.write(EXTRACTION_REPORT, report.to_tsv())
    log.info("extract: %d entities, %d relations", len(graph.entities), len(graph.relations))


def _backend(cfg: PipelineConfig):
    if cfg.endpoint:
        return RemoteLookup(cfg.endpoint, cfg.max_hits, cfg.lookup_timeout, cfg.lookup_concurrency)
    return OfflineCatalog.load(cfg.catalog)


def stage_link_entities(ctx: Context) -> None:
    cfg = ctx.config
    graph = ctx.graph("link-entities")
    verbs = load_wordlist(cfg.creation_verbs) if cfg.creation_verbs else None
    links = link_corpus(graph, _backend(cfg), cfg.threshold, verbs, cfg.max_hits, cfg.workers)
    io_links = compose_io_links(links)
    ctx.write(ENTITY_LINKS, write_entity_links(links))
    ctx.write(IO_LINKS, write_io_links(io_links))
    log.info("link-entities: %d entity links, %d I/O links", len(links), len(io_links))


def stage_index(ctx: Context) -> None:
    index = build_index(ctx.graph("index"))
    ctx.write(INDEX, index.to_bytes())
    log.info("index: %d primitive entities, %d terms", index.doc_count, len(index.postings))


def _index(ctx: Context, stage: str) -> InvertedIndex:
    return InvertedIndex.from_bytes(ctx.path(INDEX, stage).read_bytes())


def stage_train(ctx: Context) -> None:
    cfg = ctx.config
    if cfg.labeled_pairs is None:
        raise ConfigError("[decomposition] labeled_pairs is required for training")
    graph, index = ctx.graph("train"), _index(ctx, "train")
    pairs = read_labeled_pairs(cfg.labeled_pairs.read_text("utf-8"), graph, index)
    X = featurize(graph, index, [lp.pair for lp in pairs])
    y = [lp.label for lp in pairs]
    cv = cross_validate(X, y, cfg.cv_folds, cfg.seeds["cv"], cfg.forest, DEFAULT_SCHEMA, cfg.forest_threshold)
    model = train_forest(X, y, cfg.forest, cfg.seeds["forest"], DEFAULT_SCHEMA, cfg.forest_threshold)
    ctx.write(MODEL, model.to_json())
    metrics = {"examples": len(y), "positives": sum(y), "fold_count": cfg.cv_folds, "seed": cfg.seeds["cv"], **cv.to_dict()}
    ctx.write(CV_METRICS, json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    log.info("train: %d pairs, cv mean precision %s", len(y), cv.mean_precision)


def stage_link_decomposition(ctx: Context) -> None:
    cfg = ctx.config
    model = ForestModel.from_json(ctx.path(MODEL, "link-decomposition").read_text("utf-8"))
    graph, index = ctx.graph("link-decomposition"), _index(ctx, "link-decomposition")
    links = generate_links(graph, index, model, cfg.k)
    ctx.write(DECOMPOSITION_LINKS, write_links(links))
    ctx.write(LINKED_GRAPH, serialize(apply_links(graph, links)))
    log.info("link-decomposition: %d links", len(links))


def _judged(ctx: Context, name: str, link_ids) -> Optional[tuple[float, int]]:
    folder = ctx.config.judgments_dir
    if folder is None or not (folder / name).exists():
        return None
    gold = read_judgments((folder / name).read_text("utf-8"), link_ids)
    return precision(gold), len(gold)


def _in_slice(graph: KnowHowGraph, docs: set[str], *uris: str) -> bool:
    return all(graph.entities[u].source_doc in docs for u in uris)


def stage_evaluate(ctx: Context) -> None:
    graph = ctx.graph("evaluate")
    docs = ctx.documents("evaluate")
    entity_links = read_entity_links(ctx.path(ENTITY_LINKS, "evaluate").read_text("utf-8"))
    io_links = read_io_links(ctx.path(IO_LINKS, "evaluate").read_text("utf-8"))
    dec_links = read_links(ctx.path(DECOMPOSITION_LINKS, "evaluate").read_text("utf-8"))
    cv = json.loads(ctx.path(CV_METRICS, "evaluate").read_text("utf-8"))
    c_io, c_dec = extract_community_links(docs, ctx.config.base)
    ctx.write(COMMUNITY_LINKS, write_community_links(c_io | c_dec))
    notes = []

    def rows(io, dec, io_prec, dec_prec, doc_slice):
        processes = {
            e.uri for e in graph.entities.values() if e.kind is Kind.MAIN_TASK and e.source_doc in doc_slice
        }
        cov = lambda links: len(covered_processes(links, processes, graph))  # noqa: E731
        parts = [
            MetricsReport(LinkType.IO, io_prec, len(io), cov(io), len(processes)),
            MetricsReport(LinkType.DECOMPOSITION, dec_prec, len(dec), cov(dec), len(processes)),
        ]
        return [*parts, total_report(parts, cov([*io, *dec]), len(processes))]

    def io_precision(doc_slice, label) -> Optional[float]:
        found = []
        for direction, name in ((Direction.INPUT, "input-judgments.tsv"), (Direction.OUTPUT, "output-judgments.tsv")):
            ids = {l.link_id for l in entity_links if l.direction is direction}
            judged = _judged(ctx, name, ids)
            if judged is None:
                return None
            found.append(judged)
        (p_in, n_in), (p_out, n_out) = found
        notes.append(
            f"{label}: I/O precision = input {p_in:.3f} ({n_in} judged) x output {p_out:.3f} ({n_out} judged)"
        )
        return composed_precision(p_in, p_out)

    all_docs = {d.doc_id for d in docs}
    community_docs = {graph.entities[l.source].source_doc for l in c_io | c_dec if l.source in graph.entities}
    community_repos = sorted({d.split("/", 1)[0] for d in community_docs})
    home = {d for d in all_docs if d.split("/", 1)[0] in community_repos}

    columns = {}
    community_prec = []
    for links, name in ((c_io, "community-io-judgments.tsv"), (c_dec, "community-decomposition-judgments.tsv")):
        judged = _judged(ctx, name, {l.link_id for l in links})
        community_prec.append(judged[0] if judged else None)
        if judged:
            notes.append(f"community: {name} has {judged[1]} judged links")
    columns["community"] = rows(sorted(c_io), sorted(c_dec), *community_prec, home or all_docs)

    dec_prec = cv.get("mean_precision")
    notes.append(f"system: decomposition precision is the {cv.get('fold_count')}-fold cross-validation mean")
    io_prec = io_precision(all_docs, "system")
    if home and home != all_docs:
        slice_io = [l for l in io_links if _in_slice(graph, home, l.producer, l.consumer)]
        slice_dec = [l for l in dec_links if _in_slice(graph, home, l.primitive, l.complex)]
        columns["system:" + "+".join(community_repos)] = rows(slice_io, slice_dec, io_prec, dec_prec, home)
    columns["system"] = rows(sorted(io_links), dec_links, io_prec, dec_prec, all_docs)

    table = compare(columns)
    notes.append("percentages are exact rational values rounded half-up to one decimal")
    text = table.render() + "\n" + "".join(f"- {n}\n" for n in notes)
    ctx.write(REPORT, text)
    body = table.to_dict()
    body["notes"] = notes
    ctx.write(REPORT_JSON, json.dumps(body, indent=2, sort_keys=True) + "\n")
    log.info("evaluate: wrote %s", REPORT)


def stage_stats(ctx: Context) -> None:
    """Per-repository main processes and entities, plus corpus totals."""
    report = CorpusReport.from_tsv(ctx.path(EXTRACTION_REPORT, "stats").read_text("utf-8"))
    per_repo: dict[str, list[int]] = {}
    for r in report.extracted:
        cell = per_repo.setdefault(r.doc_id.split("/", 1)[0], [0, 0, 0])
        cell[0] += 1
        cell[1] += r.entity_count
        cell[2] += r.relation_count
    repos = sorted(per_repo)
    totals = [sum(per_repo[r][i] for r in repos) for i in range(3)]
    labels = ("main processes", "entities", "relations")
    rows = [(labels[i], *(per_repo[r][i] for r in repos), totals[i]) for i in range(3)]
    ctx.write(STATS, _tsv(("metric", *repos, "total"), rows))
    log.info("stats: %s main processes, %s entities", totals[0], totals[1])


STAGES: dict[str, Callable[[Context], None]] = {
    "ingest": stage_ingest,
    "extract": stage_extract,
    "link-entities": stage_link_entities,
    "index": stage_index,
    "train": stage_train,
    "link-decomposition": stage_link_decomposition,
    "evaluate": stage_evaluate,
    "stats": stage_stats,
}


def run(command: str, config: PipelineConfig) -> None:
    """Run one stage, or every stage in order for ``all``."""
    ctx = Context(config)
    names = list(STAGES) if command == "all" else [command]
    stop = contextlib.nullcontext()
    if config.stopwords is not None:
        stop = use_stopwords(load_wordlist(config.stopwords))
    with stop:
        for name in names:
            try:
                STAGES[name](ctx)
            except (ConfigError, MissingArtifact, StageError) as exc:
                exc.stage = name
                raise
            except Exception as exc:
                err = StageError(f"{type(exc).__name__}: {exc}")
                err.stage = name
                raise err from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="knowhow", description="Build and link a know-how graph from how-to documents.")
    ap.add_argument("command", choices=[*STAGES, "all"])
    ap.add_argument("-c", "--config", type=Path, default=Path("knowhow.ini"), help="INI file (default: knowhow.ini)")
    ap.add_argument("-o", "--output-dir", type=Path, help="override [pipeline] output_dir")
    ap.add_argument("-w", "--workers", type=int, help="override [pipeline] workers")
    ap.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override any setting")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = list(args.set)
    if args.output_dir is not None:
        overrides.append(f"pipeline.output_dir={args.output_dir.resolve()}")
    if args.workers is not None:
        overrides.append(f"pipeline.workers={args.workers}")
    try:
        config = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"knowhow: configuration error: {exc}", file=sys.stderr)
        return 2
    stage = args.command
    try:
        run(args.command, config)
    except (ConfigError, MissingArtifact, StageError) as exc:
        stage = getattr(exc, "stage", stage)
        code = {ConfigError: 2, MissingArtifact: 3}.get(type(exc), 1)
        print(f"knowhow: stage {stage} failed: {exc}", file=sys.stderr)
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
