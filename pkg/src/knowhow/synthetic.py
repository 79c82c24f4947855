"""Seeded synthetic how-to corpora with known link truth.

Used for the bundled sample corpus and for randomized fixtures. Every task is
"<verb> a <object>"; steps may restate another document's task (a true
decomposition link), mention another object under an unrelated verb (a
plausible but wrong candidate), or be generic filler.

    python -m knowhow.synthetic OUT_DIR [--docs 50] [--seed 7]
"""
from __future__ import annotations

import argparse
import random
from dataclasses import dataclass, field
from pathlib import Path

from .ingestion.canonical import serialize_canonical
from .ingestion.document import HowToDocument, MethodBlock, Requirement, StepBlock, normalize_document
from .linking.catalog import CatalogEntity

DBR = "http://dbpedia.org/resource/"
DBO = "http://dbpedia.org/ontology/"

# object, category, catalog type, creation verb
OBJECTS = (
    ("pancake", "Food", "Food", "make"),
    ("bread", "Food", "Food", "bake"),
    ("pizza", "Food", "Food", "bake"),
    ("lemonade", "Food", "Beverage", "make"),
    ("cake", "Food", "Food", "bake"),
    ("soup", "Food", "Food", "cook"),
    ("coffee", "Food", "Beverage", "brew"),
    ("smoothie", "Food", "Beverage", "make"),
    ("resume", "Careers", "WrittenWork", "write"),
    ("cover letter", "Careers", "WrittenWork", "write"),
    ("business card", "Careers", "Document", "make"),
    ("budget", "Finance", "Document", "prepare"),
    ("birdhouse", "Crafts", "Building", "build"),
    ("kite", "Crafts", "Toy", "make"),
    ("scarf", "Crafts", "Clothing", "knit"),
    ("candle", "Crafts", "Product", "make"),
    ("quilt", "Crafts", "Textile", "sew"),
    ("paper airplane", "Crafts", "Toy", "make"),
    ("greeting card", "Crafts", "Product", "make"),
    ("portrait", "Arts", "Artwork", "paint"),
    ("poem", "Arts", "WrittenWork", "write"),
    ("soap", "Home", "Product", "make"),
    ("bookshelf", "Home", "Furniture", "build"),
    ("garden bed", "Home", "Structure", "build"),
    ("website", "Computers", "Website", "build"),
)
MATERIALS = ("water", "flour", "sugar", "scissors", "glue")
NON_CREATION = ("store", "decorate", "sell", "clean", "wrap", "improve")
DISTRACTOR_VERBS = ("check", "measure", "label", "inspect", "move", "photograph")
ADJECTIVES = ("", "simple ", "quick ")
GENERIC_STEPS = (
    "gather the materials",
    "wash your hands",
    "let it dry completely",
    "clean up the workspace",
    "ask a friend for help",
    "take a short break",
    "read the instructions twice",
)
DETAILS = (
    "Take your time with this part.",
    "Work on a clean, flat surface.",
    "This usually takes about ten minutes.",
    "Do not rush; mistakes here are hard to undo.",
)


@dataclass(frozen=True)
class Task:
    verb: str
    obj: str
    adjective: str = ""

    @property
    def action(self) -> str:
        return f"{self.verb} a {self.adjective}{self.obj}"

    @property
    def title(self) -> str:
        return "How to " + " ".join(w.capitalize() if w != "a" else w for w in self.action.split())

    @property
    def slug(self) -> str:
        return self.title[len("How to "):].replace(" ", "-")


@dataclass
class SyntheticCorpus:
    docs: list[HowToDocument]
    catalog: list[CatalogEntity]
    # (complex doc id, step doc id, step selector path) for every true decomposition link
    decomposition_truth: set[tuple[str, str, str]] = field(default_factory=set)
    # community link id -> correct?
    community_truth: dict[str, bool] = field(default_factory=dict)
    # object label -> intended catalog URI
    catalog_truth: dict[str, str] = field(default_factory=dict)


def _catalog_uri(label: str) -> str:
    return DBR + label[0].upper() + label[1:].replace(" ", "_")


def task_pool() -> list[Task]:
    pool = []
    for adj in ADJECTIVES:
        for v in range(1 + len(NON_CREATION)):
            for obj, _, _, cverb in OBJECTS:
                pool.append(Task(cverb if v == 0 else NON_CREATION[v - 1], obj, adj))
    return pool


def make_catalog() -> tuple[list[CatalogEntity], dict[str, str]]:
    entries, truth = [], {}
    for obj, _, ctype, _ in OBJECTS:
        uri = _catalog_uri(obj)
        entries.append(CatalogEntity(uri, obj.title(), (DBO + ctype,)))
        truth[obj] = uri
    for m in MATERIALS:
        uri = _catalog_uri(m)
        entries.append(CatalogEntity(uri, m.title(), (DBO + "Material",)))
        truth[m] = uri
    return entries, truth


def make_corpus(n_docs: int = 50, seed: int = 7) -> SyntheticCorpus:
    """``n_docs`` documents (at most ``len(task_pool())``) with recorded truth."""
    from .core.model import mint_uri  # local: keeps this module light to import

    pool = task_pool()
    if n_docs > len(pool):
        raise ValueError(f"at most {len(pool)} synthetic documents are available")
    rng = random.Random(seed)
    tasks = pool[:n_docs]
    category = {o: c for o, c, _, _ in OBJECTS}
    repo = {t: ("wikihow" if rng.random() < 0.6 else "snapguide") for t in tasks}
    doc_id = {t: f"{repo[t]}/{t.slug}" for t in tasks}
    by_object: dict[str, list[Task]] = {}
    for t in tasks:
        by_object.setdefault(t.obj, []).append(t)

    catalog, catalog_truth = make_catalog()
    corpus = SyntheticCorpus([], catalog, catalog_truth=catalog_truth)
    pending_refs = []  # (doc id, path, target doc id, correct, role)

    for t in tasks:
        others = [o for o in tasks if o.obj != t.obj]
        steps: list[tuple[StepBlock, str, object]] = []  # block, kind, payload
        steps.append((StepBlock("gather the materials", rng.choice(DETAILS)), "generic", None))
        for _ in range(rng.choice((0, 1, 1, 2))):
            target = rng.choice(others)
            tail = rng.choice(("", "", " first", " for later"))
            steps.append((StepBlock(target.action + tail), "reference", target))
        for _ in range(rng.choice((1, 1, 2))):
            target = rng.choice(others)
            verb = rng.choice(DISTRACTOR_VERBS)
            steps.append((StepBlock(f"{verb} the {target.obj}"), "distractor", target))
        own = StepBlock(f"finish the {t.adjective}{t.obj}", rng.choice(DETAILS))
        if rng.random() < 0.3:
            own.substeps = [StepBlock(s) for s in rng.sample(GENERIC_STEPS, 2)]
        steps.append((own, "own", None))
        for s in rng.sample(GENERIC_STEPS, rng.choice((1, 2))):
            steps.append((StepBlock(s, rng.choice((None,) + DETAILS)), "generic", None))
        rng.shuffle(steps)

        if len(steps) >= 4 and rng.random() < 0.35:
            cut = len(steps) // 2
            groups = [steps[:cut], steps[cut:]]
            names = [None, f"{t.action} with a helper"]
        else:
            groups, names = [steps], [None]
        methods = [
            MethodBlock([s for s, _, _ in g], name=n, ordered=rng.random() < 0.8)
            for g, n in zip(groups, names)
        ]

        req_objects = rng.sample([o for o in category if o != t.obj and category[o] == category[t.obj]]
                                 or [o for o in category if o != t.obj], 1)
        req_objects += rng.sample(MATERIALS, rng.choice((1, 2)))
        requirements = [Requirement(o) for o in req_objects]

        doc = normalize_document(
            HowToDocument(
                doc_id=doc_id[t],
                title=t.title,
                methods=methods,
                categories=[category[t.obj]],
                requirements=requirements,
            )
        )
        corpus.docs.append(doc)

        for g in groups:
            for block, kind, target in g:
                if kind == "reference":
                    corpus.decomposition_truth.add((doc_id[target], doc_id[t], block.selector.path))
                if repo[t] != "wikihow" or target is None:
                    continue
                if kind == "reference" and rng.random() < 0.7:
                    pending_refs.append((block, doc_id[target], True))
                elif kind == "distractor" and rng.random() < 0.4:
                    # community links often point at a same-object page that does not help
                    pending_refs.append((block, doc_id[target], False))
        if repo[t] == "wikihow":
            for req in doc.requirements:
                producers = [p for p in by_object.get(req.text, []) if p.verb not in NON_CREATION]
                if producers and rng.random() < 0.6:
                    pending_refs.append((req, doc_id[producers[0]], True))
                elif req.text in by_object and rng.random() < 0.3:
                    wrong = [p for p in by_object[req.text] if p.verb in NON_CREATION]
                    if wrong:
                        pending_refs.append((req, doc_id[wrong[0]], False))

    for block, target_doc, correct in pending_refs:
        block.refs.append(target_doc)
        role = "IO" if isinstance(block, Requirement) else "Decomposition"
        src = mint_uri(block.selector.source_doc, block.selector.path)
        corpus.community_truth[f"C|{role}|{src}|{mint_uri(target_doc, 'task')}"] = correct
    return corpus


def write_sample_corpus(out: Path, n_docs: int = 50, seed: int = 7, judged: int = 40) -> SyntheticCorpus:
    """Write docs, catalog, labeled pairs, judgments and a config under ``out``."""
    from .core.model import mint_uri
    from .decomposition import build_index, retrieve_candidates, write_labeled_pairs, LabeledPair
    from .evaluation import GoldJudgments, extract_community_links, sample_links, write_judgments
    from .extractor import extract_corpus
    from .linking import Direction, OfflineCatalog, detect_output, link_corpus

    corpus = make_corpus(n_docs, seed)
    out = Path(out)
    (out / "docs").mkdir(parents=True, exist_ok=True)
    for doc in corpus.docs:
        (out / "docs" / (doc.doc_id.replace("/", "__") + ".howto.json")).write_bytes(serialize_canonical(doc))
    catalog = OfflineCatalog(corpus.catalog)
    (out / "catalog.tsv").write_text(catalog.to_tsv(), "utf-8")

    graph, _ = extract_corpus(corpus.docs)
    index = build_index(graph)
    truth = {
        (mint_uri(c, "task"), mint_uri(d, p)) for c, d, p in corpus.decomposition_truth
    }
    pairs = []
    for task_uri in sorted(u for u in graph.entities if u.endswith("#task")):
        for cand in retrieve_candidates(index, graph.entities[task_uri], k=10):
            pairs.append(LabeledPair(cand, (cand.complex, cand.primitive) in truth))
    (out / "labeled-pairs.tsv").write_text(write_labeled_pairs(pairs), "utf-8")

    judgments = out / "judgments"
    judgments.mkdir(exist_ok=True)
    links = link_corpus(graph, catalog)
    for direction, name in ((Direction.INPUT, "input"), (Direction.OUTPUT, "output")):
        chosen = {l.link_id: l for l in links if l.direction is direction}
        ids = sample_links(chosen, min(judged, len(chosen)), seed)
        verdicts = {}
        for i in ids:
            label = graph.entities[chosen[i].mention].label
            obj = label if direction is Direction.INPUT else detect_output(label) or ""
            for adj in ADJECTIVES[1:]:
                obj = obj[len(adj):] if obj.startswith(adj) else obj
            verdicts[i] = corpus.catalog_truth.get(obj.lower()) == chosen[i].catalog_uri
        (judgments / f"{name}-judgments.tsv").write_text(
            write_judgments(GoldJudgments(verdicts, seed, len(ids))), "utf-8"
        )
    io_refs, dec_refs = extract_community_links(corpus.docs)
    for refs, name in ((io_refs, "community-io"), (dec_refs, "community-decomposition")):
        ids = sample_links([l.link_id for l in refs], min(judged, len(refs)), seed)
        verdicts = {i: corpus.community_truth[i] for i in ids}
        (judgments / f"{name}-judgments.tsv").write_text(
            write_judgments(GoldJudgments(verdicts, seed, len(ids))), "utf-8"
        )

    (out / "knowhow.ini").write_text(SAMPLE_CONFIG, "utf-8")
    return corpus


SAMPLE_CONFIG = """\
[pipeline]
corpus_dir = docs
output_dir = out
workers = 2

[linking]
catalog = catalog.tsv
threshold = 0.8
max_hits = 10

[decomposition]
k = 50
labeled_pairs = labeled-pairs.tsv
trees = 60
min_leaf = 1
cv_folds = 10

[seeds]
forest = 13
cv = 29
sample = 7

[evaluation]
judgments_dir = judgments
"""


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=Path)
    ap.add_argument("--docs", type=int, default=50)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)
    corpus = write_sample_corpus(args.out, args.docs, args.seed)
    print(f"wrote {len(corpus.docs)} documents and {len(corpus.catalog)} catalog entries to {args.out}")


if __name__ == "__main__":
    main()
