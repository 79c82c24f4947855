"""Random forest classifier (bagged Gini trees) with seeded, reproducible training."""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .features import DEFAULT_SCHEMA, FeatureSchema, SchemaMismatch, check_vector

MODEL_FORMAT = "knowhow-forest"
MODEL_VERSION = 1
LEAF = -1


class SingleClassData(ValueError):
    pass


class TooFewExamples(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class Hyperparameters:
    n_trees: int = 100
    max_depth: Optional[int] = None
    min_leaf: int = 1
    max_features: Optional[int] = None  # None: ceil(sqrt(n_features))

    def features_per_split(self, n_features: int) -> int:
        m = self.max_features or math.ceil(math.sqrt(n_features))
        return max(1, min(m, n_features))


@dataclass
class Tree:
    """Flat node arrays; ``feature[i] == LEAF`` marks a leaf holding ``counts[i]``."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    counts: list[list[int]] = field(default_factory=list)

    def _node(self) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.counts.append([0, 0])
        return len(self.feature) - 1

    def vote(self, x: Sequence[float]) -> int:
        i = 0
        while self.feature[i] != LEAF:
            i = self.left[i] if x[self.feature[i]] <= self.threshold[i] else self.right[i]
        neg, pos = self.counts[i]
        return int(pos > neg)

    def votes(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        feat = np.asarray(self.feature)
        thr = np.asarray(self.threshold)
        left, right = np.asarray(self.left), np.asarray(self.right)
        active = feat[node] != LEAF
        while active.any():
            rows = np.nonzero(active)[0]
            n = node[rows]
            go_left = X[rows, feat[n]] <= thr[n]
            node[rows] = np.where(go_left, left[n], right[n])
            active = feat[node] != LEAF
        counts = np.asarray(self.counts)
        return (counts[node, 1] > counts[node, 0]).astype(np.int64)


def _best_split(X: np.ndarray, y: np.ndarray, feats: np.ndarray, min_leaf: int):
    n = len(y)
    best = None  # (impurity, feature, threshold)
    for f in feats:
        v = X[:, f]
        order = np.argsort(v, kind="stable")
        vs, ys = v[order], y[order]
        nl = np.arange(1, n)
        nr = n - nl
        pl = np.cumsum(ys)[:-1]
        pr = ys.sum() - pl
        gl = 2.0 * (pl / nl) * (1.0 - pl / nl)
        gr = 2.0 * (pr / nr) * (1.0 - pr / nr)
        weighted = (nl * gl + nr * gr) / n
        valid = (vs[1:] > vs[:-1]) & (nl >= min_leaf) & (nr >= min_leaf)
        if not valid.any():
            continue
        j = int(np.argmin(np.where(valid, weighted, np.inf)))
        if best is None or weighted[j] < best[0]:
            thr = (vs[j] + vs[j + 1]) / 2.0
            if thr >= vs[j + 1]:  # adjacent floats
                thr = vs[j]
            best = (float(weighted[j]), int(f), float(thr))
    return best


def grow_tree(X: np.ndarray, y: np.ndarray, hp: Hyperparameters, rng: np.random.Generator) -> Tree:
    tree = Tree()
    m = hp.features_per_split(X.shape[1])
    stack = [(tree._node(), np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        ys = y[idx]
        pos = int(ys.sum())
        tree.counts[node] = [len(idx) - pos, pos]
        if pos in (0, len(idx)) or len(idx) < 2 * hp.min_leaf:
            continue
        if hp.max_depth is not None and depth >= hp.max_depth:
            continue
        feats = rng.choice(X.shape[1], size=m, replace=False)
        split = _best_split(X[idx], ys, feats, hp.min_leaf)
        if split is None:
            continue
        _, f, thr = split
        mask = X[idx, f] <= thr
        tree.feature[node], tree.threshold[node] = f, thr
        tree.left[node], tree.right[node] = tree._node(), tree._node()
        # right pushed first so the left subtree is numbered first
        stack.append((tree.right[node], idx[~mask], depth + 1))
        stack.append((tree.left[node], idx[mask], depth + 1))
    return tree


@dataclass
class ForestModel:
    trees: list[Tree]
    feature_names: tuple[str, ...]
    schema_tag: str
    seed: int
    hyperparameters: Hyperparameters
    threshold: float = 0.5

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def score(self, fv: Sequence[float]) -> float:
        check_vector(fv, self.n_features)
        if not self.trees:
            raise ConfigurationError("model has no trees")
        return sum(t.vote(fv) for t in self.trees) / len(self.trees)

    def predict(self, fv: Sequence[float]) -> tuple[bool, float]:
        s = self.score(fv)
        return s >= self.threshold, s

    def scores(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise SchemaMismatch(f"expected rows of {self.n_features} features")
        if not np.isfinite(X).all():
            raise SchemaMismatch("feature matrix contains non-finite values")
        if not self.trees:
            raise ConfigurationError("model has no trees")
        total = np.zeros(len(X), dtype=np.int64)
        for t in self.trees:
            total += t.votes(X)
        return total / len(self.trees)

    def to_json(self) -> str:
        body = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "schema": {"tag": self.schema_tag, "features": list(self.feature_names)},
            "seed": self.seed,
            "hyperparameters": asdict(self.hyperparameters),
            "threshold": self.threshold,
            "trees": [asdict(t) for t in self.trees],
        }
        return json.dumps(body, sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ForestModel":
        body = json.loads(text)
        if body.get("format") != MODEL_FORMAT or body.get("version") != MODEL_VERSION:
            raise ValueError("not a knowhow forest model")
        names = tuple(body["schema"]["features"])
        trees = [Tree(**t) for t in body["trees"]]
        for t in trees:
            if any(f != LEAF and not 0 <= f < len(names) for f in t.feature):
                raise ValueError("tree references a feature outside the schema")
        return cls(
            trees=trees,
            feature_names=names,
            schema_tag=body["schema"]["tag"],
            seed=body["seed"],
            hyperparameters=Hyperparameters(**body["hyperparameters"]),
            threshold=body["threshold"],
        )


def _as_arrays(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray([int(bool(v)) for v in y], dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be a 2-D array with one row per label")
    if not np.isfinite(X).all():
        raise ValueError("feature matrix contains non-finite values")
    return X, y


def train_forest(
    X,
    y,
    hyperparams: Hyperparameters = Hyperparameters(),
    seed: int = 0,
    schema: FeatureSchema = DEFAULT_SCHEMA,
    threshold: float = 0.5,
    workers: int = 1,
) -> ForestModel:
    """Bootstrap one sample per tree; each tree draws from its own seed stream,
    so the model depends only on (data, hyperparameters, seed), whatever ``workers`` is."""
    X, y = _as_arrays(X, y)
    if len(y) == 0:
        raise ValueError("no training data")
    if len(set(y.tolist())) < 2:
        raise SingleClassData("training data must contain both classes")
    if X.shape[1] != len(schema):
        raise SchemaMismatch(f"schema {schema.tag} has {len(schema)} features, data has {X.shape[1]}")
    if hyperparams.n_trees < 1:
        raise ConfigurationError("n_trees must be at least 1")

    def grow(t: int) -> Tree:
        rng = np.random.default_rng([seed, t])
        sample = rng.integers(0, len(y), size=len(y))
        return grow_tree(X[sample], y[sample], hyperparams, rng)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(grow, range(hyperparams.n_trees)))
    else:
        trees = [grow(t) for t in range(hyperparams.n_trees)]
    return ForestModel(trees, schema.names, schema.tag, seed, hyperparams, threshold)


def predict(model: ForestModel, fv: Sequence[float]) -> tuple[bool, float]:
    return model.predict(fv)


@dataclass(frozen=True)
class FoldMetrics:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def precision(self) -> Optional[float]:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else None

    @property
    def recall(self) -> Optional[float]:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else None

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / (self.tp + self.fp + self.tn + self.fn)


def _mean(values) -> Optional[float]:
    values = [v for v in values if v is not None]
    return sum(values) / len(values) if values else None


@dataclass
class CVResult:
    folds: list[FoldMetrics]
    test_indices: list[list[int]]

    @property
    def mean_precision(self) -> Optional[float]:
        """Mean over folds that predicted at least one positive."""
        return _mean(f.precision for f in self.folds)

    @property
    def mean_recall(self) -> Optional[float]:
        return _mean(f.recall for f in self.folds)

    @property
    def mean_accuracy(self) -> float:
        return _mean(f.accuracy for f in self.folds)

    def to_dict(self) -> dict:
        return {
            "folds": [
                {**asdict(f), "precision": f.precision, "recall": f.recall, "accuracy": f.accuracy}
                for f in self.folds
            ],
            "mean_precision": self.mean_precision,
            "mean_recall": self.mean_recall,
            "mean_accuracy": self.mean_accuracy,
        }


def kfold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    if folds < 2:
        raise TooFewExamples("need at least 2 folds")
    if n < folds:
        raise TooFewExamples(f"{n} examples cannot fill {folds} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def cross_validate(
    X,
    y,
    folds: int = 10,
    seed: int = 0,
    hyperparams: Hyperparameters = Hyperparameters(),
    schema: FeatureSchema = DEFAULT_SCHEMA,
    threshold: float = 0.5,
) -> CVResult:
    """Seeded k-fold CV; fold i trains with seed ``seed + i + 1`` on the other folds."""
    X, y = _as_arrays(X, y)
    parts = kfold_indices(len(y), folds, seed)
    results, tests = [], []
    for i, test in enumerate(parts):
        train = np.concatenate([p for j, p in enumerate(parts) if j != i])
        model = train_forest(X[train], y[train], hyperparams, seed + i + 1, schema, threshold)
        pred = model.scores(X[test]) >= threshold
        truth = y[test].astype(bool)
        results.append(
            FoldMetrics(
                tp=int((pred & truth).sum()),
                fp=int((pred & ~truth).sum()),
                tn=int((~pred & ~truth).sum()),
                fn=int((~pred & truth).sum()),
            )
        )
        tests.append(sorted(test.tolist()))
    return CVResult(results, tests)
