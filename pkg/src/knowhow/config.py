"""Pipeline configuration: one INI file, environment overrides, flag overrides."""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .core.vocab import DEFAULT_BASE
from .decomposition.forest import Hyperparameters

ENV_ENDPOINT = "KNOWHOW_LOOKUP_ENDPOINT"
ENV_WORKERS = "KNOWHOW_WORKERS"
SEEDS = ("forest", "cv", "sample")


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    corpus_dir: Path
    output_dir: Path
    seeds: dict[str, int]
    base: str = DEFAULT_BASE
    workers: int = 1
    max_depth: int = 4
    catalog: Optional[Path] = None
    endpoint: Optional[str] = None
    threshold: float = 0.8
    max_hits: int = 10
    lookup_timeout: float = 10.0
    lookup_concurrency: int = 4
    creation_verbs: Optional[Path] = None
    stopwords: Optional[Path] = None
    k: int = 50
    labeled_pairs: Optional[Path] = None
    forest: Hyperparameters = field(default_factory=Hyperparameters)
    forest_threshold: float = 0.5
    cv_folds: int = 10
    judgments_dir: Optional[Path] = None
    source: Optional[Path] = None


def _path(cp, section, key, root: Path, required=False, must_exist=True) -> Optional[Path]:
    raw = cp.get(section, key, fallback="").strip()
    if not raw:
        if required:
            raise ConfigError(f"[{section}] {key} is required")
        return None
    p = Path(raw)
    p = p if p.is_absolute() else root / p
    if must_exist and not p.exists():
        raise ConfigError(f"[{section}] {key}: {p} does not exist")
    return p


def _num(cp, section, key, kind, default, minimum=None):
    raw = cp.get(section, key, fallback="").strip()
    if not raw:
        return default
    try:
        value = kind(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: {raw!r} is not a valid {kind.__name__}") from None
    if minimum is not None and value < minimum:
        raise ConfigError(f"[{section}] {key} must be at least {minimum}")
    return value


def load_config(
    path: Path,
    overrides: Sequence[str] = (),
    env: Optional[Mapping[str, str]] = None,
) -> PipelineConfig:
    """Read ``path``; relative paths resolve against its directory.

    ``overrides`` are ``section.key=value`` strings applied after the file;
    the environment (``KNOWHOW_LOOKUP_ENDPOINT``, ``KNOWHOW_WORKERS``) wins over both.
    """
    path = Path(path)
    env = os.environ if env is None else env
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, option = key.partition(".")
        if not sep or not dot:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, option, value)
    if env.get(ENV_ENDPOINT):
        cp.setdefault("linking", {})
        cp.set("linking", "endpoint", env[ENV_ENDPOINT])
    if env.get(ENV_WORKERS):
        cp.setdefault("pipeline", {})
        cp.set("pipeline", "workers", env[ENV_WORKERS])

    root = path.resolve().parent
    seeds = {}
    for name in SEEDS:
        raw = cp.get("seeds", name, fallback="").strip()
        if not raw:
            raise ConfigError(f"[seeds] {name} must be set explicitly")
        seeds[name] = _num(cp, "seeds", name, int, None)

    catalog = _path(cp, "linking", "catalog", root)
    endpoint = cp.get("linking", "endpoint", fallback="").strip() or None
    if catalog is None and endpoint is None:
        raise ConfigError("[linking] needs a catalog file or a lookup endpoint")
    threshold = _num(cp, "linking", "threshold", float, 0.8)
    forest_threshold = _num(cp, "decomposition", "threshold", float, 0.5)
    for name, value in (("linking.threshold", threshold), ("decomposition.threshold", forest_threshold)):
        if not 0.0 <= value <= 1.0:
            raise ConfigError(f"{name} must lie in [0, 1]")

    return PipelineConfig(
        corpus_dir=_path(cp, "pipeline", "corpus_dir", root, required=True),
        output_dir=_path(cp, "pipeline", "output_dir", root, required=True, must_exist=False),
        seeds=seeds,
        base=cp.get("pipeline", "base", fallback="").strip() or DEFAULT_BASE,
        workers=_num(cp, "pipeline", "workers", int, 1, minimum=1),
        max_depth=_num(cp, "pipeline", "max_depth", int, 4, minimum=1),
        catalog=catalog,
        endpoint=endpoint,
        threshold=threshold,
        max_hits=_num(cp, "linking", "max_hits", int, 10, minimum=1),
        lookup_timeout=_num(cp, "linking", "timeout", float, 10.0),
        lookup_concurrency=_num(cp, "linking", "max_concurrency", int, 4, minimum=1),
        creation_verbs=_path(cp, "linking", "creation_verbs", root),
        stopwords=_path(cp, "text", "stopwords", root),
        k=_num(cp, "decomposition", "k", int, 50, minimum=1),
        labeled_pairs=_path(cp, "decomposition", "labeled_pairs", root),
        forest=Hyperparameters(
            n_trees=_num(cp, "decomposition", "trees", int, 100, minimum=1),
            max_depth=_num(cp, "decomposition", "max_depth", int, None, minimum=1),
            min_leaf=_num(cp, "decomposition", "min_leaf", int, 1, minimum=1),
            max_features=_num(cp, "decomposition", "max_features", int, None, minimum=1),
        ),
        forest_threshold=forest_threshold,
        cv_folds=_num(cp, "decomposition", "cv_folds", int, 10, minimum=2),
        judgments_dir=_path(cp, "evaluation", "judgments_dir", root),
        source=path,
    )
