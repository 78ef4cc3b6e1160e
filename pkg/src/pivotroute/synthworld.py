"""Deterministic synthetic language worlds and routing datasets.

A world is a registry, a one-hop quality matrix and a path oracle. One-hop
quality is a seeded uniform draw plus a same-branch affinity bonus. The
oracle composes a path's quality as the product of its normalized hop
scores, times 100, with optional per-path multiplicative noise; a single
hop is exactly the matrix entry. Noise is keyed by (world seed, path
string), so labels never depend on query order.

Everything here stands in for measurements this package does not perform;
it is a benchmark generator, not a model of real translation quality.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .langdb import (
    Language,
    LanguageRegistry,
    QualityMatrix,
    is_distant,
    load_quality_matrix,
    load_registry,
    save_quality_matrix,
    save_registry,
)
from .pathspace import Path, PathSet, enumerate_paths


@dataclass(frozen=True)
class WorldConfig:
    num_languages: int = 20
    num_branches: int = 4
    seed: int = 0
    base_quality: tuple[float, float] = (5.0, 35.0)
    branch_affinity: float = 55.0
    size_spread: tuple[int, int] = (10_000, 100_000_000)
    noise_sigma: float = 0.03

    def __post_init__(self):
        lo, hi = self.base_quality
        if not (0.0 <= lo <= hi <= 100.0):
            raise ValueError("base_quality range must satisfy 0 <= lo <= hi <= 100")
        if self.branch_affinity < 0:
            raise ValueError("branch_affinity must be nonnegative")
        if self.num_branches < 2:
            raise ValueError("need at least 2 branches for distant pairs")
        if self.num_languages < self.num_branches:
            raise ValueError("need at least one language per branch")
        if self.size_spread[0] < 0 or self.size_spread[0] > self.size_spread[1]:
            raise ValueError("bad size_spread range")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")


@dataclass
class PathOracle:
    """Deterministic path quality: product composition with seeded noise.

    Multi-hop values use position-aware hop scores, so a supervised
    overlay affects only middle hops of 3-hop paths. A 1-hop path gets no
    noise and equals its (effective) matrix entry exactly.
    """

    matrix: QualityMatrix
    seed: int
    noise_sigma: float
    _memo: dict[Path, float] = field(default_factory=dict, init=False, repr=False)

    def _noise(self, path: Path) -> float:
        digest = hashlib.sha256(f"{self.seed}|{path}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:16], "big"))
        return float(rng.standard_normal())

    def value(self, path: Path) -> float:
        cached = self._memo.get(path)
        if cached is not None:
            return cached
        hops = path.hop_pairs()
        q = 1.0
        for i, (s, t) in enumerate(hops):
            q *= self.matrix.hop_score(s, t, i, path.hops) / 100.0
        bleu = 100.0 * q
        if path.hops >= 2 and self.noise_sigma > 0.0:
            bleu *= 1.0 + self.noise_sigma * self._noise(path)
        bleu = float(min(100.0, max(0.0, bleu)))
        self._memo[path] = bleu
        return bleu


class World(NamedTuple):
    registry: LanguageRegistry
    matrix: QualityMatrix
    oracle: PathOracle


def gen_world(config: WorldConfig) -> World:
    """Seeded world: round-robin branch assignment, uniform quality draws."""
    n = config.num_languages
    width = max(2, len(str(n - 1)))
    rng = np.random.default_rng(config.seed)
    sizes = rng.integers(config.size_spread[0], config.size_spread[1] + 1, size=n)
    languages = tuple(
        Language(
            code=f"l{i:0{width}d}",
            name=f"Lang{i:0{width}d}",
            branch=f"branch{i % config.num_branches}",
            mono_size=int(sizes[i]),
        )
        for i in range(n)
    )
    registry = LanguageRegistry(languages=languages)

    lo, hi = config.base_quality
    scores = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            q = rng.uniform(lo, hi)
            if languages[i].branch == languages[j].branch:
                q += config.branch_affinity
            scores[i, j] = min(100.0, max(0.0, q))
    matrix = QualityMatrix.from_dense(registry, scores)
    return World(registry, matrix, PathOracle(matrix=matrix, seed=config.seed, noise_sigma=config.noise_sigma))


@dataclass
class RoutingDataset:
    """Distant-pair splits plus the labels the routing experiment may see.

    Train pairs carry labels for a sampled fraction of their candidates
    (always including the direct path); dev and test pairs carry labels
    for every candidate. Splits are direction-paired: (x, y) and (y, x)
    always land in the same split.
    """

    train_pairs: list[tuple[str, str]]
    dev_pairs: list[tuple[str, str]]
    test_pairs: list[tuple[str, str]]
    labels: dict[Path, float]
    train_paths: dict[tuple[str, str], list[Path]]
    pivot_counts: dict[str, int]

    def split_of(self, pair: tuple[str, str]) -> str:
        if pair in set(self.train_pairs):
            return "train"
        if pair in set(self.dev_pairs):
            return "dev"
        if pair in set(self.test_pairs):
            return "test"
        raise ValueError(f"pair {pair} is not a distant pair of this dataset")


def distant_pairs(registry: LanguageRegistry) -> list[tuple[str, str]]:
    codes = registry.codes()
    return [(x, y) for x in codes for y in codes if x != y and is_distant(registry, x, y)]


def candidate_paths(registry: LanguageRegistry, x: str, y: str) -> PathSet:
    pool = [c for c in registry.codes() if c not in (x, y)]
    return enumerate_paths(x, y, pool)


def _count_pivots(train_paths: Mapping[tuple[str, str], list[Path]]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for paths in train_paths.values():
        for p in paths:
            for z in p.pivots:
                counts[z] = counts.get(z, 0) + 1
    return dict(sorted(counts.items()))


def build_dataset(
    world: World,
    dev_frac: float = 0.05,
    test_frac: float = 0.10,
    train_path_frac: float = 0.10,
    seed: int = 1,
) -> RoutingDataset:
    """Split distant pairs 85/5/10 and sample train-path labels.

    Split sizes count ordered pairs; each split takes whole unordered
    pairs, so sizes round to the nearest even count. Per train pair,
    `train_path_frac` of its candidates are labeled (nearest-integer, at
    least the direct path, which is always included).
    """
    for name, frac in (("dev_frac", dev_frac), ("test_frac", test_frac), ("train_path_frac", train_path_frac)):
        if not (0.0 < frac < 1.0):
            raise ValueError(f"{name} must lie in (0, 1)")
    registry, _, oracle = world
    ordered = distant_pairs(registry)
    unordered = sorted({tuple(sorted(p)) for p in ordered})
    n_dev = int(dev_frac * len(ordered) / 2 + 0.5)
    n_test = int(test_frac * len(ordered) / 2 + 0.5)
    if n_dev < 1 or n_test < 1 or n_dev + n_test >= len(unordered):
        raise ValueError("too few distant pairs to split")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(unordered))

    def both_directions(idxs) -> list[tuple[str, str]]:
        out = []
        for i in idxs:
            a, b = unordered[i]
            out += [(a, b), (b, a)]
        return out

    dev = both_directions(order[:n_dev])
    test = both_directions(order[n_dev:n_dev + n_test])
    train = both_directions(order[n_dev + n_test:])

    labels: dict[Path, float] = {}
    train_paths: dict[tuple[str, str], list[Path]] = {}
    for x, y in train:
        cands = candidate_paths(registry, x, y).paths
        k = max(1, int(train_path_frac * len(cands) + 0.5))
        rest = [p for p in cands if p.hops > 1]
        picked = rng.choice(len(rest), size=min(k - 1, len(rest)), replace=False)
        chosen = [cands[0]] + [rest[i] for i in sorted(picked)]
        train_paths[(x, y)] = chosen
        for p in chosen:
            labels[p] = oracle.value(p)
    for x, y in dev + test:
        for p in candidate_paths(registry, x, y).paths:
            labels[p] = oracle.value(p)

    return RoutingDataset(
        train_pairs=train,
        dev_pairs=dev,
        test_pairs=test,
        labels=labels,
        train_paths=train_paths,
        pivot_counts=_count_pivots(train_paths),
    )


def apply_supervised_overlay(
    matrix: QualityMatrix,
    pivot_set: Iterable[str],
    boost: Mapping[tuple[str, str], float],
) -> QualityMatrix:
    """New matrix with stronger supervised scores on edges between pivots.

    Boost values are absolute replacement scores and may not fall below
    the existing entry. Downstream scoring keeps honoring the middle-hop
    rule, so boosted edges only count inside 3-hop paths.
    """
    pivots = set(pivot_set)
    registry = matrix.registry
    for code in pivots:
        registry.index_of(code)
    scores = matrix.scores.copy()
    supervised = matrix.supervised.copy()
    for (src, tgt), value in boost.items():
        if src not in pivots or tgt not in pivots:
            raise ValueError(f"boost edge {src}->{tgt} is not between pivot languages")
        i = registry.index_of(src)
        j = registry.index_of(tgt)
        if i == j:
            raise ValueError(f"boost edge {src}->{tgt} is a self pair")
        if not (0.0 <= value <= 100.0):
            raise ValueError(f"boost score {value} outside [0, 100]")
        if value < scores[i, j]:
            raise ValueError(
                f"boost {value} below existing score {scores[i, j]} for {src}->{tgt}"
            )
        scores[i, j] = value
        supervised[i, j] = True
    return QualityMatrix.from_dense(registry, scores, supervised=supervised, base_scores=matrix.base_scores)


def uniform_boost(matrix: QualityMatrix, pivot_set: Iterable[str], delta: float) -> dict[tuple[str, str], float]:
    """Boost map adding `delta` points to every directed edge between pivots."""
    pivots = sorted(set(pivot_set))
    return {
        (a, b): min(100.0, matrix.get(a, b) + delta)
        for a in pivots
        for b in pivots
        if a != b
    }


def save_world(
    world: World,
    dataset: RoutingDataset,
    out_dir: str | FsPath,
    config: WorldConfig,
    dataset_seed: int,
) -> None:
    """Write languages.tsv, matrix.tsv, labels.tsv and manifest.json."""
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_registry(world.registry, out / "languages.tsv")
    save_quality_matrix(world.matrix, out / "matrix.tsv")
    with open(out / "labels.tsv", "w", encoding="utf-8", newline="") as fh:
        for path in sorted(dataset.labels, key=str):
            fh.write(f"{path}\t{dataset.labels[path]!r}\n")
    manifest = {
        "world": {
            "num_languages": config.num_languages,
            "num_branches": config.num_branches,
            "seed": config.seed,
            "base_quality": list(config.base_quality),
            "branch_affinity": config.branch_affinity,
            "size_spread": list(config.size_spread),
            "noise_sigma": config.noise_sigma,
        },
        "dataset_seed": dataset_seed,
        "splits": {
            "train": [list(p) for p in dataset.train_pairs],
            "dev": [list(p) for p in dataset.dev_pairs],
            "test": [list(p) for p in dataset.test_pairs],
        },
        "train_paths": {f"{x}|{y}": [str(p) for p in paths] for (x, y), paths in sorted(dataset.train_paths.items())},
        "pivot_counts": dataset.pivot_counts,
    }
    with open(out / "manifest.json", "w", encoding="utf-8", newline="") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_world_dir(data_dir: str | FsPath) -> tuple[LanguageRegistry, QualityMatrix, RoutingDataset, dict]:
    """Reload a world directory written by save_world (or supplied by hand)."""
    data = FsPath(data_dir)
    registry = load_registry(data / "languages.tsv")
    matrix = load_quality_matrix(data / "matrix.tsv", registry)
    with open(data / "manifest.json", "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    labels: dict[Path, float] = {}
    with open(data / "labels.tsv", "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            text, value = line.split("\t")
            labels[Path.from_text(text)] = float(value)
    splits = manifest["splits"]
    train_paths = {
        tuple(key.split("|")): [Path.from_text(t) for t in texts]
        for key, texts in manifest["train_paths"].items()
    }
    dataset = RoutingDataset(
        train_pairs=[tuple(p) for p in splits["train"]],
        dev_pairs=[tuple(p) for p in splits["dev"]],
        test_pairs=[tuple(p) for p in splits["test"]],
        labels=labels,
        train_paths=train_paths,
        pivot_counts={k: int(v) for k, v in manifest["pivot_counts"].items()},
    )
    return registry, matrix, dataset, manifest
