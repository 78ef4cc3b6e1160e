"""Routing strategies: direct, random, prior pivoting, hop average, learned, oracle.

All routers are deterministic given their inputs (the random router given
its seed) and share one tie order: higher score, then fewer hops, then
lexicographic path string.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .featurizer import featurize
from .langdb import LanguageRegistry, QualityMatrix
from .neuralnet import LtrModel, predict_many
from .pathspace import Path, PathSet, rank_paths

METHODS = ("DT", "RR", "HA", "PP", "LTR", "GT")


@dataclass
class RoutingResult:
    source: str
    target: str
    method: str
    chosen: Path
    predicted_score: Optional[float]
    actual_score: Optional[float]

    def report_row(self) -> str:
        pred = "-" if self.predicted_score is None else f"{self.predicted_score:.4f}"
        actual = "-" if self.actual_score is None else f"{self.actual_score:.4f}"
        return f"{self.source}\t{self.target}\t{self.method}\t{self.chosen}\t{pred}\t{actual}"


def route_direct(x: str, y: str) -> Path:
    if x == y:
        raise ValueError(f"source equals target {x!r}")
    return Path((x, y))


def route_random(candidates: PathSet, seed: int) -> Path:
    """Uniform choice among candidates, deterministic per seed."""
    if not candidates.paths:
        raise ValueError("empty candidate set")
    rng = np.random.default_rng(seed)
    return candidates.paths[int(rng.integers(len(candidates.paths)))]


def build_pivot_map(registry: LanguageRegistry) -> dict[str, str]:
    """Per branch, the language with the most monolingual data (ties: smaller code)."""
    pivot: dict[str, str] = {}
    for branch in sorted(registry.branch_set):
        members = registry.branch_members(branch)
        if not members:
            raise ValueError(f"empty branch {branch!r}")
        best = min(members, key=lambda lang: (-lang.mono_size, lang.code))
        pivot[branch] = best.code
    return pivot


def route_prior_pivot(x: str, y: str, pivot_map: Mapping[str, str], registry: LanguageRegistry) -> Path:
    """x -> pivot(branch x) -> pivot(branch y) -> y, collapsing repeats."""
    bx = registry.get(x).branch
    by = registry.get(y).branch
    if bx not in pivot_map or by not in pivot_map:
        raise ValueError(f"pivot map missing branch {bx!r} or {by!r}")
    langs: list[str] = []
    for code in (x, pivot_map[bx], pivot_map[by], y):
        if not langs or langs[-1] != code:
            langs.append(code)
    return Path(tuple(langs))


def score_hop_average(candidates: PathSet, matrix: QualityMatrix) -> np.ndarray:
    """Predicted score per candidate: arithmetic mean of its hop scores."""
    scores = np.empty(len(candidates.paths))
    for k, path in enumerate(candidates.paths):
        hops = path.hop_pairs()
        scores[k] = sum(
            matrix.hop_score(s, t, i, path.hops) for i, (s, t) in enumerate(hops)
        ) / len(hops)
    return scores


def route_hop_average(candidates: PathSet, matrix: QualityMatrix) -> tuple[Path, float]:
    if not candidates.paths:
        raise ValueError("empty candidate set")
    scores = score_hop_average(candidates, matrix)
    best = rank_paths(candidates.paths, list(scores))[0]
    return candidates.paths[best], float(scores[best])


def ltr_eligible(
    candidates: PathSet, pivot_counts: Mapping[str, int], pivot_min_count: int = 10
) -> np.ndarray:
    """Mask of paths whose every pivot is frequent enough in training data.

    The direct path has no pivots, so it always survives.
    """
    return np.array(
        [all(pivot_counts.get(z, 0) >= pivot_min_count for z in p.pivots) for p in candidates.paths],
        dtype=bool,
    )


def score_ltr(candidates: PathSet, matrix: QualityMatrix, model: LtrModel) -> np.ndarray:
    """Model-predicted quality (BLEU points scale) per candidate."""
    features = [featurize(p, matrix, model.embeddings) for p in candidates.paths]
    return predict_many(model, features) * 100.0


def route_ltr(
    candidates: PathSet,
    matrix: QualityMatrix,
    model: LtrModel,
    pivot_min_count: int = 10,
    pivot_counts: Optional[Mapping[str, int]] = None,
) -> tuple[Path, float]:
    """Highest-predicted path among candidates without rare pivots.

    The returned score is clamped to the valid quality range for display;
    ranking uses the raw prediction.
    """
    if not candidates.paths:
        raise ValueError("empty candidate set")
    eligible = ltr_eligible(candidates, pivot_counts or {}, pivot_min_count if pivot_counts else 0)
    idxs = np.flatnonzero(eligible)
    sub = [candidates.paths[i] for i in idxs]
    scores = score_ltr(PathSet(candidates.source, candidates.target, sub), matrix, model)
    sub_best = rank_paths(sub, list(scores))[0]
    return sub[sub_best], float(np.clip(scores[sub_best], 0.0, 100.0))


def route_ground_truth(candidates: PathSet, labels: Mapping[Path, float]) -> tuple[Path, float]:
    """Best path by actual measured quality."""
    if not candidates.paths:
        raise ValueError("empty candidate set")
    try:
        actual = [labels[p] for p in candidates.paths]
    except KeyError as exc:
        raise ValueError(f"missing label for path {exc.args[0]}") from None
    best = rank_paths(candidates.paths, actual)[0]
    return candidates.paths[best], float(actual[best])
