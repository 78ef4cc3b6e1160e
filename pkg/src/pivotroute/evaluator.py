"""Routing metrics and report files.

Top-k accuracy asks whether the true best path (under the shared tie
order) appears among a method's k highest-ranked candidates. Average
selected quality is the plain mean of achieved scores over pairs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Mapping, Optional, Sequence

from .pathspace import Path, rank_paths
from .routers import RoutingResult


@dataclass
class MethodReport:
    method: str
    avg_bleu: float
    top1: float
    top5: float
    rows: list[RoutingResult] = field(default_factory=list)

    def __post_init__(self):
        if not (0.0 <= self.top1 <= self.top5 <= 1.0):
            raise ValueError(f"top-k fractions out of order: top1={self.top1} top5={self.top5}")


@dataclass
class CdfCurve:
    points: list[tuple[float, float]]


def true_best(paths: Sequence[Path], labels: Mapping[Path, float]) -> Path:
    actual = [labels[p] for p in paths]
    return paths[rank_paths(paths, actual)[0]]


def topk_accuracy(
    predictions: Sequence[Sequence[Path]],
    labels: Sequence[Mapping[Path, float]],
    k: int,
) -> float:
    """Fraction of pairs whose true best path is in the top k of the ranking.

    `predictions` holds one best-first candidate ranking per pair; a pair's
    full candidate set is its label map's keys. Rankings may be shorter
    than the candidate set (filtered methods, single-choice methods).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(predictions) != len(labels):
        raise ValueError("predictions and labels must align")
    if not predictions:
        raise ValueError("no pairs to evaluate")
    hits = 0
    for ranking, pair_labels in zip(predictions, labels):
        best = true_best(list(pair_labels.keys()), pair_labels)
        hits += int(best in list(ranking)[:k])
    return hits / len(predictions)


def avg_selected_bleu(results: Sequence[RoutingResult]) -> float:
    if not results:
        raise ValueError("no routing results")
    scores = [r.actual_score for r in results]
    if any(s is None for s in scores):
        raise ValueError("every result needs an actual score")
    return sum(scores) / len(scores)


def path_length_distribution(gt_results: Sequence[RoutingResult]) -> dict[int, float]:
    """Fraction of pairs whose chosen path has 1, 2 or 3 hops."""
    if not gt_results:
        raise ValueError("no routing results")
    counts = {1: 0, 2: 0, 3: 0}
    for r in gt_results:
        counts[r.chosen.hops] += 1
    return {h: c / len(gt_results) for h, c in counts.items()}


def cdf(results: Sequence[RoutingResult]) -> CdfCurve:
    """Empirical CDF points (score_i, i/n) over ascending achieved scores."""
    if not results:
        raise ValueError("no routing results")
    scores = sorted(r.actual_score for r in results)
    n = len(scores)
    return CdfCurve(points=[(float(s), (i + 1) / n) for i, s in enumerate(scores)])


def build_report(
    method: str,
    results: Sequence[RoutingResult],
    rankings: Sequence[Sequence[Path]],
    labels: Sequence[Mapping[Path, float]],
) -> MethodReport:
    return MethodReport(
        method=method,
        avg_bleu=avg_selected_bleu(results),
        top1=topk_accuracy(rankings, labels, 1),
        top5=topk_accuracy(rankings, labels, 5),
        rows=list(results),
    )


def write_report_tsv(reports: Sequence[MethodReport], path: str | FsPath) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("method\tavg_bleu\ttop1\ttop5\n")
        for rep in reports:
            fh.write(f"{rep.method}\t{rep.avg_bleu:.4f}\t{rep.top1:.4f}\t{rep.top5:.4f}\n")


def write_cdf_csv(curve: CdfCurve, path: str | FsPath) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bleu", "fraction"])
        for bleu, fraction in curve.points:
            writer.writerow([f"{bleu:.6f}", f"{fraction:.6f}"])
