"""Candidate translation paths between a language pair.

A path is an ordered language sequence source -> pivots -> target with 1
to 3 hops. Enumeration is deterministic: direct path first, then paths
sorted by pivot count and lexicographic pivot codes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .langdb import QualityMatrix

MAX_HOPS = 3


@dataclass(frozen=True)
class Path:
    langs: tuple[str, ...]

    def __post_init__(self):
        if not (2 <= len(self.langs) <= MAX_HOPS + 1):
            raise ValueError(f"path needs 1..{MAX_HOPS} hops, got langs {self.langs}")
        for a, b in zip(self.langs, self.langs[1:]):
            if a == b:
                raise ValueError(f"consecutive repeated language {a!r} in {self.langs}")

    @property
    def source(self) -> str:
        return self.langs[0]

    @property
    def target(self) -> str:
        return self.langs[-1]

    @property
    def hops(self) -> int:
        return len(self.langs) - 1

    @property
    def pivots(self) -> tuple[str, ...]:
        return self.langs[1:-1]

    def hop_pairs(self) -> list[tuple[str, str]]:
        return list(zip(self.langs, self.langs[1:]))

    def __str__(self) -> str:
        return "->".join(self.langs)

    @classmethod
    def from_text(cls, text: str) -> "Path":
        return cls(tuple(text.split("->")))


@dataclass
class PathSet:
    source: str
    target: str
    paths: list[Path]

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)


def enumerate_paths(
    x: str,
    y: str,
    pivot_pool: Iterable[str],
    max_pivots: int = 2,
    supervised_only_middle: bool = False,
    matrix: QualityMatrix | None = None,
) -> PathSet:
    """All x->y paths with up to `max_pivots` distinct pivots from the pool.

    Pivots are mutually distinct and never equal to an endpoint. The
    `supervised_only_middle` flag does not change path membership: the
    middle-hop-only rule for supervised edges is enforced by scoring (see
    QualityMatrix.hop_score), never by pruning candidates.
    """
    if x == y:
        raise ValueError(f"source equals target {x!r}")
    pool = sorted(set(pivot_pool))
    if x in pool or y in pool:
        raise ValueError("pivot pool must exclude the endpoints")
    if not (0 <= max_pivots <= MAX_HOPS - 1):
        raise ValueError(f"max_pivots must be in [0, {MAX_HOPS - 1}]")
    if supervised_only_middle and matrix is None:
        raise ValueError("supervised_only_middle requires a quality matrix")

    paths = [Path((x, y))]
    if max_pivots >= 1:
        for z in pool:
            paths.append(Path((x, z, y)))
    if max_pivots >= 2:
        for z1 in pool:
            for z2 in pool:
                if z1 != z2:
                    paths.append(Path((x, z1, z2, y)))
    return PathSet(source=x, target=y, paths=paths)


def count_paths(pool_size: int, max_hops: int = 3) -> int:
    """Closed-form candidate count: 1 + P + P(P-1) for 3 hops with P pivots."""
    if pool_size < 0:
        raise ValueError("pool_size must be nonnegative")
    if max_hops == 1:
        return 1
    if max_hops == 2:
        return 1 + pool_size
    if max_hops == 3:
        return 1 + pool_size + pool_size * (pool_size - 1)
    raise ValueError(f"max_hops must be 1, 2 or 3, got {max_hops}")


def estimate_eval_cost(num_languages: int, minutes_per_path: float = 20.0) -> float:
    """GPU-days to brute-force score every candidate path of every pair.

    Back-of-envelope model: M(M-1) ordered pairs, M(M-1) paths per pair,
    a fixed GPU-minutes cost per path, 1440 minutes per day.
    """
    if num_languages < 2:
        raise ValueError("need at least 2 languages")
    m = num_languages
    pairs = m * (m - 1)
    return pairs * pairs * minutes_per_path / 1440.0


def rank_paths(paths: Sequence[Path], scores: Sequence[float]) -> list[int]:
    """Indices of paths ordered best-first.

    Tie order everywhere in this package: higher score, then fewer hops,
    then lexicographic path string.
    """
    if len(paths) != len(scores):
        raise ValueError("paths and scores must align")
    return sorted(range(len(paths)), key=lambda i: (-scores[i], paths[i].hops, str(paths[i])))
