"""Language registry, branch taxonomy and the one-hop quality matrix.

Quality scores are directed BLEU points in [0, 100], one per ordered
language pair. Registry and matrix are immutable after load and safe to
share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path as FsPath
from typing import Iterable

import numpy as np

OUTGOING = "outgoing"
INCOMING = "incoming"


@dataclass(frozen=True)
class Language:
    code: str
    name: str
    branch: str
    mono_size: int


@dataclass(frozen=True)
class LanguageRegistry:
    """Ordered collection of languages; order fixes all array indexing."""

    languages: tuple[Language, ...]

    def __post_init__(self):
        if len(self.languages) < 2:
            raise ValueError("no languages" if not self.languages else "registry needs at least 2 languages")
        seen = set()
        for lang in self.languages:
            if lang.code in seen:
                raise ValueError(f"duplicate language code {lang.code!r}")
            seen.add(lang.code)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {lang.code: i for i, lang in enumerate(self.languages)}

    @cached_property
    def branch_set(self) -> frozenset[str]:
        return frozenset(lang.branch for lang in self.languages)

    def __len__(self) -> int:
        return len(self.languages)

    def __iter__(self):
        return iter(self.languages)

    def codes(self) -> list[str]:
        return [lang.code for lang in self.languages]

    def get(self, code: str) -> Language:
        return self.languages[self.index_of(code)]

    def index_of(self, code: str) -> int:
        try:
            return self._index[code]
        except KeyError:
            raise ValueError(f"unknown language code {code!r}") from None

    def branch_members(self, branch: str) -> list[Language]:
        return [lang for lang in self.languages if lang.branch == branch]


def is_distant(registry: LanguageRegistry, x: str, y: str) -> bool:
    """True iff x and y sit in different language branches."""
    if x == y:
        raise ValueError(f"self-pair {x!r}")
    return registry.get(x).branch != registry.get(y).branch


def _parse_registry_row(line_no: int, line: str) -> Language:
    cols = line.split("\t")
    if len(cols) != 4:
        raise ValueError(f"languages.tsv line {line_no}: expected 4 columns, got {len(cols)}")
    code, name, branch, mono = cols
    if not code or "->" in code or any(c.isspace() for c in code):
        raise ValueError(f"languages.tsv line {line_no}: bad language code {code!r}")
    try:
        size = int(mono)
    except ValueError:
        raise ValueError(f"languages.tsv line {line_no}: non-integer mono_size {mono!r}") from None
    if size < 0:
        raise ValueError(f"languages.tsv line {line_no}: negative mono_size {size}")
    return Language(code=code, name=name, branch=branch, mono_size=size)


def load_registry(path: str | FsPath) -> LanguageRegistry:
    """Load a registry from TSV rows `code<TAB>name<TAB>branch<TAB>mono_size`."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for i, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            rows.append(_parse_registry_row(i, line))
    if not rows:
        raise ValueError("no languages")
    return LanguageRegistry(languages=tuple(rows))


def save_registry(registry: LanguageRegistry, path: str | FsPath) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for lang in registry:
            fh.write(f"{lang.code}\t{lang.name}\t{lang.branch}\t{lang.mono_size}\n")


@dataclass
class QualityMatrix:
    """Directed one-hop quality scores, with optional supervised overlay flags.

    `scores` holds the score in effect for each edge (boosted where an
    overlay applies); `base_scores` keeps the pre-overlay value. Supervised
    edges only take effect at the middle hop of a 3-hop path, everywhere
    else the base value applies; `hop_score` encodes that rule.
    """

    registry: LanguageRegistry
    scores: np.ndarray
    supervised: np.ndarray
    base_scores: np.ndarray
    _out_avg: np.ndarray | None = field(default=None, init=False, repr=False)
    _in_avg: np.ndarray | None = field(default=None, init=False, repr=False)

    @classmethod
    def from_dense(
        cls,
        registry: LanguageRegistry,
        scores: np.ndarray,
        supervised: np.ndarray | None = None,
        base_scores: np.ndarray | None = None,
    ) -> "QualityMatrix":
        n = len(registry)
        scores = np.asarray(scores, dtype=np.float64).copy()
        if scores.shape != (n, n):
            raise ValueError(f"score matrix shape {scores.shape} does not match registry size {n}")
        off = ~np.eye(n, dtype=bool)
        vals = scores[off]
        if np.any(vals < 0.0) or np.any(vals > 100.0):
            raise ValueError("scores must lie within [0, 100]")
        np.fill_diagonal(scores, np.nan)
        if supervised is None:
            supervised = np.zeros((n, n), dtype=bool)
        else:
            supervised = np.asarray(supervised, dtype=bool).copy()
        if base_scores is None:
            base_scores = scores.copy()
        else:
            base_scores = np.asarray(base_scores, dtype=np.float64).copy()
            np.fill_diagonal(base_scores, np.nan)
        return cls(registry=registry, scores=scores, supervised=supervised, base_scores=base_scores)

    def _pair(self, src: str, tgt: str) -> tuple[int, int]:
        i = self.registry.index_of(src)
        j = self.registry.index_of(tgt)
        if i == j:
            raise ValueError(f"diagonal entry {src!r}->{tgt!r} is undefined")
        return i, j

    def get(self, src: str, tgt: str) -> float:
        i, j = self._pair(src, tgt)
        return float(self.scores[i, j])

    def base(self, src: str, tgt: str) -> float:
        i, j = self._pair(src, tgt)
        return float(self.base_scores[i, j])

    def is_supervised(self, src: str, tgt: str) -> bool:
        i, j = self._pair(src, tgt)
        return bool(self.supervised[i, j])

    def hop_score(self, src: str, tgt: str, hop_index: int, num_hops: int) -> float:
        """Score of edge src->tgt when used as hop `hop_index` of a `num_hops` path.

        Supervised edges count only at the middle hop of a 3-hop path; at any
        other position the unsupervised base score applies.
        """
        i, j = self._pair(src, tgt)
        if self.supervised[i, j] and not (num_hops == 3 and hop_index == 1):
            return float(self.base_scores[i, j])
        return float(self.scores[i, j])

    def _averages(self) -> tuple[np.ndarray, np.ndarray]:
        if self._out_avg is None:
            with np.errstate(invalid="ignore"):
                self._out_avg = np.nanmean(self.scores, axis=1)
                self._in_avg = np.nanmean(self.scores, axis=0)
        return self._out_avg, self._in_avg


def lang_avg_bleu(matrix: QualityMatrix, lang: str, direction: str) -> float:
    """Mean one-hop score from (`outgoing`) or to (`incoming`) a language."""
    idx = matrix.registry.index_of(lang)
    out_avg, in_avg = matrix._averages()
    if direction == OUTGOING:
        return float(out_avg[idx])
    if direction == INCOMING:
        return float(in_avg[idx])
    raise ValueError(f"direction must be {OUTGOING!r} or {INCOMING!r}, got {direction!r}")


def load_quality_matrix(path: str | FsPath, registry: LanguageRegistry) -> QualityMatrix:
    """Load a matrix from TSV rows `src<TAB>tgt<TAB>bleu[<TAB>supervised]`.

    Every ordered pair of registry languages must appear exactly once. A
    supervised flag loaded from file keeps base == score, since the file
    format carries no pre-overlay value.
    """
    n = len(registry)
    scores = np.full((n, n), np.nan)
    supervised = np.zeros((n, n), dtype=bool)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) not in (3, 4):
                raise ValueError(f"matrix.tsv line {line_no}: expected 3 or 4 columns, got {len(cols)}")
            src, tgt = cols[0], cols[1]
            i = registry.index_of(src)
            j = registry.index_of(tgt)
            if i == j:
                raise ValueError(f"matrix.tsv line {line_no}: diagonal pair {src!r}->{tgt!r}")
            try:
                bleu = float(cols[2])
            except ValueError:
                raise ValueError(f"matrix.tsv line {line_no}: bad bleu value {cols[2]!r}") from None
            if not (0.0 <= bleu <= 100.0):
                raise ValueError(f"matrix.tsv line {line_no}: bleu {bleu} outside [0, 100]")
            if not np.isnan(scores[i, j]):
                raise ValueError(f"matrix.tsv line {line_no}: duplicate pair {src}->{tgt}")
            scores[i, j] = bleu
            if len(cols) == 4:
                if cols[3] not in ("0", "1"):
                    raise ValueError(f"matrix.tsv line {line_no}: supervised flag must be 0 or 1")
                supervised[i, j] = cols[3] == "1"
    off = ~np.eye(n, dtype=bool)
    if np.any(np.isnan(scores[off])):
        i, j = np.argwhere(np.isnan(scores) & off)[0]
        codes = registry.codes()
        raise ValueError(f"matrix.tsv: missing pair {codes[i]}->{codes[j]}")
    return QualityMatrix.from_dense(registry, scores, supervised=supervised)


def save_quality_matrix(matrix: QualityMatrix, path: str | FsPath) -> None:
    """Write the matrix as TSV; floats use repr for exact round-trips."""
    codes = matrix.registry.codes()
    with_flag = bool(matrix.supervised.any())
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for i, src in enumerate(codes):
            for j, tgt in enumerate(codes):
                if i == j:
                    continue
                row = f"{src}\t{tgt}\t{float(matrix.scores[i, j])!r}"
                if with_flag:
                    row += f"\t{int(matrix.supervised[i, j])}"
                fh.write(row + "\n")
