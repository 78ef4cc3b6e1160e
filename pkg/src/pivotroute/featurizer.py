"""Path featurization: token sequences and 6-dim per-token feature vectors.

A path with h hops becomes 2h+1 alternating tokens, languages and one-hop
edges: L0, H0, L1, ..., Lh. Each token gets a 5-dim embedding (a hop token
averages its two language rows) concatenated with one normalized quality
feature:

  hop token       edge score for its position in the path, / 100
  first language  mean outgoing one-hop score, / 100
  last language   mean incoming one-hop score, / 100
  interior        mean of the incoming and outgoing averages, / 100

The embedding table belongs to the model and is read by reference, so a
FeatureSequence built once stays current while the table trains.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .langdb import INCOMING, OUTGOING, QualityMatrix, lang_avg_bleu
from .pathspace import Path

KIND_LANG = "lang"
KIND_HOP = "hop"

EMB_DIM = 5
FEATURE_DIM = EMB_DIM + 1


@dataclass(frozen=True)
class Token:
    kind: str
    position: int
    lang: Optional[str] = None
    src: Optional[str] = None
    tgt: Optional[str] = None


def tokenize_path(path: Path) -> list[Token]:
    """Alternating language / one-hop tokens, 2h+1 of them for h hops."""
    tokens = [Token(kind=KIND_LANG, position=0, lang=path.langs[0])]
    for k, (src, tgt) in enumerate(path.hop_pairs()):
        tokens.append(Token(kind=KIND_HOP, position=2 * k + 1, src=src, tgt=tgt))
        tokens.append(Token(kind=KIND_LANG, position=2 * k + 2, lang=tgt))
    return tokens


def normalize_bleu(score: float) -> float:
    if not (0.0 <= score <= 100.0):
        raise ValueError(f"bleu {score} outside [0, 100]")
    return score / 100.0


def token_embedding(token: Token, table: np.ndarray, registry) -> np.ndarray:
    """Language token: its table row. Hop token: mean of the two rows."""
    if token.kind == KIND_LANG:
        return table[registry.index_of(token.lang)]
    a = table[registry.index_of(token.src)]
    b = table[registry.index_of(token.tgt)]
    return (a + b) * 0.5


def token_bleu_feature(token: Token, matrix: QualityMatrix, path: Path) -> float:
    """Normalized quality feature for one token of a path."""
    if token.kind == KIND_HOP:
        hop_index = token.position // 2
        return normalize_bleu(matrix.hop_score(token.src, token.tgt, hop_index, path.hops))
    last = 2 * path.hops
    if token.position == 0:
        return normalize_bleu(lang_avg_bleu(matrix, token.lang, OUTGOING))
    if token.position == last:
        return normalize_bleu(lang_avg_bleu(matrix, token.lang, INCOMING))
    inc = lang_avg_bleu(matrix, token.lang, INCOMING)
    out = lang_avg_bleu(matrix, token.lang, OUTGOING)
    return normalize_bleu((inc + out) / 2.0)


@dataclass
class FeatureSequence:
    """Per-token features for one path.

    `idx_a`/`idx_b` are the embedding rows each token averages (equal for
    language tokens), so the embedding half of `vectors` always reflects
    the current state of `table`.
    """

    tokens: tuple[Token, ...]
    bleu: np.ndarray
    idx_a: np.ndarray
    idx_b: np.ndarray
    table: np.ndarray

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def vectors(self) -> np.ndarray:
        emb = (self.table[self.idx_a] + self.table[self.idx_b]) * 0.5
        return np.concatenate([emb, self.bleu[:, None]], axis=1)


def featurize(path: Path, matrix: QualityMatrix, table: np.ndarray) -> FeatureSequence:
    """Feature sequence for a path: 2h+1 vectors of dimension 6."""
    registry = matrix.registry
    tokens = tuple(tokenize_path(path))
    bleu = np.array([token_bleu_feature(t, matrix, path) for t in tokens], dtype=np.float64)
    idx_a = np.empty(len(tokens), dtype=np.intp)
    idx_b = np.empty(len(tokens), dtype=np.intp)
    for k, tok in enumerate(tokens):
        if tok.kind == KIND_LANG:
            idx_a[k] = idx_b[k] = registry.index_of(tok.lang)
        else:
            idx_a[k] = registry.index_of(tok.src)
            idx_b[k] = registry.index_of(tok.tgt)
    return FeatureSequence(tokens=tokens, bleu=bleu, idx_a=idx_a, idx_b=idx_b, table=table)
