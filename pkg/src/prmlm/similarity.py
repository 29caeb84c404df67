"""Acoustic confusability scores and per-word confusable sets.

Scores live in (0, 1]. Pairs that are absent from the sparse map score 0
and are never treated as confusable. The diagonal is always 1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .corpus import BOS_ID, EOS_ID, UNK_ID, Vocabulary
from .errors import PrmError

log = logging.getLogger(__name__)

PROXY_CUTOFF = 0.05


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb)))
        previous = current
    return previous[-1]


def normalized_distance(a: str, b: str) -> float:
    longest = max(len(a), len(b))
    return levenshtein(a, b) / longest if longest else 0.0


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric sparse similarity over vocabulary ids.

    ``rows[w]`` maps each confusable word of ``w`` to its score; it never
    contains ``w`` itself.
    """

    size: int
    rows: Mapping[int, Mapping[int, float]] = field(repr=False)

    @classmethod
    def from_pairs(cls, size: int, pairs: Mapping[tuple[int, int], float]) -> "SimilarityMatrix":
        """Build from (a, b) -> score; asymmetric entries are averaged."""
        merged: dict[tuple[int, int], list[float]] = {}
        for (a, b), s in pairs.items():
            if a == b:
                continue
            if not 0 < s <= 1:
                raise PrmError(f"score out of range: {s}")
            key = (min(a, b), max(a, b))
            merged.setdefault(key, []).append(s)
        rows: dict[int, dict[int, float]] = {}
        for (a, b), scores in merged.items():
            s = math.fsum(scores) / len(scores)
            rows.setdefault(a, {})[b] = s
            rows.setdefault(b, {})[a] = s
        return cls(size, rows)

    def score(self, a: int, b: int) -> float:
        if a == b:
            return 1.0
        return self.rows.get(a, {}).get(b, 0.0)

    def neighbors(self, w: int) -> Mapping[int, float]:
        return self.rows.get(w, {})

    def scaled(self, c: float) -> "SimilarityMatrix":
        """Multiply every off-diagonal score by ``c`` in (0, 1]."""
        if not 0 < c <= 1:
            raise PrmError("scale must lie in (0, 1]")
        rows = {a: {b: s * c for b, s in row.items()} for a, row in self.rows.items()}
        return SimilarityMatrix(self.size, rows)

    def pairs(self):
        """Yield each stored unordered pair once as (a, b, score), a < b."""
        for a in sorted(self.rows):
            for b in sorted(self.rows[a]):
                if a < b:
                    yield a, b, self.rows[a][b]


@dataclass(frozen=True)
class ConfusableSet:
    word: int
    neighbors: tuple[tuple[int, float], ...]

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.neighbors)

    def __len__(self) -> int:
        return len(self.neighbors)


def proxy_similarity(vocab: Vocabulary, temperature: float) -> SimilarityMatrix:
    """Edit-distance stand-in for acoustic similarity.

    score(a, b) = exp(-d(a, b) / temperature) with d the character
    Levenshtein distance divided by the longer word's length. Scores below
    0.05 are dropped. Only content words take part.
    """
    if not temperature > 0:
        raise PrmError("temperature must be positive")
    ids = list(vocab.content_ids)
    pairs = {}
    for k, a in enumerate(ids):
        wa = vocab.word_of(a)
        for b in ids[k + 1:]:
            s = math.exp(-normalized_distance(wa, vocab.word_of(b)) / temperature)
            if s >= PROXY_CUTOFF:
                pairs[a, b] = s
    return SimilarityMatrix.from_pairs(len(vocab), pairs)


def load_similarity(path: str | Path, vocab: Vocabulary) -> SimilarityMatrix:
    """Read ``word1<TAB>word2<TAB>score`` rows; ``#`` lines are comments.

    Rows naming words outside the vocabulary (or markers) are skipped and
    counted in the log.
    """
    pairs: dict[tuple[int, int], list[float]] = {}
    skipped = 0
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise PrmError(f"{path}:{lineno}: malformed row, expected 3 tab-separated fields")
            try:
                s = float(parts[2])
            except ValueError:
                raise PrmError(f"{path}:{lineno}: malformed score {parts[2]!r}") from None
            if not 0 < s <= 1:
                raise PrmError(f"{path}:{lineno}: score out of range: {s}")
            a, b = (vocab.index.get(p, -1) for p in parts[:2])
            if not (vocab.is_content(a) and vocab.is_content(b)):
                skipped += 1
                continue
            if a != b:
                pairs.setdefault((a, b), []).append(s)
    if skipped:
        log.warning("%s: skipped %d rows with unknown words", path, skipped)
    averaged = {k: math.fsum(v) / len(v) for k, v in pairs.items()}
    return SimilarityMatrix.from_pairs(len(vocab), averaged)


def write_similarity(matrix: SimilarityMatrix, vocab: Vocabulary, f) -> None:
    for a, b, s in matrix.pairs():
        f.write(f"{vocab.word_of(a)}\t{vocab.word_of(b)}\t{s:.6g}\n")


def confusable_set(matrix: SimilarityMatrix, word: int, nb_simil: int) -> ConfusableSet:
    """Top ``nb_simil`` neighbours by score, ties to the lower id.

    ``<s>``, ``</s>`` and ``<unk>`` never appear as neighbours.
    """
    if nb_simil < 0:
        raise PrmError("nb_simil must be non-negative")
    if word in (BOS_ID, EOS_ID):
        raise PrmError("confusable set requested for a boundary marker")
    candidates = [(b, s) for b, s in matrix.neighbors(word).items() if b > UNK_ID and b != word]
    candidates.sort(key=lambda bs: (-bs[1], bs[0]))
    return ConfusableSet(word, tuple(candidates[:nb_simil]))


class ConfusableIndex:
    """Memoized confusable sets for one matrix and one ``nb_simil``."""

    def __init__(self, matrix: SimilarityMatrix, nb_simil: int):
        self.matrix = matrix
        self.nb_simil = nb_simil
        self._cache: dict[int, ConfusableSet] = {}

    def __call__(self, word: int) -> ConfusableSet:
        cs = self._cache.get(word)
        if cs is None:
            cs = self._cache[word] = confusable_set(self.matrix, word, self.nb_simil)
        return cs
