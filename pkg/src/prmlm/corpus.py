"""Vocabulary construction and sentence encoding.

Sentences are whitespace-tokenized, one per line. Every encoded sentence is
wrapped in ``<s>`` ... ``</s>`` and unknown tokens collapse onto ``<unk>``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import PrmError

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

BOS_ID = 0
EOS_ID = 1
UNK_ID = 2
RESERVED = (BOS, EOS, UNK)


@dataclass(frozen=True)
class Vocabulary:
    """Dense word <-> id mapping.

    Ids 0, 1, 2 are always ``<s>``, ``</s>`` and ``<unk>``; content words
    follow in descending corpus frequency, ties broken lexicographically.
    """

    words: tuple[str, ...]
    index: dict[str, int] = field(repr=False, compare=False)

    @classmethod
    def from_words(cls, content_words: Iterable[str]) -> "Vocabulary":
        words = RESERVED + tuple(content_words)
        index = {w: i for i, w in enumerate(words)}
        if len(index) != len(words):
            raise PrmError("duplicate words in vocabulary")
        return cls(words, index)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    @property
    def bos(self) -> int:
        return BOS_ID

    @property
    def eos(self) -> int:
        return EOS_ID

    @property
    def unk(self) -> int:
        return UNK_ID

    def lookup(self, word: str) -> int:
        return self.index.get(word, UNK_ID)

    def word_of(self, idx: int) -> str:
        return self.words[idx]

    def is_marker(self, idx: int) -> bool:
        return idx == BOS_ID or idx == EOS_ID

    def is_content(self, idx: int) -> bool:
        """True for real words: not a boundary marker and not ``<unk>``."""
        return idx > UNK_ID

    @property
    def content_ids(self) -> range:
        return range(UNK_ID + 1, len(self.words))

    @property
    def successor_count(self) -> int:
        """Number of types that may follow a context: everything except ``<s>``."""
        return len(self.words) - 1


@dataclass(frozen=True)
class EncodedCorpus:
    sentences: tuple[tuple[int, ...], ...]
    vocab: Vocabulary = field(repr=False, compare=False)

    @property
    def token_count(self) -> int:
        return sum(len(s) - 2 for s in self.sentences)

    def __len__(self) -> int:
        return len(self.sentences)

    def decode(self) -> list[list[str]]:
        return [[self.vocab.word_of(i) for i in s[1:-1]] for s in self.sentences]

    def subset(self, indices: Sequence[int]) -> "EncodedCorpus":
        return EncodedCorpus(tuple(self.sentences[i] for i in indices), self.vocab)


def tokenize(line: str, lowercase: bool = False) -> list[str]:
    if lowercase:
        line = line.lower()
    return line.split()


def _token_lines(text_lines: Iterable[str], lowercase: bool) -> list[list[str]]:
    lines = []
    for line in text_lines:
        tokens = tokenize(line, lowercase)
        if tokens:
            lines.append(tokens)
    return lines


def build_vocabulary(text_lines: Iterable[str], min_count: int = 0, lowercase: bool = False) -> Vocabulary:
    if min_count < 0:
        raise PrmError("min_count must be non-negative")
    counts: Counter[str] = Counter()
    for tokens in _token_lines(text_lines, lowercase):
        for tok in tokens:
            if tok in RESERVED:
                raise PrmError(f"reserved token {tok!r} found in corpus")
            counts[tok] += 1
    if not counts:
        raise PrmError("empty corpus")
    kept = sorted((w for w, c in counts.items() if c >= min_count), key=lambda w: (-counts[w], w))
    return Vocabulary.from_words(kept)


def encode_corpus(text_lines: Iterable[str], vocab: Vocabulary, lowercase: bool = False) -> EncodedCorpus:
    sentences = []
    for tokens in _token_lines(text_lines, lowercase):
        ids = [vocab.lookup(t) for t in tokens]
        sentences.append((BOS_ID, *ids, EOS_ID))
    return EncodedCorpus(tuple(sentences), vocab)


def read_lines(path: str | Path) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f if line.strip()]
