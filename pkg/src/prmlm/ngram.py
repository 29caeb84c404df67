"""Additively smoothed bigram model, perplexity and TSV serialization."""

from __future__ import annotations

import functools
import math
from collections import Counter
from decimal import Context, Decimal, localcontext
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from .corpus import BOS_ID, EOS_ID, EncodedCorpus, Vocabulary
from .errors import PrmError

MODEL_HEADER = "#prm-lm bigram v1"
DEFAULT_ALPHA = 0.5
# 50 digits carried when accumulating perplexity
_CONTEXT = Context(prec=50)


class ScoringModel(Protocol):
    """Anything that can score a word given the previous word."""

    vocab: Vocabulary

    def logprob(self, prev: int, w: int) -> float: ...


@dataclass(frozen=True)
class BigramCounts:
    unigram: Mapping[int, int]
    bigram: Mapping[tuple[int, int], int]
    context_total: Mapping[int, int]


def count_bigrams(corpus: EncodedCorpus) -> BigramCounts:
    if not corpus.sentences:
        raise PrmError("empty corpus")
    unigram: Counter[int] = Counter()
    bigram: Counter[tuple[int, int]] = Counter()
    context_total: Counter[int] = Counter()
    for sent in corpus.sentences:
        unigram.update(sent)
        for prev, w in zip(sent, sent[1:]):
            bigram[prev, w] += 1
            context_total[prev] += 1
    return BigramCounts(dict(unigram), dict(bigram), dict(context_total))


def _check_query(vocab: Vocabulary, prev: int, w: int) -> None:
    n = len(vocab)
    if not (0 <= prev < n and 0 <= w < n) or w == BOS_ID or prev == EOS_ID:
        raise PrmError(f"invalid bigram query ({prev}, {w})")


@dataclass(frozen=True)
class BigramModel:
    """p(w|v) = (c(v,w) + alpha) / (c(v) + alpha * V_out).

    V_out counts every type that can follow a context (all words and
    ``</s>``, never ``<s>``), so each row is a proper distribution.
    """

    vocab: Vocabulary
    alpha: float
    counts: BigramCounts = field(repr=False)

    def __post_init__(self):
        if not self.alpha > 0:
            raise PrmError("alpha must be positive")

    @classmethod
    def estimate(cls, corpus: EncodedCorpus, alpha: float = DEFAULT_ALPHA) -> "BigramModel":
        return cls(corpus.vocab, alpha, count_bigrams(corpus))

    @property
    def successor_count(self) -> int:
        return self.vocab.successor_count

    def prob(self, prev: int, w: int) -> float:
        _check_query(self.vocab, prev, w)
        num = self.counts.bigram.get((prev, w), 0) + self.alpha
        den = self.counts.context_total.get(prev, 0) + self.alpha * self.successor_count
        return num / den

    def prob_parts(self, prev: int, w: int) -> tuple[Decimal, Decimal]:
        """Exact numerator and denominator of ``prob``."""
        _check_query(self.vocab, prev, w)
        alpha = Decimal(self.alpha)
        num = self.counts.bigram.get((prev, w), 0) + alpha
        return num, self.counts.context_total.get(prev, 0) + alpha * self.successor_count

    def logprob(self, prev: int, w: int) -> float:
        return math.log(self.prob(prev, w))

    def unigram(self) -> "UnigramModel":
        """Context-free smoothed distribution over predicted tokens."""
        n = len(self.vocab)
        predicted = [0] * n
        for (_, w), c in self.counts.bigram.items():
            predicted[w] += c
        total = sum(predicted)
        den = total + self.alpha * self.successor_count
        probs = [0.0 if i == BOS_ID else (predicted[i] + self.alpha) / den for i in range(n)]
        return UnigramModel(self.vocab, tuple(probs))


@dataclass(frozen=True)
class UnigramModel:
    """Scores every word by a fixed distribution, ignoring the context."""

    vocab: Vocabulary
    probs: tuple[float, ...]

    @classmethod
    def from_mapping(cls, vocab: Vocabulary, probs: Mapping[str, float]) -> "UnigramModel":
        table = [0.0] * len(vocab)
        for word, p in probs.items():
            if word not in vocab:
                raise PrmError(f"unknown word {word!r}")
            table[vocab.index[word]] = p
        return cls(vocab, tuple(table))

    def prob(self, prev: int, w: int) -> float:
        _check_query(self.vocab, prev, w)
        return self.probs[w]

    def prob_parts(self, prev: int, w: int) -> tuple[Decimal, Decimal]:
        return Decimal(self.prob(prev, w)), Decimal(1)

    def logprob(self, prev: int, w: int) -> float:
        p = self.prob(prev, w)
        return math.log(p) if p > 0 else -math.inf


def _check_sentence(sentence: Sequence[int]) -> None:
    if len(sentence) < 2 or sentence[0] != BOS_ID or sentence[-1] != EOS_ID:
        raise PrmError("sentence must start with <s> and end with </s>")
    if BOS_ID in sentence[1:] or EOS_ID in sentence[:-1]:
        raise PrmError("boundary marker inside sentence")


def sentence_log_prob(model: ScoringModel, sentence: Sequence[int]) -> float:
    """Natural-log probability of a boundary-marked sentence, ``</s>`` included."""
    _check_sentence(sentence)
    return math.fsum(model.logprob(prev, w) for prev, w in zip(sentence, sentence[1:]))


def scored_positions(corpus: EncodedCorpus) -> int:
    return corpus.token_count + len(corpus.sentences)


@functools.lru_cache(maxsize=4096)
def _ln(x: Decimal) -> Decimal:
    with localcontext(_CONTEXT):
        return x.ln()


def _exact_logprob(model: ScoringModel, prev: int, w: int) -> Decimal:
    parts = getattr(model, "prob_parts", None)
    if parts is None:
        return Decimal(model.logprob(prev, w))
    num, den = parts(prev, w)
    return _ln(num) - _ln(den)


def perplexity(model: ScoringModel, corpus: EncodedCorpus) -> float:
    """exp(-mean log p) over every scored token, ``</s>`` included.

    Log terms are accumulated with 50 significant digits and rounded once,
    so a model assigning 1/V everywhere gives exactly V.
    """
    if not corpus.sentences:
        raise PrmError("empty corpus")
    with localcontext(_CONTEXT):
        total = Decimal(0)
        for s in corpus.sentences:
            _check_sentence(s)
            for prev, w in zip(s, s[1:]):
                total += _exact_logprob(model, prev, w)
        return float((-total / scored_positions(corpus)).exp())


def save_model(model: BigramModel, path: str | Path) -> None:
    """Write the model as TSV.

    Layout: header, ``alpha`` line, ``#vocab`` comment lines holding the
    content words in id order, then ``prev<TAB>word<TAB>count`` rows sorted
    by ids.
    """
    words = model.vocab.words
    with open(path, "w", encoding="utf-8") as f:
        f.write(MODEL_HEADER + "\n")
        f.write(f"alpha {model.alpha!r}\n")
        for i in model.vocab.content_ids:
            f.write(f"#vocab\t{words[i]}\n")
        for (prev, w), c in sorted(model.counts.bigram.items()):
            f.write(f"{words[prev]}\t{words[w]}\t{c}\n")


def load_model(path: str | Path) -> BigramModel:
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or lines[0] != MODEL_HEADER:
        raise PrmError(f"{path}: missing header {MODEL_HEADER!r}")
    try:
        key, value = lines[1].split()
        if key != "alpha":
            raise ValueError
        alpha = float(value)
    except (IndexError, ValueError):
        raise PrmError(f"{path}:2: expected 'alpha <value>'") from None
    content = []
    rows = []
    for lineno, line in enumerate(lines[2:], start=3):
        if line.startswith("#vocab\t"):
            content.append(line.split("\t", 1)[1])
            continue
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise PrmError(f"{path}:{lineno}: expected 3 tab-separated fields")
        try:
            rows.append((parts[0], parts[1], int(parts[2])))
        except ValueError:
            raise PrmError(f"{path}:{lineno}: bad count {parts[2]!r}") from None
    vocab = Vocabulary.from_words(content)
    unigram: Counter[int] = Counter()
    bigram: dict[tuple[int, int], int] = {}
    context_total: Counter[int] = Counter()
    for lineno, (a, b, c) in enumerate(rows):
        if a not in vocab or b not in vocab:
            raise PrmError(f"{path}: word not in vocabulary in row {a!r} {b!r}")
        prev, w = vocab.index[a], vocab.index[b]
        bigram[prev, w] = c
        context_total[prev] += c
        unigram[w] += c
        if prev == BOS_ID:
            unigram[prev] += c
    counts = BigramCounts(dict(unigram), bigram, dict(context_total))
    return BigramModel(vocab, alpha, counts)
