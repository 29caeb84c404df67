"""Exchange clustering for a class bigram model.

The class model factors p(w|v) = p(class(w)|class(v)) * p(w|class(w)), both
factors additively smoothed. Words are moved one at a time to whichever
class maximizes the objective; a move is kept only if it strictly improves
it.

Two objectives are available. ``likelihood`` is the training-set log
likelihood. ``prm`` is the model-dependent part of the probability ratio
measure: the log likelihood minus, at every position, the mean log
probability of the confusable alternatives of the current word in the same
context and the mean log probability of the current word after each
confusable alternative of the previous word. Similarity terms do not
depend on the class map, so they are left out.

Both objectives are linear in the model's log-probability table, so each
reduces to sum(weights * log p) for a weight matrix fixed by the corpus and
the confusable sets. That makes a full re-evaluation a handful of dense
matrix products over the vocabulary.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .corpus import BOS_ID, EOS_ID, UNK_ID, EncodedCorpus, Vocabulary
from .errors import PrmError
from .ngram import DEFAULT_ALPHA
from .similarity import ConfusableIndex, SimilarityMatrix

log = logging.getLogger(__name__)

IMPROVEMENT_THRESHOLD = 1e-12
OBJECTIVES = ("likelihood", "prm")


@dataclass(frozen=True)
class ClassMap:
    """Word id -> class id.

    Content classes are 0 .. K-1; ``<s>``, ``</s>`` and ``<unk>`` sit alone
    in classes K, K+1 and K+2 and are never exchanged.
    """

    assignment: tuple[int, ...]
    num_content_classes: int

    @property
    def num_classes(self) -> int:
        return self.num_content_classes + 3

    @property
    def bos_class(self) -> int:
        return self.num_content_classes

    @classmethod
    def from_content(cls, content_classes: Sequence[int], k: int) -> "ClassMap":
        """``content_classes[r]`` is the class of content word id r + 3."""
        if any(not 0 <= c < k for c in content_classes):
            raise PrmError("class id out of range")
        return cls((k, k + 1, k + 2, *content_classes), k)

    @classmethod
    def frequency_init(cls, vocab: Vocabulary, k: int) -> "ClassMap":
        n = len(vocab.content_ids)
        return cls.from_content([r % k for r in range(n)], k)

    def content_partition(self) -> tuple[int, ...]:
        return self.assignment[UNK_ID + 1:]

    def canonical(self) -> tuple[frozenset[int], ...]:
        """Content classes as a label-free set of word-id sets."""
        groups: dict[int, set[int]] = {}
        for w, c in enumerate(self.assignment):
            if w > UNK_ID:
                groups.setdefault(c, set()).add(w)
        return tuple(sorted((frozenset(g) for g in groups.values()), key=min))


def _count_matrix(corpus: EncodedCorpus) -> np.ndarray:
    n = len(corpus.vocab)
    counts = np.zeros((n, n))
    for sent in corpus.sentences:
        np.add.at(counts, (np.asarray(sent[:-1]), np.asarray(sent[1:])), 1.0)
    return counts


@dataclass(frozen=True)
class ClassBigramModel:
    vocab: Vocabulary
    class_map: ClassMap
    alpha: float
    word_counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.alpha > 0:
            raise PrmError("alpha must be positive")
        z = np.zeros((len(self.vocab), self.class_map.num_classes))
        z[np.arange(len(self.vocab)), self.class_map.assignment] = 1.0
        object.__setattr__(self, "_tables", _class_tables(self.word_counts, z, self.class_map, self.alpha))

    @classmethod
    def estimate(cls, corpus: EncodedCorpus, class_map: ClassMap, alpha: float = DEFAULT_ALPHA) -> "ClassBigramModel":
        return cls(corpus.vocab, class_map, alpha, _count_matrix(corpus))

    @property
    def transition_log(self) -> np.ndarray:
        return self._tables[0]

    @property
    def emission_log(self) -> np.ndarray:
        return self._tables[1]

    def logprob(self, prev: int, w: int) -> float:
        n = len(self.vocab)
        if not (0 <= prev < n and 0 <= w < n) or w == BOS_ID or prev == EOS_ID:
            raise PrmError(f"invalid bigram query ({prev}, {w})")
        a = self.class_map.assignment
        return float(self.transition_log[a[prev], a[w]] + self.emission_log[w])

    def prob(self, prev: int, w: int) -> float:
        return math.exp(self.logprob(prev, w))

    def log_table(self) -> np.ndarray:
        """V x V matrix of log p(w|v); the ``<s>`` column is zero-filled."""
        a = np.asarray(self.class_map.assignment)
        table = self.transition_log[np.ix_(a, a)] + self.emission_log[None, :]
        table[:, BOS_ID] = 0.0
        return table


def _class_tables(counts: np.ndarray, z: np.ndarray, class_map: ClassMap, alpha: float):
    """Log transition (C x C) and log emission (V) tables.

    Columns for the ``<s>`` class and the ``<s>`` emission are zero-filled;
    ``<s>`` is never predicted.
    """
    n_classes = class_map.num_classes
    bos_c = class_map.bos_class
    trans = z.T @ counts @ z
    context = trans.sum(axis=1)
    trans_log = np.log(trans + alpha) - np.log(context + alpha * (n_classes - 1))[:, None]
    trans_log[:, bos_c] = 0.0
    emitted = counts.sum(axis=0)
    class_emitted = emitted @ z
    class_size = z.sum(axis=0)
    den = (class_emitted + alpha * class_size) @ z.T
    emit_log = np.log(emitted + alpha) - np.log(den)
    emit_log[BOS_ID] = 0.0
    return trans_log, emit_log


@dataclass(frozen=True)
class Objective:
    """Clustering criterion; ``offset`` is a constant added to every value."""

    kind: str = "likelihood"
    nb_simil: int = 0
    sim: SimilarityMatrix | None = field(default=None, repr=False)
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in OBJECTIVES:
            raise PrmError(f"unknown objective {self.kind!r}")
        if self.kind == "prm" and (self.nb_simil < 1 or self.sim is None):
            raise PrmError("prm objective needs nb_simil >= 1 and a similarity matrix")


def _averaging_matrix(n: int, objective: Objective) -> np.ndarray:
    """M[w, a] = 1/|S(w)| for each confusable alternative a of w."""
    m = np.zeros((n, n))
    index = ConfusableIndex(objective.sim, objective.nb_simil)
    for w in range(UNK_ID, n):
        alts = index(w).ids
        for a in alts:
            m[w, a] = 1.0 / len(alts)
    return m


def objective_weights(counts: np.ndarray, objective: Objective) -> np.ndarray:
    """W such that objective_value == sum(W * log_table) + offset."""
    if objective.kind == "likelihood":
        return counts
    m = _averaging_matrix(counts.shape[0], objective)
    return counts - counts @ m - m.T @ counts


def objective_value(model: ClassBigramModel, corpus: EncodedCorpus, objective: Objective) -> float:
    weights = objective_weights(_count_matrix(corpus), objective)
    return float(np.sum(weights * model.log_table())) + objective.offset


def similarity_constant(corpus: EncodedCorpus, objective: Objective) -> float:
    """Sum over positions of the mean log similarity that ``prm`` omits.

    Zero for the likelihood objective.
    """
    if objective.kind == "likelihood":
        return 0.0
    index = ConfusableIndex(objective.sim, objective.nb_simil)
    total = []
    for sent in corpus.sentences:
        for w in sent[1:-1]:
            alts = index(w).ids
            if alts:
                total.append(math.fsum(math.log(objective.sim.score(w, a)) for a in alts) / len(alts))
    return math.fsum(total)


@dataclass
class ExchangeStep:
    word: int
    source: int
    target: int
    value: float


class _Evaluator:
    """Scores whole class maps from fixed corpus statistics."""

    def __init__(self, counts: np.ndarray, weights: np.ndarray, alpha: float, k: int, offset: float):
        self.counts = counts
        self.weights = weights
        self.alpha = alpha
        self.k = k
        self.offset = offset
        self.n = counts.shape[0]
        self.weight_cols = weights.sum(axis=0)

    def __call__(self, assignment: Sequence[int]) -> float:
        class_map = ClassMap(tuple(assignment), self.k)
        z = np.zeros((self.n, class_map.num_classes))
        z[np.arange(self.n), assignment] = 1.0
        trans_log, emit_log = _class_tables(self.counts, z, class_map, self.alpha)
        class_weights = z.T @ self.weights @ z
        return float(np.sum(class_weights * trans_log) + self.weight_cols @ emit_log) + self.offset


def exchange_cluster(
    corpus: EncodedCorpus,
    k: int,
    objective: Objective,
    max_iter: int = 20,
    seed: int = 42,
    alpha: float = DEFAULT_ALPHA,
    init: ClassMap | None = None,
    trace: list[ExchangeStep] | None = None,
    on_pass: Callable[[int, float, int], None] | None = None,
) -> ClassMap:
    """Greedy exchange clustering.

    Words are visited in descending frequency (ascending id). Each is moved
    to the class with the highest objective, lowest class id on ties, if
    that beats the current value by more than 1e-12. Moves that would empty
    a class are not considered. Stops after a pass with no move or after
    ``max_iter`` passes.

    The procedure is fully deterministic; ``seed`` is accepted so that runs
    record it alongside the other settings.
    """
    vocab = corpus.vocab
    n_content = len(vocab.content_ids)
    if not corpus.sentences:
        raise PrmError("empty corpus")
    if k < 2:
        raise PrmError("need at least 2 classes")
    if k > n_content:
        raise PrmError(f"{k} classes requested but only {n_content} content words")
    counts = _count_matrix(corpus)
    evaluate = _Evaluator(counts, objective_weights(counts, objective), alpha, k, objective.offset)
    assignment = list((init or ClassMap.frequency_init(vocab, k)).assignment)
    sizes = np.bincount(assignment[UNK_ID + 1:], minlength=k)
    current = evaluate(assignment)
    log.info("pass 0 objective %.6f", current)

    for it in range(1, max_iter + 1):
        moves = 0
        for w in vocab.content_ids:
            source = assignment[w]
            if sizes[source] == 1:
                continue
            best_value, best_class = -math.inf, source
            for c in range(k):
                if c == source:
                    continue
                assignment[w] = c
                value = evaluate(assignment)
                if value > best_value:
                    best_value, best_class = value, c
            assignment[w] = source
            if best_value > current + IMPROVEMENT_THRESHOLD:
                assignment[w] = best_class
                sizes[source] -= 1
                sizes[best_class] += 1
                current = best_value
                moves += 1
                if trace is not None:
                    trace.append(ExchangeStep(w, source, best_class, current))
        log.info("pass %d objective %.6f moves %d", it, current, moves)
        if on_pass is not None:
            on_pass(it, current, moves)
        if moves == 0:
            break
    return ClassMap(tuple(assignment), k)


def write_class_map(class_map: ClassMap, vocab: Vocabulary, f) -> None:
    for w in vocab.content_ids:
        f.write(f"{vocab.word_of(w)}\t{class_map.assignment[w]}\n")
