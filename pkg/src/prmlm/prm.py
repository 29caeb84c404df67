"""Probability ratio measure (PRM).

For every content word of a reference sentence, the correct word is set
against each of its acoustically confusable alternatives; the log of the
bigram probability ratio of the two sentences (which differ in that single
position) plus the log similarity is averaged over the alternatives, and
the averages are summed over positions. Higher is better.

Two groupings of the same terms are provided. ``eq7`` scores each position
with both its left and right context ratios. ``eq8`` regroups the right
context ratio of position i as a "previous word" factor at position i+1,
which is the form used when the measure drives clustering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .corpus import EncodedCorpus
from .errors import PrmError
from .ngram import ScoringModel, _check_sentence
from .similarity import ConfusableIndex, SimilarityMatrix

FORMS = ("eq7", "eq8")


@dataclass(frozen=True)
class PrmConfig:
    nb_simil: int
    form: str = "eq8"
    per_word_normalize: bool = True

    def __post_init__(self):
        if self.form not in FORMS:
            raise PrmError(f"unknown PRM form {self.form!r}")
        if self.nb_simil < 0:
            raise PrmError("nb_simil must be non-negative")


@dataclass(frozen=True)
class PrmScore:
    log_value: float
    positions_scored: int
    per_position: tuple[float, ...] | None = None

    @property
    def log_per_word(self) -> float:
        return self.log_value / self.positions_scored if self.positions_scored else 0.0


def substitution_ratio(
    model: ScoringModel, sim: SimilarityMatrix, prev: int, correct: int, next_: int, alt: int
) -> float:
    """log of p(correct|prev) p(next|correct) Sim(correct, alt) / (p(alt|prev) p(next|alt))."""
    if alt == correct:
        raise PrmError("alternative must differ from the correct word")
    s = sim.score(correct, alt)
    if s <= 0:
        raise PrmError("not a confusable pair")
    return (
        model.logprob(prev, correct)
        + model.logprob(correct, next_)
        - model.logprob(prev, alt)
        - model.logprob(alt, next_)
        + math.log(s)
    )


def _index(sim: SimilarityMatrix, nb_simil: int, index: ConfusableIndex | None) -> ConfusableIndex:
    if index is not None and index.matrix is sim and index.nb_simil == nb_simil:
        return index
    return ConfusableIndex(sim, nb_simil)


def position_factor(
    model: ScoringModel,
    sim: SimilarityMatrix,
    sentence: Sequence[int],
    i: int,
    nb_simil: int,
    index: ConfusableIndex | None = None,
) -> float:
    """Mean substitution log-ratio of ``sentence[i]`` over its confusable set.

    Returns 0.0 when the set is empty.
    """
    if not 0 < i < len(sentence) - 1:
        raise PrmError(f"position {i} is not a content position")
    alts = _index(sim, nb_simil, index)(sentence[i]).ids
    if not alts:
        return 0.0
    prev, w, nxt = sentence[i - 1], sentence[i], sentence[i + 1]
    return math.fsum(substitution_ratio(model, sim, prev, w, nxt, a) for a in alts) / len(alts)


def _eq7_terms(model, sim, sentence, index) -> list[float]:
    return [position_factor(model, sim, sentence, i, index.nb_simil, index) for i in range(1, len(sentence) - 1)]


def _eq8_terms(model, sim, sentence, index) -> list[float]:
    """One term per predicted position i (1 .. len-1)."""
    terms = []
    last = len(sentence) - 1
    for i in range(1, last + 1):
        prev, w = sentence[i - 1], sentence[i]
        lp = model.logprob(prev, w)
        term = 0.0
        if i < last:
            alts = index(w).ids
            if alts:
                term += math.fsum(lp + math.log(sim.score(w, a)) - model.logprob(prev, a) for a in alts) / len(alts)
        if i > 1:
            alts = index(prev).ids
            if alts:
                term += math.fsum(lp - model.logprob(a, w) for a in alts) / len(alts)
        terms.append(term)
    return terms


def sentence_prm(
    model: ScoringModel,
    sim: SimilarityMatrix,
    sentence: Sequence[int],
    config: PrmConfig,
    index: ConfusableIndex | None = None,
    keep_breakdown: bool = False,
) -> PrmScore:
    """Raw (unnormalized) PRM of one sentence."""
    _check_sentence(sentence)
    if config.nb_simil == 0:
        raise PrmError("nb_simil = 0: use perplexity path")
    index = _index(sim, config.nb_simil, index)
    terms = (_eq7_terms if config.form == "eq7" else _eq8_terms)(model, sim, sentence, index)
    return PrmScore(math.fsum(terms), len(sentence) - 2, tuple(terms) if keep_breakdown else None)


def prm_score(
    model: ScoringModel,
    sim: SimilarityMatrix,
    corpus: EncodedCorpus,
    config: PrmConfig,
    keep_breakdown: bool = False,
) -> PrmScore:
    """Corpus-level PRM in log space.

    With ``config.per_word_normalize`` the log value is divided by the
    number of content positions.
    """
    if config.nb_simil == 0:
        raise PrmError("nb_simil = 0: use perplexity path")
    index = ConfusableIndex(sim, config.nb_simil)
    scores = [sentence_prm(model, sim, s, config, index, keep_breakdown) for s in corpus.sentences]
    total = math.fsum(s.log_value for s in scores)
    positions = sum(s.positions_scored for s in scores)
    breakdown = None
    if keep_breakdown:
        breakdown = tuple(t for s in scores for t in s.per_position)
    if config.per_word_normalize and positions:
        total /= positions
        if breakdown is not None:
            breakdown = tuple(t / positions for t in breakdown)
    return PrmScore(total, positions, breakdown)
