"""Simulated substitution-only recognizer and the correlation experiment.

Each content position of a reference sentence is decoded on its own: the
candidates are the true word and its confusable set, and the winner
maximizes p(w | true previous word) * acoustic score. Acoustic scores are
the similarity to the true word times log-normal noise drawn from a stream
keyed by (seed, utterance, position), so any utterance can be decoded in
isolation with the same result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import EncodedCorpus
from .correlation import spearman
from .errors import PrmError
from .ngram import ScoringModel, perplexity
from .prm import PrmConfig, sentence_prm
from .similarity import ConfusableIndex, SimilarityMatrix


@dataclass(frozen=True)
class AcousticChannel:
    sim: SimilarityMatrix = field(repr=False)
    noise_sigma: float = 0.0
    seed: int = 42

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise PrmError("noise_sigma must be non-negative")

    def noise(self, utt: int, pos: int) -> np.ndarray:
        """Per-word log-noise for one (utterance, position), indexed by word id."""
        if self.noise_sigma == 0:
            return np.zeros(self.sim.size)
        rng = np.random.default_rng([self.seed, utt, pos])
        return rng.standard_normal(self.sim.size) * self.noise_sigma


def acoustic_scores(channel: AcousticChannel, true_word: int, candidates: Sequence[int], utt: int, pos: int) -> list[float]:
    if true_word not in candidates:
        raise PrmError("true word must be among the candidates")
    eps = channel.noise(utt, pos)
    return [channel.sim.score(true_word, w) * math.exp(eps[w]) for w in candidates]


def decode_utterance(
    model: ScoringModel,
    channel: AcousticChannel,
    sentence: Sequence[int],
    nb_simil: int,
    utt: int = 0,
    index: ConfusableIndex | None = None,
    right_context: bool = False,
) -> tuple[int, ...]:
    """Decode every content position against the true word's confusables.

    With ``right_context`` each candidate is also scored by p(true next
    word | candidate), i.e. the full probability of the one-substitution
    hypothesis. Returns the boundary-marked hypothesis. Ties go to the true
    word, then to the lowest id.
    """
    if index is None or index.nb_simil != nb_simil or index.matrix is not channel.sim:
        index = ConfusableIndex(channel.sim, nb_simil)
    hyp = [sentence[0]]
    for pos in range(1, len(sentence) - 1):
        prev, truth, nxt = sentence[pos - 1], sentence[pos], sentence[pos + 1]
        candidates = (truth, *index(truth).ids)
        if len(candidates) == 1:
            hyp.append(truth)
            continue
        scores = acoustic_scores(channel, truth, candidates, utt, pos)
        keys = []
        for w, s in zip(candidates, scores):
            key = model.logprob(prev, w) + math.log(s)
            if right_context:
                key += model.logprob(w, nxt)
            keys.append((-key, w != truth, w))
        ranked = min(keys)
        hyp.append(ranked[2])
    hyp.append(sentence[-1])
    return tuple(hyp)


@dataclass(frozen=True)
class UtteranceResult:
    utt_id: str
    positions: int
    correct: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.positions if self.positions else 1.0


@dataclass(frozen=True)
class RecognitionResult:
    per_utterance: tuple[UtteranceResult, ...]

    @property
    def correct(self) -> int:
        return sum(u.correct for u in self.per_utterance)

    @property
    def positions(self) -> int:
        return sum(u.positions for u in self.per_utterance)

    @property
    def overall_accuracy(self) -> float:
        return self.correct / self.positions if self.positions else 1.0


def utt_ids(corpus: EncodedCorpus) -> list[str]:
    width = max(3, len(str(len(corpus.sentences))))
    return [f"utt{i:0{width}d}" for i in range(len(corpus.sentences))]


def recognize(
    model: ScoringModel,
    channel: AcousticChannel,
    corpus: EncodedCorpus,
    nb_simil: int,
    right_context: bool = False,
) -> RecognitionResult:
    index = ConfusableIndex(channel.sim, nb_simil)
    rows = []
    for u, (uid, sent) in enumerate(zip(utt_ids(corpus), corpus.sentences)):
        hyp = decode_utterance(model, channel, sent, nb_simil, u, index, right_context)
        correct = sum(h == t for h, t in zip(hyp[1:-1], sent[1:-1]))
        rows.append(UtteranceResult(uid, len(sent) - 2, correct))
    return RecognitionResult(tuple(rows))


@dataclass(frozen=True)
class MeasureCorrelation:
    nb_simil: int
    measure: str
    r_s: float | None
    reason: str = ""


@dataclass(frozen=True)
class ExperimentReport:
    utt_ids: tuple[str, ...]
    positions: tuple[int, ...]
    accuracy: tuple[float, ...]
    overall_accuracy: float
    perplexity: tuple[float, ...]
    measures: dict[int, tuple[float, ...]]
    log_prm: dict[int, tuple[float, ...]]
    correlations: tuple[MeasureCorrelation, ...]

    def correlation(self, nb_simil: int) -> float | None:
        for c in self.correlations:
            if c.nb_simil == nb_simil:
                return c.r_s
        raise KeyError(nb_simil)


def utterance_measures(
    model: ScoringModel,
    sim: SimilarityMatrix,
    corpus: EncodedCorpus,
    nb_simil: int,
    form: str = "eq8",
) -> tuple[list[float], list[float]]:
    """(measure, raw log PRM) per utterance.

    At ``nb_simil == 0`` the measure is the utterance perplexity and there
    is no raw PRM (NaN); otherwise it is the per-word log PRM.
    """
    if nb_simil == 0:
        ppl = [perplexity(model, corpus.subset([i])) for i in range(len(corpus))]
        return ppl, [math.nan] * len(ppl)
    config = PrmConfig(nb_simil, form, per_word_normalize=False)
    index = ConfusableIndex(sim, nb_simil)
    scores = [sentence_prm(model, sim, s, config, index) for s in corpus.sentences]
    return [s.log_per_word for s in scores], [s.log_value for s in scores]


def run_experiment(
    model: ScoringModel,
    channel: AcousticChannel,
    test: EncodedCorpus,
    nb_simil_values: Sequence[int] = (0, 10, 20, 40, 80),
    decode_nb_simil: int = 80,
    decoder_model: ScoringModel | None = None,
    form: str = "eq8",
    right_context: bool = False,
) -> ExperimentReport:
    """Recognize ``test`` and correlate each measure with per-utterance accuracy.

    ``decoder_model`` defaults to ``model``; pass a context-free model to
    decode with unigram scores while still measuring ``model``.
    """
    if len(test) < 3:
        raise PrmError("need at least 3 test utterances")
    result = recognize(decoder_model or model, channel, test, decode_nb_simil, right_context)
    accuracy = tuple(u.accuracy for u in result.per_utterance)
    ppl = tuple(perplexity(model, test.subset([i])) for i in range(len(test)))
    measures: dict[int, tuple[float, ...]] = {}
    raw: dict[int, tuple[float, ...]] = {}
    correlations = []
    for k in nb_simil_values:
        values, logs = utterance_measures(model, channel.sim, test, k, form)
        measures[k] = tuple(values)
        raw[k] = tuple(logs)
        name = "perplexity" if k == 0 else "prm"
        try:
            correlations.append(MeasureCorrelation(k, name, spearman(values, accuracy)))
        except PrmError as exc:
            correlations.append(MeasureCorrelation(k, name, None, str(exc)))
    return ExperimentReport(
        utt_ids=tuple(u.utt_id for u in result.per_utterance),
        positions=tuple(u.positions for u in result.per_utterance),
        accuracy=accuracy,
        overall_accuracy=result.overall_accuracy,
        perplexity=ppl,
        measures=measures,
        log_prm=raw,
        correlations=tuple(correlations),
    )
