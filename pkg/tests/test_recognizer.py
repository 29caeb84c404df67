import math
import statistics

import pytest

from prmlm.corpus import BOS_ID, EOS_ID, Vocabulary, build_vocabulary, encode_corpus
from prmlm.errors import PrmError
from prmlm.ngram import BigramCounts, BigramModel, UnigramModel, perplexity
from prmlm.recognizer import (
    AcousticChannel,
    acoustic_scores,
    decode_utterance,
    recognize,
    run_experiment,
)
from prmlm.similarity import SimilarityMatrix, proxy_similarity

WORDS = ["are", "bar", "cookie", "dinner"]
VOCAB = Vocabulary.from_words(WORDS)
ARE, BAR, COOKIE, DINNER = (VOCAB.lookup(w) for w in WORDS)
SIM = SimilarityMatrix.from_pairs(len(VOCAB), {(BAR, ARE): 0.9})
LM1 = UnigramModel.from_mapping(VOCAB, {"are": 0.4, "bar": 0.3, "cookie": 0.2, "dinner": 0.1})
LM2 = UnigramModel.from_mapping(VOCAB, {"are": 0.1, "bar": 0.2, "cookie": 0.3, "dinner": 0.4})
BAR_SENTENCE = (BOS_ID, BAR, EOS_ID)


def test_unigram_worked_example():
    channel = AcousticChannel(SIM, 0.0)
    assert decode_utterance(LM1, channel, BAR_SENTENCE, 1) == (BOS_ID, ARE, EOS_ID)
    assert decode_utterance(LM2, channel, BAR_SENTENCE, 1) == BAR_SENTENCE
    assert 0.4 * 0.9 > 0.3 and 0.1 * 0.9 < 0.2


def test_zero_noise_scores_are_similarity():
    channel = AcousticChannel(SIM, 0.0)
    assert acoustic_scores(channel, BAR, [BAR, ARE], 0, 1) == [1.0, 0.9]


def test_true_word_score_is_noise_only():
    channel = AcousticChannel(SIM, 0.7, seed=3)
    eps = channel.noise(2, 5)
    assert acoustic_scores(channel, BAR, [BAR, ARE], 2, 5)[0] == math.exp(eps[BAR])


def test_scores_reproducible():
    a = acoustic_scores(AcousticChannel(SIM, 0.5, seed=11), BAR, [BAR, ARE], 4, 2)
    b = acoustic_scores(AcousticChannel(SIM, 0.5, seed=11), BAR, [BAR, ARE], 4, 2)
    c = acoustic_scores(AcousticChannel(SIM, 0.5, seed=12), BAR, [BAR, ARE], 4, 2)
    assert a == b
    assert a != c
    with pytest.raises(PrmError):
        acoustic_scores(AcousticChannel(SIM), BAR, [ARE], 0, 1)


def test_no_competitors_decodes_truth():
    channel = AcousticChannel(SIM, 2.0)
    assert decode_utterance(LM1, channel, BAR_SENTENCE, 0) == BAR_SENTENCE


def test_uniform_lm_decodes_truth():
    uniform = UnigramModel.from_mapping(VOCAB, {w: 0.25 for w in WORDS})
    full = SimilarityMatrix.from_pairs(len(VOCAB), {(a, b): 0.99 for a in range(3, 7) for b in range(3, 7) if a < b})
    sent = (BOS_ID, ARE, BAR, COOKIE, DINNER, EOS_ID)
    assert decode_utterance(uniform, AcousticChannel(full, 0.0), sent, 3) == sent


def test_tie_prefers_truth():
    tied = UnigramModel.from_mapping(VOCAB, {"are": 0.3, "bar": 0.3, "cookie": 0.2, "dinner": 0.2})
    unit = SimilarityMatrix.from_pairs(len(VOCAB), {(BAR, ARE): 1.0})
    assert decode_utterance(tied, AcousticChannel(unit), BAR_SENTENCE, 1) == BAR_SENTENCE


def test_right_context_option():
    # bigram rows: after <s> 'are' is likelier, but 'are' almost never precedes </s>
    counts = {(BOS_ID, ARE): 8, (BOS_ID, BAR): 6, (BAR, EOS_ID): 20, (ARE, COOKIE): 20}
    model = BigramModel(VOCAB, 0.1, BigramCounts({}, counts, {BOS_ID: 14, BAR: 20, ARE: 20}))
    channel = AcousticChannel(SIM, 0.0)
    assert decode_utterance(model, channel, BAR_SENTENCE, 1) == (BOS_ID, ARE, EOS_ID)
    assert decode_utterance(model, channel, BAR_SENTENCE, 1, right_context=True) == BAR_SENTENCE


def corpus_and_model():
    lines = ["bar are cookie", "are bar dinner are", "cookie cookie bar", "dinner are bar bar"]
    vocab = build_vocabulary(lines)
    corpus = encode_corpus(lines, vocab)
    return corpus, BigramModel.estimate(corpus, 0.5), proxy_similarity(vocab, 0.5)


def test_recognize_accounting():
    corpus, model, sim = corpus_and_model()
    result = recognize(model, AcousticChannel(sim, 1.0, seed=5), corpus, 3)
    assert result.correct == sum(u.correct for u in result.per_utterance)
    for u, s in zip(result.per_utterance, corpus.sentences):
        assert u.positions == len(s) - 2
        assert u.accuracy == u.correct / u.positions
    assert 0 <= result.overall_accuracy <= 1
    assert recognize(model, AcousticChannel(sim, 1.0, seed=5), corpus, 0).overall_accuracy == 1.0


def test_margin_condition_gives_full_accuracy():
    corpus, model, sim = corpus_and_model()
    scaled = sim.scaled(1e-3)
    # every confusable has p(alt|prev) * Sim far below p(true|prev)
    for s in corpus.sentences:
        for i in range(1, len(s) - 1):
            for a, sc in scaled.neighbors(s[i]).items():
                assert model.prob(s[i - 1], s[i]) > model.prob(s[i - 1], a) * sc
    assert recognize(model, AcousticChannel(scaled, 0.0), corpus, 10).overall_accuracy == 1.0


def test_order_independent_decoding():
    corpus, model, sim = corpus_and_model()
    channel = AcousticChannel(sim, 1.5, seed=9)
    full = recognize(model, channel, corpus, 3)
    for u, s in enumerate(corpus.sentences):
        alone = decode_utterance(model, channel, s, 3, utt=u)
        assert sum(h == t for h, t in zip(alone[1:-1], s[1:-1])) == full.per_utterance[u].correct


def test_accuracy_falls_with_noise_on_average():
    corpus, model, sim = corpus_and_model()
    means = []
    for sigma in (0.0, 0.5, 1.5, 3.0):
        accs = [recognize(model, AcousticChannel(sim, sigma, seed), corpus, 5).overall_accuracy for seed in range(20)]
        means.append(statistics.fmean(accs))
    assert all(b <= a + 1e-12 for a, b in zip(means, means[1:]))


def test_experiment_perplexity_row_is_bitwise():
    corpus, model, sim = corpus_and_model()
    report = run_experiment(model, AcousticChannel(sim, 1.0, seed=1), corpus, (0, 2))
    assert report.measures[0] == tuple(perplexity(model, corpus.subset([i])) for i in range(len(corpus)))
    assert report.measures[0] == report.perplexity


def test_experiment_degenerate_accuracy():
    corpus, model, sim = corpus_and_model()
    report = run_experiment(model, AcousticChannel(sim, 0.0), corpus, (0, 2), decode_nb_simil=0)
    assert set(report.accuracy) == {1.0}
    assert all(c.r_s is None and "degenerate" in c.reason for c in report.correlations)


def test_experiment_needs_three():
    corpus, model, sim = corpus_and_model()
    with pytest.raises(PrmError):
        run_experiment(model, AcousticChannel(sim), corpus.subset([0, 1]))


def test_negative_sigma():
    with pytest.raises(PrmError):
        AcousticChannel(SIM, -1.0)
