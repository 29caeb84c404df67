import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from prmlm.corpus import BOS_ID, EOS_ID, UNK_ID, Vocabulary, build_vocabulary, encode_corpus
from prmlm.errors import PrmError
from prmlm.ngram import BigramModel
from prmlm.prm import PrmConfig, position_factor, prm_score, sentence_prm, substitution_ratio
from prmlm.similarity import SimilarityMatrix, confusable_set


class TableModel:
    """p(w|v) from an explicit table; rows given as {prev: {w: p}}."""

    def __init__(self, vocab, rows):
        self.vocab = vocab
        self.rows = rows

    def prob(self, prev, w):
        return self.rows[prev][w]

    def logprob(self, prev, w):
        return math.log(self.rows[prev][w])


WORDS = ["are", "bar", "cookie", "dinner"]
VOCAB = Vocabulary.from_words(WORDS)
ARE, BAR, COOKIE, DINNER = (VOCAB.lookup(w) for w in WORDS)
LM1 = {"are": 0.4, "bar": 0.3, "cookie": 0.2, "dinner": 0.1}


def four_word_model(probs, eos=0.2):
    """Context-free word distribution scaled by (1 - eos), plus an EOS mass."""
    row = {VOCAB.lookup(w): p * (1 - eos) for w, p in probs.items()}
    row[EOS_ID] = eos
    row[UNK_ID] = 0.0
    return TableModel(VOCAB, {v: row for v in range(len(VOCAB)) if v != EOS_ID})


FOUR_WORD_SIM = SimilarityMatrix.from_pairs(
    len(VOCAB), {(BAR, ARE): 0.9, (COOKIE, DINNER): 0.5, (BAR, COOKIE): 0.2, (ARE, DINNER): 0.1}
)


def brute_eq7(model, sim, sentence, sets):
    """Product over positions of the geometric-mean substitution ratio."""
    product = 1.0
    for i in range(1, len(sentence) - 1):
        alts = sets[sentence[i]]
        if not alts:
            continue
        prev, c, nxt = sentence[i - 1], sentence[i], sentence[i + 1]
        inner = 1.0
        for a in alts:
            inner *= (model.prob(prev, c) * model.prob(c, nxt)) / (model.prob(prev, a) * model.prob(a, nxt)) * sim.score(c, a)
        product *= inner ** (1 / len(alts))
    return math.log(product)


def test_substitution_ratio_cancels():
    uniform = TableModel(VOCAB, {v: {w: 0.2 for w in range(len(VOCAB))} for v in range(len(VOCAB))})
    sim = SimilarityMatrix.from_pairs(len(VOCAB), {(BAR, ARE): 0.5})
    assert substitution_ratio(uniform, sim, BOS_ID, BAR, EOS_ID, ARE) == pytest.approx(math.log(0.5), abs=1e-15)


def test_substitution_ratio_rejects_identity_and_zero_sim():
    model = four_word_model(LM1)
    with pytest.raises(PrmError):
        substitution_ratio(model, FOUR_WORD_SIM, BOS_ID, BAR, EOS_ID, BAR)
    with pytest.raises(PrmError, match="not a confusable pair"):
        substitution_ratio(model, FOUR_WORD_SIM, BOS_ID, BAR, EOS_ID, DINNER)


def test_substitution_ratio_four_words():
    model = four_word_model(LM1)
    # context-free model: right-context ratio is 1, so the value is log(0.3/0.4 * 0.9)
    assert substitution_ratio(model, FOUR_WORD_SIM, BOS_ID, BAR, COOKIE, ARE) == pytest.approx(math.log(0.675), abs=1e-12)
    lm2 = four_word_model({"are": 0.1, "bar": 0.2, "cookie": 0.3, "dinner": 0.4})
    assert substitution_ratio(lm2, FOUR_WORD_SIM, BOS_ID, BAR, COOKIE, ARE) == pytest.approx(math.log(1.8), abs=1e-12)


def test_position_factor_cases():
    model = four_word_model(LM1)
    sentence = (BOS_ID, BAR, COOKIE, EOS_ID)
    assert position_factor(model, FOUR_WORD_SIM, sentence, 1, 0) == 0.0
    single = position_factor(model, FOUR_WORD_SIM, sentence, 1, 1)
    assert single == substitution_ratio(model, FOUR_WORD_SIM, BOS_ID, BAR, COOKIE, ARE)
    two = position_factor(model, FOUR_WORD_SIM, sentence, 1, 2)
    terms = [
        math.log(0.3 / 0.4 * 0.9),
        math.log(0.3 / 0.2 * 0.2),
    ]
    assert two == pytest.approx(sum(terms) / 2, abs=1e-12)
    with pytest.raises(PrmError):
        position_factor(model, FOUR_WORD_SIM, sentence, 0, 1)


def test_uniform_model_unit_similarity():
    vocab = Vocabulary.from_words(["a", "b", "c"])
    uniform = TableModel(vocab, {v: {w: 0.25 for w in range(len(vocab))} for v in range(len(vocab))})
    sim = SimilarityMatrix.from_pairs(len(vocab), {(3, 4): 1.0, (3, 5): 1.0, (4, 5): 1.0})
    corpus = encode_corpus(["a b c", "c c a"], vocab)
    for form in ("eq7", "eq8"):
        score = prm_score(uniform, sim, corpus, PrmConfig(2, form, per_word_normalize=False))
        assert score.log_value == pytest.approx(0.0, abs=1e-15)


def test_four_word_fixture_oracle():
    model = four_word_model(LM1)
    sentence = (BOS_ID, BAR, COOKIE, DINNER, ARE, EOS_ID)
    corpus = encode_corpus(["bar cookie dinner are"], VOCAB)
    assert corpus.sentences[0] == sentence
    for k in (1, 2, 3):
        sets = {w: confusable_set(FOUR_WORD_SIM, w, k).ids for w in VOCAB.content_ids}
        expected = brute_eq7(model, FOUR_WORD_SIM, sentence, sets)
        for form in ("eq7", "eq8"):
            got = prm_score(model, FOUR_WORD_SIM, corpus, PrmConfig(k, form, per_word_normalize=False))
            assert got.log_value == pytest.approx(expected, abs=1e-12)
            assert got.positions_scored == 4
    # k = 1: bar->are, cookie->dinner, dinner->cookie, are->bar
    assert brute_eq7(model, FOUR_WORD_SIM, sentence, {BAR: (ARE,), COOKIE: (DINNER,), DINNER: (COOKIE,), ARE: (BAR,)}) == (
        pytest.approx(math.log(0.3 / 0.4 * 0.9 * 0.2 / 0.1 * 0.5 * 0.1 / 0.2 * 0.5 * 0.4 / 0.3 * 0.9), abs=1e-12)
    )


def test_zero_nbsimil_routes_to_perplexity():
    corpus = encode_corpus(["bar"], VOCAB)
    with pytest.raises(PrmError, match="perplexity"):
        prm_score(four_word_model(LM1), FOUR_WORD_SIM, corpus, PrmConfig(0))


def test_breakdown_and_normalization():
    model = four_word_model(LM1)
    corpus = encode_corpus(["bar cookie", "dinner are bar"], VOCAB)
    for form in ("eq7", "eq8"):
        raw = prm_score(model, FOUR_WORD_SIM, corpus, PrmConfig(2, form, False), keep_breakdown=True)
        assert math.fsum(raw.per_position) == pytest.approx(raw.log_value, abs=1e-9)
        norm = prm_score(model, FOUR_WORD_SIM, corpus, PrmConfig(2, form, True), keep_breakdown=True)
        assert norm.log_value == pytest.approx(raw.log_value / 5, abs=1e-12)
        assert math.fsum(norm.per_position) == pytest.approx(norm.log_value, abs=1e-9)


def test_empty_sets_contribute_zero():
    model = four_word_model(LM1)
    lonely = SimilarityMatrix.from_pairs(len(VOCAB), {(BAR, ARE): 0.9})
    sentence = (BOS_ID, COOKIE, BAR, DINNER, EOS_ID)
    score = sentence_prm(model, lonely, sentence, PrmConfig(3, "eq7"), keep_breakdown=True)
    assert score.per_position[0] == 0.0
    assert score.per_position[2] == 0.0
    assert score.per_position[1] != 0.0


def random_instance(rng):
    n_words = rng.randint(3, 27)
    words = [f"w{i}" for i in range(n_words)]
    lines = [" ".join(rng.choice(words) for _ in range(rng.randint(1, 8))) for _ in range(rng.randint(1, 20))]
    vocab = build_vocabulary(lines)
    corpus = encode_corpus(lines, vocab)
    model = BigramModel.estimate(corpus, alpha=rng.choice([0.1, 0.5, 1.0]))
    pairs = {}
    content = list(vocab.content_ids)
    for a in content:
        for b in content:
            if a < b and rng.random() < 0.4:
                pairs[a, b] = rng.uniform(0.01, 1.0)
    return model, SimilarityMatrix.from_pairs(len(vocab), pairs), corpus


def test_eq7_eq8_equivalence_random():
    rng = random.Random(3)
    for _ in range(100):
        model, sim, corpus = random_instance(rng)
        for k in (1, 3, 5):
            e7 = prm_score(model, sim, corpus, PrmConfig(k, "eq7", False))
            e8 = prm_score(model, sim, corpus, PrmConfig(k, "eq8", False))
            assert abs(e7.log_value - e8.log_value) < 1e-9 * max(1, e7.positions_scored)


def test_eq7_against_brute_force_random():
    rng = random.Random(11)
    for _ in range(30):
        model, sim, corpus = random_instance(rng)
        sets = {w: confusable_set(sim, w, 3).ids for w in range(UNK_ID, len(model.vocab))}
        expected = math.fsum(brute_eq7(model, sim, s, sets) for s in corpus.sentences)
        got = prm_score(model, sim, corpus, PrmConfig(3, "eq7", False))
        assert got.log_value == pytest.approx(expected, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 1.0))
def test_similarity_scaling(seed, c):
    model, sim, corpus = random_instance(random.Random(seed))
    config = PrmConfig(3, "eq8", False)
    base = prm_score(model, sim, corpus, config)
    scaled = prm_score(model, sim.scaled(c), corpus, config)
    nonempty = sum(1 for s in corpus.sentences for w in s[1:-1] if len(confusable_set(sim, w, 3)))
    assert scaled.log_value - base.log_value == pytest.approx(nonempty * math.log(c), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_sentence_order_invariance(seed):
    rng = random.Random(seed)
    model, sim, corpus = random_instance(rng)
    order = list(range(len(corpus)))
    rng.shuffle(order)
    config = PrmConfig(3, "eq8", True)
    a = prm_score(model, sim, corpus, config).log_value
    b = prm_score(model, sim, corpus.subset(order), config).log_value
    assert a == pytest.approx(b, abs=1e-12)


@pytest.mark.parametrize("delta", [0.01, 0.05, 0.1, 0.19])
def test_monotone_in_correct_probability(delta):
    sim = SimilarityMatrix.from_pairs(len(VOCAB), {(BAR, ARE): 0.9, (BAR, COOKIE): 0.3})
    sentence = (BOS_ID, BAR, EOS_ID)
    base_row = {ARE: 0.2, BAR: 0.3, COOKIE: 0.2, DINNER: 0.1, EOS_ID: 0.2, UNK_ID: 0.0}
    rows = {v: dict(base_row) for v in range(len(VOCAB)) if v != EOS_ID}
    before = sentence_prm(TableModel(VOCAB, rows), sim, sentence, PrmConfig(2, "eq8")).log_value
    bumped = {v: dict(r) for v, r in rows.items()}
    bumped[BOS_ID][BAR] += delta
    bumped[BOS_ID][ARE] -= delta
    assert math.fsum(bumped[BOS_ID].values()) == pytest.approx(1.0)
    after = sentence_prm(TableModel(VOCAB, bumped), sim, sentence, PrmConfig(2, "eq8")).log_value
    assert after >= before


def test_unknown_form():
    with pytest.raises(PrmError):
        PrmConfig(1, "eq9")
