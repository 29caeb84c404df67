"""Bundled synthetic fixture for the correlation experiment.

The vocabulary is a set of word families: a four-letter stem plus variants
one letter away, so the edit-distance proxy makes family members strongly
confusable and unrelated words weakly so. Sentences come from a random
bigram source with two kinds of variation across contexts:

* how many families a context predicts (narrow vs broad), which mostly
  moves perplexity;
* whether one family member dominates or members compete, which mostly
  moves how often the recognizer confuses them.

Members of a family share half of their successor distribution, like
words of the same syntactic class. The channel noise is the first grid
value whose overall accuracy lands nearest 0.85 inside [0.75, 0.95].
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .corpus import EncodedCorpus, Vocabulary, build_vocabulary, encode_corpus
from .ngram import DEFAULT_ALPHA, BigramModel
from .recognizer import AcousticChannel, recognize
from .similarity import SimilarityMatrix, proxy_similarity

CONSONANTS = "bdgkmpst"
VOWELS = "aeiou"
SIGMA_GRID = tuple(round(0.1 * i, 1) for i in range(0, 31))
TARGET_ACCURACY = 0.85
ACCURACY_BAND = (0.75, 0.95)


@dataclass(frozen=True)
class DemoConfig:
    seed: int = 42
    n_families: int = 30
    family_size: int = 8
    n_train: int = 5000
    n_test: int = 60
    family_spread: tuple[float, ...] = (0.1, 1.0)
    member_spread: tuple[float, ...] = (0.1, 2.0)
    shared_successors: float = 0.5
    stop_prob: float = 0.12
    temperature: float = 0.2
    alpha: float = DEFAULT_ALPHA
    decode_nb_simil: int = 80
    right_context: bool = True


@dataclass(frozen=True)
class DemoFixture:
    config: DemoConfig
    vocab: Vocabulary = field(repr=False)
    train_lines: tuple[str, ...] = field(repr=False)
    test_lines: tuple[str, ...] = field(repr=False)
    train: EncodedCorpus = field(repr=False)
    test: EncodedCorpus = field(repr=False)
    model: BigramModel = field(repr=False)
    sim: SimilarityMatrix = field(repr=False)
    sigma: float
    channel: AcousticChannel = field(repr=False)


def word_families(n_families: int, size: int, rng: np.random.Generator) -> list[list[str]]:
    """Disjoint families of CVCV words, each variant one letter from its stem."""
    syllables = ["".join(p) for p in itertools.product(CONSONANTS, VOWELS)]
    used: set[str] = set()
    families = []
    while len(families) < n_families:
        stem = syllables[rng.integers(len(syllables))] + syllables[rng.integers(len(syllables))]
        family = [stem]
        for _ in range(50):
            if len(family) == size:
                break
            pos = int(rng.integers(4))
            letters = CONSONANTS if pos % 2 == 0 else VOWELS
            variant = stem[:pos] + letters[rng.integers(len(letters))] + stem[pos + 1:]
            if variant not in family:
                family.append(variant)
        if len(family) == size and not used.intersection(family):
            used.update(family)
            families.append(family)
    return families


def source_transitions(config: DemoConfig, rng: np.random.Generator) -> np.ndarray:
    """Row 0 is the sentence-start context, row i+1 follows word i."""
    n_fam, size = config.n_families, config.family_size
    n_words = n_fam * size
    rows = np.zeros((n_words + 1, n_words))
    for r in range(n_words + 1):
        fam_weights = rng.dirichlet(np.full(n_fam, rng.choice(config.family_spread)))
        member_conc = rng.choice(config.member_spread)
        for f in range(n_fam):
            rows[r, f * size:(f + 1) * size] = fam_weights[f] * rng.dirichlet(np.full(size, member_conc))
    share = config.shared_successors
    for f in range(n_fam):
        first = 1 + f * size
        shared = rows[first].copy()
        rows[first:first + size] = share * shared + (1 - share) * rows[first:first + size]
    return rows


def sample_sentences(
    words: list[str], n: int, rng: np.random.Generator, transitions: np.ndarray, stop_prob: float
) -> list[str]:
    """At least three words per sentence, then stop with ``stop_prob`` after each word."""
    lines = []
    for _ in range(n):
        prev, sent = 0, []
        while True:
            w = rng.choice(len(words), p=transitions[prev])
            sent.append(words[w])
            prev = w + 1
            if len(sent) >= 3 and rng.random() < stop_prob:
                break
        lines.append(" ".join(sent))
    return lines


def make_demo(config: DemoConfig = DemoConfig()) -> DemoFixture:
    rng = np.random.default_rng(config.seed)
    words = [w for fam in word_families(config.n_families, config.family_size, rng) for w in fam]
    transitions = source_transitions(config, rng)
    train_lines = sample_sentences(words, config.n_train, rng, transitions, config.stop_prob)
    test_lines = sample_sentences(words, config.n_test, rng, transitions, config.stop_prob)
    vocab = build_vocabulary(train_lines + test_lines)
    train = encode_corpus(train_lines, vocab)
    test = encode_corpus(test_lines, vocab)
    model = BigramModel.estimate(train, config.alpha)
    sim = proxy_similarity(vocab, config.temperature)
    sigma, channel = choose_sigma(model, sim, test, config)
    return DemoFixture(config, vocab, tuple(train_lines), tuple(test_lines), train, test, model, sim, sigma, channel)


def choose_sigma(model, sim, test, config: DemoConfig) -> tuple[float, AcousticChannel]:
    """Grid noise level with accuracy nearest the target inside the band.

    The scan stops once accuracy drops below the band.
    """
    best = None
    for sigma in SIGMA_GRID:
        channel = AcousticChannel(sim, sigma, config.seed)
        acc = recognize(model, channel, test, config.decode_nb_simil, config.right_context).overall_accuracy
        inside = ACCURACY_BAND[0] <= acc <= ACCURACY_BAND[1]
        key = (not inside, abs(acc - TARGET_ACCURACY), sigma)
        if best is None or key < best[0]:
            best = (key, sigma, channel)
        if acc < ACCURACY_BAND[0]:
            break
    return best[1], best[2]
