"""Probability ratio measure toolkit for bigram language models.

Scores language models by how strongly they prefer the correct word over
acoustically confusable alternatives, rather than by raw likelihood.
"""

__version__ = "0.1.0"

from .corpus import EncodedCorpus, Vocabulary, build_vocabulary, encode_corpus
from .ngram import BigramCounts, BigramModel, UnigramModel, count_bigrams, perplexity
from .similarity import ConfusableSet, SimilarityMatrix, confusable_set, load_similarity, proxy_similarity
from .prm import PrmConfig, PrmScore, prm_score
from .correlation import spearman

__all__ = [
    "BigramCounts",
    "BigramModel",
    "ConfusableSet",
    "EncodedCorpus",
    "PrmConfig",
    "PrmScore",
    "SimilarityMatrix",
    "UnigramModel",
    "Vocabulary",
    "build_vocabulary",
    "confusable_set",
    "count_bigrams",
    "encode_corpus",
    "load_similarity",
    "perplexity",
    "prm_score",
    "proxy_similarity",
    "spearman",
]
