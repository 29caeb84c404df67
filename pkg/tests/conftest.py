import contextlib

import pytest

from prmlm.corpus import build_vocabulary, encode_corpus
from prmlm.ngram import BigramModel

TOY_LINES = [
    "are bar cookie",
    "bar are dinner",
    "cookie bar bar are",
]


@pytest.fixture
def toy_corpus():
    vocab = build_vocabulary(TOY_LINES)
    return encode_corpus(TOY_LINES, vocab)


@pytest.fixture
def toy_model(toy_corpus):
    return BigramModel.estimate(toy_corpus, alpha=1.0)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Context manager recording one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    @contextlib.contextmanager
    def check(number, title):
        notes = []
        try:
            yield notes
        except BaseException:
            lines.append(f"FAIL criterion {number}: {title} {'; '.join(notes)}".rstrip())
            raise
        lines.append(f"PASS criterion {number}: {title} {'; '.join(notes)}".rstrip())
        print(lines[-1])

    return check


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
