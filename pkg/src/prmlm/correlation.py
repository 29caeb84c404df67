"""Spearman rank-order correlation with midrank ties."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import PrmError


def midranks(values: Sequence[float]) -> list[float]:
    """1-based ranks; tied values share the mean of the ranks they span."""
    order = sorted(range(len(values)), key=lambda k: values[k])
    ranks = [0.0] * len(values)
    start = 0
    while start < len(order):
        end = start
        while end + 1 < len(order) and values[order[end + 1]] == values[order[start]]:
            end += 1
        rank = (start + end) / 2 + 1
        for k in order[start:end + 1]:
            ranks[k] = rank
        start = end + 1
    return ranks


def _pearson(x: Sequence[float], y: Sequence[float]) -> float:
    n = len(x)
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = math.fsum((a - mx) ** 2 for a in x)
    syy = math.fsum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        raise PrmError("degenerate samples: zero variance")
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman r_S of paired samples (Pearson correlation of midranks)."""
    if len(x) != len(y):
        raise PrmError("x and y differ in length")
    if len(x) < 3:
        raise PrmError("need at least 3 paired samples")
    if not all(math.isfinite(v) for v in (*x, *y)):
        raise PrmError("samples must be finite")
    return _pearson(midranks(x), midranks(y))


@dataclass(frozen=True)
class PairedSamples:
    x: tuple[float, ...]
    y: tuple[float, ...]
    labels: tuple[str, ...] | None = None

    def spearman(self) -> float:
        return spearman(self.x, self.y)


def read_paired_tsv(path) -> PairedSamples:
    """Read ``utt-id<TAB>measure<TAB>accuracy`` rows (``#`` lines skipped)."""
    labels, xs, ys = [], [], []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise PrmError(f"{path}:{lineno}: expected 3 tab-separated fields")
            try:
                x, y = float(parts[1]), float(parts[2])
            except ValueError:
                raise PrmError(f"{path}:{lineno}: non-numeric value") from None
            labels.append(parts[0])
            xs.append(x)
            ys.append(y)
    return PairedSamples(tuple(xs), tuple(ys), tuple(labels))
