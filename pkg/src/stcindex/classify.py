"""Ranking and standard-deviation bands for composite scores."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass

import numpy as np

from .dataset import format_number
from .errors import DegenerateColumnError, InsufficientDataError

BAND_CONVENTION = (
    "bands at mean +/- 1 population sd of composite scores: "
    "advanced >= mean+sd > proficient >= mean > developing >= mean-sd > lagging"
)


class Band(str, enum.Enum):
    ADVANCED = "advanced"
    PROFICIENT = "proficient"
    DEVELOPING = "developing"
    LAGGING = "lagging"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Classification:
    code: str
    rank: int
    band: Band
    score: float


def competition_ranks(scores):
    """Rank a ``{code: score}`` mapping, highest first; ties share the best rank.

    >>> competition_ranks({"A": 1.0, "B": 1.0, "C": 0.0})
    {'A': 1, 'B': 1, 'C': 3}
    """
    values = np.array(list(scores.values()), dtype=float)
    return {code: int((values > s).sum()) + 1 for code, s in scores.items()}


def band_for(score, mean, sd):
    if score >= mean + sd:
        return Band.ADVANCED
    if score >= mean:
        return Band.PROFICIENT
    if score >= mean - sd:
        return Band.DEVELOPING
    return Band.LAGGING


def classify(results):
    """Rank scored countries and assign bands around the score mean.

    Parameters
    ----------
    results : iterable of CompositeResult, or mapping of code -> score
        Entries with ``score=None`` are skipped.

    Returns
    -------
    list of Classification
        Ordered by rank, ties by country code.
    """
    if hasattr(results, "items"):
        scores = {c: float(s) for c, s in results.items() if s is not None}
    else:
        scores = {r.code: float(r.score) for r in results if r.score is not None}
    if len(scores) < 2:
        raise InsufficientDataError(f"classification needs at least 2 scored countries, got {len(scores)}")
    values = np.array(list(scores.values()))
    if values.min() == values.max():
        raise DegenerateColumnError("all composite scores are equal; bands are undefined", subject="score")
    mean = float(values.mean())
    sd = float(values.std())
    ranks = competition_ranks(scores)
    out = [Classification(c, ranks[c], band_for(s, mean, sd), s) for c, s in scores.items()]
    out.sort(key=lambda k: (k.rank, k.code))
    return out


def band_counts(classifications):
    counts = {b: 0 for b in Band}
    for c in classifications:
        counts[c.band] += 1
    return counts


def classification_csv(classifications, names=None, header_lines=()):
    """``rank,code,name,score,band`` rows in rank order."""
    names = names or {}
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "code", "name", "score", "band"])
    for c in classifications:
        w.writerow([c.rank, c.code, names.get(c.code, ""), format_number(c.score), c.band.value])
    return buf.getvalue()
