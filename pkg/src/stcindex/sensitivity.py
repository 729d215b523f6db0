"""Robustness of rankings to sample composition and weighting choices."""

from __future__ import annotations

import enum
import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from . import pipeline
from .aggregate import aggregate, scores_by_code
from .classify import competition_ranks
from .errors import InputError


class SensitivityKind(str, enum.Enum):
    LEAVE_COUNTRY_OUT = "leave_country_out"
    LEAVE_INDICATOR_OUT = "leave_indicator_out"
    WEIGHT_COMPARISON = "weight_comparison"
    EXTERNAL_CHECK = "external_check"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SensitivityReport:
    kind: SensitivityKind
    subject: str
    spearman: float
    max_rank_shift: int
    shifted: tuple
    dropped: tuple = field(default=())

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "subject": self.subject,
            "spearman": None if math.isnan(self.spearman) else self.spearman,
            "max_rank_shift": self.max_rank_shift,
            "shifted": [{"code": c, "old_rank": o, "new_rank": n} for c, o, n in self.shifted],
            "dropped": list(self.dropped),
        }


def spearman(rank_a, rank_b):
    """Spearman rank correlation of two rankings of the same entities.

    Parameters
    ----------
    rank_a, rank_b : sequence of float, or mapping of entity -> float
        Ranks or scores; they are re-ranked with mid-ranks for ties.
        Sequences are paired by position, mappings by key.

    Returns
    -------
    float
        ``1 - 6 * sum(d^2) / (n (n^2 - 1))`` when neither side has ties,
        otherwise the Pearson correlation of the mid-rank vectors. NaN when
        one side is entirely tied.
    """
    if isinstance(rank_a, Mapping) or isinstance(rank_b, Mapping):
        if not (isinstance(rank_a, Mapping) and isinstance(rank_b, Mapping)):
            raise InputError("spearman: pass two mappings or two sequences")
        if set(rank_a) != set(rank_b):
            raise InputError(
                f"spearman: rankings cover different entities: {sorted(set(rank_a) ^ set(rank_b), key=str)}"
            )
        keys = list(rank_a)
        a = [rank_a[k] for k in keys]
        b = [rank_b[k] for k in keys]
    else:
        a, b = list(rank_a), list(rank_b)
        if len(a) != len(b):
            raise InputError(f"spearman: rankings have different lengths ({len(a)} vs {len(b)})")
    n = len(a)
    if n < 2:
        raise InputError("spearman: need at least 2 entities")
    ra = rankdata(a, method="average")
    rb = rankdata(b, method="average")
    tied = len(set(ra)) < n or len(set(rb)) < n
    if not tied:
        d2 = float(((ra - rb) ** 2).sum())
        return 1.0 - 6.0 * d2 / (n * (n * n - 1))
    da = ra - ra.mean()
    db = rb - rb.mean()
    den = math.sqrt(float(da @ da) * float(db @ db))
    if den == 0.0:
        return math.nan
    return min(1.0, max(-1.0, float(da @ db) / den))


def compare_rankings(scores_a, scores_b, kind, subject):
    """Rank both score maps over their common countries and compare.

    Countries scored in ``scores_a`` only are reported as ``dropped``.
    """
    common = [c for c in scores_a if c in scores_b]
    dropped = tuple(c for c in scores_a if c not in scores_b)
    if len(common) < 2:
        raise InputError(f"only {len(common)} countries in common; cannot compare rankings")
    a = {c: scores_a[c] for c in common}
    b = {c: scores_b[c] for c in common}
    ra, rb = competition_ranks(a), competition_ranks(b)
    shifted = [(c, ra[c], rb[c]) for c in common if ra[c] != rb[c]]
    shifted.sort(key=lambda t: (-abs(t[1] - t[2]), t[0]))
    return SensitivityReport(
        kind=SensitivityKind(kind),
        subject=subject,
        spearman=spearman(a, b),
        max_rank_shift=max((abs(o - n) for _, o, n in shifted), default=0),
        shifted=tuple(shifted),
        dropped=dropped,
    )


def leave_one_country_out(matrix, country, config=None):
    """Recompute the whole pipeline without one country.

    Conversion statistics are recomputed from scratch, so under z-scores
    every other country's value moves; the report compares the remaining
    countries' order before and after.
    """
    config = config or pipeline.PipelineConfig()
    matrix.country_index(country)
    if len(matrix.countries) - 1 < 3:
        raise InputError("leave-one-country-out needs at least 3 remaining countries")
    base = pipeline.scores(matrix, config)
    reduced = pipeline.scores(matrix.drop_country(country), config)
    base.pop(country, None)
    return compare_rankings(base, reduced, SensitivityKind.LEAVE_COUNTRY_OUT, country)


def leave_one_indicator_out(matrix, indicator_id, config=None):
    """Recompute the pipeline without one indicator.

    The weight scheme is restricted to the remaining indicators and
    renormalized. Countries whose only indicator was removed lose their
    score and appear in ``dropped``.
    """
    config = config or pipeline.PipelineConfig()
    matrix.indicator_index(indicator_id)
    if len(matrix.indicators) < 2:
        raise InputError("leave-one-indicator-out needs at least one remaining indicator")
    base = pipeline.scores(matrix, config)
    reduced = pipeline.scores(matrix.drop_indicator(indicator_id), config)
    return compare_rankings(base, reduced, SensitivityKind.LEAVE_INDICATOR_OUT, indicator_id)


def compare_weights(converted, scheme_a, scheme_b):
    """Rank shifts between two weighting schemes on the same converted matrix."""
    a = scores_by_code(aggregate(converted, scheme_a))
    b = scores_by_code(aggregate(converted, scheme_b))
    return compare_rankings(a, b, SensitivityKind.WEIGHT_COMPARISON, f"{scheme_a.name} vs {scheme_b.name}")


def compare_external(results, external, subject="external"):
    """Rank agreement between composite scores and an outside variable."""
    a = scores_by_code(results) if not isinstance(results, Mapping) else dict(results)
    b = {k: float(v) for k, v in external.items() if v is not None and not np.isnan(v)}
    a = {k: v for k, v in a.items() if k in b}
    return compare_rankings(a, b, SensitivityKind.EXTERNAL_CHECK, subject)


def all_countries_out(matrix, config=None):
    return [leave_one_country_out(matrix, c, config) for c in matrix.codes]


def all_indicators_out(matrix, config=None):
    return [leave_one_indicator_out(matrix, i, config) for i in matrix.indicator_ids]


def format_report_text(report):
    rho = "n/a" if math.isnan(report.spearman) else f"{report.spearman:.4f}"
    lines = [
        f"{report.kind.value}: {report.subject}",
        f"  spearman {rho}, max rank shift {report.max_rank_shift}",
    ]
    if report.dropped:
        lines.append(f"  dropped: {', '.join(report.dropped)}")
    if report.shifted:
        lines.append(f"  {'code':<6}{'old':>5}{'new':>5}{'shift':>7}")
        for c, o, n in report.shifted:
            lines.append(f"  {c:<6}{o:>5}{n:>5}{n - o:>+7}")
    return "\n".join(lines)


def reports_json(reports, header=None):
    doc = {"reports": [r.to_dict() for r in reports]}
    if header is not None:
        doc["config"] = header
    return json.dumps(doc, indent=2, sort_keys=True)
