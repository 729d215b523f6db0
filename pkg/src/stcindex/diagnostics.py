"""Internal-consistency diagnostics for an indicator panel.

Covers the spread of each indicator around its mean (summary statistics and
converted ranges), pairwise Pearson correlations between indicators, a
cross-check of published summary tables, and histogram plot data.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import InputError, InsufficientDataError
from .normalize import ColumnStats, Method, column_stats, table_number

DEFAULT_CORR_THRESHOLD = 0.9
DEFAULT_SKEW_THRESHOLD = 2.0
DEFAULT_RANGE_RATIO = 3.0
MIN_OVERLAP = 3

TIME_CONSISTENCY_NOTE = (
    "consistency through time not assessed: requires multi-year panels of each "
    "indicator (growth rates and volatility), which a single cross-section lacks"
)


class FlagKind(str, enum.Enum):
    HIGH_SKEW = "high_skew"
    SUBSTITUTE_PAIR = "substitute_pair"
    COMPLEMENT_PAIR = "complement_pair"
    ASYMMETRIC_RANGE = "asymmetric_range"
    DEGENERATE = "degenerate"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Flag:
    kind: FlagKind
    subject: str
    detail: str
    value: float | None = None

    def to_dict(self):
        return {"kind": self.kind.value, "subject": self.subject, "detail": self.detail, "value": self.value}


@dataclass(frozen=True, eq=False)
class DiagnosticsReport:
    indicator_ids: tuple
    summary: tuple
    correlation: np.ndarray | None
    ranges: tuple | None
    flags: tuple
    thresholds: dict = field(default_factory=dict)
    notes: tuple = ()

    def flags_of(self, kind):
        kind = FlagKind(kind)
        return [f for f in self.flags if f.kind is kind]

    def to_dict(self):
        def num(v):
            return None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v)

        return {
            "indicators": list(self.indicator_ids),
            "thresholds": dict(self.thresholds),
            "summary": [None if s is None else s.to_dict() for s in self.summary],
            "correlation": None
            if self.correlation is None
            else [[num(v) for v in row] for row in self.correlation],
            "ranges": None
            if self.ranges is None
            else [None if r is None else {"min": r[0], "max": r[1]} for r in self.ranges],
            "flags": [f.to_dict() for f in self.flags],
            "notes": list(self.notes),
        }


def pearson(x, y):
    """Pearson R of two equal-length float arrays; NaN if either is constant."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return math.nan
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def correlation_matrix(matrix, *, min_overlap=MIN_OVERLAP):
    """Pairwise-complete Pearson correlations between indicator columns.

    Parameters
    ----------
    matrix : DataMatrix or ConvertedMatrix or ndarray
    min_overlap : int, default=3
        Cells whose two columns share fewer countries, or where either
        column is constant over the shared countries, are NaN
        (unavailable), never zero.

    Returns
    -------
    ndarray of shape (n_indicators, n_indicators)
        Symmetric with a unit diagonal.
    """
    X = np.asarray(getattr(matrix, "values", matrix), dtype=float)
    k = X.shape[1]
    present = ~np.isnan(X)
    out = np.eye(k)
    for a in range(k):
        for b in range(a + 1, k):
            both = present[:, a] & present[:, b]
            r = pearson(X[both, a], X[both, b]) if both.sum() >= min_overlap else math.nan
            out[a, b] = out[b, a] = r
    return out


def range_table(converted):
    """(min, max) of present converted values per indicator; None if all missing."""
    out = []
    for j in range(converted.values.shape[1]):
        col = converted.values[:, j]
        col = col[~np.isnan(col)]
        out.append((float(col.min()), float(col.max())) if col.size else None)
    return tuple(out)


def consistency_check(
    converted=None,
    *,
    summary=None,
    correlation=None,
    ranges=None,
    indicator_ids=None,
    corr_threshold=DEFAULT_CORR_THRESHOLD,
    skew_threshold=DEFAULT_SKEW_THRESHOLD,
    range_ratio=DEFAULT_RANGE_RATIO,
):
    """Flag indicators and pairs that threaten internal consistency.

    Any of ``summary``, ``correlation`` and ``ranges`` may be passed
    directly (e.g. from published tables); missing parts are derived from
    ``converted`` when it is given. Range asymmetry is only assessed for
    z-score conversions, where 0 is the international average.

    Flags raised:

    * ``substitute_pair`` when R >= ``corr_threshold``,
    * ``complement_pair`` when R <= -``corr_threshold``,
    * ``high_skew`` when |skewness| >= ``skew_threshold``,
    * ``asymmetric_range`` when |max| / |min| >= ``range_ratio``,
    * ``degenerate`` for indicators with zero spread or too few values.
    """
    check_ranges = True
    if converted is not None:
        indicator_ids = indicator_ids or converted.indicator_ids
        if summary is None:
            summary = converted.per_indicator_stats
        if correlation is None:
            correlation = correlation_matrix(converted)
        if ranges is None:
            ranges = range_table(converted)
        check_ranges = converted.method is Method.Z_SCORE
    if indicator_ids is None:
        raise InputError("indicator_ids are required when no converted matrix is given")
    ids = list(indicator_ids)
    flags = []

    if summary is not None:
        for i, st in zip(ids, summary):
            if st is None:
                flags.append(Flag(FlagKind.DEGENERATE, i, "statistics unavailable (fewer than 2 present values)"))
            elif st.std_dev == 0 or st.skewness is None:
                flags.append(Flag(FlagKind.DEGENERATE, i, "zero standard deviation", 0.0))
            elif abs(st.skewness) >= skew_threshold:
                flags.append(
                    Flag(FlagKind.HIGH_SKEW, i, f"skewness {st.skewness:.3f} (|g1| >= {skew_threshold:g})", st.skewness)
                )

    if correlation is not None:
        R = np.asarray(correlation, dtype=float)
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                r = R[a, b]
                if math.isnan(r):
                    continue
                subject = f"{ids[a]}~{ids[b]}"
                if r >= corr_threshold:
                    flags.append(Flag(FlagKind.SUBSTITUTE_PAIR, subject, f"R = {r:.3f}; may double-count one effect", r))
                elif r <= -corr_threshold:
                    flags.append(Flag(FlagKind.COMPLEMENT_PAIR, subject, f"R = {r:.3f}; the two offset each other", r))

    if ranges is not None and check_ranges:
        for i, rg in zip(ids, ranges):
            if rg is None:
                continue
            lo, hi = rg
            ratio = math.inf if lo == 0 else abs(hi) / abs(lo)
            if hi != 0 and ratio >= range_ratio:
                flags.append(
                    Flag(
                        FlagKind.ASYMMETRIC_RANGE,
                        i,
                        f"range {table_number(lo, 3)} to {table_number(hi, 3)}; upper/lower ratio {ratio:.2f}",
                        ratio,
                    )
                )

    return DiagnosticsReport(
        indicator_ids=tuple(ids),
        summary=tuple(summary) if summary is not None else (),
        correlation=None if correlation is None else np.asarray(correlation, dtype=float),
        ranges=None if ranges is None else tuple(ranges),
        flags=tuple(flags),
        thresholds={"corr": corr_threshold, "skew": skew_threshold, "range_ratio": range_ratio},
        notes=(TIME_CONSISTENCY_NOTE,),
    )


def diagnose(converted, **thresholds):
    """Full diagnostics for a converted matrix (see :func:`consistency_check`)."""
    return consistency_check(converted, **thresholds)


def raw_summary(matrix):
    """Per-indicator :class:`ColumnStats` of a raw panel (None if < 2 values)."""
    out = []
    for j, i in enumerate(matrix.indicator_ids):
        try:
            out.append(column_stats(matrix.values[:, j], i))
        except InsufficientDataError:
            out.append(None)
    return tuple(out)


def time_consistency(*_panels):
    """Placeholder for a through-time consistency test; returns a note."""
    return TIME_CONSISTENCY_NOTE


@dataclass(frozen=True)
class ImpliedExtremesRow:
    indicator_id: str
    mean: float
    std_dev: float
    conv_min: float
    conv_max: float
    implied_raw_min: float
    implied_raw_max: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class ImpliedExtremesReport:
    rows: tuple

    @property
    def passed(self):
        return all(r.passed for r in self.rows)

    @property
    def n_passed(self):
        return sum(r.passed for r in self.rows)

    def to_dict(self):
        return {
            "passed": self.passed,
            "n_passed": self.n_passed,
            "n_total": len(self.rows),
            "rows": [dict(r.__dict__) for r in self.rows],
        }


def implied_extremes_check(stats, ranges, *, rel_tol=0.01):
    """Check that published z-ranges imply nonnegative raw minima.

    For each indicator the raw extremes implied by a mean, a standard
    deviation and a converted (min, max) are ``mean + conv * sd``. The
    minimum must not fall below ``-rel_tol * sd``; the slack absorbs
    rounding of tables printed to three decimals.

    Parameters
    ----------
    stats : mapping of id -> (mean, sd) or ColumnStats
    ranges : mapping of id -> (conv_min, conv_max)
    """
    if set(stats) != set(ranges):
        raise InputError(
            f"stats and ranges cover different indicators: "
            f"{sorted(set(stats) ^ set(ranges))}"
        )
    rows = []
    for i in stats:
        st = stats[i]
        mean, sd = (st.mean, st.std_dev) if isinstance(st, ColumnStats) else (float(st[0]), float(st[1]))
        lo, hi = (float(v) for v in ranges[i])
        imin = mean + lo * sd
        imax = mean + hi * sd
        tol = rel_tol * sd
        rows.append(ImpliedExtremesRow(i, mean, sd, lo, hi, imin, imax, tol, imin >= -tol))
    return ImpliedExtremesReport(tuple(rows))


def histogram(values, bin_count):
    """Equal-width histogram as a list of (lower edge, count).

    Bins span [min, max]; all are right-open except the last. A constant
    input yields a single bin holding every value.
    """
    x = np.asarray([v for v in values if v is not None], dtype=float)
    x = x[~np.isnan(x)]
    if x.size == 0:
        raise InputError("histogram needs at least one value")
    if isinstance(bin_count, bool) or int(bin_count) != bin_count or bin_count < 1:
        raise InputError(f"bin_count must be a positive integer, got {bin_count!r}")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        return [(lo, int(x.size))]
    edges = np.linspace(lo, hi, int(bin_count) + 1)
    counts, _ = np.histogram(x, bins=edges)
    return [(float(e), int(c)) for e, c in zip(edges[:-1], counts)]


def histogram_csv(hist, header_lines=()):
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    buf.write("lower_edge,count\n")
    for edge, count in hist:
        buf.write(f"{edge!r},{count}\n")
    return buf.getvalue()


# -- published tables ---------------------------------------------------------


@dataclass(frozen=True)
class PublishedTables:
    names: dict
    domains: dict
    stats: dict
    ranges: dict
    coverage_groups: tuple


def _read_bundled(name):
    text = resources.files("stcindex").joinpath("data", name).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def load_published_tables():
    """The published summary-statistics, converted-range and coverage tables.

    Sample sizes are not printed alongside the statistics, so ``n`` is 0 in
    the returned :class:`ColumnStats`.
    """
    names, domains, stats, ranges = {}, {}, {}, {}
    for row in _read_bundled("published_summary_stats.csv"):
        i = row["id"]
        names[i] = row["name"]
        domains[i] = row["domain"]
        stats[i] = ColumnStats(
            i, 0, float(row["mean"]), float(row["median"]), float(row["std_dev"]), float(row["skewness"])
        )
    for row in _read_bundled("published_converted_ranges.csv"):
        ranges[row["id"]] = (float(row["min"]), float(row["max"]))
    groups = []
    for row in _read_bundled("published_coverage_groups.csv"):
        groups.append(
            {
                k: (None if v == "" else (int(v) if k.endswith("count") else float(v)))
                for k, v in row.items()
            }
        )
    return PublishedTables(names, domains, stats, ranges, tuple(groups))


def format_range_row(name, lo, hi):
    """``"name: min, max"`` to three decimals in table style."""
    return f"{name}: {table_number(lo, 3)}, {table_number(hi, 3)}"


def format_report_text(report, names=None):
    """Aligned plain-text tables for a diagnostics report."""
    names = names or {}
    ids = list(report.indicator_ids)
    label = {i: names.get(i, i) for i in ids}
    w = max([len(v) for v in label.values()] + [9])
    out = []
    if report.summary:
        out.append(f"{'indicator':<{w}}  {'n':>4}  {'mean':>12}  {'median':>12}  {'std dev':>12}  {'skewness':>9}")
        for i, st in zip(ids, report.summary):
            if st is None:
                out.append(f"{label[i]:<{w}}  unavailable")
                continue
            skew = "undef" if st.skewness is None else f"{st.skewness:.3f}"
            n = st.n if st.n else "-"  # published tables carry no sample size
            out.append(
                f"{label[i]:<{w}}  {n:>4}  {st.mean:>12.3f}  {st.median:>12.3f}  {st.std_dev:>12.3f}  {skew:>9}"
            )
        out.append("")
    if report.ranges is not None:
        out.append(f"{'indicator':<{w}}  {'minimum':>9}  {'maximum':>9}")
        for i, rg in zip(ids, report.ranges):
            if rg is None:
                out.append(f"{label[i]:<{w}}  unavailable")
            else:
                out.append(f"{label[i]:<{w}}  {rg[0]:>9.3f}  {rg[1]:>9.3f}")
        out.append("")
    if report.correlation is not None:
        out.append("correlations (Pearson R, pairwise complete)")
        cw = max(len(i) for i in ids)
        out.append(" " * (cw + 2) + "".join(f"{i[:8]:>9}" for i in ids))
        for i, row in zip(ids, report.correlation):
            cells = "".join(f"{'n/a':>9}" if math.isnan(v) else f"{v:>9.3f}" for v in row)
            out.append(f"{i:<{cw}}  {cells}")
        out.append("")
    out.append(f"flags ({len(report.flags)})")
    for f in report.flags:
        out.append(f"  {f.kind.value:<17} {f.subject:<30} {f.detail}")
    for note in report.notes:
        out.append(f"note: {note}")
    return "\n".join(out)


def format_implied_text(report):
    lines = [f"{'indicator':<18} {'implied min':>12} {'implied max':>12} {'tolerance':>10}  result"]
    for r in report.rows:
        lines.append(
            f"{r.indicator_id:<18} {r.implied_raw_min:>12.3f} {r.implied_raw_max:>12.3f} "
            f"{-r.tolerance:>10.3f}  {'pass' if r.passed else 'FAIL'}"
        )
    lines.append(f"implied-extremes check: {report.n_passed}/{len(report.rows)} passed")
    return "\n".join(lines)


def report_json(report):
    return json.dumps(report.to_dict(), indent=2, sort_keys=True)
