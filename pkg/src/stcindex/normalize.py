"""Conversion of raw indicator columns to a common format.

Two converters are provided, both scikit-learn transformers that accept NaN
as "missing" and pass it through untouched:

* :class:`ZScoreConverter` expresses each value as its distance from the
  cross-country mean in units of the standard deviation. The result is
  relative: adding or removing a country moves every converted value.
* :class:`MinMaxConverter` rescales between fixed lower/upper boundaries to
  [0, 1]. With fixed bounds the result for one country does not depend on
  any other country.

:func:`z_convert` and :func:`minmax_convert` wrap them for
:class:`~stcindex.dataset.DataMatrix` panels.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, OneToOneFeatureMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_n_features, check_panel
from .dataset import META_COLUMNS, CountryRecord, PanelMixin, expected_header, format_number
from .errors import (
    BoundsError,
    DegenerateColumnError,
    InputError,
    InsufficientDataError,
    SchemaError,
    ValidationError,
)


class Method(str, enum.Enum):
    Z_SCORE = "z_score"
    MIN_MAX = "min_max"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ColumnStats:
    indicator_id: str | None
    n: int
    mean: float
    median: float
    std_dev: float
    skewness: float | None

    def to_dict(self):
        return dict(self.__dict__)


def column_stats(column, indicator_id=None, *, sample=False):
    """Mean, median, standard deviation and skewness of the present values.

    Parameters
    ----------
    column : sequence of float or None
        NaN and None are treated as missing.
    indicator_id : str, optional
        Carried into the result.
    sample : bool, default=False
        Use the n-1 standard deviation and the adjusted Fisher-Pearson
        skewness instead of the population (divide-by-n) moments.

    Returns
    -------
    ColumnStats
        ``skewness`` is None when the standard deviation is zero.
    """
    x = np.array([np.nan if v is None else v for v in column], dtype=float)
    x = x[~np.isnan(x)]
    n = x.size
    label = f" for {indicator_id!r}" if indicator_id else ""
    if n < 2:
        raise InsufficientDataError(f"need at least 2 present values{label}, got {n}")
    if sample and n < 3:
        raise InsufficientDataError(f"sample skewness needs at least 3 values{label}, got {n}")
    mean = float(x.mean())
    median = float(np.median(x))
    if x.min() == x.max():
        # exact zero; avoids a spurious tiny spread from rounding in the mean
        return ColumnStats(indicator_id, n, float(x[0]), median, 0.0, None)
    dev = x - mean
    m2 = float(np.mean(dev * dev))
    m3 = float(np.mean(dev * dev * dev))
    g1 = m3 / m2**1.5
    if sample:
        std = math.sqrt(m2 * n / (n - 1))
        skew = g1 * math.sqrt(n * (n - 1)) / (n - 2)
    else:
        std = math.sqrt(m2)
        skew = g1
    return ColumnStats(indicator_id, n, mean, median, std, skew)


def _feature_names(X):
    cols = getattr(X, "columns", None)
    if cols is None:
        return None
    return np.asarray([str(c) for c in cols], dtype=object)


class ZScoreConverter(OneToOneFeatureMixin, TransformerMixin, BaseEstimator):
    """Standardize columns to mean 0 and standard deviation 1.

    Statistics are computed per column over its present (non-NaN) values;
    missing cells stay missing after ``transform``.

    Parameters
    ----------
    ddof : {0, 1}, default=0
        Delta degrees of freedom of the standard deviation. 0 treats the
        panel as the whole population of countries.

    Attributes
    ----------
    mean_ : ndarray of shape (n_features,)
    scale_ : ndarray of shape (n_features,)
    stats_ : list of ColumnStats
    n_features_in_ : int
    feature_names_in_ : ndarray of str
        Only set when ``X`` has column names.
    """

    def __init__(self, ddof=0):
        self.ddof = ddof

    def fit(self, X, y=None):
        names = _feature_names(X)
        X = check_panel(X)
        if self.ddof not in (0, 1):
            raise InputError(f"ddof must be 0 or 1, got {self.ddof!r}")
        stats = []
        for j in range(X.shape[1]):
            label = names[j] if names is not None else j
            try:
                st = column_stats(X[:, j], None if names is None else str(label), sample=self.ddof == 1)
            except InsufficientDataError as exc:
                raise InsufficientDataError(f"column {label!r}: {exc}") from None
            if st.std_dev == 0:
                raise DegenerateColumnError(f"column {label!r} has zero standard deviation", subject=label)
            stats.append(st)
        self.stats_ = stats
        self.mean_ = np.array([s.mean for s in stats])
        self.scale_ = np.array([s.std_dev for s in stats])
        self.n_features_in_ = X.shape[1]
        if names is not None:
            self.feature_names_in_ = names
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_panel(X)
        check_n_features(self, X)
        return (X - self.mean_) / self.scale_

    def inverse_transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_panel(X)
        check_n_features(self, X)
        return X * self.scale_ + self.mean_


def _resolve_bounds(bounds, n_features, names):
    if isinstance(bounds, Mapping):
        if names is None:
            raise BoundsError("bounds given as a mapping require named features")
        missing = [n for n in names if n not in bounds]
        if missing:
            raise BoundsError(f"no bounds for indicator(s) {missing}")
        pairs = [bounds[n] for n in names]
    else:
        pairs = list(bounds)
    if len(pairs) != n_features:
        raise BoundsError(f"expected {n_features} (min, max) pairs, got {len(pairs)}")
    arr = np.empty((n_features, 2))
    for j, pair in enumerate(pairs):
        if isinstance(pair, Mapping):
            pair = (pair.get("min"), pair.get("max"))
        try:
            lo, hi = (float(v) for v in pair)
        except (TypeError, ValueError):
            raise BoundsError(f"bounds for column {j} must be a numeric (min, max) pair, got {pair!r}") from None
        if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
            label = names[j] if names is not None else j
            raise BoundsError(f"bounds for {label!r} need min < max, got ({lo}, {hi})")
        arr[j] = lo, hi
    return arr


class MinMaxConverter(OneToOneFeatureMixin, TransformerMixin, BaseEstimator):
    """Rescale columns to [0, 1] between lower and upper boundaries.

    Parameters
    ----------
    bounds : sequence of (min, max) or mapping of name -> (min, max), default=None
        Fixed boundaries per column. When None the observed minimum and
        maximum of the training data are used, which makes the conversion
        relative to the fitted sample.
    clip : bool, default=True
        Clamp values outside the bounds to 0 or 1.
    """

    def __init__(self, bounds=None, clip=True):
        self.bounds = bounds
        self.clip = clip

    def fit(self, X, y=None):
        names = _feature_names(X)
        X = check_panel(X)
        if self.bounds is None:
            lo = np.nanmin(X, axis=0) if X.size else np.array([])
            hi = np.nanmax(X, axis=0) if X.size else np.array([])
            b = _resolve_bounds(list(zip(lo, hi)), X.shape[1], names)
        else:
            b = _resolve_bounds(self.bounds, X.shape[1], names)
        self.data_min_ = b[:, 0]
        self.data_max_ = b[:, 1]
        self.n_features_in_ = X.shape[1]
        if names is not None:
            self.feature_names_in_ = names
        return self

    def transform(self, X):
        check_is_fitted(self, "data_max_")
        X = check_panel(X)
        check_n_features(self, X)
        out = (X - self.data_min_) / (self.data_max_ - self.data_min_)
        if self.clip:
            np.clip(out, 0.0, 1.0, out=out)
        return out

    def clamp_counts(self, X):
        """Number of present values per column lying outside the bounds."""
        check_is_fitted(self, "data_max_")
        X = check_panel(X)
        check_n_features(self, X)
        with np.errstate(invalid="ignore"):
            outside = (X < self.data_min_) | (X > self.data_max_)
        return outside.sum(axis=0).astype(int)


@dataclass(frozen=True, eq=False)
class ConvertedMatrix(PanelMixin):
    """Converted panel with the statistics that produced it.

    ``per_indicator_stats`` holds raw-column statistics (None where they
    could not be computed, e.g. for a matrix read back from CSV).
    ``bounds`` and ``clamp_counts`` are set for min-max conversion only.
    """

    countries: tuple
    indicators: tuple
    values: np.ndarray
    per_indicator_stats: tuple
    method: Method
    bounds: tuple | None = None
    clamp_counts: tuple | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.shape != (len(self.countries), len(self.indicators)):
            raise InputError(f"converted grid has shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "countries", tuple(self.countries))
        object.__setattr__(self, "indicators", tuple(self.indicators))
        object.__setattr__(self, "per_indicator_stats", tuple(self.per_indicator_stats))
        object.__setattr__(self, "method", Method(self.method))

    @property
    def total_clamped(self):
        return 0 if self.clamp_counts is None else int(sum(self.clamp_counts))


def z_convert(matrix, *, ddof=0):
    """Z-score every indicator column of a raw panel.

    Raises
    ------
    InsufficientDataError
        A column has fewer than 2 present values.
    DegenerateColumnError
        A column has zero standard deviation; the message names it.
    """
    ids = matrix.indicator_ids
    conv = ZScoreConverter(ddof=ddof)
    try:
        conv.fit(matrix.values)
    except DegenerateColumnError as exc:
        name = ids[exc.subject]
        raise DegenerateColumnError(f"indicator {name!r} has zero standard deviation", subject=name) from None
    except InsufficientDataError:
        for j, name in enumerate(ids):
            n = int((~np.isnan(matrix.values[:, j])).sum())
            if n < 2:
                raise InsufficientDataError(
                    f"indicator {name!r} has {n} present value(s); at least 2 required"
                ) from None
        raise
    stats = tuple(
        ColumnStats(ids[j], s.n, s.mean, s.median, s.std_dev, s.skewness) for j, s in enumerate(conv.stats_)
    )
    return ConvertedMatrix(
        matrix.countries,
        matrix.indicators,
        conv.transform(matrix.values),
        stats,
        Method.Z_SCORE,
    )


def minmax_convert(matrix, bounds):
    """Rescale every indicator to [0, 1] between fixed boundaries.

    Parameters
    ----------
    matrix : DataMatrix
    bounds : mapping of indicator id -> (min, max) or {"min":, "max":}, or a
        sequence of pairs in indicator order.

    Values outside the bounds are clamped; the per-indicator tally is kept
    in ``clamp_counts``.
    """
    ids = matrix.indicator_ids
    if isinstance(bounds, Mapping):
        missing = [i for i in ids if i not in bounds]
        if missing:
            raise BoundsError(f"no bounds for indicator(s) {missing}")
        pairs = [bounds[i] for i in ids]
    else:
        pairs = bounds
    conv = MinMaxConverter(bounds=pairs)
    try:
        conv.fit(matrix.values)
    except BoundsError as exc:
        raise BoundsError(str(exc).replace("bounds for ", "bounds for indicator ")) from None
    stats = []
    for j, i in enumerate(ids):
        try:
            stats.append(column_stats(matrix.values[:, j], i))
        except InsufficientDataError:
            stats.append(None)
    return ConvertedMatrix(
        matrix.countries,
        matrix.indicators,
        conv.transform(matrix.values),
        tuple(stats),
        Method.MIN_MAX,
        bounds=tuple(zip(conv.data_min_.tolist(), conv.data_max_.tolist())),
        clamp_counts=tuple(conv.clamp_counts(matrix.values).tolist()),
    )


def load_bounds(json_text, specs=None):
    """Parse a bounds file: ``{indicator_id: {"min": ..., "max": ...}}``."""
    try:
        doc = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"bounds: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise SchemaError("bounds: expected an object mapping indicator id to {min, max}")
    out = {}
    for key, entry in doc.items():
        if isinstance(entry, Mapping):
            if "min" not in entry or "max" not in entry:
                raise SchemaError(f"bounds: entry {key!r} needs 'min' and 'max'")
            pair = (entry["min"], entry["max"])
        else:
            pair = tuple(entry)
        try:
            lo, hi = float(pair[0]), float(pair[1])
        except (TypeError, ValueError, IndexError):
            raise SchemaError(f"bounds: entry {key!r} is not a numeric pair") from None
        if hi <= lo:
            raise BoundsError(f"bounds for indicator {key!r} need min < max, got ({lo}, {hi})")
        out[key] = (lo, hi)
    if specs is not None:
        ids = [s.id for s in specs]
        unknown = sorted(set(out) - set(ids))
        if unknown:
            raise SchemaError(f"bounds: unknown indicator(s) {unknown}")
        missing = [i for i in ids if i not in out]
        if missing:
            raise BoundsError(f"no bounds for indicator(s) {missing}")
    return out


def dump_converted(converted, header_lines=()):
    """CSV mirroring the ingestion layout, with converted values at full precision."""
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(expected_header(converted.indicators))
    for c, row in zip(converted.countries, converted.values):
        w.writerow(
            [c.code, c.name, format_number(c.population), format_number(c.gdp_per_capita)]
            + [format_number(v) for v in row]
        )
    return buf.getvalue()


def load_converted(csv_text, specs, *, source=None):
    """Read a converted matrix written by :func:`dump_converted`.

    The conversion method is taken from a ``# method: ...`` header line and
    defaults to z-score. Negative values are allowed here.
    """
    method = Method.Z_SCORE
    lines = []
    for ln in csv_text.splitlines():
        s = ln.strip()
        if s.startswith("#"):
            body = s.lstrip("#").strip()
            if body.startswith("method:"):
                method = Method(body.split(":", 1)[1].strip())
            lines.append("")
        else:
            lines.append(ln)
    reader = csv.reader(io.StringIO("\n".join(lines)))
    header = None
    countries, values = [], []
    expected = expected_header(specs)
    for row in reader:
        if not row or not any(c.strip() for c in row):
            continue
        if header is None:
            header = [h.strip() for h in row]
            if header != expected:
                raise SchemaError(f"{source or 'converted matrix'}: header must be {','.join(expected)}")
            continue
        lineno = reader.line_num
        if len(row) != len(expected):
            raise ValidationError(f"expected {len(expected)} fields, found {len(row)}", row=lineno, source=source)
        meta = []
        for cell, col in zip(row[2:4], META_COLUMNS[2:]):
            meta.append(_parse_float(cell, lineno, col, source))
        countries.append(CountryRecord(row[0].strip(), row[1].strip(), *meta))
        values.append([_parse_float(cell, lineno, s.id, source) for cell, s in zip(row[4:], specs)])
    if header is None:
        raise SchemaError(f"{source or 'converted matrix'}: empty input")
    grid = np.array([[np.nan if v is None else v for v in r] for r in values], dtype=float)
    grid = grid.reshape(len(countries), len(specs))
    return ConvertedMatrix(tuple(countries), tuple(specs), grid, (None,) * len(specs), method)


def _parse_float(cell, row, column, source):
    cell = cell.strip()
    if not cell:
        return None
    try:
        v = float(cell)
    except ValueError:
        raise ValidationError(f"not a number: {cell!r}", row=row, column=column, source=source) from None
    if not math.isfinite(v):
        raise ValidationError(f"non-finite value {cell!r}", row=row, column=column, source=source)
    return v


def table_number(value, decimals=2, *, thousands=False):
    """Table-style number: fixed decimals, no leading zero before the point."""
    text = f"{value:,.{decimals}f}" if thousands else f"{value:.{decimals}f}"
    if text.startswith("0.") or text.startswith("-0."):
        text = text.replace("0.", ".", 1)
    return text


def format_stats_row(name, stats, decimals=2, skew_decimals=3, *, thousands=False):
    """``"name: mean, median, sd, skew"`` as printed in summary tables."""
    skew = "undefined" if stats.skewness is None else table_number(stats.skewness, skew_decimals)
    nums = [table_number(v, decimals, thousands=thousands) for v in (stats.mean, stats.median, stats.std_dev)]
    return f"{name}: {', '.join(nums)}, {skew}"
