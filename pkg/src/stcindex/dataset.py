"""Data model, CSV ingestion, exclusions and coverage filtering.

A panel is held as a :class:`DataMatrix`: an ordered tuple of countries, an
ordered tuple of indicators and a float grid in which NaN marks a missing
cell. Everything here is immutable; filtering returns new matrices.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
import re
import warnings
from dataclasses import dataclass, replace

import numpy as np

from ._validation import check_positive_int
from .errors import InputError, SchemaError, ValidationError

logger = logging.getLogger(__name__)

META_COLUMNS = ("code", "name", "population", "gdp_per_capita")

_CODE_RE = re.compile(r"^[A-Z]{3}$")


class Domain(str, enum.Enum):
    PRECONDITION = "precondition"
    RESOURCE = "resource"
    OUTPUT = "output"

    def __str__(self):
        return self.value


class Direction(str, enum.Enum):
    HIGHER_IS_BETTER = "higher_is_better"

    def __str__(self):
        return self.value


class UnknownCountryWarning(UserWarning):
    """An exclusion list names a country that is not in the panel."""


@dataclass(frozen=True)
class IndicatorSpec:
    id: str
    name: str
    domain: Domain
    units: str = ""
    direction: Direction = Direction.HIGHER_IS_BETTER

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id.strip():
            raise InputError("indicator id must be a nonempty string")
        try:
            object.__setattr__(self, "domain", Domain(self.domain))
        except ValueError:
            raise InputError(
                f"indicator {self.id!r}: unknown domain {self.domain!r}; "
                f"expected one of {[d.value for d in Domain]}"
            ) from None
        try:
            object.__setattr__(self, "direction", Direction(self.direction))
        except ValueError:
            raise InputError(f"indicator {self.id!r}: unsupported direction {self.direction!r}") from None

    def to_dict(self):
        return {
            "id": self.id,
            "name": self.name,
            "domain": self.domain.value,
            "units": self.units,
            "direction": self.direction.value,
        }


REFERENCE_INDICATORS = (
    IndicatorSpec("enrolment", "gross tertiary science enrolment ratio", Domain.PRECONDITION, "% of age cohort"),
    IndicatorSpec("gdp_pc_indicator", "per capita GDP", Domain.PRECONDITION, "US$"),
    IndicatorSpec("scientists", "scientists and engineers per million inhabitants", Domain.RESOURCE, "per million inhabitants"),
    IndicatorSpec("institutions", "institutions per million inhabitants", Domain.RESOURCE, "per million inhabitants"),
    IndicatorSpec("rd_expenditure", "R&D expenditure as a percentage of GDP", Domain.RESOURCE, "% of GDP"),
    IndicatorSpec("coauthorship", "Coauthorship Index", Domain.OUTPUT, "index"),
    IndicatorSpec("patents", "patents per million inhabitants", Domain.OUTPUT, "per million inhabitants"),
    IndicatorSpec("articles", "S&T journal articles", Domain.OUTPUT, "articles"),
)


def reference_specs():
    """The eight indicators of the reference capacity index, in CSV column order."""
    return list(REFERENCE_INDICATORS)


@dataclass(frozen=True)
class CountryRecord:
    code: str
    name: str
    population: float | None = None
    gdp_per_capita: float | None = None
    excluded: bool = False
    exclusion_reason: str | None = None

    def __post_init__(self):
        if not isinstance(self.code, str) or not _CODE_RE.match(self.code):
            raise ValidationError(f"country code must be exactly 3 uppercase letters, got {self.code!r}")
        for attr in ("population", "gdp_per_capita"):
            v = getattr(self, attr)
            if v is not None and (not math.isfinite(v) or v < 0):
                raise ValidationError(f"{self.code}: {attr} must be a finite value >= 0, got {v!r}")


class PanelMixin:
    """Row/column lookups shared by raw and converted panels."""

    @property
    def codes(self):
        return [c.code for c in self.countries]

    @property
    def indicator_ids(self):
        return [s.id for s in self.indicators]

    @property
    def shape(self):
        return self.values.shape

    @property
    def present(self):
        return ~np.isnan(self.values)

    def coverage(self):
        """Number of present indicator values per country."""
        return self.present.sum(axis=1).astype(int)

    def column(self, indicator_id):
        return self.values[:, self.indicator_index(indicator_id)]

    def country_index(self, code):
        try:
            return self.codes.index(code)
        except ValueError:
            raise InputError(f"unknown country code {code!r}") from None

    def indicator_index(self, indicator_id):
        try:
            return self.indicator_ids.index(indicator_id)
        except ValueError:
            raise InputError(f"unknown indicator {indicator_id!r}") from None


@dataclass(frozen=True, eq=False)
class DataMatrix(PanelMixin):
    """Countries x indicators panel of raw values; NaN marks a missing cell.

    ``excluded`` keeps the records removed by :func:`apply_exclusions` so
    reports can list them; they take no part in any statistic.
    """

    countries: tuple
    indicators: tuple
    values: np.ndarray
    excluded: tuple = ()

    def __post_init__(self):
        countries = tuple(self.countries)
        indicators = tuple(self.indicators)
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.size == 0:
            values = values.reshape(len(countries), len(indicators))
        if values.shape != (len(countries), len(indicators)):
            raise InputError(
                f"value grid has shape {values.shape}, expected "
                f"({len(countries)}, {len(indicators)})"
            )
        ids = [s.id for s in indicators]
        if len(set(ids)) != len(ids):
            raise InputError(f"duplicate indicator ids: {sorted({i for i in ids if ids.count(i) > 1})}")
        codes = [c.code for c in countries]
        if len(set(codes)) != len(codes):
            dup = sorted({c for c in codes if codes.count(c) > 1})
            raise ValidationError(f"duplicate country codes: {dup}")
        if np.isinf(values).any():
            raise ValidationError("raw values must be finite")
        if (values < 0).any():
            i, j = np.argwhere(values < 0)[0]
            raise ValidationError(
                "raw indicator values must be >= 0",
                row=codes[i],
                column=ids[j],
            )
        values.setflags(write=False)
        object.__setattr__(self, "countries", countries)
        object.__setattr__(self, "indicators", indicators)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "excluded", tuple(self.excluded))

    def take_countries(self, mask):
        mask = np.asarray(mask, dtype=bool)
        return replace(
            self,
            countries=tuple(c for c, keep in zip(self.countries, mask) if keep),
            values=self.values[mask],
        )

    def drop_country(self, code):
        idx = self.country_index(code)
        mask = np.ones(len(self.countries), dtype=bool)
        mask[idx] = False
        return self.take_countries(mask)

    def take_indicators(self, ids):
        idx = [self.indicator_index(i) for i in ids]
        return replace(
            self,
            indicators=tuple(self.indicators[j] for j in idx),
            values=self.values[:, idx],
        )

    def drop_indicator(self, indicator_id):
        idx = self.indicator_index(indicator_id)
        return self.take_indicators([i for k, i in enumerate(self.indicator_ids) if k != idx])


@dataclass(frozen=True)
class CoverageGroup:
    indicator_count: int
    country_count: int
    avg_gdp_per_capita: float | None
    world_population_share_pct: float
    world_gdp_share_pct: float


@dataclass(frozen=True)
class CoverageReport:
    """Countries grouped by how many indicators they report.

    Shares are percentages of the pre-filter world totals, taken over the
    countries whose population (and, for GDP, per-capita GDP) is known.
    ``unattributed`` lists countries with missing metadata; they are
    counted in their group but add nothing to the share columns.
    """

    groups: tuple
    retained: tuple
    dropped: tuple
    min_indicators: int
    world_population: float
    world_gdp: float
    unattributed: tuple = ()

    @property
    def total_countries(self):
        return sum(g.country_count for g in self.groups)

    def group(self, indicator_count):
        for g in self.groups:
            if g.indicator_count == indicator_count:
                return g
        raise KeyError(indicator_count)

    def to_dict(self):
        return {
            "min_indicators": self.min_indicators,
            "groups": [g.__dict__.copy() for g in self.groups],
            "retained": list(self.retained),
            "dropped": [{"code": c, "coverage": n} for c, n in self.dropped],
            "world_population": self.world_population,
            "world_gdp": self.world_gdp,
            "unattributed": list(self.unattributed),
        }


def _parse_number(text, *, row, column, source):
    text = text.strip()
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(f"not a number: {text!r}", row=row, column=column, source=source) from None
    if not math.isfinite(value):
        raise ValidationError(f"non-finite value {text!r}", row=row, column=column, source=source)
    if value < 0:
        raise ValidationError(
            f"negative value {text!r}; raw values must be >= 0 (all source data are positive quantities)",
            row=row,
            column=column,
            source=source,
        )
    return value


def expected_header(specs):
    return list(META_COLUMNS) + [s.id for s in specs]


def _check_header(header, specs, source):
    expected = expected_header(specs)
    header = [h.strip() for h in header]
    if header == expected:
        return
    missing = [c for c in expected if c not in header]
    unknown = [c for c in header if c not in expected]
    parts = []
    if missing:
        parts.append(f"missing column(s) {missing}")
    if unknown:
        parts.append(f"unknown column(s) {unknown}")
    if not parts:
        parts.append(f"columns out of order; expected {','.join(expected)}")
    prefix = f"{source}: " if source else ""
    raise SchemaError(prefix + "; ".join(parts))


def _iter_rows(text):
    """Yield (line number, row) for non-blank rows; ``#`` lines are blanked
    so exported files with provenance headers parse back unchanged."""
    lines = ["" if ln.lstrip().startswith("#") else ln for ln in text.splitlines()]
    reader = csv.reader(io.StringIO("\n".join(lines)))
    for row in reader:
        if row and any(c.strip() for c in row):
            yield reader.line_num, row


def load_dataset(csv_text, specs=None, *, source=None):
    """Parse a country panel from CSV text.

    Parameters
    ----------
    csv_text : str
        Header ``code,name,population,gdp_per_capita`` followed by one column
        per indicator id, in ``specs`` order. Empty cells are missing.
        Lines starting with ``#`` are ignored.
    specs : list of IndicatorSpec, optional
        Indicator metadata; defaults to the reference indicators.
    source : str, optional
        File name used in error messages.

    Returns
    -------
    DataMatrix
    """
    specs = list(REFERENCE_INDICATORS if specs is None else specs)
    if not specs:
        raise InputError("at least one indicator spec is required")
    if csv_text.startswith("﻿"):
        csv_text = csv_text[1:]
    rows = list(_iter_rows(csv_text))
    if not rows:
        raise SchemaError(f"{source + ': ' if source else ''}empty input, header row required")
    (_, header), body = rows[0], rows[1:]
    _check_header(header, specs, source)
    ncol = len(header)

    countries, values, seen = [], [], {}
    for lineno, row in body:
        if len(row) != ncol:
            raise ValidationError(f"expected {ncol} fields, found {len(row)}", row=lineno, source=source)
        code = row[0].strip()
        if not _CODE_RE.match(code):
            raise ValidationError(
                f"country code must be 3 uppercase letters, got {code!r}", row=lineno, column="code", source=source
            )
        if code in seen:
            raise ValidationError(
                f"duplicate country code {code!r} (first seen on row {seen[code]})",
                row=lineno,
                column="code",
                source=source,
            )
        seen[code] = lineno
        pop = _parse_number(row[2], row=lineno, column="population", source=source)
        gdp = _parse_number(row[3], row=lineno, column="gdp_per_capita", source=source)
        countries.append(CountryRecord(code, row[1].strip(), pop, gdp))
        values.append(
            [
                np.nan if (v := _parse_number(cell, row=lineno, column=spec.id, source=source)) is None else v
                for cell, spec in zip(row[4:], specs)
            ]
        )
    grid = np.array(values, dtype=float).reshape(len(countries), len(specs))
    return DataMatrix(tuple(countries), tuple(specs), grid)


def format_number(value):
    """Shortest text that parses back to exactly ``value``; '' for missing."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    value = float(value)
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def dump_dataset(matrix):
    """Serialize a panel back to the ingestion CSV layout."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(expected_header(matrix.indicators))
    for c, row in zip(matrix.countries, matrix.values):
        w.writerow([c.code, c.name, format_number(c.population), format_number(c.gdp_per_capita)] + [format_number(v) for v in row])
    return buf.getvalue()


def load_specs(json_text):
    """Read indicator specs from JSON (a list, or ``{"indicators": [...]}``)."""
    try:
        doc = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"indicator specs: invalid JSON ({exc})") from None
    if isinstance(doc, dict):
        doc = doc.get("indicators")
    if not isinstance(doc, list) or not doc:
        raise SchemaError("indicator specs: expected a nonempty list of indicators")
    specs = []
    for i, entry in enumerate(doc):
        if not isinstance(entry, dict) or "id" not in entry or "domain" not in entry:
            raise SchemaError(f"indicator specs: entry {i} needs at least 'id' and 'domain'")
        specs.append(
            IndicatorSpec(
                id=str(entry["id"]),
                name=str(entry.get("name", entry["id"])),
                domain=entry["domain"],
                units=str(entry.get("units", "")),
                direction=entry.get("direction", Direction.HIGHER_IS_BETTER),
            )
        )
    ids = [s.id for s in specs]
    if len(set(ids)) != len(ids):
        raise SchemaError("indicator specs: duplicate ids")
    return specs


def load_exclusions(text):
    """Parse ``CODE,reason`` lines. Blank lines and ``#`` comments are skipped."""
    out = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not row[0].strip() or row[0].lstrip().startswith("#"):
            continue
        code = row[0].strip()
        reason = ",".join(row[1:]).strip()
        out.append((code, reason))
    return out


def apply_exclusions(matrix, exclusion_list):
    """Remove listed countries, keeping them in ``matrix.excluded``.

    Unknown codes raise :class:`UnknownCountryWarning` and are otherwise
    ignored.
    """
    reasons = {}
    for item in exclusion_list:
        code, reason = (item, "") if isinstance(item, str) else (item[0], item[1] if len(item) > 1 else "")
        reasons[code] = reason
    known = set(matrix.codes)
    for code in reasons:
        if code not in known:
            warnings.warn(f"exclusion list names unknown country {code!r}", UnknownCountryWarning, stacklevel=2)
    if not reasons.keys() & known:
        return matrix
    mask = np.array([c.code not in reasons for c in matrix.countries])
    dropped = tuple(
        replace(c, excluded=True, exclusion_reason=reasons[c.code]) for c in matrix.countries if c.code in reasons
    )
    logger.info("excluded %d of %d countries", len(dropped), len(matrix.countries))
    out = matrix.take_countries(mask)
    return replace(out, excluded=matrix.excluded + dropped)


def coverage_filter(matrix, min_indicators=None):
    """Keep countries reporting at least ``min_indicators`` indicators.

    Parameters
    ----------
    matrix : DataMatrix
    min_indicators : int, optional
        Defaults to the number of indicators (complete coverage).

    Returns
    -------
    retained : DataMatrix
    report : CoverageReport
        Groups every input country by its coverage count.
    """
    n_ind = len(matrix.indicators)
    if min_indicators is None:
        min_indicators = n_ind
    min_indicators = check_positive_int(min_indicators, "min_indicators", low=1, high=n_ind)

    cov = matrix.coverage()
    pop = np.array([np.nan if c.population is None else c.population for c in matrix.countries], dtype=float)
    gpc = np.array([np.nan if c.gdp_per_capita is None else c.gdp_per_capita for c in matrix.countries], dtype=float)
    gdp = pop * gpc
    world_pop = float(np.nansum(pop))
    world_gdp = float(np.nansum(gdp))

    levels = list(range(n_ind, 0, -1))
    if (cov == 0).any():
        levels.append(0)
    groups = []
    for k in levels:
        sel = cov == k
        g = gpc[sel]
        g = g[~np.isnan(g)]
        groups.append(
            CoverageGroup(
                indicator_count=k,
                country_count=int(sel.sum()),
                avg_gdp_per_capita=float(g.mean()) if g.size else None,
                world_population_share_pct=_share(np.nansum(pop[sel]), world_pop),
                world_gdp_share_pct=_share(np.nansum(gdp[sel]), world_gdp),
            )
        )

    keep = cov >= min_indicators
    report = CoverageReport(
        groups=tuple(groups),
        retained=tuple(c.code for c, k in zip(matrix.countries, keep) if k),
        dropped=tuple((c.code, int(n)) for c, n, k in zip(matrix.countries, cov, keep) if not k),
        min_indicators=min_indicators,
        world_population=world_pop,
        world_gdp=world_gdp,
        unattributed=tuple(c.code for c in matrix.countries if c.population is None or c.gdp_per_capita is None),
    )
    return matrix.take_countries(keep), report


def _share(part, total):
    return float(100.0 * part / total) if total > 0 else 0.0


def format_coverage_table(report):
    """Aligned plain-text rendering of a coverage report."""
    lines = [f"{'indicators covered':<30}" + "".join(f"{g.indicator_count:>10}" for g in report.groups)]

    def cells(fn):
        return "".join(f"{fn(g):>10}" for g in report.groups)

    lines.append(f"{'number of countries':<30}" + cells(lambda g: g.country_count))
    lines.append(
        f"{'average per capita GDP ($)':<30}"
        + cells(lambda g: "a)" if g.avg_gdp_per_capita is None else f"{g.avg_gdp_per_capita:,.0f}")
    )
    lines.append(f"{'share in world population':<30}" + cells(lambda g: f"{g.world_population_share_pct:.1f}"))
    lines.append(f"{'share in world GDP':<30}" + cells(lambda g: f"{g.world_gdp_share_pct:.1f}"))
    if report.unattributed:
        lines.append(f"a) no population/GDP data: {', '.join(report.unattributed)}")
    lines.append(
        f"retained {len(report.retained)} of {report.total_countries} countries "
        f"with >= {report.min_indicators} indicators"
    )
    return "\n".join(lines)
