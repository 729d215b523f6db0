"""Weighted linear aggregation of converted indicators into a composite score."""

from __future__ import annotations

import enum
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_n_features, check_panel
from .dataset import Domain, format_number
from .errors import InputError, SchemaError


class MissingPolicy(str, enum.Enum):
    RENORMALIZE = "renormalize"
    ZERO_FILL = "zero_fill"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        if key == "zerofill":
            key = "zero_fill"
        try:
            return cls(key)
        except ValueError:
            raise InputError(f"unknown missing policy {value!r}; use renormalize or zero_fill") from None

    def __str__(self):
        return self.value


def normalize_weights(weights):
    """Scale nonnegative weights to sum 1.

    The division is done in exact rational arithmetic so that multiplying
    every weight by a constant (when the products are exact) gives
    bit-identical normalized weights.
    """
    fr = []
    for w in weights:
        w = float(w)
        if not np.isfinite(w) or w < 0:
            raise InputError(f"weights must be finite and >= 0, got {w!r}")
        fr.append(Fraction(w))
    total = sum(fr)
    if total == 0:
        raise InputError("at least one weight must be > 0")
    return [float(f / total) for f in fr]


@dataclass(frozen=True)
class WeightScheme:
    """Named per-indicator weights, stored normalized to sum 1."""

    name: str
    weights: dict
    missing_policy: MissingPolicy = MissingPolicy.RENORMALIZE

    def __post_init__(self):
        ids = list(self.weights)
        norm = normalize_weights(self.weights.values())
        object.__setattr__(self, "weights", dict(zip(ids, norm)))
        object.__setattr__(self, "missing_policy", MissingPolicy.parse(self.missing_policy))

    def vector(self, indicator_ids):
        ids = list(indicator_ids)
        if set(ids) != set(self.weights) or len(ids) != len(self.weights):
            missing = sorted(set(ids) - set(self.weights))
            extra = sorted(set(self.weights) - set(ids))
            raise InputError(
                f"weight scheme {self.name!r} does not match the indicators: "
                f"missing {missing}, unknown {extra}"
            )
        return np.array([self.weights[i] for i in ids])

    def restricted(self, indicator_ids):
        """Same scheme over a subset of indicators, renormalized."""
        ids = list(indicator_ids)
        unknown = [i for i in ids if i not in self.weights]
        if unknown:
            raise InputError(f"weight scheme {self.name!r} has no weight for {unknown}")
        return WeightScheme(self.name, {i: self.weights[i] for i in ids}, self.missing_policy)

    def with_policy(self, missing_policy):
        return WeightScheme(self.name, dict(self.weights), missing_policy)

    def to_dict(self):
        return {"name": self.name, "weights": dict(self.weights), "missing_policy": self.missing_policy.value}


def equal_weights(indicator_ids, missing_policy=MissingPolicy.RENORMALIZE, name="equal"):
    return WeightScheme(name, {i: 1.0 for i in indicator_ids}, missing_policy)


def domain_weighted_scheme(domain_weights, specs, *, missing_policy=MissingPolicy.RENORMALIZE, name=None):
    """Spread each domain's weight evenly over that domain's indicators.

    Domains then contribute in the given proportions whatever their
    indicator counts. Domains missing from ``domain_weights`` get weight 0.
    """
    dw = {Domain(k): float(v) for k, v in domain_weights.items()}
    if any(v < 0 for v in dw.values()) or not any(v > 0 for v in dw.values()):
        raise InputError("domain weights must be >= 0 with at least one > 0")
    counts = {d: sum(1 for s in specs if s.domain is d) for d in Domain}
    empty = [d.value for d, v in dw.items() if v > 0 and counts[d] == 0]
    if empty:
        raise InputError(f"weighted domain(s) {empty} contain no indicators")
    weights = {}
    for s in specs:
        w = dw.get(s.domain, 0.0)
        weights[s.id] = float(Fraction(w) / counts[s.domain]) if w else 0.0
    if name is None:
        name = "domain(" + ",".join(f"{d.value}={dw.get(d, 0.0):g}" for d in Domain) + ")"
    return WeightScheme(name, weights, missing_policy)


def load_scheme(json_text, specs):
    """Parse a weight-scheme file.

    ``{"name": ..., "weights": {id: w}, "missing_policy": ...}``; a
    ``"domain_weights"`` object may be given instead of ``"weights"``.
    """
    try:
        doc = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"weights: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise SchemaError("weights: expected a JSON object")
    policy = doc.get("missing_policy", MissingPolicy.RENORMALIZE)
    name = doc.get("name")
    if "domain_weights" in doc:
        return domain_weighted_scheme(doc["domain_weights"], specs, missing_policy=policy, name=name)
    if not isinstance(doc.get("weights"), dict):
        raise SchemaError("weights: missing 'weights' (or 'domain_weights') object")
    ids = [s.id for s in specs]
    unknown = sorted(set(doc["weights"]) - set(ids))
    missing = [i for i in ids if i not in doc["weights"]]
    if unknown or missing:
        raise SchemaError(f"weights: missing {missing}, unknown {unknown}")
    return WeightScheme(name or "custom", {i: doc["weights"][i] for i in ids}, policy)


def _weighted_rows(Y, w, policy):
    present = ~np.isnan(Y)
    filled = np.where(present, Y, 0.0)
    mask = np.ones(Y.shape) if policy is MissingPolicy.ZERO_FILL else present.astype(float)
    # Accumulate column by column rather than with a BLAS product: a row's
    # result then depends only on that row, whatever the other rows are, and
    # both policies share one reduction so complete rows agree bit for bit.
    num = np.zeros(len(Y))
    den = np.zeros(len(Y))
    for j, wj in enumerate(w):
        num += filled[:, j] * wj
        den += mask[:, j] * wj
    coverage = present.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        score = num / den
    score[(coverage == 0) | (den == 0)] = np.nan
    return score


class WeightedAggregator(TransformerMixin, BaseEstimator):
    """Weighted mean of converted indicator columns.

    Parameters
    ----------
    weights : array-like of shape (n_features,), default=None
        Nonnegative weights; None means equal weights.
    missing_policy : {"renormalize", "zero_fill"}, default="renormalize"
        ``renormalize`` divides by the weight of the present indicators;
        ``zero_fill`` reads missing values as 0 (the average in z-space)
        and divides by the full weight.

    ``transform`` returns an array of shape (n_samples, 1); rows without a
    usable indicator are NaN.
    """

    def __init__(self, weights=None, missing_policy="renormalize"):
        self.weights = weights
        self.missing_policy = missing_policy

    def fit(self, X, y=None):
        X = check_panel(X)
        n = X.shape[1]
        w = [1.0] * n if self.weights is None else list(self.weights)
        if len(w) != n:
            raise InputError(f"got {len(w)} weights for {n} features")
        self.weights_ = np.array(normalize_weights(w))
        self.policy_ = MissingPolicy.parse(self.missing_policy)
        self.n_features_in_ = n
        return self

    def transform(self, X):
        check_is_fitted(self, "weights_")
        X = check_panel(X)
        check_n_features(self, X)
        return _weighted_rows(X, self.weights_, self.policy_).reshape(-1, 1)

    def get_feature_names_out(self, input_features=None):
        return np.asarray(["composite"], dtype=object)


@dataclass(frozen=True)
class CompositeResult:
    code: str
    score: float | None
    coverage: int
    domain_scores: dict = field(default_factory=dict)
    note: str | None = None


def aggregate(converted, scheme=None):
    """Composite and per-domain scores for every country.

    Parameters
    ----------
    converted : ConvertedMatrix
    scheme : WeightScheme, optional
        Must weight exactly the matrix's indicators; defaults to equal
        weights with renormalization.

    Returns
    -------
    list of CompositeResult
        In matrix country order. Countries without any present indicator
        get ``score=None`` and a note.
    """
    ids = converted.indicator_ids
    if scheme is None:
        scheme = equal_weights(ids)
    w = scheme.vector(ids)
    Y = converted.values
    score = _weighted_rows(Y, w, scheme.missing_policy)

    domain_scores = {}
    for d in Domain:
        cols = [j for j, s in enumerate(converted.indicators) if s.domain is d]
        if not cols or w[cols].sum() == 0:
            domain_scores[d] = np.full(len(Y), np.nan)
            continue
        wd = np.array(normalize_weights(w[cols]))
        domain_scores[d] = _weighted_rows(Y[:, cols], wd, scheme.missing_policy)

    coverage = (~np.isnan(Y)).sum(axis=1)
    results = []
    for r, c in enumerate(converted.countries):
        note = None
        if coverage[r] == 0:
            note = "no indicator values present"
        elif np.isnan(score[r]):
            note = "only zero-weight indicators present"
        results.append(
            CompositeResult(
                code=c.code,
                score=None if np.isnan(score[r]) else float(score[r]),
                coverage=int(coverage[r]),
                domain_scores={
                    d.value: None if np.isnan(domain_scores[d][r]) else float(domain_scores[d][r]) for d in Domain
                },
                note=note,
            )
        )
    return results


def scores_by_code(results):
    return {r.code: r.score for r in results if r.score is not None}


def composite_csv(results, header_lines=()):
    """``code,score,coverage,precondition,resource,output``; empty = absent."""
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    buf.write("code,score,coverage," + ",".join(d.value for d in Domain) + "\n")
    for r in results:
        cells = [r.code, format_number(r.score), str(r.coverage)]
        cells += [format_number(r.domain_scores.get(d.value)) for d in Domain]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()
