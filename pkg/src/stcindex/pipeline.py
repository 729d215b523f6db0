"""End-to-end composition: convert, aggregate, rank."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

from .aggregate import MissingPolicy, WeightScheme, aggregate, equal_weights, scores_by_code
from .classify import BAND_CONVENTION, classify
from .errors import BoundsError
from .normalize import Method, minmax_convert, z_convert


@dataclass(frozen=True)
class PipelineConfig:
    """How a raw panel becomes scores.

    ``scheme=None`` means equal weights under ``missing_policy``; a scheme
    carries its own policy. ``bounds`` (indicator id -> (min, max)) is
    required for min-max conversion.
    """

    method: Method = Method.Z_SCORE
    scheme: WeightScheme | None = None
    missing_policy: MissingPolicy = MissingPolicy.RENORMALIZE
    bounds: Mapping | None = None
    ddof: int = 0
    min_indicators: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "missing_policy", MissingPolicy.parse(self.missing_policy))
        if self.method is Method.MIN_MAX and self.bounds is None:
            raise BoundsError("min-max conversion requires bounds")

    def scheme_for(self, indicator_ids):
        if self.scheme is None:
            return equal_weights(indicator_ids, self.missing_policy)
        if set(self.scheme.weights) == set(indicator_ids):
            return self.scheme
        return self.scheme.restricted(indicator_ids)

    @property
    def policy(self):
        return self.scheme.missing_policy if self.scheme is not None else self.missing_policy

    def header(self, indicator_ids=None):
        """Provenance lines written at the top of every output artifact."""
        scheme = self.scheme_for(indicator_ids) if indicator_ids is not None else self.scheme
        lines = [
            f"method: {self.method.value}",
            f"scheme: {scheme.name if scheme is not None else 'equal'}",
            f"missing_policy: {self.policy.value}",
            f"min_indicators: {self.min_indicators if self.min_indicators is not None else 'all'}",
            f"sd: {'sample (n-1)' if self.ddof else 'population (n)'}",
            f"band_convention: {BAND_CONVENTION}",
        ]
        if scheme is not None:
            lines.append("weights: " + ",".join(f"{k}={v!r}" for k, v in scheme.weights.items()))
        if self.method is Method.MIN_MAX and self.bounds is not None:
            lines.append("bounds: " + ",".join(f"{k}=[{lo!r},{hi!r}]" for k, (lo, hi) in self.bounds.items()))
        return lines


def convert(matrix, config):
    if config.method is Method.Z_SCORE:
        return z_convert(matrix, ddof=config.ddof)
    return minmax_convert(matrix, {i: config.bounds[i] for i in matrix.indicator_ids if i in config.bounds})


def composite(matrix, config):
    converted = convert(matrix, config)
    return converted, aggregate(converted, config.scheme_for(converted.indicator_ids))


def scores(matrix, config):
    """``{code: score}`` for every scored country."""
    return scores_by_code(composite(matrix, config)[1])


def run(matrix, config):
    """Converted matrix, composite results and classifications."""
    converted, results = composite(matrix, config)
    return converted, results, classify(results)
