"""Composite indicator construction for cross-country capacity indices.

Typical use::

    from stcindex import load_dataset, coverage_filter, z_convert, aggregate, classify

    panel = load_dataset(open("panel.csv").read())
    retained, coverage = coverage_filter(panel, min_indicators=8)
    results = aggregate(z_convert(retained))
    ranking = classify(results)
"""

__version__ = "0.1.0"

from .aggregate import (
    CompositeResult,
    MissingPolicy,
    WeightedAggregator,
    WeightScheme,
    aggregate,
    domain_weighted_scheme,
    equal_weights,
)
from .classify import Band, Classification, classify, competition_ranks
from .dataset import (
    CountryRecord,
    CoverageReport,
    DataMatrix,
    Domain,
    IndicatorSpec,
    apply_exclusions,
    coverage_filter,
    load_dataset,
    reference_specs,
)
from .diagnostics import (
    DiagnosticsReport,
    consistency_check,
    correlation_matrix,
    histogram,
    implied_extremes_check,
    load_published_tables,
    range_table,
)
from .normalize import (
    ColumnStats,
    ConvertedMatrix,
    Method,
    MinMaxConverter,
    ZScoreConverter,
    column_stats,
    minmax_convert,
    z_convert,
)
from .pipeline import PipelineConfig
from .sensitivity import (
    SensitivityReport,
    compare_weights,
    leave_one_country_out,
    leave_one_indicator_out,
    spearman,
)

__all__ = [
    "__version__",
    "CompositeResult",
    "MissingPolicy",
    "WeightedAggregator",
    "WeightScheme",
    "aggregate",
    "domain_weighted_scheme",
    "equal_weights",
    "Band",
    "Classification",
    "classify",
    "competition_ranks",
    "CountryRecord",
    "CoverageReport",
    "DataMatrix",
    "Domain",
    "IndicatorSpec",
    "apply_exclusions",
    "coverage_filter",
    "load_dataset",
    "reference_specs",
    "DiagnosticsReport",
    "consistency_check",
    "correlation_matrix",
    "histogram",
    "implied_extremes_check",
    "load_published_tables",
    "range_table",
    "ColumnStats",
    "ConvertedMatrix",
    "Method",
    "MinMaxConverter",
    "ZScoreConverter",
    "column_stats",
    "minmax_convert",
    "z_convert",
    "PipelineConfig",
    "SensitivityReport",
    "compare_weights",
    "leave_one_country_out",
    "leave_one_indicator_out",
    "spearman",
]
