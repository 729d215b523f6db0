import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stcindex.diagnostics import (
    FlagKind,
    consistency_check,
    correlation_matrix,
    diagnose,
    format_range_row,
    histogram,
    histogram_csv,
    implied_extremes_check,
    load_published_tables,
    range_table,
    raw_summary,
    time_consistency,
)
from stcindex.errors import DegenerateColumnError, InputError
from stcindex.normalize import minmax_convert, z_convert

from . import oracles
from .conftest import make_matrix


def test_self_and_inverse_correlation():
    x = [1.0, 4.0, 2.0, 8.0, 5.0]
    R = correlation_matrix(np.column_stack([x, x, [10 - v for v in x]]))
    assert R[0, 1] == pytest.approx(1.0, abs=1e-15)
    assert R[0, 2] == pytest.approx(-1.0, abs=1e-15)


def test_four_point_correlation_matches_oracle():
    R = correlation_matrix(np.column_stack([[1, 2, 3, 4], [2, 4, 5, 9]]))
    expected = oracles.pearson([1, 2, 3, 4], [2, 4, 5, 9])
    assert expected == pytest.approx(11 / math.sqrt(130), rel=1e-15)
    assert R[0, 1] == pytest.approx(expected, rel=1e-14)


def test_small_overlap_is_unavailable_not_zero():
    X = np.array([[1, 1], [2, np.nan], [3, np.nan], [4, 2], [5, 4.0]])
    R = correlation_matrix(X)
    assert not math.isnan(R[0, 1])
    X[4, 1] = np.nan
    R = correlation_matrix(X)
    assert math.isnan(R[0, 1]) and R[0, 0] == 1.0


def test_pairwise_complete_cases():
    X = np.array([[1, 2, np.nan], [2, 4, 1], [3, 5, 3], [4, 9, 2], [np.nan, 1, 7]], dtype=float)
    R = correlation_matrix(X)
    both = ~np.isnan(X[:, 0]) & ~np.isnan(X[:, 2])
    assert R[0, 2] == pytest.approx(oracles.pearson(X[both, 0], X[both, 2]))


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 30), st.integers(1, 6), st.integers(0, 2**32 - 1), st.floats(0.1, 10), st.floats(-5, 5))
def test_correlation_invariants(n, k, seed, a, b):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, k))
    X[rng.random((n, k)) < 0.2] = np.nan
    R = correlation_matrix(X)
    np.testing.assert_array_equal(R, R.T)
    assert (np.diag(R) == 1).all()
    vals = R[~np.isnan(R)]
    assert ((vals >= -1) & (vals <= 1)).all()
    Y = X.copy()
    Y[:, 0] = a * Y[:, 0] + b
    R2 = correlation_matrix(Y)
    np.testing.assert_allclose(R2, R, atol=1e-9)
    Y[:, 0] = -X[:, 0]
    R3 = correlation_matrix(Y)
    np.testing.assert_allclose(R3[0, 1:], -R[0, 1:], atol=1e-12)


def test_duplicate_columns_flag_substitute():
    m = make_matrix([[1.0, 1.0, 5.0], [2.0, 2.0, 1.0], [4.0, 4.0, 3.0], [3.0, 3.0, 2.0]])
    rep = diagnose(z_convert(m))
    subs = rep.flags_of("substitute_pair")
    assert [f.subject for f in subs] == ["enrolment~gdp_pc_indicator"]
    assert subs[0].value == pytest.approx(1.0, abs=1e-15)


def test_complement_flag():
    m = make_matrix([[1.0, 4.0], [2.0, 3.0], [3.0, 2.0], [4.0, 1.2]])
    rep = diagnose(z_convert(m))
    assert [f.kind for f in rep.flags if f.kind is FlagKind.COMPLEMENT_PAIR]


def test_low_correlation_fixture_has_no_flags():
    # 4 countries x 3 indicators, built so that all |R| < 0.9 and |g1| < 2
    X = [[1.0, 1.0, 1.0], [2.0, 2.0, 3.0], [3.0, 4.0, 2.0], [4.0, 3.0, 5.0]]
    cols = list(zip(*X))
    for a in range(3):
        for b in range(a + 1, 3):
            assert abs(oracles.pearson(cols[a], cols[b])) < 0.9
        assert abs(oracles.moment_skew(cols[a])) < 2
        zs = oracles.zscores(list(cols[a]))
        assert max(zs) / abs(min(zs)) < 3
    rep = diagnose(z_convert(make_matrix(X)))
    assert rep.flags == ()


def test_published_skews_flagged():
    t = load_published_tables()
    ids = list(t.stats)
    rep = consistency_check(summary=[t.stats[i] for i in ids], indicator_ids=ids)
    assert {f.subject for f in rep.flags_of("high_skew")} == {"institutions", "coauthorship", "patents"}


def test_unreachable_thresholds_emit_nothing():
    m = make_matrix([[1.0, 1.0, 100.0], [2.0, 2.0, 0.0], [4.0, 4.0, 0.0], [3.0, 3.0, 0.0], [0.5, 0.5, 0.1]])
    rep = diagnose(z_convert(m), corr_threshold=1.1, skew_threshold=math.inf)
    kinds = {f.kind for f in rep.flags}
    assert not kinds & {FlagKind.SUBSTITUTE_PAIR, FlagKind.COMPLEMENT_PAIR, FlagKind.HIGH_SKEW}


def test_flagged_pairs_respect_threshold():
    rng = np.random.default_rng(3)
    base = rng.random(40)
    X = np.column_stack([base, base + 0.05 * rng.random(40), rng.random(40), 1 - base])
    rep = diagnose(z_convert(make_matrix(X)), corr_threshold=0.8)
    for f in rep.flags:
        if f.kind in (FlagKind.SUBSTITUTE_PAIR, FlagKind.COMPLEMENT_PAIR):
            assert abs(f.value) >= 0.8


def test_asymmetric_range_only_for_zscores():
    m = make_matrix([[0.0]] * 9 + [[10.0]])
    z = z_convert(m)
    assert {FlagKind.ASYMMETRIC_RANGE, FlagKind.HIGH_SKEW} <= {f.kind for f in diagnose(z).flags}
    mm = minmax_convert(m, {"enrolment": (0, 10)})
    assert not diagnose(mm).flags_of("asymmetric_range")


def test_degenerate_flag_from_summary():
    m = make_matrix([[1.0, 3.0], [2.0, 3.0], [3.0, 3.0]])
    rep = consistency_check(summary=raw_summary(m), indicator_ids=m.indicator_ids)
    assert [f.subject for f in rep.flags_of("degenerate")] == ["gdp_pc_indicator"]


def test_range_table():
    z = z_convert(make_matrix([[1.0], [2.0], [3.0]]))
    (lo, hi), = range_table(z)
    assert (round(lo, 3), round(hi, 3)) == (-1.225, 1.225)
    assert format_range_row("institutions per million inhabitants", -0.576, 6.495) == (
        "institutions per million inhabitants: -.576, 6.495"
    )


def test_range_table_single_value_column_fails_upstream():
    m = make_matrix([[1.0, 2.0], [2.0, np.nan], [3.0, np.nan]])
    with pytest.raises(Exception) as exc:
        range_table(z_convert(m))
    assert isinstance(exc.value, (DegenerateColumnError, ArithmeticError))


def test_implied_extremes_examples():
    rep = implied_extremes_check({"enrolment": (9.54, 6.17)}, {"enrolment": (-1.497, 2.893)})
    (row,) = rep.rows
    assert row.implied_raw_min == pytest.approx(0.30351, abs=1e-9) and row.passed
    rep = implied_extremes_check({"patents": (31.16, 56.36)}, {"patents": (-0.554, 4.025)})
    (row,) = rep.rows
    assert row.implied_raw_min == pytest.approx(-0.06344, abs=1e-9)
    assert row.tolerance == pytest.approx(0.5636) and row.passed
    rep = implied_extremes_check({"x": (1, 1)}, {"x": (-2, 1)})
    assert not rep.passed and rep.rows[0].implied_raw_min == -1
    with pytest.raises(InputError):
        implied_extremes_check({"a": (1, 1)}, {"b": (0, 1)})


def test_implied_extremes_published_tables():
    t = load_published_tables()
    rep = implied_extremes_check(t.stats, t.ranges)
    assert rep.n_passed == 8 and rep.passed


def test_published_tables_bundled_values():
    t = load_published_tables()
    assert t.stats["institutions"].skewness == 3.910
    assert t.ranges["institutions"] == (-0.576, 6.495)
    assert t.names["enrolment"] == "gross tertiary science enrolment ratio"
    assert sum(g["country_count"] for g in t.coverage_groups) == 184
    assert t.coverage_groups[0]["avg_gdp_per_capita"] == t.stats["gdp_pc_indicator"].mean


@pytest.mark.parametrize(
    "values, bins, expected",
    [
        ([0, 1, 2, 3], 2, [(0.0, 2), (1.5, 2)]),
        ([0, 10], 1, [(0.0, 2)]),
        ([4, 4, 4], 5, [(4.0, 3)]),
        ([0, 1, 2, 3, 4], 4, [(0.0, 1), (1.0, 1), (2.0, 1), (3.0, 2)]),
    ],
)
def test_histogram_examples(values, bins, expected):
    assert histogram(values, bins) == expected


def test_histogram_errors_and_csv():
    with pytest.raises(InputError):
        histogram([], 3)
    with pytest.raises(InputError):
        histogram([1.0], 0)
    assert histogram_csv([(0.0, 2)], ["x"]) == "# x\nlower_edge,count\n0.0,2\n"


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50), st.integers(1, 20))
def test_histogram_counts_sum(values, bins):
    assert sum(c for _, c in histogram(values, bins)) == len(values)


def test_time_consistency_stub():
    assert "multi-year" in time_consistency()
