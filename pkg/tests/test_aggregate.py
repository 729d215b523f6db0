import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.pipeline import make_pipeline

from stcindex.aggregate import (
    MissingPolicy,
    WeightedAggregator,
    WeightScheme,
    aggregate,
    composite_csv,
    domain_weighted_scheme,
    equal_weights,
    load_scheme,
    normalize_weights,
)
from stcindex.dataset import Domain, reference_specs
from stcindex.errors import InputError, SchemaError
from stcindex.normalize import ConvertedMatrix, Method, ZScoreConverter, z_convert

from . import oracles
from .conftest import make_matrix


def converted(values, specs=None):
    m = make_matrix(np.where(np.isnan(values), np.nan, 1.0), specs=specs)
    return ConvertedMatrix(m.countries, m.indicators, values, (None,) * m.shape[1], Method.Z_SCORE)


def test_row_examples():
    c = converted(np.array([[1.0, np.nan, 0.5]]))
    ids = c.indicator_ids
    (r,) = aggregate(c, equal_weights(ids, "renormalize"))
    assert r.score == 0.75 and r.coverage == 2
    (r,) = aggregate(c, equal_weights(ids, "zero_fill"))
    assert r.score == pytest.approx(0.5, abs=1e-15)


def test_all_zero_row_scores_zero():
    c = converted(np.zeros((1, 8)))
    for scheme in (equal_weights(c.indicator_ids), domain_weighted_scheme({"output": 2, "resource": 1}, reference_specs())):
        assert aggregate(c, scheme)[0].score == 0.0


def test_coverage_zero_row_is_absent_and_flagged():
    c = converted(np.array([[np.nan, np.nan], [1.0, 2.0]]))
    r0, r1 = aggregate(c, equal_weights(c.indicator_ids, "zero_fill"))
    assert r0.score is None and r0.coverage == 0 and r0.note
    assert r1.score == 1.5


def test_scheme_mismatch():
    c = converted(np.ones((2, 3)))
    with pytest.raises(InputError, match="does not match"):
        aggregate(c, equal_weights(["enrolment", "gdp_pc_indicator"]))


def test_weight_validation():
    with pytest.raises(InputError):
        WeightScheme("w", {"a": 0.0, "b": 0.0})
    with pytest.raises(InputError):
        WeightScheme("w", {"a": -1.0, "b": 2.0})
    s = WeightScheme("w", {"a": 1.0, "b": 3.0})
    assert s.weights == {"a": 0.25, "b": 0.75}


def test_domain_scheme_reference_counts():
    s = domain_weighted_scheme({"precondition": 1, "resource": 1, "output": 1}, reference_specs())
    expected = np.array([1 / 2, 1 / 2, 1 / 3, 1 / 3, 1 / 3, 1 / 3, 1 / 3, 1 / 3])
    expected /= expected.sum()
    np.testing.assert_allclose(list(s.weights.values()), expected, rtol=1e-15)


def test_domain_scheme_equal_recovered_by_sizes():
    s = domain_weighted_scheme({"precondition": 2, "resource": 3, "output": 3}, reference_specs())
    e = equal_weights([x.id for x in reference_specs()])
    assert s.weights == e.weights


def test_domain_scheme_errors():
    specs = [x for x in reference_specs() if x.domain is not Domain.OUTPUT]
    with pytest.raises(InputError, match="no indicators"):
        domain_weighted_scheme({"output": 1}, specs)
    with pytest.raises(InputError):
        domain_weighted_scheme({"output": 0}, reference_specs())


def test_single_domain_equals_subindex(panel5):
    z = z_convert(panel5)
    res = aggregate(z, domain_weighted_scheme({"resource": 1}, reference_specs()))
    for r in res:
        assert r.score == pytest.approx(r.domain_scores["resource"], abs=1e-15)


def test_domain_scores_equal_restricted_composite(panel5):
    z = z_convert(panel5)
    scheme = domain_weighted_scheme({"precondition": 1, "resource": 2, "output": 3}, reference_specs())
    res = aggregate(z, scheme)
    for d in Domain:
        ids = [s.id for s in reference_specs() if s.domain is d]
        cols = [z.indicator_ids.index(i) for i in ids]
        sub = ConvertedMatrix(z.countries, [z.indicators[j] for j in cols], z.values[:, cols], (None,) * len(cols), z.method)
        sub_res = aggregate(sub, scheme.restricted(ids))
        for a, b in zip(res, sub_res):
            assert a.domain_scores[d.value] == pytest.approx(b.score, abs=1e-15)


rows = st.lists(
    st.lists(st.one_of(st.none(), st.floats(-5, 5, allow_nan=False)), min_size=4, max_size=4),
    min_size=1,
    max_size=12,
)
weights = st.lists(st.integers(0, 20), min_size=4, max_size=4).filter(lambda w: sum(w) > 0)


@settings(max_examples=150, deadline=None)
@given(rows, weights, st.integers(2, 1000), st.sampled_from(["renormalize", "zero_fill"]))
def test_weight_scaling_is_bit_identical(rs, w, k, policy):
    c = converted(np.array([[np.nan if v is None else v for v in r] for r in rs]))
    ids = c.indicator_ids
    a = aggregate(c, WeightScheme("a", dict(zip(ids, map(float, w))), policy))
    b = aggregate(c, WeightScheme("b", dict(zip(ids, (float(k * x) for x in w))), policy))
    assert [r.score for r in a] == [r.score for r in b]
    # matches the loop oracle
    ref = oracles.composite_rows(rs, w, policy)
    for r, e in zip(a, ref):
        if e is None:
            assert r.score is None
        else:
            assert r.score == pytest.approx(e, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(st.floats(-5, 5, allow_nan=False), min_size=5, max_size=5), min_size=1, max_size=10), weights.map(lambda w: w + [1]))
def test_complete_rows_policies_agree(rs, w):
    c = converted(np.array(rs))
    ids = c.indicator_ids
    a = aggregate(c, WeightScheme("a", dict(zip(ids, map(float, w))), "renormalize"))
    b = aggregate(c, WeightScheme("a", dict(zip(ids, map(float, w))), "zero_fill"))
    assert [r.score for r in a] == [r.score for r in b]
    e = aggregate(c, equal_weights(ids))
    for r, row in zip(e, rs):
        assert r.score == pytest.approx(np.mean(row), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 30))
def test_zfill_equal_composite_has_zero_mean(seed, n):
    rng = np.random.default_rng(seed)
    z = z_convert(make_matrix(rng.random((n, 8)) * 100))
    res = aggregate(z, equal_weights(z.indicator_ids, "zero_fill"))
    assert abs(np.mean([r.score for r in res])) < 1e-12


def test_weighted_aggregator_estimator():
    X = np.array([[1.0, np.nan, 0.5], [0.0, 0.0, 3.0]])
    agg = WeightedAggregator()
    out = agg.fit_transform(X)
    assert out.shape == (2, 1) and out[0, 0] == 0.75
    assert agg.get_params() == {"missing_policy": "renormalize", "weights": None}
    agg.set_params(missing_policy="zero_fill")
    assert agg.fit_transform(X)[0, 0] == pytest.approx(0.5)
    pipe = make_pipeline(ZScoreConverter(), WeightedAggregator(weights=[1, 1, 2]))
    assert pipe.fit_transform(np.array([[1.0, 2, 3], [2, 1, 5], [3, 3, 4]])).shape == (3, 1)
    with pytest.raises(InputError):
        WeightedAggregator(weights=[1, 2]).fit(X)


def test_load_scheme_and_csv(specs):
    ids = [s.id for s in specs]
    doc = '{"name": "custom", "weights": {%s}, "missing_policy": "zero_fill"}' % ",".join(f'"{i}": 2' for i in ids)
    s = load_scheme(doc, specs)
    assert s.missing_policy is MissingPolicy.ZERO_FILL and s.name == "custom"
    s = load_scheme('{"domain_weights": {"output": 1}}', specs)
    assert s.weights["patents"] == pytest.approx(1 / 3)
    with pytest.raises(SchemaError):
        load_scheme('{"weights": {"enrolment": 1}}', specs)
    assert MissingPolicy.parse("zerofill") is MissingPolicy.ZERO_FILL

    c = converted(np.array([[1.0, np.nan, 0.5]]))
    text = composite_csv(aggregate(c), ["method: z_score"])
    assert text.splitlines() == [
        "# method: z_score",
        "code,score,coverage,precondition,resource,output",
        "CAA,0.75,2,1,0.5,",
    ]


def test_normalize_weights_exact():
    assert normalize_weights([1, 1, 1]) == normalize_weights([7, 7, 7])
    assert sum(normalize_weights([0.1, 0.2, 0.7])) == pytest.approx(1.0)


def test_row_scores_do_not_depend_on_other_rows():
    rng = np.random.default_rng(0)
    Y = rng.normal(size=(40, 8))
    Y[rng.random(Y.shape) < 0.2] = np.nan
    w = rng.uniform(0.1, 2, size=8)
    agg = WeightedAggregator(weights=w).fit(Y)
    full = agg.transform(Y)[:, 0]
    for k in (1, 3, 7, 16, 39):
        part = agg.transform(Y[:k])[:, 0]
        np.testing.assert_array_equal(part, full[:k])
