import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_one_step, simulate_arma
from taskshare.forecast import (
    ArimaModel,
    ArimaOrder,
    EvaluationError,
    ForecastPoint,
    fit_arima,
    forecast_suite,
    mape,
    mape_detail,
    one_step_means,
    rolling_one_step,
)
from taskshare.shares import Level, SeriesSet


def fixed_model(order, ar=(), ma=(), c=0.0, sigma2=1.0, window=(0, 9)):
    return ArimaModel(ArimaOrder(*order), np.asarray(ar, float), np.asarray(ma, float), c, sigma2, window)


def test_random_walk_forecast_is_previous_value():
    x = np.array([1.0, 3.0, 2.0, 5.0, 4.0, 6.0])
    pts = rolling_one_step(x, fixed_model((0, 1, 0), window=(0, 2)), 3)
    assert [p.mean for p in pts] == [2.0, 5.0, 4.0]
    assert [p.actual for p in pts] == [5.0, 4.0, 6.0]
    assert [p.month for p in pts] == [3, 4, 5]


def test_interval_half_width():
    pts = rolling_one_step(np.zeros(12) + 1.0, fixed_model((0, 1, 0), window=(0, 5)), 6)
    for p in pts:
        assert p.upper95 - p.mean == pytest.approx(1.959964, abs=1e-6)
        assert p.mean - p.lower95 == pytest.approx(1.959964, abs=1e-6)


def test_interval_scales_with_sigma():
    pts = rolling_one_step(np.arange(12.0), fixed_model((0, 1, 0), sigma2=4.0, window=(0, 5)), 6)
    assert pts[0].upper95 - pts[0].mean == pytest.approx(2 * 1.959964, abs=1e-6)


def test_ar1_forecast():
    x = np.array([0.0, 0.0, 2.0, 7.0])
    means = one_step_means(x, fixed_model((1, 0, 0), ar=[0.5], window=(0, 1)), 3)
    assert means[0] == 1.0


def test_training_overlap_rejected():
    with pytest.raises(EvaluationError):
        rolling_one_step(np.arange(10.0), fixed_model((0, 1, 0), window=(0, 5)), 5)


def test_start_before_p_plus_d_rejected():
    with pytest.raises(EvaluationError):
        one_step_means(np.arange(10.0), fixed_model((2, 1, 0), ar=[0.1, 0.1]), 2)


orders = st.sampled_from([(1, 0, 0), (0, 0, 1), (1, 0, 1), (2, 0, 2), (0, 1, 1), (1, 1, 0), (2, 1, 1), (1, 2, 1)])


@given(
    orders,
    st.lists(st.floats(-5, 5), min_size=8, max_size=20),
    st.lists(st.floats(-0.9, 0.9), min_size=4, max_size=4),
    st.floats(-1, 1),
)
def test_matches_list_recursion(order, values, coefs, c):
    p, d, q = order
    ar, ma = coefs[:p], coefs[2:2 + q]
    c = c if d == 0 else 0.0
    model = fixed_model(order, ar, ma, c)
    start = max(p + d, len(values) // 2)
    ours = one_step_means(values, model, start)
    ref = brute_one_step(values, ar, ma, c, d, start)
    scale = max(1.0, max(abs(v) for v in values))
    np.testing.assert_allclose(ours, ref, rtol=0, atol=1e-9 * scale * 10 ** d)


def point(mean, actual):
    return ForecastPoint(0, mean, mean, mean, actual)


def test_mape_example():
    assert mape([point(110, 100), point(180, 200)]) == pytest.approx(10.0, abs=1e-12)


def test_mape_perfect():
    assert mape([point(3.0, 3.0), point(-1.0, -1.0)]) == 0.0


def test_mape_skips_zero_actuals():
    value, used, zero = mape_detail([point(1.0, 0.0), point(110, 100)])
    assert (value, used, zero) == (pytest.approx(10.0), 1, 1)


def test_mape_all_zero():
    with pytest.raises(EvaluationError):
        mape([point(1.0, 0.0)])


@given(
    st.lists(st.tuples(st.floats(0.1, 100), st.floats(0.1, 100)), min_size=1, max_size=30),
    st.floats(0.01, 100),
)
def test_mape_scale_invariant(pairs, c):
    a = mape([point(f, y) for f, y in pairs])
    b = mape([point(f * c, y * c) for f, y in pairs])
    assert b == pytest.approx(a, rel=1e-9, abs=1e-9)


def _set(data, n=96):
    return SeriesSet(Level.FAMILY_BY_TERCILE, n, {k: np.asarray(v, float) for k, v in data.items()})


def test_suite_24_points_and_skips_empty():
    rng = np.random.default_rng(0)
    s = _set({
        ("IT", "High"): 0.2 + 0.01 * rng.normal(size=96),
        ("IT", "Low"): np.zeros(96),
        ("Admin", "Mid"): 0.1 + 0.001 * np.arange(96) + 0.005 * rng.normal(size=96),
    })
    result = forecast_suite(s, 72, grid=[ArimaOrder(0, 0, 0), ArimaOrder(1, 0, 0), ArimaOrder(0, 1, 1)])
    assert set(result.points) == {("IT", "High"), ("Admin", "Mid")}
    assert all(len(v) == 24 for v in result.points.values())
    assert [p.month for p in result.points[("IT", "High")]] == list(range(72, 96))
    for row in result.rows:
        assert row.n_forecasts == 24 and math.isfinite(row.mape)
        assert result.models[row.key].training_window == (0, 71)


def test_suite_pinned_order_raw():
    x = np.cumsum(np.random.default_rng(1).normal(size=96)) + 50
    result = forecast_suite(_set({("A", "Mid"): x}), 72, order=ArimaOrder(0, 1, 0), smoothing_window=1)
    means = [p.mean for p in result.points[("A", "Mid")]]
    np.testing.assert_array_equal(means, x[71:95])


def test_suite_short_series_is_a_failure():
    result = forecast_suite(_set({("A", "Mid"): np.ones(50)}, n=50), 72)
    assert ("A", "Mid") in result.failures and not result.rows


def test_ar1_end_to_end_coverage_reasonable():
    x = simulate_arma(np.random.default_rng(4), 400, ar=[0.6], c=5.0)
    model = fit_arima(x[:300], ArimaOrder(1, 0, 0))
    pts = rolling_one_step(x, model, 300)
    inside = sum(p.lower95 <= p.actual <= p.upper95 for p in pts)
    assert 85 <= inside <= 100
