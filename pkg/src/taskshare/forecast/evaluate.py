"""Rolling one-step-ahead forecasts, prediction intervals and MAPE."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import comb
from scipy.stats import norm

from ..analysis import moving_average
from ..ingest import Window
from ..shares import SeriesSet
from .arima import ArimaError, ArimaModel, ArimaOrder, css_residuals, difference, fit_arima, select_and_fit

logger = logging.getLogger(__name__)


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class ForecastPoint:
    month: int
    mean: float
    lower95: float
    upper95: float
    actual: float | None = None


@dataclass(frozen=True)
class EvaluationRow:
    key: tuple[str, str]
    mape: float
    n_forecasts: int
    order: ArimaOrder | None = None
    zero_actuals: int = 0


def one_step_means(series: Sequence[float], model: ArimaModel, start: int) -> np.ndarray:
    """Conditional means of ``series[t]`` given ``series[:t]`` for ``t >= start``.

    Parameters stay frozen; the residual recursion runs over the observed
    values, so every forecast uses all actuals before its month.
    """
    x = np.asarray(series, dtype=float)
    p, d, _ = model.order
    if start < p + d:
        raise EvaluationError(f"first forecast month must be >= p + d = {p + d}")
    if start >= len(x):
        raise EvaluationError("holdout is empty")
    ar, ma = model.ar_coeffs, model.ma_coeffs
    w = difference(x, d)
    e = np.zeros(len(w))
    e[p:] = css_residuals(w, ar, ma, model.intercept)

    means = np.empty(len(x) - start)
    for k, t in enumerate(range(start, len(x))):
        s = t - d
        pred = model.intercept
        for i in range(p):
            pred += ar[i] * w[s - 1 - i]
        for j in range(len(ma)):
            if s - 1 - j >= 0:
                pred += ma[j] * e[s - 1 - j]
        # undo differencing: x[t] = w[s] + sum_k (-1)^(k+1) C(d,k) x[t-k]
        for lag in range(1, d + 1):
            pred += (-1) ** (lag + 1) * comb(d, lag, exact=True) * x[t - lag]
        means[k] = pred
    return means


def rolling_one_step(
    series: Sequence[float],
    model: ArimaModel,
    holdout_start: int,
    level: float = 0.95,
) -> list[ForecastPoint]:
    """One-month-ahead forecasts over ``series[holdout_start:]`` with Gaussian intervals.

    The one-step forecast variance of an ARMA process is the innovation
    variance, so the interval is ``mean +/- z * sqrt(sigma2)``.
    """
    if model.training_window[1] >= holdout_start:
        raise EvaluationError("model was trained on data at or after the holdout start")
    x = np.asarray(series, dtype=float)
    means = one_step_means(x, model, holdout_start)
    half = float(norm.ppf(0.5 + level / 2.0)) * math.sqrt(model.sigma2)
    return [
        ForecastPoint(t, float(m), float(m - half), float(m + half), float(x[t]))
        for t, m in zip(range(holdout_start, len(x)), means)
    ]


def mape(points: Iterable[ForecastPoint]) -> float:
    """``100 * mean(|actual - mean| / |actual|)``; points with zero or missing actuals are skipped."""
    value, _used, zero = mape_detail(points)
    if zero:
        logger.warning("MAPE: excluded %d zero-valued actual(s)", zero)
    return value


def mape_detail(points: Iterable[ForecastPoint]) -> tuple[float, int, int]:
    errs = []
    zero = 0
    for pt in points:
        if pt.actual is None or pt.actual == 0:
            zero += 1
            continue
        errs.append(abs(pt.actual - pt.mean) / abs(pt.actual))
    if not errs:
        raise EvaluationError("no forecast points with nonzero actuals")
    return 100.0 * math.fsum(errs) / len(errs), len(errs), zero


@dataclass
class SuiteResult:
    rows: list[EvaluationRow] = field(default_factory=list)
    points: dict[tuple[str, str], list[ForecastPoint]] = field(default_factory=dict)
    models: dict[tuple[str, str], ArimaModel] = field(default_factory=dict)
    failures: dict[tuple[str, str], str] = field(default_factory=dict)


def forecast_suite(
    series: SeriesSet,
    train_months: int = 72,
    order: ArimaOrder | None = None,
    grid: Iterable[ArimaOrder] | None = None,
    smoothing_window: int = 3,
    level: float = 0.95,
) -> SuiteResult:
    """Fit, roll and score every series in ``series``.

    Each series is smoothed (``smoothing_window`` 1 keeps it raw), an order
    is selected on the first ``train_months`` points unless pinned, and the
    remaining months are forecast one step ahead. Failures are recorded
    per series; the run continues.
    """
    result = SuiteResult()
    grid = list(grid) if grid is not None else None
    for ser in series:
        key = ser.key
        if not np.any(ser.values):
            continue
        if len(ser.values) <= train_months:
            result.failures[key] = f"series length {len(ser.values)} <= train_months {train_months}"
            continue
        vals = moving_average(ser.values, smoothing_window)
        train = vals[:train_months]
        try:
            if order is None:
                model, _ = select_and_fit(train, grid)
            else:
                model = fit_arima(train, order)
            pts = rolling_one_step(vals, model, train_months, level)
            score, used, zero = mape_detail(pts)
        except (ArimaError, EvaluationError) as exc:
            result.failures[key] = str(exc)
            continue
        result.rows.append(EvaluationRow(key, score, used, model.order, zero))
        result.points[key] = pts
        result.models[key] = model
    return result


def write_forecasts_csv(path: str | Path, result: SuiteResult, window: Window) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["family", "tercile", "month", "mean", "lower95", "upper95", "actual"])
        for key in sorted(result.points):
            for pt in result.points[key]:
                w.writerow([key[0], key[1], window.label(pt.month), repr(pt.mean),
                            repr(pt.lower95), repr(pt.upper95), repr(pt.actual)])


def write_evaluation_csv(path: str | Path, result: SuiteResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["family", "tercile", "mape", "n_forecasts"])
        for row in sorted(result.rows, key=lambda r: r.key):
            w.writerow([row.key[0], row.key[1], repr(row.mape), row.n_forecasts])
