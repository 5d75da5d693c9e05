"""Smoothing, linear trend coefficients and ranking of task-share series."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .shares import SeriesSet


@dataclass(frozen=True)
class TrendCoefficient:
    key: tuple[str, ...]
    slope: float
    intercept: float
    n_points: int


def moving_average(series: Sequence[float], window: int = 3) -> np.ndarray:
    """Centered moving average with truncated edges.

    Output position ``t`` averages the in-range points of
    ``t - window // 2 .. t + (window - 1) // 2``, so the output keeps the
    input's length and month alignment.
    """
    x = np.asarray(series, dtype=float)
    n = len(x)
    if window < 1 or window > n:
        raise ValueError(f"window must be in 1..{n}, got {window}")
    if window == 1:
        return x.copy()
    left, right = window // 2, (window - 1) // 2
    out = np.empty(n)
    for t in range(n):
        out[t] = x[max(0, t - left): t + right + 1].mean()
    return out


def trend_coefficient(
    series: Sequence[float],
    time_scale: str = "unit",
    key: tuple[str, ...] = (),
) -> TrendCoefficient:
    """Least-squares line through ``series`` against time.

    With ``time_scale="unit"`` time runs over [0, 1] across the series, so
    the slope is the fitted total change over the window. ``"month"`` uses
    the raw month index.
    """
    y = np.asarray(series, dtype=float)
    n = len(y)
    if n < 2:
        raise ValueError("trend needs at least 2 points")
    if time_scale == "unit":
        x = np.arange(n) / (n - 1)
    elif time_scale == "month":
        x = np.arange(n, dtype=float)
    else:
        raise ValueError(f"unknown time scale {time_scale!r}")
    xc = x - x.mean()
    y_mean = y.mean()
    slope = float(np.dot(xc, y - y_mean) / np.dot(xc, xc))
    intercept = float(y_mean - slope * x.mean())
    return TrendCoefficient(key, slope, intercept, n)


def trend_table(
    sets: Iterable[SeriesSet],
    smoothing_window: int = 3,
    time_scale: str = "unit",
) -> list[tuple[str, TrendCoefficient]]:
    """Trend of every smoothed series, as ``(level, coefficient)`` rows in key order."""
    rows = []
    for s in sets:
        for ser in s:
            smoothed = moving_average(ser.values, smoothing_window)
            rows.append((str(s.level), trend_coefficient(smoothed, time_scale, ser.key)))
    return rows


def write_trend_csv(path: str | Path, rows: list[tuple[str, TrendCoefficient]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "key1", "key2", "slope", "intercept", "n_points"])
        for level, c in rows:
            w.writerow([level, c.key[0], c.key[1], repr(c.slope), repr(c.intercept), c.n_points])


def rank_series(
    series: SeriesSet,
    by: str = "mean_level",
    k: int = 5,
    smoothing_window: int = 1,
    time_scale: str = "unit",
) -> list[tuple[str, str]]:
    """Top-``k`` keys by mean level or trend slope, descending; ties broken by key."""
    if k <= 0:
        raise ValueError("k must be positive")
    if len(series) == 0:
        raise ValueError("cannot rank an empty series set")
    stats = {}
    for ser in series:
        if by == "mean_level":
            stats[ser.key] = float(np.mean(ser.values))
        elif by == "slope":
            vals = moving_average(ser.values, smoothing_window) if smoothing_window > 1 else ser.values
            stats[ser.key] = trend_coefficient(vals, time_scale).slope
        else:
            raise ValueError(f"unknown ranking statistic {by!r}")
    ordered = sorted(stats, key=lambda key: (-stats[key], key))
    return ordered[:k]
