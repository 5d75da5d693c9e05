"""Occupation-task shares, employment shares, task-shares and their aggregates."""

from __future__ import annotations

import csv
import enum
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Mapping

import numpy as np

from .ingest import CountsCube, MonthlyStats, Window
from .taxonomy import SocCode, TaxonomyIndex, parse_soc


class SharesError(ValueError):
    pass


class ZeroTotalEmployment(SharesError):
    def __init__(self, month: int):
        super().__init__(f"total employment is zero in month {month}")
        self.month = month


class UnresolvableKey(SharesError):
    pass


class Level(str, enum.Enum):
    PAIR = "Pair"
    FAMILY_BY_OCC_FAMILY = "FamilyByOccFamily"
    FAMILY_BY_TERCILE = "FamilyByTercile"
    CLUSTER_BY_TERCILE = "ClusterByTercile"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class TaskShareSeries:
    level: Level
    key: tuple[str, str]
    values: np.ndarray


@dataclass
class SeriesSet:
    """Series at one aggregation level, keyed by ``(key1, key2)`` strings.

    Pair keys are ``(task_id, soc)``; family keys ``(task_family, occ_family)``;
    tercile keys ``(task_family or cluster, tercile)``.
    """

    level: Level
    n_months: int
    data: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)

    def __iter__(self) -> Iterator[TaskShareSeries]:
        for key in sorted(self.data):
            yield TaskShareSeries(self.level, key, self.data[key])

    def __len__(self) -> int:
        return len(self.data)

    def __getitem__(self, key: tuple[str, str]) -> np.ndarray:
        return self.data[key]

    def __contains__(self, key: object) -> bool:
        return key in self.data

    def keys(self) -> list[tuple[str, str]]:
        return sorted(self.data)


@dataclass
class ShareReport:
    orphan_counts: int = 0
    missing_employment: list[str] = field(default_factory=list)
    dropped_zero_pairs: int = 0


def occupation_task_share(
    cube: CountsCube, report: ShareReport | None = None
) -> dict[tuple[str, SocCode, int], float]:
    """``z = n / m`` for every stored count. Counts with ``m == 0`` are omitted and tallied."""
    report = report if report is not None else ShareReport()
    z = {}
    for key in sorted(cube.n):
        i, j, t = key
        m = cube.m.get((j, t), 0)
        if m <= 0:
            report.orphan_counts += 1
            continue
        z[key] = cube.n[key] / m
    return z


@dataclass
class EmploymentShare:
    values: dict[tuple[SocCode, int], float]

    def month_totals(self, n_months: int) -> np.ndarray:
        totals = np.zeros(n_months)
        for (j, t), v in sorted(self.values.items()):
            totals[t] += v
        return totals


def employment_share(stats: MonthlyStats) -> EmploymentShare:
    """``e(j,t) = E(j,t) / sum_j E(j,t)``; raises :class:`ZeroTotalEmployment`."""
    by_month: dict[int, list[tuple[SocCode, float]]] = defaultdict(list)
    for (j, t) in sorted(stats.employment):
        by_month[t].append((j, stats.employment[(j, t)]))
    values = {}
    for t in sorted(by_month):
        total = math.fsum(v for _, v in by_month[t])
        if total <= 0:
            raise ZeroTotalEmployment(t)
        for j, v in by_month[t]:
            values[(j, t)] = v / total
    return EmploymentShare(values)


def task_share(
    z: Mapping[tuple[str, SocCode, int], float],
    e: EmploymentShare,
    n_months: int,
    keep_zeros: bool = False,
    report: ShareReport | None = None,
) -> SeriesSet:
    """Pair-level task-shares ``y(i,j,t) = e(j,t) * z(i,j,t)``.

    Occupations absent from ``e`` are reported and treated as ``e = 0``;
    all-zero pairs are dropped unless ``keep_zeros``.
    """
    report = report if report is not None else ShareReport()
    out = SeriesSet(Level.PAIR, n_months)
    missing: set[SocCode] = set()
    for (i, j, t) in sorted(z):
        key = (i, str(j))
        vec = out.data.get(key)
        if vec is None:
            vec = out.data[key] = np.zeros(n_months)
        ej = e.values.get((j, t))
        if ej is None:
            missing.add(j)
            continue
        vec[t] = ej * z[(i, j, t)]
    report.missing_employment = sorted(str(j) for j in missing)
    if not keep_zeros:
        zero = [k for k, v in out.data.items() if not np.any(v)]
        for k in zero:
            del out.data[k]
        report.dropped_zero_pairs = len(zero)
    return out


def _aggregate(
    y: SeriesSet,
    level: Level,
    task_key: Callable[[str], str],
    occ_key: Callable[[SocCode], str],
) -> SeriesSet:
    out = SeriesSet(level, y.n_months)
    for (i, soc_text) in sorted(y.data):
        try:
            soc = parse_soc(soc_text)
            key = (task_key(i), occ_key(soc))
        except (KeyError, ValueError) as exc:
            raise UnresolvableKey(f"cannot resolve pair ({i}, {soc_text}): {exc}") from exc
        acc = out.data.get(key)
        if acc is None:
            out.data[key] = y.data[(i, soc_text)].copy()
        else:
            acc += y.data[(i, soc_text)]
    for k in [k for k, v in out.data.items() if not np.any(v)]:
        del out.data[k]
    return out


def aggregate_by_family(y: SeriesSet, index: TaxonomyIndex) -> SeriesSet:
    """Sum pair series into (task family, occupation family) series."""
    return _aggregate(
        y, Level.FAMILY_BY_OCC_FAMILY, index.task_family, index.occupation_family
    )


def aggregate_by_tercile(y: SeriesSet, index: TaxonomyIndex) -> SeriesSet:
    """Sum pair series into (task family, wage tercile) series."""
    return _aggregate(
        y, Level.FAMILY_BY_TERCILE, index.task_family, lambda soc: str(index.tercile(soc))
    )


def aggregate_cluster_by_tercile(y: SeriesSet, index: TaxonomyIndex) -> SeriesSet:
    """Task-cluster drill-down: (task cluster, wage tercile) series."""
    return _aggregate(
        y, Level.CLUSTER_BY_TERCILE, index.task_cluster, lambda soc: str(index.tercile(soc))
    )


def family_totals(series: SeriesSet, task_family: Callable[[str], str] | None = None) -> dict[str, np.ndarray]:
    """Sum a series set over its second key, grouped by task family."""
    out: dict[str, np.ndarray] = {}
    for (k1, _k2) in sorted(series.data):
        fam = task_family(k1) if task_family else k1
        if fam in out:
            out[fam] = out[fam] + series.data[(k1, _k2)]
        else:
            out[fam] = series.data[(k1, _k2)].copy()
    return out


def mass_consistency(y: SeriesSet, by_family: SeriesSet, by_tercile: SeriesSet, index: TaxonomyIndex) -> float:
    """Largest absolute gap between the three per-family totals over all months."""
    direct = family_totals(y, index.task_family)
    fam = family_totals(by_family)
    ter = family_totals(by_tercile)
    worst = 0.0
    zero = np.zeros(y.n_months)
    for p in sorted(set(direct) | set(fam) | set(ter)):
        a, b, c = direct.get(p, zero), fam.get(p, zero), ter.get(p, zero)
        worst = max(worst, float(np.max(np.abs(a - b))), float(np.max(np.abs(b - c))))
    return worst


@dataclass
class PairStats:
    occs_per_task: dict[str, int]
    tasks_per_occ: dict[str, int]
    tasks_per_family: dict[str, int]

    def histogram(self, which: str, bins) -> tuple[np.ndarray, np.ndarray]:
        values = np.array(list(getattr(self, which).values()))
        return np.histogram(values, bins=bins)


def pair_statistics(cube: CountsCube, index: TaxonomyIndex) -> PairStats:
    """Distinct-partner counts over the whole window, for the pair histograms."""
    occs: dict[str, set[SocCode]] = defaultdict(set)
    tasks: dict[SocCode, set[str]] = defaultdict(set)
    for (i, j, _t), count in cube.n.items():
        if count > 0:
            occs[i].add(j)
            tasks[j].add(i)
    fam: dict[str, set[str]] = defaultdict(set)
    for i in occs:
        fam[index.task_family(i)].add(i)
    return PairStats(
        occs_per_task={i: len(occs[i]) for i in sorted(occs)},
        tasks_per_occ={str(j): len(tasks[j]) for j in sorted(tasks)},
        tasks_per_family={f: len(fam[f]) for f in sorted(fam)},
    )


# --- persistence --------------------------------------------------------------

SERIES_HEADER = ["level", "key1", "key2", "month", "value"]


def write_series_csv(path: str | Path, sets: list[SeriesSet], window: Window) -> int:
    """Write one row per nonzero cell; returns the row count."""
    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_HEADER)
        for s in sets:
            for ser in s:
                for t in np.flatnonzero(ser.values):
                    w.writerow([str(s.level), ser.key[0], ser.key[1], window.label(int(t)), repr(float(ser.values[t]))])
                    rows += 1
    return rows


def read_series_csv(path: str | Path, window: Window) -> dict[Level, SeriesSet]:
    out: dict[Level, SeriesSet] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            level = Level(row["level"])
            s = out.setdefault(level, SeriesSet(level, window.n_months))
            key = (row["key1"], row["key2"])
            vec = s.data.get(key)
            if vec is None:
                vec = s.data[key] = np.zeros(window.n_months)
            vec[window.parse_label(row["month"])] = float(row["value"])
    return out


def write_series_json(path: str | Path, sets: list[SeriesSet], window: Window) -> None:
    payload = {
        "months": [window.label(t) for t in range(window.n_months)],
        "series": [
            {"level": str(s.level), "key": list(ser.key), "values": [float(v) for v in ser.values]}
            for s in sets
            for ser in s
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
