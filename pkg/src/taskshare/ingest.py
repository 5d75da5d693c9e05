"""Posting ingestion into sparse count cubes, and annual -> monthly statistics."""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, TypeVar, Union

from .taxonomy import SocCode, TaxonomyError, TaxonomyIndex, parse_soc

logger = logging.getLogger(__name__)

M_ONLY = "__m_only__"


class IngestError(ValueError):
    pass


class DuplicateKey(IngestError):
    pass


class NegativeValue(IngestError):
    pass


class MalformedRecord(IngestError):
    pass


@dataclass(frozen=True)
class Window:
    """A run of consecutive calendar months; ordinal 0 is ``(start_year, start_month)``.

    The default covers Jan-2010 .. Dec-2017 (96 months).
    """

    start_year: int = 2010
    start_month: int = 1
    n_months: int = 96

    def __post_init__(self):
        if not 1 <= self.start_month <= 12:
            raise ValueError(f"start_month must be in 1..12, got {self.start_month}")
        if self.n_months < 1:
            raise ValueError("window must contain at least one month")

    @classmethod
    def parse(cls, start: str, n_months: int) -> "Window":
        year, month = start.split("-")
        return cls(int(year), int(month), int(n_months))

    def ordinal(self, year: int, month: int) -> int:
        """Month offset from the window start; may fall outside ``range(n_months)``."""
        return (year - self.start_year) * 12 + (month - self.start_month)

    def index_of(self, date: dt.date) -> int | None:
        t = self.ordinal(date.year, date.month)
        return t if 0 <= t < self.n_months else None

    def year_month(self, t: int) -> tuple[int, int]:
        y, m0 = divmod(self.start_month - 1 + t, 12)
        return self.start_year + y, m0 + 1

    def label(self, t: int) -> str:
        y, m = self.year_month(t)
        return f"{y:04d}-{m:02d}"

    def parse_label(self, label: str) -> int:
        year, month = label.split("-")
        t = self.ordinal(int(year), int(month))
        if not 0 <= t < self.n_months:
            raise ValueError(f"month {label} outside window")
        return t

    @property
    def years(self) -> list[int]:
        first = self.start_year
        last = self.year_month(self.n_months - 1)[0]
        return list(range(first, last + 1))

    def __len__(self) -> int:
        return self.n_months


@dataclass(frozen=True)
class PostingRecord:
    posting_id: str
    date: dt.date
    soc: SocCode
    tasks: tuple[str, ...] = ()


@dataclass
class IngestReport:
    postings_read: int = 0
    postings_used: int = 0
    out_of_window: int = 0
    bad_date: int = 0
    malformed: int = 0
    unknown_soc: int = 0
    unknown_task_mentions: int = 0
    duplicate_task_mentions: int = 0
    unknown_tasks: dict[str, int] = field(default_factory=dict)

    @property
    def skipped(self) -> int:
        return self.out_of_window + self.bad_date + self.malformed + self.unknown_soc

    def to_dict(self) -> dict:
        return {
            "postings_read": self.postings_read,
            "postings_used": self.postings_used,
            "skipped": self.skipped,
            "out_of_window": self.out_of_window,
            "bad_date": self.bad_date,
            "malformed": self.malformed,
            "unknown_soc": self.unknown_soc,
            "unknown_task_mentions": self.unknown_task_mentions,
            "duplicate_task_mentions": self.duplicate_task_mentions,
            "unknown_tasks": dict(sorted(self.unknown_tasks.items())),
        }


@dataclass
class CountsCube:
    """Sparse counts: ``n[(task_id, soc, t)]`` task mentions and ``m[(soc, t)]`` postings."""

    n: dict[tuple[str, SocCode, int], int] = field(default_factory=dict)
    m: dict[tuple[SocCode, int], int] = field(default_factory=dict)

    def merge(self, other: "CountsCube") -> "CountsCube":
        out = CountsCube(dict(self.n), dict(self.m))
        for k, v in other.n.items():
            out.n[k] = out.n.get(k, 0) + v
        for k, v in other.m.items():
            out.m[k] = out.m.get(k, 0) + v
        return out

    __add__ = merge

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CountsCube):
            return NotImplemented
        return self.n == other.n and self.m == other.m

    @property
    def tasks(self) -> list[str]:
        return sorted({i for i, _, _ in self.n})

    @property
    def occupations(self) -> list[SocCode]:
        return sorted({j for j, _ in self.m} | {j for _, j, _ in self.n})

    def is_empty(self) -> bool:
        return not self.m and not self.n

    def write(self, counts_path: str | Path, postings_path: str | Path, window: Window) -> None:
        with open(counts_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["task_id", "soc", "month", "count"])
            for (i, j, t) in sorted(self.n):
                w.writerow([i, str(j), window.label(t), self.n[(i, j, t)]])
        with open(postings_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["soc", "month", "postings"])
            for (j, t) in sorted(self.m):
                w.writerow([str(j), window.label(t), self.m[(j, t)]])

    @classmethod
    def read(cls, counts_path: str | Path, postings_path: str | Path, window: Window) -> "CountsCube":
        cube = cls()
        with open(counts_path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                key = (row["task_id"], parse_soc(row["soc"]), window.parse_label(row["month"]))
                cube.n[key] = int(row["count"])
        with open(postings_path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                cube.m[(parse_soc(row["soc"]), window.parse_label(row["month"]))] = int(row["postings"])
        return cube


RawRecord = Union[Mapping[str, object], PostingRecord]


def _parse_date(value: object) -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    text = str(value).strip()
    # accept full ISO timestamps as well as plain dates
    return dt.date.fromisoformat(text[:10])


def iter_postings(path: str | Path) -> Iterator[dict]:
    """Yield raw posting dicts from a JSON-lines or delimited-text file.

    Delimited text carries one row per (posting, task) under the header
    ``posting_id,date,soc,task``; rows are grouped by ``posting_id`` and a
    ``__m_only__`` task marks a posting with no tasks.
    """
    path = Path(path)
    if path.suffix.lower() in {".csv", ".tsv", ".txt"}:
        delim = "\t" if path.suffix.lower() == ".tsv" else ","
        grouped: dict[str, dict] = {}
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh, delimiter=delim)
            if reader.fieldnames is None:
                return
            missing = {"posting_id", "date", "soc", "task"} - {h.strip() for h in reader.fieldnames}
            if missing:
                raise MalformedRecord(f"{path}: missing column(s) {', '.join(sorted(missing))}")
            for row in reader:
                row = {k.strip(): (v or "").strip() for k, v in row.items() if k is not None}
                rec = grouped.setdefault(
                    row["posting_id"],
                    {"posting_id": row["posting_id"], "date": row["date"], "soc": row["soc"], "tasks": []},
                )
                if row["task"] and row["task"] != M_ONLY:
                    rec["tasks"].append(row["task"])
        yield from grouped.values()
        return

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError:
                # surfaced as a malformed record by ingest_postings
                yield {"__malformed__": f"line {lineno}"}


def ingest_postings(
    source: Iterable[RawRecord],
    index: TaxonomyIndex,
    window: Window = Window(),
) -> tuple[CountsCube, IngestReport]:
    """Count postings per (SOC, month) and distinct task mentions per (task, SOC, month).

    A task listed several times in one posting counts once. Unknown tasks
    are skipped (the posting still counts toward ``m``); postings with an
    unknown SOC, a bad date, or a date outside ``window`` are skipped. All
    skips are tallied in the report.
    """
    n: dict[tuple[str, SocCode, int], int] = defaultdict(int)
    m: dict[tuple[SocCode, int], int] = defaultdict(int)
    report = IngestReport()

    for raw in source:
        report.postings_read += 1
        if isinstance(raw, PostingRecord):
            date, soc, task_names = raw.date, raw.soc, raw.tasks
        else:
            if "__malformed__" in raw or "soc" not in raw or "date" not in raw:
                report.malformed += 1
                continue
            try:
                date = _parse_date(raw["date"])
            except (TypeError, ValueError):
                report.bad_date += 1
                continue
            try:
                soc = parse_soc(str(raw["soc"]))
            except TaxonomyError:
                report.unknown_soc += 1
                continue
            task_names = raw.get("tasks") or ()
            if isinstance(task_names, str):
                task_names = (task_names,)

        t = window.index_of(date)
        if t is None:
            report.out_of_window += 1
            continue
        if soc not in index.occupations:
            report.unknown_soc += 1
            continue

        seen: set[str] = set()
        for name in task_names:
            desc = index.resolve_task(str(name))
            if desc is None:
                report.unknown_task_mentions += 1
                report.unknown_tasks[str(name)] = report.unknown_tasks.get(str(name), 0) + 1
                continue
            if desc.task_id in seen:
                report.duplicate_task_mentions += 1
                continue
            seen.add(desc.task_id)
            n[(desc.task_id, soc, t)] += 1
        m[(soc, t)] += 1
        report.postings_used += 1

    return CountsCube(dict(n), dict(m)), report


@dataclass(frozen=True)
class AnnualStat:
    hourly_wage: float
    employment: float


def load_annual_stats(path: str | Path) -> dict[tuple[SocCode, int], AnnualStat]:
    """Read a ``soc,year,hourly_wage,employment`` table."""
    table: dict[tuple[SocCode, int], AnnualStat] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise IngestError(f"{path}: empty file")
        header = [h.strip() for h in reader.fieldnames]
        missing = {"soc", "year", "hourly_wage", "employment"} - set(header)
        if missing:
            raise IngestError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
        reader.fieldnames = header
        for lineno, row in enumerate(reader, 2):
            soc = parse_soc(row["soc"])
            year = int(row["year"])
            wage, emp = float(row["hourly_wage"]), float(row["employment"])
            if not (math.isfinite(wage) and math.isfinite(emp)):
                raise IngestError(f"{path}:{lineno}: non-finite value")
            if wage < 0 or emp < 0:
                raise NegativeValue(f"{path}:{lineno}: negative wage or employment for {soc} {year}")
            if (soc, year) in table:
                raise DuplicateKey(f"{path}:{lineno}: duplicate row for {soc} {year}")
            table[(soc, year)] = AnnualStat(wage, emp)
    return table


K = TypeVar("K")


def interpolate_monthly(
    annual: Mapping[tuple[K, int], float],
    window: Window = Window(),
    anchor_month: int = 1,
) -> dict[tuple[K, int], float]:
    """Piecewise-linear annual -> monthly conversion.

    Each annual value is placed at ``anchor_month`` of its year. Months
    between knots are interpolated linearly; months beyond the last knot
    (or before the first) hold the nearest knot value.
    """
    if not 1 <= anchor_month <= 12:
        raise ValueError(f"anchor_month must be in 1..12, got {anchor_month}")
    knots: dict[K, list[tuple[int, float]]] = defaultdict(list)
    for (key, year), value in annual.items():
        knots[key].append((window.ordinal(year, anchor_month), float(value)))

    out: dict[tuple[K, int], float] = {}
    for key, pts in knots.items():
        pts.sort()
        k = 0
        for t in range(window.n_months):
            while k + 1 < len(pts) and pts[k + 1][0] <= t:
                k += 1
            t0, v0 = pts[k]
            if t <= t0 or k + 1 == len(pts):
                out[(key, t)] = v0
                continue
            t1, v1 = pts[k + 1]
            out[(key, t)] = v0 + (t - t0) * (v1 - v0) / (t1 - t0)
    return out


@dataclass
class MonthlyStats:
    wage: dict[tuple[SocCode, int], float]
    employment: dict[tuple[SocCode, int], float]

    @property
    def occupations(self) -> list[SocCode]:
        return sorted({j for j, _ in self.employment})

    def base_year_wages(self, window: Window, year: int) -> dict[SocCode, float]:
        """Average monthly wage over the calendar months of ``year`` inside the window."""
        months = [t for t in range(window.n_months) if window.year_month(t)[0] == year]
        if not months:
            raise ValueError(f"base year {year} not inside window")
        return {
            j: math.fsum(self.wage[(j, t)] for t in months) / len(months)
            for j in sorted({j for j, _ in self.wage})
        }

    def write(self, path: str | Path, window: Window) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["soc", "month", "hourly_wage", "employment"])
            for (j, t) in sorted(self.employment):
                w.writerow([str(j), window.label(t), repr(self.wage[(j, t)]), repr(self.employment[(j, t)])])

    @classmethod
    def read(cls, path: str | Path, window: Window) -> "MonthlyStats":
        wage, emp = {}, {}
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                key = (parse_soc(row["soc"]), window.parse_label(row["month"]))
                wage[key] = float(row["hourly_wage"])
                emp[key] = float(row["employment"])
        return cls(wage, emp)


def build_monthly_stats(
    annual: Mapping[tuple[SocCode, int], AnnualStat],
    window: Window = Window(),
    anchor_month: int = 1,
) -> MonthlyStats:
    wage = interpolate_monthly({k: v.hourly_wage for k, v in annual.items()}, window, anchor_month)
    emp = interpolate_monthly({k: v.employment for k, v in annual.items()}, window, anchor_month)
    return MonthlyStats(wage, emp)
