"""Occupation (SOC) and task classification hierarchies, plus wage terciles."""

from __future__ import annotations

import csv
import enum
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Hashable, Iterable, Mapping, TypeVar

__all__ = [
    "SOC_MAJOR_GROUPS",
    "SocCode",
    "TaskDescriptor",
    "WageTercile",
    "TaxonomyIndex",
    "TaxonomyError",
    "MalformedSoc",
    "UnknownMajorGroup",
    "DuplicateConflict",
    "MissingColumn",
    "EmptyFile",
    "InvalidWage",
    "canonical_task_name",
    "parse_soc",
    "load_taxonomy",
    "load_wage_base",
    "assign_terciles",
]

# 2010 SOC major groups (military 55 excluded: 22 occupation families).
SOC_MAJOR_GROUPS: dict[int, str] = {
    11: "Management",
    13: "Business and Financial Operations",
    15: "Computer and Mathematical",
    17: "Architecture and Engineering",
    19: "Life, Physical, and Social Science",
    21: "Community and Social Service",
    23: "Legal",
    25: "Education, Training, and Library",
    27: "Arts, Design, Entertainment, Sports, and Media",
    29: "Healthcare Practitioners and Technical",
    31: "Healthcare Support",
    33: "Protective Service",
    35: "Food Preparation and Serving Related",
    37: "Building and Grounds Cleaning and Maintenance",
    39: "Personal Care and Service",
    41: "Sales and Related",
    43: "Office and Administrative Support",
    45: "Farming, Fishing, and Forestry",
    47: "Construction and Extraction",
    49: "Installation, Maintenance, and Repair",
    51: "Production",
    53: "Transportation and Material Moving",
}


class TaxonomyError(ValueError):
    """Base class for taxonomy parsing and indexing errors."""


class MalformedSoc(TaxonomyError):
    pass


class UnknownMajorGroup(TaxonomyError):
    pass


class DuplicateConflict(TaxonomyError):
    pass


class MissingColumn(TaxonomyError):
    pass


class EmptyFile(TaxonomyError):
    pass


class InvalidWage(TaxonomyError):
    pass


_SOC_RE = re.compile(r"^(\d{2})-(\d{4})$")
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True, order=True)
class SocCode:
    major: int
    detail: int

    def __post_init__(self):
        if not (0 <= self.major <= 99 and 0 <= self.detail <= 9999):
            raise MalformedSoc(f"SOC parts out of range: {self.major}, {self.detail}")

    def __str__(self) -> str:
        return f"{self.major:02d}-{self.detail:04d}"

    @property
    def family(self) -> str:
        return SOC_MAJOR_GROUPS[self.major]


def parse_soc(text: str) -> SocCode:
    """Parse a ``NN-NNNN`` occupation code.

    Surrounding whitespace is ignored; anything else off-shape raises
    :class:`MalformedSoc`. Major groups outside the 22 civilian families
    raise :class:`UnknownMajorGroup`.
    """
    if not isinstance(text, str):
        raise MalformedSoc(f"SOC code must be a string, got {type(text).__name__}")
    match = _SOC_RE.match(text.strip())
    if match is None:
        raise MalformedSoc(f"malformed SOC code {text!r}")
    major, detail = int(match.group(1)), int(match.group(2))
    if major not in SOC_MAJOR_GROUPS:
        raise UnknownMajorGroup(f"unknown SOC major group {major:02d} in {text!r}")
    return SocCode(major, detail)


def canonical_task_name(name: str) -> str:
    return _WS_RE.sub(" ", name.strip()).lower()


@dataclass(frozen=True)
class TaskDescriptor:
    task_id: str
    name: str
    cluster: str
    family: str


class WageTercile(str, enum.Enum):
    LOW = "Low"
    MID = "Mid"
    HIGH = "High"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class TaxonomyIndex:
    """Immutable lookup tables: task -> cluster -> family, SOC -> family, SOC -> tercile.

    Task ids are canonical names (trimmed, whitespace collapsed, lowercased),
    so lookups by raw posting text are case-insensitive.
    """

    tasks: Mapping[str, TaskDescriptor]
    occupations: Mapping[SocCode, str]
    terciles: Mapping[SocCode, WageTercile] = field(default_factory=dict)

    def resolve_task(self, name: str) -> TaskDescriptor | None:
        return self.tasks.get(canonical_task_name(name))

    def task_family(self, task_id: str) -> str:
        return self.tasks[task_id].family

    def task_cluster(self, task_id: str) -> str:
        return self.tasks[task_id].cluster

    def occupation_family(self, soc: SocCode) -> str:
        return self.occupations[soc]

    def tercile(self, soc: SocCode) -> WageTercile:
        return self.terciles[soc]

    @property
    def families(self) -> list[str]:
        return sorted({t.family for t in self.tasks.values()})

    @property
    def clusters(self) -> list[str]:
        return sorted({t.cluster for t in self.tasks.values()})

    def with_terciles(self, terciles: Mapping[SocCode, WageTercile]) -> "TaxonomyIndex":
        return replace(self, terciles=dict(terciles))

    def __len__(self) -> int:
        return len(self.tasks)


def _read_rows(path: str | Path, required: Iterable[str]) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyFile(f"{path}: empty file")
        header = [h.strip() for h in reader.fieldnames]
        missing = [c for c in required if c not in header]
        if missing:
            raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}")
        reader.fieldnames = header
        rows = [{k: (v or "").strip() for k, v in row.items() if k is not None} for row in reader]
    if not rows:
        raise EmptyFile(f"{path}: no data rows")
    return rows


def load_taxonomy(
    task_file: str | Path,
    soc_file: str | Path,
    expected_families: int | None = None,
) -> TaxonomyIndex:
    """Build an index from a ``task,cluster,family`` file and a ``soc,family_name`` file.

    Repeated task rows are allowed if they agree; a task mapped to two
    different clusters (or a cluster to two families) is a
    :class:`DuplicateConflict`.
    """
    tasks: dict[str, TaskDescriptor] = {}
    cluster_family: dict[str, str] = {}
    for row in _read_rows(task_file, ("task", "cluster", "family")):
        name, cluster, family = row["task"], row["cluster"], row["family"]
        if not name or not cluster or not family:
            raise TaxonomyError(f"{task_file}: blank field in row {row}")
        task_id = canonical_task_name(name)
        known = cluster_family.setdefault(cluster, family)
        if known != family:
            raise DuplicateConflict(
                f"cluster {cluster!r} assigned to families {known!r} and {family!r}"
            )
        desc = TaskDescriptor(task_id, _WS_RE.sub(" ", name.strip()), cluster, family)
        prev = tasks.get(task_id)
        if prev is not None and (prev.cluster, prev.family) != (cluster, family):
            raise DuplicateConflict(
                f"task {name!r} assigned to clusters {prev.cluster!r} and {cluster!r}"
            )
        tasks.setdefault(task_id, desc)

    if expected_families is not None:
        n_fam = len({t.family for t in tasks.values()})
        if n_fam != expected_families:
            raise TaxonomyError(f"expected {expected_families} task families, found {n_fam}")

    occupations: dict[SocCode, str] = {}
    for row in _read_rows(soc_file, ("soc", "family_name")):
        soc = parse_soc(row["soc"])
        family = row["family_name"] or soc.family
        prev = occupations.get(soc)
        if prev is not None and prev != family:
            raise DuplicateConflict(f"SOC {soc} assigned to families {prev!r} and {family!r}")
        occupations[soc] = family

    return TaxonomyIndex(tasks=tasks, occupations=occupations)


def load_wage_base(path: str | Path, year: int) -> dict[SocCode, float]:
    """Read base-year hourly wages from a ``soc,year,hourly_wage`` file."""
    wages: dict[SocCode, float] = {}
    for row in _read_rows(path, ("soc", "year", "hourly_wage")):
        if int(row["year"]) != year:
            continue
        soc = parse_soc(row["soc"])
        if soc in wages:
            raise DuplicateConflict(f"duplicate base wage for {soc}")
        wages[soc] = float(row["hourly_wage"])
    return wages


K = TypeVar("K", bound=Hashable)


def assign_terciles(
    wages: Mapping[K, float],
    weights: Mapping[K, float] | None = None,
) -> dict[K, WageTercile]:
    """Split occupations into Low/Mid/High wage bins.

    Occupations are ordered by (wage, str(code)). By default the bins hold
    equal counts, with the remainder going to the lower bins first
    (964 -> 322/321/321). If ``weights`` (e.g. base-year employment) is
    given, boundaries fall where cumulative weight crosses 1/3 and 2/3.
    """
    if not wages:
        raise InvalidWage("wage table is empty")
    for key, w in wages.items():
        if not math.isfinite(w) or w <= 0:
            raise InvalidWage(f"wage for {key} must be finite and positive, got {w!r}")

    ordered = sorted(wages, key=lambda k: (wages[k], str(k)))
    bins = (WageTercile.LOW, WageTercile.MID, WageTercile.HIGH)
    out: dict[K, WageTercile] = {}

    if weights is None:
        n = len(ordered)
        base, rem = divmod(n, 3)
        sizes = [base + (1 if i < rem else 0) for i in range(3)]
        pos = 0
        for b, size in zip(bins, sizes):
            for key in ordered[pos:pos + size]:
                out[key] = b
            pos += size
        return out

    total = float(sum(weights[k] for k in ordered))
    if not total > 0:
        raise InvalidWage("tercile weights must sum to a positive value")
    cum = 0.0
    for key in ordered:
        # bin by the weight midpoint so each occupation lands in exactly one bin
        mid = (cum + weights[key] / 2.0) / total
        out[key] = bins[min(2, int(mid * 3))]
        cum += weights[key]
    return out
