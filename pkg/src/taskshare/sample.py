"""Deterministic synthetic corpus: 3 task families, 6 occupations, 96 months.

The generator keeps its own tally of what it wrote (distinct cube cells,
skip reasons, pair statistics) and stores it in ``expected.json`` so that
ingest results can be checked against counts that never went through the
ingest code.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path

import numpy as np

TASKS = [
    # task, cluster, family
    ("Python", "Scripting Languages", "Information Technology"),
    ("Perl", "Scripting Languages", "Information Technology"),
    ("SQL", "SQL Databases and Programming", "Information Technology"),
    ("Patient Care", "Basic Patient Care", "Health Care"),
    ("Vital Signs", "Basic Patient Care", "Health Care"),
    ("Medical Coding", "Medical Billing and Coding", "Health Care"),
    ("Scheduling", "Scheduling", "Administration"),
    ("Calendar Management", "Scheduling", "Administration"),
    ("Data Entry", "Clerical Duties", "Administration"),
    ("Filing", "Clerical Duties", "Administration"),
]

# soc, family name, 2010 wage, 2010 employment, yearly wage growth, yearly employment growth
OCCUPATIONS = [
    ("11-9199", "Management", 48.10, 1_050_000, 0.021, 0.010),
    ("15-1132", "Computer and Mathematical", 43.27, 520_000, 0.025, 0.045),
    ("29-1141", "Healthcare Practitioners and Technical", 32.56, 2_700_000, 0.015, 0.020),
    ("43-6014", "Office and Administrative Support", 15.76, 2_200_000, 0.012, -0.012),
    ("31-1014", "Healthcare Support", 12.09, 1_430_000, 0.010, 0.015),
    ("35-3021", "Food Preparation and Serving Related", 8.90, 2_800_000, 0.018, 0.030),
]

# per-occupation task mention probability at the start and end of the window
TASK_PROFILE = {
    "11-9199": {"Python": (0.02, 0.08), "SQL": (0.05, 0.07), "Scheduling": (0.30, 0.25),
                "Calendar Management": (0.10, 0.12), "Data Entry": (0.05, 0.04), "Medical Coding": (0.02, 0.03)},
    "15-1132": {"Python": (0.20, 0.45), "Perl": (0.15, 0.05), "SQL": (0.50, 0.40), "Scheduling": (0.05, 0.06)},
    "29-1141": {"Patient Care": (0.70, 0.75), "Vital Signs": (0.40, 0.45), "Medical Coding": (0.05, 0.08),
                "Scheduling": (0.15, 0.18), "Data Entry": (0.05, 0.07), "SQL": (0.01, 0.02)},
    "43-6014": {"Scheduling": (0.55, 0.60), "Calendar Management": (0.30, 0.40), "Data Entry": (0.45, 0.35),
                "Filing": (0.40, 0.25), "Medical Coding": (0.05, 0.06), "SQL": (0.03, 0.05)},
    "31-1014": {"Patient Care": (0.60, 0.65), "Vital Signs": (0.50, 0.48), "Scheduling": (0.10, 0.12),
                "Filing": (0.05, 0.03)},
    "35-3021": {"Scheduling": (0.08, 0.10), "Data Entry": (0.02, 0.04), "Filing": (0.01, 0.02)},
}

POSTINGS_PER_MONTH = {"11-9199": 30, "15-1132": 40, "29-1141": 35, "43-6014": 30, "31-1014": 25, "35-3021": 20}

YEARS = range(2010, 2018)
N_MONTHS = 96


def _canon(name: str) -> str:
    return " ".join(name.split()).lower()


def generate_sample(out_dir: str | Path, seed: int = 0) -> dict:
    """Write the sample files into ``out_dir`` and return the expected tallies."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    with open(out / "taxonomy.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["task", "cluster", "family"])
        w.writerows(TASKS)
        # repeated, consistent row is allowed
        w.writerow(TASKS[0])
    with open(out / "soc_families.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["soc", "family_name"])
        for soc, fam, *_ in OCCUPATIONS:
            w.writerow([soc, fam])
    with open(out / "annual_stats.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["soc", "year", "hourly_wage", "employment"])
        for soc, _fam, wage, emp, gw, ge in OCCUPATIONS:
            for k, year in enumerate(YEARS):
                wk = wage * (1 + gw) ** k * (1 + rng.normal(0, 0.004))
                ek = emp * (1 + ge) ** k * (1 + rng.normal(0, 0.01))
                w.writerow([soc, year, f"{wk:.2f}", int(round(ek))])

    family_of = {_canon(t): f for t, _c, f in TASKS}
    cells: set[tuple[str, str, int]] = set()
    posting_cells: set[tuple[str, int]] = set()
    expected_report = defaultdict(int)
    records = []
    pid = 0

    def emit(date: str, soc: str, tasks: list[str]) -> None:
        nonlocal pid
        pid += 1
        records.append({"posting_id": f"P{pid:06d}", "date": date, "soc": soc, "tasks": tasks})

    for t in range(N_MONTHS):
        year, month = 2010 + t // 12, t % 12 + 1
        frac = t / (N_MONTHS - 1)
        for soc, *_ in OCCUPATIONS:
            n_post = int(rng.poisson(POSTINGS_PER_MONTH[soc]))
            for _ in range(max(n_post, 1)):
                day = int(rng.integers(1, 29))
                tasks = []
                for task, (p0, p1) in TASK_PROFILE[soc].items():
                    if rng.random() < p0 + (p1 - p0) * frac:
                        tasks.append(task)
                distinct = {_canon(x) for x in tasks}
                u = rng.random()
                if tasks and u < 0.03:
                    # same task repeated with different casing/spacing
                    tasks.append("  " + tasks[0].upper() + " ")
                    expected_report["duplicate_task_mentions"] += 1
                elif u < 0.05:
                    tasks.append("Underwater Basket Weaving")
                    expected_report["unknown_task_mentions"] += 1
                emit(f"{year:04d}-{month:02d}-{day:02d}", soc, tasks)
                posting_cells.add((soc, t))
                for task_id in distinct:
                    cells.add((task_id, soc, t))

    # records that ingest must skip
    emit("2009-12-15", "15-1132", ["Python"])
    emit("2018-01-03", "29-1141", ["Patient Care"])
    expected_report["out_of_window"] += 2
    emit("2013-02-30", "43-6014", ["Filing"])
    emit("not-a-date", "43-6014", ["Filing"])
    expected_report["bad_date"] += 2
    emit("2014-06-01", "55-1011", ["Scheduling"])
    emit("2014-06-01", "13-2011", ["Scheduling"])
    emit("2014-06-01", "15-113", ["Python"])
    expected_report["unknown_soc"] += 3

    order = rng.permutation(len(records))
    with open(out / "postings.jsonl", "w", encoding="utf-8") as fh:
        for k in order:
            fh.write(json.dumps(records[k], sort_keys=True) + "\n")

    occs_per_task: dict[str, set[str]] = defaultdict(set)
    tasks_per_occ: dict[str, set[str]] = defaultdict(set)
    for task_id, soc, _t in cells:
        occs_per_task[task_id].add(soc)
        tasks_per_occ[soc].add(task_id)
    tasks_per_family: dict[str, set[str]] = defaultdict(set)
    for task_id in occs_per_task:
        tasks_per_family[family_of[task_id]].add(task_id)

    expected = {
        "seed": seed,
        "postings_read": len(records),
        "postings_used": len(records) - expected_report["out_of_window"]
        - expected_report["bad_date"] - expected_report["unknown_soc"],
        "report": dict(sorted(expected_report.items())),
        "n_cube_rows": len(cells),
        "n_posting_rows": len(posting_cells),
        "occs_per_task": {k: len(v) for k, v in sorted(occs_per_task.items())},
        "tasks_per_occ": {k: len(v) for k, v in sorted(tasks_per_occ.items())},
        "tasks_per_family": {k: len(v) for k, v in sorted(tasks_per_family.items())},
    }
    with open(out / "expected.json", "w", encoding="utf-8") as fh:
        json.dump(expected, fh, indent=2, sort_keys=True)
        fh.write("\n")

    (out / "sample.cfg").write_text(
        "# bundled synthetic sample; paths are relative to this file\n"
        "taxonomy = taxonomy.csv\n"
        "soc_families = soc_families.csv\n"
        "postings = postings.jsonl\n"
        "annual_stats = annual_stats.csv\n"
        "start = 2010-01\n"
        "months = 96\n"
        "base_year = 2010\n"
        "smoothing_window = 3\n"
        "train_months = 72\n"
        "trend_time_scale = unit\n"
        "order = auto\n"
        f"seed = {seed}\n",
        encoding="utf-8",
    )
    return expected


def sample_dir() -> Path:
    return Path(__file__).parent / "data" / "sample"
