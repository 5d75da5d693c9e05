"""Stage runners behind the CLI. Each stage reads upstream artifacts from the
output directory and rewrites its own subdirectory in full."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis, shares
from .config import PipelineConfig
from .forecast import SuiteResult, forecast_suite, write_evaluation_csv, write_forecasts_csv
from .ingest import (
    CountsCube,
    IngestReport,
    MonthlyStats,
    build_monthly_stats,
    ingest_postings,
    iter_postings,
    load_annual_stats,
)
from .taxonomy import TaxonomyIndex, WageTercile, assign_terciles, load_taxonomy, load_wage_base, parse_soc

logger = logging.getLogger(__name__)

CONSISTENCY_TOL = 1e-9


class PipelineInputError(Exception):
    """Bad or missing input; maps to exit code 2."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class ConsistencyViolation(Exception):
    pass


@dataclass
class Paths:
    root: Path

    @property
    def ingest(self) -> Path:
        return self.root / "ingest"

    @property
    def shares(self) -> Path:
        return self.root / "shares"

    @property
    def trend(self) -> Path:
        return self.root / "trend"

    @property
    def forecast(self) -> Path:
        return self.root / "forecast"

    @property
    def report(self) -> Path:
        return self.root / "report"


def _require_file(path: Path | None, what: str) -> Path:
    if path is None:
        raise PipelineInputError("MISSING_CONFIG", f"no {what} path configured")
    if not Path(path).is_file():
        raise PipelineInputError("FILE_NOT_FOUND", f"{what} file not found: {path}")
    return Path(path)


def _require_artifact(path: Path, stage: str) -> Path:
    if not path.is_file():
        raise PipelineInputError("MISSING_ARTIFACT", f"{path} not found; run `taskshare {stage}` first")
    return path


def _dump_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_index(cfg: PipelineConfig) -> TaxonomyIndex:
    return load_taxonomy(
        _require_file(cfg.taxonomy, "taxonomy"), _require_file(cfg.soc_families, "SOC family")
    )


def _read_terciles(path: Path) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        return {parse_soc(r["soc"]): WageTercile(r["tercile"]) for r in csv.DictReader(fh)}


# --- stages ---------------------------------------------------------------------

def run_ingest(cfg: PipelineConfig) -> IngestReport:
    window = cfg.window
    postings = _require_file(cfg.postings, "postings")
    annual_path = _require_file(cfg.annual_stats, "annual stats")
    index = load_index(cfg)

    cube, report = ingest_postings(iter_postings(postings), index, window)
    if report.postings_read == 0:
        logger.warning("postings file %s is empty", postings)

    annual = load_annual_stats(annual_path)
    stats = build_monthly_stats(annual, window, cfg.anchor_month)

    if cfg.wage_base is not None:
        base = load_wage_base(_require_file(cfg.wage_base, "wage base"), cfg.base_year)
    else:
        base = stats.base_year_wages(window, cfg.base_year)
    weights = None
    if cfg.tercile_weighting == "employment":
        weights = {j: np.mean([stats.employment[(j, t)] for t in range(window.n_months)
                               if window.year_month(t)[0] == cfg.base_year]) for j in base}
    terciles = assign_terciles(base, weights) if base else {}

    out = Paths(cfg.output_dir).ingest
    out.mkdir(parents=True, exist_ok=True)
    cube.write(out / "counts.csv", out / "postings.csv", window)
    stats.write(out / "monthly_stats.csv", window)
    with open(out / "terciles.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["soc", "tercile", "base_wage"])
        for soc in sorted(terciles):
            w.writerow([str(soc), str(terciles[soc]), repr(float(base[soc]))])
    _dump_json(out / "ingest_report.json", report.to_dict())
    return report


@dataclass
class SharesOutput:
    pair: shares.SeriesSet
    by_family: shares.SeriesSet
    by_tercile: shares.SeriesSet
    by_cluster: shares.SeriesSet
    max_gap: float
    report: shares.ShareReport


def compute_shares(
    cube: CountsCube, stats: MonthlyStats, index: TaxonomyIndex, n_months: int, keep_zeros: bool = False
) -> SharesOutput:
    rep = shares.ShareReport()
    z = shares.occupation_task_share(cube, rep)
    e = shares.employment_share(stats)
    y = shares.task_share(z, e, n_months, keep_zeros=keep_zeros, report=rep)
    fam = shares.aggregate_by_family(y, index)
    ter = shares.aggregate_by_tercile(y, index)
    clu = shares.aggregate_cluster_by_tercile(y, index)
    gap = shares.mass_consistency(y, fam, ter, index)
    return SharesOutput(y, fam, ter, clu, gap, rep)


def run_shares(cfg: PipelineConfig) -> SharesOutput:
    window = cfg.window
    p = Paths(cfg.output_dir)
    cube = CountsCube.read(
        _require_artifact(p.ingest / "counts.csv", "ingest"),
        _require_artifact(p.ingest / "postings.csv", "ingest"),
        window,
    )
    stats = MonthlyStats.read(_require_artifact(p.ingest / "monthly_stats.csv", "ingest"), window)
    terciles = _read_terciles(_require_artifact(p.ingest / "terciles.csv", "ingest"))
    index = load_index(cfg).with_terciles(terciles)

    res = compute_shares(cube, stats, index, window.n_months, cfg.keep_zeros)
    if res.max_gap > CONSISTENCY_TOL:
        raise ConsistencyViolation(
            f"family totals disagree across aggregations by {res.max_gap:.3e} (> {CONSISTENCY_TOL})"
        )

    p.shares.mkdir(parents=True, exist_ok=True)
    sets = [res.pair, res.by_family, res.by_tercile, res.by_cluster]
    shares.write_series_csv(p.shares / "task_shares.csv", sets, window)
    if cfg.write_json:
        shares.write_series_json(p.shares / "task_shares.json", sets, window)
    stats_ = shares.pair_statistics(cube, index) if not cube.is_empty() else shares.PairStats({}, {}, {})
    _dump_json(p.shares / "pair_stats.json", {
        "occs_per_task": stats_.occs_per_task,
        "tasks_per_occ": stats_.tasks_per_occ,
        "tasks_per_family": stats_.tasks_per_family,
    })
    _dump_json(p.shares / "consistency.json", {
        "max_abs_gap": res.max_gap,
        "tolerance": CONSISTENCY_TOL,
        "ok": res.max_gap <= CONSISTENCY_TOL,
        "orphan_counts": res.report.orphan_counts,
        "missing_employment": res.report.missing_employment,
        "dropped_zero_pairs": res.report.dropped_zero_pairs,
        "series": {str(s.level): len(s) for s in sets},
    })
    return res


def _load_shares(cfg: PipelineConfig) -> dict[shares.Level, shares.SeriesSet]:
    window = cfg.window
    path = _require_artifact(Paths(cfg.output_dir).shares / "task_shares.csv", "shares")
    loaded = shares.read_series_csv(path, window)
    for level in shares.Level:
        loaded.setdefault(level, shares.SeriesSet(level, window.n_months))
    return loaded


def run_trend(cfg: PipelineConfig) -> list:
    loaded = _load_shares(cfg)
    levels = [shares.Level.FAMILY_BY_OCC_FAMILY, shares.Level.FAMILY_BY_TERCILE, shares.Level.CLUSTER_BY_TERCILE]
    rows = analysis.trend_table(
        [loaded[lv] for lv in levels], cfg.smoothing_window, cfg.trend_time_scale
    )
    out = Paths(cfg.output_dir).trend
    out.mkdir(parents=True, exist_ok=True)
    analysis.write_trend_csv(out / "trend.csv", rows)
    return rows


def run_forecast(cfg: PipelineConfig) -> SuiteResult:
    loaded = _load_shares(cfg)
    result = forecast_suite(
        loaded[shares.Level.FAMILY_BY_TERCILE],
        train_months=cfg.train_months,
        order=cfg.arima_order,
        grid=cfg.arima_grid,
        smoothing_window=cfg.forecast_smoothing,
        level=cfg.interval_level,
    )
    out = Paths(cfg.output_dir).forecast
    out.mkdir(parents=True, exist_ok=True)
    write_forecasts_csv(out / "forecasts.csv", result, cfg.window)
    write_evaluation_csv(out / "evaluation.csv", result)
    _dump_json(out / "models.json", {
        f"{k[0]}|{k[1]}": {
            "order": str(m.order),
            "ar": [float(v) for v in m.ar_coeffs],
            "ma": [float(v) for v in m.ma_coeffs],
            "intercept": m.intercept,
            "sigma2": m.sigma2,
        }
        for k, m in sorted(result.models.items())
    })
    _dump_json(out / "failures.json", {f"{k[0]}|{k[1]}": msg for k, msg in sorted(result.failures.items())})
    for key, msg in sorted(result.failures.items()):
        logger.warning("forecast failed for %s: %s", key, msg)
    return result


# --- report ---------------------------------------------------------------------

_TERCILES = ("High", "Mid", "Low")


def _pivot(rows: dict[tuple[str, str], float], fmt: str) -> list[list[str]]:
    families = sorted({k[0] for k in rows})
    return [[f] + [format(rows[(f, r)], fmt) if (f, r) in rows else "" for r in _TERCILES] for f in families]


def _md_table(header: list[str], body: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(row) + " |" for row in body]
    return lines


def run_report(cfg: PipelineConfig) -> Path:
    p = Paths(cfg.output_dir)
    window = cfg.window
    loaded = _load_shares(cfg)
    trend_path = _require_artifact(p.trend / "trend.csv", "trend")
    eval_path = _require_artifact(p.forecast / "evaluation.csv", "forecast")
    fc_path = _require_artifact(p.forecast / "forecasts.csv", "forecast")

    with open(trend_path, newline="", encoding="utf-8") as fh:
        trend_rows = list(csv.DictReader(fh))
    with open(eval_path, newline="", encoding="utf-8") as fh:
        mape_rows = {(r["family"], r["tercile"]): float(r["mape"]) for r in csv.DictReader(fh)}
    forecasts: dict[tuple[str, str, int], dict] = {}
    with open(fc_path, newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            forecasts[(r["family"], r["tercile"], window.parse_label(r["month"]))] = r

    p.report.mkdir(parents=True, exist_ok=True)
    lines = ["# Task-share report", ""]

    by_tercile = loaded[shares.Level.FAMILY_BY_TERCILE]
    lines += [f"## Top {cfg.top_k} task families per wage tercile (mean task-share)", ""]
    for r in _TERCILES:
        subset = shares.SeriesSet(by_tercile.level, by_tercile.n_months,
                                  {k: v for k, v in by_tercile.data.items() if k[1] == r})
        top = analysis.rank_series(subset, "mean_level", cfg.top_k) if len(subset) else []
        lines.append(f"- {r}: " + (", ".join(k[0] for k in top) if top else "(no data)"))
    lines.append("")

    def slopes(level: str) -> dict[tuple[str, str], float]:
        return {(r["key1"], r["key2"]): float(r["slope"]) for r in trend_rows if r["level"] == level}

    lines += ["## Trend coefficients: task family x wage tercile", ""]
    lines += _md_table(["Task family", *_TERCILES], _pivot(slopes("FamilyByTercile"), ".4g"))
    lines += ["", "## Trend coefficients: task cluster x wage tercile", ""]
    lines += _md_table(["Task cluster", *_TERCILES], _pivot(slopes("ClusterByTercile"), ".4g"))
    lines += ["", "## Trend coefficients: task family x occupation family", ""]
    fam = slopes("FamilyByOccFamily")
    lines += _md_table(["Task family", "Occupation family", "Slope"],
                       [[k[0], k[1], format(v, ".4g")] for k, v in sorted(fam.items())])
    lines += ["", "## One-step-ahead MAPE (%)", ""]
    mape_table = _pivot(mape_rows, ".2f")
    lines += _md_table(["Task family", *_TERCILES], mape_table)
    lines.append("")
    (p.report / "summary.md").write_text("\n".join(lines), encoding="utf-8")

    with open(p.report / "mape_table.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["family", *_TERCILES])
        w.writerows(mape_table)

    with open(p.report / "plot_data.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "key1", "key2", "month", "raw", "smoothed", "forecast_mean", "lower95", "upper95"])
        for level in (shares.Level.FAMILY_BY_OCC_FAMILY, shares.Level.FAMILY_BY_TERCILE, shares.Level.CLUSTER_BY_TERCILE):
            for ser in loaded[level]:
                smooth = analysis.moving_average(ser.values, min(cfg.smoothing_window, len(ser.values)))
                for t in range(window.n_months):
                    fc = forecasts.get((*ser.key, t)) if level is shares.Level.FAMILY_BY_TERCILE else None
                    w.writerow([str(level), ser.key[0], ser.key[1], window.label(t),
                                repr(float(ser.values[t])), repr(float(smooth[t])),
                                fc["mean"] if fc else "", fc["lower95"] if fc else "", fc["upper95"] if fc else ""])
    return p.report / "summary.md"
