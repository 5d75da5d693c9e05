"""Pipeline configuration: key = value text files with command-line overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .forecast.arima import DEFAULT_GRID, ArimaOrder
from .ingest import Window

OUTPUT_ENV = "TASKSHARE_OUTPUT_DIR"

_PATH_KEYS = ("taxonomy", "soc_families", "postings", "annual_stats", "wage_base", "output_dir")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    taxonomy: Path | None = None
    soc_families: Path | None = None
    postings: Path | None = None
    annual_stats: Path | None = None
    wage_base: Path | None = None
    output_dir: Path = Path("taskshare-out")

    start: str = "2010-01"
    months: int = 96
    anchor_month: int = 1
    base_year: int = 2010
    tercile_weighting: str = "count"

    keep_zeros: bool = False
    smoothing_window: int = 3
    trend_time_scale: str = "unit"
    top_k: int = 5

    train_months: int = 72
    order: str = "auto"
    grid: str = ""
    forecast_on: str = "smoothed"
    interval_level: float = 0.95
    seed: int = 0
    write_json: bool = False

    @property
    def window(self) -> Window:
        return Window.parse(self.start, self.months)

    @property
    def arima_order(self) -> ArimaOrder | None:
        return None if self.order in ("", "auto") else ArimaOrder.parse(self.order)

    @property
    def arima_grid(self) -> tuple[ArimaOrder, ...]:
        if not self.grid:
            return DEFAULT_GRID
        return tuple(ArimaOrder.parse(part) for part in self.grid.split(";") if part.strip())

    @property
    def forecast_smoothing(self) -> int:
        return self.smoothing_window if self.forecast_on == "smoothed" else 1

    def validate(self) -> "PipelineConfig":
        try:
            window = self.window
            self.arima_order
            self.arima_grid
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not self.train_months < window.n_months:
            raise ConfigError("train_months must be smaller than the window length")
        if self.train_months < 1:
            raise ConfigError("train_months must be positive")
        if self.smoothing_window < 1 or self.smoothing_window % 2 == 0:
            raise ConfigError("smoothing_window must be odd and >= 1")
        if self.trend_time_scale not in ("unit", "month"):
            raise ConfigError("trend_time_scale must be 'unit' or 'month'")
        if self.forecast_on not in ("smoothed", "raw"):
            raise ConfigError("forecast_on must be 'smoothed' or 'raw'")
        if self.tercile_weighting not in ("count", "employment"):
            raise ConfigError("tercile_weighting must be 'count' or 'employment'")
        if not 0 < self.interval_level < 1:
            raise ConfigError("interval_level must lie in (0, 1)")
        if not 1 <= self.anchor_month <= 12:
            raise ConfigError("anchor_month must be in 1..12")
        if self.top_k < 1:
            raise ConfigError("top_k must be positive")
        return self

    def updated(self, values: Mapping[str, Any]) -> "PipelineConfig":
        return replace(self, **_coerce(values))

    def as_dict(self) -> dict[str, Any]:
        return {f.name: (str(v) if isinstance(v := getattr(self, f.name), Path) else v) for f in fields(self)}


def _coerce(values: Mapping[str, Any], base_dir: Path | None = None) -> dict[str, Any]:
    types = {f.name: f.type for f in fields(PipelineConfig)}
    out: dict[str, Any] = {}
    for key, raw in values.items():
        key = key.replace("-", "_")
        if key not in types:
            raise ConfigError(f"unknown config key {key!r}")
        if raw is None:
            continue
        if key in _PATH_KEYS:
            path = Path(raw).expanduser()
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            out[key] = path
        elif types[key] in ("int", int, "float", float):
            conv = int if types[key] in ("int", int) else float
            try:
                out[key] = conv(raw)
            except (TypeError, ValueError):
                raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
        elif types[key] in ("bool", bool):
            out[key] = raw if isinstance(raw, bool) else str(raw).strip().lower() in ("1", "true", "yes", "on")
        else:
            out[key] = str(raw).strip()
    return out


def parse_config_text(text: str) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def load_config(
    path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
    environ: Mapping[str, str] = os.environ,
) -> PipelineConfig:
    """Defaults, then the config file, then ``$TASKSHARE_OUTPUT_DIR``, then ``overrides``.

    Relative paths in the file resolve against the file's directory.
    """
    cfg = PipelineConfig()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        values = parse_config_text(path.read_text(encoding="utf-8"))
        cfg = replace(cfg, **_coerce(values, base_dir=path.parent))
    if environ.get(OUTPUT_ENV):
        cfg = replace(cfg, output_dir=Path(environ[OUTPUT_ENV]))
    if overrides:
        cfg = replace(cfg, **_coerce({k: v for k, v in overrides.items() if v is not None}))
    return cfg.validate()
