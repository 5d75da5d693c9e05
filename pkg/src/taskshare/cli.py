"""``taskshare`` command-line entry point.

Exit codes: 0 success, 1 internal error, 2 input error. Errors are printed
to stderr as a single JSON object ``{"error": CODE, "message": ...}``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import ConfigError, load_config
from .forecast.arima import ArimaError
from .ingest import IngestError
from .sample import generate_sample, sample_dir
from .shares import SharesError
from .taxonomy import TaxonomyError

logger = logging.getLogger("taskshare")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--output-dir", type=Path, help="output directory (overrides $TASKSHARE_OUTPUT_DIR)")
    p.add_argument("--taxonomy", type=Path)
    p.add_argument("--soc-families", type=Path)
    p.add_argument("--postings", type=Path)
    p.add_argument("--annual-stats", type=Path)
    p.add_argument("--wage-base", type=Path)
    p.add_argument("--start", help="first month, YYYY-MM")
    p.add_argument("--months", type=int)
    p.add_argument("--anchor-month", type=int, help="calendar month that carries each annual value")
    p.add_argument("--base-year", type=int)
    p.add_argument("--tercile-weighting", choices=["count", "employment"])
    p.add_argument("--keep-zeros", action="store_const", const=True, default=None)
    p.add_argument("--json", dest="write_json", action="store_const", const=True, default=None)
    p.add_argument("--smoothing-window", type=int)
    p.add_argument("--trend-time-scale", choices=["unit", "month"])
    p.add_argument("--top-k", type=int)
    p.add_argument("--train-months", type=int)
    p.add_argument("--order", help="ARIMA order p,d,q or 'auto'")
    p.add_argument("--grid", help="candidate orders 'p,d,q;p,d,q;...'")
    p.add_argument("--forecast-on", choices=["smoothed", "raw"])
    p.add_argument("--interval-level", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


STAGES = {
    "ingest": [pipeline.run_ingest],
    "shares": [pipeline.run_shares],
    "trend": [pipeline.run_trend],
    "forecast": [pipeline.run_forecast],
    "report": [pipeline.run_report],
    "all": [pipeline.run_ingest, pipeline.run_shares, pipeline.run_trend, pipeline.run_forecast, pipeline.run_report],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="taskshare", description="Task-share time series pipeline")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("ingest", "count postings and interpolate annual statistics"),
        ("shares", "compute task-shares and their aggregates"),
        ("trend", "trend coefficients of smoothed aggregate series"),
        ("forecast", "ARIMA one-step-ahead forecasts and MAPE"),
        ("report", "summary tables and plot data"),
        ("all", "run every stage in order"),
    ]:
        _add_common(sub.add_parser(name, help=help_))
    sp = sub.add_parser("sample", help="write the synthetic sample corpus")
    sp.add_argument("out", type=Path, nargs="?", help="target directory (default: print bundled path)")
    sp.add_argument("--seed", type=int, default=0)
    return parser


_NOT_OVERRIDES = {"command", "config", "verbose", "out"}


def _fail(code: str, message: str, status: int) -> int:
    print(json.dumps({"error": code, "message": message}), file=sys.stderr)
    return status


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.command == "sample":
        if args.out is None:
            print(sample_dir())
            return EXIT_OK
        expected = generate_sample(args.out, args.seed)
        print(json.dumps({"out": str(args.out), "postings": expected["postings_read"]}))
        return EXIT_OK

    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_OVERRIDES and v is not None}
    try:
        cfg = load_config(args.config, overrides)
        for stage in STAGES[args.command]:
            result = stage(cfg)
            if stage is pipeline.run_ingest:
                print(json.dumps(result.to_dict(), sort_keys=True))
    except FileNotFoundError as exc:
        return _fail("FILE_NOT_FOUND", str(exc), EXIT_INPUT)
    except pipeline.PipelineInputError as exc:
        return _fail(exc.code, str(exc), EXIT_INPUT)
    except ConfigError as exc:
        return _fail("CONFIG_ERROR", str(exc), EXIT_INPUT)
    except (TaxonomyError, IngestError, SharesError, ArimaError) as exc:
        return _fail("INVALID_INPUT", f"{type(exc).__name__}: {exc}", EXIT_INPUT)
    except pipeline.ConsistencyViolation as exc:
        return _fail("CONSISTENCY_VIOLATION", str(exc), EXIT_INTERNAL)
    except Exception as exc:  # noqa: BLE001
        logger.debug("internal error", exc_info=True)
        return _fail("INTERNAL_ERROR", f"{type(exc).__name__}: {exc}", EXIT_INTERNAL)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
