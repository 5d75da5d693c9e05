"""Run every stage on the bundled sample and print the MAPE table."""

import argparse
import sys
from pathlib import Path

from taskshare.cli import main
from taskshare.sample import sample_dir

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", type=Path, nargs="?", default=Path("sample-out"))
    ap.add_argument("--order", default="auto", help="ARIMA order p,d,q or 'auto'")
    args = ap.parse_args()
    code = main(["all", "--config", str(sample_dir() / "sample.cfg"),
                 "--output-dir", str(args.out), "--order", args.order])
    if code == 0:
        print((args.out / "report" / "mape_table.csv").read_text(), end="")
    sys.exit(code)
