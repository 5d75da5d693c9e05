"""Regenerate the bundled synthetic sample under src/taskshare/data/sample."""

import argparse
import json

from taskshare.sample import generate_sample, sample_dir

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    expected = generate_sample(sample_dir(), args.seed)
    print(json.dumps({k: expected[k] for k in ("postings_read", "n_cube_rows", "n_posting_rows")}))
