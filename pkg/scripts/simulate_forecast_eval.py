"""Simulation study for the forecaster: interval coverage and MAPE on synthetic ARMA data.

Prints one JSON line per design with the empirical coverage of the one-step
intervals and the median MAPE of the forecasts.
"""

import argparse
import json

import numpy as np

from taskshare.forecast import ArimaOrder, fit_arima, mape, rolling_one_step

DESIGNS = {
    "ar1": (ArimaOrder(1, 0, 0), [0.6], []),
    "ma1": (ArimaOrder(0, 0, 1), [], [0.4]),
    "arma11": (ArimaOrder(1, 0, 1), [0.5], [0.3]),
    "ari11": (ArimaOrder(1, 1, 0), [0.4], []),
}


def simulate(rng, n, ar, ma, level, burn=200):
    eps = rng.normal(size=n + burn)
    x = np.zeros(n + burn)
    for t in range(n + burn):
        x[t] = eps[t]
        x[t] += sum(a * x[t - 1 - i] for i, a in enumerate(ar) if t - 1 - i >= 0)
        x[t] += sum(b * eps[t - 1 - j] for j, b in enumerate(ma) if t - 1 - j >= 0)
    return level + x[burn:]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--series", type=int, default=50)
    ap.add_argument("--train", type=int, default=200)
    ap.add_argument("--test", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    for name, (order, ar, ma) in DESIGNS.items():
        covered = total = 0
        mapes = []
        for _ in range(args.series):
            w = simulate(rng, args.train + args.test, ar, ma, level=0.0 if order.d else 50.0)
            x = np.cumsum(w) + 500.0 if order.d else w
            pts = rolling_one_step(x, fit_arima(x[: args.train], order), args.train)
            covered += sum(p.lower95 <= p.actual <= p.upper95 for p in pts)
            total += len(pts)
            mapes.append(mape(pts))
        print(json.dumps({"design": name, "order": str(order), "events": total,
                          "coverage": round(covered / total, 4), "median_mape": round(float(np.median(mapes)), 4)}))


if __name__ == "__main__":
    main()
