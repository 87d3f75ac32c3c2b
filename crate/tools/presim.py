#!/usr/bin/env python3
"""Brute-force selection-rate oracle.

Independent of the Rust implementation: plain numpy least squares over every
subset of a p=6 Gaussian design, W = I, beta0 = (3, 1.5, 0, 0, 2, 0),
sigma0^2 = 1. Prints true/full/overfit/underfit rates per criterion and n.
The thresholds used by the acceptance suite are derived from this output
(see tools/presim_results.md).
"""
import itertools
import sys

import numpy as np

BETA0 = np.array([3.0, 1.5, 0.0, 0.0, 2.0, 0.0])
ACTIVE0 = frozenset(i for i, b in enumerate(BETA0) if b != 0.0)
P = len(BETA0)
KINDS = ["RIC", "RIC_STAR", "RICC", "AIC", "AICC", "BIC"]


def criteria(n, k, rss):
    s2r = rss / (n - k)
    s2m = rss / n
    d = n - k - 2
    return {
        "RIC": (n - k) * np.log(s2r) + k * np.log(n) - k + 4.0 / d,
        "RIC_STAR": (n - k) * np.log(s2r) - k + 4.0 / d,
        "RICC": n * np.log(s2r) + k + 4.0 * (k + 1) / d,
        "AIC": n * np.log(s2m) + 2 * k,
        "AICC": n * np.log(s2m) + 2.0 * n * (k + 1) / d,
        "BIC": n * np.log(s2m) + k * np.log(n),
    }


def run(n, reps, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, P))
    subsets = [s for k in range(P + 1) for s in itertools.combinations(range(P), k)]
    tallies = {kind: {"true": 0, "full": 0, "over": 0, "under": 0, "ksum": 0} for kind in KINDS}
    mu = x @ BETA0
    for _ in range(reps):
        y = mu + rng.standard_normal(n)
        best = {kind: (np.inf, None) for kind in KINDS}
        for s in subsets:
            k = len(s)
            if k == 0:
                rss = float(y @ y)
            else:
                xa = x[:, list(s)]
                coef, *_ = np.linalg.lstsq(xa, y, rcond=None)
                r = y - xa @ coef
                rss = float(r @ r)
            vals = criteria(n, k, rss)
            for kind in KINDS:
                if vals[kind] < best[kind][0]:
                    best[kind] = (vals[kind], s)
        for kind in KINDS:
            s = frozenset(best[kind][1])
            t = tallies[kind]
            t["ksum"] += len(s)
            if s == ACTIVE0:
                t["true"] += 1
            elif s > ACTIVE0:
                t["over"] += 1
            else:
                t["under"] += 1
            if len(s) == P:
                t["full"] += 1
    return tallies


def main():
    reps = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
    for n in (50, 200, 800):
        for seed in (1, 2):
            t = run(n, reps, seed * 1000 + n)
            print(f"n={n} seed={seed} reps={reps}")
            for kind in KINDS:
                r = t[kind]
                print(
                    f"  {kind:9s} true={r['true']/reps:.3f} full={r['full']/reps:.3f} "
                    f"over={r['over']/reps:.3f} under={r['under']/reps:.3f} "
                    f"mean_k={r['ksum']/reps:.3f}"
                )


if __name__ == "__main__":
    main()
