"""Regenerate tests/data/quantile_reference.json.

Reference quantiles are found by bisection on the normal and chi-square
CDFs in 60-digit arithmetic, independently of the library code.
"""
import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 60

TAILS = [1e-10, 1e-8, 1e-6, 1e-4, 1e-3, 0.005, 0.01, 0.025]
MIDDLE = [0.05 + 0.9 * k / 32 for k in range(33)]
GRID = sorted(set(TAILS + [1 - p for p in TAILS] + MIDDLE + [0.5, 0.9]))
DFS = [1, 2, 3, 5, 10, 30]


def bisect(cdf, p, lo, hi, iters=400):
    p = mp.mpf(p)
    while cdf(hi) < p:
        hi *= 2
    for _ in range(iters):
        mid = (lo + hi) / 2
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def normal_cdf(x):
    return mp.ncdf(x)


def main():
    out = {"p": GRID, "normal": [], "chi2": {}}
    for p in GRID:
        out["normal"].append(mp.nstr(bisect(normal_cdf, p, mp.mpf(-50), mp.mpf(50)), 30))
    for d in DFS:
        cdf = lambda x, d=d: mp.gammainc(mp.mpf(d) / 2, 0, x / 2, regularized=True)
        out["chi2"][str(d)] = [mp.nstr(bisect(cdf, p, mp.mpf(0), mp.mpf(64)), 30) for p in GRID]
    path = Path(__file__).resolve().parents[1] / "tests" / "data" / "quantile_reference.json"
    path.write_text(json.dumps(out, indent=1) + "\n")
    print(f"wrote {len(GRID)} grid points to {path}")


if __name__ == "__main__":
    main()
