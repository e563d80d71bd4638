"""Recover random atomic measures from their moments.

Draws a random measure on band paths, hands its moments to the solver and
reports the residual, the support size and whether the fitted measure passes
the positivity check.  Also reports how far the gradient phase alone gets.
"""
import argparse
import time

import numpy as np

from wienermoment.certify import schmuedgen_check
from wienermoment.functional import AtomFunctional, AtomicPathMeasure
from wienermoment.polyalg import X
from wienermoment.represent import BandSpec, enumerate_band_paths, fit_weights, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--degree", type=int, default=2)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--max-iter", type=int, default=3000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    band = BandSpec(args.n, 0.8, 1.2, c=1.0)
    f = [X("1") + 1.5]
    candidates = enumerate_band_paths(band, f)
    print("trial,atoms,status,residual,gradient_only_residual,support,certified,seconds")
    for trial in range(args.trials):
        k = int(rng.integers(1, min(6, len(candidates)) + 1))
        pick = rng.choice(len(candidates), size=k, replace=False)
        w = rng.random(k) + 0.05
        mu = AtomicPathMeasure(tuple(candidates[i] for i in pick), tuple(w / w.sum()))
        ell = AtomFunctional(mu)
        start = time.perf_counter()
        res = solve(ell, band, f, args.degree, max_iter=args.max_iter)
        elapsed = time.perf_counter() - start
        plain = fit_weights(candidates, ell, args.degree, f, max_iter=args.max_iter, refine=False)
        cert = schmuedgen_check(AtomFunctional(res.measure), f, args.degree // 2)
        print("%d,%d,%s,%.2e,%.2e,%d,%s,%.2f" % (trial, k, res.status, res.residual, plain.residual,
                                                len(res.measure), cert.passed, elapsed))


if __name__ == "__main__":
    main()
