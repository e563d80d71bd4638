"""Monte Carlo moments against the exact Gaussian oracle.

Prints one row per monomial with the z-score of the sampled moment, then
checks that the sampled paths do not depend on the thread count.
"""
import argparse

from wienermoment.certify import basis_monomials
from wienermoment.functional import GaussianFunctional, mc_build
from wienermoment.polyalg import Polynomial, TimeGrid, monomial_to_json


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--degree", type=int, default=6)
    ap.add_argument("--samples", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--threads", type=int, default=8)
    args = ap.parse_args()
    grid = TimeGrid(args.n)
    mc = mc_build(grid, args.samples, args.seed, args.c, threads=1)
    oracle = GaussianFunctional(grid, args.c)
    worst = 0.0
    print("monomial,exact,estimate,stderr,z")
    for m in basis_monomials(grid, args.degree)[1:]:
        p = Polynomial.from_monomial(m)
        est, se = mc.apply_with_stderr(p)
        exact = oracle.apply(p)
        z = (est - exact) / se
        worst = max(worst, abs(z))
        label = " ".join("%s^%d" % (e["t"], e["pow"]) for e in monomial_to_json(m))
        print("%s,%.10g,%.10g,%.3g,%.3f" % (label, exact, est, se, z))
    again = mc_build(grid, args.samples, args.seed, args.c, threads=args.threads)
    same = mc.paths.tobytes() == again.paths.tobytes()
    print("# worst |z| = %.3f; threads 1 vs %d identical: %s" % (worst, args.threads, same))


if __name__ == "__main__":
    main()
