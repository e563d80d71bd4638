"""Lattice quantization error as the step h shrinks.

Floor rounding moves every coordinate down by a U(0, h)-like amount, so for
a polynomial that increases in each coordinate the error is close to h/2
times the mean gradient and halves with h.  Polynomials whose gradient
changes sign over the atoms average that bias away and decay erratically.
"""
import argparse

import numpy as np

from wienermoment.functional import AtomicPathMeasure
from wienermoment.lattice import LatticeSpec, quantization_error
from wienermoment.polyalg import X

TESTS = {
    "X_1": X("1"),
    "X_1/2+X_1": X("1/2") + X("1"),
    "X_1+X_1^3": X("1") + X("1", 3),
    "X_1^2 (sign-changing gradient)": X("1", 2),
    "X_1/2*X_1 (sign-changing gradient)": X("1/2") * X("1"),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--atoms", type=int, default=50)
    ap.add_argument("--seed", type=int, default=9)
    ap.add_argument("--K", type=float, default=1.0)
    ap.add_argument("--steps", type=int, default=6, help="number of halvings starting at h=0.1")
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    mu = AtomicPathMeasure.from_arrays(rng.uniform(-0.9, 0.9, size=(args.atoms, 2)),
                                       np.full(args.atoms, 1.0 / args.atoms))
    hs = [0.1 / 2 ** k for k in range(args.steps)]
    print("polynomial," + ",".join("h=%g" % h for h in hs))
    for name, p in TESTS.items():
        errs = [quantization_error(mu, p, LatticeSpec(args.K, h)) for h in hs]
        print(name + "," + ",".join("%.3e" % e for e in errs))


if __name__ == "__main__":
    main()
