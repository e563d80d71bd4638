"""Quadratic-variation defect of the Gaussian oracle along a mesh sequence.

For g = X_{1/2} the defect is 2/n, so halving the mesh halves the defect.
A wrongly declared scale shows up as a flat defect of |c_true - c_declared|.
"""
import argparse

from wienermoment.certify import qv_scan
from wienermoment.functional import GaussianFunctional
from wienermoment.polyalg import Polynomial, TimeGrid, X


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--c", type=float, default=1.0, help="true scale of the oracle")
    ap.add_argument("--declared", type=float, default=None, help="scale used in the defect")
    ap.add_argument("--max-log2n", type=int, default=6)
    args = ap.parse_args()
    declared = args.c if args.declared is None else args.declared
    ell = GaussianFunctional(TimeGrid(1), args.c)
    n_list = [2 ** k for k in range(1, args.max_log2n + 1)]
    print("n,defect_g=X_1/2,defect_g=1,estimated_c")
    half = qv_scan(ell, declared, n_list, [X("1/2")])
    flat = qv_scan(ell, declared, n_list, [Polynomial.const(1.0)])
    for a, b in zip(half.rows, flat.rows):
        print("%d,%.12g,%.12g,%.12g" % (a.n, a.defect, b.defect, a.estimated_c))
    print("# scan verdicts: g=X_1/2 %s, g=1 %s" % (half.passed, flat.passed))


if __name__ == "__main__":
    main()
