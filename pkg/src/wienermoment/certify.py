"""Truncated positivity certificates and the quadratic-variation defect.

A functional passes the degree-d check for constraints f_1..f_m when every
localizing matrix [ell(a * b * w_S)] with w_S = prod_{i in S} f_i is PSD,
for all 2^m subsets S.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np

from .functional import DegreeExceeded, MomentFunctional, TableFunctional, functional_on_grid
from .polyalg import Monomial, Polynomial, TimeGrid, mono_mul, refine_to_grid

BASIS_CAP = 5000


class SizeLimit(ValueError):
    pass


class NotSymmetric(ValueError):
    pass


def basis_monomials(grid: TimeGrid, d: int, cap: int | None = BASIS_CAP) -> list[Monomial]:
    """All monomials of total degree <= d on ``grid`` in graded-lex order."""
    if d < 0:
        raise ValueError("degree must be nonnegative")
    count = comb(grid.n + d, d)
    if cap is not None and count > cap:
        raise SizeLimit("%d basis monomials exceed cap %d" % (count, cap))
    times = grid.times
    out = []
    for deg in range(d + 1):
        for idx in itertools.combinations_with_replacement(range(grid.n), deg):
            exps: dict = {}
            for i in idx:
                exps[times[i]] = exps.get(times[i], 0) + 1
            out.append(Monomial(exps))
    return out


@dataclass
class MomentMatrix:
    basis: list[Monomial]
    entries: np.ndarray
    weight: Polynomial

    @property
    def dim(self) -> int:
        return len(self.basis)


def localizing_matrix(ell: MomentFunctional, w: Polynomial, d: int,
                      cap: int | None = BASIS_CAP) -> MomentMatrix:
    """Matrix of ell(basis[a] * basis[b] * w) over the degree-d basis on ``ell.grid``."""
    need = 2 * d + w.degree
    if ell.max_degree is not None and need > ell.max_degree:
        raise DegreeExceeded("localizing matrix needs degree %d > %d" % (need, ell.max_degree))
    refine_to_grid(w, ell.grid)
    basis = basis_monomials(ell.grid, d, cap)
    cache: dict[Monomial, float] = {}

    def mom(m: Monomial) -> float:
        if m not in cache:
            cache[m] = ell.moment(m)
        return cache[m]

    k = len(basis)
    entries = np.empty((k, k))
    for a in range(k):
        for b in range(a, k):
            ab = mono_mul(basis[a], basis[b])
            val = math.fsum(c * mom(mono_mul(ab, m)) for m, c in w.terms.items())
            entries[a, b] = entries[b, a] = val
    return MomentMatrix(basis, entries, w)


def min_eigenvalue(M, sym_tol: float = 1e-12, max_sweeps: int = 100) -> float:
    """Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations."""
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSymmetric("matrix must be square")
    if A.size == 0:
        raise ValueError("empty matrix")
    if np.max(np.abs(A - A.T)) > sym_tol:
        raise NotSymmetric("asymmetry %.3g exceeds %.1g" % (np.max(np.abs(A - A.T)), sym_tol))
    A = 0.5 * (A + A.T)
    k = A.shape[0]
    stop = 1e-12 * np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = math.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= stop:
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                diff = A[q, q] - A[p, p]
                if abs(diff) > 1e150 * abs(apq):
                    # theta would overflow; first-order rotation angle
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                cs = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * cs
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = cs * rp - sn * rq
                A[q, :] = sn * rp + cs * rq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = cs * cp - sn * cq
                A[:, q] = sn * cp + cs * cq
                A[p, q] = A[q, p] = 0.0
    return float(np.min(np.diag(A)))


@dataclass
class SubsetResult:
    j: tuple[int, ...]
    weight: Polynomial
    basis_degree: int
    dim: int
    min_eig: float
    passed: bool
    matrix: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        return {"j": list(self.j), "basis_degree": self.basis_degree, "dim": self.dim,
                "min_eig": self.min_eig, "pass": self.passed}


@dataclass
class Certificate:
    degree: int
    tol: float
    subsets: list[SubsetResult]

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.subsets)

    def to_json(self) -> dict:
        return {"degree": self.degree, "tol": self.tol,
                "subsets": [s.to_json() for s in self.subsets], "pass": self.passed}


def schmuedgen_check(ell: MomentFunctional, constraints: Sequence[Polynomial], d: int,
                     tol: float = 1e-8, cap: int | None = BASIS_CAP) -> Certificate:
    """PSD test of all 2^m localizing matrices.

    Subset S gets the largest basis degree d_S with 2 d_S + deg(w_S) within
    2d + sum(deg f_i), so the full product uses degree d and smaller products
    use more of the moment budget.  A subset passes when its smallest
    eigenvalue is >= -tol * max(1, largest diagonal entry).
    """
    constraints = list(constraints)
    budget = 2 * d + sum(f.degree for f in constraints)
    if isinstance(ell, TableFunctional) and budget > ell.max_degree:
        raise DegreeExceeded("check needs moments up to degree %d, table has %d"
                             % (budget, ell.max_degree))
    subsets = []
    for j in itertools.product((0, 1), repeat=len(constraints)):
        w = Polynomial.const(1.0)
        for f, ji in zip(constraints, j):
            if ji:
                w = w * f
        d_s = (budget - w.degree) // 2
        mm = localizing_matrix(ell, w, d_s, cap)
        lam = min_eigenvalue(mm.entries)
        scale = max(1.0, float(np.max(np.diag(mm.entries))))
        subsets.append(SubsetResult(j, w, d_s, mm.dim, lam, lam >= -tol * scale, mm.entries))
    return Certificate(d, tol, subsets)


# -- quadratic variation -----------------------------------------------------

def increment(n: int, k: int) -> Polynomial:
    """X_{(k+1)/n} - X_{k/n}, with X_0 = 0."""
    out = Polynomial.var("%d/%d" % (k + 1, n))
    if k:
        out = out - Polynomial.var("%d/%d" % (k, n))
    return out


def qv_terms(ell_source, c: float, n: int, test_g: Sequence[Polynomial]):
    """Per (g, k): n * ell(g^2 * Delta_k^2) and c * ell(g^2)."""
    ell = functional_on_grid(ell_source, n)
    grid = TimeGrid(n)
    rows = []
    for g in test_g:
        refine_to_grid(g, grid)
        g2 = g * g
        base = c * ell.apply(g2)
        for k in range(n):
            dk = increment(n, k)
            rows.append((g, k, n * ell.apply(g2 * (dk * dk)), base))
    return rows


def qv_defect(ell_source, c: float, n: int, test_g: Sequence[Polynomial]) -> float:
    """max over k < n and g of |n * ell(g^2 Delta_k^2) - c * ell(g^2)|."""
    return max(abs(a - b) for _, _, a, b in qv_terms(ell_source, c, n, test_g))


def estimated_scale(ell_source, n: int) -> float:
    """Sum of increment second moments at mesh n."""
    ell = functional_on_grid(ell_source, n)
    return math.fsum(ell.apply(increment(n, k) ** 2) for k in range(n))


@dataclass
class QVRow:
    n: int
    defect: float
    estimated_c: float


@dataclass
class QVReport:
    c: float
    rows: list[QVRow]
    threshold: float
    slack: float = 0.10

    @property
    def passed(self) -> bool:
        if not self.rows:
            return False
        d = [r.defect for r in self.rows]
        trend = all(b <= (1.0 + self.slack) * a + 1e-12 for a, b in zip(d, d[1:]))
        return trend and d[-1] <= self.threshold

    def to_json(self) -> dict:
        return {
            "c": self.c,
            "rows": [{"n": r.n, "defect": r.defect, "estimated_c": r.estimated_c} for r in self.rows],
            "threshold": self.threshold,
            "pass": self.passed,
        }


def qv_scan(ell_source, c: float, n_list: Sequence[int], test_g: Sequence[Polynomial],
            threshold: float = 0.3) -> QVReport:
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    rows = [QVRow(n, qv_defect(ell_source, c, n, test_g), estimated_scale(ell_source, n))
            for n in n_list]
    return QVReport(c, rows, threshold)
