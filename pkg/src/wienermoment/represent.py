"""Atomic representing measures on the quadratic-variation band.

Candidate atoms are all paths whose increments are +-m for m in a finite menu
of magnitudes with c0/n <= m^2 <= c1/n.  Weights on the probability simplex
are then fitted to the truncated moment sequence of a functional.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import nnls

from .certify import SizeLimit, basis_monomials
from .functional import AtomicPathMeasure, MomentFunctional
from .polyalg import DiscretePath, Polynomial, TimeGrid, evaluate_many, monomial_column

ENUMERATION_CAP = 10**6


class EmptyFeasibleSet(ValueError):
    pass


@dataclass(frozen=True)
class BandSpec:
    n: int
    c0: float
    c1: float
    magnitudes: tuple[float, ...] = ()
    c: float | None = None

    def __post_init__(self):
        if not 0 < self.c0 <= self.c1:
            raise ValueError("band needs 0 < c0 <= c1")
        mags = tuple(self.magnitudes)
        if not mags:
            c = self.c if self.c is not None else 0.5 * (self.c0 + self.c1)
            mags = tuple(math.sqrt(x / self.n) for x in (self.c0, c, self.c1))
        mags = tuple(sorted(set(float(m) for m in mags)))
        for m in mags:
            if not self.contains_square(m * m):
                raise ValueError("magnitude %r lies outside the band" % m)
        object.__setattr__(self, "magnitudes", mags)

    def contains_square(self, sq, rel: float = 1e-12) -> bool:
        lo, hi = self.c0 / self.n, self.c1 / self.n
        return lo * (1 - rel) <= sq <= hi * (1 + rel)

    def to_json(self) -> dict:
        return {"n": self.n, "c0": self.c0, "c1": self.c1, "magnitudes": list(self.magnitudes),
                "c": self.c}

    @classmethod
    def from_json(cls, obj) -> "BandSpec":
        return cls(int(obj["n"]), float(obj["c0"]), float(obj["c1"]),
                   tuple(obj.get("magnitudes") or ()), obj.get("c"))


def band_path_values(band: BandSpec, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Every band path as a row, sign-major / magnitude-minor, first step slowest."""
    steps = np.array([s * m for s in (1.0, -1.0) for m in band.magnitudes])
    total = len(steps) ** band.n
    if total > cap:
        raise SizeLimit("%d band paths exceed cap %d" % (total, cap))
    idx = np.array(list(itertools.product(range(len(steps)), repeat=band.n)), dtype=int)
    return np.cumsum(steps[idx.reshape(-1, band.n)], axis=1)


def enumerate_band_paths(band: BandSpec, f: Sequence[Polynomial] = (), tol: float = 1e-9,
                         cap: int = ENUMERATION_CAP) -> list[DiscretePath]:
    values = _feasible_values(band, f, tol, cap)
    grid = TimeGrid(band.n)
    return [DiscretePath(grid, tuple(row)) for row in values]


def _feasible_values(band, f, tol, cap) -> np.ndarray:
    values = band_path_values(band, cap)
    grid = TimeGrid(band.n)
    keep = np.ones(len(values), dtype=bool)
    for fi in f:
        keep &= evaluate_many(fi, values, grid) >= -tol
    if not keep.any():
        raise EmptyFeasibleSet("no band path satisfies the constraints")
    return values[keep]


@dataclass
class RepresentResult:
    measure: AtomicPathMeasure
    residual: float
    constraint_margins: list[float]
    status: str
    iterations: int = 0
    weight_sum_error: float = 0.0
    history: list[float] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "residual": self.residual,
            "margins": self.constraint_margins,
            "iterations": self.iterations,
            "weight_sum_error": self.weight_sum_error,
            "atoms": self.measure.to_json()["atoms"],
            "grid_n": self.measure.grid.n if len(self.measure) else 0,
        }


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum w = 1}."""
    u = -np.sort(-v)
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, len(v) + 1) > css)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1.0), 0.0)


def lipschitz_estimate(A: np.ndarray, rounds: int = 100) -> float:
    """Largest eigenvalue of A^T A by power iteration (deterministic start)."""
    x = np.ones(A.shape[1]) / math.sqrt(A.shape[1])
    lam = 0.0
    for _ in range(rounds):
        y = A.T @ (A @ x)
        lam = float(np.linalg.norm(y))
        if lam == 0.0:
            return 0.0
        x = y / lam
    return lam


def polish(A: np.ndarray, b: np.ndarray, w: np.ndarray,
           penalties: Sequence[float] = (1.0, 1e3)) -> np.ndarray:
    """Active-set NNLS with the normalization as an extra weighted row.

    Each penalty weight is tried and the renormalized solution with the
    smallest moment objective wins; ``w`` is kept if nothing beats it.
    """
    best, best_obj = w, float(np.sum((A @ w - b) ** 2))
    for lam in penalties:
        Aw = np.vstack([lam * np.ones(A.shape[1]), A])
        bw = np.concatenate([[lam], b])
        try:
            x, _ = nnls(Aw, bw, maxiter=50 * A.shape[1])
        except RuntimeError:
            continue
        if x.sum() <= 0:
            continue
        x = x / x.sum()
        obj = float(np.sum((A @ x - b) ** 2))
        if obj < best_obj:
            best, best_obj = x, obj
    return best


def fit_weights(atoms: Sequence[DiscretePath], ell: MomentFunctional, d: int,
                constraints: Sequence[Polynomial] = (), tol: float = 1e-6,
                margin_tol: float = 1e-9, max_iter: int = 10**5, gtol: float = 1e-10,
                record: bool = False, refine: bool = True) -> RepresentResult:
    """Least-squares moment fit over the probability simplex by projected gradient.

    Minimizes sum_m (ell(m) - sum_i w_i m(atom_i))^2 over monomials of degree <= d,
    starting from uniform weights with step 1/L.  Degenerate systems can make
    the gradient iteration crawl; if it stops short of ``gtol`` an exact
    active-set solve finishes the job (``refine=False`` disables this).
    """
    if not atoms:
        raise ValueError("no atoms to fit")
    grid = atoms[0].grid
    values = np.array([a.values for a in atoms], dtype=float)
    monos = basis_monomials(grid, d)
    A = np.array([monomial_column(m, values, grid) for m in monos])
    b = ell.moments(monos)

    L = 1.01 * lipschitz_estimate(A)
    w = np.full(len(atoms), 1.0 / len(atoms))
    history = []
    it = 0
    if L > 0:
        for it in range(1, max_iter + 1):
            r = A @ w - b
            if record:
                history.append(float(r @ r))
            w_next = project_simplex(w - (A.T @ r) / L)
            step = L * float(np.linalg.norm(w_next - w))
            w = w_next
            if step <= gtol:
                break
        else:
            if refine:
                w = polish(A, b, w)

    residual = float(np.sqrt(np.mean((A @ w - b) ** 2)))
    support = w > 0
    measure = AtomicPathMeasure(tuple(a for a, s in zip(atoms, support) if s),
                                tuple(w[support]))
    margins = []
    for f in constraints:
        vals = evaluate_many(f, values[support], grid)
        margins.append(float(np.min(vals)))
    sum_err = abs(measure.total_weight - 1.0)
    ok = residual <= tol and all(m >= -margin_tol for m in margins) and sum_err <= 1e-9
    return RepresentResult(measure, residual, margins, "solved" if ok else "residual_too_large",
                           it, sum_err, history)


def solve(ell: MomentFunctional, band: BandSpec, f: Sequence[Polynomial] = (), d: int = 2,
          tol: float = 1e-6, margin_tol: float = 1e-9, cap: int = ENUMERATION_CAP,
          **fit_kw) -> RepresentResult:
    """Enumerate feasible band paths and fit weights; raises EmptyFeasibleSet."""
    atoms = enumerate_band_paths(band, f, margin_tol, cap)
    return fit_weights(atoms, ell, d, f, tol=tol, margin_tol=margin_tol, **fit_kw)
