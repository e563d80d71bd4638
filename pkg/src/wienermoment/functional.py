"""Linear functionals on grid polynomials.

Four realizations share the ``apply`` interface: a stored moment table, an
atomic path measure, the analytic Gaussian (Wiener) oracle and a Monte Carlo
estimate over simulated Brownian paths.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np

from .polyalg import (
    DiscretePath,
    IncompatibleGrid,
    Monomial,
    Polynomial,
    TimeGrid,
    UnknownTime,
    evaluate_many,
    format_time,
    monomial_column,
    monomial_from_json,
    monomial_to_json,
    rtime,
)

PAIRING_CUTOFF = 12
MC_CHUNK = 1 << 15


class DegreeExceeded(ValueError):
    pass


class DegreeTooLarge(ValueError):
    pass


# -- Isserlis / Wick ---------------------------------------------------------

def isserlis(times: Sequence, cov: Callable) -> float:
    """E[b_{t1} ... b_{tk}] for a centred Gaussian process with covariance ``cov``.

    Sums over perfect matchings by expanding along the first factor; repeated
    sub-multisets are memoized, so degree 12 costs far less than 10395 products.
    """
    key = tuple(sorted(times))
    if len(key) % 2:
        return 0.0

    @lru_cache(maxsize=None)
    def rec(rest: tuple) -> float:
        if not rest:
            return 1.0
        first, tail = rest[0], rest[1:]
        total = 0.0
        for j, t in enumerate(tail):
            # identical partners give identical sub-problems
            if j and t == tail[j - 1]:
                continue
            mult = 1
            while j + mult < len(tail) and tail[j + mult] == t:
                mult += 1
            total += mult * cov(first, t) * rec(tail[:j] + tail[j + 1:])
        return total

    return float(rec(key))


def gaussian_moment(m: Monomial, c: float, cutoff: int = PAIRING_CUTOFF) -> float:
    """Wiener moment of ``m`` under covariance c * min(s, t)."""
    if c <= 0:
        raise ValueError("scale c must be positive")
    if m.degree > cutoff:
        raise DegreeTooLarge("degree %d exceeds pairing cutoff %d" % (m.degree, cutoff))
    if m.degree % 2:
        return 0.0
    return c ** (m.degree // 2) * _unit_moment(m)


@lru_cache(maxsize=1 << 16)
def _unit_moment(m: Monomial) -> float:
    # exact rational covariances; converted once at the end
    return isserlis(m.factors(), lambda s, t: min(s, t))


def gaussian_moment_at(times: Sequence[float], c: float) -> float:
    """Same oracle at arbitrary real times (used for the time-extension scan)."""
    if len(times) > PAIRING_CUTOFF:
        raise DegreeTooLarge("degree %d exceeds pairing cutoff" % len(times))
    return isserlis(times, lambda s, t: c * min(s, t))


# -- functionals -------------------------------------------------------------

class MomentFunctional:
    """Common interface: ``apply(p)`` and the per-monomial ``moment(m)``."""

    kind: str = ""
    grid: TimeGrid
    max_degree: int | None

    def moment(self, m: Monomial) -> float:
        raise NotImplementedError

    def _check(self, p: Polynomial):
        for t in p.support_times():
            if not self.grid.contains(t):
                raise UnknownTime(t)
        if self.max_degree is not None and p.degree > self.max_degree:
            raise DegreeExceeded(
                "degree %d exceeds functional degree %d" % (p.degree, self.max_degree)
            )

    def apply(self, p: Polynomial) -> float:
        self._check(p)
        return sum(c * self.moment(m) for m, c in p.terms.items())

    def moments(self, monos: Sequence[Monomial]) -> np.ndarray:
        return np.array([self.moment(m) for m in monos])


@dataclass(frozen=True, eq=False)
class TableFunctional(MomentFunctional):
    grid: TimeGrid
    max_degree: int
    table: dict = field(repr=False)
    kind = "table"

    def __post_init__(self):
        from .certify import basis_monomials

        missing = [m for m in basis_monomials(self.grid, self.max_degree, cap=None)
                   if m not in self.table]
        if missing:
            raise ValueError("moment table lacks %d monomials, e.g. %r" % (len(missing), missing[0]))

    def moment(self, m: Monomial) -> float:
        if m.degree > self.max_degree:
            raise DegreeExceeded("degree %d > %d" % (m.degree, self.max_degree))
        try:
            return self.table[m]
        except KeyError:
            raise UnknownTime(m) from None

    def to_json(self) -> dict:
        return {
            "grid_n": self.grid.n,
            "max_degree": self.max_degree,
            "moments": [
                {"mono": monomial_to_json(m), "value": v} for m, v in sorted(self.table.items())
            ],
        }

    @classmethod
    def from_json(cls, obj) -> "TableFunctional":
        grid = TimeGrid(int(obj["grid_n"]))
        table = {}
        for row in obj["moments"]:
            table[monomial_from_json(row["mono"])] = float(row["value"])
        return cls(grid, int(obj["max_degree"]), table)


@dataclass(frozen=True)
class AtomicPathMeasure:
    paths: tuple[DiscretePath, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        paths, weights = tuple(self.paths), tuple(float(w) for w in self.weights)
        if len(paths) != len(weights):
            raise ValueError("paths and weights differ in length")
        if any(w < 0 for w in weights):
            raise ValueError("atom weights must be nonnegative")
        if len({p.grid for p in paths}) > 1:
            raise ValueError("atoms live on different grids")
        object.__setattr__(self, "paths", paths)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_arrays(cls, values, weights) -> "AtomicPathMeasure":
        values = np.atleast_2d(np.asarray(values, dtype=float))
        return cls(tuple(DiscretePath.from_values(v) for v in values), tuple(weights))

    @property
    def grid(self) -> TimeGrid | None:
        return self.paths[0].grid if self.paths else None

    @property
    def total_weight(self) -> float:
        return math.fsum(self.weights)

    def values(self) -> np.ndarray:
        return self._matrix

    @cached_property
    def _matrix(self) -> np.ndarray:
        n = self.grid.n if self.paths else 0
        out = np.array([p.values for p in self.paths], dtype=float).reshape(len(self.paths), n)
        out.setflags(write=False)
        return out

    def __len__(self):
        return len(self.paths)

    def integrate(self, p: Polynomial) -> float:
        if not self.paths:
            return 0.0
        return float(np.dot(np.asarray(self.weights), evaluate_many(p, self.values(), self.grid)))

    def to_json(self) -> dict:
        return {
            "grid_n": self.grid.n if self.paths else 0,
            "atoms": [{"y": list(p.values), "w": w} for p, w in zip(self.paths, self.weights)],
        }

    @classmethod
    def from_json(cls, obj) -> "AtomicPathMeasure":
        n = int(obj["grid_n"])
        grid = TimeGrid(n) if n else None
        paths, weights = [], []
        for atom in obj["atoms"]:
            paths.append(DiscretePath(grid, tuple(atom["y"])))
            weights.append(float(atom["w"]))
        return cls(tuple(paths), tuple(weights))


@dataclass(frozen=True, eq=False)
class AtomFunctional(MomentFunctional):
    measure: AtomicPathMeasure
    max_degree: int | None = None
    kind = "atoms"

    def __post_init__(self):
        if not self.measure.paths:
            raise ValueError("empty measure")

    @property
    def grid(self) -> TimeGrid:
        return self.measure.grid

    def moment(self, m: Monomial) -> float:
        col = monomial_column(m, self.measure.values(), self.grid)
        return float(np.dot(np.asarray(self.measure.weights), col))

    def apply(self, p: Polynomial) -> float:
        self._check(p)
        return self.measure.integrate(p)


@dataclass(frozen=True, eq=False)
class GaussianFunctional(MomentFunctional):
    """Wiener measure with quadratic variation c, restricted to ``grid``."""

    grid: TimeGrid
    c: float = 1.0
    max_degree: int | None = PAIRING_CUTOFF
    kind = "gaussian"

    def moment(self, m: Monomial) -> float:
        return gaussian_moment(m, self.c)

    def on_grid(self, n: int) -> "GaussianFunctional":
        return GaussianFunctional(TimeGrid(n), self.c, self.max_degree)

    def at_real_time(self, t: float, exponent: int) -> float:
        return gaussian_moment_at([t] * exponent, self.c)


@dataclass(frozen=True, eq=False)
class MonteCarloFunctional(MomentFunctional):
    grid: TimeGrid
    samples: int
    seed: int
    c: float
    paths: np.ndarray = field(repr=False)
    max_degree: int | None = None
    kind = "montecarlo"

    def moment(self, m: Monomial) -> float:
        return float(np.mean(monomial_column(m, self.paths, self.grid)))

    def apply(self, p: Polynomial) -> float:
        self._check(p)
        return float(np.mean(evaluate_many(p, self.paths, self.grid)))

    def apply_with_stderr(self, p: Polynomial) -> tuple[float, float]:
        self._check(p)
        vals = evaluate_many(p, self.paths, self.grid)
        se = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else math.inf
        return float(np.mean(vals)), se


def table_from(ell: MomentFunctional, max_degree: int) -> TableFunctional:
    """Materialize every moment of degree <= ``max_degree`` on ``ell.grid``."""
    from .certify import basis_monomials

    monos = basis_monomials(ell.grid, max_degree, cap=None)
    return TableFunctional(ell.grid, max_degree, {m: ell.moment(m) for m in monos})


# -- Monte Carlo -------------------------------------------------------------

def _normals(seed: int, start: int, count: int) -> np.ndarray:
    """Standard normals number ``start .. start+count-1`` of the stream keyed by ``seed``.

    Normal j consumes raw words 2j and 2j+1 of a Philox stream (Box-Muller,
    cosine branch), so any slice can be produced independently.
    """
    first_word = 2 * start
    bitgen = np.random.Philox(key=seed)
    bitgen.advance(first_word // 4)
    skip = first_word % 4
    raw = bitgen.random_raw(2 * count + skip)[skip:]
    u1 = ((raw[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0 ** -53
    u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def mc_build(grid: TimeGrid, samples: int, seed: int, c: float = 1.0,
             threads: int = 1) -> MonteCarloFunctional:
    """Simulate ``samples`` Brownian paths with quadratic variation ``c`` on ``grid``.

    Increment k of sample i is normal number i*n + k of the keyed stream, so the
    result does not depend on ``threads``.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    n = grid.n
    sd = math.sqrt(c / n)
    paths = np.empty((samples, n))

    def fill(lo: int):
        hi = min(lo + MC_CHUNK, samples)
        z = _normals(seed, lo * n, (hi - lo) * n).reshape(hi - lo, n)
        paths[lo:hi] = np.cumsum(sd * z, axis=1)

    starts = range(0, samples, MC_CHUNK)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, starts))
    else:
        for lo in starts:
            fill(lo)
    paths.setflags(write=False)
    return MonteCarloFunctional(grid, samples, seed, c, paths)


# -- rational -> real time extension ----------------------------------------

@dataclass
class ConvergenceReport:
    t: float
    exponent: int
    times: list[Fraction]
    values: list[float]
    limit: float
    deviations: list[float]
    passed: bool

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "exponent": self.exponent,
            "rows": [
                {"q": format_time(q), "value": v, "deviation": d}
                for q, v, d in zip(self.times, self.values, self.deviations)
            ],
            "limit": self.limit,
            "pass": self.passed,
        }


def time_extension_scan(ell_family, t: float, exponent: int, q_list,
                        tol: float = 1e-3, limit: float | None = None) -> ConvergenceReport:
    """Track ell(X_q^exponent) along rationals q -> t.

    ``ell_family`` maps a mesh n to a functional on grid n (a single functional
    whose grid already contains every q works too).  The limit is taken from
    ``limit``, else from the family's real-time oracle when it has one, else
    the last value in the sequence.
    """
    qs = [rtime(q) for q in q_list]
    dists = [abs(float(q) - t) for q in qs]
    if any(b > a for a, b in zip(dists, dists[1:])):
        raise ValueError("q_list must approach t monotonically")
    values = []
    for q in qs:
        ell = _functional_for(ell_family, q.denominator)
        if not ell.grid.contains(q):
            raise IncompatibleGrid("time %s not on grid n=%d" % (q, ell.grid.n))
        values.append(ell.apply(Polynomial.var(q, exponent)))
    if limit is None:
        probe = _functional_for(ell_family, qs[-1].denominator)
        if hasattr(probe, "at_real_time"):
            limit = probe.at_real_time(t, exponent)
        else:
            limit = values[-1]
    devs = [abs(v - limit) for v in values]
    settled = all(b <= a for a, b in zip(devs[len(devs) // 2:], devs[len(devs) // 2 + 1:]))
    return ConvergenceReport(t, exponent, qs, values, limit, devs,
                             passed=bool(settled and devs[-1] <= tol))


def _functional_for(source, n: int) -> MomentFunctional:
    if isinstance(source, MomentFunctional):
        if isinstance(source, GaussianFunctional) and not source.grid.n % n == 0:
            return source.on_grid(n)
        return source
    return source(n)


def functional_on_grid(source, n: int) -> MomentFunctional:
    """Resolve a per-grid source (callable or functional) at mesh ``n``."""
    ell = _functional_for(source, n)
    if ell.grid.n % n:
        raise IncompatibleGrid("functional on grid %d cannot serve mesh %d" % (ell.grid.n, n))
    return ell


__all__ = [
    "AtomFunctional",
    "AtomicPathMeasure",
    "ConvergenceReport",
    "DegreeExceeded",
    "DegreeTooLarge",
    "GaussianFunctional",
    "MomentFunctional",
    "MonteCarloFunctional",
    "TableFunctional",
    "functional_on_grid",
    "gaussian_moment",
    "gaussian_moment_at",
    "isserlis",
    "mc_build",
    "table_from",
    "time_extension_scan",
]
