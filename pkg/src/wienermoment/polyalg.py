"""Sparse polynomials in variables X_t indexed by rational times t in (0, 1].

Times are exact ``Fraction`` objects; coefficients are floats.  The process is
pinned to zero at t = 0, so t = 0 is never a variable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np


class UnknownTime(KeyError):
    pass


class IncompatibleGrid(ValueError):
    pass


class PolynomialParseError(ValueError):
    pass


def rtime(value) -> Fraction:
    """Coerce ``value`` to a reduced rational time in (0, 1].

    Accepts ``Fraction``, ``int`` or strings like ``"3/4"``.  Floats are
    rejected since they would silently alias distinct times.
    """
    if isinstance(value, float):
        raise TypeError("times must be exact rationals, got float %r" % value)
    try:
        t = Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise PolynomialParseError("bad time %r" % (value,)) from exc
    if not 0 < t <= 1:
        raise PolynomialParseError("time %s outside (0, 1]" % t)
    return t


def format_time(t: Fraction) -> str:
    return "%d/%d" % (t.numerator, t.denominator)


@dataclass(frozen=True)
class TimeGrid:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("grid size must be a positive integer")

    @property
    def times(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(k, self.n) for k in range(1, self.n + 1))

    def index(self, t: Fraction) -> int:
        """Zero-based column of time ``t``; raises UnknownTime off the grid."""
        k = t * self.n
        if k.denominator != 1 or not 1 <= k <= self.n:
            raise UnknownTime(t)
        return int(k) - 1

    def contains(self, t: Fraction) -> bool:
        return (t * self.n).denominator == 1 and 0 < t <= 1


class Monomial:
    """Product of powers X_t^k, stored as a time-sorted tuple of (t, k)."""

    __slots__ = ("_items", "_hash")

    def __init__(self, exps: Mapping | Iterable = ()):
        items = dict(exps) if not isinstance(exps, Mapping) else exps
        acc: dict[Fraction, int] = {}
        for t, k in items.items():
            t = rtime(t)
            if int(k) != k or k < 0:
                raise PolynomialParseError("exponent must be a nonnegative integer")
            if k:
                acc[t] = acc.get(t, 0) + int(k)
        self._items = tuple(sorted(acc.items()))
        self._hash = hash(self._items)

    @classmethod
    def var(cls, t, power: int = 1) -> "Monomial":
        return cls({t: power})

    @property
    def items(self) -> tuple[tuple[Fraction, int], ...]:
        return self._items

    @property
    def exps(self) -> Mapping[Fraction, int]:
        return MappingProxyType(dict(self._items))

    @property
    def degree(self) -> int:
        return sum(k for _, k in self._items)

    @property
    def times(self) -> tuple[Fraction, ...]:
        return tuple(t for t, _ in self._items)

    def factors(self) -> list[Fraction]:
        """The time of every variable factor, with multiplicity."""
        return [t for t, k in self._items for _ in range(k)]

    def __mul__(self, other: "Monomial") -> "Monomial":
        if not isinstance(other, Monomial):
            return NotImplemented
        return mono_mul(self, other)

    def __eq__(self, other):
        return isinstance(other, Monomial) and self._items == other._items

    def __hash__(self):
        return self._hash

    def sort_key(self):
        return (self.degree, self._items)

    def __lt__(self, other: "Monomial"):
        return self.sort_key() < other.sort_key()

    def __repr__(self):
        if not self._items:
            return "1"
        return "*".join(
            "X[%s]" % format_time(t) + ("^%d" % k if k > 1 else "")
            for t, k in self._items
        )


ONE = Monomial()


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    acc = dict(a.items)
    for t, k in b.items:
        acc[t] = acc.get(t, 0) + k
    return Monomial(acc)


class Polynomial:
    """Immutable sparse real combination of monomials."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Monomial, float] | None = None):
        clean = {}
        for m, c in (terms or {}).items():
            c = float(c)
            if c != 0.0:
                clean[m] = c
        self._terms = MappingProxyType(clean)

    @classmethod
    def const(cls, c: float) -> "Polynomial":
        return cls({ONE: c})

    @classmethod
    def var(cls, t, power: int = 1, coeff: float = 1.0) -> "Polynomial":
        return cls({Monomial.var(t, power): coeff})

    @classmethod
    def from_monomial(cls, m: Monomial, coeff: float = 1.0) -> "Polynomial":
        return cls({m: coeff})

    @property
    def terms(self) -> Mapping[Monomial, float]:
        return self._terms

    @property
    def degree(self) -> int:
        return max((m.degree for m in self._terms), default=0)

    def support_times(self) -> frozenset[Fraction]:
        return frozenset(t for m in self._terms for t in m.times)

    def is_zero(self) -> bool:
        return not self._terms

    def __add__(self, other):
        return poly_add(self, _lift(other))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return poly_add(self, -_lift(other))

    def __rsub__(self, other):
        return poly_add(_lift(other), -self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Polynomial({m: c * other for m, c in self._terms.items()})
        return poly_mul(self, _lift(other))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Polynomial.const(1.0)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        return isinstance(other, Polynomial) and dict(self._terms) == dict(other._terms)

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        if not self._terms:
            return "0"
        return " + ".join("%g*%r" % (c, m) for m, c in sorted(self._terms.items()))


def _lift(x) -> Polynomial:
    if isinstance(x, Polynomial):
        return x
    if isinstance(x, Monomial):
        return Polynomial.from_monomial(x)
    if isinstance(x, (int, float)):
        return Polynomial.const(x)
    raise TypeError("cannot use %r as a polynomial" % (x,))


def X(t, power: int = 1) -> Polynomial:
    """Shorthand for the variable at time ``t``: ``X("1/2")``."""
    return Polynomial.var(t, power)


def poly_add(p: Polynomial, q: Polynomial) -> Polynomial:
    acc = dict(p.terms)
    for m, c in q.terms.items():
        acc[m] = acc.get(m, 0.0) + c
    return Polynomial(acc)


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    acc: dict[Monomial, float] = {}
    for ma, ca in p.terms.items():
        for mb, cb in q.terms.items():
            m = mono_mul(ma, mb)
            acc[m] = acc.get(m, 0.0) + ca * cb
    return Polynomial(acc)


def scale_arg(p: Polynomial, s: float) -> Polynomial:
    """Substitute X_t -> s * X_t everywhere."""
    return Polynomial({m: c * s ** m.degree for m, c in p.terms.items()})


def refine_to_grid(p: Polynomial, grid: TimeGrid) -> Polynomial:
    for t in p.support_times():
        if not grid.contains(t):
            raise IncompatibleGrid("time %s is not a multiple of 1/%d" % (t, grid.n))
    # reduced fractions already identify k/n with its coarse form
    return p


@dataclass(frozen=True)
class DiscretePath:
    grid: TimeGrid
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) != self.grid.n:
            raise ValueError("path has %d values for grid n=%d" % (len(vals), self.grid.n))
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_values(cls, values) -> "DiscretePath":
        values = list(values)
        return cls(TimeGrid(len(values)), tuple(values))

    def increments(self) -> np.ndarray:
        return np.diff(np.concatenate([[0.0], self.values]))

    def at(self, t: Fraction) -> float:
        return self.values[self.grid.index(t)]

    def scaled(self, s: float) -> "DiscretePath":
        return DiscretePath(self.grid, tuple(s * v for v in self.values))


def evaluate(p: Polynomial, path: DiscretePath) -> float:
    total = 0.0
    for m, c in p.terms.items():
        term = c
        for t, k in m.items:
            term *= path.at(t) ** k
        total += term
    return total


def evaluate_many(p: Polynomial, values: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Evaluate ``p`` on each row of ``values`` (shape ``(N, grid.n)``)."""
    values = np.asarray(values, dtype=float)
    out = np.zeros(values.shape[0])
    for m, c in p.terms.items():
        out += c * monomial_column(m, values, grid)
    return out


def monomial_column(m: Monomial, values: np.ndarray, grid: TimeGrid) -> np.ndarray:
    col = np.ones(values.shape[0])
    for t, k in m.items:
        col = col * values[:, grid.index(t)] ** k
    return col


# -- JSON encoding -----------------------------------------------------------

def monomial_to_json(m: Monomial) -> list:
    return [{"t": format_time(t), "pow": k} for t, k in m.items]


def monomial_from_json(obj) -> Monomial:
    if not isinstance(obj, list):
        raise PolynomialParseError("monomial must be a list")
    exps: dict[Fraction, int] = {}
    for item in obj:
        try:
            t_str, k = item["t"], item["pow"]
        except (TypeError, KeyError) as exc:
            raise PolynomialParseError("monomial factor needs 't' and 'pow'") from exc
        if not isinstance(t_str, str) or not isinstance(k, int) or k < 1:
            raise PolynomialParseError("bad factor %r" % (item,))
        t = rtime(t_str)
        if format_time(t) != t_str.strip():
            raise PolynomialParseError("time %r is not a reduced fraction" % t_str)
        exps[t] = exps.get(t, 0) + k
    return Monomial(exps)


def poly_to_json(p: Polynomial) -> dict:
    return {
        "terms": [
            {"coeff": c, "mono": monomial_to_json(m)} for m, c in sorted(p.terms.items())
        ]
    }


def poly_from_json(obj) -> Polynomial:
    if not isinstance(obj, dict) or not isinstance(obj.get("terms"), list):
        raise PolynomialParseError("polynomial must be an object with a 'terms' list")
    acc: dict[Monomial, float] = {}
    for term in obj["terms"]:
        try:
            coeff = term["coeff"]
            mono = monomial_from_json(term["mono"])
        except (TypeError, KeyError) as exc:
            raise PolynomialParseError("term needs 'coeff' and 'mono'") from exc
        if isinstance(coeff, bool) or not isinstance(coeff, (int, float)):
            raise PolynomialParseError("coefficient must be a number")
        acc[mono] = acc.get(mono, 0.0) + float(coeff)
    return Polynomial(acc)
