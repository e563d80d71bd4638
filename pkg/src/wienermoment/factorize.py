"""Split band paths into a per-step scale and a +-1/sqrt(n) sign walk.

For a path w on mesh n with increments D_k, the scale is xi_k = sqrt(n)|D_k|
and the walk is B_k = (s_1 + ... + s_k)/sqrt(n) with s_k = sign(D_k), so that
w_k = sum_{j<=k} xi_j (B_j - B_{j-1}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .functional import AtomicPathMeasure
from .polyalg import DiscretePath, Polynomial, TimeGrid, evaluate_many
from .represent import BandSpec


class BandViolation(ValueError):
    pass


@dataclass(frozen=True)
class FactorizationResult:
    xi: tuple[float, ...]
    signs: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.signs)

    @property
    def walk(self) -> np.ndarray:
        return np.cumsum(self.signs) / math.sqrt(self.n)

    def to_json(self) -> dict:
        return {"xi": list(self.xi), "signs": list(self.signs), "walk": self.walk.tolist()}


def decompose(w: DiscretePath, band: BandSpec) -> FactorizationResult:
    inc = w.increments()
    n = len(inc)
    if n != band.n:
        raise BandViolation("path has %d steps, band expects %d" % (n, band.n))
    for k, dk in enumerate(inc):
        if dk == 0.0 or not band.contains_square(dk * dk):
            raise BandViolation("increment %d has square %.6g outside [%g, %g]"
                                % (k, dk * dk, band.c0 / n, band.c1 / n))
    xi = tuple(float(v) for v in math.sqrt(n) * np.abs(inc))
    signs = tuple(int(s) for s in np.sign(inc))
    return FactorizationResult(xi, signs)


def reconstruct(fr: FactorizationResult) -> DiscretePath:
    steps = np.asarray(fr.xi) * np.asarray(fr.signs) / math.sqrt(fr.n)
    return DiscretePath(TimeGrid(fr.n), tuple(np.cumsum(steps)))


@dataclass
class WalkMeasure:
    weights: dict[tuple[int, ...], float] = field(default_factory=dict)
    xi_lists: dict[tuple[int, ...], list[tuple[float, ...]]] = field(default_factory=dict)

    @property
    def total_weight(self) -> float:
        return math.fsum(self.weights.values())

    def walk_measure(self) -> AtomicPathMeasure:
        """The sign-walk law as an atomic measure on walk paths."""
        if not self.weights:
            return AtomicPathMeasure((), ())
        paths = []
        for s in self.weights:
            n = len(s)
            paths.append(DiscretePath(TimeGrid(n), tuple(np.cumsum(s) / math.sqrt(n))))
        return AtomicPathMeasure(tuple(paths), tuple(self.weights.values()))

    def to_json(self) -> dict:
        return {"atoms": [
            {"signs": list(s), "w": w, "xi_list": [list(x) for x in self.xi_lists[s]]}
            for s, w in self.weights.items()
        ]}


def pushforward(mu: AtomicPathMeasure, band: BandSpec) -> WalkMeasure:
    """Group atoms by sign sequence; weights add, scale arrays are kept per atom."""
    grouped: dict[tuple[int, ...], list[float]] = {}
    xis: dict[tuple[int, ...], list[tuple[float, ...]]] = {}
    for path, w in zip(mu.paths, mu.weights):
        fr = decompose(path, band)
        grouped.setdefault(fr.signs, []).append(w)
        xis.setdefault(fr.signs, []).append(fr.xi)
    order = sorted(grouped, reverse=True)
    return WalkMeasure({s: math.fsum(grouped[s]) for s in order}, {s: xis[s] for s in order})


def moment_transport_check(mu: AtomicPathMeasure, band: BandSpec, p: Polynomial,
                           scale: float) -> float:
    """|int p dmu - E[p(scale * walk)]| under the pushed-forward walk law."""
    walks = pushforward(mu, band).walk_measure()
    if not len(walks):
        return 0.0
    lhs = mu.integrate(p)
    rhs = float(np.dot(np.asarray(walks.weights),
                       evaluate_many(p, scale * walks.values(), walks.grid)))
    return abs(lhs - rhs)
