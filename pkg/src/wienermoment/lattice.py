"""K-truncated step-h rounding of paths and the pushforward of atomic measures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .functional import AtomicPathMeasure
from .polyalg import DiscretePath, Polynomial, evaluate_many


@dataclass(frozen=True)
class LatticeSpec:
    K: float
    h: float
    d: int | None = None

    def __post_init__(self):
        if self.K <= 0 or self.h <= 0:
            raise ValueError("K and h must be positive")
        if self.K / self.h < 1:
            raise ValueError("need K/h >= 1")

    @property
    def lo_index(self) -> int:
        return math.ceil(-self.K / self.h - 1e-12)

    @property
    def hi_index(self) -> int:
        return math.floor(self.K / self.h + 1e-12)

    @property
    def points_per_axis(self) -> int:
        return math.floor(2 * self.K / self.h) + 1

    def to_json(self) -> dict:
        return {"K": self.K, "h": self.h}

    @classmethod
    def from_json(cls, obj) -> "LatticeSpec":
        return cls(float(obj["K"]), float(obj["h"]))


def _floor_index(y: np.ndarray, h: float, eps: float = 1e-12) -> np.ndarray:
    # points within eps of a lattice point count as on it, so 0.7 with h = 0.1
    # maps to 7 even though 7 * 0.1 > 0.7 in binary
    z = y + eps
    i = np.floor(z / h)
    i = np.where((i + 1) * h <= z, i + 1, i)
    return np.where(i * h > z, i - 1, i)


def round_point(y, spec: LatticeSpec) -> np.ndarray:
    """Coordinatewise largest multiple of h in [-K, K] not above y, or -K if none."""
    y = np.asarray(y, dtype=float)
    idx = np.minimum(_floor_index(y, spec.h), spec.hi_index)
    out = idx * spec.h
    return np.where(idx < spec.lo_index, -spec.K, out)


def quantize_measure(mu: AtomicPathMeasure, spec: LatticeSpec) -> AtomicPathMeasure:
    """Pushforward of ``mu`` through ``round_point``; colliding images merge."""
    if not len(mu):
        return mu
    rounded = round_point(mu.values(), spec)
    merged: dict[tuple, list] = {}
    for row, w in zip(rounded, mu.weights):
        key = tuple(row.tolist())
        merged.setdefault(key, []).append(w)
    grid = mu.grid
    paths = tuple(DiscretePath(grid, key) for key in merged)
    return AtomicPathMeasure(paths, tuple(math.fsum(ws) for ws in merged.values()))


def quantization_error(mu: AtomicPathMeasure, p: Polynomial, spec: LatticeSpec) -> float:
    """|int p dmu - int p d(mu o rho^-1)|, summed atom by atom."""
    if not len(mu):
        return 0.0
    before = evaluate_many(p, mu.values(), mu.grid)
    after = evaluate_many(p, round_point(mu.values(), spec), mu.grid)
    return abs(math.fsum(np.asarray(mu.weights) * (before - after)))
