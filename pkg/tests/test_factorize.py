import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wienermoment.certify import basis_monomials
from wienermoment.factorize import (
    BandViolation,
    FactorizationResult,
    decompose,
    moment_transport_check,
    pushforward,
    reconstruct,
)
from wienermoment.functional import AtomicPathMeasure, GaussianFunctional
from wienermoment.polyalg import DiscretePath, Polynomial, TimeGrid, X
from wienermoment.represent import BandSpec, enumerate_band_paths, solve


def random_band_paths(rng, n, c0, c1, count):
    mags = np.sqrt(rng.uniform(c0 / n, c1 / n, size=(count, n)))
    signs = rng.choice([-1.0, 1.0], size=(count, n))
    return np.cumsum(mags * signs, axis=1)


def test_decompose_examples():
    w = DiscretePath.from_values([0.5, 0, 0.5, 1.0])
    fr = decompose(w, BandSpec(4, 1.0, 1.0))
    assert fr.xi == (1.0, 1.0, 1.0, 1.0)
    assert fr.signs == (1, -1, 1, 1)
    np.testing.assert_allclose(fr.walk, [0.5, 0, 0.5, 1.0], atol=1e-15)

    fr = decompose(DiscretePath.from_values([0.6, 1.2]), BandSpec(2, 0.5, 1.5))
    np.testing.assert_allclose(fr.xi, [0.6 * math.sqrt(2)] * 2, rtol=1e-12)
    assert fr.signs == (1, 1)

    with pytest.raises(BandViolation):
        decompose(DiscretePath.from_values([0.6, 2.0]), BandSpec(2, 0.5, 1.5))
    with pytest.raises(BandViolation):
        decompose(DiscretePath.from_values([0.6, 0.6]), BandSpec(2, 0.5, 1.5))


def test_reconstruct_examples():
    p = reconstruct(FactorizationResult((1.0, 1.0), (1, -1)))
    np.testing.assert_allclose(p.values, [1 / math.sqrt(2), 0.0], atol=1e-15)
    fr = FactorizationResult((math.sqrt(3),) * 3, (1, 1, -1))
    np.testing.assert_allclose(reconstruct(fr).values, math.sqrt(3) * fr.walk, rtol=1e-14)
    w = DiscretePath.from_values([0.5, 0, 0.5, 1.0])
    np.testing.assert_array_equal(reconstruct(decompose(w, BandSpec(4, 1.0, 1.0))).values,
                                  w.values)


@given(st.integers(0, 10**6), st.sampled_from([2, 4, 8]))
def test_round_trips(seed, n):
    rng = np.random.default_rng(seed)
    band = BandSpec(n, 0.5, 2.0, c=1.0)
    for row in random_band_paths(rng, n, 0.5, 2.0, 20):
        w = DiscretePath.from_values(row)
        fr = decompose(w, band)
        assert np.max(np.abs(np.array(reconstruct(fr).values) - row)) <= 1e-12
        again = decompose(reconstruct(fr), band)
        assert again.signs == fr.signs
        np.testing.assert_allclose(again.xi, fr.xi, atol=1e-12)


def test_injective_on_random_paths():
    rng = np.random.default_rng(0)
    band = BandSpec(4, 0.5, 2.0, c=1.0)
    rows = random_band_paths(rng, 4, 0.5, 2.0, 1000)
    seen = {}
    for row in rows:
        fr = decompose(DiscretePath.from_values(row), band)
        seen[(fr.xi, fr.signs)] = tuple(row)
    assert len(seen) == len({tuple(r) for r in rows})


@pytest.mark.parametrize("n", range(1, 11))
def test_anderson_walk_marginal(n):
    band = BandSpec(n, 0.9, 1.1, (math.sqrt(1.0 / n),))
    paths = enumerate_band_paths(band)
    mu = AtomicPathMeasure(tuple(paths), (1.0 / len(paths),) * len(paths))
    wm = pushforward(mu, band)
    assert len(wm.weights) == 2 ** n
    for w in wm.weights.values():
        assert abs(Fraction(w) - Fraction(1, 2 ** n)) <= 1e-12
    assert all(np.allclose(xi, 1.0) for xs in wm.xi_lists.values() for xi in xs)


def test_pushforward_examples():
    band = BandSpec(2, 0.5, 1.5)
    mu = AtomicPathMeasure.from_arrays([[0.6, 1.2], [0.8, 1.5]], [0.25, 0.75])
    wm = pushforward(mu, band)
    assert wm.weights == {(1, 1): 1.0}
    assert len(wm.xi_lists[(1, 1)]) == 2
    assert pushforward(AtomicPathMeasure((), ()), band).weights == {}
    obj = wm.to_json()
    assert obj["atoms"][0]["signs"] == [1, 1] and len(obj["atoms"][0]["xi_list"]) == 2


def test_transport_examples():
    mu_band = BandSpec(2, 0.9, 1.1, (1 / math.sqrt(2),))
    paths = enumerate_band_paths(mu_band)
    mu = AtomicPathMeasure(tuple(paths), (0.25,) * 4)
    for m in basis_monomials(TimeGrid(2), 3):
        p = Polynomial.from_monomial(m)
        assert moment_transport_check(mu, BandSpec(2, 1.0, 1.0), p, 1.0) <= 1e-10

    c = 2.5
    cband = BandSpec(3, c, c)
    paths = enumerate_band_paths(cband)
    mu = AtomicPathMeasure(tuple(paths), (1 / len(paths),) * len(paths))
    assert moment_transport_check(mu, cband, X("1", 2), math.sqrt(c)) <= 1e-10

    mixed = AtomicPathMeasure.from_arrays([[0.6, 1.2], [-0.8, -1.4]], [0.5, 0.5])
    assert moment_transport_check(mixed, BandSpec(2, 0.5, 1.5), X("1", 2), 1.0) > 1e-6


def test_scaling_bracket():
    rng = np.random.default_rng(2)
    c0, c1 = 0.7, 1.6
    band = BandSpec(8, c0, c1, c=1.0)
    for row in random_band_paths(rng, 8, c0, c1, 200):
        xi = np.array(decompose(DiscretePath.from_values(row), band).xi)
        assert np.all(xi >= math.sqrt(c0) * (1 - 1e-12))
        assert np.all(xi <= math.sqrt(c1) * (1 + 1e-12))


def test_transport_after_represent():
    # constant-scale band: the fitted measure is carried exactly by the scaled walk
    c = 1.0
    band = BandSpec(2, c, c)
    d = 2
    res = solve(GaussianFunctional(TimeGrid(2), c), band, [], d)
    for m in basis_monomials(TimeGrid(2), d):
        gap = moment_transport_check(res.measure, band, Polynomial.from_monomial(m), math.sqrt(c))
        assert gap <= res.residual + 1e-9
