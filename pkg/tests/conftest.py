from fractions import Fraction

import hypothesis.strategies as st
import pytest
from hypothesis import settings

from wienermoment.polyalg import Monomial, Polynomial

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

GRID4_TIMES = [Fraction(k, 4) for k in range(1, 5)]


@st.composite
def monomials(draw, times=GRID4_TIMES, max_degree=2):
    exps = {}
    for _ in range(draw(st.integers(0, max_degree))):
        t = draw(st.sampled_from(times))
        exps[t] = exps.get(t, 0) + 1
    return Monomial(exps)


@st.composite
def polynomials(draw, times=GRID4_TIMES, max_degree=2, max_terms=4):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        m = draw(monomials(times, max_degree))
        terms[m] = draw(st.floats(-3, 3, allow_nan=False).filter(lambda c: abs(c) > 1e-3))
    return Polynomial(terms)


@pytest.fixture
def one():
    return Polynomial.const(1.0)
