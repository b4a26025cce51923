from __future__ import annotations

import cmath
import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hamdd.numerics import (
    ONE,
    ZERO,
    NumericDomainError,
    WeightTable,
    canonical_weight,
    weight_arith,
)

finite = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)


def test_close_values_share_a_representative():
    t = WeightTable(1e-10)
    a = t(0.3 + 0.4j)
    b = t(0.3 + 3e-11 + (0.4 - 2e-11) * 1j)
    assert a is b or a == b
    assert len(t) == 1


def test_distinct_values_stay_distinct():
    t = WeightTable(1e-10)
    assert t(0.3) != t(0.3 + 1e-8)
    assert len(t) == 2


def test_snapping_to_zero_and_one():
    t = WeightTable(1e-10)
    assert t(1 + 5e-11 - 3e-11j) == ONE
    assert t(4e-11 + 0j) == ZERO
    assert t(-1 + 1e-11) == -1
    assert t(2e-11 + 1j) == 1j


def test_boundary_neighbour_probe():
    tol = 1e-10
    t = WeightTable(tol)
    # straddles the rounding boundary between two buckets
    x = 0.123456 + 0.5 * tol
    first = t(x - 0.01 * tol)
    assert t(x + 0.01 * tol) == first


@pytest.mark.parametrize("bad", [math.nan, math.inf, complex(0, math.nan), complex(-math.inf, 1)])
def test_non_finite_rejected(bad):
    with pytest.raises(NumericDomainError):
        WeightTable().lookup(complex(bad))


@pytest.mark.parametrize("tol", [0, -1e-9, math.nan, math.inf])
def test_bad_tolerance_rejected(tol):
    with pytest.raises(NumericDomainError):
        WeightTable(tol)


def test_retain_drops_unused_values():
    t = WeightTable()
    keep = t(0.5 + 0.5j)
    t(0.25j)
    t(0.75)
    assert t.retain([keep]) == 2
    assert len(t) == 1
    assert t(0.5 + 0.5j) == keep


def test_weight_arith():
    t = WeightTable()
    a = t(1 / math.sqrt(2))
    assert weight_arith(t, "mul", a, a) == t(0.5)
    assert weight_arith(t, "add", a, -a) == ZERO
    assert weight_arith(t, "conj", t(1j)) == -1j
    assert weight_arith(t, "neg", ONE) == -1
    assert weight_arith(t, "abs2", t(0.6 + 0.8j)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        weight_arith(t, "div", a, a)


@given(complexes)
@settings(max_examples=300, deadline=None)
def test_lookup_is_idempotent_and_close(c):
    t = WeightTable()
    r = canonical_weight(c, t)
    assert t(r) == r
    assert abs(r - c) <= 2e-10


@given(complexes, st.floats(min_value=-0.4, max_value=0.4), st.floats(min_value=-0.4, max_value=0.4))
@settings(max_examples=300, deadline=None)
def test_perturbations_unify(c, dr, di):
    # unification is not transitive across the snap zones around 0 and +-1
    def clear(x):
        return abs(x) > 3e-10 and abs(abs(x) - 1) > 3e-10

    assume(clear(c.real) and clear(c.imag))
    t = WeightTable(1e-10)
    r = t(c)
    assert t(c + complex(dr, di) * 1e-10) == r


@given(st.floats(min_value=0, max_value=2 * math.pi))
@settings(max_examples=100, deadline=None)
def test_unit_phases_round_trip(phi):
    t = WeightTable()
    z = t(cmath.exp(1j * phi))
    assert abs(abs(z) - 1) < 1e-9
