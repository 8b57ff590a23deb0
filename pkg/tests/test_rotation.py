import math
import time
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from qpforce import cocycle as cc
from qpforce.models import GOLDEN, build_map
from qpforce.rotation import (
    AmbiguousRelationError,
    RationalRelation,
    omega_looks_rational,
    rational_relation_search,
    rotation_number_fibre_average,
    rotation_number_orbit,
    rotation_number_weighted,
)

# arnold(c=0.25, K=0.5, eps=0.3) at N=10^7 from x=0 and x=0.5; the two starts agree to 2.4e-8
ARNOLD_RHO_X0 = 0.24438417783724545
ARNOLD_RHO_X05 = 0.24438415394445784


def test_rigid_exact(rigid_quarter):
    for th, x in [(0.0, 0.0), (0.37, -2.5)]:
        est = rotation_number_orbit(rigid_quarter, th, x, 1000)
        assert est.value == pytest.approx(0.25, abs=1e-13)


def test_skew_mean_law(skew_map):
    est = rotation_number_orbit(skew_map, 0.0, 0.0, 10**6)
    assert abs(est.value - 0.3) < 1e-3


def test_fibre_average_examples(rigid_quarter, skew_map):
    est = rotation_number_fibre_average(rigid_quarter, 100, 64)
    assert est.value == pytest.approx(0.25, abs=1e-13) and est.spread < 1e-12
    est = rotation_number_fibre_average(skew_map, 10**5, 256)
    assert abs(est.value - 0.3) < 1e-3


def test_fibre_average_constant_diagonal():
    m = cc.projectivize(cc.constant_cocycle([[2, 0], [0, 0.5]]))
    assert abs(rotation_number_fibre_average(m, 10**4, 64).value) < 1e-6


@pytest.mark.slow
def test_arnold_long_orbit_pinned(arnold_map):
    a = rotation_number_orbit(arnold_map, 0.0, 0.0, 10**7).value
    b = rotation_number_orbit(arnold_map, 0.0, 0.5, 10**7).value
    assert a == pytest.approx(ARNOLD_RHO_X0, abs=1e-12)
    assert b == pytest.approx(ARNOLD_RHO_X05, abs=1e-12)
    assert abs(a - b) < 1e-5


def test_arnold_short_orbit_near_pinned(arnold_map):
    assert rotation_number_orbit(arnold_map, 0.0, 0.0, 10**5).value == pytest.approx(ARNOLD_RHO_X0, abs=1e-4)


def test_orbit_spread_reported(arnold_map):
    est = rotation_number_orbit(arnold_map, 0.0, 0.0, 10**4)
    assert est.spread > 0 and est.n_iterates == 10**4 and est.method == "orbit"


def test_weighted_beats_plain_average(skew_map, conj_map):
    for m, rho in ((skew_map, 0.3), (conj_map, math.sqrt(3) - 1)):
        w = rotation_number_weighted(m, 0.0, 0.0, 10**4)
        plain = rotation_number_orbit(m, 0.0, 0.0, 10**4)
        assert abs(w.value - rho) < 1e-12 < abs(plain.value - rho)
        assert w.method == "weighted" and w.spread < 1e-9


def test_weighted_agrees_with_long_orbit(arnold_map):
    w = rotation_number_weighted(arnold_map, 0.0, 0.0, 10**5).value
    assert w == pytest.approx(ARNOLD_RHO_X0, abs=5e-8)
    with pytest.raises(ValueError):
        rotation_number_weighted(arnold_map, 0.0, 0.0, 8)


def test_relation_constructed_identity():
    rel = rational_relation_search(GOLDEN, (1 + GOLDEN) / 2, 10, 10, 1e-9)
    assert (rel.l, rel.k, rel.q) == (-1, -1, 2)
    assert rel.residual < 1e-12
    assert rel.cover == (1, 1, 2)


def test_relation_zero_rho():
    rel = rational_relation_search(GOLDEN, 0.0, 10, 10, 1e-9)
    assert (rel.l, rel.k, rel.q) == (0, 0, 1)


def test_relation_none_for_independent_pair():
    omega, rho = math.sqrt(2) - 1, math.sqrt(3) - 1
    assert rational_relation_search(omega, rho, 50, 50, 1e-9) is None
    assert oracles.smallest_relation(omega, rho, 50, 50, 1e-9) is None


def test_relation_search_is_fast():
    t = time.perf_counter()
    rational_relation_search(math.sqrt(2) - 1, math.sqrt(3) - 1, 50, 50, 1e-9)
    rational_relation_search(GOLDEN, (1 + GOLDEN) / 2, 10, 10, 1e-9)
    assert time.perf_counter() - t < 1.0


def test_rational_omega_warns():
    with pytest.warns(RuntimeWarning):
        assert rational_relation_search(0.5, math.sqrt(2) - 1, 8, 8, 1e-9) is None
    assert omega_looks_rational(0.375) == 8
    assert omega_looks_rational(GOLDEN) is None


def test_ambiguous_tolerance():
    # such a loose tolerance also makes omega itself look rational
    with pytest.raises(AmbiguousRelationError), pytest.warns(RuntimeWarning):
        rational_relation_search(GOLDEN, 0.3, 64, 64, 0.05)


def test_relation_validation():
    with pytest.raises(ValueError):
        RationalRelation(2, 0, 4, 0.0)
    with pytest.raises(ValueError):
        RationalRelation(1, 0, 0, 0.0)
    with pytest.raises(ValueError):
        rational_relation_search(GOLDEN, 0.1, 0, 5)


@pytest.mark.parametrize("rho", [0.3, 0.125, (1 + GOLDEN) / 2, 1 - GOLDEN, 2 * GOLDEN - 1, math.sqrt(3) - 1])
def test_relation_matches_bruteforce(rho):
    rel = rational_relation_search(GOLDEN, rho, 20, 20, 1e-9)
    ref = oracles.smallest_relation(GOLDEN, rho, 20, 20, 1e-9)
    assert (None if rel is None else (rel.l, rel.k, rel.q)) == ref


# -- properties --------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 1.0, exclude_max=True), st.integers(-3, 3))
def test_lift_shift_adds_integer(rho, m):
    base = build_map("arnold", params={"c": rho, "K": 0.4, "eps": 0.2})
    a = rotation_number_orbit(base, 0.0, 0.0, 2000).value
    b = rotation_number_orbit(base.with_lift_shift(m), 0.0, 0.0, 2000).value
    assert b == pytest.approx(a + m, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(-20, 20), st.integers(-20, 20), st.integers(1, 20))
def test_relation_recovery(l, k, q):
    rho = -(l + k * GOLDEN) / q
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rel = rational_relation_search(GOLDEN, rho, 20, 20, 1e-9)
    assert rel is not None
    # the found relation is the primitive one generating (l, k, q)
    assert rel.l + rel.k * GOLDEN + rel.q * rho == pytest.approx(0.0, abs=1e-9)
    g = math.gcd(math.gcd(abs(l), abs(k)), q)
    assert rel.q <= q // g


@pytest.mark.slow
@pytest.mark.parametrize("family, params", [
    ("rigid", {"rho": 0.37}),
    ("skew", {"a": "0.3 + 0.1*sin(2*pi*theta)"}),
    ("arnold", {"c": 0.25, "K": 0.5, "eps": 0.3}),
    ("attracting-graph", {}),
    ("conjugated", {"inner": {"family": "rigid", "params": {"rho": 0.2}}, "h": "x + 0.1*sin(2*pi*(x + theta))"}),
    ("projective-cocycle", {"m11": "2*cos(pi*theta)", "m12": "-2*sin(pi*theta)",
                            "m21": "sin(pi*theta)/2", "m22": "cos(pi*theta)/2"}),
])
def test_two_starts_agree(family, params):
    m = build_map(family, params=params)
    a = rotation_number_orbit(m, 0.0, 0.0, 10**6)
    b = rotation_number_orbit(m, 0.37, 0.61, 10**6)
    assert abs(a.value - b.value) < 10 * max(a.spread, b.spread) + 1e-6
