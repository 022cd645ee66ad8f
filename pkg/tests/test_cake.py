from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairmech.cake import (
    CakeAllocation,
    PieceSet,
    PiecewiseDensity,
    Segment,
    cake_bic_audit,
    expected_share_check,
    incremental_accommodation,
    integrate,
    is_partition,
    is_proportional,
    measure,
    random_constant_density,
    random_linear_density,
    random_piece,
    split_equal,
)
from fairmech.core import InvalidInstance

F = Fraction
U = PiecewiseDensity.uniform()
RAMP = PiecewiseDensity((Segment(F(0), F(1), F(0), F(2)),))
LEFT = PiecewiseDensity.steps([F(1, 2)], [2, 0])
WHOLE = PieceSet.of([(0, 1)])


def ivs(*pairs):
    return tuple((F(a), F(b)) for a, b in pairs)


def test_measure_and_integral_examples():
    half = PieceSet.of([(0, F(1, 2))])
    assert integrate(U, half) == F(1, 2)
    assert integrate(RAMP, half) == F(1, 4)
    assert integrate(U, PieceSet()) == 0 and measure(PieceSet()) == 0


def test_split_equal_examples():
    a, b = split_equal(WHOLE, U, 2)
    assert a.intervals == ivs((0, "1/2")) and b.intervals == ivs(("1/2", 1))
    a, b = split_equal(WHOLE, RAMP, 2)
    assert a.intervals == ivs((0, "1/4"), ("3/4", 1)) and b.intervals == ivs(("1/4", "3/4"))
    assert integrate(RAMP, a) == integrate(RAMP, b) == F(1, 2)
    assert integrate(RAMP, PieceSet.of([(0, F(1, 4))])) == F(1, 16)
    a, b = split_equal(WHOLE, LEFT, 2)
    assert a.intervals == ivs((0, "1/4"), ("1/2", "3/4")) and b.intervals == ivs(("1/4", "1/2"), ("3/4", 1))
    with pytest.raises(InvalidInstance):
        split_equal(WHOLE, U, 1)


def test_piece_set_algebra():
    x = PieceSet.of([(F(1, 2), 1), (0, F(1, 4)), (F(1, 4), F(1, 3))])
    assert x.intervals == ivs((0, "1/3"), ("1/2", 1))
    assert x.minus(PieceSet.of([(F(1, 8), F(3, 4))])).intervals == ivs((0, "1/8"), ("3/4", 1))
    with pytest.raises(InvalidInstance):
        PieceSet.of([(0, F(1, 2)), (F(1, 4), 1)])


def test_density_validation():
    with pytest.raises(InvalidInstance, match="unnormalized"):
        PiecewiseDensity((Segment(F(0), F(1), F(2), F(0)),))
    with pytest.raises(InvalidInstance, match="negative"):
        PiecewiseDensity((Segment(F(0), F(1), F(3), F(-4)),))
    with pytest.raises(InvalidInstance):
        PiecewiseDensity((Segment(F(0), F(1, 2), F(2), F(0)), Segment(F(3, 4), F(1), F(0), F(0))))


def test_accommodation_examples():
    alloc, _ = incremental_accommodation([U, LEFT])
    assert alloc.pieces[0].intervals == ivs(("1/2", 1)) and alloc.pieces[1].intervals == ivs((0, "1/2"))
    assert [integrate(f, X) for f, X in zip([U, LEFT], alloc.pieces)] == [F(1, 2), 1]
    alloc, trace = incremental_accommodation([U, U, U])
    assert [measure(X) for X in alloc.pieces] == [F(1, 3)] * 3
    assert [measure(X) for X in trace[1].pieces] == [F(1, 2), F(1, 2)]
    assert trace[2].picks == (0, 0)
    alloc, _ = incremental_accommodation([U, U])
    assert alloc.pieces[1].intervals == ivs((0, "1/2"))
    assert is_proportional(alloc, [U, U]).verdict


def test_proportionality_examples():
    everything = CakeAllocation((WHOLE, PieceSet()))
    r = is_proportional(everything, [U, U])
    assert not r.verdict and r.to_dict()["witness"] == 2
    assert is_proportional(CakeAllocation((WHOLE,)), [RAMP]).verdict


def test_expected_share_examples():
    assert expected_share_check(WHOLE, U, U, 2) == (F(1, 2), F(1, 2))
    assert expected_share_check(WHOLE, U, LEFT, 3) == (F(2, 3), F(2, 3))
    right = PieceSet.of([(F(1, 2), 1)])
    assert expected_share_check(right, RAMP, LEFT, 4) == (0, 0)


def test_cake_bic_examples():
    r = cake_bic_audit(1, LEFT, [U, RAMP], [U], 2)
    alloc, _ = incremental_accommodation([U, LEFT])
    assert r.verdict and r.truthful == integrate(LEFT, alloc.pieces[1]) == 1
    r3 = cake_bic_audit(1, LEFT, [U, RAMP], [U], 3)
    assert r3.verdict and r3.enumeration_agrees and r3.truthful == F(2, 3)
    r1 = cake_bic_audit(0, U, [RAMP, LEFT], [], 2)
    assert r1.truthful == F(1, 2) and r1.deviations == (F(1, 2), F(1, 2))
    with pytest.raises(InvalidInstance):
        cake_bic_audit(1, U, [], [], 2)


densities = st.builds(
    lambda seed, segs, linear: (random_linear_density if linear else random_constant_density)(random.Random(seed), segs),
    st.integers(0, 10**6), st.integers(1, 5), st.booleans(),
)
pieces = st.builds(lambda seed: random_piece(random.Random(seed)), st.integers(0, 10**6))


@given(densities, pieces, st.integers(2, 6))
def test_split_equal_postconditions(f, X, k):
    parts = split_equal(X, f, k)
    assert len(parts) == k
    assert all(measure(c) * k == measure(X) for c in parts)
    assert all(integrate(f, c) * k == integrate(f, X) for c in parts)
    assert PieceSet.of(iv for c in parts for iv in c.intervals) == X


@given(st.lists(densities, min_size=1, max_size=4))
def test_accommodation_trace_is_proportional_partition(fs):
    alloc, trace = incremental_accommodation(fs)
    assert is_proportional(alloc, fs).verdict
    for step in trace:
        k = len(step.pieces)
        assert is_partition(step.pieces)
        assert all(integrate(fs[j], step.pieces[j]) * k >= 1 for j in range(k))


@given(st.integers(1, 6))
def test_uniform_reports_get_equal_lengths(n):
    alloc, _ = incremental_accommodation([U] * n)
    assert all(measure(X) == F(1, n) for X in alloc.pieces)


@given(pieces, densities, densities, st.integers(2, 6))
def test_expected_share_identity(X, f, g, t):
    lhs, rhs = expected_share_check(X, f, g, t)
    assert lhs == rhs


@given(densities, densities, st.lists(densities, min_size=1, max_size=2), st.integers(1, 2))
def test_truthful_crumb_picks_are_optimal(earlier, truth, devs, i):
    earlier = [earlier, U][:i]
    r = cake_bic_audit(i, truth, devs, earlier, 3)
    assert r.verdict and r.enumeration_agrees


def test_enumeration_counts_every_pick_profile():
    # n = 3, agent 2 (index 1): agent 3 picks one of 3 crumbs from each of 2 pieces
    alloc, _ = incremental_accommodation([U, LEFT])
    X = alloc.pieces[1]
    crumbs = split_equal(X, LEFT, 3)
    brute = sum(
        (integrate(LEFT, X.minus(crumbs[b])) for a, b in itertools.product(range(3), repeat=2)), F(0)
    ) / 9
    assert brute == F(2, 3) * integrate(LEFT, X)
