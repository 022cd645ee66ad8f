from __future__ import annotations

import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import profile_and_owner, profiles
from oracles import pareto_dominated_bruteforce, sd_dominated_bruteforce
from fairmech.audits import (
    Criterion,
    Dominance,
    DominanceMode,
    FractionalAllocation,
    dominates,
    fractional_dominates,
    is_ef1,
    is_efficient,
    is_envy_free,
    is_fpo,
    is_fulfilling,
    pdp_holds,
    pigou_dalton_pair,
)
from fairmech.core import Allocation, InvalidInstance, ValuationProfile, utilities, utility
from fairmech.mechanisms import WelfareFn, serial_dictatorship

P = ValuationProfile.of
SD, SDP = DominanceMode.SD, DominanceMode.SD_PLUS


def F(*a):
    return tuple(Fraction(x) for x in a)


def test_dominance_examples():
    assert dominates(F(1, 1), {0, 1}, {0}, SDP) is Dominance.STRICT
    assert dominates(F(1, 0), {0}, {0, 1}, SDP) is Dominance.WEAK
    assert dominates(F(1, 0), {0, 1}, {0}, SD) is Dominance.STRICT
    assert dominates(F(1, 0), {0}, {0, 1}, SD) is Dominance.INCOMPARABLE
    assert dominates(F(5, 4, 3, 2), {0, 1}, {1, 2}, SDP) is Dominance.STRICT


def test_envy_examples():
    same = P([[1, 1], [1, 1]])
    assert is_envy_free(same, Allocation((0, 1), 2)).verdict
    r = is_envy_free(same, Allocation((0, 0), 2))
    assert not r.verdict and r.witness == (1, 0)
    assert not is_envy_free(P([[1], [1]]), Allocation((0,), 2)).verdict


def test_ef1_examples():
    three = P([[1, 1, 1], [1, 1, 1]])
    r = is_ef1(three, Allocation((0, 0, 0), 2))
    assert not r.verdict and r.to_dict()["witness"] == [2, 1]
    assert is_ef1(P([[1], [1]]), Allocation((0,), 2)).verdict


def test_efficiency_separation_examples():
    p = P([[5, 4, 3, 2], [6, 1, 2, 3]])
    x = Allocation.parse("1,1,2,2", 2)
    for method in ("brute", "matching"):
        assert is_efficient(p, x, Criterion.SD_PLUS, method=method).verdict
    r = is_efficient(p, x, Criterion.PARETO)
    assert not r.verdict
    assert r.witness.external_bundles() == [[2, 3, 4], [1]]
    assert utilities(p, r.witness) == (9, 6) and utilities(p, x) == (9, 5)

    q = P([[1, 1], [1, 0]])
    y = Allocation.parse("1,2", 2)
    for method in ("brute", "matching"):
        assert is_efficient(q, y, Criterion.SD, method=method).verdict
        r = is_efficient(q, y, Criterion.SD_PLUS, method=method)
        assert not r.verdict and r.witness.owner == (0, 0)


def test_matching_rejects_pareto():
    with pytest.raises(InvalidInstance):
        is_efficient(P([[1]]), Allocation((0,), 1), Criterion.PARETO, method="matching")


def test_fpo_examples():
    p = P([["2/5", "3/5"], ["3/10", "7/10"]])
    x = Allocation.parse("2,1", 2)
    assert utilities(p, x) == (Fraction(3, 5), Fraction(3, 10))
    for method in ("simplex", "vertices"):
        r = is_fpo(p, x, method=method)
        assert not r.verdict
        assert fractional_dominates(p, r.witness.shares, x)
    # the hand-built witness: agent 1 holds 3/4 of item 1 and 1/2 of item 2
    shares = ((Fraction(3, 4), Fraction(1, 2)), (Fraction(1, 4), Fraction(1, 2)))
    assert fractional_dominates(p, shares, x)
    assert [sum(s * v for s, v in zip(shares[i], p.values[i])) for i in range(2)] == [Fraction(3, 5), Fraction(17, 40)]
    assert is_fpo(p, Allocation.parse("1,2", 2)).verdict
    assert is_fpo(P([[1, 2, 3]]), Allocation((0, 0, 0), 1)).verdict


def test_fractional_dominates_rejects_infeasible_shares():
    p = P([[1, 1], [1, 1]])
    x = Allocation((0, 1), 2)
    assert not fractional_dominates(p, ((1, 1), (1, 1)), x)


def test_fulfilling_examples():
    both = P([[1, 1], [1, 1]])
    assert is_fulfilling(both, Allocation((0, 1), 2)).verdict
    r = is_fulfilling(both, Allocation((0, 0), 2))
    assert not r.verdict and r.to_dict()["witness"] == 2
    assert is_fulfilling(P([[1, 0], [1, 1]]), Allocation((1, 1), 2)).verdict


def test_pdp_examples():
    assert pdp_holds(WelfareFn("nash"), (4, 1), (3, 2))
    assert pdp_holds(WelfareFn("utilitarian"), (4, 1), (3, 2))
    assert pdp_holds(WelfareFn("egalitarian"), (5, 1), (4, 2))
    assert not pdp_holds(WelfareFn.p_mean(2), (4, 1), (3, 2))
    assert pigou_dalton_pair((4, 1), (1, 4)) is None
    with pytest.raises(InvalidInstance):
        pdp_holds(WelfareFn("nash"), (4, 1), (4, 2))


@given(st.sampled_from(["nash", "utilitarian", "egalitarian", "p=1/2", "p=-1", "p=1/3"]),
       st.lists(st.integers(0, 20), min_size=2, max_size=4), st.data())
def test_pdp_family_members_respect_transfers(w, u, data):
    u = [Fraction(x) for x in u]
    i, j = max(range(len(u)), key=lambda k: u[k]), min(range(len(u)), key=lambda k: u[k])
    if u[i] == u[j]:
        return
    d = data.draw(st.integers(1, 99)) * (u[i] - u[j]) / 100
    v = list(u)
    v[i] -= d
    v[j] += d
    assert pdp_holds(WelfareFn.parse(w), u, v)


@given(st.lists(st.integers(0, 5), min_size=1, max_size=6), st.data())
def test_sd_plus_dominance_implies_utility_order(v, data):
    v = [Fraction(x) for x in v]
    m = len(v)
    a = data.draw(st.sets(st.integers(0, m - 1)))
    b = data.draw(st.sets(st.integers(0, m - 1)))
    d = dominates(v, a, b, SDP)
    if d is Dominance.WEAK:
        assert utility(v, a) >= utility(v, b)
    if d is Dominance.STRICT:
        assert utility(v, a) > utility(v, b)


@given(profile_and_owner(max_n=3, max_m=4))
def test_matching_agrees_with_brute_force_and_reference(case):
    p, owner = case
    x = Allocation(owner, p.n)
    for crit, plus in ((Criterion.SD, False), (Criterion.SD_PLUS, True)):
        fast = is_efficient(p, x, crit, method="matching")
        slow = is_efficient(p, x, crit, method="brute")
        assert fast.verdict == slow.verdict == (not sd_dominated_bruteforce(p.values, owner, plus))
        for r in (fast, slow):
            if not r.verdict:
                _assert_dominates(p, r.witness, x, SD if crit is Criterion.SD else SDP)


def _assert_dominates(p, y, x, mode):
    res = [dominates(p.row(i), y.bundle(i), x.bundle(i), mode) for i in range(p.n)]
    assert Dominance.INCOMPARABLE not in res and Dominance.STRICT in res


@given(profiles(max_n=3, max_m=4))
def test_efficiency_notions_are_nested(p):
    for owner in itertools.product(range(p.n), repeat=p.m):
        x = Allocation(owner, p.n)
        par = is_efficient(p, x, Criterion.PARETO).verdict
        sdp = is_efficient(p, x, Criterion.SD_PLUS).verdict
        sd = is_efficient(p, x, Criterion.SD).verdict
        assert par == (not pareto_dominated_bruteforce(p.values, owner))
        assert (not par or sdp) and (not sdp or sd)


@given(profile_and_owner(max_n=3, max_m=3))
def test_fpo_implies_pareto_and_solvers_agree(case):
    p, owner = case
    x = Allocation(owner, p.n)
    a, b = is_fpo(p, x), is_fpo(p, x, method="vertices")
    assert a.verdict == b.verdict
    if a.verdict:
        assert is_efficient(p, x, Criterion.PARETO).verdict
    else:
        assert isinstance(a.witness, FractionalAllocation)
        assert fractional_dominates(p, a.witness.shares, x)


@given(profile_and_owner(max_n=3, max_m=5))
def test_ef1_witness_reverifies(case):
    p, owner = case
    x = Allocation(owner, p.n)
    r = is_ef1(p, x)
    if not r.verdict:
        i, j = r.witness
        v, bj = p.row(i), x.bundle(j)
        assert all(utility(v, x.bundle(i)) < utility(v, bj - {g}) for g in bj)


@given(profile_and_owner(max_n=3, max_m=4))
def test_pareto_witness_reverifies(case):
    p, owner = case
    x = Allocation(owner, p.n)
    r = is_efficient(p, x, Criterion.PARETO)
    if not r.verdict:
        u, w = utilities(p, x), utilities(p, r.witness)
        assert all(a >= b for a, b in zip(w, u)) and w != u


def test_dictatorship_outputs_are_pareto_efficient_on_grid():
    for rows in itertools.product(itertools.product(range(3), repeat=2), repeat=2):
        p = P(rows)
        for order in ((0, 1), (1, 0)):
            assert is_efficient(p, serial_dictatorship(p, order), Criterion.PARETO).verdict
