"""Acceptance criteria, each at its stated size, tolerance and time budget.

Every test prints exactly one PASS/FAIL line, bypassing output capture, before
asserting.
"""
from __future__ import annotations

import random
import time
from fractions import Fraction

import pytest

from oracles import interim_by_simulation
from fairmech import cake
from fairmech.audits import Criterion, is_ef1, is_efficient, is_fpo, is_fulfilling
from fairmech.characterization import characterization_search
from fairmech.core import Allocation, ValuationProfile, enumerate_allocations, utilities
from fairmech.interim import _interim_counts, all_reports, bic_audit_exact, check_monotone, interim_allocation, positional_interim
from fairmech.mechanisms import MechanismId, WelfareFn, rr_pass
from fairmech.priors import PriorSpec, bic_audit_mc, neutrality_test

F = Fraction
RR = MechanismId("rr_pass")


@pytest.fixture(autouse=True)
def _console(capsys):
    global _CAP
    _CAP = capsys
    yield


_CAP = None


def verdict(number: int, title: str, ok: bool, elapsed: float, limit: float, detail: str = "") -> None:
    ok_time = elapsed < limit
    status = "PASS" if ok and ok_time else "FAIL"
    line = f"[{status}] criterion {number}: {title} ({elapsed:.2f}s of {limit:g}s)"
    if detail:
        line += f" {detail}"
    with _CAP.disabled():
        print("\n" + line)
    assert ok, line
    assert ok_time, line


def test_criterion_1_efficiency_separations():
    t = time.perf_counter()
    p = ValuationProfile.of([[5, 4, 3, 2], [6, 1, 2, 3]])
    x = Allocation.parse("1,1,2,2", 2)
    sdp = is_efficient(p, x, Criterion.SD_PLUS, method="brute")
    par = is_efficient(p, x, Criterion.PARETO)
    w = par.witness
    first = (
        sdp.verdict and not par.verdict
        and w.external_bundles() == [[2, 3, 4], [1]]
        and utilities(p, w) == (9, 6) and utilities(p, x) == (9, 5)
    )
    q = ValuationProfile.of([[1, 1], [1, 0]])
    y = Allocation.parse("1,2", 2)
    second = is_efficient(q, y, Criterion.SD, method="brute").verdict and not is_efficient(q, y, Criterion.SD_PLUS, method="brute").verdict
    verdict(1, "SD+ vs Pareto and SD vs SD+ separations", first and second, time.perf_counter() - t, 1.0)


def test_criterion_2_positional_interim():
    _interim_counts.cache_clear()
    t = time.perf_counter()
    ok = True
    checked = 0
    for n in (2, 3):
        for m in (2, 3, 4):
            for i in range(n):
                qp = positional_interim(RR, i, n, m)  # raises on any rank-dependence violation
                ok &= check_monotone(qp)
                checked += 1
    ok &= positional_interim(RR, 0, 2, 3).q_pos == (1, F(1, 2), F(1, 2))
    ok &= positional_interim(RR, 1, 2, 3).q_pos == (F(2, 3), F(1, 3), 0)
    for i in range(2):
        for rep in all_reports(3):
            ok &= list(interim_allocation(RR, i, rep, 2, 3).q) == interim_by_simulation(i, rep.order, rep.positive_count, 2, 3)
    verdict(2, "positional, monotone interim allocations", ok, time.perf_counter() - t, 30.0, f"[{checked} agent tables]")


def test_criterion_3_exact_bic():
    _interim_counts.cache_clear()
    rng = random.Random(2024)
    t = time.perf_counter()
    bad = []
    cases = [(2, m) for m in (1, 2, 3, 4)] + [(3, m) for m in (1, 2, 3)]
    for n, m in cases:
        for _ in range(100):
            v = [F(rng.randint(0, 50), rng.randint(1, 50)) for _ in range(m)]
            for i in range(n):
                if not bic_audit_exact(RR, i, v, n).verdict:
                    bad.append((n, m, i, v))
    verdict(3, "exact BIC of round robin with passing", not bad, time.perf_counter() - t, 300.0, f"[{len(cases) * 100} vectors]")


def test_criterion_4_ef1_and_sd_plus():
    rng = random.Random(4)
    t = time.perf_counter()
    fail = 0
    for _ in range(10_000):
        n, m = rng.randint(1, 4), rng.randint(1, 8)
        p = ValuationProfile(tuple(tuple(F(rng.randint(0, 20), 20) for _ in range(m)) for _ in range(n)))
        x = rr_pass(p.reports())
        fail += not is_ef1(p, x).verdict
        fail += not is_efficient(p, x, Criterion.SD_PLUS).verdict
    verdict(4, "round robin output is EF1 and SD+-efficient", fail == 0, time.perf_counter() - t, 600.0, f"[{fail} failures / 10000]")


def test_criterion_5_characterization():
    t = time.perf_counter()
    m1 = characterization_search(1)
    sd_only = characterization_search(1, efficiency="sd")
    t1 = time.perf_counter() - t
    m2 = characterization_search(2)
    ok = m1.verified and m1.nodes == 512 and m1.survivors == 4 and sd_only.status == "counterexample"
    ok &= m2.status in ("verified", "inconclusive")
    verdict(5, "DSIC + SD+ tables are dictatorships", ok and t1 < 1.0, time.perf_counter() - t, 60.0,
            f"[m=1 {t1:.2f}s, m=2 {m2.status} in {m2.nodes} nodes]")


@pytest.mark.parametrize("w", ["nash", "utilitarian", "egalitarian", "p=1/2"])
def test_criterion_6_welfare_bic_violation(w):
    t = time.perf_counter()
    x, eps = F(3, 5), F(1, 10)
    mech = MechanismId("welfare_max", welfare=WelfareFn.parse(w))
    (r,) = bic_audit_mc(mech, 0, (x, 1 - x), [(x + eps, 1 - x - eps)], PriorSpec("simplex"), 2, 10**6, 7)
    ok = abs(r.estimate - 0.02) <= 0.005 and r.estimate > 3 * r.stderr
    verdict(6, f"welfare:{w} misreport gain", ok, time.perf_counter() - t, 60.0, f"[gain {r.estimate:.5f} +/- {r.stderr:.5f}]")


def test_criterion_7_unique_fpo_fulfilling():
    rng = random.Random(7)
    t = time.perf_counter()
    ok = True
    for below in (True, False):
        for _ in range(50):
            b, y = F(rng.randint(1, 999), 1000), F(rng.randint(1, 999), 1000)
            while y == b or (y < b) != below:
                b, y = F(rng.randint(1, 999), 1000), F(rng.randint(1, 999), 1000)
            p = ValuationProfile.of([[b, 1 - b], [y, 1 - y]])
            good = [utilities(p, Allocation(o, 2)) for o in enumerate_allocations(2, 2)
                    if is_fpo(p, Allocation(o, 2)).verdict and is_fulfilling(p, Allocation(o, 2)).verdict]
            ok &= good == [(b, 1 - y) if below else (1 - b, y)]
    verdict(7, "unique fPO and fulfilling allocation", ok, time.perf_counter() - t, 10.0, "[100 instances]")


def _density(rng):
    segs = rng.randint(1, 5)
    if rng.random() < 0.5:
        return cake.random_constant_density(rng, segs)
    return cake.random_linear_density(rng, segs)


def test_criterion_8_cake_suite():
    rng = random.Random(8)
    t = time.perf_counter()
    bad = {"split": 0, "ia": 0, "share": 0, "bic": 0}
    for kind in ("constant", "linear"):
        gen = cake.random_constant_density if kind == "constant" else cake.random_linear_density
        for _ in range(1000):
            f = gen(rng, rng.randint(1, 5))
            X = cake.random_piece(rng)
            k = rng.randint(2, 6)
            parts = cake.split_equal(X, f, k)
            bad["split"] += not all(cake.measure(c) * k == cake.measure(X) and cake.integrate(f, c) * k == cake.integrate(f, X) for c in parts)
    for _ in range(1000):
        n = rng.randint(1, 5)
        fs = [_density(rng) for _ in range(n)]
        alloc, _ = cake.incremental_accommodation(fs)
        bad["ia"] += not cake.is_proportional(alloc, fs).verdict
    for _ in range(100):
        lhs, rhs = cake.expected_share_check(cake.random_piece(rng), _density(rng), _density(rng), rng.randint(2, 6))
        bad["share"] += lhs != rhs
    for i in range(3):
        for _ in range(10):
            earlier = [_density(rng) for _ in range(i)]
            r = cake.cake_bic_audit(i, _density(rng), [_density(rng) for _ in range(3)], earlier, 3)
            bad["bic"] += not (r.verdict and r.enumeration_agrees)
    verdict(8, "split, proportionality, expected share and cake BIC", not any(bad.values()), time.perf_counter() - t, 300.0, str(bad))


def test_criterion_9_neutrality():
    t = time.perf_counter()
    simplex = neutrality_test(PriorSpec("simplex"), 2, 10**6, 0.01, seed=9)
    simplex3 = neutrality_test(PriorSpec("simplex"), 3, 10**6, 0.01, seed=9)
    balanced = neutrality_test(PriorSpec.parse("per-item:0,1;1/2,3/4:balanced"), 2, 10**6, 0.01, seed=9)
    disjoint = neutrality_test(PriorSpec.parse("per-item:0,1;2,3"), 2, 10**6, 0.01, seed=9)
    ok = simplex.passed and simplex3.passed and balanced.passed and not disjoint.passed
    verdict(9, "neutrality chi-square tests", ok, time.perf_counter() - t, 60.0,
            f"[chi2 {simplex.statistic:.3f}, {simplex3.statistic:.3f}, {balanced.statistic:.3f}, {disjoint.statistic:.0f}]")
