"""Exact interim analysis of ordinal mechanisms under order-uniform opponents.

Opponents report a uniformly random strict order with every item valued
positively, which is what any neutral prior induces almost surely. All
probabilities are exact fractions with denominator dividing (m!)^(n-1).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Optional, Sequence

from .core import (
    Allocation,
    CapExceeded,
    InvalidInstance,
    OrdinalReport,
    ValuationProfile,
    check_cap,
    preference_order,
)
from .mechanisms import MechanismId

DEFAULT_INTERIM_CAP = 10**8


@dataclass(frozen=True)
class InterimTable:
    agent: int
    report: OrdinalReport
    q: tuple[Fraction, ...]  # q[j] = probability the agent receives item j


@dataclass(frozen=True)
class PositionalInterim:
    agent: int
    q_pos: tuple[Fraction, ...]  # q_pos[k] = probability of receiving the item ranked k


@dataclass(frozen=True)
class BicAuditResult:
    truthful_report: OrdinalReport
    truthful: Fraction
    best_deviation: OrdinalReport
    best_value: Fraction
    verdict: bool


class PositionalStructureError(Exception):
    """The interim allocation is not a function of rank alone."""

    def __init__(self, first, second):
        super().__init__(f"reports {first} and {second} disagree at a shared rank")
        self.pair = (first, second)


def all_reports(m: int) -> Iterator[OrdinalReport]:
    """Every (order, positive_count) pair: m! * (m + 1) reports."""
    for order in itertools.permutations(range(m)):
        for k in range(m + 1):
            yield OrdinalReport(order, k)


def _opponent_profiles(n: int, m: int) -> Iterator[tuple[OrdinalReport, ...]]:
    full = [OrdinalReport(p, m) for p in itertools.permutations(range(m))]
    return itertools.product(full, repeat=n - 1)


def _require_ordinal(mech: MechanismId) -> None:
    if not mech.is_ordinal:
        raise InvalidInstance(f"{mech.label()} is not ordinal; use the Monte Carlo audit")


@lru_cache(maxsize=None)
def _interim_counts(mech: MechanismId, i: int, report: OrdinalReport, n: int) -> tuple[int, ...]:
    m = report.m
    counts = [0] * m
    for opp in _opponent_profiles(n, m):
        reports = opp[:i] + (report,) + opp[i:]
        alloc = mech.run_ordinal(reports)
        for j, o in enumerate(alloc.owner):
            if o == i:
                counts[j] += 1
    return tuple(counts)


def interim_allocation(
    mech: MechanismId, i: int, report: OrdinalReport, n: int, m: int, cap: int = DEFAULT_INTERIM_CAP
) -> InterimTable:
    _require_ordinal(mech)
    if report.m != m:
        raise InvalidInstance("report length differs from m")
    total = math.factorial(m) ** (n - 1)
    check_cap("opponent order profiles", total, cap)
    counts = _interim_counts(mech, i, report, n)
    return InterimTable(i, report, tuple(Fraction(c, total) for c in counts))


def positional_interim(mech: MechanismId, i: int, n: int, m: int, cap: int = DEFAULT_INTERIM_CAP) -> PositionalInterim:
    """Verify rank-only dependence over all reports and return the positional vector.

    Raises :class:`PositionalStructureError` with the offending pair of reports
    when two reports give different probabilities to the items at a shared
    positive rank, or when an item outside the positive prefix has positive
    probability.
    """
    _require_ordinal(mech)
    check_cap("interim enumeration", math.factorial(m) ** n * (m + 1), cap)
    q_pos: list[Optional[Fraction]] = [None] * m
    witness: list[Optional[OrdinalReport]] = [None] * m
    for rep in all_reports(m):
        q = interim_allocation(mech, i, rep, n, m, cap).q
        for k, j in enumerate(rep.order):
            if k >= rep.positive_count:
                if q[j] != 0:
                    raise PositionalStructureError(rep, rep)
                continue
            if q_pos[k] is None:
                q_pos[k], witness[k] = q[j], rep
            elif q_pos[k] != q[j]:
                raise PositionalStructureError(witness[k], rep)
    return PositionalInterim(i, tuple(x if x is not None else Fraction(0) for x in q_pos))


def check_monotone(qp: PositionalInterim | Sequence[Fraction]) -> bool:
    q = qp.q_pos if isinstance(qp, PositionalInterim) else tuple(qp)
    return all(a >= b for a, b in zip(q, q[1:]))


def elementary_monotonicity_violations(mech: MechanismId, i: int, n: int, m: int) -> list:
    """Profiles where demoting an item one rank turns a loss into a win.

    For each full-support order of agent ``i``, each adjacent swap and each
    opponent profile, the demoted item must not go from unassigned to assigned.
    """
    _require_ordinal(mech)
    bad = []
    for order in itertools.permutations(range(m)):
        rep = OrdinalReport(order, m)
        for k in range(m - 1):
            swapped = list(order)
            swapped[k], swapped[k + 1] = swapped[k + 1], swapped[k]
            rep2 = OrdinalReport(tuple(swapped), m)
            a = order[k]
            for opp in _opponent_profiles(n, m):
                before = mech.run_ordinal(opp[:i] + (rep,) + opp[i:]).owner[a] == i
                after = mech.run_ordinal(opp[:i] + (rep2,) + opp[i:]).owner[a] == i
                if after and not before:
                    bad.append((rep, rep2, opp))
    return bad


def expected_utility(mech: MechanismId, i: int, report: OrdinalReport, true_values: Sequence[Fraction], n: int) -> Fraction:
    q = interim_allocation(mech, i, report, n, len(true_values)).q
    return sum((qj * vj for qj, vj in zip(q, true_values)), Fraction(0))


def bic_audit_exact(mech: MechanismId, i: int, true_values: Sequence, n: int, m: Optional[int] = None, cap: int = DEFAULT_INTERIM_CAP) -> BicAuditResult:
    """Exact BIC check of agent ``i`` against every ordinal deviation."""
    _require_ordinal(mech)
    v = tuple(Fraction(x) for x in true_values)
    m = len(v) if m is None else m
    if len(v) != m:
        raise InvalidInstance("true_values length differs from m")
    check_cap("BIC enumeration", math.factorial(m) ** n * (m + 1), cap)
    truth = preference_order(v)
    truthful = expected_utility(mech, i, truth, v, n)
    best_rep, best = truth, truthful
    for rep in all_reports(m):
        eu = expected_utility(mech, i, rep, v, n)
        if eu > best:
            best_rep, best = rep, eu
    return BicAuditResult(truth, truthful, best_rep, best, truthful >= best)


@dataclass(frozen=True)
class DsicViolation:
    profile: ValuationProfile
    agent: int
    deviation: tuple[Fraction, ...]
    truthful_utility: Fraction
    deviation_utility: Fraction


def dsic_audit_grid(
    mech: MechanismId, grid: Iterable, n: int, m: int, cap: int = 10**6, first_only: bool = False
) -> list[DsicViolation]:
    """Every unilateral profitable misreport with all values drawn from ``grid``."""
    grid = sorted({Fraction(g) for g in grid})
    rows = list(itertools.product(grid, repeat=m))
    check_cap("grid profiles", len(rows) ** n, cap)
    table: dict[tuple, Allocation] = {}
    for prof in itertools.product(rows, repeat=n):
        table[prof] = mech.run(ValuationProfile(prof))
    violations = []
    for prof, alloc in table.items():
        for i in range(n):
            v = prof[i]
            honest = sum((v[j] for j, o in enumerate(alloc.owner) if o == i), Fraction(0))
            for dev in rows:
                if dev == v:
                    continue
                other = table[prof[:i] + (dev,) + prof[i + 1 :]]
                gain = sum((v[j] for j, o in enumerate(other.owner) if o == i), Fraction(0))
                if gain > honest:
                    violations.append(DsicViolation(ValuationProfile(prof), i, dev, honest, gain))
                    if first_only:
                        return violations
    return violations


__all__ = [
    "BicAuditResult",
    "CapExceeded",
    "DsicViolation",
    "InterimTable",
    "PositionalInterim",
    "PositionalStructureError",
    "all_reports",
    "bic_audit_exact",
    "check_monotone",
    "dsic_audit_grid",
    "elementary_monotonicity_violations",
    "expected_utility",
    "interim_allocation",
    "positional_interim",
]
