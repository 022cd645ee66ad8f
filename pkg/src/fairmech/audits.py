"""Fairness and efficiency predicates, each returning a checkable witness."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Optional, Sequence

from . import lp
from .core import (
    DEFAULT_ENUM_CAP,
    Allocation,
    InvalidInstance,
    ValuationProfile,
    enumerate_allocations,
    preference_order,
    utilities,
    utility,
)
from .mechanisms import WelfareFn, compare_welfare


class DominanceMode(enum.Enum):
    SD = "sd"
    SD_PLUS = "sd-plus"


class Dominance(enum.Enum):
    STRICT = "strict"
    WEAK = "weak"  # equal prefix sums over the relevant ranks
    INCOMPARABLE = "incomparable"  # a does not weakly dominate b


class Criterion(enum.Enum):
    PARETO = "pareto"
    SD = "sd"
    SD_PLUS = "sd-plus"


@dataclass(frozen=True)
class FractionalAllocation:
    shares: tuple[tuple[Fraction, ...], ...]  # shares[i][j] = fraction of item j held by agent i
    utilities: tuple[Fraction, ...]


@dataclass(frozen=True)
class AuditReport:
    predicate: str
    verdict: bool
    witness: Any = None

    def to_dict(self) -> dict:
        return {"predicate": self.predicate, "verdict": self.verdict, "witness": _external(self.witness)}


def _external(w):
    from .core import format_rational

    if w is None:
        return None
    if isinstance(w, Allocation):
        return {"owner": w.external(), "bundles": w.external_bundles()}
    if isinstance(w, FractionalAllocation):
        return {
            "shares": [[format_rational(x) for x in row] for row in w.shares],
            "utilities": [format_rational(x) for x in w.utilities],
        }
    if isinstance(w, tuple):
        return [a + 1 for a in w]
    if isinstance(w, int):
        return w + 1
    return w


def _relevant_length(v: Sequence[Fraction], mode: DominanceMode) -> int:
    return len(v) if mode is DominanceMode.SD else sum(1 for x in v if x > 0)


def dominates(v: Sequence[Fraction], a, b, mode: DominanceMode) -> Dominance:
    """Compare bundles ``a`` and ``b`` by prefix counts along the agent's ranking."""
    rep = preference_order(v)
    a, b = set(a), set(b)
    ca = cb = 0
    strict = False
    for j in rep.order[: _relevant_length(v, mode)]:
        ca += j in a
        cb += j in b
        if ca < cb:
            return Dominance.INCOMPARABLE
        if ca > cb:
            strict = True
    return Dominance.STRICT if strict else Dominance.WEAK


# --- envy ------------------------------------------------------------------


def is_envy_free(profile: ValuationProfile, alloc: Allocation) -> AuditReport:
    bundles = alloc.bundles()
    for i in range(profile.n):
        v = profile.row(i)
        own = utility(v, bundles[i])
        for j in range(profile.n):
            if j != i and utility(v, bundles[j]) > own:
                return AuditReport("ef", False, (i, j))
    return AuditReport("ef", True)


def is_ef1(profile: ValuationProfile, alloc: Allocation) -> AuditReport:
    bundles = alloc.bundles()
    for i in range(profile.n):
        v = profile.row(i)
        own = utility(v, bundles[i])
        for j in range(profile.n):
            if j == i or not bundles[j]:
                continue
            # removing i's favourite item of X_j is the best single removal
            if utility(v, bundles[j]) - max(v[g] for g in bundles[j]) > own:
                return AuditReport("ef1", False, (i, j))
    return AuditReport("ef1", True)


# --- efficiency ------------------------------------------------------------


def _dominating(profile, x_bundles, x_util, y: Allocation, criterion: Criterion) -> bool:
    if criterion is Criterion.PARETO:
        yu = utilities(profile, y)
        return all(a >= b for a, b in zip(yu, x_util)) and yu != x_util
    mode = DominanceMode.SD if criterion is Criterion.SD else DominanceMode.SD_PLUS
    y_bundles = y.bundles()
    strict = False
    for i in range(profile.n):
        d = dominates(profile.row(i), y_bundles[i], x_bundles[i], mode)
        if d is Dominance.INCOMPARABLE:
            return False
        strict |= d is Dominance.STRICT
    return strict


def _brute_force_witness(profile, alloc, criterion, cap) -> Optional[Allocation]:
    x_bundles = alloc.bundles()
    x_util = utilities(profile, alloc)
    for owner in enumerate_allocations(profile.n, profile.m, cap):
        if owner == alloc.owner:
            continue
        y = Allocation(owner, profile.n)
        if _dominating(profile, x_bundles, x_util, y, criterion):
            return y
    return None


def _matching_witness(profile: ValuationProfile, alloc: Allocation, criterion: Criterion) -> Optional[Allocation]:
    """Decide SD / SD+ domination via bipartite matching.

    y weakly dominates x for agent k exactly when every relevant item of x_k can
    be injected into a weakly better-ranked relevant item of y_k. y strictly
    dominates for agent i iff in addition y_i holds some relevant item g not in
    x_i. So x is dominated iff for some (i, g) all injection requirements can be
    matched to distinct items while g is reserved for agent i.
    """
    n, m = profile.n, profile.m
    mode = DominanceMode.SD if criterion is Criterion.SD else DominanceMode.SD_PLUS
    reps = profile.reports()
    lengths = [_relevant_length(profile.row(k), mode) for k in range(n)]
    ranks = [r.ranks() for r in reps]
    requirements = []  # (agent, items acceptable)
    for j, k in enumerate(alloc.owner):
        r = ranks[k][j]
        if r < lengths[k]:
            requirements.append((k, reps[k].order[: r + 1]))

    def match(reserved_item: int, reserved_for: int) -> Optional[list[int]]:
        item_to_req = [-1] * m

        def augment(q: int, seen: list[bool]) -> bool:
            agent, acceptable = requirements[q]
            for j in acceptable:
                if seen[j] or (j == reserved_item and agent != reserved_for):
                    continue
                seen[j] = True
                if item_to_req[j] == -1 or augment(item_to_req[j], seen):
                    item_to_req[j] = q
                    return True
            return False

        for q in range(len(requirements)):
            if not augment(q, [False] * m):
                return None
        return item_to_req

    for i in range(n):
        for g in reps[i].order[: lengths[i]]:
            if alloc.owner[g] == i:
                continue
            item_to_req = match(g, i)
            if item_to_req is None:
                continue
            owner = list(alloc.owner)
            for j in range(m):
                if item_to_req[j] != -1:
                    owner[j] = requirements[item_to_req[j]][0]
            owner[g] = i
            return Allocation(tuple(owner), n)
    return None


def is_efficient(
    profile: ValuationProfile,
    alloc: Allocation,
    criterion: Criterion = Criterion.PARETO,
    cap: int = DEFAULT_ENUM_CAP,
    method: str = "auto",
) -> AuditReport:
    """Efficiency under Pareto, SD or SD+ dominance.

    ``method="brute"`` scans all n^m allocations in ascending owner-vector order
    and returns the first dominating one. ``"matching"`` (SD / SD+ only) decides
    the question in polynomial time. ``"auto"`` uses matching for SD / SD+ and
    brute force for Pareto.
    """
    criterion = Criterion(criterion)
    if method == "auto":
        method = "brute" if criterion is Criterion.PARETO else "matching"
    if method == "matching":
        if criterion is Criterion.PARETO:
            raise InvalidInstance("matching method decides SD / SD+ only")
        witness = _matching_witness(profile, alloc, criterion)
    elif method == "brute":
        witness = _brute_force_witness(profile, alloc, criterion, cap)
    else:
        raise InvalidInstance(f"unknown method {method!r}")
    return AuditReport(criterion.value, witness is None, witness)


def is_fpo(profile: ValuationProfile, alloc: Allocation, method: str = "simplex") -> AuditReport:
    """Fractional Pareto optimality via an exact LP.

    Maximize total utility over fractional allocations that keep every agent at
    least as well off as under ``alloc``; ``alloc`` is fPO iff the optimum equals
    its own total.
    """
    n, m = profile.n, profile.m
    base = utilities(profile, alloc)
    c = [profile.values[i][j] for i in range(n) for j in range(m)]
    A_eq = [[Fraction(int(k % m == j)) for k in range(n * m)] for j in range(m)]
    b_eq = [Fraction(1)] * m
    A_ub, b_ub = [], []
    for i in range(n):
        row = [Fraction(0)] * (n * m)
        for j in range(m):
            row[i * m + j] = -profile.values[i][j]
        A_ub.append(row)
        b_ub.append(-base[i])
    solve = {"simplex": lp.simplex, "vertices": lp.vertex_maximize}[method]
    res = solve(c, A_eq, b_eq, A_ub, b_ub)
    if res.status != "optimal":  # alloc itself is feasible, so this cannot happen
        raise RuntimeError(f"fPO program returned {res.status}")
    if res.value > sum(base):
        shares = tuple(tuple(res.x[i * m + j] for j in range(m)) for i in range(n))
        u = tuple(sum(shares[i][j] * profile.values[i][j] for j in range(m)) for i in range(n))
        return AuditReport("fpo", False, FractionalAllocation(shares, u))
    return AuditReport("fpo", True)


def fractional_dominates(profile: ValuationProfile, shares, alloc: Allocation) -> bool:
    """Check that a fractional allocation is feasible and Pareto dominates ``alloc``."""
    n, m = profile.n, profile.m
    for j in range(m):
        if sum(shares[i][j] for i in range(n)) != 1 or any(shares[i][j] < 0 for i in range(n)):
            return False
    u = [sum(Fraction(shares[i][j]) * profile.values[i][j] for j in range(m)) for i in range(n)]
    base = utilities(profile, alloc)
    return all(a >= b for a, b in zip(u, base)) and any(a > b for a, b in zip(u, base))


def is_fulfilling(profile: ValuationProfile, alloc: Allocation) -> AuditReport:
    bundles = alloc.bundles()
    for i in range(profile.n):
        v = profile.row(i)
        if sum(1 for x in v if x > 0) >= profile.n and utility(v, bundles[i]) == 0:
            return AuditReport("fulfilling", False, i)
    return AuditReport("fulfilling", True)


def pigou_dalton_pair(x: Sequence[Fraction], y: Sequence[Fraction]) -> Optional[tuple[int, int]]:
    """Return (i, j) if ``y`` arises from ``x`` by a Pigou-Dalton transfer from i to j."""
    if len(x) != len(y):
        return None
    n = len(x)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if any(x[k] != y[k] for k in range(n) if k not in (i, j)):
                continue
            if x[i] + x[j] == y[i] + y[j] and x[i] > x[j] and x[i] > y[i] > x[j]:
                return (i, j)
    return None


def pdp_holds(w: WelfareFn, x: Sequence, y: Sequence) -> bool:
    """True iff the transfer taking ``x`` to ``y`` does not lower welfare."""
    x = [Fraction(a) for a in x]
    y = [Fraction(a) for a in y]
    if pigou_dalton_pair(x, y) is None:
        raise InvalidInstance(f"{x} and {y} are not related by a Pigou-Dalton transfer")
    return compare_welfare(w, x, y) <= 0
