"""Search for DSIC, efficient, non-dictatorial mechanisms on a ternary value grid.

A deterministic two-agent mechanism on the grid {0, x, y}^m is a table from
profiles to allocations. For m = 1 all 2^9 tables are enumerated. For m = 2
there are 4^81 tables, so the search looks for a counterexample directly:
a table satisfying DSIC and the efficiency filter that differs from both serial
dictatorships on some positively valued item. Domains are pruned by
maintaining arc consistency on the pairwise DSIC constraints.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .audits import Criterion, is_efficient
from .core import Allocation, InvalidInstance, ValuationProfile, enumerate_allocations
from .mechanisms import serial_dictatorship

DEFAULT_NODE_BUDGET = 10**7


@dataclass
class CharacterizationResult:
    status: str  # "verified" | "counterexample" | "inconclusive"
    m: int
    efficiency: str
    nodes: int = 0
    survivors: Optional[int] = None  # exhaustive mode only
    counterexample: Optional[dict] = None  # profile rows -> Allocation
    notes: list[str] = field(default_factory=list)

    @property
    def verified(self) -> bool:
        return self.status == "verified"


class _Problem:
    """Profiles, filtered domains and compatibility tables for one grid."""

    def __init__(self, m: int, grid: tuple[Fraction, ...], criterion: Criterion):
        self.m = m
        rows = list(itertools.product(grid, repeat=m))
        self.rows = rows
        self.profiles = list(itertools.product(range(len(rows)), repeat=2))
        self.index = {p: k for k, p in enumerate(self.profiles)}
        self.allocs = list(enumerate_allocations(2, m))
        P, A = len(self.profiles), len(self.allocs)
        self.vp = [ValuationProfile((rows[a], rows[b])) for a, b in self.profiles]

        self.domain0 = []
        for prof in self.vp:
            mask = 0
            for k, owner in enumerate(self.allocs):
                if is_efficient(prof, Allocation(owner, 2), criterion).verdict:
                    mask |= 1 << k
            self.domain0.append(mask)

        # utility[p][i][a] of agent i at profile p under allocation a
        self.util = [
            [[sum((prof.values[i][j] for j, o in enumerate(own) if o == i), Fraction(0)) for own in self.allocs] for i in range(2)]
            for prof in self.vp
        ]

        # compat[p][q][a] = mask of allocations at q consistent with a at p
        self.neighbors: list[list[int]] = [[] for _ in range(P)]
        self.compat: dict[tuple[int, int], list[int]] = {}
        for p, (r1, r2) in enumerate(self.profiles):
            for i in range(2):
                for dev in range(len(rows)):
                    own = (r1, r2)[i]
                    if dev == own:
                        continue
                    q = self.index[(dev, r2) if i == 0 else (r1, dev)]
                    table = []
                    for a in range(A):
                        mask = 0
                        for b in range(A):
                            if self.util[p][i][a] >= self.util[p][i][b] and self.util[q][i][b] >= self.util[q][i][a]:
                                mask |= 1 << b
                        table.append(mask)
                    self.compat[(p, q)] = table
                    self.neighbors[p].append(q)

        # allocations at p that disagree with each dictatorship on a positively valued item
        self.differs = []
        for order in ((0, 1), (1, 0)):
            masks = []
            for prof in self.vp:
                sd = serial_dictatorship(prof, order).owner
                relevant = [j for j in range(m) if prof.values[0][j] > 0 or prof.values[1][j] > 0]
                mask = 0
                for k, owner in enumerate(self.allocs):
                    if any(owner[j] != sd[j] for j in relevant):
                        mask |= 1 << k
                masks.append(mask)
            self.differs.append(masks)

    def table_ok(self, table: list[int]) -> bool:
        """Independent re-check of DSIC and the efficiency filter for a full table."""
        for p, a in enumerate(table):
            if not (self.domain0[p] >> a) & 1:
                return False
            for q in self.neighbors[p]:
                i = 0 if self.profiles[p][1] == self.profiles[q][1] else 1
                if self.util[p][i][table[q]] > self.util[p][i][a]:
                    return False
        return True

    def is_dictatorial(self, table: list[int]) -> bool:
        return any(all(not (d[p] >> a) & 1 for p, a in enumerate(table)) for d in self.differs)


def _bits(mask: int):
    k = 0
    while mask:
        if mask & 1:
            yield k
        mask >>= 1
        k += 1


def _propagate(prob: _Problem, dom: list[int], queue: list[int]) -> bool:
    """AC-3 over the DSIC constraints plus the two existence constraints."""
    while True:
        while queue:
            p = queue.pop()
            for q in prob.neighbors[p]:
                table = prob.compat[(p, q)]
                support = 0
                for a in _bits(dom[p]):
                    support |= table[a]
                new = dom[q] & support
                if new != dom[q]:
                    if not new:
                        return False
                    dom[q] = new
                    queue.append(q)
        changed = False
        for d in prob.differs:
            live = [p for p in range(len(dom)) if dom[p] & d[p]]
            if not live:
                return False
            if len(live) == 1:
                p = live[0]
                new = dom[p] & d[p]
                if new != dom[p]:
                    dom[p] = new
                    queue.append(p)
                    changed = True
        if not changed:
            return True


def _search(prob: _Problem, budget: int):
    dom = list(prob.domain0)
    if not all(dom):
        return None, 0, False
    if not _propagate(prob, dom, list(range(len(dom)))):
        return None, 0, False
    nodes = 0

    def choose(dom):
        best, best_size = None, 99
        for p, mask in enumerate(dom):
            size = bin(mask).count("1")
            if 1 < size < best_size:
                best, best_size = p, size
        return best

    def frame(dom):
        var = choose(dom)
        return dom, var, ([] if var is None else list(_bits(dom[var])))

    # iterative DFS; each frame holds an arc-consistent domain vector
    frames = [frame(dom)]
    while frames:
        dom, var, values = frames[-1]
        if var is None:
            return [next(_bits(m)) for m in dom], nodes, False
        if not values:
            frames.pop()
            continue
        a = values.pop(0)
        nodes += 1
        if nodes > budget:
            return None, nodes, True
        child = list(dom)
        child[var] = 1 << a
        if _propagate(prob, child, [var]):
            frames.append(frame(child))
    return None, nodes, False


def _enumerate_m1(prob: _Problem) -> tuple[int, Optional[list[int]], int]:
    survivors, witness, count = 0, None, 0
    P = len(prob.profiles)
    for table in itertools.product(range(len(prob.allocs)), repeat=P):
        count += 1
        table = list(table)
        if not prob.table_ok(table):
            continue
        survivors += 1
        if witness is None and not prob.is_dictatorial(table):
            witness = table
    return survivors, witness, count


def characterization_search(
    m: int,
    x=1,
    y=2,
    efficiency: str | Criterion = Criterion.SD_PLUS,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> CharacterizationResult:
    """Look for a DSIC, efficient mechanism that is not a serial dictatorship.

    ``m = 1`` enumerates every table and records the survivor count; ``m = 2``
    runs the constraint search. Two agents throughout.
    """
    x, y = Fraction(x), Fraction(y)
    if not 0 < x < y:
        raise InvalidInstance("need 0 < x < y")
    if m not in (1, 2):
        raise InvalidInstance("search supports m in {1, 2}")
    criterion = Criterion(efficiency)
    prob = _Problem(m, (Fraction(0), x, y), criterion)
    res = CharacterizationResult("verified", m, criterion.value)
    if m == 1:
        survivors, witness, count = _enumerate_m1(prob)
        res.survivors, res.nodes = survivors, count
    else:
        witness, res.nodes, exhausted = _search(prob, node_budget)
        if exhausted:
            res.status = "inconclusive"
            res.notes.append(f"node budget {node_budget} exhausted")
            return res
    if witness is not None:
        if not prob.table_ok(witness) or prob.is_dictatorial(witness):
            raise AssertionError("search returned an invalid counterexample")
        res.status = "counterexample"
        res.counterexample = {
            tuple(prob.vp[p].values): Allocation(prob.allocs[a], 2) for p, a in enumerate(witness)
        }
    return res
