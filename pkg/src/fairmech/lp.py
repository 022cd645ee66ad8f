"""Tiny exact linear programming over ``Fraction``.

Solves ``max c.x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0``. Meant for
the handful-of-variables programs the auditors build; there is no attempt at
sparsity or numerical cleverness.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

Matrix = Sequence[Sequence[Fraction]]


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: Optional[Fraction] = None
    x: Optional[list[Fraction]] = None


def _standard_form(c, A_eq, b_eq, A_ub, b_ub):
    """Rows of [A | slack] with b >= 0, plus the extended cost vector."""
    n = len(c)
    A_eq = [list(map(Fraction, r)) for r in (A_eq or [])]
    A_ub = [list(map(Fraction, r)) for r in (A_ub or [])]
    b_eq = list(map(Fraction, b_eq or []))
    b_ub = list(map(Fraction, b_ub or []))
    k = len(A_ub)
    rows, rhs = [], []
    for r, b in zip(A_eq, b_eq):
        rows.append(r + [Fraction(0)] * k)
        rhs.append(b)
    for s, (r, b) in enumerate(zip(A_ub, b_ub)):
        slack = [Fraction(0)] * k
        slack[s] = Fraction(1)
        rows.append(r + slack)
        rhs.append(b)
    for i in range(len(rows)):
        if rhs[i] < 0:
            rows[i] = [-a for a in rows[i]]
            rhs[i] = -rhs[i]
    cost = [Fraction(x) for x in c] + [Fraction(0)] * k
    return rows, rhs, cost, n


def _pivot(T, basis, r, col):
    piv = T[r][col]
    T[r] = [a / piv for a in T[r]]
    for i in range(len(T)):
        if i != r and T[i][col] != 0:
            f = T[i][col]
            Tr = T[r]
            T[i] = [a - f * b for a, b in zip(T[i], Tr)]
    basis[r] = col


def _run(T, basis, cost, allowed) -> str:
    """Bland's rule primal simplex on a canonical tableau (last column is RHS)."""
    while True:
        entering = None
        for j in allowed:
            if j in basis:
                continue
            rc = cost[j] - sum(cost[basis[i]] * T[i][j] for i in range(len(T)))
            if rc > 0:
                entering = j
                break
        if entering is None:
            return "optimal"
        leave, best = None, None
        for i, row in enumerate(T):
            if row[entering] > 0:
                ratio = row[-1] / row[entering]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:
            return "unbounded"
        _pivot(T, basis, leave, entering)


def simplex(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None) -> LPResult:
    rows, rhs, cost, n = _standard_form(c, A_eq, b_eq, A_ub, b_ub)
    width = len(cost)
    R = len(rows)
    if R == 0:
        if any(x > 0 for x in cost):
            return LPResult("unbounded")
        return LPResult("optimal", Fraction(0), [Fraction(0)] * n)
    # phase 1: one artificial per row
    T = []
    for i, (r, b) in enumerate(zip(rows, rhs)):
        art = [Fraction(0)] * R
        art[i] = Fraction(1)
        T.append(r + art + [b])
    basis = list(range(width, width + R))
    phase1_cost = [Fraction(0)] * width + [Fraction(-1)] * R
    _run(T, basis, phase1_cost, range(width + R))
    if sum(T[i][-1] for i in range(R) if basis[i] >= width) != 0:
        return LPResult("infeasible")
    # drive zero-valued artificials out of the basis, dropping redundant rows
    keep = []
    for i in range(R):
        if basis[i] >= width:
            col = next((j for j in range(width) if T[i][j] != 0), None)
            if col is None:
                continue
            _pivot(T, basis, i, col)
        keep.append(i)
    T = [T[i][:width] + [T[i][-1]] for i in keep]
    basis = [basis[i] for i in keep]
    status = _run(T, basis, cost, range(width))
    if status == "unbounded":
        return LPResult("unbounded")
    x = [Fraction(0)] * width
    for i, b in enumerate(basis):
        x[b] = T[i][-1]
    value = sum(ci * xi for ci, xi in zip(cost, x))
    return LPResult("optimal", value, x[:n])


def _solve_square(M: list[list[Fraction]], b: list[Fraction]) -> Optional[list[Fraction]]:
    k = len(M)
    A = [row[:] + [bb] for row, bb in zip(M, b)]
    for col in range(k):
        piv = next((r for r in range(col, k) if A[r][col] != 0), None)
        if piv is None:
            return None
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        A[col] = [a / p for a in A[col]]
        for r in range(k):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [a - f * c for a, c in zip(A[r], A[col])]
    return [A[r][-1] for r in range(k)]


def _independent_rows(rows, rhs):
    """Drop linearly dependent equality rows (keeps a consistent subsystem)."""
    basis_rows, kept = [], []
    for r, b in zip(rows, rhs):
        v = r[:] + [b]
        for piv_col, br in basis_rows:
            if v[piv_col] != 0:
                f = v[piv_col] / br[piv_col]
                v = [a - f * c for a, c in zip(v, br)]
        piv_col = next((j for j in range(len(r)) if v[j] != 0), None)
        if piv_col is None:
            if v[-1] != 0:
                return None
            continue
        basis_rows.append((piv_col, v))
        kept.append((r, b))
    return [r for r, _ in kept], [b for _, b in kept]


def vertex_maximize(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None) -> LPResult:
    """Maximize by enumerating every basic feasible solution.

    Exponential; only for bounded programs with a dozen or so variables. Kept as
    an independent route to cross-check :func:`simplex`.
    """
    rows, rhs, cost, n = _standard_form(c, A_eq, b_eq, A_ub, b_ub)
    reduced = _independent_rows(rows, rhs)
    if reduced is None:
        return LPResult("infeasible")
    rows, rhs = reduced
    R, width = len(rows), len(cost)
    best: Optional[LPResult] = None
    for cols in itertools.combinations(range(width), R):
        M = [[row[j] for j in cols] for row in rows]
        xb = _solve_square(M, rhs)
        if xb is None or any(v < 0 for v in xb):
            continue
        x = [Fraction(0)] * width
        for j, v in zip(cols, xb):
            x[j] = v
        value = sum(ci * xi for ci, xi in zip(cost, x))
        if best is None or value > best.value:
            best = LPResult("optimal", value, x[:n])
    return best or LPResult("infeasible")
