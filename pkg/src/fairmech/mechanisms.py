"""Deterministic allocation mechanisms for indivisible goods."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import mpmath

from .core import (
    DEFAULT_ENUM_CAP,
    Allocation,
    InvalidInstance,
    OrdinalReport,
    ValuationProfile,
    enumerate_allocations,
    format_rational,
    preference_order,
    to_rational,
)

# --- welfare functions ------------------------------------------------------


@dataclass(frozen=True)
class WelfareFn:
    kind: str  # "p_mean" | "nash" | "egalitarian" | "utilitarian"
    p: Optional[Fraction] = None

    def __post_init__(self):
        if self.kind not in ("p_mean", "nash", "egalitarian", "utilitarian"):
            raise InvalidInstance(f"unknown welfare kind {self.kind!r}")
        if (self.kind == "p_mean") != (self.p is not None):
            raise InvalidInstance("p is required exactly for p_mean")

    @classmethod
    def p_mean(cls, p) -> "WelfareFn":
        return cls("p_mean", to_rational(p))

    @classmethod
    def parse(cls, text: str) -> "WelfareFn":
        """``nash``, ``egalitarian``, ``utilitarian`` or ``p=<rat>``."""
        if text.startswith("p="):
            return cls.p_mean(text[2:])
        return cls(text)

    @property
    def pdp_compliant(self) -> bool:
        return self.kind != "p_mean" or self.p <= 1

    def label(self) -> str:
        return f"p={format_rational(self.p)}" if self.kind == "p_mean" else self.kind

    def normalized(self) -> "WelfareFn":
        # p_mean limits collapse onto the named members
        if self.kind == "p_mean":
            if self.p == 0:
                return WelfareFn("nash")
            if self.p == 1:
                return WelfareFn("utilitarian")
        return self


def welfare_value(w: WelfareFn, u: Sequence[Fraction]):
    """Welfare of utility vector ``u``.

    Exact ``Fraction`` when the value is rational; otherwise a float. Use
    :func:`compare_welfare` for decisions, never the float.
    """
    n = len(u)
    if w.kind == "utilitarian":
        return sum(u, Fraction(0))
    if w.kind == "egalitarian":
        return min(u)
    if w.kind == "nash":
        prod = math.prod(u, start=Fraction(1))
        if prod == 0:
            return Fraction(0)
        return float(prod) ** (1.0 / n)
    p = w.p
    if p < 0 and any(x == 0 for x in u):
        return Fraction(0)
    if p == 0:
        return welfare_value(WelfareFn("nash"), u)
    if p.denominator == 1:
        mean = sum((x**p.numerator for x in u), Fraction(0)) / n
        if p == 1:
            return mean
        if p == -1:
            return 1 / mean
        return float(mean) ** (1.0 / float(p))
    return float(sum(float(x) ** float(p) for x in u) / n) ** (1.0 / float(p))


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def _compare_power_sums(u: Sequence[Fraction], v: Sequence[Fraction], p: Fraction) -> int:
    """Sign of sum(u^p) - sum(v^p) for non-integer rational p, certified."""
    terms = len(u) + len(v)
    prec = 128
    while prec <= 8192:
        with mpmath.workprec(prec):
            mp_p = mpmath.mpf(p.numerator) / p.denominator

            def pw(x: Fraction):
                if x == 0:
                    return mpmath.mpf(0)
                return mpmath.power(mpmath.mpf(x.numerator) / x.denominator, mp_p)

            a = [pw(x) for x in u]
            b = [pw(x) for x in v]
            diff = mpmath.fsum(a) - mpmath.fsum(b)
            scale = max([abs(t) for t in a + b] + [mpmath.mpf(1)])
            bound = terms * scale * mpmath.ldexp(1, -(prec - 16))
            if abs(diff) > bound:
                return 1 if diff > 0 else -1
        prec *= 2
    return 0


def compare_welfare(w: WelfareFn, u: Sequence[Fraction], v: Sequence[Fraction]) -> int:
    """Exact three-way comparison of w(u) and w(v): returns -1, 0 or 1."""
    w = w.normalized()
    if w.kind == "utilitarian":
        return _sign(sum(u) - sum(v))
    if w.kind == "egalitarian":
        return _sign(min(u) - min(v))
    if w.kind == "nash":
        return _sign(math.prod(u, start=Fraction(1)) - math.prod(v, start=Fraction(1)))
    p = w.p
    if p < 0:
        zu, zv = any(x == 0 for x in u), any(x == 0 for x in v)
        if zu or zv:
            return _sign(int(zv) - int(zu)) if zu != zv else 0
    if p.denominator == 1:
        k = p.numerator
        s = _sign(sum(x**k for x in u) - sum(x**k for x in v))
    else:
        s = _compare_power_sums(u, v, p)
    # welfare is increasing in sum(x^p) for p > 0 and decreasing for p < 0
    return s if p > 0 else -s


# --- mechanism handles ------------------------------------------------------


@dataclass(frozen=True)
class MechanismId:
    kind: str  # "rr_pass" | "serial_dictatorship" | "welfare_max" | "pass_least_favorite"
    order: Optional[tuple[int, ...]] = None
    welfare: Optional[WelfareFn] = None

    def __post_init__(self):
        if self.kind == "serial_dictatorship":
            if self.order is None or sorted(self.order) != list(range(len(self.order))):
                raise InvalidInstance(f"dictatorship order must be a permutation: {self.order}")
        elif self.kind == "welfare_max":
            if self.welfare is None:
                raise InvalidInstance("welfare_max needs a welfare function")
        elif self.kind not in ("rr_pass", "pass_least_favorite"):
            raise InvalidInstance(f"unknown mechanism {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "MechanismId":
        """CLI syntax: ``rr-pass``, ``sd:2,1``, ``welfare:nash``, ``welfare:p=1/2``, ``plf``."""
        head, _, arg = text.partition(":")
        if head == "rr-pass":
            return cls("rr_pass")
        if head in ("plf", "pass-least-favorite"):
            return cls("pass_least_favorite")
        if head == "sd":
            try:
                order = tuple(int(t) - 1 for t in arg.split(","))
            except ValueError as exc:
                raise InvalidInstance(f"bad dictatorship order {arg!r}") from exc
            return cls("serial_dictatorship", order=order)
        if head == "welfare":
            return cls("welfare_max", welfare=WelfareFn.parse(arg))
        raise InvalidInstance(f"unknown mechanism {text!r}")

    @property
    def is_ordinal(self) -> bool:
        return self.kind != "welfare_max"

    def label(self) -> str:
        if self.kind == "serial_dictatorship":
            return "sd:" + ",".join(str(a + 1) for a in self.order)
        if self.kind == "welfare_max":
            return "welfare:" + self.welfare.label()
        return {"rr_pass": "rr-pass", "pass_least_favorite": "plf"}[self.kind]

    def run(self, profile: ValuationProfile, cap: int = DEFAULT_ENUM_CAP) -> Allocation:
        if self.kind == "welfare_max":
            return welfare_max(profile, self.welfare, cap)
        return self.run_ordinal(profile.reports())

    def run_ordinal(self, reports: Sequence[OrdinalReport]) -> Allocation:
        if self.kind == "rr_pass":
            return rr_pass(reports)
        if self.kind == "serial_dictatorship":
            return _serial_dictatorship(
                [set(r.positive_items) for r in reports], self.order, reports[0].m
            )
        if self.kind == "pass_least_favorite":
            if len(reports) != 2:
                raise InvalidInstance("pass_least_favorite needs exactly 2 agents")
            return _pass_least_favorite(reports[0].order[-1], reports[0].m)
        raise InvalidInstance(f"{self.label()} is not an ordinal mechanism")


# --- the mechanisms ---------------------------------------------------------


def rr_pass(reports: Sequence[OrdinalReport]) -> Allocation:
    """Round robin where agents pass once their positively valued items are gone.

    Items nobody values positively are handed out afterwards, round robin by
    agent index starting from the first agent, in increasing item order.
    """
    n = len(reports)
    m = reports[0].m
    owner = [-1] * m
    cursor = [0] * n  # next position to inspect in each agent's order
    remaining_positive = set()
    for r in reports:
        remaining_positive.update(r.positive_items)
    while remaining_positive:
        for i, rep in enumerate(reports):
            k = cursor[i]
            while k < rep.positive_count and owner[rep.order[k]] != -1:
                k += 1
            cursor[i] = k
            if k < rep.positive_count:
                j = rep.order[k]
                owner[j] = i
                remaining_positive.discard(j)
                cursor[i] = k + 1
    turn = 0
    for j in range(m):
        if owner[j] == -1:
            owner[j] = turn % n
            turn += 1
    return Allocation(tuple(owner), n)


def _serial_dictatorship(positive: Sequence[set], order: Sequence[int], m: int) -> Allocation:
    if len(order) != len(positive):
        raise InvalidInstance("dictatorship order length differs from agent count")
    owner = [-1] * m
    for agent in order:
        for j in positive[agent]:
            if owner[j] == -1:
                owner[j] = agent
    last = order[-1]
    return Allocation(tuple(last if o == -1 else o for o in owner), len(order))


def serial_dictatorship(profile: ValuationProfile, order: Sequence[int]) -> Allocation:
    """Each agent in ``order`` takes every remaining item she values positively.

    Items valued zero by everyone go to the last agent in ``order``.
    """
    positive = [{j for j, v in enumerate(row) if v > 0} for row in profile.values]
    return _serial_dictatorship(positive, tuple(order), profile.m)


def welfare_max(
    profile: ValuationProfile, w: WelfareFn, cap: int = DEFAULT_ENUM_CAP
) -> Allocation:
    """Exhaustive welfare maximizer; ties go to the lexicographically smallest owner vector."""
    n, m = profile.n, profile.m
    vals = profile.values
    best = None
    best_u = None
    for owner in enumerate_allocations(n, m, cap):
        u = [Fraction(0)] * n
        for j, o in enumerate(owner):
            u[o] += vals[o][j]
        if best is None or compare_welfare(w, u, best_u) > 0:
            best, best_u = owner, u
    return Allocation(tuple(best), n)


def _pass_least_favorite(least: int, m: int) -> Allocation:
    return Allocation(tuple(1 if j == least else 0 for j in range(m)), 2)


def pass_least_favorite(profile: ValuationProfile) -> Allocation:
    """Agent 2 receives agent 1's least favorite item; agent 1 keeps the rest."""
    if profile.n != 2:
        raise InvalidInstance("pass_least_favorite needs exactly 2 agents")
    return _pass_least_favorite(preference_order(profile.row(0)).order[-1], profile.m)
