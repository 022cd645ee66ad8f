"""Divisible goods on [0, 1] with piecewise-linear densities, all in exact rationals."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .core import InvalidInstance, format_rational

ZERO, ONE = Fraction(0), Fraction(1)


@dataclass(frozen=True)
class Segment:
    """f(t) = a + b*t on [left, right)."""

    left: Fraction
    right: Fraction
    a: Fraction
    b: Fraction

    def at(self, t: Fraction) -> Fraction:
        return self.a + self.b * t

    def integral(self, lo: Fraction, hi: Fraction) -> Fraction:
        return self.a * (hi - lo) + self.b * (hi * hi - lo * lo) / 2


@dataclass(frozen=True)
class PiecewiseDensity:
    segments: tuple[Segment, ...]

    def __post_init__(self):
        segs = self.segments
        if not segs:
            raise InvalidInstance("density has no segments")
        if segs[0].left != 0 or segs[-1].right != 1:
            raise InvalidInstance("segments must cover [0, 1]")
        for s, nxt in zip(segs, segs[1:]):
            if s.right != nxt.left:
                raise InvalidInstance("segments must be contiguous and ordered")
        for s in segs:
            if not s.left < s.right:
                raise InvalidInstance(f"empty segment [{s.left}, {s.right})")
            if s.at(s.left) < 0 or s.at(s.right) < 0:
                raise InvalidInstance("density is negative somewhere")
        if sum(s.integral(s.left, s.right) for s in segs) != 1:
            raise InvalidInstance("unnormalized density")

    @classmethod
    def uniform(cls) -> "PiecewiseDensity":
        return cls((Segment(ZERO, ONE, ONE, ZERO),))

    @classmethod
    def steps(cls, cuts: Sequence, heights: Sequence) -> "PiecewiseDensity":
        """Piecewise-constant density; ``cuts`` are interior breakpoints."""
        edges = [ZERO] + [Fraction(c) for c in cuts] + [ONE]
        return cls(tuple(Segment(l, r, Fraction(h), ZERO) for l, r, h in zip(edges, edges[1:], heights)))

    def integrate(self, lo: Fraction, hi: Fraction) -> Fraction:
        total = ZERO
        for s in self.segments:
            l, r = max(lo, s.left), min(hi, s.right)
            if l < r:
                total += s.integral(l, r)
        return total

    def to_dict(self) -> list[dict]:
        return [{k: format_rational(getattr(s, f)) for k, f in (("l", "left"), ("r", "right"), ("a", "a"), ("b", "b"))} for s in self.segments]


@dataclass(frozen=True)
class PieceSet:
    """Finite union of disjoint half-open intervals, kept sorted and merged."""

    intervals: tuple[tuple[Fraction, Fraction], ...] = ()

    @classmethod
    def of(cls, intervals: Iterable[tuple]) -> "PieceSet":
        ivs = sorted((Fraction(l), Fraction(r)) for l, r in intervals if Fraction(l) < Fraction(r))
        merged: list[list[Fraction]] = []
        for l, r in ivs:
            if merged and l <= merged[-1][1]:
                if l < merged[-1][1]:
                    raise InvalidInstance("overlapping intervals")
                merged[-1][1] = r
            else:
                merged.append([l, r])
        return cls(tuple((l, r) for l, r in merged))

    def union(self, other: "PieceSet") -> "PieceSet":
        return PieceSet.of(self.intervals + other.intervals)

    def minus(self, other: "PieceSet") -> "PieceSet":
        out = []
        for l, r in self.intervals:
            cur = l
            for ol, orr in other.intervals:
                if orr <= cur or ol >= r:
                    continue
                if ol > cur:
                    out.append((cur, ol))
                cur = max(cur, orr)
            if cur < r:
                out.append((cur, r))
        return PieceSet.of(out)

    def external(self) -> list[list[str]]:
        return [[format_rational(l), format_rational(r)] for l, r in self.intervals]


@dataclass(frozen=True)
class CakeAllocation:
    pieces: tuple[PieceSet, ...]

    @property
    def n(self) -> int:
        return len(self.pieces)


def measure(X: PieceSet) -> Fraction:
    return sum((r - l for l, r in X.intervals), ZERO)


def integrate(f: PiecewiseDensity, X: PieceSet) -> Fraction:
    return sum((f.integrate(l, r) for l, r in X.intervals), ZERO)


def _refine(X: PieceSet, f: PiecewiseDensity):
    """Yield (lo, hi, segment) for X cut at every breakpoint of f."""
    for l, r in X.intervals:
        for s in f.segments:
            lo, hi = max(l, s.left), min(r, s.right)
            if lo < hi:
                yield lo, hi, s


def split_equal(X: PieceSet, f: PiecewiseDensity, k: int) -> list[PieceSet]:
    """Partition X into k pieces of equal length and equal f-value.

    On a flat stretch k equal slices suffice. On a sloped stretch the 2k
    slices have values in arithmetic progression, so pairing slice j with
    slice 2k+1-j gives every piece the same total.
    """
    if k < 2:
        raise InvalidInstance("k must be at least 2")
    parts: list[list[tuple]] = [[] for _ in range(k)]
    for lo, hi, seg in _refine(X, f):
        if seg.b == 0:
            w = (hi - lo) / k
            for j in range(k):
                parts[j].append((lo + j * w, lo + (j + 1) * w))
        else:
            w = (hi - lo) / (2 * k)
            for j in range(k):
                parts[j].append((lo + j * w, lo + (j + 1) * w))
                parts[j].append((lo + (2 * k - 1 - j) * w, lo + (2 * k - j) * w))
    return [PieceSet.of(p) for p in parts]


@dataclass(frozen=True)
class AccommodationStep:
    agent: int
    picks: tuple[int, ...]  # picks[j] = crumb index taken from earlier agent j
    pieces: tuple[PieceSet, ...]  # holdings of agents 0..agent after the step


def incremental_accommodation(
    reports: Sequence[PiecewiseDensity], upto: Optional[int] = None
) -> tuple[CakeAllocation, list[AccommodationStep]]:
    """Agents arrive in order; each newcomer takes her favourite crumb from every piece.

    When agent t arrives, each earlier agent's piece is cut by its owner's
    report into t equal crumbs. Ties go to the lowest crumb index. ``upto``
    stops after that many agents have arrived.
    """
    n = len(reports) if upto is None else upto
    pieces = [PieceSet.of([(ZERO, ONE)])]
    trace = [AccommodationStep(0, (), tuple(pieces))]
    for t in range(1, n):
        mine = PieceSet()
        picks = []
        for j in range(t):
            crumbs = split_equal(pieces[j], reports[j], t + 1)
            vals = [integrate(reports[t], c) for c in crumbs]
            best = vals.index(max(vals))
            picks.append(best)
            pieces[j] = pieces[j].minus(crumbs[best])
            mine = mine.union(crumbs[best])
        pieces.append(mine)
        trace.append(AccommodationStep(t, tuple(picks), tuple(pieces)))
    return CakeAllocation(tuple(pieces)), trace


def is_proportional(alloc: CakeAllocation, densities: Sequence[PiecewiseDensity]):
    from .audits import AuditReport

    n = alloc.n
    for i, (X, f) in enumerate(zip(alloc.pieces, densities)):
        if integrate(f, X) * n < 1:
            return AuditReport("proportional", False, i)
    return AuditReport("proportional", True)


def is_partition(pieces: Sequence[PieceSet]) -> bool:
    """Pairwise disjoint with union [0, 1]."""
    everything = PieceSet()
    total = ZERO
    for X in pieces:
        everything = everything.union(X)  # raises on overlap
        total += measure(X)
    return everything.intervals == ((ZERO, ONE),) and total == 1


def expected_share_check(X: PieceSet, f_owner: PiecewiseDensity, f_hat: PiecewiseDensity, t: int) -> tuple[Fraction, Fraction]:
    """Average value of X minus a uniformly chosen crumb, against (t-1)/t of X."""
    if t < 2:
        raise InvalidInstance("t must be at least 2")
    crumbs = split_equal(X, f_owner, t)
    lhs = sum((integrate(f_hat, X.minus(c)) for c in crumbs), ZERO) / t
    rhs = Fraction(t - 1, t) * integrate(f_hat, X)
    return lhs, rhs


@dataclass(frozen=True)
class CakeBicResult:
    agent: int
    truthful: Fraction
    deviations: tuple[Fraction, ...]
    verdict: bool
    enumeration_agrees: Optional[bool]  # None when n > 3


def _enumerated_share(X: PieceSet, f_report: PiecewiseDensity, f_true: PiecewiseDensity, owner: int, t: int, n: int) -> Fraction:
    """Average true value of X once agents t..n-1 have each taken a uniform crumb.

    Newcomer t picks one crumb from each of the t earlier owners, so every
    pick profile in range(t + 1) ** t is enumerated; only the coordinate for
    ``owner`` touches X.
    """
    if t >= n:
        return integrate(f_true, X)
    crumbs = split_equal(X, f_report, t + 1)
    after = [_enumerated_share(X.minus(c), f_report, f_true, owner, t + 1, n) for c in crumbs]
    profiles = list(itertools.product(range(t + 1), repeat=t))
    return sum((after[p[owner]] for p in profiles), ZERO) / len(profiles)


def cake_bic_audit(
    i: int,
    true_density: PiecewiseDensity,
    deviations: Sequence[PiecewiseDensity],
    earlier: Sequence[PiecewiseDensity],
    n: int,
) -> CakeBicResult:
    """Exact expected utility of agent ``i`` (0-indexed) for each report.

    Later agents pick each crumb with probability 1/t, so the agent keeps
    (i+1)/n of her arrival piece's true value in expectation. For n <= 3 this
    closed form is checked against a full enumeration of later picks.
    """
    if len(earlier) != i or not 0 <= i < n:
        raise InvalidInstance("need exactly i earlier reports and i < n")

    def expected(report):
        alloc, _ = incremental_accommodation(list(earlier) + [report], upto=i + 1)
        X = alloc.pieces[i]
        closed = Fraction(i + 1, n) * integrate(true_density, X)
        agree = None
        if n <= 3:
            agree = _enumerated_share(X, report, true_density, i, i + 1, n) == closed
        return closed, agree

    truthful, ok = expected(true_density)
    agree_all = ok
    values = []
    for d in deviations:
        v, ok = expected(d)
        values.append(v)
        if agree_all is not None:
            agree_all = agree_all and ok
    return CakeBicResult(i, truthful, tuple(values), all(truthful >= v for v in values), agree_all)


# --- random instances --------------------------------------------------------


def _cuts(rng: random.Random, segments: int, grid: int) -> list[Fraction]:
    return sorted(Fraction(c, grid) for c in rng.sample(range(1, grid), segments - 1))


def random_constant_density(rng: random.Random, segments: int = 4, grid: int = 64, top: int = 9) -> PiecewiseDensity:
    cuts = _cuts(rng, segments, grid)
    edges = [ZERO] + cuts + [ONE]
    heights = [Fraction(rng.randint(0, top)) for _ in range(segments)]
    if not any(heights):
        heights[rng.randrange(segments)] = ONE
    mass = sum(h * (r - l) for h, l, r in zip(heights, edges, edges[1:]))
    return PiecewiseDensity(tuple(Segment(l, r, h / mass, ZERO) for h, l, r in zip(heights, edges, edges[1:])))


def random_linear_density(rng: random.Random, segments: int = 4, grid: int = 64, top: int = 9) -> PiecewiseDensity:
    """Independent nonnegative endpoint values per segment, linearly interpolated."""
    cuts = _cuts(rng, segments, grid)
    edges = [ZERO] + cuts + [ONE]
    raw = []
    for l, r in zip(edges, edges[1:]):
        fl, fr = Fraction(rng.randint(0, top)), Fraction(rng.randint(0, top))
        if fl == fr == 0:
            fr = ONE
        b = (fr - fl) / (r - l)
        raw.append((l, r, fl - b * l, b))
    mass = sum(a * (r - l) + b * (r * r - l * l) / 2 for l, r, a, b in raw)
    return PiecewiseDensity(tuple(Segment(l, r, a / mass, b / mass) for l, r, a, b in raw))


def random_piece(rng: random.Random, grid: int = 32, max_intervals: int = 3) -> PieceSet:
    k = rng.randint(1, max_intervals)
    pts = sorted(Fraction(p, grid) for p in rng.sample(range(grid + 1), 2 * k))
    return PieceSet.of(zip(pts[0::2], pts[1::2]))


__all__ = [
    "AccommodationStep",
    "CakeAllocation",
    "CakeBicResult",
    "PieceSet",
    "PiecewiseDensity",
    "Segment",
    "cake_bic_audit",
    "expected_share_check",
    "incremental_accommodation",
    "integrate",
    "is_partition",
    "is_proportional",
    "measure",
    "random_constant_density",
    "random_linear_density",
    "random_piece",
    "split_equal",
]
