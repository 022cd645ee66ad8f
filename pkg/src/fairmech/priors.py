"""Neutral prior samplers, a chi-square neutrality test and Monte Carlo BIC audits.

Sampling happens in float64. Each float is an exact dyadic rational, so
converting with ``Fraction(float)`` loses nothing before mechanisms run.
Randomness is split into fixed-size chunks seeded by ``SeedSequence([seed,
chunk])``, which keeps results identical no matter how work is partitioned.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import InvalidInstance, ValuationProfile, enumerate_allocations, to_rational
from .mechanisms import MechanismId, WelfareFn, welfare_max

CHUNK = 1 << 16

# upper critical values of chi-square, columns alpha = 0.1, 0.05, 0.01, 0.001
_ALPHAS = (0.1, 0.05, 0.01, 0.001)
_CHI2_TABLE = {
    1: (2.705543, 3.841459, 6.634897, 10.827566),
    5: (9.236357, 11.070498, 15.086272, 20.515006),
    23: (32.0069, 35.172462, 41.638398, 49.728232),
    119: (139.149464, 145.46074, 157.799541, 172.417682),
    719: (768.005786, 782.49061, 810.147074, 841.90522),
}


def chi2_critical(df: int, alpha: float) -> float:
    if df not in _CHI2_TABLE:
        raise InvalidInstance(f"no embedded chi-square value for df={df} (m <= 6 only)")
    if alpha not in _ALPHAS:
        raise InvalidInstance(f"alpha must be one of {_ALPHAS}")
    return _CHI2_TABLE[df][_ALPHAS.index(alpha)]


@dataclass(frozen=True)
class PriorSpec:
    """Distribution of one agent's valuation row.

    kind is ``uniform`` (iid on [a, b]), ``exponential`` (iid, rate lam),
    ``simplex``, ``per_item`` (item j uniform on intervals[j]) or
    ``order_uniform``. For ``per_item`` the ``coupling`` decides the joint law:
    ``independent`` draws coordinates independently; ``order_balanced`` first
    draws a uniformly random order and then samples the product law
    conditioned on that order, which makes the prior neutral by construction.
    """

    kind: str
    a: Fraction = Fraction(0)
    b: Fraction = Fraction(1)
    lam: Fraction = Fraction(1)
    intervals: tuple[tuple[Fraction, Fraction], ...] = ()
    coupling: str = "independent"

    def __post_init__(self):
        if self.kind not in ("uniform", "exponential", "simplex", "per_item", "order_uniform"):
            raise InvalidInstance(f"unknown prior {self.kind!r}")
        if self.kind == "uniform" and not self.a < self.b:
            raise InvalidInstance("uniform prior needs a < b")
        if self.kind == "uniform" and self.a < 0:
            raise InvalidInstance("values must be nonnegative")
        if self.kind == "exponential" and self.lam <= 0:
            raise InvalidInstance("exponential rate must be positive")
        if self.kind == "per_item":
            if not self.intervals:
                raise InvalidInstance("per_item prior needs intervals")
            for lo, hi in self.intervals:
                if not 0 <= lo < hi:
                    raise InvalidInstance(f"bad interval [{lo}, {hi}]")
            if self.coupling not in ("independent", "order_balanced"):
                raise InvalidInstance(f"unknown coupling {self.coupling!r}")

    @classmethod
    def parse(cls, text: str) -> "PriorSpec":
        """``simplex``, ``order-uniform``, ``uniform:a,b``, ``exponential:lam``,
        ``per-item:a1,b1;a2,b2[:balanced]``."""
        head, _, rest = text.partition(":")
        try:
            if head == "simplex":
                return cls("simplex")
            if head == "order-uniform":
                return cls("order_uniform")
            if head == "uniform":
                a, b = (to_rational(t) for t in rest.split(",")) if rest else (Fraction(0), Fraction(1))
                return cls("uniform", a=a, b=b)
            if head == "exponential":
                return cls("exponential", lam=to_rational(rest) if rest else Fraction(1))
            if head == "per-item":
                body, _, mode = rest.partition(":")
                ivs = tuple(tuple(to_rational(t) for t in iv.split(",")) for iv in body.split(";"))
                if any(len(iv) != 2 for iv in ivs):
                    raise InvalidInstance(f"bad intervals {body!r}")
                coupling = {"": "independent", "independent": "independent", "balanced": "order_balanced"}.get(mode)
                if coupling is None:
                    raise InvalidInstance(f"unknown coupling {mode!r}")
                return cls("per_item", intervals=ivs, coupling=coupling)
        except ValueError as exc:
            raise InvalidInstance(f"bad prior {text!r}: {exc}") from exc
        raise InvalidInstance(f"unknown prior {text!r}")

    def label(self) -> str:
        return {
            "uniform": f"uniform:{self.a},{self.b}",
            "exponential": f"exponential:{self.lam}",
            "simplex": "simplex",
            "order_uniform": "order-uniform",
        }.get(self.kind) or "per-item:" + ";".join(f"{lo},{hi}" for lo, hi in self.intervals) + (
            ":balanced" if self.coupling == "order_balanced" else ""
        )


def _order_feasible(order: Sequence[int], intervals) -> bool:
    # can we pick v[order[0]] > v[order[1]] > ... inside the open intervals?
    floor = None
    for j in reversed(order):
        lo, hi = intervals[j]
        floor = lo if floor is None else max(floor, lo)
        if floor >= hi:
            return False
    return True


def _per_item_balanced(intervals, count: int, rng: np.random.Generator) -> np.ndarray:
    m = len(intervals)
    orders = list(itertools.permutations(range(m)))
    bad = [o for o in orders if not _order_feasible(o, intervals)]
    if bad:
        raise InvalidInstance(f"order {tuple(j + 1 for j in bad[0])} impossible under these intervals")
    lo = np.array([float(a) for a, _ in intervals])
    width = np.array([float(b - a) for a, b in intervals])
    target = rng.integers(len(orders), size=count)
    # rank of item j inside each target order, so v sorted descending matches
    rank_of = np.array([[o.index(j) for j in range(m)] for o in orders])
    out = np.empty((count, m))
    todo = np.arange(count)
    while todo.size:
        draw = lo + width * rng.random((todo.size, m))
        got = np.argsort(np.argsort(-draw, axis=1, kind="stable"), axis=1)
        ok = np.all(got == rank_of[target[todo]], axis=1)
        out[todo[ok]] = draw[ok]
        todo = todo[~ok]
    return out


def sample_batch(prior: PriorSpec, m: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent valuation rows as a (count, m) float array."""
    if m < 1:
        raise InvalidInstance("m must be at least 1")
    if prior.kind == "uniform":
        return float(prior.a) + float(prior.b - prior.a) * rng.random((count, m))
    if prior.kind == "exponential":
        return rng.exponential(1.0 / float(prior.lam), size=(count, m))
    if prior.kind == "simplex":
        cuts = np.sort(rng.random((count, m - 1)), axis=1)
        edges = np.concatenate([np.zeros((count, 1)), cuts, np.ones((count, 1))], axis=1)
        return np.diff(edges, axis=1)
    if prior.kind == "order_uniform":
        ranks = np.argsort(rng.random((count, m)), axis=1)
        return (m - ranks).astype(float)
    if len(prior.intervals) != m:
        raise InvalidInstance(f"prior has {len(prior.intervals)} intervals but m={m}")
    if prior.coupling == "order_balanced":
        return _per_item_balanced(prior.intervals, count, rng)
    lo = np.array([float(a) for a, _ in prior.intervals])
    width = np.array([float(b - a) for a, b in prior.intervals])
    return lo + width * rng.random((count, m))


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, chunk]))


def _chunks(total: int):
    for c, start in enumerate(range(0, total, CHUNK)):
        yield c, min(CHUNK, total - start)


def sample_valuation(prior: PriorSpec, m: int, seed: int) -> tuple[Fraction, ...]:
    row = sample_batch(prior, m, 1, _chunk_rng(seed, 0))[0]
    return tuple(Fraction(float(x)) for x in row)


# --- neutrality ------------------------------------------------------------


@dataclass(frozen=True)
class NeutralityResult:
    passed: bool
    statistic: float
    critical: float
    df: int
    counts: tuple[int, ...]  # per order, in itertools.permutations order
    tied: int


def neutrality_test(prior: PriorSpec, m: int, samples: int, alpha: float = 0.01, seed: int = 0) -> NeutralityResult:
    """Chi-square goodness of fit of the sampled preference order to uniform."""
    cells = math.factorial(m)
    if cells * 20 > samples:
        raise InvalidInstance(f"need at least {cells * 20} samples for m={m}")
    if m == 1:
        return NeutralityResult(True, 0.0, 0.0, 0, (samples,), 0)
    critical = chi2_critical(cells - 1, alpha)
    code_of = {}
    for k, perm in enumerate(itertools.permutations(range(m))):
        code_of[sum(j * m**r for r, j in enumerate(perm))] = k
    lut = np.full(m**m, -1, dtype=np.int64)
    for code, k in code_of.items():
        lut[code] = k
    weights = m ** np.arange(m)
    counts = np.zeros(cells, dtype=np.int64)
    tied = 0
    for c, size in _chunks(samples):
        v = sample_batch(prior, m, size, _chunk_rng(seed, c))
        order = np.argsort(-v, axis=1, kind="stable")
        sv = np.take_along_axis(v, order, axis=1)
        has_tie = np.any(sv[:, :-1] == sv[:, 1:], axis=1)
        tied += int(has_tie.sum())
        idx = lut[(order[~has_tie] * weights).sum(axis=1)]
        counts += np.bincount(idx, minlength=cells)
    effective = samples - tied
    expected = effective / cells
    stat = float(((counts - expected) ** 2).sum() / expected) if effective else 0.0
    return NeutralityResult(stat <= critical, stat, critical, cells - 1, tuple(int(x) for x in counts), tied)


# --- Monte Carlo BIC ---------------------------------------------------------


@dataclass(frozen=True)
class McReport:
    """Paired estimate of E[u(deviation)] - E[u(truth)] for the audited agent."""

    estimate: float
    stderr: float
    count: int
    seed: int
    deviation: tuple[Fraction, ...] = field(default=())
    fallbacks: int = 0  # samples decided by exact arithmetic

    @property
    def significant(self) -> bool:
        return self.estimate > 3 * self.stderr


def _float_scores(w: WelfareFn, U: np.ndarray) -> np.ndarray:
    """Welfare ranking scores over the last axis (agents), float64."""
    w = w.normalized()
    if w.kind == "utilitarian":
        return U.sum(axis=-1)
    if w.kind == "egalitarian":
        return U.min(axis=-1)
    if w.kind == "nash":
        return U.prod(axis=-1)
    p = float(w.p)
    with np.errstate(divide="ignore"):
        s = (U**p).sum(axis=-1)
    if p > 0:
        return s
    s = np.where(np.any(U == 0, axis=-1), np.inf, s)
    return -s


_REL_TOL = 1e-9


class _WelfareBatch:
    """Vectorised welfare maximiser with a conservative exact fallback.

    Float argmax is trusted only when the best score beats every other
    allocation by a relative margin far above rounding error; otherwise the
    exact exhaustive maximiser decides the sample.
    """

    def __init__(self, w: WelfareFn, n: int, m: int):
        self.w, self.n, self.m = w, n, m
        self.owners = np.array(list(enumerate_allocations(n, m)), dtype=np.int64)  # (A, m)
        self.onehot = np.stack([(self.owners == i) for i in range(n)], axis=-1).astype(float)  # (A, m, n)

    def choose(self, V: np.ndarray, exact_rows) -> tuple[np.ndarray, int]:
        U = np.einsum("sim,ami->sai", V, self.onehot)
        scores = _float_scores(self.w, U)
        best = np.argmax(scores, axis=1)
        top = scores[np.arange(len(V)), best]
        runner = np.where(np.arange(scores.shape[1]) == best[:, None], -np.inf, scores).max(axis=1)
        scale = np.maximum(np.abs(top), np.abs(runner))
        with np.errstate(invalid="ignore"):
            gap = top - runner
        sure = np.isfinite(top) & (gap > _REL_TOL * np.where(np.isfinite(scale), scale, 0) + 1e-300)
        fallback = np.nonzero(~sure)[0]
        for s in fallback:
            alloc = welfare_max(ValuationProfile(exact_rows(s)), self.w)
            best[s] = int(np.dot(alloc.owner, self.n ** np.arange(self.m)[::-1]))
        return best, len(fallback)


def bic_audit_mc(
    mech: MechanismId,
    i: int,
    true_values: Sequence,
    deviations: Sequence[Sequence],
    prior: PriorSpec,
    n: int,
    samples: int,
    seed: int,
) -> list[McReport]:
    """Paired Monte Carlo gain of each deviation over truthful reporting.

    Both arms see the same opponent draws (common random numbers), so the
    estimator is the mean of per-sample differences.
    """
    truth = tuple(to_rational(x) for x in true_values)
    devs = [tuple(to_rational(x) for x in d) for d in deviations]
    m = len(truth)
    if any(len(d) != m for d in devs):
        raise InvalidInstance("deviation length differs from m")
    if samples < 2:
        raise InvalidInstance("need at least two samples")
    reports = []
    for dev in devs:
        total = 0.0
        total_sq = 0.0
        fallbacks = 0
        for c, size in _chunks(samples):
            rng = _chunk_rng(seed, c)
            opp = sample_batch(prior, m, size * (n - 1), rng).reshape(size, n - 1, m)
            diff, fb = _paired_gains(mech, i, truth, dev, opp, n, m)
            fallbacks += fb
            total += float(diff.sum())
            total_sq += float((diff**2).sum())
        mean = total / samples
        var = max(total_sq - samples * mean * mean, 0.0) / (samples - 1)
        reports.append(McReport(mean, math.sqrt(var / samples), samples, seed, dev, fallbacks))
    return reports


def _paired_gains(mech, i, truth, dev, opp, n, m) -> tuple[np.ndarray, int]:
    size = opp.shape[0]
    if truth == dev:
        return np.zeros(size), 0

    def stack(row):
        mine = np.broadcast_to(np.array([float(x) for x in row]), (size, 1, m))
        return np.concatenate([opp[:, :i], mine, opp[:, i:]], axis=1)

    def exact_rows(row):
        def f(s):
            rows = [tuple(Fraction(float(x)) for x in r) for r in opp[s]]
            return rows[:i] + [row] + rows[i:]

        return f

    if mech.kind == "welfare_max":
        batch = _WelfareBatch(mech.welfare, n, m)
        own_util = np.array([float(sum((truth[j] for j in range(m) if o[j] == i), Fraction(0))) for o in batch.owners])
        a_truth, fb1 = batch.choose(stack(truth), exact_rows(truth))
        a_dev, fb2 = batch.choose(stack(dev), exact_rows(dev))
        return own_util[a_dev] - own_util[a_truth], fb1 + fb2
    out = np.empty(size)
    for s in range(size):
        u = []
        for row in (truth, dev):
            alloc = mech.run(ValuationProfile(tuple(exact_rows(row)(s))))
            u.append(sum((truth[j] for j in range(m) if alloc.owner[j] == i), Fraction(0)))
        out[s] = float(u[1] - u[0])
    return out, 0
