"""Replication suites: each id bundles the exact and Monte Carlo checks for one result."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from . import cake
from .audits import Criterion, is_ef1, is_efficient, is_fpo, is_fulfilling
from .characterization import DEFAULT_NODE_BUDGET, characterization_search
from .core import DEFAULT_ENUM_CAP, Allocation, InvalidInstance, ValuationProfile, enumerate_allocations, utilities
from .interim import bic_audit_exact, check_monotone, positional_interim
from .mechanisms import MechanismId, WelfareFn
from .priors import PriorSpec, bic_audit_mc, neutrality_test

RR = MechanismId("rr_pass")


@dataclass(frozen=True)
class SuiteConfig:
    seed: int = 0
    samples: Optional[int] = None  # overrides each suite's default size
    cap_enum: int = DEFAULT_ENUM_CAP
    cap_nodes: int = DEFAULT_NODE_BUDGET

    def size(self, default: int) -> int:
        return default if self.samples is None else self.samples


def _row(section: str, name: str, verdict: bool, **detail) -> dict:
    row = {"section": section, "name": name, "verdict": bool(verdict), "detail": detail or None}
    for key in ("estimate", "stderr"):
        if key in detail:
            row[key] = detail.pop(key)
    return row


def random_rational(rng: random.Random, denom: int = 20) -> Fraction:
    return Fraction(rng.randint(0, denom), denom)


def random_profile(rng: random.Random, n: int, m: int, denom: int = 20) -> ValuationProfile:
    return ValuationProfile(tuple(tuple(random_rational(rng, denom) for _ in range(m)) for _ in range(n)))


# --- indivisible goods -------------------------------------------------------


def efficiency_separations(cfg: SuiteConfig) -> list[dict]:
    out = []
    p = ValuationProfile.of([[5, 4, 3, 2], [6, 1, 2, 3]])
    x = Allocation.parse("1,1,2,2", 2)
    sdp = is_efficient(p, x, Criterion.SD_PLUS, cfg.cap_enum, method="brute")
    par = is_efficient(p, x, Criterion.PARETO, cfg.cap_enum)
    w = par.witness
    ok = (
        sdp.verdict
        and not par.verdict
        and w is not None
        and w.external_bundles() == [[2, 3, 4], [1]]
        and utilities(p, w) == (9, 6)
        and utilities(p, x) == (9, 5)
    )
    out.append(_row("separations", "sd-plus-not-pareto", ok, sd_plus=sdp.verdict, pareto=par.verdict, witness=w,
                    witness_utilities=utilities(p, w) if w else None, utilities=utilities(p, x)))
    q = ValuationProfile.of([[1, 1], [1, 0]])
    y = Allocation.parse("1,2", 2)
    sd = is_efficient(q, y, Criterion.SD, cfg.cap_enum, method="brute")
    sdp2 = is_efficient(q, y, Criterion.SD_PLUS, cfg.cap_enum, method="brute")
    out.append(_row("separations", "sd-not-sd-plus", sd.verdict and not sdp2.verdict, sd=sd.verdict,
                    sd_plus=sdp2.verdict, witness=sdp2.witness))
    return out


def lemma_positional(cfg: SuiteConfig) -> list[dict]:
    out = []
    for n in (2, 3):
        for m in (2, 3, 4):
            for i in range(n):
                qp = positional_interim(RR, i, n, m)
                out.append(_row("positional", f"n={n},m={m},agent={i + 1}", check_monotone(qp), q_pos=qp.q_pos))
    return out


def lemma_rr_bic(cfg: SuiteConfig) -> list[dict]:
    rng = random.Random(cfg.seed)
    count = cfg.size(100)
    out = []
    for n, m in ((2, 2), (2, 3), (2, 4), (3, 2), (3, 3)):
        failures = []
        for _ in range(count):
            v = [Fraction(rng.randint(1, 1000), 1000) for _ in range(m)]
            i = rng.randrange(n)
            res = bic_audit_exact(RR, i, v, n)
            if not res.verdict:
                failures.append({"agent": i + 1, "values": v})
        out.append(_row("rr-bic", f"n={n},m={m}", not failures, trials=count, failures=failures[:5]))
    return out


def lemma_rr_fair_efficient(cfg: SuiteConfig) -> list[dict]:
    rng = random.Random(cfg.seed)
    count = cfg.size(10_000)
    bad_ef1, bad_sd = [], []
    for _ in range(count):
        p = random_profile(rng, rng.randint(1, 4), rng.randint(1, 8))
        x = RR.run(p)
        if not is_ef1(p, x).verdict:
            bad_ef1.append(p)
        if not is_efficient(p, x, Criterion.SD_PLUS).verdict:
            bad_sd.append(p)
    return [
        _row("rr-fair-efficient", "ef1", not bad_ef1, instances=count, failures=len(bad_ef1)),
        _row("rr-fair-efficient", "sd-plus", not bad_sd, instances=count, failures=len(bad_sd)),
    ]


def thm_characterization(cfg: SuiteConfig) -> list[dict]:
    m1 = characterization_search(1, efficiency=Criterion.SD_PLUS)
    m1_sd = characterization_search(1, efficiency=Criterion.SD)
    m2 = characterization_search(2, efficiency=Criterion.SD_PLUS, node_budget=cfg.cap_nodes)
    return [
        _row("characterization", "m=1,sd-plus", m1.verified and m1.survivors == 4, survivors=m1.survivors, tables=m1.nodes),
        _row("characterization", "m=1,sd-only", m1_sd.status == "counterexample", survivors=m1_sd.survivors,
             counterexample={str([[str(v) for v in r] for r in k]): a for k, a in (m1_sd.counterexample or {}).items()}),
        _row("characterization", "m=2,sd-plus", m2.status != "counterexample", status=m2.status, nodes=m2.nodes),
    ]


WELFARE_FAMILY = ("nash", "utilitarian", "egalitarian", "p=1/2")


def thm_welfare_bic(cfg: SuiteConfig) -> list[dict]:
    x, eps = Fraction(3, 5), Fraction(1, 10)
    truth = (x, 1 - x)
    dev = (x + eps, 1 - x - eps)
    expected = float(eps * (2 * x - 1))
    N = cfg.size(10**6)
    out = []
    for label in WELFARE_FAMILY:
        mech = MechanismId("welfare_max", welfare=WelfareFn.parse(label))
        (rep,) = bic_audit_mc(mech, 0, truth, [dev], PriorSpec("simplex"), 2, N, cfg.seed)
        ok = abs(rep.estimate - expected) <= 0.005 and rep.significant
        out.append(_row("welfare-bic", label, ok, estimate=rep.estimate, stderr=rep.stderr, expected=expected,
                        samples=N, bic_violated=rep.significant, exact_fallbacks=rep.fallbacks))
    return out


def thm_fulfilling(cfg: SuiteConfig) -> list[dict]:
    rng = random.Random(cfg.seed)
    count = cfg.size(50)
    failures = []
    for _ in range(count):
        b = Fraction(rng.randint(1, 999), 1000)
        y = b
        while y == b:
            y = Fraction(rng.randint(1, 999), 1000)
        p = ValuationProfile.of([[b, 1 - b], [y, 1 - y]])
        good = []
        for owner in enumerate_allocations(2, 2):
            a = Allocation(owner, 2)
            if is_fulfilling(p, a).verdict and is_fpo(p, a).verdict:
                good.append(utilities(p, a))
        want = (b, 1 - y) if y < b else (1 - b, y)
        if good != [want]:
            failures.append({"b": b, "y": y, "found": good})
    return [_row("fulfilling", "unique-fpo-fulfilling", not failures, trials=count, failures=failures[:5])]


# --- cake ------------------------------------------------------------------


def _density(rng: random.Random):
    if rng.random() < 0.5:
        return cake.random_constant_density(rng, rng.randint(1, 5))
    return cake.random_linear_density(rng, rng.randint(1, 5))


def split_equal_suite(cfg: SuiteConfig) -> list[dict]:
    rng = random.Random(cfg.seed)
    count = cfg.size(1000)
    bad = 0
    for _ in range(count):
        f = _density(rng)
        X = cake.random_piece(rng)
        k = rng.randint(2, 6)
        parts = cake.split_equal(X, f, k)
        ok = (
            all(cake.measure(c) * k == cake.measure(X) for c in parts)
            and all(cake.integrate(f, c) * k == cake.integrate(f, X) for c in parts)
            and cake.PieceSet.of(iv for c in parts for iv in c.intervals) == X
        )
        bad += not ok
    return [_row("cake", "split-equal", bad == 0, trials=count, failures=bad)]


def lemma_ia_proportional(cfg: SuiteConfig) -> list[dict]:
    rng = random.Random(cfg.seed + 1)
    count = cfg.size(1000)
    bad_final = bad_trace = 0
    for _ in range(count):
        n = rng.randint(1, 5)
        fs = [_density(rng) for _ in range(n)]
        alloc, trace = cake.incremental_accommodation(fs)
        bad_final += not cake.is_proportional(alloc, fs).verdict
        for step in trace:
            pieces = step.pieces
            k = len(pieces)
            prefix_ok = all(cake.integrate(fs[j], pieces[j]) * k >= 1 for j in range(k))
            covers = cake.is_partition(pieces)
            bad_trace += not (prefix_ok and covers)
    return [
        _row("cake", "ia-proportional", bad_final == 0, trials=count, failures=bad_final),
        _row("cake", "ia-prefix-proportional", bad_trace == 0, trials=count, failures=bad_trace),
    ]


def lemma_expected_share(cfg: SuiteConfig) -> list[dict]:
    rng = random.Random(cfg.seed + 2)
    count = cfg.size(100)
    bad = 0
    for _ in range(count):
        lhs, rhs = cake.expected_share_check(cake.random_piece(rng), _density(rng), _density(rng), rng.randint(2, 6))
        bad += lhs != rhs
    return [_row("cake", "expected-share", bad == 0, trials=count, failures=bad)]


def cake_bic(cfg: SuiteConfig) -> list[dict]:
    rng = random.Random(cfg.seed + 3)
    count = cfg.size(20)
    bad_verdict = bad_enum = 0
    for _ in range(count):
        n = 3
        i = rng.randrange(n)
        earlier = [_density(rng) for _ in range(i)]
        res = cake.cake_bic_audit(i, _density(rng), [_density(rng) for _ in range(3)], earlier, n)
        bad_verdict += not res.verdict
        bad_enum += res.enumeration_agrees is not True
    return [
        _row("cake", "bic-verdict", bad_verdict == 0, trials=count, failures=bad_verdict),
        _row("cake", "bic-closed-form", bad_enum == 0, trials=count, failures=bad_enum),
    ]


def cake_suite(cfg: SuiteConfig) -> list[dict]:
    return split_equal_suite(cfg) + lemma_ia_proportional(cfg) + lemma_expected_share(cfg) + cake_bic(cfg)


# --- priors -----------------------------------------------------------------


def neutrality(cfg: SuiteConfig) -> list[dict]:
    N = cfg.size(10**6)
    cases = [
        ("simplex", PriorSpec("simplex"), True),
        ("per-item-balanced", PriorSpec.parse("per-item:0,1;1/2,3/4:balanced"), True),
        ("per-item-disjoint", PriorSpec.parse("per-item:0,1;2,3"), False),
    ]
    out = []
    for name, prior, should_pass in cases:
        r = neutrality_test(prior, 2, N, 0.01, cfg.seed)
        out.append(_row("neutrality", name, r.passed == should_pass, statistic=r.statistic, critical=r.critical,
                        passed=r.passed, expected_pass=should_pass, counts=r.counts, tied=r.tied))
    return out


SUITES: dict[str, Callable[[SuiteConfig], list[dict]]] = {
    "efficiency-separations": efficiency_separations,
    "lemma-positional": lemma_positional,
    "lemma-rr-bic": lemma_rr_bic,
    "lemma-rr-fair-efficient": lemma_rr_fair_efficient,
    "thm-characterization": thm_characterization,
    "thm-welfare-bic": thm_welfare_bic,
    "thm-fulfilling": thm_fulfilling,
    "lemma-expected-share": lemma_expected_share,
    "lemma-ia-proportional": lemma_ia_proportional,
    "cake-suite": cake_suite,
    "neutrality": neutrality,
}


def replicate(suite_id: str, cfg: SuiteConfig = SuiteConfig()) -> list[dict]:
    try:
        fn = SUITES[suite_id]
    except KeyError:
        raise InvalidInstance(f"unknown suite {suite_id!r}; choose from {', '.join(SUITES)}") from None
    return fn(cfg)
