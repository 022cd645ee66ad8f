"""Command-line front end.

Exit codes: 0 when every requested verdict holds, 1 when some verdict fails,
2 for a bad configuration and 3 when an enumeration cap is exceeded.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import asdict, dataclass
from typing import Optional

from . import audits, cake
from .characterization import DEFAULT_NODE_BUDGET
from .core import DEFAULT_ENUM_CAP, Allocation, CapExceeded, InvalidInstance, OrdinalReport, ValuationProfile, parse_instance, to_rational, utilities
from .interim import bic_audit_exact, check_monotone, interim_allocation, positional_interim, PositionalStructureError
from .mechanisms import MechanismId
from .priors import PriorSpec, bic_audit_mc
from .replicate import SUITES, SuiteConfig, replicate
from .reports import emit

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CAP = 0, 1, 2, 3


@dataclass
class ExperimentConfig:
    command: str
    instance: Optional[str] = None
    mech: Optional[str] = None
    predicates: Optional[list[str]] = None
    alloc: Optional[str] = None
    prior: Optional[str] = None
    samples: Optional[int] = None
    seed: int = 0
    format: str = "json"
    cap_enum: int = DEFAULT_ENUM_CAP
    cap_nodes: int = DEFAULT_NODE_BUDGET
    out: Optional[str] = None
    extra: Optional[dict] = None

    def validate(self) -> None:
        if self.instance is not None and not os.path.exists(self.instance):
            raise InvalidInstance(f"no such file: {self.instance}")
        if self.cap_enum <= 0 or self.cap_nodes <= 0:
            raise InvalidInstance("caps must be positive")
        if self.samples is not None and self.samples <= 0:
            raise InvalidInstance("--samples must be positive")
        if self.format not in ("json", "csv"):
            raise InvalidInstance("--format must be json or csv")


PREDICATES = ("ef", "ef1", "pareto", "sd", "sd-plus", "fpo", "fulfilling")


def _load_goods(cfg: ExperimentConfig) -> ValuationProfile:
    if cfg.instance is None:
        raise InvalidInstance("an instance file is required")
    with open(cfg.instance, "rb") as fh:
        inst = parse_instance(fh.read())
    if not isinstance(inst, ValuationProfile):
        raise InvalidInstance("expected a goods instance with 'values'")
    return inst


def _row(name, verdict, **detail):
    return {"name": name, "verdict": verdict, "detail": detail or None}


def cmd_allocate(cfg: ExperimentConfig) -> list[dict]:
    profile = _load_goods(cfg)
    mech = MechanismId.parse(cfg.mech or "rr-pass")
    alloc = mech.run(profile, cfg.cap_enum)
    return [_row("allocation", True, mechanism=mech.label(), allocation=alloc, utilities=utilities(profile, alloc))]


def _audit_one(name: str, profile: ValuationProfile, alloc: Allocation, cap: int) -> audits.AuditReport:
    if name == "ef":
        return audits.is_envy_free(profile, alloc)
    if name == "ef1":
        return audits.is_ef1(profile, alloc)
    if name in ("pareto", "sd", "sd-plus"):
        return audits.is_efficient(profile, alloc, audits.Criterion(name), cap)
    if name == "fpo":
        return audits.is_fpo(profile, alloc)
    if name == "fulfilling":
        return audits.is_fulfilling(profile, alloc)
    raise InvalidInstance(f"unknown predicate {name!r}; choose from {', '.join(PREDICATES)}")


def cmd_audit(cfg: ExperimentConfig) -> list[dict]:
    profile = _load_goods(cfg)
    names = cfg.predicates or ["ef1", "sd-plus"]
    for name in names:
        if name not in PREDICATES:
            raise InvalidInstance(f"unknown predicate {name!r}; choose from {', '.join(PREDICATES)}")
    if cfg.alloc:
        alloc = Allocation.parse(cfg.alloc, profile.n)
        if alloc.m != profile.m:
            raise InvalidInstance("allocation length differs from item count")
    else:
        alloc = MechanismId.parse(cfg.mech or "rr-pass").run(profile, cfg.cap_enum)
    rows = []
    for name in names:
        rep = _audit_one(name, profile, alloc, cfg.cap_enum)
        rows.append({"name": name, "verdict": rep.verdict, "detail": {"witness": rep.to_dict()["witness"], "allocation": alloc}})
    return rows


def _parse_report(text: str, m: int) -> OrdinalReport:
    """``"2,1,3"`` or ``"2,1,3:2"`` (1-indexed order, optional positive count)."""
    order_text, _, k = text.partition(":")
    try:
        order = tuple(int(t) - 1 for t in order_text.split(","))
        return OrdinalReport(order, int(k) if k else m)
    except ValueError as exc:
        raise InvalidInstance(f"bad report {text!r}") from exc


def cmd_interim(cfg: ExperimentConfig) -> list[dict]:
    ex = cfg.extra
    mech = MechanismId.parse(cfg.mech or "rr-pass")
    n, m = ex["agents"], ex["items"]
    if n is None or m is None:
        raise InvalidInstance("--agents and --items are required")
    agents = [ex["agent"] - 1] if ex["agent"] else list(range(n))
    rows = []
    for i in agents:
        if not 0 <= i < n:
            raise InvalidInstance("--agent out of range")
        if ex["report"]:
            rep = _parse_report(ex["report"], m)
            t = interim_allocation(mech, i, rep, n, m, cfg.cap_enum)
            rows.append(_row(f"agent {i + 1}", True, report=[j + 1 for j in rep.order], positive_count=rep.positive_count, q=t.q))
            continue
        try:
            qp = positional_interim(mech, i, n, m, cfg.cap_enum)
        except PositionalStructureError as err:
            a, b = err.pair
            rows.append(_row(f"agent {i + 1}", False, positional=False,
                             pair=[[[j + 1 for j in r.order], r.positive_count] for r in (a, b)]))
            continue
        rows.append(_row(f"agent {i + 1}", check_monotone(qp), positional=True, q_pos=qp.q_pos))
    return rows


def _parse_rows(text: str) -> list[tuple]:
    return [tuple(to_rational(t) for t in part.split(",")) for part in text.split(";") if part]


def cmd_bic(cfg: ExperimentConfig) -> list[dict]:
    ex = cfg.extra
    mech = MechanismId.parse(cfg.mech or "rr-pass")
    if not ex["values"] or not ex["agents"]:
        raise InvalidInstance("--values and --agents are required")
    (truth,) = _parse_rows(ex["values"])
    n, i = ex["agents"], (ex["agent"] or 1) - 1
    if not 0 <= i < n:
        raise InvalidInstance("--agent out of range")
    if cfg.prior is None and mech.is_ordinal:
        res = bic_audit_exact(mech, i, truth, n, cap=cfg.cap_enum)
        best = res.best_deviation
        return [_row(f"agent {i + 1}", res.verdict, mode="exact", truthful=res.truthful, best_value=res.best_value,
                     best_deviation=[[j + 1 for j in best.order], best.positive_count])]
    prior = PriorSpec.parse(cfg.prior or "simplex")
    devs = _parse_rows(ex["deviations"] or "")
    if not devs:
        raise InvalidInstance("Monte Carlo audits need --deviations")
    reports = bic_audit_mc(mech, i, truth, devs, prior, n, cfg.samples or 100_000, cfg.seed)
    return [
        {"name": "deviation " + ",".join(str(x) for x in r.deviation), "verdict": not r.significant,
         "estimate": r.estimate, "stderr": r.stderr,
         "detail": {"mode": "monte-carlo", "samples": r.count, "seed": r.seed, "gain": r.estimate, "bic_violated": r.significant}}
        for r in reports
    ]


def cmd_cake(cfg: ExperimentConfig) -> list[dict]:
    if cfg.instance is None:
        raise InvalidInstance("an instance file is required")
    with open(cfg.instance, "rb") as fh:
        dens = parse_instance(fh.read())
    if isinstance(dens, ValuationProfile):
        raise InvalidInstance("expected a cake instance with 'densities'")
    alloc, _ = cake.incremental_accommodation(dens)
    prop = cake.is_proportional(alloc, dens)
    return [_row("proportional", prop.verdict, pieces=[p.external() for p in alloc.pieces],
                 utilities=[cake.integrate(f, X) for f, X in zip(dens, alloc.pieces)],
                 witness=prop.to_dict()["witness"])]


def cmd_replicate(cfg: ExperimentConfig) -> list[dict]:
    sc = SuiteConfig(seed=cfg.seed, samples=cfg.samples, cap_enum=cfg.cap_enum, cap_nodes=cfg.cap_nodes)
    return replicate(cfg.extra["suite"], sc)


COMMANDS = {
    "allocate": cmd_allocate,
    "audit": cmd_audit,
    "interim": cmd_interim,
    "bic": cmd_bic,
    "cake": cmd_cake,
    "replicate": cmd_replicate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mech", help="rr-pass | sd:ORDER | welfare:KIND | plf")
    common.add_argument("--prior", help="simplex | order-uniform | uniform:a,b | exponential:lam | per-item:a,b;c,d[:balanced]")
    common.add_argument("--samples", type=int)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--cap-enum", type=int, default=DEFAULT_ENUM_CAP)
    common.add_argument("--cap-nodes", type=int, default=DEFAULT_NODE_BUDGET)
    common.add_argument("--out")

    parser = argparse.ArgumentParser(prog="fairmech", description="Fair division mechanisms and auditors.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("allocate", parents=[common], help="run a mechanism on an instance")
    p.add_argument("instance")
    p = sub.add_parser("audit", parents=[common], help="check fairness and efficiency predicates")
    p.add_argument("instance")
    p.add_argument("--predicates", default="ef1,sd-plus", help=",".join(PREDICATES))
    p.add_argument("--alloc", help='owner list such as "1,1,2,2"')
    p = sub.add_parser("interim", parents=[common], help="exact interim allocations")
    p.add_argument("--agents", type=int)
    p.add_argument("--items", type=int)
    p.add_argument("--agent", type=int)
    p.add_argument("--report", help='order such as "2,1,3" with optional ":k" positive count')
    p = sub.add_parser("bic", parents=[common], help="exact or Monte Carlo BIC audit")
    p.add_argument("--values", help="true values of the audited agent, e.g. 3/5,2/5")
    p.add_argument("--deviations", help="semicolon-separated rows, e.g. 7/10,3/10")
    p.add_argument("--agents", type=int)
    p.add_argument("--agent", type=int)
    p = sub.add_parser("cake", parents=[common], help="incremental accommodation on a cake instance")
    p.add_argument("instance")
    p = sub.add_parser("replicate", parents=[common], help="run a replication suite")
    p.add_argument("suite", choices=sorted(SUITES))
    return parser


_KNOWN = set(ExperimentConfig.__dataclass_fields__)


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    d = vars(args).copy()
    if isinstance(d.get("predicates"), str):
        d["predicates"] = [t.strip() for t in d["predicates"].split(",") if t.strip()]
    extra = {k: d.pop(k) for k in list(d) if k not in _KNOWN}
    return ExperimentConfig(**d, extra=extra or None)


def run(cfg: ExperimentConfig) -> int:
    report = {"command": cfg.command, "config": asdict(cfg), "results": []}
    try:
        cfg.validate()
        report["results"] = COMMANDS[cfg.command](cfg)
    except CapExceeded as err:
        report["error"] = {"kind": "cap-exceeded", "message": str(err), "size": err.size, "cap": err.cap}
        report["verdict"] = None
        emit(report, cfg.format, cfg.out)
        return EXIT_CAP
    except (InvalidInstance, OSError, KeyError) as err:
        report["error"] = {"kind": "bad-config", "message": str(err)}
        report["verdict"] = None
        emit(report, cfg.format, cfg.out)
        return EXIT_CONFIG
    report["verdict"] = all(r["verdict"] for r in report["results"])
    emit(report, cfg.format, cfg.out)
    return EXIT_OK if report["verdict"] else EXIT_FAIL


def main(argv: Optional[list[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
