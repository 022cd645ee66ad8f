"""Exact-arithmetic domain types shared by every other module.

Agents and items are 0-indexed inside the library. Anything that crosses the
process boundary (instance files, CLI literals, reports) is 1-indexed.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, Union

Rational = Fraction
Bundle = frozenset

DEFAULT_ENUM_CAP = 10**7


class InvalidInstance(ValueError):
    """Raised when an instance document or literal is malformed."""


class CapExceeded(RuntimeError):
    """Raised when an exhaustive enumeration would exceed its configured cap."""

    def __init__(self, what: str, size: int, cap: int):
        super().__init__(f"{what}: {size} exceeds cap {cap}")
        self.what = what
        self.size = size
        self.cap = cap


def to_rational(x: Union[int, float, str, Fraction]) -> Fraction:
    """Convert ints, floats (exactly, as dyadics) and "p/q" or decimal strings."""
    if isinstance(x, bool):
        raise InvalidInstance(f"not a number: {x!r}")
    if isinstance(x, (int, Fraction, float)):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInstance(f"not a rational literal: {x!r}") from exc
    raise InvalidInstance(f"not a number: {x!r}")


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def check_cap(what: str, size: int, cap: int) -> None:
    if size > cap:
        raise CapExceeded(what, size, cap)


@dataclass(frozen=True)
class OrdinalReport:
    """Strict preference order over items plus the count of positively valued items.

    ``order[k]`` is the item ranked k-th (0-indexed); the first ``positive_count``
    entries of ``order`` are the positively valued items.
    """

    order: tuple[int, ...]
    positive_count: int

    def __post_init__(self):
        m = len(self.order)
        if sorted(self.order) != list(range(m)):
            raise InvalidInstance(f"order is not a permutation: {self.order}")
        if not 0 <= self.positive_count <= m:
            raise InvalidInstance(f"positive_count {self.positive_count} outside [0, {m}]")

    @property
    def m(self) -> int:
        return len(self.order)

    @property
    def positive_items(self) -> tuple[int, ...]:
        return self.order[: self.positive_count]

    def ranks(self) -> tuple[int, ...]:
        r = [0] * len(self.order)
        for k, j in enumerate(self.order):
            r[j] = k
        return tuple(r)


@dataclass(frozen=True)
class ValuationProfile:
    values: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if not self.values:
            raise InvalidInstance("profile needs at least one agent")
        m = len(self.values[0])
        for row in self.values:
            if len(row) != m:
                raise InvalidInstance("ragged valuation matrix")
            for v in row:
                if v < 0:
                    raise InvalidInstance(f"negative value {v}")

    @classmethod
    def of(cls, rows: Iterable[Iterable]) -> "ValuationProfile":
        return cls(tuple(tuple(to_rational(v) for v in row) for row in rows))

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def m(self) -> int:
        return len(self.values[0])

    def row(self, i: int) -> tuple[Fraction, ...]:
        return self.values[i]

    def reports(self) -> list[OrdinalReport]:
        return [preference_order(row) for row in self.values]


@dataclass(frozen=True)
class Allocation:
    """Integral allocation: ``owner[j]`` is the agent holding item j."""

    owner: tuple[int, ...]
    n: int

    def __post_init__(self):
        for o in self.owner:
            if not 0 <= o < self.n:
                raise InvalidInstance(f"owner {o} outside [0, {self.n})")

    @property
    def m(self) -> int:
        return len(self.owner)

    def bundle(self, i: int) -> frozenset:
        return frozenset(j for j, o in enumerate(self.owner) if o == i)

    def bundles(self) -> list[frozenset]:
        out = [set() for _ in range(self.n)]
        for j, o in enumerate(self.owner):
            out[o].add(j)
        return [frozenset(b) for b in out]

    @classmethod
    def from_bundles(cls, bundles: Sequence[Iterable[int]], m: int) -> "Allocation":
        owner = [-1] * m
        for i, b in enumerate(bundles):
            for j in b:
                if owner[j] != -1:
                    raise InvalidInstance(f"item {j} assigned twice")
                owner[j] = i
        if -1 in owner:
            raise InvalidInstance("some item is unassigned")
        return cls(tuple(owner), len(bundles))

    @classmethod
    def parse(cls, literal: str, n: int) -> "Allocation":
        """Parse the external comma-separated owner list, e.g. ``"1,1,2,2"``."""
        try:
            owner = tuple(int(tok) - 1 for tok in literal.split(","))
        except ValueError as exc:
            raise InvalidInstance(f"bad allocation literal {literal!r}") from exc
        return cls(owner, n)

    def external(self) -> list[int]:
        return [o + 1 for o in self.owner]

    def external_bundles(self) -> list[list[int]]:
        return [sorted(j + 1 for j in b) for b in self.bundles()]


def preference_order(v: Sequence[Fraction]) -> OrdinalReport:
    """Rank items by decreasing value, ties broken by lower index first."""
    order = tuple(sorted(range(len(v)), key=lambda j: (-v[j], j)))
    return OrdinalReport(order, sum(1 for x in v if x > 0))


def utility(v: Sequence[Fraction], bundle: Iterable[int]) -> Fraction:
    return sum((v[j] for j in bundle), Fraction(0))


def utilities(profile: ValuationProfile, alloc: Allocation) -> tuple[Fraction, ...]:
    u = [Fraction(0)] * profile.n
    for j, o in enumerate(alloc.owner):
        u[o] += profile.values[o][j]
    return tuple(u)


def enumerate_allocations(n: int, m: int, cap: int = DEFAULT_ENUM_CAP) -> Iterator[tuple[int, ...]]:
    """All owner vectors in ascending base-n counting order (item 0 most significant)."""
    check_cap("allocation enumeration", n**m, cap)
    return itertools.product(range(n), repeat=m)


# --- instance documents -----------------------------------------------------


def parse_instance(text: Union[str, bytes]):
    """Parse an instance document.

    Returns a :class:`ValuationProfile` for goods instances and a list of
    :class:`fairmech.cake.PiecewiseDensity` for cake instances.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInstance(f"malformed document: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidInstance("instance must be a JSON object")
    if "densities" in doc:
        from .cake import PiecewiseDensity, Segment

        rows = doc["densities"]
        if not isinstance(rows, list) or not rows:
            raise InvalidInstance("densities must be a non-empty list")
        out = []
        for segs in rows:
            try:
                out.append(
                    PiecewiseDensity(
                        tuple(
                            Segment(
                                to_rational(s["l"]),
                                to_rational(s["r"]),
                                to_rational(s["a"]),
                                to_rational(s["b"]),
                            )
                            for s in segs
                        )
                    )
                )
            except (KeyError, TypeError) as exc:
                raise InvalidInstance(f"bad density segment: {exc}") from exc
        if "agents" in doc and doc["agents"] != len(out):
            raise InvalidInstance("agents does not match number of densities")
        return out
    if "values" not in doc:
        raise InvalidInstance("instance has neither 'values' nor 'densities'")
    rows = doc["values"]
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise InvalidInstance("values must be a list of lists")
    profile = ValuationProfile.of(rows)
    if "agents" in doc and doc["agents"] != profile.n:
        raise InvalidInstance("agents does not match number of rows")
    if "items" in doc and doc["items"] != profile.m:
        raise InvalidInstance("items does not match row length")
    return profile


def serialize_instance(obj) -> str:
    """Canonical JSON form; ``parse_instance(serialize_instance(x)) == x``."""
    if isinstance(obj, ValuationProfile):
        doc = {
            "agents": obj.n,
            "items": obj.m,
            "values": [[format_rational(v) for v in row] for row in obj.values],
        }
    else:
        dens = list(obj)
        doc = {
            "agents": len(dens),
            "densities": [
                [
                    {
                        "l": format_rational(s.left),
                        "r": format_rational(s.right),
                        "a": format_rational(s.a),
                        "b": format_rational(s.b),
                    }
                    for s in d.segments
                ]
                for d in dens
            ],
        }
    return json.dumps(doc, separators=(",", ":"))
