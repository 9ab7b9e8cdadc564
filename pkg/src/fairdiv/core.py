"""Exact-rational domain types shared by every mechanism and checker.

All quantities are `fractions.Fraction` end to end.  Truthfulness, envy,
and equilibrium conditions are exact (in)equalities, so there is no
floating-point anywhere in a computation path; a rounded comparison could
flip a verdict.
"""

from __future__ import annotations

import json
import os
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

Kind = Literal["goods", "chores"]
Divisibility = Literal["indivisible", "divisible"]

ZERO = Fraction(0)
ONE = Fraction(1)

DEFAULT_GUARD_LIMIT = 10_000_000


class FairDivError(Exception):
    """Base class for all library errors."""


class ParseError(FairDivError):
    """Malformed instance/allocation/config input."""


class ConstraintError(FairDivError):
    """A mechanism or operation was applied outside its declared domain."""


class ConfigError(FairDivError):
    """A mechanism configuration violates its invariants."""


class ResourceGuardError(FairDivError):
    """A brute-force enumeration would exceed the configured guard limit."""


def guard_limit() -> int:
    """Enumeration guard, overridable via FAIRDIV_GUARD_LIMIT."""
    raw = os.environ.get("FAIRDIV_GUARD_LIMIT")
    if raw is None:
        return DEFAULT_GUARD_LIMIT
    try:
        return int(raw)
    except ValueError as exc:
        raise ParseError(f"FAIRDIV_GUARD_LIMIT is not an integer: {raw!r}") from exc


def check_guard(work: int, what: str) -> None:
    limit = guard_limit()
    if work > limit:
        raise ResourceGuardError(f"{what} needs {work} enumeration steps, over the limit of {limit}")


def parse_rational(raw: object, *, where: str = "value") -> Fraction:
    """Parse an integer or an "a/b" string into an exact Fraction.

    Plain JSON integers are accepted as shorthand for denominator-1
    rationals.  Anything float-like is rejected.
    """
    if isinstance(raw, bool):
        raise ParseError(f"{where}: booleans are not rationals")
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, str):
        text = raw.strip()
        try:
            if "/" in text:
                num_text, den_text = text.split("/", 1)
                num, den = int(num_text), int(den_text)
                if den == 0:
                    raise ParseError(f"{where}: zero denominator in {raw!r}")
                return Fraction(num, den)
            return Fraction(int(text))
        except ValueError as exc:
            raise ParseError(f"{where}: not an integer or a/b fraction: {raw!r}") from exc
    raise ParseError(f"{where}: expected integer or rational string, got {type(raw).__name__}")


def format_rational(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Profile:
    """A valuation (goods) or cost (chores) matrix over indivisible or divisible items.

    ``values[i][o]`` is agent i's utility for item o when kind is "goods"
    and the cost when kind is "chores".  Entries are non-negative exact
    rationals.  The ``normalized`` flag asserts that every row sums to 1;
    it is opt-in because most constructions here work with unnormalized
    profiles.
    """

    kind: Kind
    divisibility: Divisibility
    values: tuple[tuple[Fraction, ...], ...]
    normalized: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("goods", "chores"):
            raise ParseError(f"kind must be 'goods' or 'chores', got {self.kind!r}")
        if self.divisibility not in ("indivisible", "divisible"):
            raise ParseError(f"divisibility must be 'indivisible' or 'divisible', got {self.divisibility!r}")
        if not self.values:
            raise ParseError("values: need at least one agent row")
        m = len(self.values[0])
        if m < 1:
            raise ParseError("values: need at least one item column")
        for i, row in enumerate(self.values):
            if len(row) != m:
                raise ParseError(f"values: row {i} has length {len(row)}, expected {m}")
            for o, entry in enumerate(row):
                if entry < 0:
                    raise ParseError(f"values[{i}][{o}]: negative value {entry}")
        if self.normalized:
            for i, row in enumerate(self.values):
                if sum(row) != 1:
                    raise ParseError(f"values: row {i} sums to {sum(row)}, expected 1 (normalized profile)")

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def m(self) -> int:
        return len(self.values[0])

    def value(self, agent: int, item: int) -> Fraction:
        return self.values[agent][item]

    def row(self, agent: int) -> tuple[Fraction, ...]:
        return self.values[agent]

    def total(self, agent: int) -> Fraction:
        """Value of the whole item set for one agent."""
        return sum(self.values[agent], ZERO)

    def with_kind(self, kind: Kind) -> "Profile":
        """Same matrix read under the other item nature (used by the swap reductions)."""
        if kind == self.kind:
            return self
        return Profile(kind=kind, divisibility=self.divisibility, values=self.values)

    def with_divisibility(self, divisibility: Divisibility) -> "Profile":
        if divisibility == self.divisibility:
            return self
        return Profile(kind=self.kind, divisibility=divisibility, values=self.values)

    def with_row(self, agent: int, row: Iterable[Fraction]) -> "Profile":
        """Replace one agent's report (used by manipulation search)."""
        new_row = tuple(Fraction(x) for x in row)
        if len(new_row) != self.m:
            raise ConstraintError(f"replacement row has length {len(new_row)}, expected {self.m}")
        rows = list(self.values)
        rows[agent] = new_row
        return Profile(kind=self.kind, divisibility=self.divisibility, values=tuple(rows))

    def to_json_dict(self) -> dict:
        out: dict = {
            "kind": self.kind,
            "divisibility": self.divisibility,
            "values": [[format_rational(v) for v in row] for row in self.values],
        }
        if self.normalized:
            out["normalized"] = True
        return out


def parse_instance(text: str | bytes) -> Profile:
    """Parse the JSON instance format into a Profile.

    Expected shape: ``{"kind": "goods"|"chores", "divisibility":
    "indivisible"|"divisible", "values": [[rational, ...], ...],
    "normalized": bool?}`` where each rational is an integer or an "a/b"
    string.  Errors name the offending field.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"instance is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("instance: top-level JSON value must be an object")
    for key in ("kind", "divisibility", "values"):
        if key not in data:
            raise ParseError(f"instance: missing required key {key!r}")
    kind = data["kind"]
    divisibility = data["divisibility"]
    values_raw = data["values"]
    if not isinstance(values_raw, list) or not values_raw:
        raise ParseError("values: expected a non-empty array of rows")
    rows: list[tuple[Fraction, ...]] = []
    for i, row_raw in enumerate(values_raw):
        if not isinstance(row_raw, list):
            raise ParseError(f"values[{i}]: expected an array")
        rows.append(tuple(parse_rational(v, where=f"values[{i}][{o}]") for o, v in enumerate(row_raw)))
    normalized = data.get("normalized", False)
    if not isinstance(normalized, bool):
        raise ParseError("normalized: expected a boolean")
    return Profile(kind=kind, divisibility=divisibility, values=tuple(rows), normalized=normalized)


@dataclass(frozen=True)
class IntegralAllocation:
    """A partition of the m items into one bundle per agent."""

    bundles: tuple[frozenset[int], ...]
    m: int

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for i, bundle in enumerate(self.bundles):
            for o in bundle:
                if not 0 <= o < self.m:
                    raise ParseError(f"bundle {i}: item index {o} out of range [0, {self.m})")
                if o in seen:
                    raise ParseError(f"bundle {i}: item {o} assigned twice")
                seen.add(o)
        if len(seen) != self.m:
            missing = sorted(set(range(self.m)) - seen)
            raise ParseError(f"allocation does not cover items {missing}")

    @property
    def n(self) -> int:
        return len(self.bundles)

    def owner(self, item: int) -> int:
        for i, bundle in enumerate(self.bundles):
            if item in bundle:
                return i
        raise KeyError(item)

    def to_fractional(self) -> "FractionalAllocation":
        shares = tuple(
            tuple(ONE if o in bundle else ZERO for o in range(self.m)) for bundle in self.bundles
        )
        return FractionalAllocation(shares=shares)

    def to_json_dict(self) -> dict:
        return {"type": "integral", "m": self.m, "bundles": [sorted(b) for b in self.bundles]}


@dataclass(frozen=True)
class FractionalAllocation:
    """An n x m matrix of item shares; every column sums to exactly 1."""

    shares: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        if not self.shares:
            raise ParseError("shares: need at least one agent row")
        m = len(self.shares[0])
        for i, row in enumerate(self.shares):
            if len(row) != m:
                raise ParseError(f"shares: row {i} has length {len(row)}, expected {m}")
            for o, entry in enumerate(row):
                if not 0 <= entry <= 1:
                    raise ParseError(f"shares[{i}][{o}]: {entry} outside [0, 1]")
        for o in range(m):
            col = sum(row[o] for row in self.shares)
            if col != 1:
                raise ParseError(f"shares: column {o} sums to {col}, expected exactly 1")

    @property
    def n(self) -> int:
        return len(self.shares)

    @property
    def m(self) -> int:
        return len(self.shares[0])

    def row(self, agent: int) -> tuple[Fraction, ...]:
        return self.shares[agent]

    def bundle_size(self, agent: int) -> Fraction:
        return sum(self.shares[agent], ZERO)

    def to_json_dict(self) -> dict:
        return {
            "type": "fractional",
            "shares": [[format_rational(v) for v in row] for row in self.shares],
        }


Allocation = IntegralAllocation | FractionalAllocation


def as_fractional(alloc: Allocation) -> FractionalAllocation:
    if isinstance(alloc, IntegralAllocation):
        return alloc.to_fractional()
    return alloc


@dataclass(frozen=True)
class Lottery:
    """A finite distribution over integral allocations of the same item set."""

    outcomes: tuple[tuple[Fraction, IntegralAllocation], ...]

    def __post_init__(self) -> None:
        if not self.outcomes:
            raise ParseError("lottery: need at least one outcome")
        total = ZERO
        n, m = self.outcomes[0][1].n, self.outcomes[0][1].m
        for idx, (prob, alloc) in enumerate(self.outcomes):
            if prob <= 0:
                raise ParseError(f"lottery outcome {idx}: probability {prob} not positive")
            if alloc.n != n or alloc.m != m:
                raise ParseError(f"lottery outcome {idx}: allocation shape mismatch")
            total += prob
        if total != 1:
            raise ParseError(f"lottery probabilities sum to {total}, expected exactly 1")

    @property
    def n(self) -> int:
        return self.outcomes[0][1].n

    @property
    def m(self) -> int:
        return self.outcomes[0][1].m

    def to_json_dict(self) -> dict:
        return {
            "m": self.m,
            "outcomes": [
                {"probability": format_rational(p), "bundles": [sorted(b) for b in a.bundles]}
                for p, a in self.outcomes
            ],
        }


def bundle_value(profile: Profile, agent: int, bundle: Mapping[int, Fraction] | Iterable[int]) -> Fraction:
    """Additive value of a (possibly fractional) bundle for one agent.

    ``bundle`` is either an iterable of item indices (each taken whole) or
    a mapping from item index to a fraction in [0, 1].
    """
    if not 0 <= agent < profile.n:
        raise IndexError(f"agent index {agent} out of range [0, {profile.n})")
    row = profile.values[agent]
    total = ZERO
    if isinstance(bundle, Mapping):
        for item, fraction in bundle.items():
            if not 0 <= item < profile.m:
                raise IndexError(f"item index {item} out of range [0, {profile.m})")
            if not 0 <= fraction <= 1:
                raise ConstraintError(f"bundle fraction for item {item} is {fraction}, outside [0, 1]")
            total += fraction * row[item]
        return total
    for item in bundle:
        if not 0 <= item < profile.m:
            raise IndexError(f"item index {item} out of range [0, {profile.m})")
        total += row[item]
    return total


def allocation_value(profile: Profile, agent: int, alloc: Allocation, bundle_of: int | None = None) -> Fraction:
    """Agent's value for a bundle inside an allocation (their own by default)."""
    j = agent if bundle_of is None else bundle_of
    if isinstance(alloc, IntegralAllocation):
        return bundle_value(profile, agent, alloc.bundles[j])
    row = profile.values[agent]
    return sum((share * row[o] for o, share in enumerate(alloc.shares[j])), ZERO)


def lottery_marginals(lottery: Lottery) -> FractionalAllocation:
    """Expected item shares of a lottery: shares[i][o] = Pr[o lands in bundle i]."""
    n, m = lottery.n, lottery.m
    shares = [[ZERO] * m for _ in range(n)]
    for prob, alloc in lottery.outcomes:
        for i, bundle in enumerate(alloc.bundles):
            for o in bundle:
                shares[i][o] += prob
    return FractionalAllocation(shares=tuple(tuple(row) for row in shares))


def parse_allocation(text: str | bytes, *, m: int | None = None) -> Allocation:
    """Parse the allocation JSON format (integral bundles or fractional shares)."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"allocation is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("allocation: top-level JSON value must be an object")
    kind = data.get("type")
    if kind == "integral" or ("bundles" in data and "shares" not in data):
        bundles_raw = data.get("bundles")
        if not isinstance(bundles_raw, list):
            raise ParseError("allocation: 'bundles' must be an array of arrays")
        item_count = data.get("m", m)
        if item_count is None:
            item_count = max((max(b) + 1 if b else 0 for b in bundles_raw), default=0)
        bundles = []
        for i, raw in enumerate(bundles_raw):
            if not isinstance(raw, list) or not all(isinstance(o, int) for o in raw):
                raise ParseError(f"bundles[{i}]: expected an array of item indices")
            bundles.append(frozenset(raw))
        return IntegralAllocation(bundles=tuple(bundles), m=int(item_count))
    if kind == "fractional" or "shares" in data:
        shares_raw = data.get("shares")
        if not isinstance(shares_raw, list):
            raise ParseError("allocation: 'shares' must be an array of rows")
        shares = tuple(
            tuple(parse_rational(v, where=f"shares[{i}][{o}]") for o, v in enumerate(row))
            for i, row in enumerate(shares_raw)
        )
        return FractionalAllocation(shares=shares)
    raise ParseError("allocation: expected 'bundles' (integral) or 'shares' (fractional)")


def parse_lottery(text: str | bytes) -> Lottery:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"lottery is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "outcomes" not in data:
        raise ParseError("lottery: expected an object with an 'outcomes' array")
    m = data.get("m")
    outcomes = []
    for idx, raw in enumerate(data["outcomes"]):
        if not isinstance(raw, dict) or "probability" not in raw or "bundles" not in raw:
            raise ParseError(f"lottery outcome {idx}: expected 'probability' and 'bundles'")
        prob = parse_rational(raw["probability"], where=f"outcomes[{idx}].probability")
        item_count = m
        if item_count is None:
            item_count = max((max(b) + 1 if b else 0 for b in raw["bundles"]), default=0)
        alloc = IntegralAllocation(
            bundles=tuple(frozenset(b) for b in raw["bundles"]), m=int(item_count)
        )
        outcomes.append((prob, alloc))
    return Lottery(outcomes=tuple(outcomes))


def dumps_json(payload: object) -> str:
    """Canonical JSON used by the CLI so identical runs emit identical bytes."""
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
