"""Mechanism wrappers that carry guarantees between goods and chores.

Three constructions: the two-agent bundle swap for indivisible items, the
complement-redistribution reduction for divisible items with any number
of agents, and the anonymizing/item-symmetrizing average for two-agent
divisible chores.  Plus the value-pivot dual that flips a profile's kind.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Callable

from .core import (
    Allocation,
    ConstraintError,
    Divisibility,
    FractionalAllocation,
    IntegralAllocation,
    Kind,
    ONE,
    Profile,
    as_fractional,
    check_guard,
)


@dataclass(frozen=True)
class Mechanism:
    """A deterministic allocation rule with its declared domain.

    ``kind`` is the item nature the rule's guarantees are stated for;
    ``agents`` restricts the accepted agent count (None = any).  The
    tie-break seed is baked into ``run`` so a mechanism is a pure function
    of the profile.
    """

    name: str
    kind: Kind
    divisibility: Divisibility
    run: Callable[[Profile], Allocation]
    agents: int | None = None
    seed: int = 0

    def check_domain(self, profile: Profile) -> None:
        if profile.kind != self.kind:
            raise ConstraintError(
                f"mechanism {self.name!r} consumes {self.kind} profiles, got {profile.kind}"
            )
        if profile.divisibility != self.divisibility:
            raise ConstraintError(
                f"mechanism {self.name!r} needs {self.divisibility} items, got {profile.divisibility}"
            )
        if self.agents is not None and profile.n != self.agents:
            raise ConstraintError(
                f"mechanism {self.name!r} needs exactly {self.agents} agents, got {profile.n}"
            )

    def __call__(self, profile: Profile) -> Allocation:
        self.check_domain(profile)
        return self.run(profile)


def opposite(kind: Kind) -> Kind:
    return "chores" if kind == "goods" else "goods"


def dual_profile(profile: Profile, pivot: Fraction) -> Profile:
    """Entry-wise pivot-minus-value mirror; flips goods and chores.

    Applying it twice with the same pivot restores the profile.  The pivot
    must dominate every entry, otherwise a negative value would appear.
    """
    top = max(max(row) for row in profile.values)
    if pivot < top:
        raise ConstraintError(f"pivot {pivot} is below the largest entry {top}")
    values = tuple(tuple(pivot - v for v in row) for row in profile.values)
    return Profile(kind=opposite(profile.kind), divisibility=profile.divisibility, values=values)


def swap_two_agent(mech: Mechanism) -> Mechanism:
    """Two-agent reduction: run the inner rule on the same matrix, swap bundles.

    The returned mechanism serves the opposite item kind and inherits
    truthfulness and EF1 exactly; an inner alpha-MMS guarantee for goods
    becomes (2 - alpha)-MMS for chores and vice versa.
    """
    if mech.divisibility != "indivisible":
        raise ConstraintError("the bundle swap is defined for indivisible items")
    if mech.agents not in (None, 2):
        raise ConstraintError("the bundle swap needs a two-agent mechanism")

    def run(profile: Profile) -> IntegralAllocation:
        inner = mech(profile.with_kind(mech.kind))
        if not isinstance(inner, IntegralAllocation):
            raise ConstraintError(f"mechanism {mech.name!r} returned a fractional allocation")
        return IntegralAllocation(bundles=(inner.bundles[1], inner.bundles[0]), m=inner.m)

    return Mechanism(
        name=f"swap({mech.name})",
        kind=opposite(mech.kind),
        divisibility="indivisible",
        agents=2,
        seed=mech.seed,
        run=run,
    )


def divisible_chore_transform(mech: Mechanism) -> Mechanism:
    """Divisible reduction: feed costs to a goods rule, redistribute complements.

    Each agent's share becomes (1 - inner share)/(n - 1): the items an
    agent found most costly, which the goods rule piled onto them, get
    spread uniformly over everyone else.  Preserves truthfulness (also
    strict), EF, and PROP; deliberately not PO.
    """
    if mech.kind != "goods":
        raise ConstraintError("the divisible transform wraps a goods mechanism")
    if mech.divisibility != "divisible":
        raise ConstraintError("the divisible transform needs divisible items")

    def run(profile: Profile) -> FractionalAllocation:
        if profile.n < 2:
            raise ConstraintError("need at least two agents")
        inner = as_fractional(mech(profile.with_kind("goods")))
        n = inner.n
        shares = tuple(
            tuple((ONE - inner.shares[i][o]) / (n - 1) for o in range(inner.m)) for i in range(n)
        )
        return FractionalAllocation(shares=shares)

    return Mechanism(
        name=f"divisible-complement({mech.name})",
        kind="chores",
        divisibility="divisible",
        agents=mech.agents,
        seed=mech.seed,
        run=run,
    )


def _permute_row(row: tuple[Fraction, ...], sigma: tuple[int, ...]) -> tuple[Fraction, ...]:
    # result[sigma[o]] = row[o]
    out: list[Fraction] = [row[0]] * len(row)
    for o, value in enumerate(row):
        out[sigma[o]] = value
    return tuple(out)


def symmetrize(mech: Mechanism, max_items: int = 6) -> Mechanism:
    """Average a two-agent divisible chores mechanism over agent and item relabelings.

    The result is anonymous and item-symmetric, stays truthful if the
    inner mechanism is, and its efficiency ratio on any finite instance
    set is no worse than the inner mechanism's on the permutation closure
    of that set.  Costs 2*m! inner evaluations, hence the item guard.
    """
    if mech.kind != "chores" or mech.divisibility != "divisible":
        raise ConstraintError("symmetrization is set up for divisible chores mechanisms")
    if mech.agents not in (None, 2):
        raise ConstraintError("symmetrization needs a two-agent mechanism")

    def run(profile: Profile) -> FractionalAllocation:
        m = profile.m
        if m > max_items:
            raise ConstraintError(f"symmetrize guard: m={m} exceeds {max_items}")
        check_guard(2 * _factorial(m), "symmetrization over item permutations")
        c1, c2 = profile.values
        acc1 = [Fraction(0)] * m
        acc2 = [Fraction(0)] * m
        count = 0
        for sigma in permutations(range(m)):
            c1s, c2s = _permute_row(c1, sigma), _permute_row(c2, sigma)
            straight = as_fractional(
                mech(Profile(kind="chores", divisibility="divisible", values=(c1s, c2s)))
            )
            swapped = as_fractional(
                mech(Profile(kind="chores", divisibility="divisible", values=(c2s, c1s)))
            )
            for o in range(m):
                acc1[o] += straight.shares[0][sigma[o]] + swapped.shares[1][sigma[o]]
                acc2[o] += straight.shares[1][sigma[o]] + swapped.shares[0][sigma[o]]
            count += 2
        shares = (
            tuple(v / count for v in acc1),
            tuple(v / count for v in acc2),
        )
        return FractionalAllocation(shares=shares)

    return Mechanism(
        name=f"symmetrize({mech.name})",
        kind="chores",
        divisibility="divisible",
        agents=2,
        seed=mech.seed,
        run=run,
    )


def _factorial(m: int) -> int:
    out = 1
    for i in range(2, m + 1):
        out *= i
    return out
