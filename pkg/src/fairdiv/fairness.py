"""Exact verification oracles for fairness and efficiency notions.

Every checker returns a FairnessReport whose witnesses carry exact
rational slacks; ``holds`` is true iff the witness list is empty.  The
brute-force checkers (MMS, PO) enumerate partitions outright and serve as
ground truth for everything else in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .core import (
    Allocation,
    ConstraintError,
    FractionalAllocation,
    IntegralAllocation,
    Profile,
    ZERO,
    allocation_value,
    bundle_value,
    check_guard,
    format_rational,
)


@dataclass(frozen=True)
class Witness:
    """One concrete violation: which agents/items, and by how much."""

    message: str
    agents: tuple[int, ...] = ()
    item: int | None = None
    slack: Fraction | None = None

    def to_json_dict(self) -> dict:
        out: dict = {"message": self.message, "agents": list(self.agents)}
        if self.item is not None:
            out["item"] = self.item
        if self.slack is not None:
            out["slack"] = format_rational(self.slack)
        return out


@dataclass(frozen=True)
class FairnessReport:
    notion: str
    holds: bool
    witnesses: tuple[Witness, ...] = ()
    details: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        assert self.holds == (not self.witnesses), "holds must mirror the witness list"

    def to_json_dict(self) -> dict:
        return {
            "notion": self.notion,
            "holds": self.holds,
            "witnesses": [w.to_json_dict() for w in self.witnesses],
            "details": _jsonable(self.details),
        }


def _jsonable(obj: object) -> object:
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _report(notion: str, witnesses: list[Witness], details: dict | None = None) -> FairnessReport:
    return FairnessReport(
        notion=notion, holds=not witnesses, witnesses=tuple(witnesses), details=details or {}
    )


def check_ef1(profile: Profile, alloc: IntegralAllocation) -> FairnessReport:
    """Envy-freeness up to one item for indivisible goods or chores.

    Goods: for every pair i, j with a nonempty bundle j there must be one
    good in bundle j whose removal kills i's envy.  Chores: the chore is
    removed from i's own bundle instead.  Pairs excluded by the quantifier
    guard hold unrelaxed automatically (values are non-negative).
    """
    if profile.divisibility != "indivisible":
        raise TypeError("EF1 is defined for indivisible profiles")
    witnesses: list[Witness] = []
    n = profile.n
    for i in range(n):
        own = bundle_value(profile, i, alloc.bundles[i])
        for j in range(n):
            if i == j:
                continue
            other = bundle_value(profile, i, alloc.bundles[j])
            if profile.kind == "goods":
                if not alloc.bundles[j]:
                    continue
                best = min(other - profile.value(i, o) for o in alloc.bundles[j])
                if own < best:
                    witnesses.append(
                        Witness(
                            message=f"agent {i} envies agent {j} even after removing any one good",
                            agents=(i, j),
                            slack=best - own,
                        )
                    )
            else:
                if not alloc.bundles[i]:
                    continue
                best = min(own - profile.value(i, o) for o in alloc.bundles[i])
                if best > other:
                    witnesses.append(
                        Witness(
                            message=f"agent {i} envies agent {j} even after dropping any one own chore",
                            agents=(i, j),
                            slack=best - other,
                        )
                    )
    return _report("EF1", witnesses)


def _ef_prop_value(profile: Profile, agent: int, alloc: Allocation, bundle_of: int) -> Fraction:
    return allocation_value(profile, agent, alloc, bundle_of=bundle_of)


def check_ef(profile: Profile, alloc: Allocation) -> FairnessReport:
    """Exact envy-freeness for integral or fractional allocations."""
    witnesses: list[Witness] = []
    for i in range(profile.n):
        own = _ef_prop_value(profile, i, alloc, i)
        for j in range(profile.n):
            if i == j:
                continue
            other = _ef_prop_value(profile, i, alloc, j)
            bad = other > own if profile.kind == "goods" else own > other
            if bad:
                witnesses.append(
                    Witness(
                        message=f"agent {i} strictly prefers agent {j}'s bundle",
                        agents=(i, j),
                        slack=abs(own - other),
                    )
                )
    return _report("EF", witnesses)


def check_prop(profile: Profile, alloc: Allocation) -> FairnessReport:
    """Proportionality with the scale-consistent threshold v_i(O)/n resp. c_i(O)/n."""
    witnesses: list[Witness] = []
    n = profile.n
    for i in range(n):
        own = _ef_prop_value(profile, i, alloc, i)
        threshold = profile.total(i) / n
        bad = own < threshold if profile.kind == "goods" else own > threshold
        if bad:
            witnesses.append(
                Witness(
                    message=f"agent {i} misses the 1/{n} proportional share",
                    agents=(i,),
                    slack=abs(own - threshold),
                )
            )
    return _report("PROP", witnesses)


def mms_value(profile: Profile, agent: int, parts: int) -> Fraction:
    """Exact maximin (goods) / minimax (chores) share over labeled partitions.

    Enumerates every assignment of the m items into `parts` bundles with
    symmetry pruning (a new item may open at most one fresh empty bundle).
    Guarded by parts**m against runaway instances.
    """
    if profile.divisibility != "indivisible":
        raise TypeError("MMS is defined for indivisible profiles")
    if parts < 1:
        raise ConstraintError("parts must be >= 1")
    check_guard(parts**profile.m, "MMS partition enumeration")
    row = profile.values[agent]
    m = profile.m
    goods = profile.kind == "goods"
    sums = [ZERO] * parts
    best: Fraction | None = None

    def recurse(item: int, used: int) -> None:
        nonlocal best
        if item == m:
            inner = min(sums) if goods else max(sums)
            if best is None or (inner > best if goods else inner < best):
                best = inner
            return
        cap = min(parts, used + 1)
        for part in range(cap):
            sums[part] += row[item]
            recurse(item + 1, max(used, part + 1))
            sums[part] -= row[item]

    recurse(0, 0)
    assert best is not None
    return best


def check_mms(profile: Profile, alloc: IntegralAllocation, alpha: Fraction) -> FairnessReport:
    """alpha-MMS: goods need v_i(A_i) >= alpha*MMS_i, chores need c_i(A_i) <= alpha*MMS_i."""
    witnesses: list[Witness] = []
    ratios: dict[int, Fraction | None] = {}
    n = profile.n
    for i in range(n):
        mms = mms_value(profile, i, n)
        own = bundle_value(profile, i, alloc.bundles[i])
        ratios[i] = own / mms if mms != 0 else None
        if profile.kind == "goods":
            if own < alpha * mms:
                witnesses.append(
                    Witness(
                        message=f"agent {i} below {alpha}-MMS",
                        agents=(i,),
                        slack=alpha * mms - own,
                    )
                )
        else:
            if own > alpha * mms:
                witnesses.append(
                    Witness(
                        message=f"agent {i} above {alpha}-MMS",
                        agents=(i,),
                        slack=own - alpha * mms,
                    )
                )
    return _report(f"MMS({alpha})", witnesses, details={"ratios": ratios})


def check_po_bruteforce(profile: Profile, alloc: Allocation) -> FairnessReport:
    """Pareto optimality against every integral reassignment of the items.

    For integral inputs this is the complete PO check.  A fractional input
    is compared against the same integral candidates, which can only
    refute PO (a fractional dominator may exist that no integral one
    matches); all refutations reported are sound.
    """
    n, m = profile.n, profile.m
    check_guard(n**m, "PO brute-force enumeration")
    current = [allocation_value(profile, i, alloc, bundle_of=i) for i in range(n)]
    goods = profile.kind == "goods"
    cols = [tuple(profile.value(i, o) for i in range(n)) for o in range(m)]
    assignment = [0] * m

    def dominates(values: list[Fraction]) -> bool:
        strict = False
        for i in range(n):
            if goods:
                if values[i] < current[i]:
                    return False
                strict = strict or values[i] > current[i]
            else:
                if values[i] > current[i]:
                    return False
                strict = strict or values[i] < current[i]
        return strict

    values = [ZERO] * n

    def recurse(item: int) -> list[int] | None:
        if item == m:
            return list(assignment) if dominates(values) else None
        for owner in range(n):
            assignment[item] = owner
            values[owner] += cols[item][owner]
            found = recurse(item + 1)
            values[owner] -= cols[item][owner]
            if found is not None:
                return found
        return None

    witness_assignment = recurse(0)
    witnesses: list[Witness] = []
    details: dict = {}
    if witness_assignment is not None:
        bundles = [sorted(o for o in range(m) if witness_assignment[o] == i) for i in range(n)]
        details["dominating_allocation"] = bundles
        witnesses.append(
            Witness(
                message=f"Pareto-dominating integral allocation exists: {bundles}",
                agents=tuple(range(n)),
            )
        )
    return _report("PO", witnesses, details=details)


@dataclass(frozen=True)
class EquilibriumCertificate:
    """Fisher-market certificate: item prices, agent budgets, min bang-per-buck ratios."""

    prices: tuple[Fraction, ...]
    budgets: tuple[Fraction, ...]
    min_ratios: tuple[Fraction, ...]

    def to_json_dict(self) -> dict:
        return {
            "prices": [format_rational(p) for p in self.prices],
            "budgets": [format_rational(b) for b in self.budgets],
            "min_ratios": [format_rational(g) for g in self.min_ratios],
        }


def verify_equilibrium(
    profile: Profile, alloc: FractionalAllocation, cert: EquilibriumCertificate
) -> FairnessReport:
    """Check the three market-equilibrium conditions for a chores allocation.

    1. every item fully allocated; 2. each agent spends exactly their
    budget; 3. every positive share has the agent's minimum cost-to-price
    ratio.  A holding report certifies Pareto optimality for chores by the
    first welfare theorem.
    """
    if profile.kind != "chores":
        raise ConstraintError("equilibrium certificates here price chores")
    n, m = profile.n, profile.m
    if len(cert.prices) != m or len(cert.budgets) != n or len(cert.min_ratios) != n:
        raise ConstraintError("certificate shape does not match the profile")
    if any(p <= 0 for p in cert.prices):
        raise ConstraintError("all prices must be positive (ratios undefined otherwise)")
    witnesses: list[Witness] = []
    for o in range(m):
        col = sum(alloc.shares[i][o] for i in range(n))
        if col != 1:
            witnesses.append(
                Witness(message=f"item {o} not completely allocated", item=o, slack=abs(1 - col))
            )
    for i in range(n):
        spend = sum((cert.prices[o] * alloc.shares[i][o] for o in range(m)), ZERO)
        if spend != cert.budgets[i]:
            witnesses.append(
                Witness(
                    message=f"agent {i} spends {spend}, budget is {cert.budgets[i]}",
                    agents=(i,),
                    slack=abs(spend - cert.budgets[i]),
                )
            )
    gammas = []
    for i in range(n):
        gamma = min(profile.value(i, o) / cert.prices[o] for o in range(m))
        gammas.append(gamma)
        if cert.min_ratios[i] != gamma:
            witnesses.append(
                Witness(
                    message=f"certificate min ratio for agent {i} is {cert.min_ratios[i]}, actual {gamma}",
                    agents=(i,),
                    slack=abs(cert.min_ratios[i] - gamma),
                )
            )
        for o in range(m):
            if alloc.shares[i][o] > 0:
                ratio = profile.value(i, o) / cert.prices[o]
                if ratio != gamma:
                    witnesses.append(
                        Witness(
                            message=f"agent {i} holds item {o} at ratio {ratio} > gamma {gamma}",
                            agents=(i,),
                            item=o,
                            slack=ratio - gamma,
                        )
                    )
    return _report("market-equilibrium", witnesses, details={"gammas": dict(enumerate(gammas))})


def social_welfare(profile: Profile, alloc: Allocation) -> Fraction:
    """Sum of own-bundle values across agents."""
    return sum((allocation_value(profile, i, alloc, bundle_of=i) for i in range(profile.n)), ZERO)


def optimal_social_welfare(profile: Profile) -> Fraction:
    """Per-item best assignment: max value for goods, min cost for chores."""
    pick = max if profile.kind == "goods" else min
    return sum(
        (pick(profile.value(i, o) for i in range(profile.n)) for o in range(profile.m)), ZERO
    )


def efficiency_ratio(profile: Profile, alloc: Allocation) -> Fraction:
    """Achieved-to-optimal welfare ratio, oriented so 1 is best for both kinds.

    Goods: SW(alloc)/SW*; chores: SW*/SW(alloc).  The degenerate 0/0 case
    is defined as 1 (all-zero profiles make every allocation optimal).
    """
    achieved = social_welfare(profile, alloc)
    optimal = optimal_social_welfare(profile)
    if profile.kind == "goods":
        if optimal == 0:
            return Fraction(1)
        return achieved / optimal
    if achieved == 0:
        # chores: optimal <= achieved, so both are zero here
        return Fraction(1)
    return optimal / achieved
