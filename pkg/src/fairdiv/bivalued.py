"""The bi-valued mechanism pipeline for divisible items.

Given a profile whose entries all equal p or q (p > q > 0), the goods
mechanism maximizes the product of per-agent preferred-item mass by
leximin water-filling, truncates oversized bundles to the common size
m/n, redistributes the leftovers proportionally to slack, and realizes
the result as an explicit simultaneous-eating schedule.  The chores
wrapper mirrors costs through the pivot p+q and emits a Fisher-market
certificate for Pareto optimality.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .core import (
    ConstraintError,
    FairDivError,
    FractionalAllocation,
    ONE,
    ParseError,
    Profile,
    ZERO,
)
from .divisible import EatingSchedule, Segment, schedule_violations
from .fairness import EquilibriumCertificate, FairnessReport, Witness
from .graphs import MaxFlow
from .transforms import dual_profile


class ScheduleRealizationError(FairDivError):
    """The feasibility routine could not certify a valid eating schedule."""


@dataclass(frozen=True)
class BiValuedProfile:
    """A profile with every entry in {p, q}; agents with flat rows count as keen on everything.

    For goods, an agent's preferred items are the p-valued ones and an
    all-q row is re-read as all-p.  For chores it is the q-cost items,
    with all-p rows re-read as all-q.  Either rewrite leaves the agent's
    ranking of bundles unchanged (their row is constant), so every
    guarantee stated for the rewritten profile carries back.
    """

    profile: Profile
    p: Fraction
    q: Fraction

    def __post_init__(self) -> None:
        if not self.p > self.q > 0:
            raise ParseError(f"need p > q > 0, got p={self.p}, q={self.q}")
        allowed = {self.p, self.q}
        for i, row in enumerate(self.profile.values):
            for o, entry in enumerate(row):
                if entry not in allowed:
                    raise ParseError(f"values[{i}][{o}] = {entry} is neither p nor q")

    @classmethod
    def from_profile(
        cls, profile: Profile, p: Fraction | None = None, q: Fraction | None = None
    ) -> "BiValuedProfile":
        """Wrap a profile, inferring (p, q) from its distinct entries if omitted."""
        if p is None or q is None:
            distinct = sorted({v for row in profile.values for v in row})
            if len(distinct) == 1:
                value = distinct[0]
                if value <= 0:
                    raise ParseError("cannot infer p and q from an all-zero profile")
                q, p = value, 2 * value
            elif len(distinct) == 2:
                q, p = distinct
                if q <= 0:
                    raise ParseError(f"inferred q={q} must be positive")
            else:
                raise ParseError(f"profile has {len(distinct)} distinct values, expected two")
        return cls(profile=profile, p=p, q=q)

    @property
    def n(self) -> int:
        return self.profile.n

    @property
    def m(self) -> int:
        return self.profile.m

    @property
    def fair_size(self) -> Fraction:
        return Fraction(self.m, self.n)

    def _keen_value(self) -> Fraction:
        return self.p if self.profile.kind == "goods" else self.q

    def preferred_items(self, agent: int) -> tuple[int, ...]:
        keen = self._keen_value()
        items = tuple(o for o in range(self.m) if self.profile.value(agent, o) == keen)
        return items if items else tuple(range(self.m))

    def rewritten_agents(self) -> frozenset[int]:
        keen = self._keen_value()
        return frozenset(
            i for i in range(self.n) if all(v != keen for v in self.profile.values[i])
        )

    def effective_profile(self) -> Profile:
        """The profile with flat rows replaced by the keen constant."""
        rewritten = self.rewritten_agents()
        if not rewritten:
            return self.profile
        keen = self._keen_value()
        rows = tuple(
            tuple(keen for _ in row) if i in rewritten else row
            for i, row in enumerate(self.profile.values)
        )
        return Profile(kind=self.profile.kind, divisibility=self.profile.divisibility, values=rows)

    def dual(self) -> "BiValuedProfile":
        return BiValuedProfile(
            profile=dual_profile(self.profile, self.p + self.q), p=self.p, q=self.q
        )


@dataclass(frozen=True)
class WaterfillResult:
    """Product-optimal partial allocation of preferred items plus its level structure."""

    shares: tuple[tuple[Fraction, ...], ...]
    levels: tuple[Fraction, ...]
    rounds: tuple[tuple[tuple[int, ...], Fraction], ...]
    common_items: frozenset[int]


def _level_feasible(
    level: Fraction, agents: list[int], items: list[int], adjacency: dict[int, list[int]]
) -> tuple[bool, MaxFlow, dict[tuple[int, int], int]]:
    """Max-flow test: can every listed agent get `level` preferred mass at once?"""
    agent_node = {i: 1 + idx for idx, i in enumerate(agents)}
    item_node = {o: 1 + len(agents) + idx for idx, o in enumerate(items)}
    sink = 1 + len(agents) + len(items)
    network = MaxFlow(sink + 1)
    edge_ids: dict[tuple[int, int], int] = {}
    for i in agents:
        network.add_edge(0, agent_node[i], level)
    for i in agents:
        for o in adjacency[i]:
            edge_ids[(i, o)] = network.add_edge(agent_node[i], item_node[o], ONE)
    for o in items:
        network.add_edge(item_node[o], sink, ONE)
    value = network.max_flow(0, sink)
    return value == level * len(agents), network, edge_ids


def mnw_waterfill(bivalued: BiValuedProfile) -> WaterfillResult:
    """Leximin water-filling over the agent/preferred-item bipartite graph.

    Because the product objective depends only on each agent's preferred
    mass, its maximizers are exactly the leximin points: repeatedly find
    the bottleneck level (largest simultaneously feasible per-agent mass,
    located by max-flow feasibility over the rational candidate grid),
    freeze the blocked agent group at that level together with its whole
    neighborhood, and recurse on the rest.
    """
    if bivalued.profile.kind != "goods":
        raise ConstraintError("water-filling runs on the goods reading")
    n, m = bivalued.n, bivalued.m
    preferred = {i: set(bivalued.preferred_items(i)) for i in range(n)}
    covered = set().union(*preferred.values()) if preferred else set()
    common = frozenset(range(m)) - frozenset(covered)

    shares = [[ZERO] * m for _ in range(n)]
    levels: list[Fraction | None] = [None] * n
    rounds: list[tuple[tuple[int, ...], Fraction]] = []
    active = list(range(n))
    remaining = sorted(covered)

    while active:
        adjacency = {i: sorted(preferred[i] & set(remaining)) for i in active}
        candidates = sorted(
            {Fraction(a, b) for b in range(1, len(active) + 1) for a in range(len(remaining) + 1)}
        )
        lo, hi = 0, len(candidates) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            ok, _, _ = _level_feasible(candidates[mid], active, remaining, adjacency)
            if ok:
                lo = mid
            else:
                hi = mid - 1
        level = candidates[lo]
        ok, network, edge_ids = _level_feasible(level, active, remaining, adjacency)
        assert ok, "bottleneck level must be feasible"
        sink = 1 + len(active) + len(remaining)
        reach = network.can_reach_sink(sink)
        blocked = [i for idx, i in enumerate(active) if (1 + idx) not in reach]
        assert blocked, "the bottleneck group cannot be empty"
        neighborhood = sorted(set().union(*(adjacency[i] for i in blocked)))
        assert Fraction(len(neighborhood)) == level * len(blocked), (
            "blocked group is not tight: flow extraction is inconsistent"
        )
        for i in blocked:
            levels[i] = level
            for o in adjacency[i]:
                shares[i][o] = network.flow_on(edge_ids[(i, o)])
        rounds.append((tuple(sorted(blocked)), level))
        active = [i for i in active if i not in blocked]
        remaining = [o for o in remaining if o not in neighborhood]

    assert all(lv is not None for lv in levels)
    for i in range(n):
        assert sum(shares[i], ZERO) == levels[i]
    return WaterfillResult(
        shares=tuple(tuple(row) for row in shares),
        levels=tuple(levels),  # type: ignore[arg-type]
        rounds=tuple(rounds),
        common_items=common,
    )


def char_mnw_structure_check(waterfill: WaterfillResult, bivalued: BiValuedProfile) -> FairnessReport:
    """Structural sanity of the water-filling output.

    Each allocated item must be held either only by agents above the fair
    size or only by agents at or below it, and an item held above the
    line must be a non-preferred item for everyone at or below it.  A
    violation means the solver itself is broken, so the witness pinpoints
    the item.
    """
    limit = bivalued.fair_size
    witnesses: list[Witness] = []
    n, m = bivalued.n, bivalued.m
    preferred = {i: set(bivalued.preferred_items(i)) for i in range(n)}
    for o in range(m):
        if o in waterfill.common_items:
            continue
        holders = [i for i in range(n) if waterfill.shares[i][o] > 0]
        over = [i for i in holders if waterfill.levels[i] > limit]
        under = [i for i in holders if waterfill.levels[i] <= limit]
        if over and under:
            witnesses.append(
                Witness(
                    message=f"item {o} held both above and below the fair size",
                    agents=tuple(holders),
                    item=o,
                )
            )
        if over:
            for j in range(n):
                if waterfill.levels[j] <= limit and o in preferred[j]:
                    witnesses.append(
                        Witness(
                            message=f"item {o} is preferred by under-line agent {j} "
                            "yet held above the line",
                            agents=(j,),
                            item=o,
                        )
                    )
    return FairnessReport(notion="mnw-structure", holds=not witnesses, witnesses=tuple(witnesses))


@dataclass(frozen=True)
class RedistributionResult:
    allocation: FractionalAllocation
    truncated: tuple[tuple[Fraction, ...], ...]
    over_line: frozenset[int]
    leftovers: tuple[Fraction, ...]


def truncate_and_redistribute(
    waterfill: WaterfillResult, bivalued: BiValuedProfile
) -> RedistributionResult:
    """Cap every bundle at m/n and hand the freed mass to agents with slack.

    Overfull bundles drop mass in decreasing item-index order (any rule
    works; this one is deterministic).  Each agent then receives the same
    slack-proportional cut of every leftover item, which tops everyone up
    to exactly m/n.
    """
    n, m = bivalued.n, bivalued.m
    limit = bivalued.fair_size
    truncated = [list(row) for row in waterfill.shares]
    over_line = frozenset(i for i in range(n) if waterfill.levels[i] > limit)
    for i in over_line:
        excess = waterfill.levels[i] - limit
        for o in range(m - 1, -1, -1):
            if excess == 0:
                break
            cut = min(excess, truncated[i][o])
            truncated[i][o] -= cut
            excess -= cut
        assert excess == 0

    leftovers = tuple(ONE - sum(truncated[i][o] for i in range(n)) for o in range(m))
    slack = [limit - sum(truncated[i], ZERO) for i in range(n)]
    total_slack = sum(slack, ZERO)
    if total_slack == 0:
        assert all(b == 0 for b in leftovers)
        final = [list(row) for row in truncated]
    else:
        final = [
            [truncated[i][o] + leftovers[o] * slack[i] / total_slack for o in range(m)]
            for i in range(n)
        ]
    allocation = FractionalAllocation(shares=tuple(tuple(row) for row in final))
    for i in range(n):
        assert allocation.bundle_size(i) == limit
    return RedistributionResult(
        allocation=allocation,
        truncated=tuple(tuple(row) for row in truncated),
        over_line=over_line,
        leftovers=leftovers,
    )


def ps_schedule_for_target(
    bivalued: BiValuedProfile,
    target: FractionalAllocation,
    redistribution: RedistributionResult,
) -> EatingSchedule:
    """Realize the mechanism's output as a valid simultaneous-eating run.

    Each agent eats their kept preferred shares back to back from time 0
    (groups at lower water levels therefore exhaust their neighborhoods
    no later than anyone who could want those items switches), then eats
    their leftover cuts until m/n.  The result is validated before it is
    returned; an inconsistency raises instead of yielding a bad schedule.
    """
    n, m = bivalued.n, bivalued.m
    limit = bivalued.fair_size
    timelines: list[tuple[Segment, ...]] = []
    for i in range(n):
        clock = ZERO
        segments: list[Segment] = []
        for o in range(m):
            share = redistribution.truncated[i][o]
            if share > 0:
                segments.append(Segment(item=o, start=clock, end=clock + share))
                clock += share
        for o in range(m):
            extra = target.shares[i][o] - redistribution.truncated[i][o]
            if extra < 0:
                raise ScheduleRealizationError(
                    f"target gives agent {i} less of item {o} than the kept preferred share"
                )
            if extra > 0:
                segments.append(Segment(item=o, start=clock, end=clock + extra))
                clock += extra
        if clock != limit:
            raise ScheduleRealizationError(
                f"agent {i} timeline has length {clock}, expected {limit}"
            )
        timelines.append(tuple(segments))
    schedule = EatingSchedule(segments=tuple(timelines), duration=limit)
    goods_view = bivalued.effective_profile()
    if goods_view.kind != "goods":
        goods_view = goods_view.with_kind("goods")  # pragma: no cover - callers pass goods
    problems = schedule_violations(goods_view, schedule)
    if problems:
        raise ScheduleRealizationError("; ".join(problems[:5]))
    if schedule.consumption(m).shares != target.shares:
        raise ScheduleRealizationError("schedule does not aggregate back to the target")
    return schedule


@dataclass(frozen=True)
class BiValuedGoodsRun:
    allocation: FractionalAllocation
    schedule: EatingSchedule
    waterfill: WaterfillResult
    redistribution: RedistributionResult
    effective_profile: Profile


def bivalued_goods_mechanism(bivalued: BiValuedProfile) -> BiValuedGoodsRun:
    """Water-fill, truncate, redistribute, and schedule a bi-valued goods profile."""
    if bivalued.profile.kind != "goods":
        raise ConstraintError("this entry point takes the goods reading")
    if bivalued.profile.divisibility != "divisible":
        raise ConstraintError("the bi-valued mechanism allocates divisible items")
    waterfill = mnw_waterfill(bivalued)
    structure = char_mnw_structure_check(waterfill, bivalued)
    assert structure.holds, f"water-filling structure violated: {structure.witnesses}"
    redistribution = truncate_and_redistribute(waterfill, bivalued)
    schedule = ps_schedule_for_target(bivalued, redistribution.allocation, redistribution)
    return BiValuedGoodsRun(
        allocation=redistribution.allocation,
        schedule=schedule,
        waterfill=waterfill,
        redistribution=redistribution,
        effective_profile=bivalued.effective_profile(),
    )


@dataclass(frozen=True)
class BiValuedChoresRun:
    allocation: FractionalAllocation
    schedule: EatingSchedule
    certificate: EquilibriumCertificate
    effective_profile: Profile
    goods_run: BiValuedGoodsRun


def bivalued_chores_mechanism(bivalued: BiValuedProfile) -> BiValuedChoresRun:
    """Chores wrapper: mirror costs through p+q, run the goods rule, price the market.

    The returned certificate prices the effective profile (flat all-p
    rows re-read as all-q), for which every agent's bundle ranking is the
    same as under the reported costs; a verified certificate therefore
    certifies Pareto optimality for the reported profile too.
    """
    if bivalued.profile.kind != "chores":
        raise ConstraintError("this entry point takes a chores profile")
    goods_side = bivalued.dual()
    goods_run = bivalued_goods_mechanism(goods_side)
    limit = bivalued.fair_size
    n, m = bivalued.n, bivalued.m
    p, q = bivalued.p, bivalued.q

    over = goods_run.redistribution.over_line
    prices = []
    for o in range(m):
        if o in goods_run.waterfill.common_items:
            prices.append(p)
            continue
        holders = [i for i in range(n) if goods_run.waterfill.shares[i][o] > 0]
        prices.append(p if all(i in over for i in holders) else q)
    budgets = tuple(
        p * limit if i in over else q * goods_run.waterfill.levels[i] + p * (limit - goods_run.waterfill.levels[i])
        for i in range(n)
    )
    ratios = tuple(q / p if i in over else Fraction(1) for i in range(n))
    certificate = EquilibriumCertificate(prices=tuple(prices), budgets=budgets, min_ratios=ratios)

    chores_view = bivalued.effective_profile()
    problems = schedule_violations(chores_view, goods_run.schedule)
    if problems:
        raise ScheduleRealizationError("; ".join(problems[:5]))
    return BiValuedChoresRun(
        allocation=goods_run.allocation,
        schedule=goods_run.schedule,
        certificate=certificate,
        effective_profile=chores_view,
        goods_run=goods_run,
    )
