"""Divisible-item mechanisms: probabilistic serial and swap-dictatorial rules.

The simultaneous-eating simulation is event driven and exact: between two
item exhaustions every agent eats at unit speed from their current best
tier, so event times are rationals and the whole run is replayable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Literal, Sequence

from .core import (
    ConfigError,
    ConstraintError,
    FractionalAllocation,
    Kind,
    ONE,
    Profile,
    ZERO,
    check_guard,
    format_rational,
)

TieBreak = Literal["lowest-index", "proportional"]


@dataclass(frozen=True)
class Segment:
    item: int
    start: Fraction
    end: Fraction

    def __post_init__(self) -> None:
        if self.end <= self.start:
            raise ConstraintError(f"segment for item {self.item} has non-positive length")

    @property
    def length(self) -> Fraction:
        return self.end - self.start

    def to_json_dict(self) -> dict:
        return {
            "item": self.item,
            "start": format_rational(self.start),
            "end": format_rational(self.end),
        }


@dataclass(frozen=True)
class EatingSchedule:
    """Per-agent consumption timeline; agent i's segments tile [0, duration]."""

    segments: tuple[tuple[Segment, ...], ...]
    duration: Fraction

    @property
    def n(self) -> int:
        return len(self.segments)

    def consumption(self, m: int) -> FractionalAllocation:
        """Aggregate segment lengths into the realized fractional allocation."""
        shares = [[ZERO] * m for _ in range(self.n)]
        for i, timeline in enumerate(self.segments):
            for seg in timeline:
                shares[i][seg.item] += seg.length
        return FractionalAllocation(shares=tuple(tuple(row) for row in shares))

    def to_json_dict(self) -> dict:
        return {
            "duration": format_rational(self.duration),
            "agents": [[seg.to_json_dict() for seg in timeline] for timeline in self.segments],
        }


def schedule_violations(
    profile: Profile, schedule: EatingSchedule, *, require_complete: bool = True
) -> list[str]:
    """All ways a schedule fails to be a valid simultaneous-eating run.

    Checks per-agent tiling of [0, duration], per-item mass conservation,
    weakly worsening tiers along each timeline, and that nobody eats an
    item while a strictly better one still has mass left.
    """
    problems: list[str] = []
    n, m = profile.n, profile.m
    if schedule.n != n:
        return [f"schedule has {schedule.n} agent timelines, profile has {n}"]
    goods = profile.kind == "goods"

    consumed = [ZERO] * m
    # end of the last segment touching each item, valid once mass hits 1
    last_touch: list[Fraction | None] = [None] * m
    for i, timeline in enumerate(schedule.segments):
        clock = ZERO
        previous: Fraction | None = None
        for seg in timeline:
            if not 0 <= seg.item < m:
                problems.append(f"agent {i}: segment item {seg.item} out of range")
                continue
            if seg.start != clock:
                problems.append(
                    f"agent {i}: gap or overlap at t={format_rational(clock)} "
                    f"(segment starts at {format_rational(seg.start)})"
                )
            clock = seg.end
            value = profile.value(i, seg.item)
            if previous is not None:
                worse = value > previous if goods else value < previous
                if worse:
                    problems.append(
                        f"agent {i}: tier improves mid-run at item {seg.item} "
                        f"({previous} -> {value})"
                    )
            previous = value
            consumed[seg.item] += seg.length
            touch = last_touch[seg.item]
            last_touch[seg.item] = seg.end if touch is None else max(touch, seg.end)
        if clock != schedule.duration:
            problems.append(
                f"agent {i}: timeline ends at {format_rational(clock)}, "
                f"duration is {format_rational(schedule.duration)}"
            )
    for o in range(m):
        if consumed[o] > 1:
            problems.append(f"item {o}: consumed {format_rational(consumed[o])} > 1")
        if require_complete and consumed[o] != 1:
            problems.append(f"item {o}: consumed {format_rational(consumed[o])}, expected exactly 1")

    exhausted_at: list[Fraction | None] = [
        last_touch[o] if consumed[o] == 1 else None for o in range(m)
    ]
    for i, timeline in enumerate(schedule.segments):
        row = profile.row(i)
        for seg in timeline:
            mine = row[seg.item]
            for other in range(m):
                better = row[other] > mine if goods else row[other] < mine
                if not better:
                    continue
                gone = exhausted_at[other]
                if gone is None or gone > seg.start:
                    problems.append(
                        f"agent {i} eats item {seg.item} on "
                        f"[{format_rational(seg.start)}, {format_rational(seg.end)}] "
                        f"while strictly preferred item {other} is not exhausted"
                    )
                    break
    return problems


def validate_schedule(
    profile: Profile, schedule: EatingSchedule, *, require_complete: bool = True
) -> None:
    problems = schedule_violations(profile, schedule, require_complete=require_complete)
    if problems:
        raise ConstraintError("invalid eating schedule: " + "; ".join(problems[:5]))


def _merge_segments(timeline: list[Segment]) -> tuple[Segment, ...]:
    merged: list[Segment] = []
    for seg in timeline:
        if merged and merged[-1].item == seg.item and merged[-1].end == seg.start:
            merged[-1] = Segment(item=seg.item, start=merged[-1].start, end=seg.end)
        else:
            merged.append(seg)
    return tuple(merged)


def ps_run(
    profile: Profile, tiebreak: TieBreak = "lowest-index"
) -> tuple[FractionalAllocation, EatingSchedule]:
    """Simultaneous eating at unit speed; goods eat high value, chores low cost.

    With "lowest-index" ties each agent eats a single item between events;
    with "proportional" an agent splits speed equally over their tied
    favorites, and the emitted timeline serializes each split window into
    equal sub-segments (same consumption totals, still a valid run since
    tied items are interchangeable).
    """
    n, m = profile.n, profile.m
    goods = profile.kind == "goods"
    remaining: list[Fraction] = [ONE] * m
    timelines: list[list[Segment]] = [[] for _ in range(n)]
    clock = ZERO

    while any(r > 0 for r in remaining):
        available = [o for o in range(m) if remaining[o] > 0]
        menus: list[list[int]] = []
        for i in range(n):
            row = profile.row(i)
            best = max(row[o] for o in available) if goods else min(row[o] for o in available)
            tied = [o for o in available if row[o] == best]
            menus.append([min(tied)] if tiebreak == "lowest-index" else tied)
        rate = [ZERO] * m
        for menu in menus:
            share = Fraction(1, len(menu))
            for o in menu:
                rate[o] += share
        step = min(remaining[o] / rate[o] for o in available if rate[o] > 0)
        for i, menu in enumerate(menus):
            piece = step / len(menu)
            start = clock
            for o in sorted(menu):
                timelines[i].append(Segment(item=o, start=start, end=start + piece))
                start += piece
        for o in available:
            remaining[o] -= step * rate[o]
        clock += step

    schedule = EatingSchedule(
        segments=tuple(_merge_segments(t) for t in timelines), duration=clock
    )
    allocation = schedule.consumption(m)
    return allocation, schedule


class ChoiceSet:
    """Dictator menu: a set of fractional bundles one agent may claim."""

    symmetric: bool = False

    def choose(self, row: Sequence[Fraction], kind: Kind) -> tuple[Fraction, ...]:
        raise NotImplementedError


@dataclass(frozen=True)
class SwapDictatorConfig(ChoiceSet):
    """Explicit finite menu; optionally closed under item relabelings.

    The closure is materialized at construction (guarded), so membership
    queries stay trivial and the permutation-equivariance property is
    inherited by inspection.
    """

    bundles: tuple[tuple[Fraction, ...], ...]
    symmetric_closure: bool = False

    def __post_init__(self) -> None:
        if not self.bundles:
            raise ConfigError("swap-dictatorial menu is empty")
        m = len(self.bundles[0])
        for idx, bundle in enumerate(self.bundles):
            if len(bundle) != m:
                raise ConfigError(f"menu bundle {idx} has length {len(bundle)}, expected {m}")
            for entry in bundle:
                if not 0 <= entry <= 1:
                    raise ConfigError(f"menu bundle {idx} entry {entry} outside [0, 1]")
        if self.symmetric_closure:
            closure: set[tuple[Fraction, ...]] = set()
            per_bundle = 1
            for i in range(2, m + 1):
                per_bundle *= i
            check_guard(per_bundle * len(self.bundles), "menu symmetric closure")
            for bundle in self.bundles:
                for sigma in permutations(range(m)):
                    closure.add(tuple(bundle[sigma[o]] for o in range(m)))
            object.__setattr__(self, "bundles", tuple(sorted(closure)))
            object.__setattr__(self, "symmetric", True)

    def choose(self, row: Sequence[Fraction], kind: Kind) -> tuple[Fraction, ...]:
        best_idx = 0
        best_val: Fraction | None = None
        for idx, bundle in enumerate(self.bundles):
            val = sum((row[o] * bundle[o] for o in range(len(bundle))), ZERO)
            better = best_val is None or (val > best_val if kind == "goods" else val < best_val)
            if better:
                best_idx, best_val = idx, val
        return self.bundles[best_idx]


@dataclass(frozen=True)
class EqualSplitChoice(ChoiceSet):
    """Menu with the single half-of-everything bundle."""

    symmetric: bool = True

    def choose(self, row: Sequence[Fraction], kind: Kind) -> tuple[Fraction, ...]:
        return tuple(Fraction(1, 2) for _ in row)


@dataclass(frozen=True)
class HalfItemsChoice(ChoiceSet):
    """Menu of all 0/1 bundles with floor(m/2) items, kept implicit.

    The optimum is the floor(m/2) cheapest (chores) or dearest (goods)
    items, ties to lower indices, so no enumeration is ever needed; the
    menu is closed under item relabelings by construction.
    """

    symmetric: bool = True

    def choose(self, row: Sequence[Fraction], kind: Kind) -> tuple[Fraction, ...]:
        m = len(row)
        take = m // 2
        if kind == "chores":
            order = sorted(range(m), key=lambda o: (row[o], o))
        else:
            order = sorted(range(m), key=lambda o: (-row[o], o))
        chosen = set(order[:take])
        return tuple(ONE if o in chosen else ZERO for o in range(m))


def swap_dictatorial(choice: ChoiceSet, profile: Profile) -> FractionalAllocation:
    """Average of the two dictator outcomes over a fixed menu.

    Agent 1 gets (x1 + 1 - x2)/2 where each x_i is that agent's favorite
    menu bundle (lowest menu index on ties); agent 2 gets the complement.
    Truthful by construction: an agent's report only moves their own pick.
    """
    if profile.divisibility != "divisible":
        raise ConstraintError("swap-dictatorial mechanisms allocate divisible items")
    if profile.n != 2:
        raise ConstraintError("swap-dictatorial mechanisms are two-agent rules")
    x1 = choice.choose(profile.row(0), profile.kind)
    x2 = choice.choose(profile.row(1), profile.kind)
    if len(x1) != profile.m or len(x2) != profile.m:
        raise ConfigError("menu bundle length does not match the instance")
    first = tuple((x1[o] + ONE - x2[o]) / 2 for o in range(profile.m))
    second = tuple(ONE - v for v in first)
    return FractionalAllocation(shares=(first, second))
