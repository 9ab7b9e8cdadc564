"""Truthfulness audits, the halving hard-instance family, and fairness scans.

Audits are exhaustive over finite report spaces (every bi-valued row, or
a rational value grid) with exact arithmetic, so a non-positive reported
gain certifies truthfulness relative to that space with zero tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Iterable, Iterator, Literal, Sequence

from .core import (
    Allocation,
    ConstraintError,
    Profile,
    ZERO,
    allocation_value,
    check_guard,
)
from .divisible import ChoiceSet, swap_dictatorial
from .fairness import check_ef1, mms_value, optimal_social_welfare, social_welfare
from .transforms import Mechanism


def bivalued_rows(m: int, p: Fraction, q: Fraction) -> Iterator[tuple[Fraction, ...]]:
    """Every row with entries in {p, q}: the full bi-valued report space."""
    check_guard(2**m, "bi-valued report enumeration")
    for bits in product((q, p), repeat=m):
        yield tuple(bits)


def grid_rows(m: int, values: Sequence[Fraction]) -> Iterator[tuple[Fraction, ...]]:
    """Every row over a finite value grid."""
    check_guard(len(values) ** m, "grid report enumeration")
    for row in product(tuple(values), repeat=m):
        yield tuple(row)


@dataclass(frozen=True)
class ManipulationResult:
    gain: Fraction
    witness: tuple[Fraction, ...] | None
    truthful_value: Fraction
    tie_reports: int  # deviations that exactly match the truthful value

    @property
    def profitable(self) -> bool:
        return self.gain > 0

    @property
    def strictly_truthful(self) -> bool:
        return self.gain < 0 or (self.gain <= 0 and self.tie_reports == 0)


def manipulation_search(
    mech: Mechanism | Callable[[Profile], Allocation],
    profile: Profile,
    agent: int,
    reports: Iterable[tuple[Fraction, ...]],
) -> ManipulationResult:
    """Best deviation gain for one agent over an enumerated report space.

    Gain is truthful-outcome cost minus the cheapest deviating outcome
    for chores (symmetrically for goods), so positive gain exhibits a
    profitable manipulation and gain <= 0 certifies truthfulness relative
    to the enumerated reports.  Reports equal to the true row are skipped.
    """
    run = mech if callable(mech) and not isinstance(mech, Mechanism) else mech
    true_row = profile.row(agent)
    truthful_value = allocation_value(profile, agent, run(profile), bundle_of=agent)
    goods = profile.kind == "goods"
    best: Fraction | None = None
    witness: tuple[Fraction, ...] | None = None
    ties = 0
    for row in reports:
        if tuple(row) == true_row:
            continue
        outcome = run(profile.with_row(agent, row))
        value = allocation_value(profile, agent, outcome, bundle_of=agent)
        if value == truthful_value:
            ties += 1
        better = best is None or (value > best if goods else value < best)
        if better:
            best, witness = value, tuple(row)
    if best is None:
        return ManipulationResult(
            gain=ZERO - 1, witness=None, truthful_value=truthful_value, tie_reports=0
        )
    gain = best - truthful_value if goods else truthful_value - best
    return ManipulationResult(gain=gain, witness=witness, truthful_value=truthful_value, tie_reports=ties)


@dataclass(frozen=True)
class HardFamilyConfig:
    """Halving family of two-agent divisible chore instances.

    Level i lives on the first 2^(k-i+1) items, split into mirrored
    halves priced p and q (with q/p = t); everything beyond costs zero.
    """

    k: int
    p: Fraction
    q: Fraction

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ConstraintError("depth k must be >= 1")
        if not self.p > self.q > 0:
            raise ConstraintError(f"need p > q > 0, got p={self.p}, q={self.q}")

    @property
    def t(self) -> Fraction:
        return self.q / self.p

    @property
    def m(self) -> int:
        return 2**self.k

    def level_width(self, level: int) -> int:
        return 2 ** (self.k - level + 1)


def hard_family(cfg: HardFamilyConfig) -> list[Profile]:
    """The k profiles of the family, shallowest (widest) first."""
    profiles = []
    m = cfg.m
    for level in range(1, cfg.k + 1):
        width = cfg.level_width(level)
        half = width // 2
        row1 = tuple(
            cfg.p if o < half else cfg.q if o < width else ZERO for o in range(m)
        )
        row2 = tuple(
            cfg.q if o < half else cfg.p if o < width else ZERO for o in range(m)
        )
        profiles.append(
            Profile(kind="chores", divisibility="divisible", values=(row1, row2))
        )
    return profiles


@dataclass(frozen=True)
class EfficiencyLevel:
    level: int
    width: int
    first_half_share: Fraction  # dictator 1's average pick on the p-priced half
    second_half_share: Fraction
    welfare: Fraction
    optimal_welfare: Fraction
    ratio: Fraction
    max_consistent_delta: Fraction
    dictate_holds: bool | None  # None at the first level (no predecessor)


@dataclass(frozen=True)
class EfficiencyExperiment:
    t: Fraction
    levels: tuple[EfficiencyLevel, ...]
    worst_ratio: Fraction
    max_consistent_delta: Fraction
    dictate_all_hold: bool


def efficiency_experiment(cfg: HardFamilyConfig, choice: ChoiceSet) -> EfficiencyExperiment:
    """Run a permutation-closed swap-dictatorial rule down the hard family.

    Measures the dictator's mass on each priced half, the realized
    welfare ratio, the largest efficiency ratio consistent with the
    potential inequality at each level, and checks the dictator-descent
    inequality (which follows from menu optimality alone) between
    consecutive levels.  No fixed ratio above 2t/(1+t) survives all
    levels.
    """
    if not choice.symmetric:
        raise ConstraintError("the experiment needs a permutation-closed menu")
    t = cfg.t
    rows: list[EfficiencyLevel] = []
    previous_a: Fraction | None = None
    for level, profile in enumerate(hard_family(cfg), start=1):
        width = cfg.level_width(level)
        half = width // 2
        pick = choice.choose(profile.row(0), "chores")
        a = sum((pick[o] for o in range(half)), ZERO) * Fraction(2, width)
        b = sum((pick[o] for o in range(half, width)), ZERO) * Fraction(2, width)
        allocation = swap_dictatorial(choice, profile)
        welfare = social_welfare(profile, allocation)
        optimal = optimal_social_welfare(profile)
        assert optimal == cfg.q * width, "family optimum must price every item at q"
        ratio = Fraction(1) if welfare == 0 else optimal / welfare
        delta = 2 * t / ((a - b) * (1 - t) + 1 + t)
        dictate: bool | None = None
        if previous_a is not None:
            dictate = a / (t + 1) + b * t / (t + 1) <= previous_a
        rows.append(
            EfficiencyLevel(
                level=level,
                width=width,
                first_half_share=a,
                second_half_share=b,
                welfare=welfare,
                optimal_welfare=optimal,
                ratio=ratio,
                max_consistent_delta=delta,
                dictate_holds=dictate,
            )
        )
        previous_a = a
    return EfficiencyExperiment(
        t=t,
        levels=tuple(rows),
        worst_ratio=min(r.ratio for r in rows),
        max_consistent_delta=min(r.max_consistent_delta for r in rows),
        dictate_all_hold=all(r.dictate_holds is not False for r in rows),
    )


@dataclass(frozen=True)
class ScanRecord:
    index: int
    ef1_violating_pairs: int | None
    mms_ratios: tuple[Fraction | None, ...] | None
    worst_mms_ratio: Fraction | None


@dataclass(frozen=True)
class ScanReport:
    notion: Literal["EF1", "MMS"]
    records: tuple[ScanRecord, ...]
    worst_ef1_violations: int | None
    worst_mms_ratio: Fraction | None
    clean: bool  # EF1 everywhere / every MMS ratio defined


def scan_instance(
    mech: Mechanism | Callable[[Profile], Allocation],
    notion: Literal["EF1", "MMS"],
    profile: Profile,
    index: int,
) -> ScanRecord:
    """One instance's scan record (the unit that parallelizes)."""
    run = mech if callable(mech) and not isinstance(mech, Mechanism) else mech
    outcome = run(profile)
    if notion == "EF1":
        report = check_ef1(profile, outcome)
        return ScanRecord(
            index=index,
            ef1_violating_pairs=len(report.witnesses),
            mms_ratios=None,
            worst_mms_ratio=None,
        )
    ratios: list[Fraction | None] = []
    local_worst: Fraction | None = None
    for i in range(profile.n):
        share = mms_value(profile, i, profile.n)
        own = allocation_value(profile, i, outcome, bundle_of=i)
        if share == 0:
            # goods: a zero maximin share is trivially met; chores: a zero
            # minimax share forces an all-zero row, so own must be 0 too
            assert profile.kind == "goods" or own == 0
            ratios.append(None)
            continue
        ratio = own / share
        ratios.append(ratio)
        if local_worst is None:
            local_worst = ratio
        elif profile.kind == "chores":
            local_worst = max(local_worst, ratio)
        else:
            local_worst = min(local_worst, ratio)
    return ScanRecord(
        index=index,
        ef1_violating_pairs=None,
        mms_ratios=tuple(ratios),
        worst_mms_ratio=local_worst,
    )


def combine_scan_records(
    notion: Literal["EF1", "MMS"],
    kind: str,
    records: Iterable[ScanRecord],
) -> ScanReport:
    ordered = tuple(sorted(records, key=lambda r: r.index))
    worst_ef1: int | None = None
    worst_mms: Fraction | None = None
    clean = True
    for record in ordered:
        if notion == "EF1":
            count = record.ef1_violating_pairs or 0
            worst_ef1 = count if worst_ef1 is None else max(worst_ef1, count)
            clean &= count == 0
            continue
        clean &= all(r is not None for r in record.mms_ratios or ())
        local = record.worst_mms_ratio
        if local is None:
            continue
        if worst_mms is None:
            worst_mms = local
        elif kind == "chores":
            worst_mms = max(worst_mms, local)
        else:
            worst_mms = min(worst_mms, local)
    return ScanReport(
        notion=notion,
        records=ordered,
        worst_ef1_violations=worst_ef1,
        worst_mms_ratio=worst_mms,
        clean=clean,
    )


def fairness_ratio_scan(
    mech: Mechanism | Callable[[Profile], Allocation],
    notion: Literal["EF1", "MMS"],
    instances: Iterable[Profile],
) -> ScanReport:
    """Worst-case EF1 violation count or per-agent MMS ratio across instances.

    For chores the MMS ratio is own cost over the minimax share (worst =
    largest); for goods it is own value over the maximin share (worst =
    smallest).  Agents whose maximin share is zero get ratio None when
    trivially satisfied.
    """
    profiles = list(instances)
    kind = profiles[0].kind if profiles else "chores"
    records = [scan_instance(mech, notion, profile, i) for i, profile in enumerate(profiles)]
    return combine_scan_records(notion, kind, records)
