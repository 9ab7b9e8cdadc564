"""Two-agent picking-exchange mechanisms and their goods/chores dualization.

A config partitions the items into two picking blocks (each agent selects
their best offer from a menu over their own block, the rest of the block
goes to the other agent) and two exchange blocks traded through a fixed
list of deals: a deal executes iff it strictly helps agent 1 and strictly
hurts agent 2 in the kind-appropriate direction, with a policy knob for
the indifferent cases.  Every such mechanism is truthful by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from random import Random
from typing import Literal

from .core import (
    ConfigError,
    ConstraintError,
    IntegralAllocation,
    ParseError,
    Profile,
    bundle_value,
)
from .transforms import Mechanism

NeutralPolicy = Literal["never", "always", "seeded"]
DealVerdict = Literal["favorable", "unfavorable", "neutral"]


@dataclass(frozen=True)
class ExchangeDeal:
    give: frozenset[int]  # subset of agent 1's exchange block
    take: frozenset[int]  # subset of agent 2's exchange block

    def to_json_dict(self) -> dict:
        return {"give": sorted(self.give), "take": sorted(self.take)}


@dataclass(frozen=True)
class PickingExchangeConfig:
    block1: frozenset[int]
    block2: frozenset[int]
    exchange1: frozenset[int]
    exchange2: frozenset[int]
    offers1: tuple[frozenset[int], ...]
    offers2: tuple[frozenset[int], ...]
    deals: tuple[ExchangeDeal, ...]
    neutral: NeutralPolicy = "never"
    seed: int = 0

    def to_json_dict(self) -> dict:
        return {
            "block1": sorted(self.block1),
            "block2": sorted(self.block2),
            "exchange1": sorted(self.exchange1),
            "exchange2": sorted(self.exchange2),
            "offers1": [sorted(s) for s in self.offers1],
            "offers2": [sorted(s) for s in self.offers2],
            "deals": [d.to_json_dict() for d in self.deals],
            "neutral": self.neutral,
            "seed": self.seed,
        }


def parse_pe_config(text: str | bytes) -> PickingExchangeConfig:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"picking-exchange config is not valid JSON: {exc}") from exc
    try:
        deals = tuple(
            ExchangeDeal(give=frozenset(d["give"]), take=frozenset(d["take"]))
            for d in data.get("deals", [])
        )
        return PickingExchangeConfig(
            block1=frozenset(data["block1"]),
            block2=frozenset(data["block2"]),
            exchange1=frozenset(data["exchange1"]),
            exchange2=frozenset(data["exchange2"]),
            offers1=tuple(frozenset(s) for s in data["offers1"]),
            offers2=tuple(frozenset(s) for s in data["offers2"]),
            deals=deals,
            neutral=data.get("neutral", "never"),
            seed=data.get("seed", 0),
        )
    except KeyError as exc:
        raise ParseError(f"picking-exchange config missing key {exc}") from exc


def _offer_violations(offers: tuple[frozenset[int], ...], block: frozenset[int], tag: str) -> list[str]:
    problems = []
    if not offers:
        problems.append(f"{tag}: offer menu is empty")
        return problems
    union: set[int] = set()
    for idx, offer in enumerate(offers):
        if not offer <= block:
            problems.append(f"{tag}[{idx}]: offer leaves its picking block")
        union |= offer
    if union != set(block):
        problems.append(f"{tag}: offers do not exactly cover the block")
    shared = set(offers[0])
    for offer in offers[1:]:
        shared &= offer
    if shared:
        problems.append(f"{tag}: items {sorted(shared)} appear in every offer")
    return problems


def validate_config(cfg: PickingExchangeConfig, m: int) -> list[str]:
    """Every invariant violation in the config, as data (empty list = valid)."""
    problems: list[str] = []
    cells = [cfg.block1, cfg.block2, cfg.exchange1, cfg.exchange2]
    seen: set[int] = set()
    for cell in cells:
        for o in cell:
            if not 0 <= o < m:
                problems.append(f"item {o} out of range [0, {m})")
            if o in seen:
                problems.append(f"item {o} appears in two partition cells")
            seen.add(o)
    if seen != set(range(m)):
        problems.append(f"partition misses items {sorted(set(range(m)) - seen)}")
    problems += _offer_violations(cfg.offers1, cfg.block1, "offers1")
    problems += _offer_violations(cfg.offers2, cfg.block2, "offers2")
    used_give: set[int] = set()
    used_take: set[int] = set()
    for idx, deal in enumerate(cfg.deals):
        if not deal.give or not deal.take:
            problems.append(f"deal {idx}: sides must be nonempty")
        if not deal.give <= cfg.exchange1:
            problems.append(f"deal {idx}: give side leaves exchange block 1")
        if not deal.take <= cfg.exchange2:
            problems.append(f"deal {idx}: take side leaves exchange block 2")
        if deal.give & used_give:
            problems.append(f"deal {idx}: give side overlaps an earlier deal")
        if deal.take & used_take:
            problems.append(f"deal {idx}: take side overlaps an earlier deal")
        used_give |= deal.give
        used_take |= deal.take
    if cfg.neutral not in ("never", "always", "seeded"):
        problems.append(f"unknown neutral policy {cfg.neutral!r}")
    return problems


def classify_deal(profile: Profile, deal: ExchangeDeal) -> DealVerdict:
    """Whether trading agent 1's give-side for the take-side helps both directions.

    Goods: favorable iff agent 1 strictly gains and agent 2 strictly
    loses value; unfavorable iff agent 1 strictly loses or agent 2
    strictly gains; neutral otherwise.  Chores flip the comparisons.
    """
    if profile.n != 2:
        raise ConstraintError("exchange deals are a two-agent construction")
    v1_give = bundle_value(profile, 0, deal.give)
    v1_take = bundle_value(profile, 0, deal.take)
    v2_give = bundle_value(profile, 1, deal.give)
    v2_take = bundle_value(profile, 1, deal.take)
    if profile.kind == "goods":
        if v1_take > v1_give and v2_take < v2_give:
            return "favorable"
        if v1_take < v1_give or v2_take > v2_give:
            return "unfavorable"
    else:
        if v1_take < v1_give and v2_take > v2_give:
            return "favorable"
        if v1_take > v1_give or v2_take < v2_give:
            return "unfavorable"
    return "neutral"


def _choose_offer(profile: Profile, agent: int, offers: tuple[frozenset[int], ...]) -> frozenset[int]:
    best_idx = 0
    best_val = None
    for idx, offer in enumerate(offers):
        val = bundle_value(profile, agent, offer)
        better = best_val is None or (val > best_val if profile.kind == "goods" else val < best_val)
        if better:
            best_idx, best_val = idx, val
    return offers[best_idx]


def run_picking_exchange(cfg: PickingExchangeConfig, profile: Profile) -> IntegralAllocation:
    """Execute the config: offer picks, block complements, and deal execution.

    Agent i takes their best offer from their own block (lowest offer
    index on ties) plus whatever the other agent's pick left behind in
    the opposite block; favorable deals execute, unfavorable ones never
    do, and neutral ones follow the configured policy.  Agent 2 receives
    the complement, so the output always partitions the items.
    """
    if profile.n != 2:
        raise ConstraintError("picking-exchange mechanisms are two-agent rules")
    if profile.divisibility != "indivisible":
        raise ConstraintError("picking-exchange mechanisms allocate indivisible items")
    problems = validate_config(cfg, profile.m)
    if problems:
        raise ConfigError("invalid picking-exchange config: " + "; ".join(problems))
    pick1 = _choose_offer(profile, 0, cfg.offers1)
    pick2 = _choose_offer(profile, 1, cfg.offers2)
    rng = Random(cfg.seed) if cfg.neutral == "seeded" else None
    executed: set[int] = set()
    for idx, deal in enumerate(cfg.deals):
        verdict = classify_deal(profile, deal)
        if verdict == "favorable":
            executed.add(idx)
        elif verdict == "neutral":
            if cfg.neutral == "always":
                executed.add(idx)
            elif rng is not None and rng.getrandbits(1):
                executed.add(idx)
    side1 = set(cfg.exchange1)
    for idx in executed:
        side1 -= cfg.deals[idx].give
        side1 |= cfg.deals[idx].take
    bundle1 = frozenset(pick1 | (cfg.block2 - pick2) | side1)
    bundle2 = frozenset(range(profile.m)) - bundle1
    return IntegralAllocation(bundles=(bundle1, bundle2), m=profile.m)


def dualize_config(cfg: PickingExchangeConfig) -> PickingExchangeConfig:
    """The config whose chores run equals the bundle swap of this config's goods run.

    Offers become their in-block complements, the exchange blocks swap
    roles, and every deal reverses direction.  Dualizing twice returns
    the original config up to offer order.
    """
    return PickingExchangeConfig(
        block1=cfg.block1,
        block2=cfg.block2,
        exchange1=cfg.exchange2,
        exchange2=cfg.exchange1,
        offers1=tuple(cfg.block1 - offer for offer in cfg.offers1),
        offers2=tuple(cfg.block2 - offer for offer in cfg.offers2),
        deals=tuple(ExchangeDeal(give=d.take, take=d.give) for d in cfg.deals),
        neutral=cfg.neutral,
        seed=cfg.seed,
    )


def picking_exchange_mechanism(cfg: PickingExchangeConfig, kind: str, name: str | None = None) -> Mechanism:
    """Wrap a config as a Mechanism for the given item kind."""
    return Mechanism(
        name=name or f"picking-exchange[{kind}]",
        kind=kind,  # type: ignore[arg-type]
        divisibility="indivisible",
        agents=2,
        seed=cfg.seed,
        run=lambda profile: run_picking_exchange(cfg, profile),
    )
