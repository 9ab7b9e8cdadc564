"""Named built-in mechanisms for the command line and the experiment harness."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from .bivalued import BiValuedProfile, bivalued_chores_mechanism, bivalued_goods_mechanism
from .core import (
    ConstraintError,
    FractionalAllocation,
    IntegralAllocation,
    Kind,
    ParseError,
    Profile,
    parse_allocation,
    parse_rational,
)
from .divisible import (
    ChoiceSet,
    EqualSplitChoice,
    HalfItemsChoice,
    SwapDictatorConfig,
    ps_run,
    swap_dictatorial,
)
from .picking_exchange import parse_pe_config, picking_exchange_mechanism
from .transforms import Mechanism

import json

MECHANISM_NAMES = (
    "uniform",
    "ps",
    "ps-proportional",
    "all-to-one",
    "bivalued",
    "sd:equal-split",
    "sd:half-items",
    "sd:<config.json>",
    "pe:<config.json>",
    "fixed:<allocation.json>",
)


def parse_sd_config(text: str | bytes) -> SwapDictatorConfig:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"swap-dictatorial config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "bundles" not in data:
        raise ParseError("swap-dictatorial config needs a 'bundles' array")
    bundles = tuple(
        tuple(parse_rational(v, where=f"bundles[{i}][{o}]") for o, v in enumerate(row))
        for i, row in enumerate(data["bundles"])
    )
    return SwapDictatorConfig(
        bundles=bundles, symmetric_closure=bool(data.get("symmetric_closure", False))
    )


def named_choice_set(name: str) -> ChoiceSet:
    if name == "equal-split":
        return EqualSplitChoice()
    if name == "half-items":
        return HalfItemsChoice()
    path = Path(name)
    if path.exists():
        return parse_sd_config(path.read_text())
    raise ParseError(f"unknown dictator menu {name!r} (not a builtin, not a file)")


def _uniform(profile: Profile) -> FractionalAllocation:
    share = Fraction(1, profile.n)
    shares = tuple(tuple(share for _ in range(profile.m)) for _ in range(profile.n))
    return FractionalAllocation(shares=shares)


def _all_to_one(profile: Profile) -> IntegralAllocation:
    bundles = [frozenset(range(profile.m))] + [frozenset()] * (profile.n - 1)
    return IntegralAllocation(bundles=tuple(bundles), m=profile.m)


def get_mechanism(name: str, kind: Kind, seed: int = 0, divisibility: str = "divisible") -> Mechanism:
    """Look up a built-in mechanism bound to the given item kind.

    Prefixed names load configs from files: ``pe:cfg.json`` (two-agent
    picking-exchange), ``sd:cfg.json`` / ``sd:equal-split`` /
    ``sd:half-items`` (swap-dictatorial menus), and ``fixed:alloc.json``
    (a constant mechanism, mostly for regression instances; the
    ``divisibility`` argument sets its domain).
    """
    if name == "uniform":
        return Mechanism(name=name, kind=kind, divisibility="divisible", run=_uniform, seed=seed)
    if name == "ps":
        return Mechanism(
            name=name,
            kind=kind,
            divisibility="divisible",
            run=lambda p: ps_run(p, "lowest-index")[0],
            seed=seed,
        )
    if name == "ps-proportional":
        return Mechanism(
            name=name,
            kind=kind,
            divisibility="divisible",
            run=lambda p: ps_run(p, "proportional")[0],
            seed=seed,
        )
    if name == "all-to-one":
        return Mechanism(
            name=name, kind=kind, divisibility="indivisible", run=_all_to_one, seed=seed
        )
    if name == "bivalued":
        def run_bivalued(profile: Profile) -> FractionalAllocation:
            wrapped = BiValuedProfile.from_profile(profile)
            if profile.kind == "chores":
                return bivalued_chores_mechanism(wrapped).allocation
            return bivalued_goods_mechanism(wrapped).allocation

        return Mechanism(
            name=name, kind=kind, divisibility="divisible", run=run_bivalued, seed=seed
        )
    if name.startswith("sd:"):
        choice = named_choice_set(name[3:])
        return Mechanism(
            name=name,
            kind=kind,
            divisibility="divisible",
            agents=2,
            run=lambda p: swap_dictatorial(choice, p),
            seed=seed,
        )
    if name.startswith("pe:"):
        cfg = parse_pe_config(Path(name[3:]).read_text())
        return picking_exchange_mechanism(cfg, kind, name=name)
    if name.startswith("fixed:"):
        payload = Path(name[6:]).read_text()

        def run_fixed(profile: Profile):
            alloc = parse_allocation(payload, m=profile.m)
            if alloc.n != profile.n:
                raise ConstraintError("fixed allocation has the wrong number of agents")
            return alloc

        return Mechanism(
            name=name, kind=kind, divisibility=divisibility, run=run_fixed, seed=seed  # type: ignore[arg-type]
        )
    raise ParseError(f"unknown mechanism {name!r}; builtins: {', '.join(MECHANISM_NAMES)}")
