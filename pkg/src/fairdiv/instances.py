"""Seeded random generators for profiles, configs, and stochastic matrices.

Everything draws from a caller-supplied random.Random and produces exact
rationals, so suites are replayable from a single seed.
"""

from __future__ import annotations

from fractions import Fraction
from random import Random

from .core import Divisibility, Kind, Profile
from .picking_exchange import ExchangeDeal, PickingExchangeConfig


def random_profile(
    rng: Random,
    n: int,
    m: int,
    kind: Kind,
    divisibility: Divisibility,
    max_numerator: int = 9,
    denominators: tuple[int, ...] = (1, 2, 3, 4),
) -> Profile:
    values = tuple(
        tuple(
            Fraction(rng.randint(0, max_numerator), rng.choice(denominators))
            for _ in range(m)
        )
        for _ in range(n)
    )
    return Profile(kind=kind, divisibility=divisibility, values=values)


def random_bivalued_profile(
    rng: Random, n: int, m: int, p: Fraction, q: Fraction, kind: Kind = "chores"
) -> Profile:
    values = tuple(
        tuple(p if rng.random() < 0.5 else q for _ in range(m)) for _ in range(n)
    )
    return Profile(kind=kind, divisibility="divisible", values=values)


def _random_offers(rng: Random, block: list[int]) -> tuple[frozenset[int], ...]:
    if not block:
        return (frozenset(),)
    items = block[:]
    rng.shuffle(items)
    parts = rng.randint(1, len(items))
    cuts = sorted(rng.sample(range(1, len(items)), parts - 1)) if parts > 1 else []
    offers = []
    start = 0
    for cut in cuts + [len(items)]:
        offers.append(frozenset(items[start:cut]))
        start = cut
    if len(offers) == 1:
        offers.append(frozenset())
    return tuple(offers)


def _random_deals(rng: Random, give_pool: list[int], take_pool: list[int]) -> tuple[ExchangeDeal, ...]:
    count = rng.randint(0, min(len(give_pool), len(take_pool)))
    if count == 0:
        return ()
    gives = give_pool[:]
    takes = take_pool[:]
    rng.shuffle(gives)
    rng.shuffle(takes)
    deals = []
    g_start = t_start = 0
    for k in range(count):
        g_room = len(gives) - g_start - (count - k - 1)
        t_room = len(takes) - t_start - (count - k - 1)
        g_size = rng.randint(1, max(1, g_room))
        t_size = rng.randint(1, max(1, t_room))
        deals.append(
            ExchangeDeal(
                give=frozenset(gives[g_start : g_start + g_size]),
                take=frozenset(takes[t_start : t_start + t_size]),
            )
        )
        g_start += g_size
        t_start += t_size
    return tuple(deals)


def random_pe_config(rng: Random, m: int) -> PickingExchangeConfig:
    """A valid picking-exchange config over m items with random blocks and deals."""
    cells: list[list[int]] = [[], [], [], []]
    for o in range(m):
        cells[rng.randrange(4)].append(o)
    block1, block2, exchange1, exchange2 = cells
    return PickingExchangeConfig(
        block1=frozenset(block1),
        block2=frozenset(block2),
        exchange1=frozenset(exchange1),
        exchange2=frozenset(exchange2),
        offers1=_random_offers(rng, block1),
        offers2=_random_offers(rng, block2),
        deals=_random_deals(rng, exchange1, exchange2),
        neutral="never",
    )


def random_doubly_stochastic(
    rng: Random, size: int, terms: int | None = None
) -> tuple[tuple[Fraction, ...], ...]:
    """An exact doubly stochastic matrix: a random positive mix of permutations."""
    terms = terms if terms is not None else rng.randint(1, 2 * size)
    weights = [rng.randint(1, 9) for _ in range(terms)]
    total = sum(weights)
    matrix = [[Fraction(0)] * size for _ in range(size)]
    for weight in weights:
        perm = list(range(size))
        rng.shuffle(perm)
        share = Fraction(weight, total)
        for r in range(size):
            matrix[r][perm[r]] += share
    return tuple(tuple(row) for row in matrix)
