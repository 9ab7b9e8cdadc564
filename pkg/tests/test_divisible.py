from fractions import Fraction as F
from itertools import permutations
from random import Random

import pytest

from fairdiv.core import ConfigError, ConstraintError, Profile
from fairdiv.divisible import (
    EqualSplitChoice,
    HalfItemsChoice,
    Segment,
    SwapDictatorConfig,
    EatingSchedule,
    ps_run,
    schedule_violations,
    swap_dictatorial,
)
from fairdiv.fairness import check_ef, check_prop, social_welfare, efficiency_ratio
from fairdiv.instances import random_profile
from fairdiv.strategic import grid_rows, manipulation_search


def chores(rows):
    return Profile(
        kind="chores",
        divisibility="divisible",
        values=tuple(tuple(F(v) for v in row) for row in rows),
    )


class TestPsRun:
    def test_unique_favorites(self):
        alloc, sched = ps_run(chores([[1, 3], [3, 1]]))
        assert alloc.shares == ((F(1), F(0)), (F(0), F(1)))
        assert sched.segments[0] == (Segment(item=0, start=F(0), end=F(1)),)

    def test_single_item_forced_split(self):
        alloc, sched = ps_run(chores([[5], [2]]))
        assert alloc.shares == ((F(1, 2),), (F(1, 2),))
        assert sched.duration == F(1, 2)

    def test_tied_costs_lowest_index(self):
        alloc, sched = ps_run(chores([[1, 1], [1, 1]]), "lowest-index")
        assert all(v == F(1, 2) for row in alloc.shares for v in row)
        assert sched.segments[0][0].item == 0
        assert sched.segments[0][0].end == F(1, 2)

    def test_invariants_random_sweep(self):
        rng = Random(42)
        for _ in range(150):
            kind = rng.choice(["goods", "chores"])
            policy = rng.choice(["lowest-index", "proportional"])
            n, m = rng.randint(2, 5), rng.randint(1, 7)
            profile = random_profile(rng, n, m, kind, "divisible")
            alloc, sched = ps_run(profile, policy)
            assert schedule_violations(profile, sched) == []
            assert sched.duration == F(m, n)
            for i in range(n):
                assert alloc.bundle_size(i) == F(m, n)
            assert sched.consumption(m).shares == alloc.shares

    def test_always_envy_free(self):
        rng = Random(43)
        for _ in range(100):
            kind = rng.choice(["goods", "chores"])
            policy = rng.choice(["lowest-index", "proportional"])
            profile = random_profile(rng, rng.randint(2, 4), rng.randint(1, 6), kind, "divisible")
            alloc, _ = ps_run(profile, policy)
            assert check_ef(profile, alloc).holds
            assert check_prop(profile, alloc).holds


class TestScheduleValidation:
    def test_gap_detected(self):
        profile = chores([[1, 1], [1, 1]])
        bad = EatingSchedule(
            segments=(
                (Segment(item=0, start=F(0), end=F(1, 2)), Segment(item=1, start=F(3, 4), end=F(5, 4))),
                (Segment(item=0, start=F(0), end=F(1, 2)), Segment(item=1, start=F(1, 2), end=F(1))),
            ),
            duration=F(1),
        )
        assert any("gap" in p for p in schedule_violations(profile, bad))

    def test_tier_regression_detected(self):
        profile = chores([[1, 2], [2, 1]])
        bad = EatingSchedule(
            segments=(
                (Segment(item=1, start=F(0), end=F(1)),),
                (Segment(item=0, start=F(0), end=F(1)),),
            ),
            duration=F(1),
        )
        problems = schedule_violations(profile, bad)
        assert any("preferred" in p for p in problems)

    def test_overconsumption_detected(self):
        profile = chores([[1, 2], [1, 2]])
        bad = EatingSchedule(
            segments=(
                (Segment(item=0, start=F(0), end=F(1)),),
                (Segment(item=0, start=F(0), end=F(1)),),
            ),
            duration=F(1),
        )
        assert any("> 1" in p for p in schedule_violations(profile, bad))


class TestSwapDictatorial:
    def test_singleton_menu_gives_uniform(self):
        cfg = SwapDictatorConfig(bundles=((F(1, 2), F(1, 2)),))
        rng = Random(44)
        for _ in range(20):
            profile = random_profile(rng, 2, 2, "chores", "divisible")
            out = swap_dictatorial(cfg, profile)
            assert all(v == F(1, 2) for row in out.shares for v in row)

    def test_half_bundles_on_mirrored_costs(self):
        cfg = SwapDictatorConfig(bundles=((F(1), F(0)), (F(0), F(1))))
        p, q = F(7), F(3)
        profile = chores([[p, q], [q, p]])
        out = swap_dictatorial(cfg, profile)
        assert out.shares == ((F(0), F(1)), (F(1), F(0)))
        assert social_welfare(profile, out) == 2 * q
        assert efficiency_ratio(profile, out) == 1

    def test_truthful_on_grid(self):
        rng = Random(45)
        grid = [F(0), F(1), F(2)]
        for _ in range(6):
            m = rng.randint(1, 3)
            bundles = tuple(
                tuple(F(rng.randint(0, 2), 2) for _ in range(m)) for _ in range(rng.randint(1, 4))
            )
            cfg = SwapDictatorConfig(bundles=bundles)
            for kind in ("goods", "chores"):
                profile = random_profile(rng, 2, m, kind, "divisible", max_numerator=2, denominators=(1,))
                mech = lambda p: swap_dictatorial(cfg, p)
                for agent in range(2):
                    result = manipulation_search(mech, profile, agent, grid_rows(m, grid))
                    assert result.gain <= 0

    def test_symmetric_closure_equivariance(self):
        # equivariance is only forced where the dictators' optima are
        # unique; a tie whose optimum orbit has no fixed point admits no
        # equivariant selection at all
        base = SwapDictatorConfig(
            bundles=((F(1), F(0), F(1, 2)),), symmetric_closure=True
        )
        rng = Random(46)
        checked = 0
        while checked < 10:
            profile = random_profile(rng, 2, 3, "chores", "divisible")
            if any(_optimum_ties(base, profile.row(i)) for i in range(2)):
                continue
            checked += 1
            out = swap_dictatorial(base, profile)
            for sigma in permutations(range(3)):
                permuted_rows = tuple(
                    tuple(row[sigma.index(o)] for o in range(3)) for row in profile.values
                )
                permuted = Profile(kind="chores", divisibility="divisible", values=permuted_rows)
                out_p = swap_dictatorial(base, permuted)
                for i in range(2):
                    for o in range(3):
                        assert out_p.shares[i][sigma[o]] == out.shares[i][o]

    def test_half_items_choice_matches_explicit_menu(self):
        rng = Random(47)
        implicit = HalfItemsChoice()
        for _ in range(30):
            m = rng.randint(2, 5)
            row = tuple(F(rng.randint(0, 5)) for _ in range(m))
            take = m // 2
            explicit = SwapDictatorConfig(
                bundles=tuple(
                    tuple(F(1) if o in chosen else F(0) for o in range(m))
                    for chosen in _combinations(range(m), take)
                )
            )
            for kind in ("goods", "chores"):
                got = implicit.choose(row, kind)
                want = explicit.choose(row, kind)
                assert sum(got[o] * row[o] for o in range(m)) == sum(
                    want[o] * row[o] for o in range(m)
                )

    def test_empty_menu_rejected(self):
        with pytest.raises(ConfigError):
            SwapDictatorConfig(bundles=())

    def test_needs_two_agents(self):
        cfg = EqualSplitChoice()
        profile = Profile(
            kind="chores",
            divisibility="divisible",
            values=tuple(tuple(F(1) for _ in range(2)) for _ in range(3)),
        )
        with pytest.raises(ConstraintError):
            swap_dictatorial(cfg, profile)


def _combinations(pool, size):
    from itertools import combinations

    return [frozenset(c) for c in combinations(pool, size)]


def _optimum_ties(cfg, row):
    costs = [sum(b[o] * row[o] for o in range(len(row))) for b in cfg.bundles]
    return costs.count(min(costs)) > 1
