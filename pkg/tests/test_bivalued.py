from fractions import Fraction as F
from random import Random

import pytest

from oracles import grid_best_preferred_product, min_ratio_group

from fairdiv.bivalued import (
    BiValuedProfile,
    bivalued_chores_mechanism,
    bivalued_goods_mechanism,
    char_mnw_structure_check,
    mnw_waterfill,
    ps_schedule_for_target,
    truncate_and_redistribute,
)
from fairdiv.core import ParseError, Profile
from fairdiv.divisible import Segment, schedule_violations
from fairdiv.fairness import check_ef, check_po_bruteforce, check_prop, verify_equilibrium
from fairdiv.instances import random_bivalued_profile
from fairdiv.strategic import bivalued_rows, manipulation_search

P, Q = F(2), F(1)


def goods(rows):
    return Profile(
        kind="goods",
        divisibility="divisible",
        values=tuple(tuple(F(v) for v in row) for row in rows),
    )


def chores(rows):
    return Profile(
        kind="chores",
        divisibility="divisible",
        values=tuple(tuple(F(v) for v in row) for row in rows),
    )


def keen_sets(bivalued):
    return [set(bivalued.preferred_items(i)) for i in range(bivalued.n)]


class TestBiValuedProfile:
    def test_requires_two_values(self):
        with pytest.raises(ParseError):
            BiValuedProfile.from_profile(goods([[1, 2], [3, 1]]))

    def test_all_flat_rows_rewritten(self):
        bv = BiValuedProfile.from_profile(goods([[Q, Q], [P, Q]]), p=P, q=Q)
        assert bv.rewritten_agents() == frozenset({0})
        assert bv.preferred_items(0) == (0, 1)
        assert bv.effective_profile().values[0] == (P, P)

    def test_single_value_inference(self):
        bv = BiValuedProfile.from_profile(chores([[3, 3], [3, 3]]))
        assert (bv.p, bv.q) == (F(6), F(3))

    def test_dual_swaps_tiers(self):
        bv = BiValuedProfile.from_profile(chores([[P, Q], [Q, P]]), p=P, q=Q)
        dual = bv.dual()
        assert dual.profile.kind == "goods"
        assert dual.profile.values == ((Q, P), (P, Q))


class TestWaterfill:
    def test_overlapping_pair(self):
        bv = BiValuedProfile.from_profile(goods([[P, P, Q], [Q, P, P]]), p=P, q=Q)
        wf = mnw_waterfill(bv)
        assert wf.levels == (F(3, 2), F(3, 2))
        assert wf.shares[0][1] == F(1, 2) and wf.shares[1][1] == F(1, 2)

    def test_contested_single_item(self):
        bv = BiValuedProfile.from_profile(goods([[P, Q], [P, Q]]), p=P, q=Q)
        wf = mnw_waterfill(bv)
        assert wf.levels == (F(1, 2), F(1, 2))
        assert wf.common_items == frozenset({1})

    def test_disjoint_preferred_sets(self):
        bv = BiValuedProfile.from_profile(goods([[P, P, Q, Q], [Q, Q, P, P]]), p=P, q=Q)
        wf = mnw_waterfill(bv)
        assert wf.levels == (F(2), F(2))
        assert wf.shares[0] == (F(1), F(1), F(0), F(0))

    def test_levels_match_subset_oracle(self):
        rng = Random(60)
        for _ in range(80):
            n, m = rng.randint(2, 5), rng.randint(2, 7)
            profile = random_bivalued_profile(rng, n, m, P, Q, kind="chores")
            bv = BiValuedProfile.from_profile(profile, p=P, q=Q).dual()
            wf = mnw_waterfill(bv)
            preferred = {i: set(bv.preferred_items(i)) for i in range(n)}
            remaining_items = set().union(*preferred.values())
            pool = dict(preferred)
            for agents, level in wf.rounds:
                oracle_level, oracle_group = min_ratio_group(pool)
                assert oracle_level == level
                assert frozenset(agents) == oracle_group
                hood = set().union(*(pool[i] for i in agents))
                for i in agents:
                    del pool[i]
                for i in pool:
                    pool[i] = pool[i] - hood

    def test_product_beats_grid_oracle(self):
        rng = Random(61)
        cases = [(2, m) for m in (4, 5, 6)] * 3 + [(3, 3)] * 3
        for n, m in cases:
            profile = random_bivalued_profile(rng, n, m, P, Q, kind="goods")
            bv = BiValuedProfile.from_profile(profile, p=P, q=Q)
            wf = mnw_waterfill(bv)
            mine = F(1)
            for level in wf.levels:
                mine *= level
            oracle = grid_best_preferred_product(
                [list(bv.preferred_items(i)) for i in range(n)], m
            )
            assert mine >= oracle

    def test_structure_check_random_sweep(self):
        rng = Random(62)
        for _ in range(100):
            n, m = rng.randint(2, 5), rng.randint(2, 8)
            profile = random_bivalued_profile(rng, n, m, P, Q, kind="goods")
            bv = BiValuedProfile.from_profile(profile, p=P, q=Q)
            wf = mnw_waterfill(bv)
            assert char_mnw_structure_check(wf, bv).holds


class TestTruncateRedistribute:
    def test_oversubscribed_agent_drops_high_index(self):
        bv = BiValuedProfile.from_profile(goods([[P, P, P, Q], [Q, Q, Q, P]]), p=P, q=Q)
        wf = mnw_waterfill(bv)
        assert wf.levels == (F(3), F(1))
        redis = truncate_and_redistribute(wf, bv)
        assert redis.over_line == frozenset({0})
        assert redis.truncated[0] == (F(1), F(1), F(0), F(0))
        assert redis.allocation.shares[1] == (F(0), F(0), F(1), F(1))
        assert redis.allocation.bundle_size(0) == F(2)

    def test_no_truncation_no_change(self):
        bv = BiValuedProfile.from_profile(goods([[P, Q], [Q, P]]), p=P, q=Q)
        wf = mnw_waterfill(bv)
        redis = truncate_and_redistribute(wf, bv)
        assert redis.allocation.shares == ((F(1), F(0)), (F(0), F(1)))

    def test_common_item_split_by_slack(self):
        bv = BiValuedProfile.from_profile(goods([[P, Q], [P, Q]]), p=P, q=Q)
        wf = mnw_waterfill(bv)
        redis = truncate_and_redistribute(wf, bv)
        assert redis.allocation.shares[0] == (F(1, 2), F(1, 2))
        assert redis.allocation.shares[1] == (F(1, 2), F(1, 2))


class TestSchedule:
    def test_two_phase_example(self):
        bv = BiValuedProfile.from_profile(goods([[P, P, Q, Q], [Q, P, P, Q]]), p=P, q=Q)
        run = bivalued_goods_mechanism(bv)
        assert run.schedule.segments[0] == (
            Segment(item=0, start=F(0), end=F(1)),
            Segment(item=1, start=F(1), end=F(3, 2)),
            Segment(item=3, start=F(3, 2), end=F(2)),
        )
        assert run.schedule.segments[1] == (
            Segment(item=1, start=F(0), end=F(1, 2)),
            Segment(item=2, start=F(1, 2), end=F(3, 2)),
            Segment(item=3, start=F(3, 2), end=F(2)),
        )

    def test_disjoint_sets_one_segment_each(self):
        bv = BiValuedProfile.from_profile(goods([[P, Q], [Q, P]]), p=P, q=Q)
        run = bivalued_goods_mechanism(bv)
        assert run.schedule.segments[0] == (Segment(item=0, start=F(0), end=F(1)),)

    def test_inconsistent_target_raises_diagnostic(self):
        from fairdiv.bivalued import ScheduleRealizationError

        bv = BiValuedProfile.from_profile(goods([[P, Q], [Q, P]]), p=P, q=Q)
        wf = mnw_waterfill(bv)
        redis = truncate_and_redistribute(wf, bv)
        from fairdiv.core import FractionalAllocation

        wrong = FractionalAllocation(shares=((F(0), F(1)), (F(1), F(0))))
        with pytest.raises(ScheduleRealizationError):
            ps_schedule_for_target(bv, wrong, redis)

    def test_schedule_valid_and_reproduces_target(self):
        rng = Random(63)
        for _ in range(120):
            n, m = rng.randint(2, 5), rng.randint(2, 9)
            profile = random_bivalued_profile(rng, n, m, P, Q, kind="goods")
            bv = BiValuedProfile.from_profile(profile, p=P, q=Q)
            run = bivalued_goods_mechanism(bv)
            assert schedule_violations(run.effective_profile, run.schedule) == []
            assert run.schedule.consumption(m).shares == run.allocation.shares
            assert run.schedule.duration == F(m, n)


class TestGoodsMechanism:
    def test_disjoint_equal_sets_exact_fairness(self):
        bv = BiValuedProfile.from_profile(goods([[P, P, Q, Q], [Q, Q, P, P]]), p=P, q=Q)
        run = bivalued_goods_mechanism(bv)
        assert run.allocation.shares[0] == (F(1), F(1), F(0), F(0))
        assert check_ef(bv.profile, run.allocation).holds
        assert check_prop(bv.profile, run.allocation).holds

    def test_contested_item_split(self):
        bv = BiValuedProfile.from_profile(goods([[P, Q], [P, Q]]), p=P, q=Q)
        run = bivalued_goods_mechanism(bv)
        assert run.allocation.bundle_size(0) == F(1)
        assert run.allocation.bundle_size(1) == F(1)

    def test_truthful_over_all_bivalued_misreports(self):
        rng = Random(64)
        for _ in range(12):
            n, m = rng.randint(2, 3), rng.randint(2, 6)
            profile = random_bivalued_profile(rng, n, m, P, Q, kind="goods")
            bv_mech = lambda p: bivalued_goods_mechanism(
                BiValuedProfile.from_profile(p, p=P, q=Q)
            ).allocation
            agent = rng.randrange(n)
            result = manipulation_search(
                bv_mech, profile, agent, bivalued_rows(m, P, Q)
            )
            assert result.gain <= 0


class TestChoresMechanism:
    def test_mirrored_pair_identity(self):
        bv = BiValuedProfile.from_profile(chores([[Q, P], [P, Q]]), p=P, q=Q)
        run = bivalued_chores_mechanism(bv)
        assert run.allocation.shares == ((F(1), F(0)), (F(0), F(1)))
        assert run.certificate.prices == (Q, Q)
        assert run.certificate.budgets == (Q, Q)
        assert verify_equilibrium(run.effective_profile, run.allocation, run.certificate).holds

    def test_suite_properties(self):
        rng = Random(65)
        for _ in range(60):
            n, m = rng.randint(2, 5), rng.randint(2, 10)
            profile = random_bivalued_profile(rng, n, m, P, Q, kind="chores")
            bv = BiValuedProfile.from_profile(profile, p=P, q=Q)
            run = bivalued_chores_mechanism(bv)
            for i in range(n):
                assert run.allocation.bundle_size(i) == F(m, n)
            assert check_ef(profile, run.allocation).holds
            assert check_prop(profile, run.allocation).holds
            assert verify_equilibrium(
                run.effective_profile, run.allocation, run.certificate
            ).holds

    def test_certificate_implies_no_integral_dominator(self):
        rng = Random(66)
        for _ in range(25):
            n, m = 2, rng.randint(2, 6)
            profile = random_bivalued_profile(rng, n, m, P, Q, kind="chores")
            bv = BiValuedProfile.from_profile(profile, p=P, q=Q)
            run = bivalued_chores_mechanism(bv)
            assert verify_equilibrium(
                run.effective_profile, run.allocation, run.certificate
            ).holds
            assert check_po_bruteforce(run.effective_profile, run.allocation).holds

    def test_balance_value_identity(self):
        rng = Random(67)
        profile = random_bivalued_profile(rng, 3, 6, P, Q, kind="chores")
        bv = BiValuedProfile.from_profile(profile, p=P, q=Q)
        dual = bv.dual()
        for _ in range(50):
            bundle = {o: F(rng.randint(0, 4), 4) for o in range(6)}
            size = sum(bundle.values())
            for i in range(3):
                cost = sum(bundle[o] * profile.values[i][o] for o in range(6))
                value = sum(bundle[o] * dual.profile.values[i][o] for o in range(6))
                assert cost == (P + Q) * size - value

    def test_truthful_over_all_bivalued_misreports(self):
        rng = Random(68)
        for _ in range(10):
            n, m = rng.randint(2, 4), rng.randint(2, 6)
            profile = random_bivalued_profile(rng, n, m, P, Q, kind="chores")
            mech = lambda p: bivalued_chores_mechanism(
                BiValuedProfile.from_profile(p, p=P, q=Q)
            ).allocation
            agent = rng.randrange(n)
            result = manipulation_search(mech, profile, agent, bivalued_rows(m, P, Q))
            assert result.gain <= 0
