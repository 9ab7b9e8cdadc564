from fractions import Fraction as F
from random import Random

import pytest

from fairdiv.core import ConstraintError, IntegralAllocation, Profile
from fairdiv.divisible import EqualSplitChoice, HalfItemsChoice, SwapDictatorConfig
from fairdiv.fairness import optimal_social_welfare
from fairdiv.instances import random_pe_config, random_profile
from fairdiv.picking_exchange import picking_exchange_mechanism
from fairdiv.strategic import (
    HardFamilyConfig,
    efficiency_experiment,
    fairness_ratio_scan,
    grid_rows,
    hard_family,
    manipulation_search,
)
from fairdiv.registry import get_mechanism


def chores(rows, divisibility="indivisible"):
    return Profile(
        kind="chores",
        divisibility=divisibility,
        values=tuple(tuple(F(v) for v in row) for row in rows),
    )


class TestManipulationSearch:
    def test_picking_exchange_never_profitable(self):
        rng = Random(80)
        grid = [F(v) for v in range(4)]
        for _ in range(3):
            m = rng.randint(2, 4)
            cfg = random_pe_config(rng, m)
            mech = picking_exchange_mechanism(cfg, "chores")
            profile = random_profile(rng, 2, m, "chores", "indivisible", max_numerator=3, denominators=(1,))
            for agent in range(2):
                assert manipulation_search(mech, profile, agent, grid_rows(m, grid)).gain <= 0

    def test_lowest_report_mechanism_is_manipulable(self):
        def lowest_reporter(profile):
            mine = [
                o
                for o in range(profile.m)
                if profile.values[0][o] < profile.values[1][o]
            ]
            bundles = (frozenset(mine), frozenset(range(profile.m)) - frozenset(mine))
            return IntegralAllocation(bundles=bundles, m=profile.m)

        profile = chores([[1, 5], [3, 3]])
        grid = [F(v) for v in range(11)]
        result = manipulation_search(lowest_reporter, profile, 0, grid_rows(2, grid))
        assert result.profitable
        assert result.witness is not None

    def test_strict_truthfulness_detection(self):
        # dictator with a singleton menu: every report gives the same
        # outcome, so all misreports tie and the rule is not strict
        cfg = SwapDictatorConfig(bundles=((F(1, 2), F(1, 2)),))
        from fairdiv.divisible import swap_dictatorial

        profile = chores([[1, 2], [2, 1]], divisibility="divisible")
        grid = [F(v) for v in range(3)]
        result = manipulation_search(
            lambda p: swap_dictatorial(cfg, p), profile, 0, grid_rows(2, grid)
        )
        assert result.gain == 0 and result.tie_reports > 0
        assert not result.strictly_truthful


class TestHardFamily:
    def test_depth_one(self):
        cfg = HardFamilyConfig(k=1, p=F(2), q=F(1))
        (profile,) = hard_family(cfg)
        assert profile.values == ((F(2), F(1)), (F(1), F(2)))

    def test_optimal_welfare_per_level(self):
        cfg = HardFamilyConfig(k=3, p=F(10), q=F(1))
        for level, profile in enumerate(hard_family(cfg), start=1):
            assert optimal_social_welfare(profile) == cfg.q * cfg.level_width(level)

    def test_deeper_levels_zero_out_tail(self):
        cfg = HardFamilyConfig(k=2, p=F(3), q=F(2))
        profiles = hard_family(cfg)
        assert profiles[1].values[0] == (F(3), F(2), F(0), F(0))
        assert profiles[1].values[1] == (F(2), F(3), F(0), F(0))


class TestEfficiencyExperiment:
    def test_equal_split_flat_ratios(self):
        cfg = HardFamilyConfig(k=4, p=F(10), q=F(1))
        experiment = efficiency_experiment(cfg, EqualSplitChoice())
        bound = 2 * cfg.t / (1 + cfg.t)
        for level in experiment.levels:
            assert level.first_half_share == F(1, 2)
            assert level.second_half_share == F(1, 2)
            assert level.ratio == bound
            assert level.max_consistent_delta == bound
        assert experiment.dictate_all_hold

    def test_half_items_collapses_after_first_level(self):
        cfg = HardFamilyConfig(k=3, p=F(10), q=F(1))
        experiment = efficiency_experiment(cfg, HalfItemsChoice())
        bound = 2 * cfg.t / (1 + cfg.t)
        assert experiment.levels[0].ratio == 1
        for level in experiment.levels[1:]:
            assert level.ratio == bound
        assert experiment.worst_ratio == bound
        assert experiment.max_consistent_delta == bound
        assert experiment.dictate_all_hold

    def test_requires_symmetric_menu(self):
        lopsided = SwapDictatorConfig(bundles=((F(1), F(0)),))
        cfg = HardFamilyConfig(k=1, p=F(2), q=F(1))
        with pytest.raises(ConstraintError):
            efficiency_experiment(cfg, lopsided)


class TestFairnessScan:
    def test_all_to_one_worst_mms_ratio(self):
        mech = get_mechanism("all-to-one", "chores", divisibility="indivisible")
        profile = chores([[1, 1], [1, 1]])
        report = fairness_ratio_scan(mech, "MMS", [profile])
        assert report.worst_mms_ratio == F(2)

    def test_ef1_scan_counts_violations(self):
        mech = get_mechanism("all-to-one", "chores", divisibility="indivisible")
        profile = chores([[1, 1], [1, 1]])
        report = fairness_ratio_scan(mech, "EF1", [profile])
        assert report.worst_ef1_violations == 1
        assert not report.clean

    def test_pe_scan_clean_when_ef1(self):
        rng = Random(82)
        cfg = random_pe_config(rng, 2)
        mech = picking_exchange_mechanism(cfg, "chores")
        instances = [
            random_profile(rng, 2, 2, "chores", "indivisible") for _ in range(20)
        ]
        report = fairness_ratio_scan(mech, "EF1", instances)
        assert report.worst_ef1_violations is not None
