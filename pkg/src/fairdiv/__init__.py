"""Exact-rational fair division of goods and chores.

Mechanisms (picking-exchange, swap-dictatorial, probabilistic serial, the
bi-valued ex-ante pipeline, lottery implementation) together with exact
verification oracles for truthfulness, envy, proportionality, maximin
shares, Pareto optimality, and market-equilibrium certificates.
"""

from .bivalued import (
    BiValuedProfile,
    bivalued_chores_mechanism,
    bivalued_goods_mechanism,
    char_mnw_structure_check,
    mnw_waterfill,
    ps_schedule_for_target,
    truncate_and_redistribute,
)
from .core import (
    FairDivError,
    FractionalAllocation,
    IntegralAllocation,
    Lottery,
    Profile,
    bundle_value,
    lottery_marginals,
    parse_instance,
)
from .divisible import (
    EatingSchedule,
    EqualSplitChoice,
    HalfItemsChoice,
    Segment,
    SwapDictatorConfig,
    ps_run,
    schedule_violations,
    swap_dictatorial,
    validate_schedule,
)
from .fairness import (
    EquilibriumCertificate,
    FairnessReport,
    check_ef,
    check_ef1,
    check_mms,
    check_po_bruteforce,
    check_prop,
    efficiency_ratio,
    mms_value,
    optimal_social_welfare,
    social_welfare,
    verify_equilibrium,
)
from .lottery import (
    birkhoff_decompose,
    implement_lottery,
    pad_schedule,
    sample_lottery,
    slot_matrix,
    verify_lottery,
)
from .picking_exchange import (
    ExchangeDeal,
    PickingExchangeConfig,
    classify_deal,
    dualize_config,
    run_picking_exchange,
    validate_config,
)
from .strategic import (
    HardFamilyConfig,
    bivalued_rows,
    efficiency_experiment,
    fairness_ratio_scan,
    grid_rows,
    hard_family,
    manipulation_search,
)
from .transforms import (
    Mechanism,
    divisible_chore_transform,
    dual_profile,
    swap_two_agent,
    symmetrize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
