"""Deterministic simulation of spectrum-license allocation.

Sealed and open single-lot auction formats, sequential multi-lot sales, a
simultaneous multi-round auction with an activity rule, administrative
alternatives (scored contests and lotteries), strategy agents, scenario
files with machine-checkable expectations, and outcome analytics. Every
run is a pure function of its inputs and a seed.
"""

from .alternatives import (
    ContestRubric,
    Proposal,
    TIE_LOWEST_ID,
    TIE_SEEDED_RANDOM,
    contest_total,
    run_beauty_contest,
    run_lottery,
)
from .core import (
    AuctionAborted,
    AuctionError,
    Bid,
    Event,
    InvalidInput,
    Lot,
    MONEY_MAX,
    MONEY_MIN,
    MoneyOverflow,
    Outcome,
    Transcript,
    ValuationProfile,
    efficiency,
    format_money,
    make_rng,
    money,
    money_sum,
)
from .mechanisms import (
    AuctionParams,
    ComparisonReport,
    SINGLE_LOT_FORMATS,
    SmraView,
    activity_minimum,
    compare_open_vs_sealed,
    find_violation,
    run_clock_ascending,
    run_dutch,
    run_english_ascending,
    run_first_price_sealed,
    run_second_price_sealed,
    run_sequential,
    run_smra,
)
from .metrics import (
    CellSpec,
    JUMP_BID_OBSERVED,
    McTable,
    RunReport,
    SOLD_AT_RESERVE,
    SPLIT_MARKET,
    analyze,
    monte_carlo,
    report_text,
)
from .scenarios import (
    AdoptionRecord,
    BidderDef,
    CheckResult,
    Scenario,
    ScenarioError,
    ScenarioResult,
    filter_adoption,
    load_adoption_dataset,
    load_scenario,
    run_scenario,
    validate_scenario,
)
from .strategies import (
    CoalitionTransform,
    Merge,
    SequentialAgent,
    StrategySpec,
    apply_coalitions,
    sealed_bid_of,
    shading_factor,
    smra_policy,
    stay_cap,
)

__version__ = "0.1.0"

__all__ = [
    "AdoptionRecord",
    "AuctionAborted",
    "AuctionError",
    "AuctionParams",
    "Bid",
    "BidderDef",
    "CellSpec",
    "CheckResult",
    "CoalitionTransform",
    "ComparisonReport",
    "ContestRubric",
    "Event",
    "JUMP_BID_OBSERVED",
    "InvalidInput",
    "Lot",
    "MONEY_MAX",
    "MONEY_MIN",
    "McTable",
    "Merge",
    "MoneyOverflow",
    "Outcome",
    "Proposal",
    "RunReport",
    "SINGLE_LOT_FORMATS",
    "SOLD_AT_RESERVE",
    "SPLIT_MARKET",
    "Scenario",
    "ScenarioError",
    "ScenarioResult",
    "SequentialAgent",
    "SmraView",
    "StrategySpec",
    "TIE_LOWEST_ID",
    "TIE_SEEDED_RANDOM",
    "Transcript",
    "ValuationProfile",
    "activity_minimum",
    "analyze",
    "apply_coalitions",
    "compare_open_vs_sealed",
    "contest_total",
    "efficiency",
    "filter_adoption",
    "find_violation",
    "format_money",
    "load_adoption_dataset",
    "load_scenario",
    "make_rng",
    "money",
    "money_sum",
    "monte_carlo",
    "report_text",
    "run_beauty_contest",
    "run_clock_ascending",
    "run_dutch",
    "run_english_ascending",
    "run_first_price_sealed",
    "run_lottery",
    "run_scenario",
    "run_second_price_sealed",
    "run_sequential",
    "run_smra",
    "sealed_bid_of",
    "shading_factor",
    "smra_policy",
    "stay_cap",
    "validate_scenario",
]
