"""Bidding strategies, coalition transforms, and multi-round policies."""

from fractions import Fraction

import numpy as np
import pytest

from spectra import (
    AuctionParams,
    CoalitionTransform,
    InvalidInput,
    Lot,
    Merge,
    SequentialAgent,
    StrategySpec,
    ValuationProfile,
    apply_coalitions,
    make_rng,
    run_smra,
    sealed_bid_of,
    shading_factor,
    smra_policy,
    stay_cap,
)
from spectra.mechanisms import SmraView
from spectra.strategies import (
    CollusiveSignalPolicy,
    PredatoryJumpPolicy,
    ScriptedRoundsPolicy,
    TruthfulRaiserPolicy,
)


def view_of(standing, lots, rnd=0, pct="1/10", abs_inc=0):
    lot_map = {l.id: l for l in lots}
    return SmraView(
        round=rnd,
        standing=standing,
        lots=lot_map,
        min_increment_pct=Fraction(pct),
        min_increment_abs=abs_inc,
        active={},
    )


class TestSpecValidation:
    def test_kinds_are_closed(self):
        with pytest.raises(InvalidInput):
            StrategySpec("bold")

    def test_collusive_needs_cell(self):
        with pytest.raises(InvalidInput):
            StrategySpec("collusive_signal")
        with pytest.raises(InvalidInput):
            StrategySpec("collusive_signal", cell=())
        StrategySpec("collusive_signal", cell=("x",))

    def test_predatory_needs_jump_fraction(self):
        with pytest.raises(InvalidInput):
            StrategySpec("predatory_jump")
        StrategySpec("predatory_jump", jump_fraction=Fraction(4, 5))

    @pytest.mark.parametrize("f", [Fraction(0), Fraction(-1, 2), Fraction(3, 2)])
    def test_fractions_live_in_unit_interval(self, f):
        with pytest.raises(InvalidInput):
            StrategySpec("shaded", factor=f)
        with pytest.raises(InvalidInput):
            StrategySpec("predatory_jump", jump_fraction=f)

    def test_factor_of_one_allowed(self):
        spec = StrategySpec("shaded", factor=Fraction(1))
        assert sealed_bid_of(spec, 99, 3) == 99


class TestSealedBids:
    def test_truthful_is_identity(self):
        assert sealed_bid_of(StrategySpec("truthful"), 100, 2) == 100

    def test_shaded_default_uses_equilibrium_preset(self):
        # three bidders: floor(99 * 2/3) = 66
        assert sealed_bid_of(StrategySpec("shaded"), 99, 3) == 66
        assert sealed_bid_of(StrategySpec("shaded"), 100, 2) == 50

    def test_shaded_explicit_factor(self):
        spec = StrategySpec("shaded", factor=Fraction(3, 4))
        assert sealed_bid_of(spec, 100, 5) == 75

    def test_single_bidder_never_shades(self):
        assert shading_factor(StrategySpec("shaded"), 1) == 1
        assert sealed_bid_of(StrategySpec("shaded"), 80, 1) == 80

    def test_scripted_uses_fixed_bid(self):
        assert sealed_bid_of(StrategySpec("scripted", bid=42), 100, 2) == 42
        with pytest.raises(InvalidInput):
            sealed_bid_of(StrategySpec("scripted"), 100, 2)

    def test_open_only_kinds_rejected(self):
        with pytest.raises(InvalidInput):
            sealed_bid_of(StrategySpec("sincere_exit"), 10, 2)

    def test_preset_is_close_to_the_grid_best_response(self):
        # against n-1 uniform rivals who shade by (n-1)/n, the best
        # constant bid fraction sits near (n-1)/n itself
        n = 3
        rng = make_rng(314)
        rival_max = rng.random((20_000, n - 1)).max(axis=1) * ((n - 1) / n)
        grid = np.linspace(0.01, 0.99, 99)
        p_win = (rival_max[None, :] < grid[:, None]).mean(axis=1)
        utility = (1.0 - grid) * p_win
        best = grid[int(np.argmax(utility))]
        assert abs(best - (n - 1) / n) <= 0.02


class TestCoalitions:
    def profile(self):
        return ValuationProfile(
            {
                "a": {"x": 10, "y": 4},
                "b": {"x": 8, "y": 9},
                "c": {"x": 2, "y": 2},
            },
            {"a": 20, "b": 15},
        )

    def test_merge_takes_max_and_sums_budgets(self):
        transform = CoalitionTransform((Merge(("a", "b"), "ab"),))
        merged = apply_coalitions(transform, self.profile())
        assert merged.bidders() == ["ab", "c"]
        assert merged.value("ab", "x") == 10
        assert merged.value("ab", "y") == 9
        assert merged.budget("ab") == 35
        assert merged.value("c", "x") == 2

    def test_no_merges_is_identity(self):
        merged = apply_coalitions(CoalitionTransform(()), self.profile())
        assert merged.values == self.profile().values

    def test_overlapping_merges_rejected(self):
        with pytest.raises(InvalidInput):
            CoalitionTransform(
                (Merge(("a", "b"), "ab"), Merge(("b", "c"), "bc"))
            )

    def test_unknown_member_rejected(self):
        transform = CoalitionTransform((Merge(("a", "zz"), "azz"),))
        with pytest.raises(InvalidInput):
            apply_coalitions(transform, self.profile())

    def test_merged_id_collision_rejected(self):
        transform = CoalitionTransform((Merge(("a", "b"), "c"),))
        with pytest.raises(InvalidInput):
            apply_coalitions(transform, self.profile())

    def test_merge_without_budgets(self):
        values = ValuationProfile({"a": {"x": 5}, "b": {"x": 7}})
        merged = apply_coalitions(CoalitionTransform((Merge(("a", "b"), "ab"),)), values)
        assert merged.budget("ab") is None

    def test_merge_needs_two_distinct_members(self):
        with pytest.raises(InvalidInput):
            Merge(("a",), "solo")
        with pytest.raises(InvalidInput):
            Merge(("a", "a"), "aa")


class TestRoundPolicies:
    def test_truthful_raiser_stops_at_valuation(self):
        lot = Lot("x", 1, 0)
        policy = TruthfulRaiserPolicy("a", {"x": 10})
        assert policy(view_of({"x": None}, [lot])) == {"x": 1}
        assert policy(view_of({"x": ("b", 9)}, [lot])) == {"x": 10}
        assert policy(view_of({"x": ("b", 10)}, [lot])) == {}
        assert policy(view_of({"x": ("a", 5)}, [lot])) == {}

    def test_collusive_opens_then_defends_own_cell_only(self):
        lots = [Lot("x", 1, 0), Lot("y", 1, 0)]
        policy = CollusiveSignalPolicy(
            "a", cell=("x",), valuations={"x": 50, "y": 50}, opening_bids={"y": 20}
        )
        assert policy(view_of({"x": None, "y": None}, lots, rnd=0)) == {"y": 20}
        later = view_of({"x": ("b", 10), "y": ("b", 22)}, lots, rnd=1)
        assert policy(later) == {"x": 11}  # y is the partner's problem now

    def test_collusive_opening_cannot_exceed_valuation(self):
        with pytest.raises(InvalidInput):
            CollusiveSignalPolicy("a", ("x",), {"x": 5}, {"x": 6})

    def test_predatory_jumps_once_then_raises_minimally(self):
        lot = Lot("x", 1, 0)
        policy = PredatoryJumpPolicy("a", {"x": 100}, Fraction(4, 5))
        first = policy(view_of({"x": ("b", 10)}, [lot]))
        assert first == {"x": 80}
        second = policy(view_of({"x": ("b", 85)}, [lot], rnd=1))
        assert second == {"x": 94}  # ceil(85 * 11/10)
        assert policy(view_of({"x": ("b", 100)}, [lot], rnd=2)) == {}

    def test_predatory_jump_below_floor_takes_floor(self):
        lot = Lot("x", 1, 0)
        policy = PredatoryJumpPolicy("a", {"x": 100}, Fraction(1, 10))
        first = policy(view_of({"x": ("b", 60)}, [lot]))
        assert first == {"x": 66}  # jump of 10 falls below the minimum

    def test_predation_shortens_the_auction(self):
        lot = Lot("x", 1, 1)
        params = AuctionParams(
            lots=(lot,), min_increment_pct=Fraction(1, 10), max_rounds=500
        )
        vals = {"a": {"x": 200}, "b": {"x": 150}}
        base_out, base_t = run_smra(
            params, {b: TruthfulRaiserPolicy(b, vals[b]) for b in vals}
        )
        pred_out, pred_t = run_smra(
            params,
            {
                "a": PredatoryJumpPolicy("a", vals["a"], Fraction(9, 10)),
                "b": TruthfulRaiserPolicy("b", vals["b"]),
            },
        )
        assert pred_out.allocation["x"] == base_out.allocation["x"] == "a"
        assert pred_t.final_round() < base_t.final_round()
        assert pred_out.payments["x"] >= base_out.payments["x"]

    def test_scripted_rounds_then_silence(self):
        policy = ScriptedRoundsPolicy([{"x": 5}, {"y": 6}])
        lots = [Lot("x"), Lot("y")]
        assert policy(view_of({}, lots, rnd=0)) == {"x": 5}
        assert policy(view_of({}, lots, rnd=1)) == {"y": 6}
        assert policy(view_of({}, lots, rnd=2)) == {}

    def test_factory_dispatch(self):
        assert isinstance(
            smra_policy(StrategySpec("truthful"), "a", {"x": 5}), TruthfulRaiserPolicy
        )
        assert isinstance(
            smra_policy(
                StrategySpec("collusive_signal", cell=("x",)), "a", {"x": 5}
            ),
            CollusiveSignalPolicy,
        )
        assert isinstance(
            smra_policy(
                StrategySpec("predatory_jump", jump_fraction=Fraction(1, 2)),
                "a",
                {"x": 5},
            ),
            PredatoryJumpPolicy,
        )
        assert isinstance(
            smra_policy(StrategySpec("scripted", rounds=({"x": 5},)), "a", {}),
            ScriptedRoundsPolicy,
        )
        with pytest.raises(InvalidInput):
            smra_policy(StrategySpec("shaded"), "a", {})


class TestStayCap:
    def test_sincere_kinds_cap_at_valuation(self):
        for kind in ("truthful", "sincere_exit", "sincere_demand"):
            assert stay_cap(StrategySpec(kind), 44) == 44

    def test_shaded_cap(self):
        assert stay_cap(StrategySpec("shaded"), 100, n_bidders=4) == 75

    def test_budget_caps_when_aware(self):
        spec = StrategySpec("truthful", budget_aware=True)
        assert stay_cap(spec, 100, budget=60) == 60
        assert stay_cap(StrategySpec("truthful"), 100, budget=60) == 100

    def test_scripted_abstains_without_a_cap(self):
        spec = StrategySpec("scripted", caps={"x": 12})
        assert stay_cap(spec, 99, lot_id="x") == 12
        assert stay_cap(spec, 99, lot_id="y") is None

    def test_signal_kinds_have_no_cap(self):
        with pytest.raises(InvalidInput):
            stay_cap(StrategySpec("collusive_signal", cell=("x",)), 10)


class TestSequentialAgents:
    def test_budget_aware_bid_shrinks_after_wins(self):
        spec = StrategySpec("truthful", budget_aware=True)
        agent = SequentialAgent("a", spec, {"x": 80, "y": 70}, budget=100)
        assert agent.sealed_bid(Lot("x"), "first_price", 2) == 80
        agent.observe("x", "a", 80)
        assert agent.remaining == 20
        assert agent.sealed_bid(Lot("y"), "first_price", 2) == 20

    def test_losses_do_not_touch_budget(self):
        spec = StrategySpec("truthful", budget_aware=True)
        agent = SequentialAgent("a", spec, {"x": 80, "y": 70}, budget=100)
        agent.observe("x", "b", 80)
        assert agent.remaining == 100
        assert agent.won == []

    def test_withdrawal_after_first_win(self):
        spec = StrategySpec("truthful", withdraw_after_win=True)
        agent = SequentialAgent("a", spec, {"x": 80, "y": 70})
        assert agent.participates(Lot("y"))
        agent.observe("x", "a", 10)
        assert not agent.participates(Lot("y"))

    def test_open_format_predicates_follow_the_cap(self):
        agent = SequentialAgent("a", StrategySpec("sincere_exit"), {"x": 25})
        assert agent.stays(Lot("x"), 25)
        assert not agent.stays(Lot("x"), 26)
        assert agent.willing(Lot("x"), 20)
        assert agent.stop_price(Lot("x")) == 25

    def test_collusive_agent_cannot_bid_sealed(self):
        spec = StrategySpec("collusive_signal", cell=("x",))
        agent = SequentialAgent("a", spec, {"x": 10})
        with pytest.raises(InvalidInput):
            agent.sealed_bid(Lot("x"), "first_price", 2)
