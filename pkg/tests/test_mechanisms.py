"""Auction format runners: worked examples, invariants, transcript audits."""

import json
import random
from fractions import Fraction

import pytest

from spectra import (
    AuctionAborted,
    AuctionParams,
    Bid,
    InvalidInput,
    Lot,
    Transcript,
    ValuationProfile,
    activity_minimum,
    compare_open_vs_sealed,
    efficiency,
    find_violation,
    make_rng,
    run_clock_ascending,
    run_dutch,
    run_english_ascending,
    run_first_price_sealed,
    run_second_price_sealed,
    run_sequential,
    run_smra,
)
from spectra.strategies import SequentialAgent, StrategySpec, TruthfulRaiserPolicy


def one_lot(reserve=0, **kwargs):
    return AuctionParams(lots=(Lot("item", 1, reserve),), **kwargs)


def sincere(valuations):
    # stay while the posted price is still worth paying
    return {b: (lambda price, v=v: v >= price) for b, v in valuations.items()}


class TestSealed:
    def test_first_price_pays_own_bid(self):
        bids = [Bid("A", "item", 100), Bid("B", "item", 80), Bid("C", "item", 60)]
        out, _ = run_first_price_sealed(one_lot(), bids)
        assert out.allocation["item"] == "A"
        assert out.payments["item"] == 100

    def test_second_price_pays_runner_up(self):
        bids = [Bid("A", "item", 10), Bid("B", "item", 7), Bid("C", "item", 5)]
        out, _ = run_second_price_sealed(one_lot(), bids)
        assert out.allocation["item"] == "A"
        assert out.payments["item"] == 7

    def test_reserve_filters_all_bids(self):
        out, _ = run_first_price_sealed(one_lot(60), [Bid("A", "item", 50)])
        assert out.allocation["item"] is None
        assert out.revenue == 0

    def test_second_price_lone_bid_pays_reserve(self):
        out, _ = run_second_price_sealed(one_lot(4), [Bid("A", "item", 10)])
        assert out.payments["item"] == 4

    def test_tie_goes_to_lowest_id(self):
        bids = [Bid("B", "item", 100), Bid("A", "item", 100)]
        for runner in (run_first_price_sealed, run_second_price_sealed):
            out, _ = runner(one_lot(), bids)
            assert out.allocation["item"] == "A"

    def test_duplicate_bidder_rejected(self):
        bids = [Bid("A", "item", 5), Bid("A", "item", 6)]
        with pytest.raises(InvalidInput):
            run_first_price_sealed(one_lot(), bids)

    def test_truthful_second_price_dominates_deviations(self):
        # for valuations {A: 10, B: 7}, no bid in 0..12 beats bidding 10
        params = one_lot()
        truthful_out, _ = run_second_price_sealed(
            params, [Bid("A", "item", 10), Bid("B", "item", 7)]
        )
        truthful_utility = 10 - truthful_out.payments["item"]
        assert truthful_out.allocation["item"] == "A"
        for dev in range(13):
            out, _ = run_second_price_sealed(
                params, [Bid("A", "item", dev), Bid("B", "item", 7)]
            )
            utility = 10 - out.payments["item"] if out.allocation["item"] == "A" else 0
            assert utility <= truthful_utility


class TestEnglish:
    def test_survivor_pays_price_at_last_exit(self):
        params = one_lot(start_price=1, min_increment_abs=1)
        out, _ = run_english_ascending(params, sincere({"A": 10, "B": 7, "C": 5}))
        assert out.allocation["item"] == "A"
        assert out.payments["item"] == 8  # B leaves when the price passes 7

    def test_lone_bidder_pays_start(self):
        params = one_lot(reserve=5, start_price=5, min_increment_abs=1)
        out, _ = run_english_ascending(params, sincere({"A": 9}))
        assert out.allocation["item"] == "A"
        assert out.payments["item"] == 5

    def test_everyone_exits_at_start_leaves_unsold(self):
        params = one_lot(start_price=50, min_increment_abs=1)
        out, _ = run_english_ascending(params, sincere({"A": 10, "B": 7}))
        assert out.allocation["item"] is None

    def test_simultaneous_final_exit_uses_previous_tick(self):
        params = one_lot(start_price=0, min_increment_abs=3)
        out, _ = run_english_ascending(params, sincere({"A": 4, "B": 4}))
        # both leave at price 6, so A wins by the tie rule at the prior tick
        assert out.allocation["item"] == "A"
        assert out.payments["item"] == 3

    def test_price_close_to_second_value(self):
        rnd = random.Random(90125)
        for _ in range(1000):
            vals = {f"b{i}": rnd.randrange(0, 200) for i in range(rnd.randrange(2, 6))}
            params = one_lot(start_price=0, min_increment_abs=1)
            out, _ = run_english_ascending(params, sincere(vals))
            second = sorted(vals.values())[-2]
            assert 0 <= out.payments["item"] - second <= 1

    def test_max_rounds_aborts(self):
        params = one_lot(start_price=0, min_increment_abs=1, max_rounds=3)
        with pytest.raises(AuctionAborted):
            run_english_ascending(params, sincere({"A": 100, "B": 99}))

    def test_requires_positive_increment(self):
        with pytest.raises(InvalidInput):
            run_english_ascending(one_lot(), sincere({"A": 5, "B": 3}))


class TestClock:
    def test_matches_english_on_sincere_inputs(self):
        params = one_lot(start_price=1, min_increment_abs=1)
        out, _ = run_clock_ascending(params, sincere({"A": 10, "B": 7, "C": 5}))
        assert out.allocation["item"] == "A"
        assert out.payments["item"] == 8

    def test_winner_agrees_with_second_price_sealed(self):
        rnd = random.Random(5150)
        for _ in range(1000):
            vals = {f"b{i}": rnd.randrange(0, 150) for i in range(rnd.randrange(2, 5))}
            clock_out, _ = run_clock_ascending(
                one_lot(start_price=0, min_increment_abs=1), sincere(vals)
            )
            sealed_out, _ = run_second_price_sealed(
                one_lot(), [Bid(b, "item", v) for b, v in sorted(vals.items())]
            )
            assert clock_out.allocation["item"] == sealed_out.allocation["item"]

    def test_single_willing_bidder_wins_at_reserve_start(self):
        params = one_lot(reserve=30, start_price=30, min_increment_abs=5)
        out, _ = run_clock_ascending(params, sincere({"A": 40, "B": 10}))
        assert out.allocation["item"] == "A"
        assert out.payments["item"] == 30


class TestDutch:
    def test_first_claim_wins(self):
        params = one_lot(start_price=20, decrement=1)
        out, t = run_dutch(params, {"A": 10, "B": 7})
        assert out.allocation["item"] == "A"
        assert out.payments["item"] == 10
        assert t.mechanism == "dutch"

    def test_no_claim_above_reserve_leaves_unsold(self):
        params = one_lot(reserve=50, start_price=60, decrement=2)
        out, _ = run_dutch(params, {"A": 10, "B": 40})
        assert out.allocation["item"] is None

    def test_tie_at_same_stop(self):
        params = one_lot(start_price=9, decrement=3)
        out, _ = run_dutch(params, {"B": 7, "A": 7})
        assert out.allocation["item"] == "A"
        assert out.payments["item"] == 6  # first tick at or below both stops

    def test_start_below_reserve_rejected(self):
        with pytest.raises(InvalidInput):
            run_dutch(one_lot(reserve=5, start_price=4, decrement=1), {"A": 3})

    def test_equals_first_price_on_identical_stops(self):
        rnd = random.Random(1984)
        for _ in range(300):
            stops = {f"b{i}": rnd.randrange(0, 100) for i in range(rnd.randrange(1, 5))}
            reserve = rnd.randrange(0, 60)
            dutch_out, _ = run_dutch(
                one_lot(
                    reserve=reserve,
                    start_price=max([reserve] + list(stops.values())),
                    decrement=1,
                ),
                stops,
            )
            sealed_out, _ = run_first_price_sealed(
                one_lot(reserve),
                [Bid(b, "item", s) for b, s in sorted(stops.items())],
            )
            assert dutch_out.allocation == sealed_out.allocation
            assert dutch_out.payments == sealed_out.payments


class TestActivityMinimum:
    def test_fresh_lot_needs_reserve_or_one(self):
        assert activity_minimum(None, Lot("x", 1, 40), Fraction(1, 10), 0) == 40
        assert activity_minimum(None, Lot("x", 1, 0), Fraction(1, 10), 5) == 1

    def test_standing_bid_combines_rules(self):
        lot = Lot("x", 1, 0)
        # ceil(100 * 11/10) = 110 beats 100 + 3 and 100 + 1
        assert activity_minimum(100, lot, Fraction(1, 10), 3) == 110
        # absolute increment dominates for small standing bids
        assert activity_minimum(10, lot, Fraction(1, 10), 8) == 18
        # strict progress even with no increment rules
        assert activity_minimum(10, lot, Fraction(0), 0) == 11
        # reserve still binds
        assert activity_minimum(10, Lot("x", 1, 60), Fraction(1, 10), 0) == 60

    def test_ceiling_rounds_up(self):
        assert activity_minimum(1880, Lot("x", 1, 0), Fraction(1, 10), 0) == 2068
        assert activity_minimum(1881, Lot("x", 1, 0), Fraction(1, 10), 0) == 2070


class TestSmra:
    def params(self, *lots, pct="1/10", abs_inc=0, max_rounds=200):
        return AuctionParams(
            lots=tuple(lots),
            min_increment_pct=Fraction(pct),
            min_increment_abs=abs_inc,
            max_rounds=max_rounds,
        )

    def test_single_lot_truthful_duel(self):
        lot = Lot("x", 1, 1)
        values = ValuationProfile({"a": {"x": 10}, "b": {"x": 7}})
        policies = {
            b: TruthfulRaiserPolicy(b, {"x": values.value(b, "x")}) for b in ("a", "b")
        }
        out, t = run_smra(self.params(lot), policies)
        assert out.allocation["x"] == "a"
        assert out.payments["x"] <= 8  # loser stops once the minimum passes 7
        assert find_violation(t) is None

    def test_no_raises_leaves_all_unsold(self):
        lots = (Lot("x", 1, 5), Lot("y", 1, 5))
        out, t = run_smra(self.params(*lots), {"a": lambda view: {}})
        assert out.allocation == {"x": None, "y": None}
        assert out.revenue == 0
        assert t.final_round() == 0

    def test_raises_validated_against_start_of_round_board(self):
        # both bid the fresh-lot minimum in round 0; the loser's bid is
        # still accepted because validation uses the board from the start
        # of the round, then the tie rule picks the standing bidder
        lot = Lot("x", 1, 10)
        policies = {
            "a": lambda view: {"x": 10} if view.round == 0 else {},
            "b": lambda view: {"x": 10} if view.round == 0 else {},
        }
        out, t = run_smra(self.params(lot), policies)
        assert out.allocation["x"] == "a"
        assert out.payments["x"] == 10
        accepted = [e for e in t.events if e.kind == "BidPlaced" and e.data["accepted"]]
        assert len(accepted) == 2

    def test_standing_bidder_may_not_raise_own_bid(self):
        lot = Lot("x", 1, 1)
        policies = {
            "a": lambda view: {"x": 5}
            if view.standing_bidder("x") != "a"
            else {"x": view.min_raise("x")},
            "b": lambda view: {},
        }
        out, t = run_smra(self.params(lot, max_rounds=10), policies)
        assert out.payments["x"] == 5
        rejected = [
            e for e in t.events if e.kind == "BidPlaced" and not e.data["accepted"]
        ]
        assert rejected and all(e.data["bidder"] == "a" for e in rejected)

    def test_highest_valid_raise_stands(self):
        lot = Lot("x", 1, 1)
        policies = {
            "a": lambda view: {"x": 30} if view.round == 0 else {},
            "b": lambda view: {"x": 50} if view.round == 0 else {},
        }
        out, _ = run_smra(self.params(lot), policies)
        assert out.allocation["x"] == "b"
        assert out.payments["x"] == 50

    def test_needs_an_increment_rule(self):
        with pytest.raises(InvalidInput):
            run_smra(
                AuctionParams(lots=(Lot("x"),), max_rounds=5), {"a": lambda v: {}}
            )

    def test_max_rounds_aborts(self):
        lot = Lot("x", 1, 1)
        values = {"a": {"x": 10**9}, "b": {"x": 10**9 - 1}}
        policies = {b: TruthfulRaiserPolicy(b, values[b]) for b in values}
        with pytest.raises(AuctionAborted):
            run_smra(self.params(lot, max_rounds=4), policies)


class TestSequential:
    def agent(self, bidder, vals, budget=None, withdraw=False):
        spec = StrategySpec(
            "truthful", budget_aware=budget is not None, withdraw_after_win=withdraw
        )
        return SequentialAgent(bidder, spec, vals, budget=budget)

    def test_single_stage_matches_direct_run(self):
        stage = one_lot()
        agents = {
            "a": self.agent("a", {"item": 10}),
            "b": self.agent("b", {"item": 7}),
        }
        out, t = run_sequential([stage], "second_price", agents)
        direct, _ = run_second_price_sealed(
            stage, [Bid("a", "item", 10), Bid("b", "item", 7)]
        )
        assert out.allocation == direct.allocation
        assert out.payments == direct.payments
        assert t.mechanism == "sequential"
        assert t.config["stages"][0]["mechanism"] == "second_price"

    def test_budget_carries_across_stages(self):
        stages = [
            AuctionParams(lots=(Lot("x"),)),
            AuctionParams(lots=(Lot("y"),)),
        ]
        agents = {
            "a": self.agent("a", {"x": 80, "y": 80}, budget=100),
            "b": self.agent("b", {"x": 60, "y": 60}),
        }
        out, _ = run_sequential(stages, "first_price", agents)
        assert out.allocation["x"] == "a"
        # a paid 80 for x, so only 20 of budget remains for y
        assert out.allocation["y"] == "b"
        assert out.payments["y"] == 60

    def test_withdraw_after_win_frees_later_lots(self):
        stages = [
            AuctionParams(lots=(Lot("x"),)),
            AuctionParams(lots=(Lot("y"),)),
        ]
        agents = {
            "a": self.agent("a", {"x": 50, "y": 50}, withdraw=True),
            "b": self.agent("b", {"x": 30, "y": 30}),
        }
        out, _ = run_sequential(stages, "first_price", agents)
        assert out.allocation == {"x": "a", "y": "b"}

    def test_identical_lots_spread_under_withdrawal(self):
        params = [
            AuctionParams(lots=(Lot(i),), start_price=0, min_increment_abs=1)
            for i in ("x", "y", "z")
        ]
        agents = {
            b: SequentialAgent(
                b,
                StrategySpec("sincere_exit", withdraw_after_win=True),
                {"x": v, "y": v, "z": v},
            )
            for b, v in (("a", 40), ("b", 30), ("c", 20))
        }
        out, _ = run_sequential(params, "english", agents)
        assert set(out.winners()) == {"a", "b", "c"}

    def test_duplicate_stage_lot_ids_rejected(self):
        stages = [one_lot(), one_lot()]
        with pytest.raises(InvalidInput):
            run_sequential(stages, "first_price", {"a": self.agent("a", {"item": 5})})

    def test_unknown_format_rejected(self):
        with pytest.raises(InvalidInput):
            run_sequential([one_lot()], "all_pay", {})


class TestComparison:
    def test_rows_and_summary(self):
        def sampler(rng):
            return {f"b{i}": int(rng.integers(0, 100)) for i in range(3)}

        report = compare_open_vs_sealed(sampler, seeds=range(25))
        assert len(report.rows) == 25
        s = report.summary()
        assert s["draws"] == 25
        assert s["winner_mismatch_second_vs_clock"] == 0
        assert s["winner_mismatch_first_vs_dutch"] == 0
        assert s["mean_revenue_first_price"] == s["mean_revenue_dutch"]
        for row in report.rows:
            assert row["first_price_revenue"] == row["dutch_revenue"]
            assert row["second_price_efficiency"] == 1.0


class TestConservation:
    # revenue equals the sum of payments and every payment has a winner,
    # across every format, on shared valuation draws
    @pytest.mark.parametrize("seed", range(8))
    def test_outcome_accounting(self, seed):
        rng = make_rng(seed)
        vals = {f"b{i}": int(rng.integers(0, 60)) for i in range(3)}
        reserve = int(rng.integers(0, 40))
        outs = []
        sealed = one_lot(reserve)
        bids = [Bid(b, "item", v) for b, v in sorted(vals.items())]
        outs.append(run_first_price_sealed(sealed, bids)[0])
        outs.append(run_second_price_sealed(sealed, bids)[0])
        open_params = one_lot(reserve, start_price=reserve, min_increment_abs=1)
        outs.append(run_english_ascending(open_params, sincere(vals))[0])
        outs.append(run_clock_ascending(open_params, sincere(vals))[0])
        outs.append(
            run_dutch(
                one_lot(
                    reserve,
                    start_price=max([reserve] + list(vals.values())),
                    decrement=1,
                ),
                vals,
            )[0]
        )
        for out in outs:
            assert out.revenue == sum(out.payments.values())
            assert set(out.payments) == {
                l for l, w in out.allocation.items() if w is not None
            }
            for lot_id, price in out.payments.items():
                assert price >= reserve

    def test_reserve_monotonicity_when_sold_in_both(self):
        rnd = random.Random(77)
        for _ in range(200):
            vals = {f"b{i}": rnd.randrange(0, 80) for i in range(3)}
            bids = [Bid(b, "item", v) for b, v in sorted(vals.items())]
            low, _ = run_second_price_sealed(one_lot(10), bids)
            high, _ = run_second_price_sealed(one_lot(30), bids)
            if high.allocation["item"] is not None:
                assert low.allocation["item"] is not None
                assert high.payments["item"] >= low.payments["item"]


class TestFindViolation:
    def tampered(self, t, index, **patch):
        lines = t.to_jsonl().splitlines()
        doc = json.loads(lines[1 + index])
        doc["data"].update(patch)
        lines[1 + index] = json.dumps(doc, separators=(",", ":"), sort_keys=True)
        return Transcript.from_jsonl("\n".join(lines) + "\n")

    def test_clean_transcripts_pass(self):
        _, t1 = run_first_price_sealed(
            one_lot(), [Bid("A", "item", 10), Bid("B", "item", 7)]
        )
        _, t2 = run_english_ascending(
            one_lot(start_price=0, min_increment_abs=1), sincere({"A": 9, "B": 4})
        )
        assert find_violation(t1) is None
        assert find_violation(t2) is None

    def test_award_price_must_match_winning_bid(self):
        _, t = run_first_price_sealed(
            one_lot(), [Bid("A", "item", 10), Bid("B", "item", 7)]
        )
        award_idx = next(
            i for i, e in enumerate(t.events) if e.kind == "LotAwarded"
        )
        bad = self.tampered(t, award_idx, price=9)
        hit = find_violation(bad)
        assert hit is not None
        assert hit[0] == award_idx

    def test_tick_price_must_follow_the_ladder(self):
        _, t = run_english_ascending(
            one_lot(start_price=2, min_increment_abs=3), sincere({"A": 20, "B": 9})
        )
        tick_idx = [i for i, e in enumerate(t.events) if e.kind == "PriceTicked"][1]
        bad = self.tampered(t, tick_idx, price=4)
        hit = find_violation(bad)
        assert hit is not None
        assert hit[0] == tick_idx

    def test_smra_undersized_raise_flagged(self):
        lot = Lot("x", 1, 10)
        policies = {
            "a": lambda view: {"x": view.min_raise("x")}
            if view.standing_bidder("x") != "a" and view.round < 2
            else {},
            "b": lambda view: {"x": view.min_raise("x")}
            if view.standing_bidder("x") != "b" and view.round < 2
            else {},
        }
        _, t = run_smra(
            AuctionParams(
                lots=(lot,), min_increment_pct=Fraction(1, 10), max_rounds=20
            ),
            policies,
        )
        assert find_violation(t) is None
        raise_idx = [
            i
            for i, e in enumerate(t.events)
            if e.kind == "BidPlaced" and e.data["accepted"] and e.round > 0
        ][0]
        amount = t.events[raise_idx].data["amount"]
        bad = self.tampered(t, raise_idx, amount=amount - 1)
        hit = find_violation(bad)
        assert hit is not None
        assert "activity minimum" in hit[1]
