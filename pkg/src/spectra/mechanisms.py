"""Allocation protocols as deterministic state machines.

Every run returns (Outcome, Transcript). Sealed formats take the full bid
list up front; open formats consult per-bidder callbacks and reveal only
what the format legitimately discloses: posted prices for clock formats,
the standing-bid board for the multi-round format, nothing for sealed ones.
Ties break to the lowest bidder id unless a seeded rng is passed in.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    AUCTION_CLOSED,
    BID_PLACED,
    BIDDER_EXITED,
    EVENT_KINDS,
    LOT_AWARDED,
    LOT_UNSOLD,
    PRICE_TICKED,
    ROUND_OPENED,
    AuctionAborted,
    Bid,
    Event,
    InvalidInput,
    Lot,
    Outcome,
    Transcript,
    ValuationProfile,
    efficiency,
    make_rng,
    money,
    pick_best,
)

SINGLE_LOT_FORMATS = ("first_price", "second_price", "english", "dutch", "clock")


@dataclass(frozen=True)
class AuctionParams:
    """Static configuration for one run.

    min_increment_abs doubles as the tick size of the english and clock
    formats; the multi-round format combines min_increment_pct and
    min_increment_abs into its activity rule; decrement drives the
    descending format. max_rounds is a safety bound only.
    """

    lots: tuple
    min_increment_pct: Fraction = Fraction(0)
    min_increment_abs: int = 0
    start_price: int = 0
    decrement: int = 0
    max_rounds: int = 1_000_000

    def __post_init__(self):
        lots = tuple(self.lots)
        object.__setattr__(self, "lots", lots)
        if not lots:
            raise InvalidInput("params need at least one lot")
        ids = [l.id for l in lots]
        if len(set(ids)) != len(ids):
            raise InvalidInput("lot ids must be unique")
        for l in lots:
            if not isinstance(l, Lot):
                raise InvalidInput("lots must be Lot instances")
        pct = self.min_increment_pct
        if not isinstance(pct, Fraction):
            object.__setattr__(self, "min_increment_pct", Fraction(pct))
            pct = self.min_increment_pct
        if pct < 0:
            raise InvalidInput("min_increment_pct must be >= 0")
        money(self.min_increment_abs)
        if self.min_increment_abs < 0:
            raise InvalidInput("min_increment_abs must be >= 0")
        money(self.start_price)
        if self.start_price < 0:
            raise InvalidInput("start_price must be >= 0")
        money(self.decrement)
        if self.decrement < 0:
            raise InvalidInput("decrement must be >= 0")
        if not isinstance(self.max_rounds, int) or self.max_rounds < 1:
            raise InvalidInput("max_rounds must be an int >= 1")


def params_config(mechanism: str, params: AuctionParams, rng, **extra) -> dict:
    cfg = {
        "mechanism": mechanism,
        "lots": [
            {"id": l.id, "size_weight": l.size_weight, "reserve": l.reserve}
            for l in params.lots
        ],
        "min_increment_pct": str(params.min_increment_pct),
        "min_increment_abs": params.min_increment_abs,
        "start_price": params.start_price,
        "decrement": params.decrement,
        "max_rounds": params.max_rounds,
        "tie_break": "lowest_id" if rng is None else "seeded_random",
    }
    cfg.update(extra)
    return cfg


def params_from_config(cfg: dict) -> AuctionParams:
    return AuctionParams(
        lots=tuple(
            Lot(d["id"], d["size_weight"], d["reserve"]) for d in cfg["lots"]
        ),
        min_increment_pct=Fraction(cfg["min_increment_pct"]),
        min_increment_abs=cfg["min_increment_abs"],
        start_price=cfg["start_price"],
        decrement=cfg["decrement"],
        max_rounds=cfg["max_rounds"],
    )


def _single_lot(params: AuctionParams) -> Lot:
    if len(params.lots) != 1:
        raise InvalidInput("this format auctions exactly one lot")
    return params.lots[0]


def _award(t: Transcript, lot: Lot, winner: str, price: int, rnd: int):
    if price < lot.reserve:
        return _unsold(t, lot, rnd)
    t.append(LOT_AWARDED, rnd, lot=lot.id, bidder=winner, price=price)
    t.close(rnd)
    return Outcome.build({lot.id: winner}, {lot.id: price}, [lot]), t


def _unsold(t: Transcript, lot: Lot, rnd: int):
    t.append(LOT_UNSOLD, rnd, lot=lot.id)
    t.close(rnd)
    return Outcome.build({lot.id: None}, {}, [lot]), t


# ---------------------------------------------------------------------------
# sealed formats


def _run_sealed(name, params, bids, seed, rng):
    lot = _single_lot(params)
    seen = set()
    for b in bids:
        if not isinstance(b, Bid):
            raise InvalidInput("sealed formats take Bid instances")
        if b.lot != lot.id:
            raise InvalidInput(f"bid references unknown lot {b.lot!r}")
        if b.bidder in seen:
            raise InvalidInput(f"duplicate bid from {b.bidder!r}")
        seen.add(b.bidder)
    t = Transcript(seed, name, params_config(name, params, rng))
    t.append(ROUND_OPENED, 0)
    for b in bids:
        t.append(BID_PLACED, 0, bidder=b.bidder, lot=lot.id, amount=b.amount)
    qualifying = [(b.bidder, b.amount) for b in bids if b.amount >= lot.reserve]
    if not qualifying:
        return _unsold(t, lot, 0)
    winner, top = pick_best(qualifying, rng)
    if name == "first_price":
        price = top
    else:
        amounts = sorted((b.amount for b in bids), reverse=True)
        second = amounts[1] if len(amounts) > 1 else lot.reserve
        price = max(lot.reserve, second)
    return _award(t, lot, winner, price, 0)


def run_first_price_sealed(params, bids, *, seed=0, rng=None):
    """Highest bid at or above reserve wins and pays its own bid."""
    return _run_sealed("first_price", params, bids, seed, rng)


def run_second_price_sealed(params, bids, *, seed=0, rng=None):
    """Highest bid at or above reserve wins and pays the larger of the
    reserve and the second-highest bid; a lone qualifying bidder pays
    the reserve."""
    return _run_sealed("second_price", params, bids, seed, rng)


# ---------------------------------------------------------------------------
# open single-lot formats


def _run_open_ascending(name, params, stay, seed, rng):
    # Shared engine: the price posts, every active bidder answers whether
    # it stays at that price, and the last one standing wins. When the
    # final survivors all leave on the same tick the lot goes to the tie
    # rule winner among them at the previous tick's price.
    lot = _single_lot(params)
    inc = params.min_increment_abs
    if inc <= 0:
        raise InvalidInput(f"{name}: min_increment_abs must be > 0")
    bidders = sorted(stay)
    t = Transcript(seed, name, params_config(name, params, rng, bidders=bidders))
    t.append(ROUND_OPENED, 0, bidders=list(bidders))
    active = list(bidders)
    price = params.start_price
    prev_price = None
    tick = 0
    while True:
        if tick >= params.max_rounds:
            raise AuctionAborted(f"{name}: exceeded max_rounds={params.max_rounds}")
        t.append(PRICE_TICKED, tick, price=price)
        leaving = [b for b in active if not stay[b](price)]
        for b in leaving:
            t.append(BIDDER_EXITED, tick, bidder=b, price=price)
        active = [b for b in active if b not in set(leaving)]
        if len(active) == 1:
            return _award(t, lot, active[0], price, tick)
        if not active:
            if prev_price is None:
                return _unsold(t, lot, tick)
            winner, _ = pick_best([(b, 0) for b in leaving], rng)
            return _award(t, lot, winner, prev_price, tick)
        prev_price = price
        price = money(price + inc)
        tick += 1


def run_english_ascending(params, exit_policies, *, seed=0, rng=None):
    """Ascending open outcry: exit_policies[bidder](price) -> True to stay.

    The price ticks up from start_price by min_increment_abs; the survivor
    wins at the price standing when its last rival exited, provided that
    price covers the reserve.
    """
    return _run_open_ascending("english", params, dict(exit_policies), seed, rng)


def run_clock_ascending(params, demand_policies, *, seed=0, rng=None):
    """Ascending clock: demand_policies[bidder](price) -> True while the
    bidder is still willing to buy at that price. The sole remaining
    willing bidder wins at the posted price."""
    return _run_open_ascending("clock", params, dict(demand_policies), seed, rng)


def run_dutch(params, stop_prices, *, seed=0, rng=None):
    """Descending clock: the first bidder whose stop price meets the posted
    price claims the lot and pays that price. The price never descends
    below max(0, reserve); reaching it without a claim leaves the lot
    unsold."""
    lot = _single_lot(params)
    if params.decrement <= 0:
        raise InvalidInput("dutch: decrement must be > 0")
    floor_price = max(0, lot.reserve)
    if params.start_price < floor_price:
        raise InvalidInput("dutch: start_price must be >= the reserve")
    for b, s in stop_prices.items():
        money(s)
        if s < 0:
            raise InvalidInput(f"stop price of {b!r} must be >= 0")
    bidders = sorted(stop_prices)
    t = Transcript(seed, "dutch", params_config("dutch", params, rng, bidders=bidders))
    t.append(ROUND_OPENED, 0, bidders=list(bidders))
    price = params.start_price
    tick = 0
    while price >= floor_price:
        if tick >= params.max_rounds:
            raise AuctionAborted(f"dutch: exceeded max_rounds={params.max_rounds}")
        t.append(PRICE_TICKED, tick, price=price)
        claimants = sorted(b for b in bidders if stop_prices[b] >= price)
        if claimants:
            for b in claimants:
                t.append(BID_PLACED, tick, bidder=b, lot=lot.id, amount=price)
            winner, _ = pick_best([(b, 0) for b in claimants], rng)
            return _award(t, lot, winner, price, tick)
        price -= params.decrement
        tick += 1
    return _unsold(t, lot, tick)


# ---------------------------------------------------------------------------
# simultaneous multi-round format


def activity_minimum(standing_amount, lot: Lot, pct: Fraction, abs_inc: int) -> int:
    """Smallest amount the multi-round format accepts on a lot.

    With no standing bid an opening offer must cover the reserve (and be
    positive). A raise must top the standing bid by the configured
    percentage and absolute increments, and strictly exceed it.
    """
    if standing_amount is None:
        return max(lot.reserve, 1)
    needed = math.ceil(Fraction(standing_amount) * (1 + pct))
    return max(needed, standing_amount + abs_inc, standing_amount + 1, lot.reserve)


@dataclass(frozen=True)
class SmraView:
    """Standing-bid board revealed to every bidder between rounds.

    active is carried for completeness; no eligibility rule beyond the
    raise increments is modeled, so it stays True throughout.
    """

    round: int
    standing: dict
    lots: dict
    min_increment_pct: Fraction
    min_increment_abs: int
    active: dict

    def standing_bidder(self, lot_id):
        entry = self.standing[lot_id]
        return entry[0] if entry else None

    def standing_amount(self, lot_id):
        entry = self.standing[lot_id]
        return entry[1] if entry else None

    def min_raise(self, lot_id) -> int:
        return activity_minimum(
            self.standing_amount(lot_id),
            self.lots[lot_id],
            self.min_increment_pct,
            self.min_increment_abs,
        )


def _raise_ok(standing, lot, bidder, amount, params) -> bool:
    if standing is not None and standing[0] == bidder:
        return False  # the standing bidder may not raise its own bid
    floor = activity_minimum(
        standing[1] if standing else None,
        lot,
        params.min_increment_pct,
        params.min_increment_abs,
    )
    return amount >= floor


def run_smra(params, round_policies, *, seed=0, rng=None):
    """Simultaneous multi-round auction over all lots in params.

    Each round every bidder's policy sees the same start-of-round
    standing board and returns {lot_id: amount} raises. Raises are
    validated against that board (invalid ones are recorded as rejected,
    not fatal); per lot the highest valid raise becomes the new standing
    bid, ties resolved by the tie rule. The auction closes after the
    first round with zero valid raises, and standing bids become prices.
    """
    if params.min_increment_pct <= 0 and params.min_increment_abs <= 0:
        raise InvalidInput("smra needs a positive increment rule")
    lots = {l.id: l for l in params.lots}
    bidders = sorted(round_policies)
    t = Transcript(
        seed, "smra", params_config("smra", params, rng, bidders=list(bidders))
    )
    standing = {lot_id: None for lot_id in lots}
    active = {b: True for b in bidders}
    close_round = None
    for rnd in range(params.max_rounds):
        t.append(ROUND_OPENED, rnd)
        view = SmraView(
            round=rnd,
            standing=dict(standing),
            lots=lots,
            min_increment_pct=params.min_increment_pct,
            min_increment_abs=params.min_increment_abs,
            active=dict(active),
        )
        proposals = []
        for bidder in bidders:
            raises = round_policies[bidder](view) or {}
            for lot_id in sorted(raises):
                if lot_id not in lots:
                    raise InvalidInput(f"policy raised unknown lot {lot_id!r}")
                amount = money(raises[lot_id])
                if amount < 0:
                    raise InvalidInput("raise amounts must be >= 0")
                proposals.append((bidder, lot_id, amount))
        accepted = {}
        for bidder, lot_id, amount in proposals:
            ok = _raise_ok(standing[lot_id], lots[lot_id], bidder, amount, params)
            t.append(
                BID_PLACED, rnd, bidder=bidder, lot=lot_id, amount=amount, accepted=ok
            )
            if ok:
                accepted.setdefault(lot_id, []).append((bidder, amount))
        if not accepted:
            close_round = rnd
            break
        for lot_id in sorted(accepted):
            new_bidder, new_amount = pick_best(accepted[lot_id], rng)
            standing[lot_id] = (new_bidder, new_amount)
            t.append(PRICE_TICKED, rnd, lot=lot_id, price=new_amount, bidder=new_bidder)
    else:
        raise AuctionAborted(f"smra: exceeded max_rounds={params.max_rounds}")
    allocation, payments = {}, {}
    for lot_id in sorted(lots):
        entry = standing[lot_id]
        if entry is None:
            t.append(LOT_UNSOLD, close_round, lot=lot_id)
            allocation[lot_id] = None
        else:
            bidder, amount = entry
            t.append(LOT_AWARDED, close_round, lot=lot_id, bidder=bidder, price=amount)
            allocation[lot_id] = bidder
            payments[lot_id] = amount
    t.close(close_round)
    return Outcome.build(allocation, payments, params.lots), t


# ---------------------------------------------------------------------------
# sequential multi-lot runner


def run_sequential(lot_params, format, agents, *, seed=0, rng=None):
    """Auction several lots one at a time in the given order.

    agents map bidder id to an object exposing participates(lot),
    sealed_bid(lot, format, n_bidders), stop_price(lot), stays(lot, price),
    willing(lot, price) and observe(lot_id, winner, price); see the
    strategies module. Agents may carry budget and withdrawal state across
    lots, so earlier results shape later bidding.
    """
    if format not in SINGLE_LOT_FORMATS:
        raise InvalidInput(f"unknown sequential format {format!r}")
    stages = list(lot_params)
    if not stages:
        raise InvalidInput("sequential run needs at least one lot")
    stage_lots = [_single_lot(p) for p in stages]
    ids = [l.id for l in stage_lots]
    if len(set(ids)) != len(ids):
        raise InvalidInput("sequential lots must have unique ids")
    cfg = {
        "mechanism": "sequential",
        "format": format,
        "tie_break": "lowest_id" if rng is None else "seeded_random",
        "stages": [params_config(format, p, rng) for p in stages],
    }
    t = Transcript(seed, "sequential", cfg)
    allocation, payments = {}, {}
    base = 0
    for p, lot in zip(stages, stage_lots):
        live = sorted(b for b in agents if agents[b].participates(lot))
        t.append(ROUND_OPENED, base, lot=lot.id, bidders=live)
        if format in ("first_price", "second_price"):
            bids = []
            for b in live:
                amount = agents[b].sealed_bid(lot, format, len(live))
                if amount is not None:
                    bids.append(Bid(b, lot.id, money(amount)))
            sub_outcome, sub_t = _run_sealed(format, p, bids, seed, rng)
        elif format == "dutch":
            stops = {}
            for b in live:
                s = agents[b].stop_price(lot)
                if s is not None:
                    stops[b] = money(s)
            sub_outcome, sub_t = run_dutch(p, stops, seed=seed, rng=rng)
        elif format == "english":
            policies = {
                b: (lambda price, a=agents[b], l=lot: a.stays(l, price)) for b in live
            }
            sub_outcome, sub_t = run_english_ascending(p, policies, seed=seed, rng=rng)
        else:
            policies = {
                b: (lambda price, a=agents[b], l=lot: a.willing(l, price)) for b in live
            }
            sub_outcome, sub_t = run_clock_ascending(p, policies, seed=seed, rng=rng)
        for e in sub_t.events:
            if e.kind == AUCTION_CLOSED:
                continue
            t.append(e.kind, base + 1 + e.round, **e.data)
        base = t.events[-1].round + 1
        winner = sub_outcome.allocation[lot.id]
        allocation[lot.id] = winner
        if winner is not None:
            payments[lot.id] = sub_outcome.payments[lot.id]
        for b in sorted(agents):
            agents[b].observe(lot.id, winner, payments.get(lot.id))
    t.close(base)
    return Outcome.build(allocation, payments, stage_lots), t


# ---------------------------------------------------------------------------
# open versus sealed comparison harness


@dataclass(frozen=True)
class ComparisonReport:
    """Per-draw rows plus aggregate agreement statistics."""

    rows: tuple

    def summary(self) -> dict:
        n = len(self.rows)
        mismatch_second_clock = sum(
            1 for r in self.rows if r["second_price_winner"] != r["clock_winner"]
        )
        mismatch_first_dutch = sum(
            1 for r in self.rows if r["first_price_winner"] != r["dutch_winner"]
        )
        out = {
            "draws": n,
            "winner_mismatch_second_vs_clock": mismatch_second_clock,
            "winner_mismatch_first_vs_dutch": mismatch_first_dutch,
        }
        for fmt in ("second_price", "clock", "first_price", "dutch"):
            out[f"mean_revenue_{fmt}"] = (
                sum(r[f"{fmt}_revenue"] for r in self.rows) / n if n else 0.0
            )
            out[f"mean_efficiency_{fmt}"] = (
                sum(r[f"{fmt}_efficiency"] for r in self.rows) / n if n else 0.0
            )
        return out


def compare_open_vs_sealed(sampler, seeds, *, reserve=0, increment=1):
    """Run the sealed formats and their open counterparts on identical
    valuation draws.

    sampler(rng) returns {bidder: valuation}. Per seed, the second-price
    sealed format and the ascending clock run on truthful inputs, and the
    first-price sealed format and the descending format run on one shared
    bid/stop vector (the raw valuations).
    """
    lot = Lot("item", 1, reserve)
    rows = []
    for seed in seeds:
        vals = sampler(make_rng(seed))
        for v in vals.values():
            money(v)
        profile = ValuationProfile({b: {lot.id: v} for b, v in vals.items()})
        bids = [Bid(b, lot.id, vals[b]) for b in sorted(vals)]
        sealed_params = AuctionParams(lots=(lot,))
        sp_out, _ = run_second_price_sealed(sealed_params, bids, seed=seed)
        fp_out, _ = run_first_price_sealed(sealed_params, bids, seed=seed)
        clock_params = AuctionParams(
            lots=(lot,), min_increment_abs=increment, start_price=reserve
        )
        clock_out, _ = run_clock_ascending(
            clock_params,
            {b: (lambda price, v=v: v >= price) for b, v in vals.items()},
            seed=seed,
        )
        dutch_params = AuctionParams(
            lots=(lot,),
            decrement=1,
            start_price=max([max(0, reserve)] + list(vals.values())),
        )
        dutch_out, _ = run_dutch(dutch_params, dict(vals), seed=seed)
        row = {"seed": seed}
        for fmt, out in (
            ("second_price", sp_out),
            ("clock", clock_out),
            ("first_price", fp_out),
            ("dutch", dutch_out),
        ):
            row[f"{fmt}_winner"] = out.allocation[lot.id]
            row[f"{fmt}_revenue"] = out.revenue
            row[f"{fmt}_efficiency"] = efficiency(out, profile)
        rows.append(row)
    return ComparisonReport(rows=tuple(rows))


# ---------------------------------------------------------------------------
# transcript replay validation


def find_violation(t: Transcript):
    """Re-validate a transcript against its mechanism's rules.

    Returns (event_index, message) for the first violating event, or None
    when the transcript is consistent. Checks structure (single terminal
    close, ordered rounds), price-path arithmetic, activity and increment
    rules, reserve floors, and award consistency.
    """
    for i, e in enumerate(t.events):
        if e.kind not in EVENT_KINDS:
            return i, f"unknown event kind {e.kind!r}"
        if not isinstance(e.round, int) or e.round < 0:
            return i, "event round must be an int >= 0"
        if i and e.round < t.events[i - 1].round:
            return i, "event rounds must not decrease"
    if not t.events:
        return 0, "transcript has no events"
    for i, e in enumerate(t.events):
        if e.kind == AUCTION_CLOSED and i != len(t.events) - 1:
            return i, "events after AuctionClosed"
    if t.events[-1].kind != AUCTION_CLOSED:
        return len(t.events) - 1, "missing terminal AuctionClosed"
    mech = t.config.get("mechanism")
    if mech != t.mechanism:
        return 0, "config mechanism disagrees with header"
    if mech == "sequential":
        return _validate_sequential(t)
    return _validate_single(t.mechanism, t.config, list(enumerate(t.events)))


def _lot_map(cfg):
    return {d["id"]: Lot(d["id"], d["size_weight"], d["reserve"]) for d in cfg["lots"]}


def _validate_single(mech, cfg, indexed):
    try:
        lots = _lot_map(cfg)
    except (KeyError, TypeError, InvalidInput):
        return indexed[0][0], "config lots are malformed"
    if mech in ("first_price", "second_price"):
        return _validate_sealed(mech, cfg, lots, indexed)
    if mech in ("english", "clock"):
        return _validate_ascending(cfg, lots, indexed)
    if mech == "dutch":
        return _validate_dutch(cfg, lots, indexed)
    if mech == "smra":
        return _validate_smra(cfg, lots, indexed)
    if mech in ("beauty_contest", "lottery"):
        return _validate_administrative(mech, cfg, lots, indexed)
    return indexed[0][0], f"unknown mechanism {mech!r}"


def _validate_sealed(mech, cfg, lots, indexed):
    lot = next(iter(lots.values())) if len(lots) == 1 else None
    if lot is None:
        return indexed[0][0], "sealed formats auction exactly one lot"
    bids = {}
    terminal = None
    for i, e in indexed:
        if e.kind == BID_PLACED:
            if e.data.get("lot") != lot.id:
                return i, "bid references unknown lot"
            bidder = e.data.get("bidder")
            amount = e.data.get("amount")
            if bidder in bids:
                return i, f"duplicate bid from {bidder!r}"
            if not isinstance(amount, int) or amount < 0:
                return i, "bid amount must be an int >= 0"
            bids[bidder] = amount
        elif e.kind in (LOT_AWARDED, LOT_UNSOLD):
            if terminal is not None:
                return i, "lot resolved twice"
            terminal = (i, e)
        elif e.kind in (BIDDER_EXITED, PRICE_TICKED):
            return i, f"{e.kind} does not occur in sealed formats"
    if terminal is None:
        return indexed[-1][0], "lot was never resolved"
    i, e = terminal
    qualifying = {b: a for b, a in bids.items() if a >= lot.reserve}
    if e.kind == LOT_UNSOLD:
        if qualifying:
            return i, "lot marked unsold despite a qualifying bid"
        return None
    winner = e.data.get("bidder")
    price = e.data.get("price")
    if winner not in bids:
        return i, "award to a bidder who never bid"
    top = max(bids.values())
    if not qualifying or bids[winner] != top:
        return i, "award does not go to the highest qualifying bid"
    if cfg.get("tie_break") == "lowest_id":
        expected = min(b for b, a in bids.items() if a == top)
        if winner != expected:
            return i, "tie must resolve to the lowest bidder id"
    if mech == "first_price":
        expected_price = bids[winner]
    else:
        ordered = sorted(bids.values(), reverse=True)
        second = ordered[1] if len(ordered) > 1 else lot.reserve
        expected_price = max(lot.reserve, second)
    if price != expected_price:
        return i, f"award price {price} should be {expected_price}"
    if price < lot.reserve:
        return i, "award price below reserve"
    return None


def _validate_ascending(cfg, lots, indexed):
    lot = next(iter(lots.values())) if len(lots) == 1 else None
    if lot is None:
        return indexed[0][0], "ascending formats auction exactly one lot"
    inc = cfg.get("min_increment_abs")
    start = cfg.get("start_price")
    bidders = cfg.get("bidders")
    if not isinstance(inc, int) or inc <= 0:
        return indexed[0][0], "config increment must be an int > 0"
    if not isinstance(bidders, list):
        return indexed[0][0], "config must list the bidders"
    active = list(bidders)
    exited = set()
    tick_prices = []
    last_leavers = []
    terminal = None
    for i, e in indexed:
        if e.kind == PRICE_TICKED:
            expected = start + len(tick_prices) * inc
            if e.data.get("price") != expected or e.round != len(tick_prices):
                return i, f"price tick should post {expected} at round {len(tick_prices)}"
            tick_prices.append(expected)
            last_leavers = []
        elif e.kind == BIDDER_EXITED:
            b = e.data.get("bidder")
            if b not in active:
                return i, f"exit by inactive bidder {b!r}"
            if not tick_prices or e.data.get("price") != tick_prices[-1]:
                return i, "exit price must match the current tick"
            if e.round != len(tick_prices) - 1:
                return i, "exit round must match the current tick"
            active.remove(b)
            exited.add(b)
            last_leavers.append(b)
        elif e.kind in (LOT_AWARDED, LOT_UNSOLD):
            if terminal is not None:
                return i, "lot resolved twice"
            terminal = (i, e)
    if terminal is None:
        return indexed[-1][0], "lot was never resolved"
    i, e = terminal
    if e.kind == LOT_AWARDED:
        winner = e.data.get("bidder")
        price = e.data.get("price")
        if price < lot.reserve:
            return i, "award price below reserve"
        if len(active) == 1:
            if winner != active[0]:
                return i, "award must go to the sole surviving bidder"
            if price != tick_prices[-1]:
                return i, "survivor pays the final tick price"
        elif not active:
            if winner not in last_leavers:
                return i, "award must go to a final-tick leaver"
            if cfg.get("tie_break") == "lowest_id" and winner != min(last_leavers):
                return i, "tie must resolve to the lowest bidder id"
            if len(tick_prices) < 2 or price != tick_prices[-2]:
                return i, "simultaneous exit pays the prior tick price"
        else:
            return i, "award while several bidders were still active"
    else:
        if len(active) == 1 and tick_prices and tick_prices[-1] >= lot.reserve:
            return i, "unsold despite a surviving bidder at or above reserve"
        if len(active) > 1:
            return i, "unsold while several bidders were still active"
        if not active and len(tick_prices) > 1 and tick_prices[-2] >= lot.reserve:
            return i, "unsold despite a valid pre-exit price"
    return None


def _validate_dutch(cfg, lots, indexed):
    lot = next(iter(lots.values())) if len(lots) == 1 else None
    if lot is None:
        return indexed[0][0], "the descending format auctions exactly one lot"
    dec = cfg.get("decrement")
    start = cfg.get("start_price")
    if not isinstance(dec, int) or dec <= 0:
        return indexed[0][0], "config decrement must be an int > 0"
    floor_price = max(0, lot.reserve)
    tick_prices = []
    claims = []
    terminal = None
    for i, e in indexed:
        if e.kind == PRICE_TICKED:
            if claims:
                return i, "price moved after a claim"
            expected = start - len(tick_prices) * dec
            if e.data.get("price") != expected or e.round != len(tick_prices):
                return i, f"price tick should post {expected}"
            if expected < floor_price:
                return i, "price descended below the floor"
            tick_prices.append(expected)
        elif e.kind == BID_PLACED:
            if not tick_prices or e.data.get("amount") != tick_prices[-1]:
                return i, "claim must be at the posted price"
            claims.append(e.data.get("bidder"))
        elif e.kind in (LOT_AWARDED, LOT_UNSOLD):
            if terminal is not None:
                return i, "lot resolved twice"
            terminal = (i, e)
    if terminal is None:
        return indexed[-1][0], "lot was never resolved"
    i, e = terminal
    if e.kind == LOT_AWARDED:
        if not claims:
            return i, "award without a claim"
        winner = e.data.get("bidder")
        price = e.data.get("price")
        if winner not in claims:
            return i, "award must go to a claimant"
        if cfg.get("tie_break") == "lowest_id" and winner != min(claims):
            return i, "tie must resolve to the lowest bidder id"
        if price != tick_prices[-1]:
            return i, "winner pays the posted price"
        if price < lot.reserve:
            return i, "award price below reserve"
    else:
        if claims:
            return i, "unsold despite a claim"
        if tick_prices and tick_prices[-1] - dec >= floor_price:
            return i, "price stopped above the floor without a claim"
    return None


def _validate_smra(cfg, lots, indexed):
    try:
        pct = Fraction(cfg.get("min_increment_pct", "0"))
    except (ValueError, ZeroDivisionError):
        return indexed[0][0], "config min_increment_pct is malformed"
    abs_inc = cfg.get("min_increment_abs", 0)
    standing = {lot_id: None for lot_id in lots}
    round_start = dict(standing)
    round_accepted = {}
    current_round = None
    rounds_with_accepts = set()
    terminal = {}
    closed_round = None
    for i, e in indexed:
        if e.kind == ROUND_OPENED:
            round_start = dict(standing)
            round_accepted = {}
            current_round = e.round
        elif e.kind == BID_PLACED:
            lot_id = e.data.get("lot")
            if lot_id not in lots:
                return i, f"raise on unknown lot {lot_id!r}"
            bidder = e.data.get("bidder")
            amount = e.data.get("amount")
            accepted = e.data.get("accepted")
            if not isinstance(amount, int) or amount < 0:
                return i, "raise amount must be an int >= 0"
            entry = round_start[lot_id]
            if entry is not None and entry[0] == bidder:
                ok = False
            else:
                floor = activity_minimum(
                    entry[1] if entry else None, lots[lot_id], pct, abs_inc
                )
                ok = amount >= floor
            if bool(accepted) != ok:
                if ok:
                    return i, "valid raise recorded as rejected"
                return i, "raise below the activity minimum recorded as accepted"
            if ok:
                round_accepted.setdefault(lot_id, []).append((bidder, amount))
                rounds_with_accepts.add(current_round)
        elif e.kind == PRICE_TICKED:
            lot_id = e.data.get("lot")
            if lot_id not in round_accepted:
                return i, "standing update without an accepted raise"
            top = max(a for _, a in round_accepted[lot_id])
            tied = sorted(b for b, a in round_accepted[lot_id] if a == top)
            if e.data.get("price") != top:
                return i, f"standing price should be {top}"
            bidder = e.data.get("bidder")
            if bidder not in tied:
                return i, "standing bidder must hold the top raise"
            if cfg.get("tie_break") == "lowest_id" and bidder != tied[0]:
                return i, "tie must resolve to the lowest bidder id"
            standing[lot_id] = (bidder, top)
        elif e.kind in (LOT_AWARDED, LOT_UNSOLD):
            lot_id = e.data.get("lot")
            if lot_id in terminal:
                return i, f"lot {lot_id!r} resolved twice"
            terminal[lot_id] = (i, e)
            if closed_round is None:
                closed_round = e.round
                if closed_round in rounds_with_accepts:
                    return i, "auction closed after a round with valid raises"
    if set(terminal) != set(lots):
        return indexed[-1][0], "not every lot was resolved"
    for lot_id, (i, e) in terminal.items():
        entry = standing[lot_id]
        if e.kind == LOT_UNSOLD:
            if entry is not None:
                return i, "unsold lot still had a standing bid"
            continue
        if entry is None:
            return i, "award on a lot without a standing bid"
        if e.data.get("bidder") != entry[0] or e.data.get("price") != entry[1]:
            return i, "award must match the final standing bid"
        if entry[1] < lots[lot_id].reserve:
            return i, "award price below reserve"
    return None


def _validate_administrative(mech, cfg, lots, indexed):
    lot = next(iter(lots.values())) if len(lots) == 1 else None
    if lot is None:
        return indexed[0][0], f"{mech} allocates exactly one lot"
    if mech == "lottery":
        allowed = set(cfg.get("eligible", []))
    else:
        allowed = set(cfg.get("proposals", {}))
    fee = cfg.get("fee", 0)
    for i, e in indexed:
        if e.kind == LOT_AWARDED:
            if e.data.get("bidder") not in allowed:
                return i, "award outside the eligible set"
            if e.data.get("price") != fee:
                return i, f"award price should equal the fee {fee}"
    return None


def _validate_sequential(t: Transcript):
    cfg = t.config
    stages = cfg.get("stages")
    fmt = cfg.get("format")
    if fmt not in SINGLE_LOT_FORMATS or not isinstance(stages, list):
        return 0, "sequential config needs a format and stages"
    # split events into stages at their RoundOpened markers
    markers = [
        (i, e)
        for i, e in enumerate(t.events)
        if e.kind == ROUND_OPENED and "lot" in e.data
    ]
    if len(markers) != len(stages):
        return 0, f"expected {len(stages)} stage markers, found {len(markers)}"
    close_index = len(t.events) - 1
    for k, (start_i, marker) in enumerate(markers):
        stage_cfg = dict(stages[k])
        stage_cfg.setdefault("tie_break", cfg.get("tie_break"))
        lot_ids = [d["id"] for d in stage_cfg.get("lots", [])]
        if marker.data.get("lot") not in lot_ids:
            return start_i, "stage marker lot disagrees with stage config"
        stage_cfg["bidders"] = marker.data.get("bidders", [])
        end_i = markers[k + 1][0] if k + 1 < len(markers) else close_index
        base = marker.round + 1
        sliced = []
        for i in range(start_i + 1, end_i):
            e = t.events[i]
            sliced.append((i, Event(e.kind, e.round - base, e.data)))
        if not sliced:
            return start_i, "stage has no events"
        last_round = sliced[-1][1].round
        sliced.append((close_index, Event(AUCTION_CLOSED, last_round, {})))
        v = _validate_single(fmt, stage_cfg, sliced)
        if v is not None:
            return v
    return None
