"""Bidder behaviour: sealed-bid rules, sincere open-auction play, collusive
signalling, predatory jump bidding, scripted actions, and pre-auction
coalition merges.

Apart from the scripted kind, no policy here ever bids above its own
valuation; budget-aware agents also never commit beyond their remaining
budget across a sequential run.
"""

from dataclasses import dataclass
from fractions import Fraction

from .core import InvalidInput, ValuationProfile, money
from .mechanisms import SmraView  # noqa: F401  (re-exported for policy authors)

TRUTHFUL = "truthful"
SHADED = "shaded"
SINCERE_EXIT = "sincere_exit"
SINCERE_DEMAND = "sincere_demand"
COLLUSIVE_SIGNAL = "collusive_signal"
PREDATORY_JUMP = "predatory_jump"
SCRIPTED = "scripted"

STRATEGY_KINDS = frozenset(
    {
        TRUTHFUL,
        SHADED,
        SINCERE_EXIT,
        SINCERE_DEMAND,
        COLLUSIVE_SIGNAL,
        PREDATORY_JUMP,
        SCRIPTED,
    }
)


def _fraction_in_unit_interval(value, name):
    if not isinstance(value, Fraction):
        raise InvalidInput(f"{name} must be a Fraction")
    if not 0 < value <= 1:
        raise InvalidInput(f"{name} must lie in (0, 1]")


@dataclass(frozen=True)
class StrategySpec:
    """Declarative description of one bidder's behaviour.

    kind-specific fields: factor (shaded; None means the first-price
    equilibrium preset (n-1)/n), jump_fraction (predatory_jump), cell and
    opening_bids (collusive_signal), bid / caps / rounds (scripted).
    """

    kind: str
    factor: Fraction | None = None
    jump_fraction: Fraction | None = None
    cell: tuple | None = None
    opening_bids: dict | None = None
    bid: int | None = None
    caps: dict | None = None
    rounds: tuple | None = None
    budget_aware: bool = False
    withdraw_after_win: bool = False

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise InvalidInput(f"unknown strategy kind {self.kind!r}")
        if self.factor is not None:
            _fraction_in_unit_interval(self.factor, "factor")
        if self.jump_fraction is not None:
            _fraction_in_unit_interval(self.jump_fraction, "jump_fraction")
        if self.kind == COLLUSIVE_SIGNAL:
            if not self.cell:
                raise InvalidInput("collusive_signal needs a non-empty cell")
            object.__setattr__(self, "cell", tuple(self.cell))
        if self.kind == PREDATORY_JUMP and self.jump_fraction is None:
            raise InvalidInput("predatory_jump needs a jump_fraction")
        if self.opening_bids is not None:
            for lot_id, amount in self.opening_bids.items():
                money(amount)
                if amount < 0:
                    raise InvalidInput(f"opening bid on {lot_id!r} must be >= 0")
        if self.bid is not None:
            money(self.bid)
        if self.caps is not None:
            for lot_id, cap in self.caps.items():
                money(cap)


def shading_factor(spec: StrategySpec, n_bidders: int) -> Fraction:
    if spec.factor is not None:
        return spec.factor
    if n_bidders < 1:
        raise InvalidInput("need at least one bidder for the equilibrium preset")
    if n_bidders == 1:
        return Fraction(1)  # alone, nothing to shade against
    return Fraction(n_bidders - 1, n_bidders)


def sealed_bid_of(spec: StrategySpec, valuation: int, n_bidders: int) -> int:
    """Bid for a sealed format: truthful bids the valuation, shaded bids
    floor(valuation * f) with f defaulting to the (n-1)/n equilibrium
    preset for i.i.d. uniform valuations."""
    money(valuation)
    if valuation < 0:
        raise InvalidInput("valuation must be >= 0")
    if spec.kind == TRUTHFUL:
        return valuation
    if spec.kind == SHADED:
        f = shading_factor(spec, n_bidders)
        return (valuation * f.numerator) // f.denominator
    if spec.kind == SCRIPTED:
        if spec.bid is None:
            raise InvalidInput("scripted sealed bid needs a bid amount")
        return spec.bid
    raise InvalidInput(f"{spec.kind!r} is not a sealed-bid strategy")


# ---------------------------------------------------------------------------
# coalition transform


@dataclass(frozen=True)
class Merge:
    members: tuple
    merged_id: str

    def __post_init__(self):
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if len(members) < 2:
            raise InvalidInput("a merge needs at least two members")
        if len(set(members)) != len(members):
            raise InvalidInput("merge members must be distinct")
        if not self.merged_id or not isinstance(self.merged_id, str):
            raise InvalidInput("merge needs a non-empty merged_id")


@dataclass(frozen=True)
class CoalitionTransform:
    merges: tuple

    def __post_init__(self):
        object.__setattr__(self, "merges", tuple(self.merges))
        seen = set()
        for m in self.merges:
            overlap = seen.intersection(m.members)
            if overlap:
                raise InvalidInput(
                    f"merge sets overlap on {sorted(overlap)}"
                )
            seen.update(m.members)


def apply_coalitions(transform: CoalitionTransform, values: ValuationProfile):
    """Merge bidders before the auction: the coalition's value for each lot
    is the max over members, budgets add up. Returns a new profile."""
    merged_members = set()
    for m in transform.merges:
        for member in m.members:
            if member not in values.values:
                raise InvalidInput(f"merge references unknown bidder {member!r}")
        merged_members.update(m.members)
    survivors = {b for b in values.values if b not in merged_members}
    new_values = {b: dict(values.values[b]) for b in survivors}
    new_budgets = (
        {b: values.budgets[b] for b in survivors if b in values.budgets}
        if values.budgets is not None
        else None
    )
    for m in transform.merges:
        if m.merged_id in new_values:
            raise InvalidInput(f"merged id {m.merged_id!r} collides with a bidder")
        lot_ids = set()
        for member in m.members:
            lot_ids.update(values.values[member])
        new_values[m.merged_id] = {
            lot_id: max(
                values.values[member].get(lot_id, 0) for member in m.members
            )
            for lot_id in lot_ids
        }
        if values.budgets is not None:
            member_budgets = [
                values.budgets[member]
                for member in m.members
                if member in values.budgets
            ]
            if member_budgets:
                new_budgets[m.merged_id] = sum(member_budgets)
    return ValuationProfile(new_values, new_budgets)


# ---------------------------------------------------------------------------
# multi-round policies (callables taking an SmraView)


class TruthfulRaiserPolicy:
    """Raises the minimum valid amount on every lot it does not stand on,
    while that minimum does not exceed its valuation."""

    def __init__(self, bidder: str, valuations: dict):
        self.bidder = bidder
        self.valuations = dict(valuations)

    def __call__(self, view) -> dict:
        raises = {}
        for lot_id in sorted(view.lots):
            if view.standing_bidder(lot_id) == self.bidder:
                continue
            floor = view.min_raise(lot_id)
            if floor <= self.valuations.get(lot_id, 0):
                raises[lot_id] = floor
        return raises


class CollusiveSignalPolicy:
    """Partition-based signalling.

    The opening round may place a scripted, possibly asymmetric bid
    pattern (the offer). Afterwards the policy raises only on lots in its
    own partition cell, minimally, while not already standing there; the
    partner's cell is never contested. German 1999 style.
    """

    def __init__(self, bidder, cell, valuations, opening_bids=None):
        self.bidder = bidder
        self.cell = tuple(cell)
        self.valuations = dict(valuations)
        self.opening_bids = dict(opening_bids or {})
        for lot_id, amount in self.opening_bids.items():
            if amount > self.valuations.get(lot_id, 0):
                raise InvalidInput(
                    f"opening bid on {lot_id!r} exceeds the bidder's valuation"
                )

    def __call__(self, view) -> dict:
        if view.round == 0:
            return dict(self.opening_bids)
        raises = {}
        for lot_id in sorted(self.cell):
            if view.standing_bidder(lot_id) == self.bidder:
                continue
            floor = view.min_raise(lot_id)
            if floor <= self.valuations.get(lot_id, 0):
                raises[lot_id] = floor
        return raises


class PredatoryJumpPolicy:
    """Opens each lot with a jump to jump_fraction * valuation (or the
    activity minimum when the jump falls short of it), then raises
    minimally, never above its valuation."""

    def __init__(self, bidder, valuations, jump_fraction: Fraction):
        self.bidder = bidder
        self.valuations = dict(valuations)
        self.jump_fraction = jump_fraction
        self._jumped = set()

    def __call__(self, view) -> dict:
        raises = {}
        for lot_id in sorted(view.lots):
            if view.standing_bidder(lot_id) == self.bidder:
                continue
            v = self.valuations.get(lot_id, 0)
            floor = view.min_raise(lot_id)
            if lot_id not in self._jumped:
                f = self.jump_fraction
                jump = (v * f.numerator) // f.denominator
                amount = max(jump, floor)
                self._jumped.add(lot_id)
            else:
                amount = floor
            if amount <= v:
                raises[lot_id] = amount
        return raises


class ScriptedRoundsPolicy:
    """Plays a fixed list of per-round raise maps, then goes quiet."""

    def __init__(self, rounds):
        self.rounds = [dict(r) for r in rounds]

    def __call__(self, view) -> dict:
        if view.round < len(self.rounds):
            return dict(self.rounds[view.round])
        return {}


def smra_policy(spec: StrategySpec, bidder: str, valuations: dict):
    """Build the multi-round callback for one bidder from its spec."""
    if spec.kind == TRUTHFUL:
        return TruthfulRaiserPolicy(bidder, valuations)
    if spec.kind == COLLUSIVE_SIGNAL:
        return CollusiveSignalPolicy(bidder, spec.cell, valuations, spec.opening_bids)
    if spec.kind == PREDATORY_JUMP:
        return PredatoryJumpPolicy(bidder, valuations, spec.jump_fraction)
    if spec.kind == SCRIPTED:
        return ScriptedRoundsPolicy(spec.rounds or ())
    raise InvalidInput(f"{spec.kind!r} is not a multi-round strategy")


# ---------------------------------------------------------------------------
# single-lot open-format predicates


def stay_cap(spec: StrategySpec, valuation: int, budget=None, n_bidders: int = 2, lot_id=None):
    """Highest price this strategy keeps bidding at in an open format.

    Returns None when the strategy abstains from the lot entirely
    (a scripted strategy with no cap for it)."""
    if spec.kind in (TRUTHFUL, SINCERE_EXIT, SINCERE_DEMAND):
        cap = valuation
    elif spec.kind == SHADED:
        f = shading_factor(spec, n_bidders)
        cap = (valuation * f.numerator) // f.denominator
    elif spec.kind == SCRIPTED:
        if spec.caps is None or lot_id not in spec.caps:
            return None
        cap = spec.caps[lot_id]
    else:
        raise InvalidInput(f"{spec.kind!r} has no open-format cap")
    if spec.budget_aware and budget is not None:
        cap = min(cap, budget)
    return cap


# ---------------------------------------------------------------------------
# agents for sequential runs


class SequentialAgent:
    """One bidder across a sequence of single-lot auctions.

    Tracks remaining budget and wins; budget-aware agents cap every bid,
    stop price, and stay decision at what they can still pay, and agents
    with withdraw_after_win step out of all later lots once they have won.
    """

    def __init__(self, bidder, spec: StrategySpec, valuations, budget=None):
        self.bidder = bidder
        self.spec = spec
        self.valuations = dict(valuations)
        self.budget = budget
        self.remaining = budget
        self.won = []

    def _cap(self, lot) -> int | None:
        v = self.valuations.get(lot.id, 0)
        if self.spec.kind == SCRIPTED:
            if self.spec.caps is None or lot.id not in self.spec.caps:
                return None
            cap = self.spec.caps[lot.id]
        elif self.spec.kind == SHADED:
            f = shading_factor(self.spec, 2)
            cap = (v * f.numerator) // f.denominator
        else:
            cap = v
        if self.spec.budget_aware and self.remaining is not None:
            cap = min(cap, self.remaining)
        return cap

    def participates(self, lot) -> bool:
        if self.spec.withdraw_after_win and self.won:
            return False
        return True

    def sealed_bid(self, lot, format, n_bidders) -> int | None:
        if self.spec.kind == SCRIPTED:
            return self._cap(lot)
        if self.spec.kind in (TRUTHFUL, SINCERE_EXIT, SINCERE_DEMAND):
            return self._cap(lot)
        if self.spec.kind == SHADED:
            f = shading_factor(self.spec, n_bidders)
            v = self.valuations.get(lot.id, 0)
            bid = (v * f.numerator) // f.denominator
            if self.spec.budget_aware and self.remaining is not None:
                bid = min(bid, self.remaining)
            return bid
        raise InvalidInput(f"{self.spec.kind!r} cannot bid in sealed formats")

    def stop_price(self, lot) -> int | None:
        return self._cap(lot)

    def stays(self, lot, price) -> bool:
        cap = self._cap(lot)
        return cap is not None and price <= cap

    def willing(self, lot, price) -> bool:
        return self.stays(lot, price)

    def observe(self, lot_id, winner, price) -> None:
        if winner == self.bidder:
            self.won.append(lot_id)
            if self.remaining is not None:
                self.remaining -= price
