"""Administrative allocation methods that compete with auctions: the scored
"beauty contest" and the lottery. Both return (Outcome, Transcript) like the
auction formats so runs stay replayable, and both charge only a flat
administrative fee (zero by default)."""

from dataclasses import dataclass
from fractions import Fraction

from .core import (
    InvalidInput,
    LOT_AWARDED,
    Lot,
    Outcome,
    ROUND_OPENED,
    Transcript,
    money,
)

TIE_LOWEST_ID = "lowest_id"
TIE_SEEDED_RANDOM = "seeded_random"


@dataclass(frozen=True)
class ContestRubric:
    """Weighted scoring criteria. Weights are positive rationals, so the
    winner is invariant under scaling all weights by a positive factor."""

    criteria: tuple  # ((name, Fraction weight), ...)
    tie_rule: str = TIE_LOWEST_ID

    def __post_init__(self):
        criteria = tuple((name, weight) for name, weight in self.criteria)
        object.__setattr__(self, "criteria", criteria)
        if not criteria:
            raise InvalidInput("rubric needs at least one criterion")
        names = [name for name, _ in criteria]
        if len(set(names)) != len(names):
            raise InvalidInput("rubric criteria must have unique names")
        for name, weight in criteria:
            if not name or not isinstance(name, str):
                raise InvalidInput("criterion names must be non-empty strings")
            if not isinstance(weight, Fraction) or weight <= 0:
                raise InvalidInput(f"weight for {name!r} must be a positive Fraction")
        if self.tie_rule not in (TIE_LOWEST_ID, TIE_SEEDED_RANDOM):
            raise InvalidInput(f"unknown tie rule {self.tie_rule!r}")


@dataclass(frozen=True)
class Proposal:
    bidder: str
    scores: dict  # criterion name -> score in [0, 100]

    def __post_init__(self):
        if not self.bidder or not isinstance(self.bidder, str):
            raise InvalidInput("proposal needs a non-empty bidder id")
        for name, score in self.scores.items():
            if isinstance(score, bool) or not isinstance(score, (int, float)):
                raise InvalidInput(f"score for {name!r} must be a number")
            if not 0 <= score <= 100:
                raise InvalidInput(f"score for {name!r} must lie in [0, 100]")


def contest_total(rubric: ContestRubric, proposal: Proposal) -> Fraction:
    """Exact weighted total; missing or extra criteria are rejected."""
    declared = {name for name, _ in rubric.criteria}
    given = set(proposal.scores)
    missing = declared - given
    if missing:
        raise InvalidInput(
            f"proposal from {proposal.bidder!r} missing criteria {sorted(missing)}"
        )
    extra = given - declared
    if extra:
        raise InvalidInput(
            f"proposal from {proposal.bidder!r} scores undeclared criteria {sorted(extra)}"
        )
    total = Fraction(0)
    for name, weight in rubric.criteria:
        total += weight * Fraction(proposal.scores[name])
    return total


def _administrative_config(mechanism, lot, fee, extra):
    cfg = {
        "mechanism": mechanism,
        "lots": [{"id": lot.id, "size_weight": lot.size_weight, "reserve": lot.reserve}],
        "fee": fee,
    }
    cfg.update(extra)
    return cfg


def _check_fee(lot: Lot, fee: int):
    money(fee)
    if fee < 0:
        raise InvalidInput("fee must be >= 0")
    if fee < lot.reserve:
        raise InvalidInput("fee may not fall below the lot's reserve")


def run_beauty_contest(rubric: ContestRubric, proposals, lot: Lot, *, fee=0, seed=0, rng=None):
    """Award the lot to the proposal with the highest weighted score.

    Scores are exact rationals, so equal totals are exact ties, resolved
    per the rubric's tie rule (an rng is required for seeded_random).
    """
    _check_fee(lot, fee)
    proposals = list(proposals)
    if not proposals:
        raise InvalidInput("contest needs at least one proposal")
    seen = set()
    for p in proposals:
        if p.bidder in seen:
            raise InvalidInput(f"duplicate proposal from {p.bidder!r}")
        seen.add(p.bidder)
    totals = {p.bidder: contest_total(rubric, p) for p in proposals}
    top = max(totals.values())
    tied = sorted(b for b, total in totals.items() if total == top)
    if rubric.tie_rule == TIE_SEEDED_RANDOM and len(tied) > 1:
        if rng is None:
            raise InvalidInput("seeded_random tie rule needs an rng")
        winner = tied[int(rng.integers(len(tied)))]
    else:
        winner = tied[0]
    cfg = _administrative_config(
        "beauty_contest",
        lot,
        fee,
        {
            "criteria": [[name, str(weight)] for name, weight in rubric.criteria],
            "proposals": {p.bidder: dict(sorted(p.scores.items())) for p in proposals},
            "tie_rule": rubric.tie_rule,
        },
    )
    t = Transcript(seed, "beauty_contest", cfg)
    t.append(ROUND_OPENED, 0, bidders=sorted(totals))
    t.append(LOT_AWARDED, 0, lot=lot.id, bidder=winner, price=fee)
    t.close(0)
    return Outcome.build({lot.id: winner}, {lot.id: fee}, [lot]), t


def run_lottery(eligible, lot: Lot, rng, *, fee=0, seed=0):
    """Draw the winner uniformly from the eligible list via the rng."""
    _check_fee(lot, fee)
    eligible = list(eligible)
    if not eligible:
        raise InvalidInput("lottery needs at least one eligible bidder")
    if len(set(eligible)) != len(eligible):
        raise InvalidInput("eligible bidders must be distinct")
    if rng is None:
        raise InvalidInput("lottery needs an rng")
    winner = eligible[int(rng.integers(len(eligible)))]
    cfg = _administrative_config("lottery", lot, fee, {"eligible": list(eligible)})
    t = Transcript(seed, "lottery", cfg)
    t.append(ROUND_OPENED, 0, bidders=sorted(eligible))
    t.append(LOT_AWARDED, 0, lot=lot.id, bidder=winner, price=fee)
    t.close(0)
    return Outcome.build({lot.id: winner}, {lot.id: fee}, [lot]), t
