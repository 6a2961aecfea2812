"""Shared substrate for every allocation mechanism in this package.

All prices, bids, and payments are exact integers in minor units of an
abstract currency; scenarios declare how to display them (unit name plus
decimal places). Randomness comes only from explicitly seeded streams, and
every run is recorded as an ordered event transcript that serializes to
byte-stable line-delimited JSON.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

# Representation boundary for money amounts. Arithmetic outside this range
# is a reported error, never a silent wrap or a float fallback.
MONEY_MIN = -(1 << 63)
MONEY_MAX = (1 << 63) - 1


class AuctionError(Exception):
    """Base class for engine errors."""


class InvalidInput(AuctionError):
    """Rejected input: malformed bids, unknown ids, bad configuration."""


class MoneyOverflow(AuctionError):
    """A money amount left the signed 64-bit range."""


class AuctionAborted(AuctionError):
    """A safety bound (max_rounds) was exceeded; diagnostic, not an outcome."""


def money(amount: int) -> int:
    """Validate one monetary amount: an int within the 64-bit range."""
    if isinstance(amount, bool) or not isinstance(amount, int):
        raise InvalidInput(f"money must be an integer amount, got {amount!r}")
    if not MONEY_MIN <= amount <= MONEY_MAX:
        raise MoneyOverflow(f"amount {amount} outside signed 64-bit range")
    return amount


def money_sum(amounts) -> int:
    """Sum amounts, checking the running total against the boundary."""
    total = 0
    for a in amounts:
        total += money(a)
        money(total)
    return total


def format_money(amount: int, decimals: int = 0, unit: str = "") -> str:
    """Render minor units for display, e.g. 2068 -> '20.68 million DM'."""
    money(amount)
    if decimals < 0:
        raise InvalidInput("decimals must be >= 0")
    sign = "-" if amount < 0 else ""
    mag = abs(amount)
    if decimals > 0:
        whole, frac = divmod(mag, 10**decimals)
        text = f"{sign}{whole}.{frac:0{decimals}d}"
    else:
        text = f"{sign}{mag}"
    return f"{text} {unit}" if unit else text


@dataclass(frozen=True)
class Lot:
    """One license on offer. size_weight distinguishes bigger blocks."""

    id: str
    size_weight: int = 1
    reserve: int = 0

    def __post_init__(self):
        if not self.id or not isinstance(self.id, str):
            raise InvalidInput("lot id must be a non-empty string")
        if not isinstance(self.size_weight, int) or self.size_weight < 1:
            raise InvalidInput(f"lot {self.id}: size_weight must be an int >= 1")
        money(self.reserve)
        if self.reserve < 0:
            raise InvalidInput(f"lot {self.id}: reserve must be >= 0")


@dataclass(frozen=True)
class Bid:
    bidder: str
    lot: str
    amount: int
    round: int = 0

    def __post_init__(self):
        if not self.bidder or not isinstance(self.bidder, str):
            raise InvalidInput("bid needs a non-empty bidder id")
        if not self.lot or not isinstance(self.lot, str):
            raise InvalidInput("bid needs a non-empty lot id")
        money(self.amount)
        if self.amount < 0:
            raise InvalidInput(f"bid amount must be >= 0, got {self.amount}")
        if not isinstance(self.round, int) or self.round < 0:
            raise InvalidInput("bid round must be an int >= 0")


@dataclass(frozen=True)
class ValuationProfile:
    """Private per-bidder, per-lot values; the ground truth for efficiency.

    values maps bidder id -> lot id -> value. budgets, when present, cap
    what budget-aware strategies will commit in total.
    """

    values: dict
    budgets: dict | None = None

    def __post_init__(self):
        for bidder, per_lot in self.values.items():
            if not bidder or not isinstance(bidder, str):
                raise InvalidInput("bidder ids must be non-empty strings")
            for lot_id, v in per_lot.items():
                money(v)
                if v < 0:
                    raise InvalidInput(
                        f"valuation of {bidder!r} for {lot_id!r} must be >= 0"
                    )
        if self.budgets is not None:
            for bidder, b in self.budgets.items():
                if bidder not in self.values:
                    raise InvalidInput(f"budget for unknown bidder {bidder!r}")
                money(b)
                if b < 0:
                    raise InvalidInput(f"budget of {bidder!r} must be >= 0")

    def bidders(self) -> list:
        return sorted(self.values)

    def value(self, bidder: str, lot_id: str) -> int:
        try:
            per_lot = self.values[bidder]
        except KeyError:
            raise InvalidInput(f"unknown bidder {bidder!r}") from None
        try:
            return per_lot[lot_id]
        except KeyError:
            raise InvalidInput(
                f"bidder {bidder!r} has no value for lot {lot_id!r}"
            ) from None

    def budget(self, bidder: str) -> int | None:
        if self.budgets is None:
            return None
        return self.budgets.get(bidder)

    def require_complete(self, lot_ids) -> None:
        """Every registered bidder must value every listed lot."""
        for bidder in self.values:
            for lot_id in lot_ids:
                self.value(bidder, lot_id)


def pick_best(candidates, rng=None):
    """Pick the (bidder, amount) pair with the highest amount.

    Ties go to the lowest bidder id unless an rng is supplied, in which
    case one of the tied bidders is drawn from it.
    """
    pairs = list(candidates)
    if not pairs:
        raise InvalidInput("no candidates to pick from")
    top = max(amount for _, amount in pairs)
    tied = sorted(bidder for bidder, amount in pairs if amount == top)
    if rng is None or len(tied) == 1:
        return tied[0], top
    return tied[int(rng.integers(len(tied)))], top


# ---------------------------------------------------------------------------
# transcript events


ROUND_OPENED = "RoundOpened"
BID_PLACED = "BidPlaced"
BIDDER_EXITED = "BidderExited"
PRICE_TICKED = "PriceTicked"
LOT_AWARDED = "LotAwarded"
LOT_UNSOLD = "LotUnsold"
AUCTION_CLOSED = "AuctionClosed"

EVENT_KINDS = frozenset(
    {
        ROUND_OPENED,
        BID_PLACED,
        BIDDER_EXITED,
        PRICE_TICKED,
        LOT_AWARDED,
        LOT_UNSOLD,
        AUCTION_CLOSED,
    }
)


@dataclass(frozen=True)
class Event:
    """One tagged record in a transcript; data keys keep insertion order."""

    kind: str
    round: int
    data: dict


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_digest(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


@dataclass
class Transcript:
    """Ordered, replayable record of a single run.

    The serialized form is line-delimited JSON: a header line carrying
    {seed, mechanism, config_hash, config}, then one event per line with
    fixed field order, so identical (config, seed) runs produce
    byte-identical files. Treat instances as immutable once closed.
    """

    seed: int
    mechanism: str
    config: dict
    config_hash: str = ""
    events: list = field(default_factory=list)

    def __post_init__(self):
        if not isinstance(self.seed, int) or not 0 <= self.seed <= 2**64 - 1:
            raise InvalidInput("transcript seed must be an unsigned 64-bit int")
        if not self.config_hash:
            self.config_hash = config_digest(self.config)

    @property
    def closed(self) -> bool:
        return bool(self.events) and self.events[-1].kind == AUCTION_CLOSED

    def append(self, kind: str, rnd: int, **data) -> None:
        if kind not in EVENT_KINDS:
            raise InvalidInput(f"unknown event kind {kind!r}")
        if not isinstance(rnd, int) or rnd < 0:
            raise InvalidInput("event round must be an int >= 0")
        if self.closed:
            raise InvalidInput("transcript already closed")
        if self.events and rnd < self.events[-1].round:
            raise InvalidInput("event rounds must be non-decreasing")
        self.events.append(Event(kind, rnd, data))

    def close(self, rnd: int) -> None:
        self.append(AUCTION_CLOSED, rnd)

    def final_round(self) -> int:
        if not self.events:
            return 0
        return self.events[-1].round

    def header(self) -> dict:
        return {
            "seed": self.seed,
            "mechanism": self.mechanism,
            "config_hash": self.config_hash,
            "config": self.config,
        }

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {
                    "seed": self.seed,
                    "mechanism": self.mechanism,
                    "config_hash": self.config_hash,
                    "config": json.loads(canonical_json(self.config)),
                },
                separators=(",", ":"),
            )
        ]
        for e in self.events:
            lines.append(
                json.dumps(
                    {"kind": e.kind, "round": e.round, "data": e.data},
                    separators=(",", ":"),
                )
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "Transcript":
        lines = [ln for ln in text.split("\n") if ln.strip()]
        if not lines:
            raise InvalidInput("empty transcript")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"transcript line 1: bad JSON ({exc})") from None
        for key in ("seed", "mechanism", "config_hash", "config"):
            if not isinstance(header, dict) or key not in header:
                raise InvalidInput(f"transcript header missing {key!r}")
        t = cls(
            seed=header["seed"],
            mechanism=header["mechanism"],
            config=header["config"],
            config_hash=header["config_hash"],
        )
        for i, line in enumerate(lines[1:], start=2):
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidInput(f"transcript line {i}: bad JSON ({exc})") from None
            if not isinstance(raw, dict) or set(raw) != {"kind", "round", "data"}:
                raise InvalidInput(f"transcript line {i}: expected kind/round/data")
            t.events.append(Event(raw["kind"], raw["round"], raw["data"]))
        return t

    def verify_hash(self) -> bool:
        return config_digest(self.config) == self.config_hash


# ---------------------------------------------------------------------------
# outcomes


@dataclass(frozen=True)
class Outcome:
    """Final allocation: lot id -> winning bidder (None when unsold),
    payments for sold lots, and their exact total."""

    allocation: dict
    payments: dict
    revenue: int

    @classmethod
    def build(cls, allocation: dict, payments: dict, lots=None) -> "Outcome":
        reserves = {l.id: l.reserve for l in lots} if lots is not None else None
        for lot_id, winner in allocation.items():
            if winner is None:
                if lot_id in payments:
                    raise InvalidInput(f"unsold lot {lot_id!r} has a payment")
                continue
            if lot_id not in payments:
                raise InvalidInput(f"sold lot {lot_id!r} has no payment")
            p = money(payments[lot_id])
            if p < 0:
                raise InvalidInput(f"payment for {lot_id!r} must be >= 0")
            if reserves is not None:
                if lot_id not in reserves:
                    raise InvalidInput(f"allocation names unknown lot {lot_id!r}")
                if p < reserves[lot_id]:
                    raise InvalidInput(
                        f"payment {p} for {lot_id!r} below reserve {reserves[lot_id]}"
                    )
        for lot_id in payments:
            if lot_id not in allocation:
                raise InvalidInput(f"payment for lot {lot_id!r} not in allocation")
        return cls(
            allocation=dict(allocation),
            payments=dict(payments),
            revenue=money_sum(payments.values()),
        )

    def winners(self) -> list:
        return sorted({b for b in self.allocation.values() if b is not None})

    def to_dict(self) -> dict:
        return {
            "allocation": {
                lot_id: ("UNSOLD" if b is None else b)
                for lot_id, b in sorted(self.allocation.items())
            },
            "payments": {lot_id: self.payments[lot_id] for lot_id in sorted(self.payments)},
            "revenue": self.revenue,
        }


def efficiency(outcome: Outcome, values: ValuationProfile) -> float:
    """Realized welfare over the best feasible assignment's welfare.

    Feasibility means one winner per lot; a bidder may take any number of
    lots, so the optimum separates into per-lot maxima (leaving a lot
    unsold never helps because values are non-negative). Returns 1.0 when
    the optimum is zero.
    """
    realized = 0
    for lot_id, winner in outcome.allocation.items():
        if winner is not None:
            realized += values.value(winner, lot_id)
    best = 0
    for lot_id in outcome.allocation:
        best += max(
            (values.value(bidder, lot_id) for bidder in values.values),
            default=0,
        )
    if best == 0:
        return 1.0
    return realized / best


# ---------------------------------------------------------------------------
# seeded randomness


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Deterministic PCG64 generator for (seed, stream).

    The same pair yields the same sequence on every platform; distinct
    stream ids give statistically independent substreams of one seed.
    """
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise InvalidInput("seed must be an integer")
    if not 0 <= seed <= 2**64 - 1:
        raise InvalidInput("seed must fit in unsigned 64 bits")
    if isinstance(stream, bool) or not isinstance(stream, int) or stream < 0:
        raise InvalidInput("stream must be an int >= 0")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    return np.random.Generator(np.random.PCG64(ss))
