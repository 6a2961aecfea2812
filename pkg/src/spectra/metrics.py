"""Post-run analytics: behavioural flags derived from transcripts, and
seeded Monte Carlo revenue/efficiency tables over mechanism-strategy cells."""

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    BID_PLACED,
    PRICE_TICKED,
    ROUND_OPENED,
    Bid,
    InvalidInput,
    Lot,
    Outcome,
    Transcript,
    ValuationProfile,
    efficiency,
    make_rng,
)
from .mechanisms import (
    AuctionParams,
    activity_minimum,
    run_first_price_sealed,
    run_second_price_sealed,
)
from .strategies import StrategySpec, sealed_bid_of

SOLD_AT_RESERVE = "SoldAtReserve"
SPLIT_MARKET = "SplitMarket"
JUMP_BID_OBSERVED = "JumpBidObserved"


@dataclass(frozen=True)
class RunReport:
    mechanism: str
    seed: int
    revenue: int
    efficiency: float
    rounds: int
    winners: dict
    payments: dict
    flags: tuple

    def has(self, flag: str) -> bool:
        return flag in self.flags

    def to_dict(self) -> dict:
        return {
            "mechanism": self.mechanism,
            "seed": self.seed,
            "revenue": self.revenue,
            "efficiency": self.efficiency,
            "rounds": self.rounds,
            "winners": {
                lot_id: ("UNSOLD" if b is None else b)
                for lot_id, b in sorted(self.winners.items())
            },
            "payments": {k: self.payments[k] for k in sorted(self.payments)},
            "flags": list(self.flags),
        }


def _config_lots(config: dict) -> dict:
    if config.get("mechanism") == "sequential":
        out = {}
        for stage in config.get("stages", []):
            for d in stage.get("lots", []):
                out[d["id"]] = Lot(d["id"], d["size_weight"], d["reserve"])
        return out
    return {
        d["id"]: Lot(d["id"], d["size_weight"], d["reserve"])
        for d in config.get("lots", [])
    }


def _audit_raises(t: Transcript, lots: dict):
    """Yield (round, lot_id, bidder, amount, board) for every accepted raise,
    where board is the standing entry for that lot at the round's start."""
    if t.config.get("mechanism") != "smra":
        return
    pct = Fraction(t.config.get("min_increment_pct", "0"))
    abs_inc = t.config.get("min_increment_abs", 0)
    standing = {lot_id: None for lot_id in lots}
    snapshot = dict(standing)
    for e in t.events:
        if e.kind == ROUND_OPENED:
            snapshot = dict(standing)
        elif e.kind == BID_PLACED and e.data.get("accepted"):
            lot_id = e.data["lot"]
            yield (
                e.round,
                lot_id,
                e.data["bidder"],
                e.data["amount"],
                snapshot.get(lot_id),
                pct,
                abs_inc,
            )
        elif e.kind == PRICE_TICKED and "lot" in e.data:
            standing[e.data["lot"]] = (e.data["bidder"], e.data["price"])


def analyze(outcome: Outcome, transcript: Transcript, values: ValuationProfile) -> RunReport:
    """Build the run report: revenue, efficiency, round count, and the
    descriptive flags, all derivable from the transcript alone.

    SoldAtReserve: every sold lot's payment equals its reserve (vacuously
    true when nothing sold). SplitMarket: at least two winners and, from
    round 2 on (rounds are 0-indexed, so after the opening round and one
    response round), nobody raised on a lot another bidder was standing
    on. JumpBidObserved: some accepted raise was at least twice the
    activity minimum it had to meet.
    """
    lots = _config_lots(transcript.config)
    flags = []
    sold = [(lot_id, b) for lot_id, b in outcome.allocation.items() if b is not None]
    if all(outcome.payments[lot_id] == lots[lot_id].reserve for lot_id, _ in sold):
        flags.append(SOLD_AT_RESERVE)
    winners = {b for _, b in sold}
    contested_late = False
    jump_seen = False
    for rnd, lot_id, bidder, amount, board, pct, abs_inc in _audit_raises(
        transcript, lots
    ):
        if rnd >= 2 and board is not None and board[0] != bidder:
            contested_late = True
        floor = activity_minimum(
            board[1] if board else None, lots[lot_id], pct, abs_inc
        )
        if amount >= 2 * floor:
            jump_seen = True
    if len(winners) >= 2 and not contested_late:
        flags.append(SPLIT_MARKET)
    if jump_seen:
        flags.append(JUMP_BID_OBSERVED)
    return RunReport(
        mechanism=transcript.mechanism,
        seed=transcript.seed,
        revenue=outcome.revenue,
        efficiency=efficiency(outcome, values),
        rounds=transcript.final_round() + 1,
        winners=dict(outcome.allocation),
        payments=dict(outcome.payments),
        flags=tuple(sorted(flags)),
    )


def report_text(report: RunReport, decimals: int = 0, unit: str = "") -> str:
    from .core import format_money

    lines = [
        f"mechanism: {report.mechanism}",
        f"seed: {report.seed}",
        f"revenue: {format_money(report.revenue, decimals, unit)}",
        f"efficiency: {report.efficiency:.6f}",
        f"rounds: {report.rounds}",
    ]
    for lot_id in sorted(report.winners):
        winner = report.winners[lot_id]
        if winner is None:
            lines.append(f"lot {lot_id}: UNSOLD")
        else:
            price = format_money(report.payments[lot_id], decimals, unit)
            lines.append(f"lot {lot_id}: {winner} at {price}")
    lines.append("flags: " + (", ".join(report.flags) if report.flags else "none"))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Monte Carlo tables

_MC_MECHANISMS = {
    "first_price": run_first_price_sealed,
    "second_price": run_second_price_sealed,
}

_CHUNK = 2048  # fixed work unit so results never depend on the job count


@dataclass(frozen=True)
class CellSpec:
    """One table cell: a sealed mechanism, a strategy preset applied to all
    bidders, a bidder count, and an integer-uniform valuation range.

    Open formats tick through every price, so their Monte Carlo cost
    scales with the currency range; pairwise open-vs-sealed questions are
    served by compare_open_vs_sealed instead.
    """

    mechanism: str
    strategy: StrategySpec
    n_bidders: int
    low: int
    high: int
    reserve: int = 0

    def __post_init__(self):
        if self.mechanism not in _MC_MECHANISMS:
            raise InvalidInput(
                f"monte carlo cells support {sorted(_MC_MECHANISMS)}, got {self.mechanism!r}"
            )
        if not isinstance(self.n_bidders, int) or self.n_bidders < 1:
            raise InvalidInput("n_bidders must be an int >= 1")
        if not (isinstance(self.low, int) and isinstance(self.high, int)):
            raise InvalidInput("valuation bounds must be ints")
        if not 0 <= self.low <= self.high:
            raise InvalidInput("need 0 <= low <= high")

    def strategy_label(self) -> str:
        if self.strategy.kind == "shaded":
            f = self.strategy.factor
            return f"shaded({f})" if f is not None else "shaded(equilibrium)"
        return self.strategy.kind

    def distribution_label(self) -> str:
        return f"uniform_int[{self.low}..{self.high}]"


def _run_cell_range(cell: CellSpec, seed: int, stream_base: int, start: int, stop: int):
    runner = _MC_MECHANISMS[cell.mechanism]
    lot = Lot("item", 1, cell.reserve)
    params = AuctionParams(lots=(lot,))
    names = [f"b{i:02d}" for i in range(cell.n_bidders)]
    results = []
    for r in range(start, stop):
        rng = make_rng(seed, stream=stream_base + r)
        vals = [int(v) for v in rng.integers(cell.low, cell.high + 1, size=cell.n_bidders)]
        bids = [
            Bid(names[i], lot.id, sealed_bid_of(cell.strategy, vals[i], cell.n_bidders))
            for i in range(cell.n_bidders)
        ]
        out, _ = runner(params, bids)
        profile = ValuationProfile({names[i]: {lot.id: vals[i]} for i in range(cell.n_bidders)})
        results.append((out.revenue, efficiency(out, profile)))
    return results


@dataclass(frozen=True)
class McTable:
    rows: tuple

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            [
                "mechanism",
                "strategy",
                "n_bidders",
                "distribution",
                "runs",
                "mean_revenue",
                "std_revenue",
                "mean_efficiency",
                "std_efficiency",
            ]
        )
        for row in self.rows:
            writer.writerow(
                [
                    row["mechanism"],
                    row["strategy"],
                    row["n_bidders"],
                    row["distribution"],
                    row["runs"],
                    f"{row['mean_revenue']:.6f}",
                    f"{row['std_revenue']:.6f}",
                    f"{row['mean_efficiency']:.6f}",
                    f"{row['std_efficiency']:.6f}",
                ]
            )
        return buf.getvalue()

    def to_text(self) -> str:
        header = (
            f"{'mechanism':<14}{'strategy':<22}{'n':>3}  "
            f"{'distribution':<26}{'mean_rev':>14}{'std_rev':>14}"
            f"{'mean_eff':>10}{'std_eff':>10}"
        )
        lines = [header]
        for row in self.rows:
            lines.append(
                f"{row['mechanism']:<14}{row['strategy']:<22}{row['n_bidders']:>3}  "
                f"{row['distribution']:<26}{row['mean_revenue']:>14.2f}"
                f"{row['std_revenue']:>14.2f}{row['mean_efficiency']:>10.4f}"
                f"{row['std_efficiency']:>10.4f}"
            )
        return "\n".join(lines) + "\n"


def monte_carlo(cells, n_runs: int, seed: int, jobs: int = 1) -> McTable:
    """Seeded revenue/efficiency table: n_runs independent draws per cell.

    Every run draws from its own (seed, stream) substream keyed by cell
    and run index, so the table is byte-identical for any jobs value.
    """
    cells = list(cells)
    if not cells:
        raise InvalidInput("monte_carlo needs at least one cell")
    if not isinstance(n_runs, int) or n_runs < 1:
        raise InvalidInput("n_runs must be an int >= 1")
    if not isinstance(jobs, int) or jobs < 1:
        raise InvalidInput("jobs must be an int >= 1")
    tasks = []
    for ci, cell in enumerate(cells):
        base = ci * n_runs
        for start in range(0, n_runs, _CHUNK):
            tasks.append((ci, cell, base, start, min(start + _CHUNK, n_runs)))
    if jobs == 1 or len(tasks) == 1:
        chunks = [
            (ci, start, _run_cell_range(cell, seed, base, start, stop))
            for ci, cell, base, start, stop in tasks
        ]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                (ci, start, pool.submit(_run_cell_range, cell, seed, base, start, stop))
                for ci, cell, base, start, stop in tasks
            ]
            chunks = [(ci, start, f.result()) for ci, start, f in futures]
    per_cell = {ci: [] for ci in range(len(cells))}
    for ci, start, results in sorted(chunks, key=lambda item: (item[0], item[1])):
        per_cell[ci].extend(results)
    rows = []
    for ci, cell in enumerate(cells):
        results = per_cell[ci]
        n = len(results)
        rev_sum = sum(r for r, _ in results)
        rev_sq = sum(r * r for r, _ in results)
        mean_rev = rev_sum / n
        var_rev = max(rev_sq / n - mean_rev * mean_rev, 0.0)
        eff_sum = math.fsum(e for _, e in results)
        eff_sq = math.fsum(e * e for _, e in results)
        mean_eff = eff_sum / n
        var_eff = max(eff_sq / n - mean_eff * mean_eff, 0.0)
        rows.append(
            {
                "mechanism": cell.mechanism,
                "strategy": cell.strategy_label(),
                "n_bidders": cell.n_bidders,
                "distribution": cell.distribution_label(),
                "runs": n,
                "mean_revenue": mean_rev,
                "std_revenue": math.sqrt(var_rev),
                "mean_efficiency": mean_eff,
                "std_efficiency": math.sqrt(var_eff),
            }
        )
    return McTable(rows=tuple(rows))
