"""Scenario files and the license-award history dataset.

A scenario is a JSON document binding lots, bidders, strategies, an
allocation mechanism, and machine-checkable expectations. Validation is
strict: unknown keys are rejected and every failure is reported with the
path to the offending value.
"""

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .alternatives import (
    ContestRubric,
    Proposal,
    TIE_LOWEST_ID,
    TIE_SEEDED_RANDOM,
    run_beauty_contest,
    run_lottery,
)
from .core import (
    Bid,
    InvalidInput,
    Lot,
    Outcome,
    ValuationProfile,
    make_rng,
    money,
)
from .mechanisms import (
    AuctionParams,
    run_clock_ascending,
    run_dutch,
    run_english_ascending,
    run_first_price_sealed,
    run_second_price_sealed,
    run_sequential,
    run_smra,
)
from .metrics import RunReport, analyze
from .strategies import (
    COLLUSIVE_SIGNAL,
    PREDATORY_JUMP,
    SCRIPTED,
    SHADED,
    SINCERE_DEMAND,
    SINCERE_EXIT,
    STRATEGY_KINDS,
    TRUTHFUL,
    CoalitionTransform,
    Merge,
    SequentialAgent,
    StrategySpec,
    apply_coalitions,
    sealed_bid_of,
    smra_policy,
    stay_cap,
)

MECHANISM_KINDS = (
    "first_price",
    "second_price",
    "english",
    "dutch",
    "clock",
    "sequential",
    "smra",
    "beauty_contest",
    "lottery",
)

_SINGLE_LOT_KINDS = {
    "first_price",
    "second_price",
    "english",
    "dutch",
    "clock",
    "beauty_contest",
    "lottery",
}

_ALLOWED_STRATEGIES = {
    "first_price": {TRUTHFUL, SHADED, SCRIPTED},
    "second_price": {TRUTHFUL, SHADED, SCRIPTED},
    "english": {TRUTHFUL, SINCERE_EXIT, SHADED, SCRIPTED},
    "clock": {TRUTHFUL, SINCERE_DEMAND, SHADED, SCRIPTED},
    "dutch": {TRUTHFUL, SHADED, SCRIPTED},
    "smra": {TRUTHFUL, COLLUSIVE_SIGNAL, PREDATORY_JUMP, SCRIPTED},
    "beauty_contest": set(STRATEGY_KINDS),
    "lottery": set(STRATEGY_KINDS),
}

CHECK_KINDS = (
    "closes_within",
    "allocation",
    "winner",
    "payment_in_range",
    "payment_lt",
    "sold_at_reserve",
    "bidder_count",
    "flag",
    "distinct_ownership_tags",
)


class ScenarioError(InvalidInput):
    """Validation failure; .errors lists path-qualified messages."""

    def __init__(self, errors):
        self.errors = tuple(errors)
        super().__init__("\n".join(self.errors))


@dataclass(frozen=True)
class BidderDef:
    id: str
    strategy: StrategySpec
    valuations: dict | None = None
    budget: int | None = None
    ownership_tag: str | None = None


@dataclass(frozen=True)
class MergeDef:
    members: tuple
    merged_id: str
    strategy: StrategySpec
    ownership_tag: str | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    mechanism: dict
    lots: tuple
    bidders: tuple
    coalitions: tuple
    checks: tuple
    seed: int | None = None
    tie_break: str = "lowest_id"
    display_unit: str = ""
    display_decimals: int = 0
    annotations: dict | None = None
    rubric: ContestRubric | None = None
    proposals: tuple | None = None

    def post_transform_bidder_ids(self):
        merged_members = {m for c in self.coalitions for m in c.members}
        ids = [b.id for b in self.bidders if b.id not in merged_members]
        ids.extend(c.merged_id for c in self.coalitions)
        return sorted(ids)


@dataclass(frozen=True)
class CheckResult:
    kind: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ScenarioResult:
    scenario: Scenario
    seed: int
    outcome: Outcome
    transcript: object
    report: RunReport
    checks: tuple
    bidders: tuple

    @property
    def checks_passed(self) -> bool:
        return all(c.passed for c in self.checks)


# ---------------------------------------------------------------------------
# validation helpers


def _err(errors, path, message):
    errors.append(f"{path}: {message}")


def _check_keys(obj, path, required, optional, errors) -> bool:
    if not isinstance(obj, dict):
        _err(errors, path, "must be an object")
        return False
    ok = True
    for key in required:
        if key not in obj:
            _err(errors, path, f"missing required key {key!r}")
            ok = False
    for key in obj:
        if key not in required and key not in optional:
            _err(errors, f"{path}.{key}", "unknown key")
            ok = False
    return ok


def _get_str(obj, key, path, errors, default=None, required=False):
    if key not in obj:
        if required:
            return None
        return default
    v = obj[key]
    if not isinstance(v, str) or not v:
        _err(errors, f"{path}.{key}", "must be a non-empty string")
        return None
    return v


def _get_int(obj, key, path, errors, default=None, minimum=None):
    if key not in obj:
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        _err(errors, f"{path}.{key}", "must be an integer")
        return None
    if minimum is not None and v < minimum:
        _err(errors, f"{path}.{key}", f"must be >= {minimum}")
        return None
    return v


def _get_bool(obj, key, path, errors, default=False):
    if key not in obj:
        return default
    v = obj[key]
    if not isinstance(v, bool):
        _err(errors, f"{path}.{key}", "must be a boolean")
        return default
    return v


def _get_fraction(obj, key, path, errors, default=None):
    if key not in obj:
        return default
    v = obj[key]
    if isinstance(v, int) and not isinstance(v, bool):
        return Fraction(v)
    if isinstance(v, str):
        try:
            return Fraction(v)
        except (ValueError, ZeroDivisionError):
            pass
    _err(errors, f"{path}.{key}", "must be a fraction string like \"1/10\"")
    return None


def _get_money_map(obj, key, path, errors, lot_ids=None):
    if key not in obj:
        return None
    v = obj[key]
    if not isinstance(v, dict):
        _err(errors, f"{path}.{key}", "must map lot ids to amounts")
        return None
    out = {}
    for lot_id, amount in v.items():
        if lot_ids is not None and lot_id not in lot_ids:
            _err(errors, f"{path}.{key}.{lot_id}", "unknown lot")
            continue
        if isinstance(amount, bool) or not isinstance(amount, int) or amount < 0:
            _err(errors, f"{path}.{key}.{lot_id}", "must be an integer >= 0")
            continue
        out[lot_id] = amount
    return out


def _validate_strategy(obj, path, lot_ids, errors):
    optional = {
        "factor",
        "jump_fraction",
        "cell",
        "opening_bids",
        "bid",
        "caps",
        "rounds",
        "budget_aware",
        "withdraw_after_win",
    }
    if not _check_keys(obj, path, {"kind"}, optional, errors):
        return None
    kind = _get_str(obj, "kind", path, errors, required=True)
    if kind is None:
        return None
    if kind not in STRATEGY_KINDS:
        _err(errors, f"{path}.kind", f"unknown strategy kind {kind!r}")
        return None
    cell = None
    if "cell" in obj:
        raw = obj["cell"]
        if not isinstance(raw, list) or not all(isinstance(x, str) for x in raw):
            _err(errors, f"{path}.cell", "must be a list of lot ids")
        else:
            cell = tuple(raw)
            for lot_id in cell:
                if lot_id not in lot_ids:
                    _err(errors, f"{path}.cell", f"unknown lot {lot_id!r}")
    rounds = None
    if "rounds" in obj:
        raw = obj["rounds"]
        if not isinstance(raw, list):
            _err(errors, f"{path}.rounds", "must be a list of per-round raise maps")
        else:
            rounds = []
            for i, rnd in enumerate(raw):
                rpath = f"{path}.rounds[{i}]"
                if not isinstance(rnd, dict):
                    _err(errors, rpath, "must map lot ids to amounts")
                    rounds.append({})
                    continue
                parsed = {}
                for lot_id, amount in rnd.items():
                    if lot_id not in lot_ids:
                        _err(errors, f"{rpath}.{lot_id}", "unknown lot")
                        continue
                    if isinstance(amount, bool) or not isinstance(amount, int) or amount < 0:
                        _err(errors, f"{rpath}.{lot_id}", "must be an integer >= 0")
                        continue
                    parsed[lot_id] = amount
                rounds.append(parsed)
            rounds = tuple(rounds)
    bid = _get_int(obj, "bid", path, errors, minimum=0)
    try:
        return StrategySpec(
            kind=kind,
            factor=_get_fraction(obj, "factor", path, errors),
            jump_fraction=_get_fraction(obj, "jump_fraction", path, errors),
            cell=cell,
            opening_bids=_get_money_map(obj, "opening_bids", path, errors, lot_ids),
            bid=bid,
            caps=_get_money_map(obj, "caps", path, errors, lot_ids),
            rounds=rounds,
            budget_aware=_get_bool(obj, "budget_aware", path, errors),
            withdraw_after_win=_get_bool(obj, "withdraw_after_win", path, errors),
        )
    except InvalidInput as exc:
        _err(errors, path, str(exc))
        return None


def _validate_mechanism(obj, path, n_lots, errors):
    if not _check_keys(
        obj,
        path,
        {"kind"},
        {
            "format",
            "start_price",
            "increment",
            "decrement",
            "min_increment_pct",
            "min_increment_abs",
            "max_rounds",
            "fee",
        },
        errors,
    ):
        return None
    kind = _get_str(obj, "kind", path, errors, required=True)
    if kind is None or kind not in MECHANISM_KINDS:
        _err(errors, f"{path}.kind", f"must be one of {list(MECHANISM_KINDS)}")
        return None
    if kind in _SINGLE_LOT_KINDS and n_lots != 1:
        _err(errors, path, f"{kind} requires exactly one lot, scenario has {n_lots}")
    mech = {"kind": kind}
    allowed = {"kind"}
    if kind in ("english", "clock"):
        allowed |= {"start_price", "increment", "max_rounds"}
        mech["increment"] = _get_int(obj, "increment", path, errors, minimum=1)
        if mech["increment"] is None and "increment" not in obj:
            _err(errors, f"{path}.increment", "required for ascending formats")
        mech["start_price"] = _get_int(obj, "start_price", path, errors, minimum=0)
        mech["max_rounds"] = _get_int(obj, "max_rounds", path, errors, default=1_000_000, minimum=1)
    elif kind == "dutch":
        allowed |= {"start_price", "decrement", "max_rounds"}
        mech["decrement"] = _get_int(obj, "decrement", path, errors, minimum=1)
        if mech["decrement"] is None and "decrement" not in obj:
            _err(errors, f"{path}.decrement", "required for the descending format")
        start = _get_int(obj, "start_price", path, errors, minimum=0)
        if start is None and "start_price" not in obj:
            _err(errors, f"{path}.start_price", "required for the descending format")
        mech["start_price"] = start
        mech["max_rounds"] = _get_int(obj, "max_rounds", path, errors, default=1_000_000, minimum=1)
    elif kind == "sequential":
        allowed |= {"format", "start_price", "increment", "decrement", "max_rounds"}
        fmt = _get_str(obj, "format", path, errors, required=True)
        if fmt is None or fmt not in (
            "first_price",
            "second_price",
            "english",
            "dutch",
            "clock",
        ):
            _err(errors, f"{path}.format", "must name a single-lot format")
            return None
        mech["format"] = fmt
        mech["start_price"] = _get_int(obj, "start_price", path, errors, minimum=0)
        mech["increment"] = _get_int(obj, "increment", path, errors, minimum=1)
        mech["decrement"] = _get_int(obj, "decrement", path, errors, minimum=1)
        mech["max_rounds"] = _get_int(obj, "max_rounds", path, errors, default=1_000_000, minimum=1)
        if fmt in ("english", "clock") and mech["increment"] is None:
            _err(errors, f"{path}.increment", "required for ascending formats")
        if fmt == "dutch":
            if mech["decrement"] is None:
                _err(errors, f"{path}.decrement", "required for the descending format")
            if mech["start_price"] is None:
                _err(errors, f"{path}.start_price", "required for the descending format")
    elif kind == "smra":
        allowed |= {"min_increment_pct", "min_increment_abs", "max_rounds"}
        pct = _get_fraction(obj, "min_increment_pct", path, errors, default=Fraction(0))
        abs_inc = _get_int(obj, "min_increment_abs", path, errors, default=0, minimum=0)
        mech["min_increment_pct"] = pct
        mech["min_increment_abs"] = abs_inc
        mech["max_rounds"] = _get_int(obj, "max_rounds", path, errors, default=1000, minimum=1)
        if pct is not None and abs_inc is not None and pct <= 0 and abs_inc <= 0:
            _err(errors, path, "smra needs min_increment_pct or min_increment_abs > 0")
    elif kind in ("beauty_contest", "lottery"):
        allowed |= {"fee"}
        mech["fee"] = _get_int(obj, "fee", path, errors, default=0, minimum=0)
    for key in obj:
        if key not in allowed:
            _err(errors, f"{path}.{key}", f"not a setting of the {kind} mechanism")
    return mech


def _validate_check(obj, path, lot_ids, bidder_ids, errors):
    if not isinstance(obj, dict) or "kind" not in obj:
        _err(errors, path, "must be an object with a kind")
        return None
    kind = obj.get("kind")
    if kind not in CHECK_KINDS:
        _err(errors, f"{path}.kind", f"unknown check kind {kind!r}")
        return None
    spec = {"kind": kind}
    if kind == "closes_within":
        if not _check_keys(obj, path, {"kind", "rounds"}, set(), errors):
            return None
        spec["rounds"] = _get_int(obj, "rounds", path, errors, minimum=1)
    elif kind == "allocation":
        if not _check_keys(obj, path, {"kind", "expect"}, set(), errors):
            return None
        expect = obj["expect"]
        if not isinstance(expect, dict):
            _err(errors, f"{path}.expect", "must map lot ids to bidder ids")
            return None
        for lot_id, bidder in expect.items():
            if lot_id not in lot_ids:
                _err(errors, f"{path}.expect.{lot_id}", "unknown lot")
            if bidder != "UNSOLD" and bidder not in bidder_ids:
                _err(errors, f"{path}.expect.{lot_id}", f"unknown bidder {bidder!r}")
        spec["expect"] = dict(expect)
    elif kind == "winner":
        if not _check_keys(obj, path, {"kind", "lot", "bidder"}, set(), errors):
            return None
        if obj["lot"] not in lot_ids:
            _err(errors, f"{path}.lot", "unknown lot")
        if obj["bidder"] not in bidder_ids:
            _err(errors, f"{path}.bidder", "unknown bidder")
        spec["lot"], spec["bidder"] = obj["lot"], obj["bidder"]
    elif kind == "payment_in_range":
        if not _check_keys(obj, path, {"kind", "lots", "min", "max"}, set(), errors):
            return None
        lots = obj["lots"]
        if lots == "all":
            spec["lots"] = sorted(lot_ids)
        elif isinstance(lots, list) and all(l in lot_ids for l in lots):
            spec["lots"] = list(lots)
        else:
            _err(errors, f"{path}.lots", "must be \"all\" or a list of known lots")
            return None
        spec["min"] = _get_int(obj, "min", path, errors, minimum=0)
        spec["max"] = _get_int(obj, "max", path, errors, minimum=0)
    elif kind == "payment_lt":
        if not _check_keys(obj, path, {"kind", "lot", "others"}, set(), errors):
            return None
        if obj["lot"] not in lot_ids:
            _err(errors, f"{path}.lot", "unknown lot")
        others = obj["others"]
        if not isinstance(others, list) or not others or not all(
            l in lot_ids for l in others
        ):
            _err(errors, f"{path}.others", "must be a non-empty list of known lots")
            return None
        spec["lot"], spec["others"] = obj["lot"], list(others)
    elif kind == "sold_at_reserve":
        if not _check_keys(obj, path, {"kind"}, set(), errors):
            return None
    elif kind == "bidder_count":
        if not _check_keys(obj, path, {"kind", "expect"}, set(), errors):
            return None
        spec["expect"] = _get_int(obj, "expect", path, errors, minimum=0)
    elif kind == "flag":
        if not _check_keys(obj, path, {"kind", "name", "value"}, set(), errors):
            return None
        spec["name"] = _get_str(obj, "name", path, errors, required=True)
        spec["value"] = _get_bool(obj, "value", path, errors, default=True)
    elif kind == "distinct_ownership_tags":
        if not _check_keys(obj, path, {"kind"}, set(), errors):
            return None
    return spec


def validate_scenario(doc, source="scenario"):
    """Validate a parsed scenario document; returns a Scenario or raises
    ScenarioError listing every problem with its path."""
    errors = []
    top_required = {"name", "mechanism", "lots", "bidders"}
    top_optional = {
        "seed",
        "tie_break",
        "display_unit",
        "annotations",
        "coalitions",
        "rubric",
        "proposals",
        "checks",
    }
    if not _check_keys(doc, source, top_required, top_optional, errors):
        raise ScenarioError(errors)
    name = _get_str(doc, "name", source, errors, required=True)
    seed = _get_int(doc, "seed", source, errors, minimum=0)
    tie_break = doc.get("tie_break", "lowest_id")
    if tie_break not in ("lowest_id", "seeded_random"):
        _err(errors, f"{source}.tie_break", "must be lowest_id or seeded_random")
        tie_break = "lowest_id"
    display_unit, display_decimals = "", 0
    if "display_unit" in doc:
        du = doc["display_unit"]
        if _check_keys(du, f"{source}.display_unit", {"unit"}, {"decimals"}, errors):
            display_unit = _get_str(du, "unit", f"{source}.display_unit", errors, required=True) or ""
            display_decimals = _get_int(
                du, "decimals", f"{source}.display_unit", errors, default=0, minimum=0
            ) or 0
    annotations = None
    if "annotations" in doc:
        ann = doc["annotations"]
        if not isinstance(ann, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in ann.items()
        ):
            _err(errors, f"{source}.annotations", "must map strings to strings")
        else:
            annotations = dict(ann)

    # lots
    lots = []
    lot_ids = set()
    raw_lots = doc.get("lots")
    if not isinstance(raw_lots, list) or not raw_lots:
        _err(errors, f"{source}.lots", "must be a non-empty list")
        raw_lots = []
    for i, raw in enumerate(raw_lots):
        path = f"{source}.lots[{i}]"
        if not _check_keys(raw, path, {"id"}, {"size_weight", "reserve"}, errors):
            continue
        lot_id = _get_str(raw, "id", path, errors, required=True)
        size = _get_int(raw, "size_weight", path, errors, default=1, minimum=1)
        reserve = _get_int(raw, "reserve", path, errors, default=0, minimum=0)
        if lot_id is None or size is None or reserve is None:
            continue
        if lot_id in lot_ids:
            _err(errors, f"{path}.id", f"duplicate lot id {lot_id!r}")
            continue
        lot_ids.add(lot_id)
        lots.append(Lot(lot_id, size, reserve))

    # mechanism
    mech = None
    if "mechanism" in doc:
        mech = _validate_mechanism(doc["mechanism"], f"{source}.mechanism", len(lots), errors)
    kind = mech["kind"] if mech else None

    # bidders
    bidders = []
    bidder_ids = set()
    raw_bidders = doc.get("bidders")
    if not isinstance(raw_bidders, list) or not raw_bidders:
        _err(errors, f"{source}.bidders", "must be a non-empty list")
        raw_bidders = []
    needs_valuations = kind not in ("beauty_contest", "lottery", None)
    for i, raw in enumerate(raw_bidders):
        path = f"{source}.bidders[{i}]"
        if not _check_keys(
            raw,
            path,
            {"id"},
            {"strategy", "valuations", "budget", "ownership_tag"},
            errors,
        ):
            continue
        bidder_id = _get_str(raw, "id", path, errors, required=True)
        if bidder_id is None:
            continue
        if bidder_id in bidder_ids:
            _err(errors, f"{path}.id", f"duplicate bidder id {bidder_id!r}")
            continue
        bidder_ids.add(bidder_id)
        if "strategy" in raw:
            strategy = _validate_strategy(raw["strategy"], f"{path}.strategy", lot_ids, errors)
        else:
            strategy = StrategySpec(kind=TRUTHFUL)
        valuations = _get_money_map(raw, "valuations", path, errors, lot_ids)
        if needs_valuations:
            if valuations is None:
                _err(errors, f"{path}.valuations", "required for auction mechanisms")
            else:
                for lot in lots:
                    if lot.id not in valuations:
                        _err(
                            errors,
                            f"{path}.valuations",
                            f"missing value for lot {lot.id!r}",
                        )
        budget = _get_int(raw, "budget", path, errors, minimum=0)
        tag = _get_str(raw, "ownership_tag", path, errors)
        if strategy is not None:
            bidders.append(
                BidderDef(
                    id=bidder_id,
                    strategy=strategy,
                    valuations=valuations,
                    budget=budget,
                    ownership_tag=tag,
                )
            )

    # coalitions
    coalitions = []
    if "coalitions" in doc:
        raw_coalitions = doc["coalitions"]
        if not isinstance(raw_coalitions, list):
            _err(errors, f"{source}.coalitions", "must be a list")
            raw_coalitions = []
        taken = set()
        for i, raw in enumerate(raw_coalitions):
            path = f"{source}.coalitions[{i}]"
            if not _check_keys(
                raw, path, {"members", "id"}, {"strategy", "ownership_tag"}, errors
            ):
                continue
            members = raw.get("members")
            if not isinstance(members, list) or len(members) < 2:
                _err(errors, f"{path}.members", "must list at least two bidders")
                continue
            bad = False
            for m in members:
                if m not in bidder_ids:
                    _err(errors, f"{path}.members", f"unknown bidder {m!r}")
                    bad = True
                elif m in taken:
                    _err(errors, f"{path}.members", f"bidder {m!r} already merged")
                    bad = True
            merged_id = _get_str(raw, "id", path, errors, required=True)
            if merged_id is None or bad:
                continue
            if merged_id in bidder_ids:
                _err(errors, f"{path}.id", f"collides with bidder {merged_id!r}")
                continue
            taken.update(members)
            if "strategy" in raw:
                strategy = _validate_strategy(
                    raw["strategy"], f"{path}.strategy", lot_ids, errors
                )
            else:
                strategy = StrategySpec(kind=TRUTHFUL)
            if strategy is None:
                continue
            coalitions.append(
                MergeDef(
                    members=tuple(members),
                    merged_id=merged_id,
                    strategy=strategy,
                    ownership_tag=_get_str(raw, "ownership_tag", path, errors),
                )
            )

    # strategy/mechanism compatibility
    effective_kind = kind
    if kind == "sequential" and mech:
        effective_kind = mech.get("format")
    if effective_kind in _ALLOWED_STRATEGIES:
        allowed = _ALLOWED_STRATEGIES[effective_kind]
        pool = [(f"{source}.bidders[{i}]", b) for i, b in enumerate(bidders)]
        pool += [(f"{source}.coalitions[{i}]", c) for i, c in enumerate(coalitions)]
        merged_members = {m for c in coalitions for m in c.members}
        for path, entry in pool:
            if isinstance(entry, BidderDef) and entry.id in merged_members:
                continue  # replaced by its coalition before the run
            if entry.strategy.kind not in allowed:
                _err(
                    errors,
                    f"{path}.strategy.kind",
                    f"{entry.strategy.kind!r} cannot play the {effective_kind} format",
                )

    # contest inputs
    rubric = None
    proposals = None
    post_ids = None
    if kind == "beauty_contest":
        if "rubric" not in doc:
            _err(errors, f"{source}.rubric", "required for beauty_contest")
        else:
            raw = doc["rubric"]
            if _check_keys(raw, f"{source}.rubric", {"criteria"}, {"tie_rule"}, errors):
                criteria = []
                raw_criteria = raw.get("criteria")
                if not isinstance(raw_criteria, list) or not raw_criteria:
                    _err(errors, f"{source}.rubric.criteria", "must be a non-empty list")
                else:
                    for i, c in enumerate(raw_criteria):
                        cpath = f"{source}.rubric.criteria[{i}]"
                        if not _check_keys(c, cpath, {"name", "weight"}, set(), errors):
                            continue
                        cname = _get_str(c, "name", cpath, errors, required=True)
                        weight = _get_fraction(c, "weight", cpath, errors)
                        if cname and weight is not None:
                            if weight <= 0:
                                _err(errors, f"{cpath}.weight", "must be positive")
                            else:
                                criteria.append((cname, weight))
                tie_rule = raw.get("tie_rule", TIE_LOWEST_ID)
                if tie_rule not in (TIE_LOWEST_ID, TIE_SEEDED_RANDOM):
                    _err(errors, f"{source}.rubric.tie_rule", "unknown tie rule")
                    tie_rule = TIE_LOWEST_ID
                if criteria:
                    try:
                        rubric = ContestRubric(tuple(criteria), tie_rule)
                    except InvalidInput as exc:
                        _err(errors, f"{source}.rubric", str(exc))
        merged_members = {m for c in coalitions for m in c.members}
        post_ids = {b.id for b in bidders if b.id not in merged_members}
        post_ids.update(c.merged_id for c in coalitions)
        if "proposals" not in doc:
            _err(errors, f"{source}.proposals", "required for beauty_contest")
        else:
            raw = doc["proposals"]
            if not isinstance(raw, list) or not raw:
                _err(errors, f"{source}.proposals", "must be a non-empty list")
            else:
                parsed = []
                seen = set()
                for i, p in enumerate(raw):
                    ppath = f"{source}.proposals[{i}]"
                    if not _check_keys(p, ppath, {"bidder", "scores"}, set(), errors):
                        continue
                    pb = _get_str(p, "bidder", ppath, errors, required=True)
                    if pb is None:
                        continue
                    if pb not in post_ids:
                        _err(errors, f"{ppath}.bidder", f"unknown bidder {pb!r}")
                        continue
                    if pb in seen:
                        _err(errors, f"{ppath}.bidder", "duplicate proposal")
                        continue
                    seen.add(pb)
                    scores = p.get("scores")
                    if not isinstance(scores, dict):
                        _err(errors, f"{ppath}.scores", "must map criteria to scores")
                        continue
                    try:
                        parsed.append(Proposal(pb, dict(scores)))
                    except InvalidInput as exc:
                        _err(errors, f"{ppath}.scores", str(exc))
                proposals = tuple(parsed)
    else:
        for key in ("rubric", "proposals"):
            if key in doc:
                _err(errors, f"{source}.{key}", "only valid for beauty_contest")

    # checks
    checks = []
    if "checks" in doc:
        raw_checks = doc["checks"]
        if not isinstance(raw_checks, list):
            _err(errors, f"{source}.checks", "must be a list")
            raw_checks = []
        merged_members = {m for c in coalitions for m in c.members}
        known_bidders = {b.id for b in bidders if b.id not in merged_members}
        known_bidders.update(c.merged_id for c in coalitions)
        for i, raw in enumerate(raw_checks):
            parsed = _validate_check(
                raw, f"{source}.checks[{i}]", lot_ids, known_bidders, errors
            )
            if parsed is not None:
                checks.append(parsed)

    if errors:
        raise ScenarioError(errors)
    return Scenario(
        name=name,
        mechanism=mech,
        lots=tuple(lots),
        bidders=tuple(bidders),
        coalitions=tuple(coalitions),
        checks=tuple(checks),
        seed=seed,
        tie_break=tie_break,
        display_unit=display_unit,
        display_decimals=display_decimals,
        annotations=annotations,
        rubric=rubric,
        proposals=proposals,
    )


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInput(f"cannot read scenario {p}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{p.name}: invalid JSON ({exc})"]) from None
    return validate_scenario(doc, source=p.name)


# ---------------------------------------------------------------------------
# running scenarios


def _post_transform(scenario: Scenario):
    """Apply the coalition transform; returns (bidder defs, profile)."""
    values = {}
    budgets = {}
    for b in scenario.bidders:
        values[b.id] = {
            lot.id: (b.valuations or {}).get(lot.id, 0) for lot in scenario.lots
        }
        if b.budget is not None:
            budgets[b.id] = b.budget
    profile = ValuationProfile(values, budgets or None)
    if scenario.coalitions:
        transform = CoalitionTransform(
            tuple(Merge(c.members, c.merged_id) for c in scenario.coalitions)
        )
        profile = apply_coalitions(transform, profile)
    merged_members = {m for c in scenario.coalitions for m in c.members}
    post = [b for b in scenario.bidders if b.id not in merged_members]
    for c in scenario.coalitions:
        post.append(
            BidderDef(
                id=c.merged_id,
                strategy=c.strategy,
                valuations=dict(profile.values[c.merged_id]),
                budget=(profile.budgets or {}).get(c.merged_id),
                ownership_tag=c.ownership_tag,
            )
        )
    post.sort(key=lambda b: b.id)
    return tuple(post), profile


def _sealed_amount(b: BidderDef, lot: Lot, n_bidders: int):
    spec = b.strategy
    if spec.kind == SCRIPTED:
        amount = spec.bid
    else:
        amount = sealed_bid_of(spec, (b.valuations or {}).get(lot.id, 0), n_bidders)
    if amount is None:
        return None
    if spec.budget_aware and b.budget is not None:
        amount = min(amount, b.budget)
    return amount


def _cap_predicate(b: BidderDef, lot: Lot, n_bidders: int):
    cap = stay_cap(
        b.strategy,
        (b.valuations or {}).get(lot.id, 0),
        b.budget,
        n_bidders,
        lot.id,
    )
    return lambda price, cap=cap: cap is not None and price <= cap


def run_scenario(scenario: Scenario, seed=None) -> ScenarioResult:
    """Run the scenario's mechanism and evaluate its expected checks."""
    if seed is None:
        seed = scenario.seed if scenario.seed is not None else 0
    bidders, profile = _post_transform(scenario)
    rng = make_rng(seed) if scenario.tie_break == "seeded_random" else None
    mech = scenario.mechanism
    kind = mech["kind"]
    n = len(bidders)
    if kind in ("first_price", "second_price"):
        lot = scenario.lots[0]
        params = AuctionParams(lots=scenario.lots)
        bids = []
        for b in bidders:
            amount = _sealed_amount(b, lot, n)
            if amount is not None:
                bids.append(Bid(b.id, lot.id, amount))
        runner = run_first_price_sealed if kind == "first_price" else run_second_price_sealed
        outcome, transcript = runner(params, bids, seed=seed, rng=rng)
    elif kind in ("english", "clock"):
        lot = scenario.lots[0]
        start = mech.get("start_price")
        params = AuctionParams(
            lots=scenario.lots,
            min_increment_abs=mech["increment"],
            start_price=lot.reserve if start is None else start,
            max_rounds=mech["max_rounds"],
        )
        policies = {b.id: _cap_predicate(b, lot, n) for b in bidders}
        runner = run_english_ascending if kind == "english" else run_clock_ascending
        outcome, transcript = runner(params, policies, seed=seed, rng=rng)
    elif kind == "dutch":
        lot = scenario.lots[0]
        params = AuctionParams(
            lots=scenario.lots,
            decrement=mech["decrement"],
            start_price=mech["start_price"],
            max_rounds=mech["max_rounds"],
        )
        stops = {}
        for b in bidders:
            cap = stay_cap(
                b.strategy, (b.valuations or {}).get(lot.id, 0), b.budget, n, lot.id
            )
            if cap is not None:
                stops[b.id] = cap
        outcome, transcript = run_dutch(params, stops, seed=seed, rng=rng)
    elif kind == "sequential":
        fmt = mech["format"]
        stage_params = []
        for lot in scenario.lots:
            start = mech.get("start_price")
            stage_params.append(
                AuctionParams(
                    lots=(lot,),
                    min_increment_abs=mech.get("increment") or 0,
                    start_price=lot.reserve if start is None else start,
                    decrement=mech.get("decrement") or 0,
                    max_rounds=mech["max_rounds"],
                )
            )
        agents = {
            b.id: SequentialAgent(b.id, b.strategy, b.valuations or {}, b.budget)
            for b in bidders
        }
        outcome, transcript = run_sequential(stage_params, fmt, agents, seed=seed, rng=rng)
    elif kind == "smra":
        params = AuctionParams(
            lots=scenario.lots,
            min_increment_pct=mech["min_increment_pct"],
            min_increment_abs=mech["min_increment_abs"],
            max_rounds=mech["max_rounds"],
        )
        policies = {
            b.id: smra_policy(b.strategy, b.id, b.valuations or {}) for b in bidders
        }
        outcome, transcript = run_smra(params, policies, seed=seed, rng=rng)
    elif kind == "beauty_contest":
        lot = scenario.lots[0]
        contest_rng = rng
        if scenario.rubric.tie_rule == TIE_SEEDED_RANDOM and contest_rng is None:
            contest_rng = make_rng(seed)
        outcome, transcript = run_beauty_contest(
            scenario.rubric,
            scenario.proposals,
            lot,
            fee=mech["fee"],
            seed=seed,
            rng=contest_rng,
        )
    elif kind == "lottery":
        lot = scenario.lots[0]
        outcome, transcript = run_lottery(
            [b.id for b in bidders],
            lot,
            make_rng(seed),
            fee=mech["fee"],
            seed=seed,
        )
    else:
        raise InvalidInput(f"unknown mechanism kind {kind!r}")
    report = analyze(outcome, transcript, profile)
    checks = evaluate_checks(scenario, bidders, outcome, report)
    return ScenarioResult(
        scenario=scenario,
        seed=seed,
        outcome=outcome,
        transcript=transcript,
        report=report,
        checks=checks,
        bidders=bidders,
    )


def evaluate_checks(scenario, bidders, outcome, report):
    lots = {l.id: l for l in scenario.lots}
    results = []
    for spec in scenario.checks:
        kind = spec["kind"]
        if kind == "closes_within":
            ok = report.rounds <= spec["rounds"]
            detail = f"closed in {report.rounds} rounds (limit {spec['rounds']})"
        elif kind == "allocation":
            mismatches = []
            for lot_id, expected in spec["expect"].items():
                actual = outcome.allocation.get(lot_id)
                actual_name = "UNSOLD" if actual is None else actual
                if actual_name != expected:
                    mismatches.append(f"{lot_id}: {actual_name} != {expected}")
            ok = not mismatches
            detail = "allocation as expected" if ok else "; ".join(mismatches)
        elif kind == "winner":
            actual = outcome.allocation.get(spec["lot"])
            ok = actual == spec["bidder"]
            detail = f"lot {spec['lot']} went to {actual or 'UNSOLD'}"
        elif kind == "payment_in_range":
            bad = []
            for lot_id in spec["lots"]:
                p = outcome.payments.get(lot_id)
                if p is None:
                    bad.append(f"{lot_id} unsold")
                elif not spec["min"] <= p <= spec["max"]:
                    bad.append(f"{lot_id} paid {p}")
            ok = not bad
            detail = (
                f"payments within [{spec['min']}, {spec['max']}]"
                if ok
                else "; ".join(bad)
            )
        elif kind == "payment_lt":
            p = outcome.payments.get(spec["lot"])
            others = [outcome.payments.get(o) for o in spec["others"]]
            if p is None or any(o is None for o in others):
                ok = False
                detail = "a compared lot went unsold"
            else:
                bound = min(others)
                ok = p < bound
                detail = f"{spec['lot']} paid {p}, others at least {bound}"
        elif kind == "sold_at_reserve":
            bad = []
            for lot_id, lot in lots.items():
                winner = outcome.allocation.get(lot_id)
                if winner is None:
                    bad.append(f"{lot_id} unsold")
                elif outcome.payments[lot_id] != lot.reserve:
                    bad.append(
                        f"{lot_id} paid {outcome.payments[lot_id]} (reserve {lot.reserve})"
                    )
            ok = not bad
            detail = "every lot sold exactly at reserve" if ok else "; ".join(bad)
        elif kind == "bidder_count":
            ok = len(bidders) == spec["expect"]
            detail = f"{len(bidders)} bidders after transforms (expected {spec['expect']})"
        elif kind == "flag":
            present = report.has(spec["name"])
            ok = present == spec["value"]
            detail = f"flag {spec['name']} {'set' if present else 'not set'}"
        elif kind == "distinct_ownership_tags":
            tags = {}
            for b in bidders:
                if b.ownership_tag is not None:
                    tags.setdefault(b.ownership_tag, []).append(b.id)
            dupes = {t: ids for t, ids in tags.items() if len(ids) > 1}
            ok = not dupes
            detail = (
                "no shared ownership tags"
                if ok
                else "; ".join(f"{t}: {', '.join(ids)}" for t, ids in sorted(dupes.items()))
            )
        else:
            ok, detail = False, f"unknown check kind {kind!r}"
        results.append(CheckResult(kind=kind, passed=ok, detail=detail))
    return tuple(results)


# ---------------------------------------------------------------------------
# license-award history


METHOD_AUCTION = "auction"
METHOD_BEAUTY_CONTEST = "beauty_contest"


@dataclass(frozen=True)
class AdoptionRecord:
    year: int
    country: str
    method: str


def load_adoption_dataset():
    """Load the bundled year/country/method table of license awards."""
    text = resources.files("spectra").joinpath("data/adoption.csv").read_text("utf-8")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != ["year", "country", "method"]:
        raise InvalidInput("adoption dataset must have columns year,country,method")
    records = []
    for i, row in enumerate(reader, start=2):
        try:
            year = int(row["year"])
        except (TypeError, ValueError):
            raise InvalidInput(f"adoption dataset line {i}: bad year") from None
        if not 1999 <= year <= 2007:
            raise InvalidInput(f"adoption dataset line {i}: year {year} out of range")
        method = row["method"]
        if method not in (METHOD_AUCTION, METHOD_BEAUTY_CONTEST):
            raise InvalidInput(f"adoption dataset line {i}: unknown method {method!r}")
        country = row["country"]
        if not country:
            raise InvalidInput(f"adoption dataset line {i}: empty country")
        records.append(AdoptionRecord(year=year, country=country, method=method))
    return tuple(records)


def filter_adoption(records, year=None, method=None):
    out = [
        r
        for r in records
        if (year is None or r.year == year) and (method is None or r.method == method)
    ]
    return sorted(out, key=lambda r: (r.year, r.method, r.country))
