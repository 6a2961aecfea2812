"""Command line interface.

Commands:
  run       execute a scenario file, write its transcript, report checks
  mc        run a Monte Carlo experiment spec, CSV on stdout
  replay    re-validate a transcript against the recorded mechanism rules
  history   print the bundled license-award history table
  validate  schema-check a scenario file without running it

Exit codes: 0 success, 1 validation or configuration error, 2 failed
scenario checks or a transcript rule violation. Diagnostics go to stderr;
stdout carries only command output. SPECTRA_SEED supplies a default seed
when --seed is absent.
"""

import argparse
import csv
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from .core import AuctionAborted, InvalidInput, Transcript
from .mechanisms import find_violation
from .metrics import CellSpec, monte_carlo, report_text
from .scenarios import (
    ScenarioError,
    filter_adoption,
    load_adoption_dataset,
    load_scenario,
    run_scenario,
)
from .strategies import SCRIPTED, SHADED, TRUTHFUL, StrategySpec

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CHECK_FAILED = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse would sys.exit(2); remap usage problems to exit code 1
    def error(self, message):
        raise _UsageError(message)


def _resolve_seed(cli_seed, fallback):
    """Seed precedence: --seed, then SPECTRA_SEED, then the file, then 0."""
    if cli_seed is not None:
        return cli_seed
    env = os.environ.get("SPECTRA_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise InvalidInput(f"SPECTRA_SEED must be an integer, got {env!r}") from None
    if fallback is not None:
        return fallback
    return 0


def _emit_report(result, fmt):
    report = result.report
    scenario = result.scenario
    if fmt == "json":
        doc = {
            "scenario": scenario.name,
            "seed": result.seed,
            "outcome": result.outcome.to_dict(),
            "report": report.to_dict(),
            "checks": [
                {"kind": c.kind, "passed": c.passed, "detail": c.detail}
                for c in result.checks
            ],
        }
        print(json.dumps(doc, indent=2, sort_keys=True))
    elif fmt == "csv":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(
            [
                "scenario",
                "mechanism",
                "seed",
                "revenue",
                "efficiency",
                "rounds",
                "winners",
                "flags",
                "checks_passed",
            ]
        )
        winners = sorted({b for b in report.winners.values() if b is not None})
        writer.writerow(
            [
                scenario.name,
                report.mechanism,
                result.seed,
                report.revenue,
                "%.6f" % report.efficiency,
                report.rounds,
                "|".join(winners),
                "|".join(report.flags),
                int(result.checks_passed),
            ]
        )
    else:
        print(f"scenario {scenario.name} (seed {result.seed})")
        sys.stdout.write(
            report_text(report, scenario.display_decimals, scenario.display_unit)
        )
        for c in result.checks:
            status = "PASS" if c.passed else "FAIL"
            print(f"check {c.kind}: {status} ({c.detail})")
        if result.checks:
            passed = sum(1 for c in result.checks if c.passed)
            print(f"checks passed: {passed}/{len(result.checks)}")


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    seed = _resolve_seed(args.seed, scenario.seed)
    result = run_scenario(scenario, seed=seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    transcript_path = out_dir / f"{scenario.name}.transcript.jsonl"
    transcript_path.write_text(result.transcript.to_jsonl(), encoding="utf-8")
    outcome_path = out_dir / f"{scenario.name}.outcome.json"
    outcome_path.write_text(
        json.dumps(result.outcome.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    _emit_report(result, args.format)
    return EXIT_OK if result.checks_passed else EXIT_CHECK_FAILED


_MC_STRATEGY_KINDS = (TRUTHFUL, SHADED, SCRIPTED)


def _parse_cell(raw, path, errors):
    if not isinstance(raw, dict):
        errors.append(f"{path}: must be an object")
        return None
    known = {"mechanism", "strategy", "n_bidders", "low", "high", "reserve"}
    for key in raw:
        if key not in known:
            errors.append(f"{path}.{key}: unknown key")
    for key in ("mechanism", "strategy", "n_bidders", "low", "high"):
        if key not in raw:
            errors.append(f"{path}: missing required key {key!r}")
            return None
    strat_raw = raw["strategy"]
    if not isinstance(strat_raw, dict) or "kind" not in strat_raw:
        errors.append(f"{path}.strategy: must be an object with a kind")
        return None
    kind = strat_raw.get("kind")
    if kind not in _MC_STRATEGY_KINDS:
        errors.append(
            f"{path}.strategy.kind: must be one of {list(_MC_STRATEGY_KINDS)}"
        )
        return None
    for key in strat_raw:
        if key not in ("kind", "factor", "bid"):
            errors.append(f"{path}.strategy.{key}: unknown key")
    factor = None
    if "factor" in strat_raw:
        try:
            factor = Fraction(str(strat_raw["factor"]))
        except (ValueError, ZeroDivisionError):
            errors.append(f"{path}.strategy.factor: must be a fraction like \"2/3\"")
            return None
    try:
        strategy = StrategySpec(kind=kind, factor=factor, bid=strat_raw.get("bid"))
        return CellSpec(
            mechanism=raw["mechanism"],
            strategy=strategy,
            n_bidders=raw["n_bidders"],
            low=raw["low"],
            high=raw["high"],
            reserve=raw.get("reserve", 0),
        )
    except InvalidInput as exc:
        errors.append(f"{path}: {exc}")
        return None


def _load_mc_spec(path):
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInput(f"cannot read experiment spec {p}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{p.name}: invalid JSON ({exc})"]) from None
    errors = []
    source = p.name
    if not isinstance(doc, dict):
        raise ScenarioError([f"{source}: must be an object"])
    for key in doc:
        if key not in ("name", "runs", "seed", "cells"):
            errors.append(f"{source}.{key}: unknown key")
    runs = doc.get("runs", 1000)
    if isinstance(runs, bool) or not isinstance(runs, int) or runs < 1:
        errors.append(f"{source}.runs: must be an integer >= 1")
    seed = doc.get("seed")
    if seed is not None and (
        isinstance(seed, bool) or not isinstance(seed, int) or seed < 0
    ):
        errors.append(f"{source}.seed: must be an integer >= 0")
        seed = None
    raw_cells = doc.get("cells")
    cells = []
    if not isinstance(raw_cells, list) or not raw_cells:
        errors.append(f"{source}.cells: must be a non-empty list")
    else:
        for i, raw in enumerate(raw_cells):
            cell = _parse_cell(raw, f"{source}.cells[{i}]", errors)
            if cell is not None:
                cells.append(cell)
    if errors:
        raise ScenarioError(errors)
    return runs, seed, cells


def cmd_mc(args) -> int:
    spec_runs, spec_seed, cells = _load_mc_spec(args.spec)
    runs = args.runs if args.runs is not None else spec_runs
    seed = _resolve_seed(args.seed, spec_seed)
    table = monte_carlo(cells, runs, seed, jobs=args.jobs)
    sys.stdout.write(table.to_csv())
    return EXIT_OK


def cmd_replay(args) -> int:
    text = Path(args.transcript).read_text(encoding="utf-8")
    transcript = Transcript.from_jsonl(text)
    if not transcript.verify_hash():
        print(
            "error: transcript header hash does not match its configuration",
            file=sys.stderr,
        )
        return EXIT_ERROR
    violation = find_violation(transcript)
    if violation is not None:
        index, message = violation
        print(f"violation at event {index}: {message}")
        return EXIT_CHECK_FAILED
    print(
        f"ok: {len(transcript.events)} events consistent with the "
        f"{transcript.mechanism} rules (seed {transcript.seed})"
    )
    return EXIT_OK


def cmd_history(args) -> int:
    records = load_adoption_dataset()
    rows = filter_adoption(records, year=args.year, method=args.method)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["year", "country", "method"])
    for r in rows:
        writer.writerow([r.year, r.country, r.method])
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    print(f"{args.scenario}: valid scenario {scenario.name!r}")
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="spectra",
        description="Deterministic simulation of spectrum-license allocation.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    run_p = sub.add_parser("run", help="run a scenario file and evaluate its checks")
    run_p.add_argument("--scenario", required=True, help="scenario JSON file")
    run_p.add_argument("--seed", type=int, help="seed override (default SPECTRA_SEED)")
    run_p.add_argument("--out", default=".", help="directory for transcript/outcome files")
    run_p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    run_p.set_defaults(func=cmd_run)

    mc_p = sub.add_parser("mc", help="run a Monte Carlo experiment spec")
    mc_p.add_argument("--spec", required=True, help="experiment JSON file")
    mc_p.add_argument("--runs", type=int, help="runs per cell (overrides the spec)")
    mc_p.add_argument("--seed", type=int, help="seed override (default SPECTRA_SEED)")
    mc_p.add_argument("--jobs", type=int, default=1, help="worker processes")
    mc_p.set_defaults(func=cmd_mc)

    replay_p = sub.add_parser("replay", help="re-validate a transcript")
    replay_p.add_argument("--transcript", required=True, help="transcript JSONL file")
    replay_p.set_defaults(func=cmd_replay)

    history_p = sub.add_parser("history", help="print the license-award history")
    history_p.add_argument("--year", type=int, help="filter by year")
    history_p.add_argument(
        "--method", choices=("auction", "beauty_contest"), help="filter by method"
    )
    history_p.set_defaults(func=cmd_history)

    validate_p = sub.add_parser("validate", help="schema-check a scenario file")
    validate_p.add_argument("--scenario", required=True, help="scenario JSON file")
    validate_p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except ScenarioError as exc:
        for line in exc.errors:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_ERROR
    except (InvalidInput, AuctionAborted, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def entrypoint():
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
