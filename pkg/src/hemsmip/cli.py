"""Command line entry point: ``hemsmip <command> [options]``.

Exit codes: 0 success, 1 infeasible, 2 time limit hit without a solution,
3 bad input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from importlib import resources
from pathlib import Path
from typing import List, Optional

from . import bench
from .bnb import SolverOptions, solve
from .costs import household_cost
from .io import ScenarioError, load_scenario
from .model import (INFEASIBLE, OPTIMAL, TIMEOUT_NO_INCUMBENT, build_no_trade_model,
                    build_unified_model)
from .oracle import OracleOptions, OracleRefused, enumerate_no_trade, enumerate_unified
from .pareto import BoundsViolateFeasibility, InfeasibleHousehold, solve_pareto, verify_pareto
from .report import emit_report, plot_ledgers
from .scenario import expand_virtual_appliances, validate_scenario

EXIT_OK, EXIT_INFEASIBLE, EXIT_TIMEOUT, EXIT_INPUT = 0, 1, 2, 3

log = logging.getLogger("hemsmip")


def bundled_fixture() -> Path:
    return Path(str(resources.files("hemsmip") / "fixtures" / "paper_2house.json"))


class InputError(Exception):
    pass


def _floats(text: Optional[str], name: str) -> Optional[List[float]]:
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"{name}: expected comma-separated numbers, got {text!r}") from None


def _ints(text: str, name: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"{name}: expected comma-separated integers, got {text!r}") from None


def _options(args) -> SolverOptions:
    workers = 1 if args.deterministic else args.workers
    try:
        return SolverOptions(abs_gap=args.gap, rel_gap=args.gap, time_limit=args.time_limit,
                             workers=workers, deterministic=args.deterministic or workers == 1,
                             seed=args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _scenario(args):
    path = Path(args.scenario) if args.scenario else bundled_fixture()
    return expand_virtual_appliances(load_scenario(path))


def _household(args, s) -> int:
    k = args.household - 1
    if not 0 <= k < len(s.households):
        raise InputError(f"--household must lie in [1, {len(s.households)}], got {args.household}")
    return k


def _emit_summary(fields: dict, households: List[dict], fmt: str) -> str:
    """Status block plus one line per household cost."""
    if fmt == "json":
        return json.dumps({**fields, "households": households}, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in fields.items():
            w.writerow([k, v if not isinstance(v, list) else ";".join(map(repr, v))])
        w.writerow([])
        w.writerow(["household", "energy", "disutility", "total"])
        for h in households:
            w.writerow([h["household"], repr(h["energy"]), repr(h["disutility"]), repr(h["total"])])
        return buf.getvalue()
    width = max(len(k) for k in fields)
    lines = [f"{k.ljust(width)}  {_fmt(v)}" for k, v in fields.items()]
    for h in households:
        lines.append(f"household {h['household']}: energy {h['energy']:.2f}, "
                     f"disutility {h['disutility']:.2f}, total {h['total']:.2f}")
    return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6f}" if math.isfinite(v) else str(v)
    if isinstance(v, list):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def _costs(assignment, s, ks) -> List[dict]:
    return [{"household": k + 1, **household_cost(assignment, s, k)} for k in ks]


def _exit_for(status: str) -> int:
    if status == INFEASIBLE:
        return EXIT_INFEASIBLE
    if status == TIMEOUT_NO_INCUMBENT:
        return EXIT_TIMEOUT
    return EXIT_OK


def _solution_fields(sol) -> dict:
    return {"status": sol.status, "objective": sol.objective, "gap": sol.gap,
            "lower_bound": sol.lower_bound, "nodes": sol.nodes, "wall_time_s": sol.wall_time}


# -- commands -----------------------------------------------------------------

def cmd_validate(args, out) -> int:
    path = Path(args.scenario) if args.scenario else bundled_fixture()
    s = load_scenario(path)  # raises with every violation listed
    problems = validate_scenario(s)
    out.write(_emit_summary({"scenario": str(path), "valid": not problems,
                             "households": len(s.households), "timeslots": s.horizon}, [], args.format))
    return EXIT_OK


def cmd_solve_notrade(args, out) -> int:
    s = _scenario(args)
    k = _household(args, s)
    sol = solve(build_no_trade_model(s, k), _options(args))
    hh = _costs(sol.assignment, s, [k]) if sol.has_incumbent else []
    out.write(_emit_summary(_solution_fields(sol), hh, args.format))
    return _exit_for(sol.status)


def cmd_solve_unified(args, out) -> int:
    s = _scenario(args)
    bounds = _floats(args.bounds, "--bounds")
    try:
        m = build_unified_model(s, bounds)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    sol = solve(m, _options(args))
    hh = _costs(sol.assignment, s, range(len(s.households))) if sol.has_incumbent else []
    out.write(_emit_summary(_solution_fields(sol), hh, args.format))
    return _exit_for(sol.status)


def _pareto(args, s):
    shrink = _floats(getattr(args, "shrink", None), "--shrink")
    try:
        return solve_pareto(s, _options(args), enforce_ceiling=not args.no_ceiling, shrink=shrink)
    except InfeasibleHousehold as exc:
        log.error("%s", exc)
        return exc
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_pareto(args, out) -> int:
    s = _scenario(args)
    r = _pareto(args, s)
    if isinstance(r, InfeasibleHousehold):
        out.write(_emit_summary({"status": INFEASIBLE, "infeasible_household": r.household + 1}, [], args.format))
        return EXIT_INFEASIBLE
    fields = _solution_fields(r.traded)
    fields["objective"] = r.total_Y
    fields["no_trade_costs"] = list(r.no_trade_costs)
    if r.traded.has_incumbent:
        fields["micro_prices"] = list(r.micro_prices)
        fields["verified"] = verify_pareto(r, s)["passed"] if not args.no_ceiling else "n/a"
        hh = [{"household": k + 1, **c} for k, c in enumerate(r.household_costs)]
    else:
        hh = []
    out.write(_emit_summary(fields, hh, args.format))
    return _exit_for(r.status)


def cmd_oracle(args, out) -> int:
    s = _scenario(args)
    try:
        opts = OracleOptions(max_booleans=args.max_booleans, grid_levels=args.levels)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    try:
        if args.household is not None:
            k = _household(args, s)
            sol = enumerate_no_trade(s, k, opts)
            ks = [k]
        else:
            bounds = _floats(args.bounds, "--bounds")
            if bounds is None:
                bounds = [enumerate_no_trade(s, k, opts).objective for k in range(len(s.households))]
            sol = enumerate_unified(s, bounds, opts)
            ks = list(range(len(s.households)))
    except OracleRefused as exc:
        raise InputError(str(exc)) from None
    hh = _costs(sol.assignment, s, ks) if sol.status == OPTIMAL else []
    out.write(_emit_summary({"status": sol.status, "objective": sol.objective}, hh, args.format))
    return _exit_for(sol.status)


def cmd_bench(args, out) -> int:
    sizes = _ints(args.sizes, "--sizes")
    try:
        records, summary = bench.run_benchmark(args.dimension, sizes, args.repetitions, args.cutoff,
                                               args.seed, 1 if args.deterministic else args.workers)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    text = bench.records_csv(records)
    if args.csv:
        Path(args.csv).write_text(text)
    if args.chart:
        bench.plot_summary(summary, args.dimension, args.chart, args.cutoff)
    if args.format == "json":
        out.write(json.dumps({"records": [r.__dict__ for r in records], "summary": summary}, indent=2) + "\n")
    elif args.format == "csv":
        out.write(text)
    else:
        out.write(f"{args.dimension:>10}  runs  median_s  timeout_%  errors\n")
        for row in summary:
            out.write(f"{row['size']:>10}  {row['runs']:>4}  {row['median_s']:>8.3f}  "
                      f"{row['timeout_pct']:>9.1f}  {row['errors']:>6}\n")
    return EXIT_OK


def cmd_report(args, out) -> int:
    s = _scenario(args)
    if args.mode == "notrade":
        if args.household is None:
            raise InputError("report --mode notrade needs --household")
        k = _household(args, s)
        result = solve(build_no_trade_model(s, k), _options(args))
        status = result.status
        ks = [k]
    else:
        args.no_ceiling = args.mode == "unified"
        result = _pareto(args, s)
        if isinstance(result, InfeasibleHousehold):
            out.write(f"household {result.household + 1} is infeasible without trading\n")
            return EXIT_INFEASIBLE
        status = result.status
        ks = list(range(len(s.households)))
        if args.household is not None:
            ks = [_household(args, s)]
    if status not in (INFEASIBLE, TIMEOUT_NO_INCUMBENT):
        out.write(emit_report(result, s, args.format, ks))
        if args.figure:
            plot_ledgers(result, s, args.figure, ks)
    else:
        out.write(f"status: {status}\n")
    return _exit_for(status)


COMMANDS = {
    "validate": cmd_validate,
    "solve-notrade": cmd_solve_notrade,
    "solve-unified": cmd_solve_unified,
    "pareto": cmd_pareto,
    "oracle": cmd_oracle,
    "bench": cmd_bench,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", metavar="PATH", help="scenario JSON (default: bundled two-household case)")
    common.add_argument("--time-limit", type=float, default=600.0, metavar="S")
    common.add_argument("--gap", type=float, default=1e-6, metavar="G", help="absolute and relative gap")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1, metavar="W")
    common.add_argument("--deterministic", action="store_true", help="single worker, fixed tie-breaking")
    common.add_argument("--format", choices=("table", "csv", "json"), default="table")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hemsmip", description="Household energy scheduling with microgrid trading.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check a scenario file")

    sp = sub.add_parser("solve-notrade", parents=[common], help="one household on its own")
    sp.add_argument("--household", type=int, required=True, metavar="K", help="1-based household number")

    sp = sub.add_parser("solve-unified", parents=[common], help="all households with trading")
    sp.add_argument("--bounds", metavar="C1,C2,...", help="per-household cost ceilings (default: none)")

    for name, helptext in (("pareto", "two-phase trading with no-trade ceilings"),
                           ("report", "per-slot energy ledger tables")):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.add_argument("--shrink", metavar="E1,E2,...", help="lower each ceiling by this amount")
        if name == "pareto":
            sp.add_argument("--no-ceiling", action="store_true", help="drop the per-household ceilings")
        else:
            sp.add_argument("--mode", choices=("pareto", "unified", "notrade"), default="pareto")
            sp.add_argument("--household", type=int, metavar="K")
            sp.add_argument("--figure", metavar="PATH", help="also save a chart (format from the suffix)")

    sp = sub.add_parser("oracle", parents=[common], help="brute-force reference solve (tiny instances)")
    sp.add_argument("--household", type=int, metavar="K", help="no-trade oracle for household K")
    sp.add_argument("--bounds", metavar="C1,C2,...")
    sp.add_argument("--levels", type=int, default=5, help="microgrid price levels per slot")
    sp.add_argument("--max-booleans", type=int, default=14)

    sp = sub.add_parser("bench", parents=[common], help="runtime scaling sweep")
    sp.add_argument("--dimension", choices=bench.DIMENSIONS, required=True)
    sp.add_argument("--sizes", required=True, metavar="N1,N2,...")
    sp.add_argument("--repetitions", type=int, default=5)
    sp.add_argument("--cutoff", type=float, default=60.0, metavar="S")
    sp.add_argument("--csv", metavar="PATH")
    sp.add_argument("--chart", metavar="PATH", help="SVG or PNG chart of the summary")
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for problem in exc.problems:
            if problem != str(exc):
                print(f"  {problem}", file=sys.stderr)
        return EXIT_INPUT
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BoundsViolateFeasibility as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
