"""Two-phase Pareto-acceptable trading.

Phase 1 solves every household in isolation to get its no-trade cost.
Phase 2 minimizes the neighbourhood total with those costs as per-household
ceilings, so nobody ends up paying more than they would alone.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

from .bnb import SolverOptions, solve
from .costs import household_cost, household_residuals, trade_residuals
from .model import (INFEASIBLE, OPTIMAL, TIMEOUT_INCUMBENT, TIMEOUT_NO_INCUMBENT, Solution,
                    build_no_trade_model, build_unified_model)
from .scenario import Scenario

log = logging.getLogger(__name__)

CHECK_TOL = 1e-6


class InfeasibleHousehold(Exception):
    """A household cannot be scheduled even on its own."""

    def __init__(self, k: int):
        super().__init__(f"household {k} is infeasible without trading")
        self.household = k


class BoundsViolateFeasibility(Exception):
    pass


@dataclass
class NoTradeBounds:
    costs: List[float]
    solutions: List[Solution]
    timed_out: List[bool]

    @property
    def complete(self) -> bool:
        return not any(self.timed_out)


@dataclass
class ParetoResult:
    no_trade_costs: List[float]
    traded: Solution
    household_costs: List[Dict[str, float]]
    micro_prices: List[float]
    total_Y: float
    no_trade: Optional[NoTradeBounds] = None
    ceilings: List[float] = field(default_factory=list)

    @property
    def status(self) -> str:
        return self.traded.status


def compute_no_trade_bounds(s: Scenario, opts: Optional[SolverOptions] = None) -> NoTradeBounds:
    """Optimal isolated cost of every household.

    A timed-out household keeps its incumbent cost (still a valid ceiling,
    since that schedule is feasible) or ``inf`` without one, and is flagged.
    """
    opts = opts or SolverOptions()

    K = len(s.households)
    if opts.workers > 1 and K > 1:
        # each household solve runs single-threaded; the pool spreads households
        inner = replace(opts, workers=1)
        with ThreadPoolExecutor(min(opts.workers, K)) as pool:
            sols = list(pool.map(lambda k: solve(build_no_trade_model(s, k), inner), range(K)))
    else:
        sols = [solve(build_no_trade_model(s, k), opts) for k in range(K)]

    costs, flags = [], []
    for k, sol in enumerate(sols):
        if sol.status == INFEASIBLE:
            raise InfeasibleHousehold(k)
        flags.append(sol.status in (TIMEOUT_INCUMBENT, TIMEOUT_NO_INCUMBENT))
        costs.append(household_cost(sol.assignment, s, k)["total"] if sol.has_incumbent else math.inf)
    return NoTradeBounds(costs, sols, flags)


def _merged_assignment(solutions: Sequence[Solution]):
    out = {}
    for sol in solutions:
        out.update(sol.assignment)
    return out


def from_no_trade(nt: NoTradeBounds, s: Scenario) -> ParetoResult:
    """Wrap isolated schedules as a (trivially acceptable) trading result."""
    assignment = _merged_assignment(nt.solutions)
    costs = [household_cost(assignment, s, k) for k in range(len(s.households))]
    total = sum(c["total"] for c in costs)
    sol = Solution(OPTIMAL, assignment, total, 0.0)
    return ParetoResult(list(nt.costs), sol, costs, [0.0] * s.horizon, total, nt, list(nt.costs))


def solve_pareto(s: Scenario, opts: Optional[SolverOptions] = None, enforce_ceiling: bool = True,
                 shrink: Optional[Sequence[float]] = None,
                 no_trade: Optional[NoTradeBounds] = None) -> ParetoResult:
    """Minimize the neighbourhood cost with every household capped at its no-trade cost.

    ``enforce_ceiling=False`` drops the caps (plain total-cost minimization).
    ``shrink`` lowers each cap by the given amount, which can make the
    problem infeasible; without it infeasibility is a bug and raises.
    """
    opts = opts or SolverOptions()
    nt = no_trade or compute_no_trade_bounds(s, opts)
    K = len(s.households)
    ceilings = list(nt.costs)
    if shrink is not None:
        if len(shrink) != K:
            raise ValueError(f"expected {K} shrink amounts, got {len(shrink)}")
        ceilings = [c - e for c, e in zip(ceilings, shrink)]

    if enforce_ceiling and not all(math.isfinite(c) for c in ceilings):
        sol = Solution(TIMEOUT_NO_INCUMBENT, {}, math.inf, math.inf)
        return ParetoResult(list(nt.costs), sol, [], [], math.inf, nt, ceilings)

    m = build_unified_model(s, ceilings if enforce_ceiling else None)
    sol = solve(m, opts)
    if sol.status == INFEASIBLE and enforce_ceiling and shrink is None:
        raise BoundsViolateFeasibility(
            "bounds violate feasibility: the no-trade schedules should satisfy the unified model")
    if not sol.has_incumbent:
        return ParetoResult(list(nt.costs), sol, [], [], math.inf, nt, ceilings)

    costs = [household_cost(sol.assignment, s, k) for k in range(K)]
    total = sum(c["total"] for c in costs)
    prices = [sol.assignment[("MP", None, None, h)] for h in s.slots]

    # the isolated schedules with zero trade are feasible here, so the optimum cannot exceed them
    if sol.status == OPTIMAL and nt.complete and shrink is None:
        inherited = sum(nt.costs)
        if total > inherited + CHECK_TOL * max(1.0, abs(inherited)):
            raise AssertionError(f"traded total {total} exceeds the no-trade total {inherited}")
    log.info("pareto: Y=%.6f costs=%s", total, [round(c["total"], 6) for c in costs])
    return ParetoResult(list(nt.costs), sol, costs, prices, total, nt, ceilings)


def verify_pareto(r: ParetoResult, s: Scenario, tol: float = CHECK_TOL) -> Dict:
    """Recheck a result against the ceilings, the physics and the zero-sum trade rules."""
    a = r.traded.assignment
    households = []
    ok = True
    for k in range(len(s.households)):
        cost = household_cost(a, s, k)["total"]
        res = household_residuals(a, s, k)
        slack = r.no_trade_costs[k] - cost
        entry = {
            "household": k,
            "bound_slack": slack,
            "balance": res["balance"],
            "storage": res["storage"],
            "storage_replay": res["storage_replay"],
            "schedule": res["schedule"],
        }
        entry["passed"] = (slack >= -tol and res["balance"] <= tol and res["storage"] <= tol
                           and res["storage_replay"] <= tol and res["schedule"] == 0)
        ok = ok and entry["passed"]
        households.append(entry)
    tr = trade_residuals(a, s)
    price_range = 0.0
    for h, p in zip(s.slots, r.micro_prices):
        price_range = max(price_range, -p, p - s.grid_price[h - 1])
    slots_ok = max(tr["energy"], default=0.0) <= tol and max(tr["payment"], default=0.0) <= tol
    ok = ok and slots_ok and price_range <= tol
    return {
        "passed": ok,
        "households": households,
        "trade_energy": tr["energy"],
        "trade_payment": tr["payment"],
        "price_range": price_range,
    }
