"""Brute-force reference solver for tiny instances.

Every boolean assignment is enumerated and rejected if it breaks a
scheduling rule; survivors get a small LP over the continuous energy
variables. Only the LP engine is shared with the main solver: the rules and
the LP rows are written out again here from the household equations.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .model import INFEASIBLE, OPTIMAL, Solution
from .scenario import Household, Scenario, is_expanded
from .simplex import EQ, GE, LE, LpInstance, solve_lp

HARD_CAP = 20


class OracleRefused(Exception):
    """Instance exceeds the enumeration budget."""


@dataclass
class OracleOptions:
    max_booleans: int = 14
    grid_levels: int = 5
    max_combinations: int = 1_000_000

    def __post_init__(self):
        if self.grid_levels < 2:
            raise ValueError("grid_levels must be >= 2")
        if self.max_booleans > HARD_CAP:
            raise ValueError(f"max_booleans is capped at {HARD_CAP}")


def boolean_count(hh: Household, n: int) -> int:
    """Number of S, US and IC entries of one household."""
    count = n  # IC
    for a in hh.appliances:
        count += n
        if not a.interruptible:
            count += n - a.duration + 1
    return count


@dataclass
class _Schedule:
    """One rule-abiding choice of all booleans of a household."""
    S: Tuple[Tuple[int, ...], ...]
    US: Dict[int, Tuple[int, ...]]
    IC: Tuple[int, ...]


def _appliance_ok(a, s_row, us_row, n) -> bool:
    if sum(s_row) != a.duration:
        return False
    if any(s_row[h - 1] for h in range(1, a.reservation_slot)):
        return False
    if us_row is not None:
        t = a.duration
        if sum(us_row) != 1:
            return False
        for h, u in enumerate(us_row, start=1):
            if u and sum(s_row[h - 1 + d] for d in range(t)) < t:
                return False
    return True


def _schedules(hh: Household, n: int) -> List[_Schedule]:
    """Enumerate all boolean vectors of a household, keeping the valid ones."""
    per_app = []
    for a in hh.appliances:
        choices = []
        us_len = None if a.interruptible else n - a.duration + 1
        for s_row in itertools.product((0, 1), repeat=n):
            us_rows = [None] if us_len is None else itertools.product((0, 1), repeat=us_len)
            for us_row in us_rows:
                if _appliance_ok(a, s_row, us_row, n):
                    choices.append((s_row, us_row))
        per_app.append(choices)
    out = []
    for combo in itertools.product(*per_app):
        S = tuple(c[0] for c in combo)
        US = {i: c[1] for i, c in enumerate(combo) if c[1] is not None}
        for ic in itertools.product((0, 1), repeat=n):
            out.append(_Schedule(S, US, ic))
    return out


def _tau_choices(hh: Household, sched: _Schedule, n: int) -> List[Tuple[int, ...]]:
    """Every integer end-time vector consistent with the schedule."""
    ranges = []
    for i, a in enumerate(hh.appliances):
        last = max((h for h in range(1, n + 1) if sched.S[i][h - 1]), default=0)
        ranges.append(range(max(1, last), min(a.max_end, n) + 1))
    out = []
    for taus in itertools.product(*ranges):
        ok = True
        for i, a in enumerate(hh.appliances):
            p = a.predecessor
            if p is None:
                continue
            # the later copy may only run strictly after the earlier one ends
            first = min((h for h in range(1, n + 1) if sched.S[i][h - 1]), default=n + 1)
            if first <= taus[p]:
                ok = False
                break
        if ok:
            out.append(taus)
    return out


def _disutility(hh: Household, taus) -> float:
    return sum(a.disutility_factor * (t - (a.reservation_slot + a.duration - 1))
               for a, t in zip(hh.appliances, taus))


class _LpBuilder:
    """Tiny helper that names columns and collects rows."""

    def __init__(self):
        self.names: List[tuple] = []
        self.lb: List[float] = []
        self.ub: List[float] = []
        self.c: List[float] = []
        self.rows: List[Tuple[Dict[int, float], str, float]] = []

    def col(self, name, lb=0.0, ub=math.inf, cost=0.0) -> int:
        self.names.append(name)
        self.lb.append(lb)
        self.ub.append(ub)
        self.c.append(cost)
        return len(self.names) - 1

    def row(self, coeffs, sense, rhs):
        self.rows.append((coeffs, sense, rhs))

    def build(self) -> LpInstance:
        A = np.zeros((len(self.rows), len(self.names)))
        for r, (coeffs, _, _) in enumerate(self.rows):
            for j, v in coeffs.items():
                A[r, j] += v
        return LpInstance(np.array(self.c), A, [r[1] for r in self.rows],
                          np.array([r[2] for r in self.rows]), np.array(self.lb), np.array(self.ub))


def _household_columns(lp: _LpBuilder, s: Scenario, k: int, sched: _Schedule, trade: bool):
    """Energy columns and physical rows of one household with booleans fixed."""
    hh = s.households[k]
    st = hh.storage
    n = s.horizon
    cols = {}
    for h in range(1, n + 1):
        for sym in ("GE", "BE", "RE", "SE"):
            cost = s.grid_price[h - 1] if sym == "GE" else 0.0
            cols[(sym, h)] = lp.col((sym, k, None, h), cost=cost)
        if trade:
            lo, hi = _trade_limits(s, k, h)
            cols[("ME", h)] = lp.col(("ME", k, None, h), lo, hi)
            cols[("MQ", h)] = lp.col(("MQ", k, None, h), -math.inf, math.inf)
    for h in range(1, n + 1):
        load = sum(a.power * sched.S[i][h - 1] for i, a in enumerate(hh.appliances))
        load += st.charge_power * sched.IC[h - 1]
        supply = {cols[("GE", h)]: 1.0, cols[("BE", h)]: 1.0, cols[("RE", h)]: 1.0}
        if trade:
            supply[cols[("ME", h)]] = 1.0
        lp.row(supply, EQ, load)
        charge = sched.IC[h - 1] * st.charge_power * st.efficiency
        if h == 1:
            lp.row({cols[("SE", 1)]: 1.0, cols[("BE", 1)]: 1.0}, EQ, st.initial * st.retention + charge)
        else:
            lp.row({cols[("SE", h)]: 1.0, cols[("SE", h - 1)]: -st.retention, cols[("BE", h)]: 1.0}, EQ, charge)
        lp.row({cols[("SE", h)]: 1.0}, LE, st.max_capacity)
        lp.row({cols[("SE", h)]: 1.0}, GE, st.min_capacity)
        lp.row({cols[("RE", h)]: 1.0}, LE, hh.renewable[h - 1])
        lp.row({cols[("GE", h)]: 1.0}, LE, hh.grid_limit)
        if trade:
            # MQ = load - (GE + SE - MinC + BE + RQ) and ME >= MQ
            lp.row({cols[("MQ", h)]: 1.0, cols[("GE", h)]: 1.0, cols[("SE", h)]: 1.0, cols[("BE", h)]: 1.0},
                   EQ, load + st.min_capacity - hh.renewable[h - 1])
            lp.row({cols[("ME", h)]: 1.0, cols[("MQ", h)]: -1.0}, GE, 0.0)
    return cols


def _trade_limits(s: Scenario, k: int, h: int):
    hh = s.households[k]
    st = hh.storage
    base = hh.grid_limit + st.max_capacity - st.min_capacity + hh.renewable[h - 1]
    own = sum(a.power for a in hh.appliances) + st.charge_power
    others = sum(sum(a.power for a in o.appliances) + o.storage.charge_power
                 for j, o in enumerate(s.households) if j != k)
    return -min(base, others), min(base, own)


def _booleans(hh: Household, k: int, sched: _Schedule, taus) -> Dict[tuple, float]:
    out = {}
    n = len(sched.IC)
    for i, a in enumerate(hh.appliances):
        for h in range(1, n + 1):
            out[("S", k, i, h)] = float(sched.S[i][h - 1])
        out[("tau", k, i, None)] = float(taus[i])
        if i in sched.US:
            for h, u in enumerate(sched.US[i], start=1):
                out[("US", k, i, h)] = float(u)
    for h in range(1, n + 1):
        out[("IC", k, None, h)] = float(sched.IC[h - 1])
    return out


def _check_instance(s: Scenario, booleans: int, opts: OracleOptions):
    if not is_expanded(s):
        raise ValueError("oracle needs an expanded scenario")
    if booleans > opts.max_booleans:
        raise OracleRefused(f"{booleans} boolean variables exceed the oracle cap of {opts.max_booleans}")


def enumerate_no_trade(s: Scenario, k: int, opts: Optional[OracleOptions] = None) -> Solution:
    """Exact isolated optimum of household ``k`` by exhaustive enumeration."""
    opts = opts or OracleOptions()
    hh = s.households[k]
    n = s.horizon
    _check_instance(s, boolean_count(hh, n), opts)
    best_val, best = math.inf, None
    for sched in _schedules(hh, n):
        taus_all = _tau_choices(hh, sched, n)
        if not taus_all:
            continue
        lp = _LpBuilder()
        _household_columns(lp, s, k, sched, trade=False)
        res = solve_lp(lp.build())
        if res.status != "optimal":
            continue
        for taus in taus_all:
            val = res.objective + _disutility(hh, taus)
            if val < best_val - 1e-12:
                best_val = val
                best = (sched, taus, res.x, list(lp.names))
    if best is None:
        return Solution(INFEASIBLE, {}, math.inf, math.inf)
    sched, taus, x, names = best
    assignment = _booleans(hh, k, sched, taus)
    assignment.update({name: float(v) for name, v in zip(names, x)})
    return Solution(OPTIMAL, assignment, best_val, 0.0)


def price_grid(s: Scenario, levels: int) -> List[List[float]]:
    fracs = np.linspace(0.0, 1.0, levels)
    return [[float(f * p) for f in fracs] for p in s.grid_price]


def enumerate_unified(s: Scenario, bounds: Optional[Sequence[float]],
                      opts: Optional[OracleOptions] = None) -> Solution:
    """Best schedule over booleans, end times and a grid of microgrid prices.

    With discretized prices this is an upper bound on the true optimum.
    ``bounds=None`` drops the per-household cost ceilings.
    """
    opts = opts or OracleOptions()
    n, K = s.horizon, len(s.households)
    _check_instance(s, sum(boolean_count(hh, n) for hh in s.households), opts)
    per_house = []
    for k, hh in enumerate(s.households):
        opts_k = []
        for sched in _schedules(hh, n):
            taus = _tau_choices(hh, sched, n)
            if taus:
                opts_k.append((sched, taus))
        per_house.append(opts_k)
    grid = price_grid(s, opts.grid_levels) if bounds is not None else [[0.0]] * n
    n_prices = math.prod(len(g) for g in grid)
    n_sched = math.prod(sum(len(t) for _, t in opts_k) for opts_k in per_house)
    if n_prices * n_sched > opts.max_combinations:
        raise OracleRefused(f"{n_prices * n_sched} combinations exceed the budget of {opts.max_combinations}")

    best_val, best = math.inf, None
    for scheds in itertools.product(*per_house):
        for taus in itertools.product(*(t for _, t in scheds)):
            dis = [_disutility(hh, tk) for hh, tk in zip(s.households, taus)]
            for prices in itertools.product(*grid):
                lp = _LpBuilder()
                cols = [_household_columns(lp, s, k, scheds[k][0], trade=True) for k in range(K)]
                for h in range(1, n + 1):
                    lp.row({cols[k][("ME", h)]: 1.0 for k in range(K)}, EQ, 0.0)
                if bounds is not None:
                    for k in range(K):
                        row = {}
                        for h in range(1, n + 1):
                            row[cols[k][("GE", h)]] = s.grid_price[h - 1]
                            row[cols[k][("ME", h)]] = prices[h - 1]
                        lp.row(row, LE, bounds[k] - dis[k])
                res = solve_lp(lp.build())
                if res.status != "optimal":
                    continue
                val = res.objective + sum(dis)
                if val < best_val - 1e-12:
                    best_val = val
                    best = (scheds, taus, prices, res.x, list(lp.names))
    if best is None:
        return Solution(INFEASIBLE, {}, math.inf, math.inf)
    scheds, taus, prices, x, names = best
    assignment = {}
    for k, hh in enumerate(s.households):
        assignment.update(_booleans(hh, k, scheds[k][0], taus[k]))
    assignment.update({name: float(v) for name, v in zip(names, x)})
    for h in range(1, n + 1):
        assignment[("MP", None, None, h)] = float(prices[h - 1])
    return Solution(OPTIMAL, assignment, best_val, 0.0)
