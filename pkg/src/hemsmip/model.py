"""Canonical mixed-integer model with bilinear terms, and the builders that
assemble the household scheduling equations into it.

Variable keys are ``(symbol, k, i, h)`` with ``None`` for absent indices;
``h`` is the 1-based timeslot.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .scenario import Household, Scenario, is_expanded

CONTINUOUS, BOOLEAN, INTEGER = "continuous", "boolean", "integer"
LE, EQ, GE = "<=", "=", ">="

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
TIMEOUT_INCUMBENT = "timeout-with-incumbent"
TIMEOUT_NO_INCUMBENT = "timeout-no-incumbent"

Key = Tuple[str, Optional[int], Optional[int], Optional[int]]


@dataclass(frozen=True)
class Variable:
    id: int
    kind: str
    lb: float
    ub: float
    symbol: str
    k: Optional[int] = None
    i: Optional[int] = None
    h: Optional[int] = None

    @property
    def key(self) -> Key:
        return (self.symbol, self.k, self.i, self.h)

    @property
    def is_discrete(self) -> bool:
        return self.kind != CONTINUOUS


@dataclass
class Row:
    coeffs: Dict[int, float]
    sense: str
    rhs: float
    tag: str


@dataclass(frozen=True)
class BilinearTerm:
    coef: float
    a: int
    b: int
    row: Optional[int]  # None = objective


@dataclass
class ModelInstance:
    variables: List[Variable] = field(default_factory=list)
    rows: List[Row] = field(default_factory=list)
    bilinear_terms: List[BilinearTerm] = field(default_factory=list)
    objective: Dict[int, float] = field(default_factory=dict)
    objective_constant: float = 0.0
    name: str = ""

    def __post_init__(self):
        self.meta: Dict[Key, int] = {v.key: v.id for v in self.variables}

    @property
    def n(self) -> int:
        return len(self.variables)

    def add_var(self, kind, lb, ub, symbol, k=None, i=None, h=None) -> int:
        key = (symbol, k, i, h)
        if key in self.meta:
            raise ValueError(f"duplicate variable {key}")
        v = Variable(len(self.variables), kind, float(lb), float(ub), symbol, k, i, h)
        self.variables.append(v)
        self.meta[key] = v.id
        return v.id

    def add_row(self, coeffs: Dict[int, float], sense: str, rhs: float, tag: str) -> int:
        self.rows.append(Row({j: float(c) for j, c in coeffs.items() if c != 0}, sense, float(rhs), tag))
        return len(self.rows) - 1

    def var(self, symbol, k=None, i=None, h=None) -> int:
        return self.meta[(symbol, k, i, h)]

    def row_counts(self) -> Dict[str, int]:
        out: Dict[str, int] = {}
        for r in self.rows:
            out[r.tag] = out.get(r.tag, 0) + 1
        return out

    def objective_value(self, x: Sequence[float]) -> float:
        val = self.objective_constant + sum(c * x[j] for j, c in self.objective.items())
        for t in self.bilinear_terms:
            if t.row is None:
                val += t.coef * x[t.a] * x[t.b]
        return val

    def assignment(self, x: Sequence[float]) -> Dict[Key, float]:
        return {v.key: float(x[v.id]) for v in self.variables}


@dataclass
class Solution:
    status: str
    assignment: Dict[Key, float]
    objective: float
    gap: float
    nodes: int = 0
    wall_time: float = 0.0
    lower_bound: float = -math.inf
    x: Optional[list] = None

    @property
    def has_incumbent(self) -> bool:
        return self.status in (OPTIMAL, TIMEOUT_INCUMBENT)


def _add_household(m: ModelInstance, s: Scenario, k: int, trade: bool) -> None:
    """Variables and rows of one household (energy balance through grid limit)."""
    hh: Household = s.households[k]
    st = hh.storage
    n = s.horizon
    slots = s.slots

    for i, a in enumerate(hh.appliances):
        for h in slots:
            m.add_var(BOOLEAN, 0, 1, "S", k, i, h)
        m.add_var(INTEGER, 1, n, "tau", k, i)
        if not a.interruptible:
            for h in range(1, n - a.duration + 2):
                m.add_var(BOOLEAN, 0, 1, "US", k, i, h)
    for h in slots:
        m.add_var(BOOLEAN, 0, 1, "IC", k, None, h)
        m.add_var(CONTINUOUS, 0, math.inf, "GE", k, None, h)
        m.add_var(CONTINUOUS, 0, math.inf, "BE", k, None, h)
        m.add_var(CONTINUOUS, 0, math.inf, "RE", k, None, h)
        m.add_var(CONTINUOUS, 0, math.inf, "SE", k, None, h)

    S = lambda i, h: m.var("S", k, i, h)  # noqa: E731
    V = lambda sym, h: m.var(sym, k, None, h)  # noqa: E731

    # energy balance: load = grid + battery + renewable (+ microgrid)
    for h in slots:
        row = {S(i, h): a.power for i, a in enumerate(hh.appliances)}
        row[V("IC", h)] = st.charge_power
        for sym in ("GE", "BE", "RE"):
            row[V(sym, h)] = -1.0
        if trade:
            row[m.var("ME", k, None, h)] = -1.0
        m.add_row(row, EQ, 0.0, "balance")
    # storage dynamics
    m.add_row({V("SE", 1): 1.0, V("IC", 1): -st.charge_power * st.efficiency, V("BE", 1): 1.0},
              EQ, st.initial * st.retention, "storage_init")
    for h in slots[1:]:
        m.add_row({V("SE", h): 1.0, V("SE", h - 1): -st.retention,
                   V("IC", h): -st.charge_power * st.efficiency, V("BE", h): 1.0},
                  EQ, 0.0, "storage")
    for h in slots:
        m.add_row({V("SE", h): 1.0}, LE, st.max_capacity, "storage_max")
    for h in slots:
        m.add_row({V("SE", h): 1.0}, GE, st.min_capacity, "storage_min")
    for i, a in enumerate(hh.appliances):
        m.add_row({S(i, h): 1.0 for h in slots}, EQ, a.duration, "duration")
    for h in slots:
        m.add_row({V("RE", h): 1.0}, LE, hh.renewable[h - 1], "renewable")
    for i, a in enumerate(hh.appliances):
        # no execution before the reservation slot (empty row when reserved at slot 1)
        m.add_row({S(i, h): 1.0 for h in range(1, a.reservation_slot)}, EQ, 0.0, "reservation")
    for i, a in enumerate(hh.appliances):
        tau = m.var("tau", k, i)
        for h in slots:
            m.add_row({S(i, h): float(h), tau: -1.0}, LE, 0.0, "end_time")
    for i, a in enumerate(hh.appliances):
        m.add_row({m.var("tau", k, i): 1.0}, LE, a.max_end, "deadline")
    for i, a in enumerate(hh.appliances):
        if a.interruptible:
            continue
        t = a.duration
        starts = range(1, n - t + 2)
        for h in starts:
            row = {S(i, h + d): 1.0 for d in range(t)}
            row[m.var("US", k, i, h)] = -float(t)
            m.add_row(row, GE, 0.0, "block")
        m.add_row({m.var("US", k, i, h): 1.0 for h in starts}, EQ, 1.0, "block_start")
    for h in slots:
        m.add_row({V("GE", h): 1.0}, LE, hh.grid_limit, "grid_limit")
    for i, a in enumerate(hh.appliances):
        if a.predecessor is None:
            continue
        prev_tau = m.var("tau", k, a.predecessor)
        for h in slots:
            # running at slot h requires the predecessor to have ended before h
            m.add_row({prev_tau: 1.0, S(i, h): float(n)}, LE, float(n + h - 1), "precedence")


def _cost_coefficients(m: ModelInstance, s: Scenario, k: int) -> Tuple[Dict[int, float], float]:
    """Linear part of the household cost: grid purchases plus delay penalty."""
    hh = s.households[k]
    coeffs: Dict[int, float] = {}
    const = 0.0
    for h in s.slots:
        coeffs[m.var("GE", k, None, h)] = s.grid_price[h - 1]
    for i, a in enumerate(hh.appliances):
        j = m.var("tau", k, i)
        coeffs[j] = coeffs.get(j, 0.0) + a.disutility_factor
        const -= a.disutility_factor * a.earliest_end
    return coeffs, const


def _check_buildable(s: Scenario) -> None:
    if not is_expanded(s):
        raise ValueError("scenario has multi-request appliances; call expand_virtual_appliances first")


def build_no_trade_model(s: Scenario, k: int) -> ModelInstance:
    """Isolated household ``k``: microgrid energy fixed at zero, no bilinear terms."""
    _check_buildable(s)
    if not 0 <= k < len(s.households):
        raise IndexError(f"household index {k} out of range")
    m = ModelInstance(name=f"no-trade[{k}]")
    _add_household(m, s, k, trade=False)
    coeffs, const = _cost_coefficients(m, s, k)
    m.objective = coeffs
    m.objective_constant = const
    return m


def trade_bound(s: Scenario, k: int, h: int) -> Tuple[float, float]:
    """Finite interval for the microgrid trade of household ``k`` at slot ``h``.

    Starts from the sourcing bound ``L + MaxC - MinC + RQ`` and intersects it
    with the household's own maximum load (buying) and the other households'
    combined maximum load (selling).
    """
    hh = s.households[k]
    base = hh.grid_limit + hh.storage.max_capacity - hh.storage.min_capacity + hh.renewable[h - 1]
    buy = min(base, hh.max_load())
    others = sum(o.max_load() for j, o in enumerate(s.households) if j != k)
    sell = min(base, others)
    return -sell, buy


def build_unified_model(s: Scenario, bounds: Optional[Sequence[float]]) -> ModelInstance:
    """Minimize total neighbourhood cost with microgrid trading.

    ``bounds`` holds the per-household cost ceilings; ``None`` drops the
    ceiling rows altogether (and with them every bilinear term).
    """
    _check_buildable(s)
    K = len(s.households)
    if bounds is not None:
        if len(bounds) != K:
            raise ValueError(f"expected {K} bounds, got {len(bounds)}")
        for k, b in enumerate(bounds):
            if not math.isfinite(b):
                raise ValueError(f"bound for household {k} is not finite: {b}")
    m = ModelInstance(name="unified" if bounds is not None else "unified-no-ceiling")
    for h in s.slots:
        m.add_var(CONTINUOUS, 0.0, s.grid_price[h - 1], "MP", None, None, h)
    for k in range(K):
        for h in s.slots:
            lo, hi = trade_bound(s, k, h)
            m.add_var(CONTINUOUS, lo, hi, "ME", k, None, h)
            m.add_var(CONTINUOUS, -math.inf, math.inf, "MQ", k, None, h)
        _add_household(m, s, k, trade=True)

    for h in s.slots:
        m.add_row({m.var("ME", k, None, h): 1.0 for k in range(K)}, EQ, 0.0, "trade_balance")
    for k, hh in enumerate(s.households):
        st = hh.storage
        for h in s.slots:
            V = lambda sym: m.var(sym, k, None, h)  # noqa: E731
            row = {m.var("S", k, i, h): -a.power for i, a in enumerate(hh.appliances)}
            row[V("MQ")] = 1.0
            row[V("IC")] = -st.charge_power
            row[V("GE")] = 1.0
            row[V("SE")] = 1.0
            row[V("BE")] = 1.0
            m.add_row(row, EQ, st.min_capacity - hh.renewable[h - 1], "trade_need")
    for k in range(K):
        for h in s.slots:
            m.add_row({m.var("ME", k, None, h): 1.0, m.var("MQ", k, None, h): -1.0}, GE, 0.0, "trade_cover")

    total: Dict[int, float] = {}
    const = 0.0
    for k in range(K):
        coeffs, c = _cost_coefficients(m, s, k)
        total.update(coeffs)
        const += c
        if bounds is not None:
            r = m.add_row(coeffs, LE, bounds[k] - c, "ceiling")
            for h in s.slots:
                m.bilinear_terms.append(
                    BilinearTerm(1.0, m.var("MP", None, None, h), m.var("ME", k, None, h), r))
    m.objective = total
    m.objective_constant = const
    return m


def row_activity(m: ModelInstance, r: int, x: Sequence[float]) -> float:
    row = m.rows[r]
    val = sum(c * x[j] for j, c in row.coeffs.items())
    for t in m.bilinear_terms:
        if t.row == r:
            val += t.coef * x[t.a] * x[t.b]
    return val


def max_violation(m: ModelInstance, x: Sequence[float]) -> Dict[str, float]:
    """Independent feasibility check with exact bilinear products."""
    rows = 0.0
    for r, row in enumerate(m.rows):
        act = row_activity(m, r, x)
        if row.sense == LE:
            v = act - row.rhs
        elif row.sense == GE:
            v = row.rhs - act
        else:
            v = abs(act - row.rhs)
        rows = max(rows, v)
    bnds = 0.0
    integ = 0.0
    for var in m.variables:
        val = x[var.id]
        bnds = max(bnds, var.lb - val, val - var.ub)
        if var.is_discrete:
            integ = max(integ, abs(val - round(val)))
    return {"rows": max(rows, 0.0), "bounds": max(bnds, 0.0), "integrality": integ}
