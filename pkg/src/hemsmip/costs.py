"""Household costs and physical residuals evaluated straight from an assignment.

None of this touches the solver: costs are recomputed from the variable
values so reports never depend on a solver's objective bookkeeping.
"""
from __future__ import annotations

from typing import Dict, List

from .scenario import Scenario


def _get(assignment, symbol, k=None, i=None, h=None) -> float:
    try:
        return assignment[(symbol, k, i, h)]
    except KeyError:
        raise KeyError(f"assignment has no value for {symbol}[k={k}, i={i}, h={h}]") from None


def trades(assignment, k: int) -> bool:
    return ("ME", k, None, 1) in assignment


def grid_cost(assignment, s: Scenario, k: int) -> float:
    return sum(s.grid_price[h - 1] * _get(assignment, "GE", k, None, h) for h in s.slots)


def microgrid_payment(assignment, s: Scenario, k: int) -> float:
    """Money paid into the microgrid (negative when the household earns)."""
    if not trades(assignment, k):
        return 0.0
    return sum(_get(assignment, "MP", None, None, h) * _get(assignment, "ME", k, None, h) for h in s.slots)


def energy_cost(assignment, s: Scenario, k: int) -> float:
    """Grid purchases plus microgrid payments.

    An assignment without microgrid variables for ``k`` is a no-trade
    schedule and contributes no payments.
    """
    return grid_cost(assignment, s, k) + microgrid_payment(assignment, s, k)


def disutility_cost(assignment, s: Scenario, k: int) -> float:
    total = 0.0
    for i, a in enumerate(s.households[k].appliances):
        total += a.disutility_factor * (_get(assignment, "tau", k, i) - a.earliest_end)
    return total


def household_cost(assignment, s: Scenario, k: int) -> Dict[str, float]:
    e = energy_cost(assignment, s, k)
    d = disutility_cost(assignment, s, k)
    return {"energy": e, "disutility": d, "total": e + d}


def storage_trajectory(assignment, s: Scenario, k: int) -> List[float]:
    """Stored energy per slot replayed from the charge/discharge decisions."""
    st = s.households[k].storage
    out = []
    prev = st.initial
    for h in s.slots:
        ic = _get(assignment, "IC", k, None, h)
        be = _get(assignment, "BE", k, None, h)
        prev = prev * st.retention + ic * st.charge_power * st.efficiency - be
        out.append(prev)
    return out


def end_slot(assignment, s: Scenario, k: int, i: int) -> int:
    """Last slot in which appliance ``i`` runs (0 if it never runs)."""
    run = [h for h in s.slots if _get(assignment, "S", k, i, h) > 0.5]
    return max(run) if run else 0


def household_residuals(assignment, s: Scenario, k: int) -> Dict[str, float]:
    """Worst violation of each physical rule for household ``k``.

    Every entry is a non-negative magnitude; a feasible schedule has all of
    them within solver tolerance (``schedule`` counts broken discrete rules).
    """
    hh = s.households[k]
    st = hh.storage
    trade = trades(assignment, k)
    balance = 0.0
    grid = 0.0
    renew = 0.0
    for h in s.slots:
        load = sum(a.power * _get(assignment, "S", k, i, h) for i, a in enumerate(hh.appliances))
        load += st.charge_power * _get(assignment, "IC", k, None, h)
        supply = sum(_get(assignment, sym, k, None, h) for sym in ("GE", "BE", "RE"))
        if trade:
            supply += _get(assignment, "ME", k, None, h)
        balance = max(balance, abs(load - supply))
        grid = max(grid, _get(assignment, "GE", k, None, h) - hh.grid_limit)
        re = _get(assignment, "RE", k, None, h)
        renew = max(renew, re - hh.renewable[h - 1], -re)

    replay = storage_trajectory(assignment, s, k)
    storage = 0.0
    drift = 0.0
    for h, se_replay in zip(s.slots, replay):
        se = _get(assignment, "SE", k, None, h)
        drift = max(drift, abs(se - se_replay))
        storage = max(storage, st.min_capacity - se, se - st.max_capacity)

    broken = 0
    for i, a in enumerate(hh.appliances):
        run = [h for h in s.slots if _get(assignment, "S", k, i, h) > 0.5]
        tau = _get(assignment, "tau", k, i)
        if len(run) != a.duration:
            broken += 1
        if run and (min(run) < a.reservation_slot or max(run) > tau + 1e-6):
            broken += 1
        if tau > a.max_end + 1e-6:
            broken += 1
        if not a.interruptible and run and max(run) - min(run) + 1 != len(run):
            broken += 1
        if a.predecessor is not None and run:
            if min(run) <= _get(assignment, "tau", k, a.predecessor) - 1e-6:
                broken += 1
    return {
        "balance": balance,
        "storage": max(storage, 0.0),
        "storage_replay": drift,
        "grid_limit": max(grid, 0.0),
        "renewable": max(renew, 0.0),
        "schedule": float(broken),
    }


def trade_residuals(assignment, s: Scenario) -> Dict[str, List[float]]:
    """Per-slot zero-sum residuals of traded energy and of payments."""
    K = len(s.households)
    energy, money = [], []
    for h in s.slots:
        if not trades(assignment, 0):
            energy.append(0.0)
            money.append(0.0)
            continue
        me = [_get(assignment, "ME", k, None, h) for k in range(K)]
        mp = _get(assignment, "MP", None, None, h)
        energy.append(abs(sum(me)))
        money.append(abs(sum(mp * v for v in me)))
    return {"energy": energy, "payment": money}
