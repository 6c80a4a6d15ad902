"""Scenario data types, validation and multi-request expansion.

Timeslots are 1-based (``1..N``). Households and appliances are addressed
by their 0-based position in the scenario lists.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional


@dataclass(frozen=True)
class Appliance:
    duration: int
    power: float
    disutility_factor: float
    reservation_slot: int
    max_end: int
    interruptible: bool = True
    requests: tuple = ()
    # set by expand_virtual_appliances: index of the copy that must finish first
    predecessor: Optional[int] = None

    @property
    def request_slots(self) -> tuple:
        return tuple(self.requests) if self.requests else (self.reservation_slot,)

    @property
    def earliest_end(self) -> int:
        return self.reservation_slot + self.duration - 1


@dataclass(frozen=True)
class StorageSpec:
    initial: float
    charge_power: float
    efficiency: float
    retention: float
    max_capacity: float
    min_capacity: float


@dataclass(frozen=True)
class Household:
    appliances: tuple
    storage: StorageSpec
    renewable: tuple
    grid_limit: float

    def max_load(self) -> float:
        """Largest energy the household can consume in one slot."""
        return sum(a.power for a in self.appliances) + self.storage.charge_power


@dataclass(frozen=True)
class Scenario:
    horizon: int
    households: tuple
    grid_price: tuple

    @property
    def slots(self) -> range:
        return range(1, self.horizon + 1)

    def with_prices(self, prices) -> "Scenario":
        return replace(self, grid_price=tuple(float(p) for p in prices))

    def with_disutility(self, factor: float, household: Optional[int] = None) -> "Scenario":
        hhs = []
        for k, hh in enumerate(self.households):
            if household is None or household == k:
                apps = tuple(replace(a, disutility_factor=factor) for a in hh.appliances)
                hh = replace(hh, appliances=apps)
            hhs.append(hh)
        return replace(self, households=tuple(hhs))

    def subset(self, indices) -> "Scenario":
        return replace(self, households=tuple(self.households[k] for k in indices))


def _bad_number(v) -> bool:
    return not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v)


def validate_scenario(s: Scenario) -> List[str]:
    """Return every invariant violation as ``"path: message"``; empty if valid."""
    out: List[str] = []
    n = s.horizon
    if not isinstance(n, int) or n < 1:
        out.append(f"horizon: must be an integer >= 1, got {n!r}")
        return out
    if len(s.households) < 1:
        out.append("households: at least one household is required")
    if len(s.grid_price) != n:
        out.append(f"grid_price: length {len(s.grid_price)} != horizon {n}")
    for h, p in enumerate(s.grid_price, start=1):
        if _bad_number(p) or p < 0:
            out.append(f"grid_price[{h}]: must be a finite number >= 0, got {p!r}")

    for k, hh in enumerate(s.households):
        path = f"households[{k}]"
        if _bad_number(hh.grid_limit) or hh.grid_limit <= 0:
            out.append(f"{path}.grid_limit: must be > 0, got {hh.grid_limit!r}")
        if len(hh.renewable) != n:
            out.append(f"{path}.renewable: length {len(hh.renewable)} != horizon {n}")
        for h, r in enumerate(hh.renewable, start=1):
            if _bad_number(r) or r < 0:
                out.append(f"{path}.renewable[{h}]: must be >= 0, got {r!r}")
        out.extend(_storage_violations(hh.storage, f"{path}.storage"))
        for i, a in enumerate(hh.appliances):
            out.extend(_appliance_violations(a, n, f"{path}.appliances[{i}]"))
    return out


def _storage_violations(st: StorageSpec, path: str) -> List[str]:
    out = []
    for name in ("initial", "charge_power", "efficiency", "retention", "max_capacity", "min_capacity"):
        v = getattr(st, name)
        if _bad_number(v):
            out.append(f"{path}.{name}: must be a finite number, got {v!r}")
    if out:
        return out
    if st.charge_power < 0:
        out.append(f"{path}.charge_power: must be >= 0")
    if not 0 < st.efficiency <= 1:
        out.append(f"{path}.efficiency: must lie in (0, 1], got {st.efficiency}")
    if not 0 < st.retention <= 1:
        out.append(f"{path}.retention: must lie in (0, 1], got {st.retention}")
    if st.min_capacity < 0:
        out.append(f"{path}.min_capacity: must be >= 0")
    if st.min_capacity > st.max_capacity:
        out.append(f"{path}: min capacity exceeds max capacity")
    if st.initial > st.max_capacity:
        out.append(f"{path}.initial: initial energy exceeds capacity")
    if st.initial < st.min_capacity:
        out.append(f"{path}.initial: initial energy below min capacity")
    return out


def _appliance_violations(a: Appliance, n: int, path: str) -> List[str]:
    out = []
    if not isinstance(a.duration, int) or a.duration < 1:
        out.append(f"{path}.duration: must be an integer >= 1, got {a.duration!r}")
    if _bad_number(a.power) or a.power <= 0:
        out.append(f"{path}.power: must be > 0, got {a.power!r}")
    if _bad_number(a.disutility_factor) or a.disutility_factor < 0:
        out.append(f"{path}.disutility_factor: must be >= 0, got {a.disutility_factor!r}")
    if not isinstance(a.max_end, int) or not 1 <= a.max_end <= n:
        out.append(f"{path}.max_end: must lie in [1, {n}], got {a.max_end!r}")
    if out:
        return out
    if a.requests and a.requests[0] != a.reservation_slot:
        out.append(f"{path}.requests: first request {a.requests[0]} != reservation_slot {a.reservation_slot}")
    if list(a.request_slots) != sorted(set(a.request_slots)):
        out.append(f"{path}.requests: must be strictly increasing")
    for r in a.request_slots:
        if not isinstance(r, int) or not 1 <= r <= n:
            out.append(f"{path}.reservation_slot: {r!r} outside [1, {n}]")
        elif r + a.duration - 1 > a.max_end:
            out.append(f"{path}: request at slot {r} cannot finish by max_end {a.max_end}")
    return out


def expand_virtual_appliances(s: Scenario) -> Scenario:
    """Replace every multi-request appliance by one copy per request.

    Copies are placed consecutively and each later copy records its
    predecessor so the model builder can add the ordering rows.
    """
    hhs = []
    for hh in s.households:
        apps = []
        for a in hh.appliances:
            slots = a.request_slots
            if len(slots) == 1:
                apps.append(a)
                continue
            prev = None
            for r in slots:
                apps.append(replace(a, reservation_slot=r, requests=(r,), predecessor=prev))
                prev = len(apps) - 1
        hhs.append(replace(hh, appliances=tuple(apps)))
    return replace(s, households=tuple(hhs))


def is_expanded(s: Scenario) -> bool:
    return all(len(a.request_slots) == 1 for hh in s.households for a in hh.appliances)


def case_study_household(which: int, disutility: float = 0.01) -> Household:
    """Household 1 or 2 of the eight-slot case study."""
    if which == 1:
        apps = (
            Appliance(5, 1.0, disutility, 1, 8, True),
            Appliance(2, 4.0, disutility, 1, 8, False),
        )
        st = StorageSpec(3.0, 1.0, 0.8, 0.99, 5.0, 3.0)
        ren = (0.0, 0.0, 0.0, 2.0, 1.0, 2.0, 0.0, 0.0)
    elif which == 2:
        apps = (
            Appliance(3, 3.0, disutility, 1, 8, True),
            Appliance(4, 2.0, disutility, 1, 8, False),
        )
        st = StorageSpec(5.0, 2.0, 0.9, 0.99, 5.0, 3.0)
        ren = (1.0, 2.0, 0.0, 0.0, 1.0, 1.0, 0.0, 2.0)
    else:
        raise ValueError("the case study has households 1 and 2")
    return Household(apps, st, ren, 20.0)


CASE_STUDY_PRICES = (0.7, 1.0, 1.2, 1.5, 2.0, 1.7, 1.5, 0.5)


def case_study_scenario(prices=CASE_STUDY_PRICES, households=(1, 2), disutility: float = 0.01) -> Scenario:
    return Scenario(
        8,
        tuple(case_study_household(w, disutility) for w in households),
        tuple(float(p) for p in prices),
    )
