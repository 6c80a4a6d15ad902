"""Random instances for the scaling study.

Static settings are shared by every instance; the rest is drawn uniformly
from fixed ranges with ``numpy.random.default_rng(seed)``.
"""
from __future__ import annotations

from typing import Dict, Tuple

import numpy as np

from .scenario import Appliance, Household, Scenario, StorageSpec

STATIC = {
    "efficiency": 0.9,
    "retention": 0.99,
    "initial": 5.0,
    "reservation_slot": 1,
    "grid_limit": 200000.0,
}

RANGES: Dict[str, Tuple[float, float]] = {
    "power": (0.5, 15.0),
    "grid_price": (0.1, 5.0),
    "disutility_factor": (0.01, 10.0),
    "charge_power": (2.0, 5.0),
    "min_capacity": (0.0, 2.0),
    "max_capacity": (5.0, 10.0),
    "renewable": (0.0, 10.0),
}

MIN_SIZES = {"appliances": 1, "timeslots": 1, "households": 1}
DECIMALS = 6  # same precision as scenario files, so instances round-trip exactly


def _u(rng, name, size=None):
    lo, hi = RANGES[name]
    return np.round(rng.uniform(lo, hi, size), DECIMALS)


def generate_instance(appliances: int, timeslots: int, households: int, seed: int) -> Scenario:
    """Random scenario; appliance ``i`` is interruptible when ``i`` is even.

    Every appliance is reserved at slot 1 and must end by the last slot.
    """
    for name, v in (("appliances", appliances), ("timeslots", timeslots), ("households", households)):
        if v < MIN_SIZES[name]:
            raise ValueError(f"{name} must be >= {MIN_SIZES[name]}, got {v}")
    rng = np.random.default_rng(seed)
    n = timeslots
    prices = tuple(float(p) for p in _u(rng, "grid_price", n))
    hhs = []
    for _ in range(households):
        apps = []
        for i in range(appliances):
            apps.append(Appliance(
                duration=int(rng.integers(1, n + 1)),
                power=float(_u(rng, "power")),
                disutility_factor=float(_u(rng, "disutility_factor")),
                reservation_slot=STATIC["reservation_slot"],
                max_end=n,
                interruptible=(i % 2 == 0),
            ))
        st = StorageSpec(
            initial=STATIC["initial"],
            charge_power=float(_u(rng, "charge_power")),
            efficiency=STATIC["efficiency"],
            retention=STATIC["retention"],
            max_capacity=float(_u(rng, "max_capacity")),
            min_capacity=float(_u(rng, "min_capacity")),
        )
        ren = tuple(float(r) for r in _u(rng, "renewable", n))
        hhs.append(Household(tuple(apps), st, ren, STATIC["grid_limit"]))
    return Scenario(n, tuple(hhs), prices)
