"""Scenario files: JSON with a fixed schema, canonical key order and
six-decimal numbers."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List

from .scenario import Appliance, Household, Scenario, StorageSpec, validate_scenario

DECIMALS = 6

SCENARIO_KEYS = ("horizon", "grid_price", "households")
HOUSEHOLD_KEYS = ("appliances", "storage", "renewable", "grid_limit")
APPLIANCE_KEYS = ("duration", "power", "disutility_factor", "reservation_slot", "max_end",
                  "interruptible", "requests")
STORAGE_KEYS = ("initial", "charge_power", "efficiency", "retention", "max_capacity", "min_capacity")
OPTIONAL = {"interruptible", "requests"}


class ScenarioError(ValueError):
    """Unreadable or invalid scenario file; ``problems`` lists every issue."""

    def __init__(self, message: str, problems: List[str] = ()):
        super().__init__(message)
        self.problems = list(problems) or [message]


def _num(v):
    return round(float(v), DECIMALS)


def _f(v):
    """Numbers in real-valued fields become floats; anything else is left for validation."""
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    return v


def scenario_to_dict(s: Scenario) -> Dict[str, Any]:
    hhs = []
    for hh in s.households:
        apps = []
        for a in hh.appliances:
            apps.append({
                "duration": a.duration,
                "power": _num(a.power),
                "disutility_factor": _num(a.disutility_factor),
                "reservation_slot": a.reservation_slot,
                "max_end": a.max_end,
                "interruptible": a.interruptible,
                "requests": list(a.requests),
            })
        st = hh.storage
        hhs.append({
            "appliances": apps,
            "storage": {k: _num(getattr(st, k)) for k in STORAGE_KEYS},
            "renewable": [_num(r) for r in hh.renewable],
            "grid_limit": _num(hh.grid_limit),
        })
    return {"horizon": s.horizon, "grid_price": [_num(p) for p in s.grid_price], "households": hhs}


def _check_keys(obj, allowed, path, problems) -> bool:
    if not isinstance(obj, dict):
        problems.append(f"{path}: expected an object, got {type(obj).__name__}")
        return False
    for key in obj:
        if key not in allowed:
            problems.append(f"{path}.{key}: unknown key")
    for key in allowed:
        if key not in obj and key not in OPTIONAL:
            problems.append(f"{path}.{key}: missing")
    return True


def _list(obj, key, path, problems) -> list:
    v = obj.get(key, [])
    if not isinstance(v, list):
        problems.append(f"{path}.{key}: expected a list")
        return []
    return v


def scenario_from_dict(d: Any) -> Scenario:
    """Build a scenario from parsed JSON, rejecting unknown or missing keys."""
    problems: List[str] = []
    if not _check_keys(d, SCENARIO_KEYS, "scenario", problems):
        raise ScenarioError(problems[0], problems)
    hhs = []
    for k, hd in enumerate(_list(d, "households", "scenario", problems)):
        path = f"households[{k}]"
        if not _check_keys(hd, HOUSEHOLD_KEYS, path, problems):
            continue
        apps = []
        for i, ad in enumerate(_list(hd, "appliances", path, problems)):
            apath = f"{path}.appliances[{i}]"
            if not _check_keys(ad, APPLIANCE_KEYS, apath, problems):
                continue
            requests = _list(ad, "requests", apath, problems)
            apps.append(Appliance(
                duration=ad.get("duration"),
                power=_f(ad.get("power")),
                disutility_factor=_f(ad.get("disutility_factor")),
                reservation_slot=ad.get("reservation_slot"),
                max_end=ad.get("max_end"),
                interruptible=bool(ad.get("interruptible", True)),
                requests=tuple(requests),
            ))
        sd = hd.get("storage")
        if _check_keys(sd, STORAGE_KEYS, f"{path}.storage", problems):
            st = StorageSpec(**{key: _f(sd.get(key)) for key in STORAGE_KEYS})
        else:
            continue
        ren = tuple(_f(r) for r in _list(hd, "renewable", path, problems))
        hhs.append(Household(tuple(apps), st, ren, _f(hd.get("grid_limit"))))
    if problems:
        raise ScenarioError(f"{len(problems)} problem(s) in scenario", problems)
    prices = tuple(_f(p) for p in _list(d, "grid_price", "scenario", problems))
    s = Scenario(d.get("horizon"), tuple(hhs), prices)
    try:
        violations = validate_scenario(s)
    except TypeError as exc:
        violations = [f"scenario: malformed value ({exc})"]
    if violations:
        raise ScenarioError(f"{len(violations)} validation error(s)", violations)
    return s


def loads_scenario(text: str, source: str = "<string>") -> Scenario:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        msg = f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}"
        raise ScenarioError(msg) from None
    return scenario_from_dict(d)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None
    return loads_scenario(text, str(path))


def dumps_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(dumps_scenario(s))
