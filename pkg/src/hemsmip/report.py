"""Per-household energy ledgers rendered as text tables, CSV or JSON, plus a
matplotlib figure of the same data."""
from __future__ import annotations

import csv
import io
import json
from typing import Dict, List, Optional, Sequence

from .costs import household_cost, trades
from .model import Solution
from .scenario import Scenario

FORMATS = ("table", "csv", "json")


def _households_in(assignment) -> List[int]:
    return sorted({key[1] for key in assignment if key[0] == "GE"})


def _get(a, symbol, k=None, i=None, h=None) -> float:
    return a.get((symbol, k, i, h), 0.0)


def ledger(assignment, s: Scenario, k: int) -> Dict:
    """Rows of the per-slot energy ledger of household ``k``.

    Sections follow the usual layout: prices, what energy was available,
    where energy came from, and what consumed it.
    """
    hh = s.households[k]
    slots = list(s.slots)
    trading = trades(assignment, k)
    rows = [("Price", "Grid", [s.grid_price[h - 1] for h in slots])]
    if trading:
        rows.append(("Price", "Microgrid", [_get(assignment, "MP", None, None, h) for h in slots]))
    rows += [
        ("Energy Availability", "Grid", [hh.grid_limit for _ in slots]),
        ("Energy Availability", "Storage", [_get(assignment, "SE", k, None, h) for h in slots]),
        ("Energy Availability", "Renewables", [hh.renewable[h - 1] for h in slots]),
    ]
    if trading:
        rows.append(("Microgrid", "Demand/Availability", [_get(assignment, "MQ", k, None, h) for h in slots]))
    rows += [
        ("Energy Source", "Grid", [_get(assignment, "GE", k, None, h) for h in slots]),
        ("Energy Source", "Storage", [_get(assignment, "BE", k, None, h) for h in slots]),
        ("Energy Source", "Renewables", [_get(assignment, "RE", k, None, h) for h in slots]),
    ]
    if trading:
        rows.append(("Microgrid", "Source/Load", [_get(assignment, "ME", k, None, h) for h in slots]))
    rows.append(("Load", "Storage Charging", [_get(assignment, "IC", k, None, h) for h in slots]))
    for i, _ in enumerate(hh.appliances):
        rows.append(("Load", f"App{i + 1}", [_get(assignment, "S", k, i, h) for h in slots]))
    return {"household": k, "trading": trading, "rows": rows, "costs": household_cost(assignment, s, k)}


def footer(costs: Dict[str, float]) -> str:
    return (f"Energy Cost = {costs['energy']:.2f}, Disutility Cost = {costs['disutility']:.2f}, "
            f"and Total Cost = {costs['total']:.2f}")


def _cell(v: float) -> str:
    # two decimals, trailing zeros dropped, and no "-0"
    txt = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if txt in ("-0", "") else txt


def _render_table(led: Dict, s: Scenario) -> str:
    head = ["Timeslot", ""] + [str(h) for h in s.slots]
    body = []
    last = None
    for section, label, values in led["rows"]:
        body.append([section if section != last else "", label] + [_cell(v) for v in values])
        last = section
    widths = [max(len(r[c]) for r in [head] + body) for c in range(len(head))]

    def fmt(r):
        left = [r[0].ljust(widths[0]), r[1].ljust(widths[1])]
        return "  ".join(left + [r[c].rjust(widths[c]) for c in range(2, len(r))]).rstrip()

    rule = "-" * len(fmt(head))
    lines = [f"Household {led['household'] + 1}", rule, fmt(head), rule]
    prev = None
    for (section, _, _), r in zip(led["rows"], body):
        if prev is not None and section != prev:
            lines.append(rule)
        lines.append(fmt(r))
        prev = section
    lines += [rule, footer(led["costs"]), rule]
    return "\n".join(lines)


def _source(result):
    if isinstance(result, Solution):
        return result.assignment, {"status": result.status, "objective": result.objective}
    if hasattr(result, "traded"):
        extra = {"status": result.traded.status, "objective": result.total_Y,
                 "no_trade_costs": list(result.no_trade_costs)}
        return result.traded.assignment, extra
    return dict(result), {}


def emit_report(result, s: Scenario, fmt: str = "table", households: Optional[Sequence[int]] = None) -> str:
    """Render the ledger of every household found in ``result``.

    ``result`` may be a Solution, a ParetoResult or a bare assignment.
    Tables round to two decimals; CSV and JSON keep full precision.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
    assignment, extra = _source(result)
    ks = list(households) if households is not None else _households_in(assignment)
    ledgers = [ledger(assignment, s, k) for k in ks]

    if fmt == "table":
        return "\n\n".join(_render_table(led, s) for led in ledgers) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["household", "section", "item"] + [f"h{h}" for h in s.slots])
        for led in ledgers:
            for section, label, values in led["rows"]:
                w.writerow([led["household"] + 1, section, label] + [repr(float(v)) for v in values])
            for name in ("energy", "disutility", "total"):
                w.writerow([led["household"] + 1, "Cost", name, repr(float(led["costs"][name]))])
        return buf.getvalue()
    doc = dict(extra)
    doc["households"] = [
        {
            "household": led["household"] + 1,
            "trading": led["trading"],
            "rows": [{"section": sec, "item": lab, "values": [float(v) for v in vals]}
                     for sec, lab, vals in led["rows"]],
            "costs": led["costs"],
        }
        for led in ledgers
    ]
    return json.dumps(doc, indent=2) + "\n"


def plot_ledgers(result, s: Scenario, path, households: Optional[Sequence[int]] = None):
    """Stacked energy sources per slot with the grid price overlaid; one panel per household."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    assignment, _ = _source(result)
    ks = list(households) if households is not None else _households_in(assignment)
    slots = list(s.slots)
    fig, axes = plt.subplots(len(ks), 1, figsize=(7, 2.8 * len(ks)), sharex=True, squeeze=False)
    for ax, k in zip(axes[:, 0], ks):
        led = {(sec, lab): vals for sec, lab, vals in ledger(assignment, s, k)["rows"]}
        bottom_pos = [0.0] * len(slots)
        bottom_neg = [0.0] * len(slots)
        series = [("Grid", led[("Energy Source", "Grid")]),
                  ("Storage", led[("Energy Source", "Storage")]),
                  ("Renewables", led[("Energy Source", "Renewables")])]
        if ("Microgrid", "Source/Load") in led:
            series.append(("Microgrid", led[("Microgrid", "Source/Load")]))
        for label, vals in series:
            base = [bp if v >= 0 else bn for v, bp, bn in zip(vals, bottom_pos, bottom_neg)]
            ax.bar(slots, vals, bottom=base, label=label, width=0.7)
            bottom_pos = [bp + max(v, 0.0) for v, bp in zip(vals, bottom_pos)]
            bottom_neg = [bn + min(v, 0.0) for v, bn in zip(vals, bottom_neg)]
        ax.axhline(0.0, color="black", lw=0.6)
        lo, hi = min(bottom_neg + [0.0]), max(bottom_pos + [1.0])
        ax.set_ylim(lo - 0.05 * (hi - lo), hi + 0.3 * (hi - lo))  # headroom for the legend
        ax.set_ylabel("energy")
        ax.set_title(f"Household {k + 1}", fontsize=10)
        twin = ax.twinx()
        twin.plot(slots, [s.grid_price[h - 1] for h in slots], "k--", marker="o", ms=3, label="grid price")
        twin.set_ylabel("price")
        ax.legend(loc="upper left", fontsize=7, frameon=False, ncol=len(series))
    axes[-1, 0].set_xlabel("timeslot")
    axes[-1, 0].set_xticks(slots)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
