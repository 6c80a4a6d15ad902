import csv
import io
import json

import pytest

from hemsmip.bnb import solve
from hemsmip.model import build_no_trade_model
from hemsmip.report import emit_report, footer, ledger, plot_ledgers
from hemsmip.scenario import Household, Scenario, StorageSpec


@pytest.fixture(scope="module")
def hh1(case):
    return solve(build_no_trade_model(case, 0))


def test_footer_format():
    assert footer({"energy": 6.9, "disutility": 0.0858, "total": 6.9858}) == \
        "Energy Cost = 6.90, Disutility Cost = 0.09, and Total Cost = 6.99"


def test_household_one_table(hh1, case):
    txt = emit_report(hh1, case)
    assert txt.startswith("Household 1\n")
    assert "Energy Cost = 6.90, Disutility Cost = 0.09, and Total Cost = 6.99" in txt
    assert "Microgrid" not in txt
    assert "App2" in txt and "App3" not in txt


def test_row_layout_without_trade(hh1, case):
    rows = ledger(hh1.assignment, case, 0)["rows"]
    labels = [(sec, lab) for sec, lab, _ in rows]
    assert labels[:5] == [("Price", "Grid"), ("Energy Availability", "Grid"), ("Energy Availability", "Storage"),
                          ("Energy Availability", "Renewables"), ("Energy Source", "Grid")]
    assert all(len(v) == 8 for _, _, v in rows)


def test_csv_and_json_full_precision(hh1, case):
    rows = list(csv.reader(io.StringIO(emit_report(hh1, case, "csv"))))
    assert rows[0] == ["household", "section", "item"] + [f"h{h}" for h in range(1, 9)]
    total = [r for r in rows if r[1:3] == ["Cost", "total"]][0]
    assert float(total[3]) == pytest.approx(hh1.objective, abs=1e-9)
    doc = json.loads(emit_report(hh1, case, "json"))
    assert doc["households"][0]["costs"]["total"] == pytest.approx(hh1.objective, abs=1e-9)


def test_unknown_format(hh1, case):
    with pytest.raises(ValueError):
        emit_report(hh1, case, "xml")


def test_microgrid_rows_cancel(pareto_result, case):
    doc = json.loads(emit_report(pareto_result, case, "json"))
    me = [[r["values"] for r in hh["rows"] if r["item"] == "Source/Load"][0] for hh in doc["households"]]
    for h in range(case.horizon):
        assert abs(sum(v[h] for v in me)) <= 1e-6
    txt = emit_report(pareto_result, case)
    assert "Price" in txt and "Microgrid" in txt and txt.count("Household ") == 2


def test_zero_household_prints_zeros():
    empty = Household((), StorageSpec(0.0, 0.0, 0.9, 0.99, 0.0, 0.0), (0.0, 0.0), 10.0)
    s = Scenario(2, (empty,), (1.0, 2.0))
    sol = solve(build_no_trade_model(s, 0))
    txt = emit_report(sol, s, households=[0])
    assert "Energy Cost = 0.00, Disutility Cost = 0.00, and Total Cost = 0.00" in txt
    assert "-0" not in txt


def test_figure_written(pareto_result, case, tmp_path):
    out = plot_ledgers(pareto_result, case, tmp_path / "ledger.png")
    assert out.stat().st_size > 1000
