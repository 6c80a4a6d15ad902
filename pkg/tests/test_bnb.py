import math

import numpy as np
import pytest

from hemsmip.bnb import (BranchAndBound, Frontier, Node, SolverOptions, node_order, select_branch, solve,
                         split_point)
from hemsmip.costs import household_cost
from hemsmip.model import (BOOLEAN, CONTINUOUS, INFEASIBLE, LE, OPTIMAL, TIMEOUT_INCUMBENT,
                           TIMEOUT_NO_INCUMBENT, BilinearTerm, ModelInstance, build_no_trade_model,
                           max_violation)
from hemsmip.scenario import Appliance, Household, Scenario, StorageSpec, case_study_scenario


def _toy():
    m = ModelInstance()
    m.add_var(BOOLEAN, 0, 1, "S", 0, 0, 1)
    m.add_var(CONTINUOUS, 0, 2, "MP", None, None, 1)
    m.add_var(CONTINUOUS, -1, 1, "ME", 0, None, 1)
    r = m.add_row({0: 1.0}, LE, 10.0, "ceiling")
    m.bilinear_terms.append(BilinearTerm(1.0, 1, 2, r))
    lb = np.array([0.0, 0.0, -1.0])
    ub = np.array([1.0, 2.0, 1.0])
    return m, lb, ub


def test_branch_on_fractional_first():
    m, lb, ub = _toy()
    br = select_branch([0.5, 1.0, 0.5], [0.5], m, SolverOptions(), lb, ub)
    assert br.kind == "integer" and br.var == 0


def test_spatial_branch_when_product_off():
    m, lb, ub = _toy()
    br = select_branch([1.0, 2.0, 0.0], [1.0], m, SolverOptions(), lb, ub)
    assert br.kind == "spatial" and br.term == 0
    # equal widths (2 and 2): the price factor is split
    assert br.var == 1
    assert lb[1] + 0.4 <= br.value <= ub[1] - 0.4


def test_violation_at_tolerance_is_leaf():
    m, lb, ub = _toy()
    br = select_branch([1.0, 0.0, 0.5], [1e-6], m, SolverOptions(bilinear_tol=1e-6), lb, ub)
    assert br.kind == "leaf"


def test_most_fractional_with_lowest_id_on_ties():
    m = ModelInstance()
    for h in range(1, 4):
        m.add_var(BOOLEAN, 0, 1, "S", 0, 0, h)
    br = select_branch([0.3, 0.5, 0.5], [], m, SolverOptions(), np.zeros(3), np.ones(3))
    assert br.var == 1


def test_split_point_clamped():
    assert split_point(0.0, 0.0, 10.0) == 2.0
    assert split_point(10.0, 0.0, 10.0) == 8.0
    assert split_point(5.0, 0.0, 10.0) == 5.0


def test_node_order_best_bound_fifo():
    f = Frontier()
    for b in (5.0, 4.2, 4.2):
        f.push(Node({}, b, depth=int(b * 10)))
    first = node_order(f)
    assert first.bound == 4.2 and len(f) == 2
    assert node_order(f).bound == 4.2
    assert node_order(f).bound == 5.0
    assert node_order(f) is None


def test_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(time_limit=0)
    with pytest.raises(ValueError):
        SolverOptions(rel_gap=-1)
    with pytest.raises(ValueError):
        SolverOptions(workers=0)


def test_household_one_low_disutility():
    s = case_study_scenario()
    m = build_no_trade_model(s, 0)
    sol = solve(m)
    assert sol.status == OPTIMAL
    assert abs(sol.objective - 6.99) <= 0.02
    assert max(max_violation(m, sol.x).values()) <= 1e-6
    assert sol.gap <= 1e-6


def test_household_one_high_disutility():
    s = case_study_scenario().with_disutility(5.0)
    sol = solve(build_no_trade_model(s, 0))
    assert abs(sol.objective - 9.57) <= 0.02
    assert household_cost(sol.assignment, s, 0)["disutility"] == pytest.approx(0.0, abs=1e-9)


def test_deterministic_repeats():
    m = build_no_trade_model(case_study_scenario(), 1)
    runs = [solve(m) for _ in range(3)]
    assert len({(r.objective, r.nodes) for r in runs}) == 1
    assert all(r.x == runs[0].x for r in runs)


def test_bounds_are_monotone():
    bb = BranchAndBound(build_no_trade_model(case_study_scenario(), 0))
    sol = bb.solve()
    lows, incs = bb.trace.lower_bounds, bb.trace.incumbents
    assert all(b >= a - 1e-12 for a, b in zip(lows, lows[1:]))
    assert all(b <= a for a, b in zip(incs, incs[1:]))
    assert lows[-1] <= sol.objective + 1e-9


def test_parallel_matches_serial():
    m = build_no_trade_model(case_study_scenario(), 0)
    serial = solve(m)
    par = solve(m, SolverOptions(workers=3, deterministic=False, seed=4))
    assert par.objective == pytest.approx(serial.objective, abs=1e-6)


def test_time_limit():
    m = build_no_trade_model(case_study_scenario(), 0)
    sol = solve(m, SolverOptions(time_limit=1e-9))
    assert sol.status in (TIMEOUT_INCUMBENT, TIMEOUT_NO_INCUMBENT)
    if sol.status == TIMEOUT_NO_INCUMBENT:
        assert sol.assignment == {} and math.isinf(sol.objective)


def test_timeout_keeps_valid_lower_bound():
    m = build_no_trade_model(case_study_scenario(), 0)
    sol = solve(m, SolverOptions(time_limit=0.05))
    if sol.status == TIMEOUT_INCUMBENT:
        assert sol.lower_bound <= 6.9858279 + 1e-6 <= sol.objective + 1e-6


def test_structurally_infeasible():
    # storage has to stay above a level it decays below with no way to charge
    st = StorageSpec(3.0, 0.0, 0.9, 0.5, 5.0, 3.0)
    s = Scenario(2, (Household((Appliance(1, 1.0, 0.0, 1, 2),), st, (0.0, 0.0), 20.0),), (1.0, 1.0))
    sol = solve(build_no_trade_model(s, 0))
    assert sol.status == INFEASIBLE and not sol.has_incumbent
