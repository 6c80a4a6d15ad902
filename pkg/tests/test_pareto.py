import copy
import math

import pytest

from hemsmip.bnb import SolverOptions
from hemsmip.costs import household_cost
from hemsmip.model import INFEASIBLE, OPTIMAL
from hemsmip.pareto import (BoundsViolateFeasibility, InfeasibleHousehold, compute_no_trade_bounds,
                            from_no_trade, solve_pareto, verify_pareto)
from hemsmip.scenario import Appliance, Household, Scenario, StorageSpec

TOL = 0.02


def test_no_trade_bounds_of_case(pareto_result):
    nt = pareto_result.no_trade
    assert nt.complete
    assert abs(nt.costs[0] - 6.99) <= TOL
    assert abs(nt.costs[1] - 7.57) <= TOL


def test_pareto_respects_ceilings(pareto_result):
    r = pareto_result
    assert r.status == OPTIMAL
    for c, bound in zip(r.household_costs, r.no_trade_costs):
        assert c["total"] <= bound + 1e-6
    assert r.total_Y <= sum(r.no_trade_costs) - 1.5
    assert abs(r.total_Y - 12.74) <= TOL


def test_pareto_verifies(pareto_result, case):
    rep = verify_pareto(pareto_result, case)
    assert rep["passed"], rep


def test_corrupted_trade_is_caught(pareto_result, case):
    bad = copy.deepcopy(pareto_result)
    bad.traded.assignment[("ME", 0, None, 1)] += 0.5
    rep = verify_pareto(bad, case)
    assert not rep["passed"]
    assert rep["trade_energy"][0] == pytest.approx(0.5, abs=1e-9)
    assert rep["households"][0]["balance"] >= 0.5 - 1e-9


def test_unified_without_ceiling(unified_result):
    r = unified_result
    assert abs(r.total_Y - 12.74) <= TOL
    assert abs(r.household_costs[0]["total"] - 12.65) <= TOL
    assert abs(r.household_costs[1]["total"] - 0.09) <= TOL


def test_ceilings_cost_nothing_here(pareto_result, unified_result):
    # the unconstrained optimum can be repriced to respect the ceilings
    assert pareto_result.total_Y == pytest.approx(unified_result.total_Y, abs=1e-6)


def test_no_trade_schedules_pass_verification(pareto_result, case):
    r = from_no_trade(pareto_result.no_trade, case)
    assert verify_pareto(r, case)["passed"]
    assert r.total_Y == pytest.approx(sum(r.no_trade_costs), abs=1e-9)


def _one_app_house(power=1.0, renewable=(0.0, 0.0)):
    st = StorageSpec(0.0, 0.0, 0.9, 0.99, 0.0, 0.0)
    return Household((Appliance(1, power, 0.1, 1, 2),), st, renewable, 100.0)


def test_single_household_equals_no_trade():
    s = Scenario(2, (_one_app_house(),), (2.0, 1.0))
    r = solve_pareto(s)
    assert r.total_Y == pytest.approx(r.no_trade_costs[0], abs=1e-6)
    # slot 2: energy 1.0 plus one slot of delay at 0.1
    assert r.total_Y == pytest.approx(1.1, abs=1e-6)


def test_zero_appliance_household_has_zero_bound():
    empty = Household((), StorageSpec(0.0, 0.0, 0.9, 0.99, 0.0, 0.0), (0.0, 0.0), 100.0)
    s = Scenario(2, (_one_app_house(), empty), (2.0, 1.0))
    nt = compute_no_trade_bounds(s)
    assert nt.costs[1] == 0.0
    r = solve_pareto(s, no_trade=nt)
    assert r.household_costs[1]["total"] <= 1e-6
    assert verify_pareto(r, s)["passed"]


def test_surplus_flows_to_neighbour():
    # household 2 has spare renewable energy; trading can only lower the sum
    s = Scenario(2, (_one_app_house(), _one_app_house(renewable=(3.0, 3.0))), (2.0, 1.0))
    r = solve_pareto(s)
    assert r.total_Y <= sum(r.no_trade_costs) + 1e-9
    assert r.household_costs[0]["energy"] <= 1e-6 + r.no_trade_costs[0]
    assert verify_pareto(r, s)["passed"]


def test_shrink_can_make_it_infeasible():
    s = Scenario(2, (_one_app_house(), _one_app_house()), (2.0, 1.0))
    r = solve_pareto(s, shrink=[0.5, 0.5])
    assert r.status == INFEASIBLE and math.isinf(r.total_Y)
    with pytest.raises(ValueError):
        solve_pareto(s, shrink=[0.5])


def test_infeasible_household_raises():
    st = StorageSpec(3.0, 0.0, 0.9, 0.5, 5.0, 3.0)
    bad = Household((Appliance(1, 1.0, 0.0, 1, 2),), st, (0.0, 0.0), 20.0)
    s = Scenario(2, (_one_app_house(), bad), (1.0, 1.0))
    with pytest.raises(InfeasibleHousehold) as err:
        compute_no_trade_bounds(s)
    assert err.value.household == 1


def test_recomputed_costs_match(pareto_result, case):
    a = pareto_result.traded.assignment
    for k, c in enumerate(pareto_result.household_costs):
        assert c == household_cost(a, case, k)


def test_prices_within_grid(pareto_result, case):
    for p, g in zip(pareto_result.micro_prices, case.grid_price):
        assert -1e-9 <= p <= g + 1e-9


def test_parallel_bounds_match(case, pareto_result):
    nt = compute_no_trade_bounds(case, SolverOptions(workers=2))
    assert nt.costs == pytest.approx(pareto_result.no_trade_costs, abs=1e-6)
