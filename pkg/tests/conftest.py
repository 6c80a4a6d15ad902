import pytest

from hemsmip.bnb import SolverOptions, solve
from hemsmip.generate import generate_instance
from hemsmip.model import build_no_trade_model, build_unified_model
from hemsmip.oracle import enumerate_no_trade, enumerate_unified
from hemsmip.pareto import compute_no_trade_bounds, solve_pareto
from hemsmip.scenario import case_study_scenario

NO_TRADE_RUNS = 50
UNIFIED_RUNS = 25


def tiny_no_trade(seed):
    """One household, 3 slots, 1-2 appliances: at most 14 booleans."""
    return generate_instance(1 + seed % 2, 3, 1, seed)


def tiny_unified(seed):
    """Two households, 2 slots, one appliance each."""
    return generate_instance(1, 2, 2, 1000 + seed)


@pytest.fixture(scope="session")
def case():
    return case_study_scenario()


@pytest.fixture(scope="session")
def pareto_result(case):
    return solve_pareto(case, SolverOptions())


@pytest.fixture(scope="session")
def unified_result(case, pareto_result):
    return solve_pareto(case, SolverOptions(), enforce_ceiling=False, no_trade=pareto_result.no_trade)


@pytest.fixture(scope="session")
def oracle_sweep():
    """Solver vs brute force on random tiny instances (computed once per session)."""
    no_trade = []
    for seed in range(NO_TRADE_RUNS):
        s = tiny_no_trade(seed)
        no_trade.append((s, enumerate_no_trade(s, 0), solve(build_no_trade_model(s, 0))))
    unified = []
    for seed in range(UNIFIED_RUNS):
        s = tiny_unified(seed)
        bounds = compute_no_trade_bounds(s).costs
        unified.append((s, enumerate_unified(s, bounds), solve(build_unified_model(s, bounds))))
    return {"no_trade": no_trade, "unified": unified}


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
