"""Scaling study: solve seeded random instances of growing size with the
full trading workflow and summarize median runtimes and timeout rates."""
from __future__ import annotations

import csv
import io
import logging
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .bnb import SolverOptions, solve
from .costs import household_cost
from .generate import generate_instance
from .model import INFEASIBLE, TIMEOUT_INCUMBENT, TIMEOUT_NO_INCUMBENT, build_no_trade_model
from .pareto import NoTradeBounds, solve_pareto

log = logging.getLogger(__name__)

DIMENSIONS = ("appliances", "timeslots", "households")
BASE_SIZES = {"appliances": 2, "timeslots": 3, "households": 2}
CSV_HEADER = ["dimension", "size", "seed", "time_s", "nodes", "timed_out"]


@dataclass
class BenchmarkRecord:
    dimension: str
    size: int
    seed: int
    time_s: float
    nodes: int
    timed_out: bool
    status: str = ""
    error: str = ""


def instance_seed(seed: int, dimension: str, size: int, rep: int) -> int:
    """Seed of one benchmark point; stable, so any point can be rerun alone."""
    return seed * 1_000_003 + DIMENSIONS.index(dimension) * 10_007 + size * 101 + rep


def instance_sizes(dimension: str, size: int, base: Optional[Dict[str, int]] = None) -> Dict[str, int]:
    if dimension not in DIMENSIONS:
        raise ValueError(f"unknown dimension {dimension!r}; choose from {DIMENSIONS}")
    sizes = dict(base or BASE_SIZES)
    sizes[dimension] = size
    return sizes


def solve_instance(s, cutoff: float, seed: int = 0) -> Tuple[float, int, bool, str]:
    """Run both workflow phases under one wall-clock budget.

    Returns ``(seconds, nodes, timed_out, status)``.
    """
    start = time.perf_counter()
    nodes = 0

    def remaining():
        return cutoff - (time.perf_counter() - start)

    sols = []
    for k in range(len(s.households)):
        left = remaining()
        if left <= 0:
            return max(time.perf_counter() - start, cutoff), nodes, True, TIMEOUT_NO_INCUMBENT
        sol = solve(build_no_trade_model(s, k), SolverOptions(time_limit=left, seed=seed))
        nodes += sol.nodes
        if sol.status == INFEASIBLE:
            return time.perf_counter() - start, nodes, False, INFEASIBLE
        if sol.status in (TIMEOUT_INCUMBENT, TIMEOUT_NO_INCUMBENT):
            return max(time.perf_counter() - start, cutoff), nodes, True, sol.status
        sols.append(sol)
    left = remaining()
    if left <= 0:
        return max(time.perf_counter() - start, cutoff), nodes, True, TIMEOUT_NO_INCUMBENT
    costs = [household_cost(sol.assignment, s, k)["total"] for k, sol in enumerate(sols)]
    nt = NoTradeBounds(costs, sols, [False] * len(sols))
    res = solve_pareto(s, SolverOptions(time_limit=left, seed=seed), no_trade=nt)
    nodes += res.traded.nodes
    elapsed = time.perf_counter() - start
    timed_out = res.status in (TIMEOUT_INCUMBENT, TIMEOUT_NO_INCUMBENT)
    return (max(elapsed, cutoff) if timed_out else elapsed), nodes, timed_out, res.status


def _run_point(dimension, size, rep, cutoff, seed, base) -> BenchmarkRecord:
    iseed = instance_seed(seed, dimension, size, rep)
    try:
        s = generate_instance(seed=iseed, **instance_sizes(dimension, size, base))
        t, nodes, timed_out, status = solve_instance(s, cutoff, iseed)
        return BenchmarkRecord(dimension, size, iseed, t, nodes, timed_out, status)
    except Exception as exc:  # a broken point is recorded, the sweep goes on
        log.warning("benchmark point %s=%d seed %d failed: %s", dimension, size, iseed, exc)
        return BenchmarkRecord(dimension, size, iseed, 0.0, 0, False, "error", str(exc))


def summarize(records: Sequence[BenchmarkRecord], cutoff: float) -> List[Dict]:
    """Median time per size (timeouts enter at the cutoff) and timeout share."""
    out = []
    for size in sorted({r.size for r in records}):
        rs = [r for r in records if r.size == size and r.status != "error"]
        times = [cutoff if r.timed_out else r.time_s for r in rs]
        out.append({
            "size": size,
            "runs": len(rs),
            "errors": sum(1 for r in records if r.size == size and r.status == "error"),
            "median_s": statistics.median(times) if times else float("nan"),
            "timeout_pct": 100.0 * sum(r.timed_out for r in rs) / len(rs) if rs else float("nan"),
        })
    return out


def run_benchmark(dimension: str, sizes: Sequence[int], repetitions: int = 5, cutoff: float = 60.0,
                  seed: int = 0, workers: int = 1, base: Optional[Dict[str, int]] = None):
    """Sweep one dimension; returns ``(records, summary)``."""
    if repetitions < 3:
        raise ValueError("repetitions must be >= 3")
    if not cutoff > 0:
        raise ValueError("cutoff must be > 0")
    instance_sizes(dimension, sizes[0], base)  # validates the dimension name
    jobs = [(dimension, size, rep, cutoff, seed, base) for size in sizes for rep in range(repetitions)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            records = list(pool.map(lambda j: _run_point(*j), jobs))
    else:
        records = [_run_point(*j) for j in jobs]
    records.sort(key=lambda r: (r.size, r.seed))
    return records, summarize(records, cutoff)


def records_csv(records: Sequence[BenchmarkRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([r.dimension, r.size, r.seed, f"{r.time_s:.6f}", r.nodes, int(r.timed_out)])
    return buf.getvalue()


def plot_summary(summary: Sequence[Dict], dimension: str, path, cutoff: Optional[float] = None):
    """Bars of median time with the timeout share as a line on a second axis."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    sizes = [row["size"] for row in summary]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar([str(x) for x in sizes], [row["median_s"] for row in summary], color="0.6", width=0.6)
    ax.set_xlabel(f"number of {dimension}")
    ax.set_ylabel("median solve time (s)")
    if cutoff is not None:
        ax.axhline(cutoff, color="0.3", lw=0.8, ls=":")
    twin = ax.twinx()
    twin.plot([str(x) for x in sizes], [row["timeout_pct"] for row in summary], "k-o", ms=4)
    twin.set_ylabel("timed out (%)")
    twin.set_ylim(0, 105)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
