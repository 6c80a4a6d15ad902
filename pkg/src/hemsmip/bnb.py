"""Global branch-and-bound for ModelInstance.

Discrete variables are branched first; once a relaxation is integral, any
bilinear product still off its envelope triggers a spatial split of one
factor's interval. Nodes are explored best-bound first.
"""
from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .model import (INFEASIBLE, OPTIMAL, TIMEOUT_INCUMBENT, TIMEOUT_NO_INCUMBENT,
                    ModelInstance, Solution, max_violation)
from .relaxation import Relaxer, mccormick_rows  # noqa: F401  (re-exported)
from .simplex import OPTIMAL as LP_OPTIMAL
from .simplex import UNBOUNDED as LP_UNBOUNDED
from .simplex import WarmStart, solve_lp

log = logging.getLogger(__name__)

INT_TOL = 1e-6
CHECK_TOL = 1e-6
SPLIT_MARGIN = 0.2


@dataclass
class SolverOptions:
    abs_gap: float = 1e-6
    rel_gap: float = 1e-6
    bilinear_tol: float = 1e-6
    time_limit: float = 600.0
    workers: int = 1
    deterministic: bool = True
    seed: int = 0

    def __post_init__(self):
        for name in ("abs_gap", "rel_gap", "bilinear_tol", "time_limit"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class Node:
    overrides: Dict[int, Tuple[float, float]]
    bound: float
    depth: int = 0
    warm: Optional[WarmStart] = None  # parent's final basis


@dataclass
class Branch:
    kind: str  # "integer", "spatial" or "leaf"
    var: Optional[int] = None
    value: float = 0.0
    term: Optional[int] = None


class Frontier:
    """Best-bound-first queue; equal bounds leave in insertion order."""

    def __init__(self):
        self._heap: list = []
        self._seq = itertools.count()

    def push(self, node: Node) -> None:
        heapq.heappush(self._heap, (node.bound, next(self._seq), node))

    def pop(self) -> Node:
        return heapq.heappop(self._heap)[2]

    def min_bound(self) -> float:
        return self._heap[0][0] if self._heap else math.inf

    def __len__(self) -> int:
        return len(self._heap)


def node_order(frontier: Frontier) -> Optional[Node]:
    """Next node to expand, or None when the search is complete."""
    return frontier.pop() if len(frontier) else None


def select_branch(x, w, m: ModelInstance, opts: SolverOptions, lb, ub, rng=None) -> Branch:
    """Branching rule for a node whose relaxation solved to ``(x, w)``."""
    best_j, best_frac = None, INT_TOL
    for v in m.variables:
        if not v.is_discrete:
            continue
        frac = abs(x[v.id] - round(x[v.id]))
        if frac > best_frac + 1e-12:
            best_j, best_frac = v.id, frac
        elif rng is not None and best_j is not None and abs(frac - best_frac) <= 1e-12 and rng.random() < 0.5:
            best_j = v.id
    if best_j is not None:
        return Branch("integer", best_j, float(x[best_j]))

    best = None
    for t, term in enumerate(m.bilinear_terms):
        viol = abs(w[t] - x[term.a] * x[term.b])
        if viol <= opts.bilinear_tol:
            continue
        slot = m.variables[term.b].h or 0
        key = (-viol, slot, t)
        if best is None or key < best[0]:
            best = (key, t)
    if best is None:
        return Branch("leaf")
    t = best[1]
    term = m.bilinear_terms[t]
    wa = ub[term.a] - lb[term.a]
    wb = ub[term.b] - lb[term.b]
    j = term.a if wa >= wb else term.b
    return Branch("spatial", j, split_point(x[j], lb[j], ub[j]), t)


def split_point(value: float, lo: float, hi: float) -> float:
    width = hi - lo
    return min(max(value, lo + SPLIT_MARGIN * width), hi - SPLIT_MARGIN * width)


@dataclass
class _Eval:
    node: Node
    status: str
    z: float = math.inf
    x: Optional[np.ndarray] = None
    w: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None
    warm: Optional[WarmStart] = None


@dataclass
class SearchTrace:
    lower_bounds: List[float] = field(default_factory=list)
    incumbents: List[float] = field(default_factory=list)


class BranchAndBound:
    def __init__(self, m: ModelInstance, opts: Optional[SolverOptions] = None):
        self.m = m
        self.opts = opts or SolverOptions()
        self.relaxer = Relaxer(m)
        self.trace = SearchTrace()
        self.rng = None if self.opts.deterministic else np.random.default_rng(self.opts.seed)

    def _tol(self, inc: float) -> float:
        if not math.isfinite(inc):
            return 0.0
        return max(self.opts.abs_gap, self.opts.rel_gap * max(1.0, abs(inc)))

    def _evaluate(self, node: Node) -> _Eval:
        lb, ub = self.relaxer.node_bounds(node.overrides)
        res = solve_lp(self.relaxer.relax(node.overrides), warm=node.warm)
        if res.status == LP_UNBOUNDED:
            raise RuntimeError("relaxation is unbounded; the model needs finite bounds")
        if res.status != LP_OPTIMAL:
            return _Eval(node, res.status)
        n = self.m.n
        return _Eval(node, res.status, res.objective, res.x[:n], res.x[n:], lb, ub, res.warm)

    def _polish(self, x, lb, ub) -> Optional[np.ndarray]:
        """Turn an integral relaxation point into a truly feasible one."""
        m = self.m
        fixed_int = {v.id: float(round(x[v.id])) for v in m.variables if v.is_discrete}
        attempts = []
        if m.bilinear_terms:
            for side in ("a", "b"):
                fixed = dict(fixed_int)
                for term in m.bilinear_terms:
                    j = getattr(term, side)
                    fixed[j] = float(min(max(x[j], lb[j]), ub[j]))
                attempts.append(fixed)
        else:
            attempts.append(fixed_int)
        for fixed in attempts:
            res = solve_lp(self.relaxer.linearize(lb, ub, fixed))
            if res.status != LP_OPTIMAL:
                continue
            cand = res.x
            for j, v in fixed_int.items():
                cand[j] = v
            if self.feasible(cand):
                return cand
        cand = np.array(x, dtype=float)
        for j, v in fixed_int.items():
            cand[j] = v
        return cand if self.feasible(cand) else None

    def feasible(self, x) -> bool:
        viol = max_violation(self.m, x)
        return max(viol.values()) <= CHECK_TOL

    def solve(self) -> Solution:
        m, opts = self.m, self.opts
        start = time.perf_counter()
        frontier = Frontier()
        frontier.push(Node({}, -math.inf, 0))
        inc_x: Optional[np.ndarray] = None
        inc = math.inf
        lower = -math.inf
        nodes = 0
        timed_out = False
        pool = ThreadPoolExecutor(opts.workers) if opts.workers > 1 else None
        try:
            while len(frontier):
                if time.perf_counter() - start > opts.time_limit:
                    timed_out = True
                    break
                lower = max(lower, min(frontier.min_bound(), inc))
                self.trace.lower_bounds.append(lower)
                if frontier.min_bound() >= inc - self._tol(inc):
                    break
                batch = []
                while len(frontier) and len(batch) < opts.workers:
                    node = node_order(frontier)
                    if node.bound < inc - self._tol(inc):
                        batch.append(node)
                if not batch:
                    continue
                evals = list(pool.map(self._evaluate, batch)) if pool else [self._evaluate(b) for b in batch]
                nodes += len(evals)
                for ev in evals:
                    if ev.status != LP_OPTIMAL:
                        continue
                    z = max(ev.z, ev.node.bound)
                    if z >= inc - self._tol(inc):
                        continue
                    br = select_branch(ev.x, ev.w, m, opts, ev.lb, ev.ub, self.rng)
                    if br.kind == "integer":
                        self._push_integer(frontier, ev, br, z)
                        continue
                    cand = self._polish(ev.x, ev.lb, ev.ub)
                    if cand is not None:
                        val = m.objective_value(cand)
                        if val < inc:
                            inc, inc_x = val, cand
                            self.trace.incumbents.append(inc)
                            log.debug("incumbent %.9g at node %d", inc, nodes)
                    if br.kind == "spatial" and z < inc - self._tol(inc):
                        self._push_spatial(frontier, ev, br, z)
        finally:
            if pool:
                pool.shutdown()

        elapsed = time.perf_counter() - start
        lower = min(frontier.min_bound(), inc)
        if inc_x is None:
            status = TIMEOUT_NO_INCUMBENT if timed_out else INFEASIBLE
            return Solution(status, {}, math.inf, math.inf, nodes, elapsed, lower)
        gap = max(0.0, (inc - lower) / max(1.0, abs(inc)))
        status = TIMEOUT_INCUMBENT if timed_out else OPTIMAL
        return Solution(status, m.assignment(inc_x), inc, gap, nodes, elapsed, lower, list(map(float, inc_x)))

    def _push_integer(self, frontier, ev: _Eval, br: Branch, z: float):
        j, v = br.var, br.value
        lo, hi = ev.lb[j], ev.ub[j]
        for new_lo, new_hi in ((lo, math.floor(v)), (math.ceil(v), hi)):
            if new_lo > new_hi:
                continue
            ov = dict(ev.node.overrides)
            ov[j] = (new_lo, new_hi)
            frontier.push(Node(ov, z, ev.node.depth + 1, ev.warm))

    def _push_spatial(self, frontier, ev: _Eval, br: Branch, z: float):
        j, p = br.var, br.value
        lo, hi = ev.lb[j], ev.ub[j]
        for new_lo, new_hi in ((lo, p), (p, hi)):
            ov = dict(ev.node.overrides)
            ov[j] = (new_lo, new_hi)
            frontier.push(Node(ov, z, ev.node.depth + 1, ev.warm))


def solve(m: ModelInstance, opts: Optional[SolverOptions] = None) -> Solution:
    """Solve ``m`` to global optimality within the gap tolerances."""
    return BranchAndBound(m, opts).solve()
