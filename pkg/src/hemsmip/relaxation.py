"""LP relaxations of a ModelInstance.

Integrality is dropped and every bilinear product ``a*b`` is replaced by a
fresh column ``w`` tied to its factors by the four McCormick inequalities
over the current node box.
"""
from __future__ import annotations

import math
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .model import GE, LE, ModelInstance
from .simplex import LpInstance

BOUND_EPS = 1e-9

Envelope = List[Tuple[Dict[int, float], str, float]]


def mccormick_rows(w: int, a: int, b: int, a_bounds, b_bounds) -> Envelope:
    """Four linear rows over ``(w, a, b)`` enclosing ``w = a*b`` on the box."""
    aL, aU = a_bounds
    bL, bU = b_bounds
    if not all(math.isfinite(v) for v in (aL, aU, bL, bU)):
        raise ValueError(f"McCormick envelope needs finite bounds, got a={a_bounds} b={b_bounds}")

    def row(ca, cb, sense, rhs):
        coeffs = {w: 1.0}
        # a and b may coincide only for squares, which the models never build
        coeffs[a] = coeffs.get(a, 0.0) - ca
        coeffs[b] = coeffs.get(b, 0.0) - cb
        return coeffs, sense, rhs

    return [
        row(bL, aL, GE, -aL * bL),
        row(bU, aU, GE, -aU * bU),
        row(bL, aU, LE, -aU * bL),
        row(bU, aL, LE, -aL * bU),
    ]


def product_range(a_bounds, b_bounds) -> Tuple[float, float]:
    corners = [x * y for x in a_bounds for y in b_bounds]
    return min(corners), max(corners)


class Relaxer:
    """Caches the dense linear part of a model; builds node LPs cheaply."""

    def __init__(self, m: ModelInstance):
        self.model = m
        n, T = m.n, len(m.bilinear_terms)
        self.n, self.T = n, T
        rows = m.rows
        self.A_base = np.zeros((len(rows), n + T))
        self.b_base = np.array([r.rhs for r in rows], dtype=float)
        self.senses = [r.sense for r in rows]
        for i, r in enumerate(rows):
            for j, c in r.coeffs.items():
                self.A_base[i, j] = c
        self.c = np.zeros(n + T)
        for j, c in m.objective.items():
            self.c[j] = c
        for t, term in enumerate(m.bilinear_terms):
            if term.row is None:
                self.c[n + t] += term.coef
            else:
                self.A_base[term.row, n + t] += term.coef
        self.root_lb = np.array([v.lb for v in m.variables])
        self.root_ub = np.array([v.ub for v in m.variables])
        self.discrete = np.array([v.is_discrete for v in m.variables], dtype=bool)

    def node_bounds(self, overrides: Optional[Mapping[int, Tuple[float, float]]]):
        lb = self.root_lb.copy()
        ub = self.root_ub.copy()
        for j, (lo, hi) in (overrides or {}).items():
            if lo < self.root_lb[j] - BOUND_EPS or hi > self.root_ub[j] + BOUND_EPS:
                raise ValueError(
                    f"override for variable {j} widens its bounds: "
                    f"[{lo}, {hi}] vs root [{self.root_lb[j]}, {self.root_ub[j]}]")
            lb[j] = max(lb[j], lo)
            ub[j] = min(ub[j], hi)
        return lb, ub

    def relax(self, overrides=None) -> LpInstance:
        lb, ub = self.node_bounds(overrides)
        n, T = self.n, self.T
        env_rows = np.zeros((4 * T, n + T))
        env_rhs = np.zeros(4 * T)
        env_senses: List[str] = []
        w_lb = np.zeros(T)
        w_ub = np.zeros(T)
        for t, term in enumerate(self.model.bilinear_terms):
            a_b = (lb[term.a], ub[term.a])
            b_b = (lb[term.b], ub[term.b])
            for r, (coeffs, sense, rhs) in enumerate(mccormick_rows(n + t, term.a, term.b, a_b, b_b)):
                for j, c in coeffs.items():
                    env_rows[4 * t + r, j] += c
                env_rhs[4 * t + r] = rhs
                env_senses.append(sense)
            w_lb[t], w_ub[t] = product_range(a_b, b_b)
        return LpInstance(
            c=self.c,
            A=np.vstack([self.A_base, env_rows]) if T else self.A_base,
            senses=self.senses + env_senses,
            b=np.concatenate([self.b_base, env_rhs]) if T else self.b_base,
            lb=np.concatenate([lb, w_lb]),
            ub=np.concatenate([ub, w_ub]),
            c0=self.model.objective_constant,
        )

    def linearize(self, lb, ub, fixed: Mapping[int, float]) -> LpInstance:
        """Exact LP once one factor of every product is pinned.

        ``fixed`` maps variable id to value; each bilinear term must have at
        least one factor in it.
        """
        n = self.n
        lb = np.array(lb[:n], dtype=float)
        ub = np.array(ub[:n], dtype=float)
        A = self.A_base[:, :n].copy()
        c = self.c[:n].copy()
        for j, v in fixed.items():
            lb[j] = ub[j] = v
        for term in self.model.bilinear_terms:
            if term.a in fixed:
                free, coef = term.b, term.coef * fixed[term.a]
            elif term.b in fixed:
                free, coef = term.a, term.coef * fixed[term.b]
            else:
                raise ValueError("linearize needs one fixed factor per bilinear term")
            if term.row is None:
                c[free] += coef
            else:
                A[term.row, free] += coef
        return LpInstance(c=c, A=A, senses=self.senses, b=self.b_base, lb=lb, ub=ub,
                          c0=self.model.objective_constant)


def relax(m: ModelInstance, overrides=None) -> LpInstance:
    """Continuous relaxation of ``m`` with node bound ``overrides``."""
    return Relaxer(m).relax(overrides)


def split_solution(m: ModelInstance, z: Sequence[float]):
    """Separate model variables from envelope columns of a relaxed solution."""
    z = np.asarray(z)
    return z[: m.n], z[m.n:]
