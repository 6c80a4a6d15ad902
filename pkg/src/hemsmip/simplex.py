"""Bounded-variable revised simplex with a two-phase start.

Every row gets a slack column whose bounds encode the relation, so the
working system is always ``[A I] z = b`` with ``lo <= z <= hi``. Rows whose
slack cannot absorb the initial residual get an artificial column; phase 1
drives those to zero and phase 2 keeps them fixed at ``[0, 0]``.

The basis inverse is held densely and refreshed every ``REFACTOR_EVERY``
pivots. Pricing is Dantzig's largest reduced cost, switching to the
smallest-index rule while degenerate pivots keep stalling.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

LE, EQ, GE = "<=", "=", ">="

FEAS_TOL = 1e-8
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 50
STALL_LIMIT = 25

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


class NumericalError(RuntimeError):
    """Raised when the simplex cannot produce a trustworthy answer."""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class LpInstance:
    c: np.ndarray
    A: np.ndarray
    senses: List[str]
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    c0: float = 0.0
    names: Optional[list] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.asarray(self.A, dtype=float).reshape(len(self.senses), len(self.c))
        self.b = np.asarray(self.b, dtype=float)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        n = len(self.c)
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("bound vectors must match the column count")
        if self.b.shape != (len(self.senses),):
            raise ValueError("rhs length must match the row count")
        for arr, name in ((self.c, "objective"), (self.A, "matrix"), (self.b, "rhs")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains NaN or infinite entries")
        if np.isnan(self.lb).any() or np.isnan(self.ub).any():
            raise ValueError("bounds contain NaN")
        bad = [s for s in self.senses if s not in (LE, EQ, GE)]
        if bad:
            raise ValueError(f"unknown row relation {bad[0]!r}")

    @property
    def shape(self):
        return self.A.shape


@dataclass
class WarmStart:
    """Final basis of a solve, reusable when only bounds or envelopes change."""
    basis: List[int]
    at_upper: np.ndarray
    shape: tuple


@dataclass
class LpResult:
    status: str
    x: Optional[np.ndarray]
    objective: float
    iterations: int
    basis: List[int] = field(default_factory=list)
    warm: Optional[WarmStart] = None


def solve_lp(lp: LpInstance, max_iter: Optional[int] = None,
             warm: Optional[WarmStart] = None) -> LpResult:
    """Minimize ``c @ x + c0`` subject to the rows and bounds of ``lp``.

    With ``warm`` the solve restarts from a previous basis using dual simplex
    pivots and falls back to a cold two-phase start if that basis is unusable.
    """
    if np.any(lp.lb > lp.ub + FEAS_TOL):
        return LpResult(INFEASIBLE, None, np.inf, 0)
    solver = _Simplex(lp, max_iter)
    if solver.trivially_infeasible:
        return LpResult(INFEASIBLE, None, np.inf, 0)
    if warm is not None and warm.shape == (solver.m, solver.n):
        try:
            res = solver.run_warm(warm)
        except NumericalError:
            res = None
        if res is not None:
            return res
        solver = _Simplex(lp, max_iter)
    return solver.run_cold()


class _Simplex:
    def __init__(self, lp: LpInstance, max_iter):
        self.lp = lp
        n = len(lp.c)
        nonempty = np.any(lp.A != 0, axis=1)
        self.trivially_infeasible = False
        for r in np.flatnonzero(~nonempty):
            rhs, sense = lp.b[r], lp.senses[r]
            if (sense == EQ and abs(rhs) > FEAS_TOL) or (sense == LE and rhs < -FEAS_TOL) \
                    or (sense == GE and rhs > FEAS_TOL):
                self.trivially_infeasible = True
        rows = np.flatnonzero(nonempty)
        A = lp.A[rows]
        m = len(rows)
        self.m, self.n = m, n
        self.b = lp.b[rows].copy()
        slack_lo = np.zeros(m)
        slack_hi = np.zeros(m)
        for idx, r in enumerate(rows):
            s = lp.senses[r]
            if s == LE:
                slack_hi[idx] = np.inf
            elif s == GE:
                slack_lo[idx] = -np.inf
        self.A = np.hstack([A, np.eye(m)])
        self.lo = np.concatenate([lp.lb, slack_lo])
        self.hi = np.concatenate([lp.ub, slack_hi])
        self.c = np.concatenate([lp.c, np.zeros(m)])
        self.max_iter = max_iter or 50 * (m + n) + 1000
        self.iterations = 0
        self.n_art = 0

    # -- setup -------------------------------------------------------------
    def _initial_point(self):
        n, m = self.n, self.m
        x = np.zeros(n + m)
        lo, hi = self.lo, self.hi
        x[:n] = np.where(np.isfinite(lo[:n]), lo[:n], np.where(np.isfinite(hi[:n]), hi[:n], 0.0))
        resid = self.b - self.A[:, :n] @ x[:n]
        basis = list(range(n, n + m))
        art_rows = []
        for r in range(m):
            j = n + r
            v = resid[r]
            if lo[j] - FEAS_TOL <= v <= hi[j] + FEAS_TOL:
                x[j] = v
            else:
                x[j] = min(max(v, lo[j]), hi[j])
                art_rows.append(r)
        if art_rows:
            k = len(art_rows)
            cols = np.zeros((m, k))
            vals = np.zeros(k)
            for a, r in enumerate(art_rows):
                gap = resid[r] - x[n + r]
                cols[r, a] = 1.0 if gap > 0 else -1.0
                vals[a] = abs(gap)
                basis[r] = n + m + a
            x = np.concatenate([x, vals])
            self.A = np.hstack([self.A, cols])
            self.lo = np.concatenate([self.lo, np.zeros(k)])
            self.hi = np.concatenate([self.hi, np.full(k, np.inf)])
            self.c = np.concatenate([self.c, np.zeros(k)])
        self.n_art = len(art_rows)
        self.x = x
        self.basis = basis
        self.is_basic = np.zeros(len(x), dtype=bool)
        self.is_basic[basis] = True
        # the starting basis is diagonal with +-1 entries, hence its own inverse
        self.Binv = np.diag([self.A[r, basis[r]] for r in range(m)]).astype(float)
        self.pivots_since_refactor = 0

    # -- linear algebra ---------------------------------------------------
    def _refactor(self):
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular basis during refactorization",
                                 {"iterations": self.iterations, "basis": list(self.basis)}) from exc
        nb = ~self.is_basic
        rhs = self.b - self.A[:, nb] @ self.x[nb]
        self.x[self.basis] = self.Binv @ rhs
        self.pivots_since_refactor = 0

    def _pivot(self, r: int, j: int, alpha: np.ndarray):
        leaving = self.basis[r]
        row_r = self.Binv[r] / alpha[r]
        self.Binv -= np.outer(alpha, row_r)
        self.Binv[r] = row_r
        self.basis[r] = j
        self.is_basic[j] = True
        self.is_basic[leaving] = False
        self.pivots_since_refactor += 1

    def _check_iterations(self):
        if self.iterations >= self.max_iter:
            raise NumericalError("simplex iteration limit reached",
                                 {"iterations": self.iterations, "rows": self.m, "cols": self.n})

    def _reduced_costs(self, cost):
        y = cost[self.basis] @ self.Binv
        return cost - y @ self.A

    def _iterate(self, cost: np.ndarray) -> str:
        """Primal simplex from a primal feasible basis."""
        stall = 0
        bland = False
        lo, hi = self.lo, self.hi
        while True:
            self._check_iterations()
            if self.pivots_since_refactor >= REFACTOR_EVERY:
                self._refactor()
            basis = self.basis
            d = self._reduced_costs(cost)
            x = self.x
            can_up = (~self.is_basic) & (x < hi - FEAS_TOL) & (d < -OPT_TOL)
            can_down = (~self.is_basic) & (x > lo + FEAS_TOL) & (d > OPT_TOL)
            eligible = can_up | can_down
            if not eligible.any():
                return OPTIMAL
            if bland:
                j = int(np.flatnonzero(eligible)[0])
            else:
                score = np.where(eligible, np.abs(d), -1.0)
                j = int(np.argmax(score))
            direction = 1.0 if can_up[j] else -1.0

            alpha = self.Binv @ self.A[:, j]
            rate = -direction * alpha  # d x_B / d theta
            xb = x[basis]
            lob = lo[basis]
            hib = hi[basis]
            theta = np.full(self.m, np.inf)
            dec = rate < -PIVOT_TOL
            inc = rate > PIVOT_TOL
            with np.errstate(invalid="ignore", divide="ignore"):
                theta[dec] = (xb[dec] - lob[dec]) / (-rate[dec])
                theta[inc] = (hib[inc] - xb[inc]) / rate[inc]
            theta = np.where(np.isnan(theta), np.inf, np.maximum(theta, 0.0))
            t_flip = hi[j] - lo[j]
            t_min = theta.min() if self.m else np.inf
            if not np.isfinite(t_min) and not np.isfinite(t_flip):
                return UNBOUNDED
            self.iterations += 1
            if t_flip <= t_min:
                step = t_flip
                x[basis] = xb + rate * step
                x[j] = hi[j] if direction > 0 else lo[j]
                stall = 0
                bland = False
                continue
            step = t_min
            ties = np.flatnonzero(theta <= t_min + 1e-12)
            if bland:
                r = int(ties[np.argmin(np.asarray(basis)[ties])])
            else:
                r = int(ties[np.argmax(np.abs(alpha[ties]))])
            leaving = basis[r]
            x[basis] = xb + rate * step
            x[j] = x[j] + direction * step
            x[leaving] = lob[r] if rate[r] < 0 else hib[r]
            self._pivot(r, j, alpha)
            if step <= 1e-12:
                stall += 1
                if stall >= STALL_LIMIT:
                    bland = True
            else:
                stall = 0
                bland = False

    def _dual(self) -> str:
        """Dual simplex from a dual feasible basis until primal feasible."""
        lo, hi = self.lo, self.hi
        movable = hi - lo > FEAS_TOL
        while True:
            self._check_iterations()
            if self.pivots_since_refactor >= REFACTOR_EVERY:
                self._refactor()
            basis = self.basis
            x = self.x
            xb = x[basis]
            lob, hib = lo[basis], hi[basis]
            viol = np.maximum(lob - xb, xb - hib)
            if self.m == 0:
                return OPTIMAL
            r = int(np.argmax(viol))
            if viol[r] <= FEAS_TOL:
                return OPTIMAL
            below = xb[r] < lob[r]
            target = lob[r] if below else hib[r]
            alpha_r = self.Binv[r] @ self.A
            d = self._reduced_costs(self.c)
            nonbasic = ~self.is_basic & movable
            at_lo = nonbasic & (x <= lo + FEAS_TOL)
            at_hi = nonbasic & (x >= hi - FEAS_TOL)
            free = nonbasic & ~at_lo & ~at_hi
            pos = alpha_r > PIVOT_TOL
            neg = alpha_r < -PIVOT_TOL
            if below:
                elig = (at_lo & neg) | (at_hi & pos) | (free & (pos | neg))
            else:
                elig = (at_lo & pos) | (at_hi & neg) | (free & (pos | neg))
            if not elig.any():
                return INFEASIBLE
            cand = np.flatnonzero(elig)
            ratio = np.abs(d[cand]) / np.abs(alpha_r[cand])
            best = ratio.min()
            ties = cand[ratio <= best + 1e-12]
            j = int(ties[np.argmax(np.abs(alpha_r[ties]))])
            alpha = self.Binv @ self.A[:, j]
            theta = (xb[r] - target) / alpha[r]
            leaving = basis[r]
            x[basis] = xb - theta * alpha
            x[j] += theta
            x[leaving] = target
            self.iterations += 1
            self._pivot(r, j, alpha)

    # -- drivers ----------------------------------------------------------
    def run_cold(self) -> LpResult:
        self._initial_point()
        total = len(self.x)
        art = np.arange(self.n + self.m, total)
        if self.n_art:
            phase1 = np.zeros(total)
            phase1[art] = 1.0
            self._iterate(phase1)
            self._refactor()
            if self.x[art].sum() > FEAS_TOL:
                return LpResult(INFEASIBLE, None, np.inf, self.iterations)
            self.hi[art] = 0.0
            self._evict_artificials()
        status = self._iterate(self.c)
        if status == UNBOUNDED:
            return LpResult(UNBOUNDED, None, -np.inf, self.iterations)
        return self._finish()

    def run_warm(self, warm: WarmStart) -> Optional[LpResult]:
        n, m = self.n, self.m
        lo, hi = self.lo, self.hi
        x = np.where(warm.at_upper & np.isfinite(hi), hi,
                     np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0)))
        self.x = x.astype(float)
        self.basis = list(warm.basis)
        self.is_basic = np.zeros(n + m, dtype=bool)
        self.is_basic[self.basis] = True
        self._refactor()
        d = self._reduced_costs(self.c)
        nb = ~self.is_basic & (hi - lo > FEAS_TOL)
        wrong_lo = nb & (self.x <= lo + FEAS_TOL) & (d < -OPT_TOL)
        wrong_hi = nb & (self.x >= hi - FEAS_TOL) & (d > OPT_TOL)
        free = nb & ~np.isfinite(lo) & ~np.isfinite(hi) & (np.abs(d) > OPT_TOL)
        if free.any() or np.any(wrong_lo & ~np.isfinite(hi)) or np.any(wrong_hi & ~np.isfinite(lo)):
            return None
        if wrong_lo.any() or wrong_hi.any():
            self.x[wrong_lo] = hi[wrong_lo]
            self.x[wrong_hi] = lo[wrong_hi]
            self._refactor()
        if self._dual() == INFEASIBLE:
            return LpResult(INFEASIBLE, None, np.inf, self.iterations)
        if self._iterate(self.c) == UNBOUNDED:
            return LpResult(UNBOUNDED, None, -np.inf, self.iterations)
        return self._finish()

    def _evict_artificials(self):
        """Swap zero-level artificials out of the basis where possible."""
        limit = self.n + self.m
        for r in range(self.m):
            if self.basis[r] < limit:
                continue
            alpha_r = self.Binv[r] @ self.A[:, :limit]
            alpha_r[self.is_basic[:limit]] = 0.0
            j = int(np.argmax(np.abs(alpha_r)))
            if abs(alpha_r[j]) <= 1e-7:
                continue
            alpha = self.Binv @ self.A[:, j]
            self._pivot(r, j, alpha)
        self._refactor()

    def _finish(self) -> LpResult:
        self._refactor()
        x = self._verified_primal()
        obj = float(self.lp.c @ x + self.lp.c0)
        warm = None
        limit = self.n + self.m
        if max(self.basis, default=-1) < limit:
            xs = self.x[:limit]
            at_upper = ~self.is_basic[:limit] & (xs >= self.hi[:limit] - FEAS_TOL) & np.isfinite(self.hi[:limit])
            warm = WarmStart(list(self.basis), at_upper, (self.m, self.n))
        return LpResult(OPTIMAL, x, obj, self.iterations, list(self.basis), warm)

    def _verified_primal(self) -> np.ndarray:
        for attempt in range(2):
            x = self.x[: self.n].copy()
            lp = self.lp
            act = lp.A @ x
            worst = 0.0
            for r, s in enumerate(lp.senses):
                if s == LE:
                    v = act[r] - lp.b[r]
                elif s == GE:
                    v = lp.b[r] - act[r]
                else:
                    v = abs(act[r] - lp.b[r])
                worst = max(worst, v)
            bound = max(0.0, float(np.max(lp.lb - x, initial=0.0)), float(np.max(x - lp.ub, initial=0.0)))
            art_left = float(np.abs(self.x[self.n + self.m:]).max(initial=0.0))
            if worst <= FEAS_TOL and bound <= FEAS_TOL and art_left <= FEAS_TOL:
                # snap round-off just outside a bound back onto it
                return np.clip(x, lp.lb, lp.ub)
            if attempt == 0:
                if self._dual() != OPTIMAL or self._iterate(self.c) != OPTIMAL:
                    break
                self._refactor()
        raise NumericalError(
            "optimal basis fails the feasibility check",
            {"row_residual": worst, "bound_violation": bound, "artificial": art_left,
             "iterations": self.iterations, "basis": list(self.basis)},
        )
