"""Dense bounded-variable primal simplex for small LP relaxations.

Solves ``min c x  s.t.  row_lo <= A x <= row_hi,  lb <= x <= ub``.

Each row gets a slack ``s_i = a_i x`` bounded by the row limits, and an
artificial variable absorbs the initial residual; phase 1 drives the
artificials to zero, phase 2 optimises ``c``.  Pricing is Dantzig's largest
reduced cost; after a run of degenerate pivots the method switches to
Bland's smallest-index rule, which cannot cycle, and switches back after the
next nondegenerate step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_AT_LOWER, _AT_UPPER, _FREE, _BASIC = 0, 1, 2, 3


class NumericalError(ArithmeticError):
    def __init__(self, message: str, tag: Optional[str] = None):
        super().__init__(f"{message} (row {tag})" if tag else message)
        self.tag = tag


@dataclass
class LpResult:
    status: str
    x: Optional[np.ndarray] = None
    objective: float = math.nan
    iterations: int = 0


class DenseSimplex:
    def __init__(self, tol: float = 1e-9, pivot_tol: float = 1e-9, degenerate_limit: int = 50,
                 max_iter: int = 50_000):
        self.tol = tol
        self.pivot_tol = pivot_tol
        self.degenerate_limit = degenerate_limit
        self.max_iter = max_iter

    def solve(self, c, A, row_lo, row_hi, lb, ub, tags: Optional[Sequence[str]] = None) -> LpResult:
        A = np.asarray(A.toarray() if hasattr(A, "toarray") else A, dtype=float)
        c = np.asarray(c, dtype=float)
        m, n = A.shape
        lb = np.asarray(lb, dtype=float)
        ub = np.asarray(ub, dtype=float)
        if np.any(lb > ub + self.tol):
            return LpResult(INFEASIBLE)

        keep = ~(np.isinf(row_lo) & np.isinf(row_hi))
        A = A[keep]
        row_lo = np.asarray(row_lo, dtype=float)[keep]
        row_hi = np.asarray(row_hi, dtype=float)[keep]
        tags = [t for t, k in zip(tags, keep) if k] if tags is not None else None
        m = A.shape[0]
        if np.any(row_lo > row_hi + self.tol):
            return LpResult(INFEASIBLE)

        # columns: x (n) | slacks (m) | artificials (m)
        N = n + 2 * m
        low = np.concatenate([lb, row_lo, np.zeros(m)])
        up = np.concatenate([ub, row_hi, np.full(m, math.inf)])
        val = np.zeros(N)
        status = np.empty(N, dtype=np.int8)
        for j in range(n + m):
            if np.isfinite(low[j]):
                val[j], status[j] = low[j], _AT_LOWER
            elif np.isfinite(up[j]):
                val[j], status[j] = up[j], _AT_UPPER
            else:
                val[j], status[j] = 0.0, _FREE

        resid = A @ val[:n] - val[n:n + m]
        sign = np.where(resid > 0, -1.0, 1.0)
        T = np.zeros((m, N))
        T[:, :n] = A * sign[:, None]
        T[np.arange(m), n + np.arange(m)] = -sign
        T[np.arange(m), n + m + np.arange(m)] = 1.0
        basis = n + m + np.arange(m)
        status[basis] = _BASIC
        val[basis] = np.abs(resid)

        phase1_cost = np.zeros(N)
        phase1_cost[n + m:] = 1.0
        res = self._iterate(T, basis, status, val, low, up, phase1_cost, tags)
        iters = res
        if isinstance(res, str):
            return LpResult(res)
        if val[n + m:].sum() > 1e-7 * max(1.0, np.abs(resid).max(initial=0.0)):
            return LpResult(INFEASIBLE, iterations=iters)

        # artificials are frozen at zero for phase 2
        up[n + m:] = 0.0
        for j in range(n + m, N):
            if status[j] != _BASIC:
                status[j] = _AT_LOWER
                val[j] = 0.0
        cost = np.zeros(N)
        cost[:n] = c
        res = self._iterate(T, basis, status, val, low, up, cost, tags)
        if isinstance(res, str):
            return LpResult(res, iterations=iters)
        x = val[:n].copy()
        return LpResult(OPTIMAL, x, float(c @ x), iters + res)

    def _iterate(self, T, basis, status, val, low, up, cost, tags):
        m, N = T.shape
        tol = self.tol
        d = cost - cost[basis] @ T
        degenerate_run = 0
        it = 0
        while True:
            if it >= self.max_iter:
                raise NumericalError("simplex iteration limit reached")
            bland = degenerate_run >= self.degenerate_limit
            eligible = np.zeros(N, dtype=bool)
            eligible |= (status == _AT_LOWER) & (d < -tol) & (up > low)
            eligible |= (status == _AT_UPPER) & (d > tol) & (up > low)
            eligible |= (status == _FREE) & (np.abs(d) > tol)
            candidates = np.flatnonzero(eligible)
            if candidates.size == 0:
                return it
            if bland:
                j = int(candidates[0])
            else:
                j = int(candidates[np.argmax(np.abs(d[candidates]))])
            direction = 1.0 if d[j] < 0 else -1.0

            col = T[:, j]
            # basic variables move by -direction * col * t
            step = math.inf
            leave = -1
            if np.isfinite(up[j]) and np.isfinite(low[j]):
                step = up[j] - low[j]
            a = col * direction
            vb = val[basis]
            lo_b = low[basis]
            up_b = up[basis]
            dec = (a > self.pivot_tol) & np.isfinite(lo_b)
            inc = (a < -self.pivot_tol) & np.isfinite(up_b)
            ratios = np.full(m, math.inf)
            ratios[dec] = (vb[dec] - lo_b[dec]) / a[dec]
            ratios[inc] = (vb[inc] - up_b[inc]) / a[inc]
            np.maximum(ratios, 0.0, out=ratios)
            if m:
                tmin = ratios.min()
                if tmin < step:
                    ties = np.flatnonzero(ratios <= tmin + 1e-12)
                    if bland:
                        leave = int(ties[np.argmin(basis[ties])])
                    else:
                        leave = int(ties[np.argmax(np.abs(a[ties]))])
                    step = float(tmin)
            leave_to_upper = bool(leave >= 0 and a[leave] < 0)
            if not np.isfinite(step):
                return UNBOUNDED
            it += 1
            degenerate_run = degenerate_run + 1 if step <= tol else 0

            val[basis] -= direction * col * step
            val[j] += direction * step
            if leave < 0:
                # bound flip of the entering variable
                status[j] = _AT_UPPER if direction > 0 else _AT_LOWER
                val[j] = up[j] if direction > 0 else low[j]
                continue

            piv = T[leave, j]
            if abs(piv) < self.pivot_tol:
                tag = tags[leave] if tags is not None and leave < len(tags) else None
                raise NumericalError("pivot element below tolerance", tag)
            b_out = basis[leave]
            status[b_out] = _AT_UPPER if leave_to_upper else _AT_LOWER
            val[b_out] = up[b_out] if leave_to_upper else low[b_out]
            T[leave] /= piv
            factors = T[:, j].copy()
            factors[leave] = 0.0
            T -= np.outer(factors, T[leave])
            d -= d[j] * T[leave]
            basis[leave] = j
            status[j] = _BASIC
