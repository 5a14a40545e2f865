"""LP-based branch-and-bound over the binary variables of a ``MilpModel``.

Search rule (fixed, for reproducibility): branch on the most fractional
binary, ties to the earliest declared; dive depth-first into the child
nearest to the LP value; when a dive ends, resume from the most recently
created open node while no incumbent exists and from the open node with the
best bound afterwards.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .check import check_assignment
from .model import MilpModel, ModelArrays
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, DenseSimplex, LpResult

FEASIBLE_LIMIT = "feasible-time-limit"
LIMIT_NO_SOLUTION = "time-limit"

DEFAULT_TIME_LIMIT = 600.0
DEFAULT_GAP = 1e-3
DENSE_SIZE_LIMIT = 50_000


@dataclass
class MilpSolution:
    status: str
    assignment: Dict[str, float] = field(default_factory=dict)
    objective_value: float = math.nan
    gap: float = math.inf
    stats: Dict[str, float] = field(default_factory=dict)

    @property
    def has_solution(self) -> bool:
        return bool(self.assignment)


class DenseEngine:
    """Relaxations through the in-tree dense simplex, solved from scratch."""

    name = "simplex"

    def __init__(self, arrays: ModelArrays):
        self.arrays = arrays
        self.A = arrays.A.toarray()
        self.simplex = DenseSimplex()

    def solve(self, lb: np.ndarray, ub: np.ndarray, cutoff: float = math.inf) -> LpResult:
        a = self.arrays
        return self.simplex.solve(a.c, self.A, a.row_lo, a.row_hi, lb, ub, a.tags)


class HighsEngine:
    """Relaxations through HiGHS' dual simplex, warm-started between nodes."""

    name = "highs"

    def __init__(self, arrays: ModelArrays):
        import highspy

        self._hs = highspy
        a = arrays
        inf = highspy.kHighsInf
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("presolve", "off")
        h.setOptionValue("solver", "simplex")
        h.setOptionValue("threads", 1)
        h.setOptionValue("random_seed", 0)
        lp = highspy.HighsLp()
        n = len(a.names)
        lp.num_col_ = n
        lp.num_row_ = a.A.shape[0]
        lp.col_cost_ = a.c
        lp.col_lower_ = np.where(np.isinf(a.lb), -inf, a.lb)
        lp.col_upper_ = np.where(np.isinf(a.ub), inf, a.ub)
        lp.row_lower_ = np.where(np.isinf(a.row_lo), -inf, a.row_lo)
        lp.row_upper_ = np.where(np.isinf(a.row_hi), inf, a.row_hi)
        csc = a.A.tocsc()
        csc.sort_indices()
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = csc.indptr
        lp.a_matrix_.index_ = csc.indices
        lp.a_matrix_.value_ = csc.data
        h.passModel(lp)
        self.h = h
        self.inf = inf
        self.cur_lb = a.lb.copy()
        self.cur_ub = a.ub.copy()

    def solve(self, lb: np.ndarray, ub: np.ndarray, cutoff: float = math.inf) -> LpResult:
        changed = np.flatnonzero((lb != self.cur_lb) | (ub != self.cur_ub))
        if changed.size:
            inf = self.inf
            self.h.changeColsBounds(
                changed.size, changed.astype(np.int32),
                np.where(np.isinf(lb[changed]), -inf, lb[changed]),
                np.where(np.isinf(ub[changed]), inf, ub[changed]),
            )
            self.cur_lb[changed] = lb[changed]
            self.cur_ub[changed] = ub[changed]
        self.h.setOptionValue("objective_bound", float(cutoff) if math.isfinite(cutoff) else self.inf)
        self.h.run()
        st = self.h.getModelStatus()
        S = self._hs.HighsModelStatus
        if st == S.kOptimal:
            x = np.array(self.h.getSolution().col_value)
            return LpResult(OPTIMAL, x, float(self.h.getInfo().objective_function_value))
        if st == S.kObjectiveBound:
            return LpResult(OPTIMAL, None, float(cutoff))
        if st == S.kInfeasible:
            return LpResult(INFEASIBLE)
        if st in (S.kUnbounded, S.kUnboundedOrInfeasible):
            return LpResult(UNBOUNDED)
        raise ArithmeticError(f"LP relaxation failed with HiGHS status {self.h.modelStatusToString(st)}")


def make_engine(arrays: ModelArrays, lp_engine: str = "auto"):
    if lp_engine == "auto":
        m, n = arrays.A.shape
        lp_engine = "simplex" if m * (n + 2 * m) <= DENSE_SIZE_LIMIT else "highs"
    if lp_engine == "simplex":
        return DenseEngine(arrays)
    if lp_engine == "highs":
        return HighsEngine(arrays)
    raise ValueError(f"unknown LP engine {lp_engine!r}")


def solve_exact(model: MilpModel, time_limit: float = DEFAULT_TIME_LIMIT,
                node_limit: Optional[int] = None, gap: float = DEFAULT_GAP,
                lp_engine: str = "auto", int_tol: float = 1e-6,
                abs_tol: float = 1e-9, incumbent: Optional[Dict[str, float]] = None,
                objective_step: Optional[float] = None,
                priority: Optional[Dict[str, int]] = None) -> MilpSolution:
    """Solve ``model`` to within relative ``gap`` (0.1% by default).

    Returns ``optimal``, ``infeasible``, ``unbounded``, ``feasible-time-limit``
    (incumbent available when a limit was hit) or ``time-limit`` (limit hit
    before any incumbent).

    ``incumbent`` is a known feasible assignment used as the starting
    upper bound (it is checked first and ignored if infeasible).
    ``objective_step > 0`` declares that every optimal value of every
    subproblem lies on the grid ``objective_step * Z``; nodes whose bound
    rounds up to the incumbent value on that grid are then pruned.  By
    default the step is taken from ``model.metadata["objective_step"]``.

    ``priority`` (variable name -> class, lower first) restricts branching
    to the fractional binaries of the most urgent class; within it the
    most fractional one is chosen as usual.  Without it all binaries form
    one class.
    """
    if objective_step is None:
        objective_step = float(model.metadata.get("objective_step", 0.0))
    start = time.perf_counter()
    arrays = model.arrays()
    n = len(arrays.names)
    if n == 0:
        return MilpSolution(OPTIMAL, {}, 0.0, 0.0, {"nodes": 0, "wall_time": 0.0})
    engine = make_engine(arrays, lp_engine)
    bin_idx = np.flatnonzero(arrays.is_binary)
    if priority:
        bin_class = np.array([priority.get(arrays.names[j], 0) for j in bin_idx], dtype=float)
    else:
        bin_class = np.zeros(bin_idx.size)
    root_lb, root_ub = arrays.lb.copy(), arrays.ub.copy()

    start_point = incumbent
    incumbent: Optional[np.ndarray] = None
    inc_obj = math.inf
    if start_point is not None and not check_assignment(model, start_point):
        incumbent = np.array([float(start_point[n]) for n in arrays.names])
        incumbent[bin_idx] = np.round(incumbent[bin_idx])
        inc_obj = float(arrays.c @ incumbent)

    def threshold() -> float:
        if incumbent is None:
            return math.inf
        cut = inc_obj - max(abs_tol, gap * abs(inc_obj))
        if objective_step > 0:
            # any better solution lies at least one grid step below
            cut = min(cut, inc_obj - objective_step + max(abs_tol, 1e-9 * abs(inc_obj)))
        return cut

    heap: List[Tuple[float, int, tuple]] = []
    stack: List[Tuple[float, int, tuple]] = []
    alive: Dict[int, bool] = {}
    seq = 0
    current: Optional[tuple] = ()
    current_bound = -math.inf
    nodes = 0
    limit_hit = False
    pruned_bound = math.inf  # smallest lower bound among nodes discarded by bound

    def push(bound: float, fix: tuple) -> None:
        nonlocal seq
        seq += 1
        entry = (bound, seq, fix)
        heapq.heappush(heap, entry)
        stack.append(entry)
        alive[seq] = True

    def pop_next():
        if incumbent is None:
            while stack:
                entry = stack.pop()
                if alive.pop(entry[1], False):
                    return entry
        while heap:
            entry = heapq.heappop(heap)
            if alive.pop(entry[1], False):
                return entry
        return None

    while True:
        if current is None:
            entry = pop_next()
            if entry is None:
                break
            current_bound, _, current = entry
            if current_bound >= threshold():
                pruned_bound = min(pruned_bound, current_bound)
                current = None
                continue
        if time.perf_counter() - start > time_limit or (node_limit is not None and nodes >= node_limit):
            limit_hit = True
            push(current_bound, current)
            break

        lb, ub = root_lb.copy(), root_ub.copy()
        for j, val in current:
            lb[j] = ub[j] = val
        res = engine.solve(lb, ub, threshold())
        nodes += 1
        if res.status == INFEASIBLE:
            current = None
            continue
        if res.status == UNBOUNDED:
            if not current:
                return MilpSolution(UNBOUNDED, {}, -math.inf, math.inf,
                                    {"nodes": nodes, "wall_time": time.perf_counter() - start})
            current = None
            continue
        if res.x is None or res.objective >= threshold():
            pruned_bound = min(pruned_bound, res.objective)
            current = None
            continue

        xb = res.x[bin_idx]
        frac = np.abs(xb - np.round(xb))
        if bin_idx.size == 0 or frac.max() <= int_tol:
            incumbent = res.x.copy()
            incumbent[bin_idx] = np.round(xb)
            inc_obj = res.objective
            current = None
            continue

        score = np.minimum(xb - np.floor(xb), np.ceil(xb) - xb)
        if priority:
            urgent = bin_class[frac > int_tol].min()
            score = np.where((bin_class == urgent) & (frac > int_tol), score, -1.0)
        pos = int(np.argmax(score))
        j = int(bin_idx[pos])
        up_first = xb[pos] >= 0.5
        down = current + ((j, 0.0),)
        up = current + ((j, 1.0),)
        push(res.objective, down if up_first else up)
        current = up if up_first else down
        current_bound = res.objective

    open_bounds = [e[0] for e in heap if alive.get(e[1], False)]
    elapsed = time.perf_counter() - start
    stats = {"nodes": nodes, "wall_time": elapsed, "lp_engine": engine.name}
    if incumbent is None:
        status = LIMIT_NO_SOLUTION if limit_hit else "infeasible"
        return MilpSolution(status, {}, math.nan, math.inf, stats)
    best_bound = min(open_bounds + [inc_obj, pruned_bound])
    rel_gap = (inc_obj - best_bound) / max(abs(inc_obj), 1e-10)
    assignment = {name: float(v) for name, v in zip(arrays.names, incumbent)}
    status = OPTIMAL if not limit_hit or rel_gap <= gap else FEASIBLE_LIMIT
    return MilpSolution(status, assignment, float(inc_obj), max(rel_gap, 0.0), stats)
