"""Solve-and-report plumbing shared by the command line and the test suite.

``solve_instance`` runs one formulation on one instance and returns a flat
report; ``compare_rows`` and ``experiment_rows`` assemble CSV rows for the
two comparison workflows.  Row order depends only on the inputs, never on
worker scheduling; columns whose name ends in ``_time`` hold wall-clock
values and are the only nondeterministic output.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .flows import DecompositionError, path_stats, reduce_paths
from .formulation import DEFAULT_PATHS, DEFAULT_SIGMA, BuildError
from .milp import MilpSolution, solve_exact
from .milp.bnb import DEFAULT_GAP, DEFAULT_TIME_LIMIT, FEASIBLE_LIMIT, LIMIT_NO_SOLUTION
from .model import SlicingInstance, SlicingSolution, Violation
from .ns1 import build_ns1
from .ns2 import build_ns2
from .semantics import MappingError, decode, encode_ns1, encode_ns2, verify_domain
from .virtual import build_virtual_network

log = logging.getLogger("netslice")

BUILDERS = {"ns1": build_ns1, "ns2": build_ns2}
LIMIT_STATUSES = (FEASIBLE_LIMIT, LIMIT_NO_SOLUTION)
EQUAL_TOL = 1e-6


@dataclass
class SolveReport:
    formulation: str
    status: str
    objective: float = math.nan
    n_vars: int = 0
    n_cons: int = 0
    wall_time: float = 0.0
    nodes: float = 0
    solution: Optional[SlicingSolution] = None
    violations: List[Violation] = field(default_factory=list)
    latency_violations: List[Violation] = field(default_factory=list)
    error: str = ""
    assignment: Dict[str, float] = field(default_factory=dict)

    @property
    def solved(self) -> bool:
        return self.solution is not None


def sigma_window(instance: SlicingInstance) -> Optional[Fraction]:
    """Upper end of the weight range in which the node count is minimised
    first: ``1 / sum of latency budgets`` (None if all budgets are zero)."""
    total = sum((k.latency_budget for k in instance.services), Fraction(0))
    return 1 / total if total > 0 else None


def warn_sigma(instance: SlicingInstance, sigma) -> bool:
    """Log a warning and return True when ``sigma`` is outside the window."""
    top = sigma_window(instance)
    if top is not None and Fraction(sigma) >= top:
        log.warning("sigma %s >= 1/sum(latency budgets) = %.6g: the node count may no longer "
                    "be minimised before the delay", sigma, float(top))
        return True
    return False


def run_solver(model, solver: str = "builtin", time_limit: float = DEFAULT_TIME_LIMIT,
               gap: float = DEFAULT_GAP, incumbent: Optional[Dict[str, float]] = None) -> MilpSolution:
    """``solver`` is ``builtin`` or ``external[:<path to cbc>]``; only the
    built-in solver uses a starting ``incumbent``."""
    if solver == "builtin":
        return solve_exact(model, time_limit=time_limit, gap=gap, incumbent=incumbent)
    if solver == "external" or solver.startswith("external:"):
        from .milp.external import solve_external

        path = solver.split(":", 1)[1] if ":" in solver else None
        return solve_external(model, time_limit=time_limit, gap=gap, solver_path=path or None)
    raise ValueError(f"unknown solver {solver!r}")


def solve_instance(instance: SlicingInstance, formulation: str = "ns2", P: int = DEFAULT_PATHS,
                   sigma=DEFAULT_SIGMA, latency: bool = True, aggregate: bool = True,
                   time_limit: float = DEFAULT_TIME_LIMIT, gap: float = DEFAULT_GAP,
                   solver: str = "builtin", warm: Optional[SlicingSolution] = None) -> SolveReport:
    """Build, solve, decode and check one model.

    Without latency constraints the decoded solution is still checked
    against the budgets; those failures land in ``latency_violations``
    and do not count as errors of the solve.

    ``warm`` is a known solution (for instance one found with fewer paths)
    handed to the solver as its first incumbent; it is ignored when it
    does not satisfy this model.
    """
    vnet = build_virtual_network(instance)
    model, idx = BUILDERS[formulation](instance, vnet, P=P, sigma=sigma, latency=latency, aggregate=aggregate)
    rep = SolveReport(formulation, "", n_vars=model.n_vars, n_cons=model.n_constraints)
    start = None
    if warm is not None:
        encode = encode_ns2 if formulation == "ns2" else encode_ns1
        try:
            start = encode(warm, idx, instance, vnet)
        except (MappingError, KeyError):
            start = None
    res = run_solver(model, solver, time_limit, gap, incumbent=start)
    rep.status = res.status
    rep.wall_time = float(res.stats.get("wall_time", 0.0))
    rep.nodes = res.stats.get("nodes", 0)
    if res.assignment:
        rep.objective = res.objective_value
        rep.assignment = res.assignment
        rep.solution = decode(res.assignment, idx, instance, vnet)
        rep.violations = verify_domain(rep.solution, instance, vnet, P, latency=latency)
        if not latency:
            full = verify_domain(rep.solution, instance, vnet, P, latency=True)
            rep.latency_violations = [v for v in full if v.code == "e2e-latency"]
    return rep


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, Fraction):
        value = float(value)
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.6f}".rstrip("0").rstrip(".") if value == value else ""
    return str(value)


def write_csv(rows: Sequence[Dict[str, Any]], columns: Sequence[str], out=None) -> str:
    """Comma-separated text with a header, LF line endings."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------- compare

COMPARE_COLUMNS = ["instance", "status_ns1", "status_ns2", "opt_ns1", "opt_ns2", "equal",
                   "vars_ns1", "cons_ns1", "vars_ns2", "cons_ns2", "ns1_time", "ns2_time"]


def compare_one(name: str, instance: SlicingInstance, P: int = DEFAULT_PATHS, sigma=DEFAULT_SIGMA,
                latency: bool = True, time_limit: float = DEFAULT_TIME_LIMIT, gap: float = DEFAULT_GAP,
                solver: str = "builtin") -> Dict[str, Any]:
    row: Dict[str, Any] = {"instance": name}
    reports = {}
    for form in ("ns1", "ns2"):
        try:
            rep = solve_instance(instance, form, P, sigma, latency, time_limit=time_limit, gap=gap, solver=solver)
        except BuildError as exc:
            rep = SolveReport(form, "invalid", error=str(exc))
        reports[form] = rep
        row[f"status_{form}"] = rep.status
        row[f"opt_{form}"] = rep.objective
        row[f"vars_{form}"] = rep.n_vars
        row[f"cons_{form}"] = rep.n_cons
        row[f"{form}_time"] = rep.wall_time
    a, b = reports["ns1"], reports["ns2"]
    if a.status == "optimal" and b.status == "optimal":
        # with a nonzero gap each value is only known to within that gap
        tol = EQUAL_TOL + gap * max(abs(a.objective), abs(b.objective))
        row["equal"] = abs(a.objective - b.objective) <= tol
    elif a.status == b.status == "infeasible":
        row["equal"] = True
    elif a.status in LIMIT_STATUSES or b.status in LIMIT_STATUSES:
        row["equal"] = "limit"
    else:
        row["equal"] = a.status == b.status
    return row


def _compare_job(args):
    return compare_one(*args[:2], **args[2])


def compare_rows(named: Sequence[Tuple[str, SlicingInstance]], workers: int = 1,
                 **opts) -> List[Dict[str, Any]]:
    """One row per instance plus a final ``mean`` row over numeric columns."""
    jobs = [(name, inst, opts) for name, inst in named]
    rows = _map(_compare_job, jobs, workers)
    if rows:
        mean: Dict[str, Any] = {"instance": "mean"}
        for col in COMPARE_COLUMNS[6:]:
            vals = [r[col] for r in rows if isinstance(r.get(col), (int, float)) and not math.isnan(r[col])]
            mean[col] = statistics.fmean(vals) if vals else math.nan
        equal = [r["equal"] for r in rows if isinstance(r["equal"], bool)]
        mean["equal"] = all(equal) if equal else None
        rows.append(mean)
    return rows


# ------------------------------------------------------------- experiment

INSTANCE_COLUMNS = ["preset", "services", "seed", "paths", "latency", "status", "feasible",
                    "objective", "activated", "mean_e2e_delay", "max_nump", "min_dr", "mean_nump",
                    "mean_dr", "latency_violations", "path_mode", "warm_from", "error", "solve_time"]
POINT_COLUMNS = ["preset", "services", "paths", "latency", "instances", "solved", "feasible",
                 "limit_hits", "errors", "mean_activated", "mean_e2e_delay", "mean_nump", "max_nump",
                 "mean_dr", "min_dr", "note", "mean_solve_time"]


@dataclass(frozen=True)
class SweepPoint:
    preset: str
    services: int
    paths: int
    latency: bool


def instance_row(preset: str, services: int, seed: int, P: int, latency: bool, sigma=DEFAULT_SIGMA,
                 time_limit: float = DEFAULT_TIME_LIMIT, gap: float = DEFAULT_GAP,
                 solver: str = "builtin", warm: Optional[SlicingSolution] = None) -> Dict[str, Any]:
    """Solve one generated instance of a sweep; failures become rows."""
    return _instance_row(preset, services, seed, P, latency, sigma, time_limit, gap, solver, warm)[0]


def _instance_row(preset, services, seed, P, latency, sigma, time_limit, gap, solver, warm):
    from .generator import preset_instance

    row: Dict[str, Any] = {"preset": preset, "services": services, "seed": seed, "paths": P,
                           "latency": "on" if latency else "off", "error": ""}
    try:
        inst = preset_instance(preset, services, seed)
        rep = solve_instance(inst, "ns2", P, sigma, latency, time_limit=time_limit, gap=gap, solver=solver,
                             warm=warm)
    except Exception as exc:          # recorded, never aborts a sweep
        row.update(status="error", feasible=False, error=f"{type(exc).__name__}: {exc}")
        return row, None
    row["status"] = rep.status
    row["solve_time"] = rep.wall_time
    if rep.solution is None:
        row["feasible"] = False
        return row, None
    sol = rep.solution
    row["objective"] = rep.objective
    row["activated"] = sol.n_activated()
    row["latency_violations"] = len(rep.latency_violations)
    row["feasible"] = not rep.violations and not rep.latency_violations
    if rep.violations:
        row["error"] = "domain check failed: " + " ".join(v.label for v in rep.violations[:5])
    row["mean_e2e_delay"] = statistics.fmean(float(sol.e2e_delay(k.id)) for k in inst.services)
    try:
        stats = path_stats(sol, inst)
    except DecompositionError as exc:
        row["error"] = f"decomposition: {exc}"
        return row, (sol if not rep.violations else None)
    row["max_nump"] = stats.max_nump
    row["min_dr"] = stats.min_dr
    row["mean_nump"] = statistics.fmean(stats.nump.values())
    row["mean_dr"] = statistics.fmean(float(d) for d in stats.dr.values())
    row["path_mode"] = "greedy" if "greedy" in stats.modes.values() else "exact"
    return row, (sol if not rep.violations else None)


def _chain_job(args):
    """All path counts of one (services, seed, latency) cell.

    With ``warm_start`` the path counts are solved in increasing order and
    each solve starts from the previous solution.  Afterwards, a path count
    that ended without any solution is solved once more when a solution of
    a larger path count can be rewritten with few enough paths per segment
    (``reduce_paths``) and passes the domain check; that rewrite is the
    starting incumbent of the repeated solve."""
    from .generator import preset_instance

    preset, services, seed, paths, latency, warm_start, opts = args
    sigma = opts.get("sigma", DEFAULT_SIGMA)
    solve_args = (sigma, opts.get("time_limit", DEFAULT_TIME_LIMIT), opts.get("gap", DEFAULT_GAP),
                  opts.get("solver", "builtin"))
    rows: Dict[int, Dict[str, Any]] = {}
    sols: Dict[int, SlicingSolution] = {}
    warm, warm_from = None, ""
    for P in sorted(paths):
        row, sol = _instance_row(preset, services, seed, P, latency, *solve_args, warm if warm_start else None)
        row["warm_from"] = warm_from if warm_start and warm is not None else ""
        rows[P] = row
        if sol is not None:
            warm, warm_from = sol, P
            sols[P] = sol
    if warm_start and sols:
        inst = preset_instance(preset, services, seed)
        vnet = build_virtual_network(inst)
        for P in sorted(paths, reverse=True):
            if P in sols or rows[P].get("status") != LIMIT_NO_SOLUTION:
                continue
            for Q in sorted(q for q in sols if q > P):
                try:
                    cand = reduce_paths(sols[Q], inst, vnet.link_delay, P)
                except DecompositionError:
                    cand = None
                if cand is None or verify_domain(cand, inst, vnet, P, latency=latency):
                    continue
                row, sol = _instance_row(preset, services, seed, P, latency, *solve_args, cand)
                row["warm_from"] = Q
                rows[P] = row
                if sol is not None:
                    sols[P] = sol
                break
    return [rows[P] for P in sorted(paths)]


def experiment_rows(preset: str, services: Sequence[int], seeds: Sequence[int], paths: Sequence[int],
                    latency_modes: Sequence[bool] = (True,), workers: int = 1, warm_start: bool = True,
                    **opts) -> Tuple[List[Dict[str, Any]], List[Dict[str, Any]]]:
    """Per-instance rows and per-point summary rows of a sweep.

    An instance counts as feasible when a solution was found that passes
    the domain check including the latency budgets (for runs without
    latency constraints the budgets are checked afterwards).  With
    ``warm_start`` the path counts of one instance are solved in increasing
    order and each solve starts from the previous solution, which stays
    feasible when more paths are allowed; see ``_chain_job`` for the
    second pass over path counts left without a solution.
    """
    from .generator import preset_note

    points = [SweepPoint(preset, n, P, lat) for n in services for P in paths for lat in latency_modes]
    jobs = [(preset, n, seed, tuple(paths), lat, warm_start, opts)
            for n in services for lat in latency_modes for seed in seeds]
    order = {(pt.services, pt.paths, "on" if pt.latency else "off"): i for i, pt in enumerate(points)}
    inst_rows = [r for rows in _map(_chain_job, jobs, workers) for r in rows]
    inst_rows.sort(key=lambda r: (order[(r["services"], r["paths"], r["latency"])], r["seed"]))
    summary = []
    note = preset_note(preset)
    for pt in points:
        rows = [r for r in inst_rows if (r["services"], r["paths"], r["latency"]) ==
                (pt.services, pt.paths, "on" if pt.latency else "off")]
        feas = [r for r in rows if r.get("feasible")]

        def mean(col, pool=feas):
            vals = [float(r[col]) for r in pool if r.get(col) not in (None, "")]
            return statistics.fmean(vals) if vals else math.nan

        summary.append({
            "preset": preset, "services": pt.services, "paths": pt.paths,
            "latency": "on" if pt.latency else "off", "instances": len(rows),
            "solved": sum(1 for r in rows if r.get("activated") is not None),
            "feasible": len(feas),
            "limit_hits": sum(1 for r in rows if r.get("status") in LIMIT_STATUSES),
            "errors": sum(1 for r in rows if r.get("status") == "error"),
            "mean_activated": mean("activated"), "mean_e2e_delay": mean("mean_e2e_delay"),
            "mean_nump": mean("mean_nump"),
            "max_nump": max((r["max_nump"] for r in feas if r.get("max_nump") is not None), default=None),
            "mean_dr": mean("mean_dr"),
            "min_dr": min((r["min_dr"] for r in feas if r.get("min_dr") is not None), default=None),
            "note": note, "mean_solve_time": mean("solve_time", rows),
        })
    return inst_rows, summary


def _map(fn, jobs: List[Any], workers: int) -> List[Any]:
    """Ordered map, in-process for one worker, else over processes."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))
