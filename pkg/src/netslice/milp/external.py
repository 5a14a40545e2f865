"""Adapter that hands a model to an external MILP solver binary (CBC).

The model is written as an LP file, the solver runs as a subprocess and its
solution file is parsed back.  The in-tree solver stays the reference; this
path exists for cross-checking and for instances beyond desk scale.
"""

from __future__ import annotations

import importlib.util
import math
import os
import shutil
import subprocess
import tempfile
import time
from pathlib import Path
from typing import Optional

from .bnb import DEFAULT_GAP, DEFAULT_TIME_LIMIT, MilpSolution
from .lpformat import export_lp, read_solution_file
from .model import MilpModel


class ExternalSolverError(RuntimeError):
    pass


def find_cbc() -> Optional[str]:
    """Path of a CBC executable: ``$NETSLICE_CBC``, ``cbc`` on PATH, or the
    copy bundled with the ``pulp`` package."""
    env = os.environ.get("NETSLICE_CBC")
    if env:
        return env
    on_path = shutil.which("cbc")
    if on_path:
        return on_path
    spec = importlib.util.find_spec("pulp")
    if spec and spec.origin:
        cand = Path(spec.origin).parent / "solverdir" / "cbc" / "linux" / "i64" / "cbc"
        if cand.exists():
            return str(cand)
    return None


def solve_external(model: MilpModel, time_limit: float = DEFAULT_TIME_LIMIT, gap: float = DEFAULT_GAP,
                   solver_path: Optional[str] = None) -> MilpSolution:
    exe = solver_path or find_cbc()
    if exe is None:
        raise ExternalSolverError("no CBC executable found")
    start = time.perf_counter()
    with tempfile.TemporaryDirectory(prefix="netslice-") as tmp:
        lp_path = Path(tmp) / "model.lp"
        sol_path = Path(tmp) / "model.sol"
        lp_path.write_text(export_lp(model), encoding="ascii")
        cmd = [exe, str(lp_path), "-sec", str(int(math.ceil(time_limit))), "-ratioGap", repr(gap),
               "-threads", "1", "-solve", "-solu", str(sol_path)]
        proc = subprocess.run(cmd, capture_output=True, text=True, timeout=time_limit + 60)
        if not sol_path.exists():
            raise ExternalSolverError(f"solver produced no solution file (exit {proc.returncode}):\n{proc.stdout[-2000:]}")
        status, values = read_solution_file(sol_path.read_text())
    stats = {"nodes": float("nan"), "wall_time": time.perf_counter() - start, "lp_engine": "cbc"}
    if status not in ("optimal", "feasible-time-limit"):
        return MilpSolution(status, {}, math.nan, math.inf, stats)
    assignment = {v: float(values.get(v, 0.0)) for v in model.vars}
    obj = model.objective_value(assignment)
    return MilpSolution(status, assignment, obj, 0.0 if status == "optimal" else math.nan, stats)
