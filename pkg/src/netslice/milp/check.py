"""Independent re-evaluation of a MILP assignment."""

from __future__ import annotations

import math
from typing import List, Mapping

from .model import BINARY, EQ, GE, LE, MilpModel


class IncompleteAssignmentError(KeyError):
    """The assignment does not give a value to every model variable."""


def check_assignment(model: MilpModel, assignment: Mapping[str, float], tol: float = 1e-6) -> List[str]:
    """Tags of all constraints violated by ``assignment`` (beyond ``tol``).

    Variable bounds and integrality of binaries are checked as well and
    reported as ``bound[<var>]`` / ``integrality[<var>]``.
    """
    missing = [v for v in model.vars if v not in assignment]
    if missing:
        raise IncompleteAssignmentError(f"assignment misses {len(missing)} variable(s), e.g. {missing[0]!r}")
    bad: List[str] = []
    for name, var in model.vars.items():
        val = float(assignment[name])
        if not math.isfinite(val) or val < var.lower - tol or val > var.upper + tol:
            bad.append(f"bound[{name}]")
        if var.kind == BINARY and abs(val - round(val)) > tol:
            bad.append(f"integrality[{name}]")
    for con in model.constraints:
        lhs = math.fsum(c * float(assignment[v]) for v, c in con.terms.items())
        scale = tol * max(1.0, abs(con.rhs))
        if con.sense == LE and lhs > con.rhs + scale:
            bad.append(con.tag)
        elif con.sense == GE and lhs < con.rhs - scale:
            bad.append(con.tag)
        elif con.sense == EQ and abs(lhs - con.rhs) > scale:
            bad.append(con.tag)
    return bad
