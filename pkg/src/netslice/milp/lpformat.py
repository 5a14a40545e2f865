"""CPLEX-LP text export and solver solution-file parsing."""

from __future__ import annotations

import math
import re
from typing import Dict, List, Tuple

from .model import BINARY, EQ, GE, LE, MilpModel

_LEGAL_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")
_LINE_WIDTH = 200


class LpExportError(ValueError):
    pass


def fmt(value: float) -> str:
    """Numbers are written with 12 significant digits."""
    if value == math.inf:
        return "inf"
    if value == -math.inf:
        return "-inf"
    text = f"{value:.12g}"
    return "0" if text == "-0" else text


def _expression(terms) -> List[str]:
    parts: List[str] = []
    for i, (v, c) in enumerate(terms):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        coef = "" if mag == 1 else fmt(mag) + " "
        if i == 0:
            parts.append(("- " if c < 0 else "") + coef + v)
        else:
            parts.append(f"{sign} {coef}{v}")
    return parts


def _wrap(head: str, parts: List[str]) -> List[str]:
    lines, cur = [], head
    for p in parts:
        if len(cur) + len(p) + 1 > _LINE_WIDTH and cur.strip():
            lines.append(cur)
            cur = "   "
        cur = f"{cur} {p}"
    lines.append(cur)
    return lines


def export_lp(model: MilpModel) -> str:
    """Render ``model`` in CPLEX LP format.

    Rows are named ``c<index>`` in declaration order; each is preceded by a
    comment carrying its tag, so the text is unique per model.
    """
    if not model.vars:
        raise LpExportError("no objective variables")
    for name in model.vars:
        if not _LEGAL_NAME.match(name):
            raise LpExportError(f"variable name {name!r} is not legal in LP format")

    out: List[str] = [f"\\ model {model.name}", "Minimize"]
    obj = list(model.objective.items())
    if not obj:
        obj = [(next(iter(model.vars)), 0.0)]
        out.extend(_wrap(" obj:", [f"0 {obj[0][0]}"]))
    else:
        out.extend(_wrap(" obj:", _expression(obj)))

    out.append("Subject To")
    for idx, con in enumerate(model.constraints):
        out.append(f"\\ {con.tag}")
        op = {LE: "<=", GE: ">=", EQ: "="}[con.sense]
        terms = _expression(con.terms.items()) or [f"0 {next(iter(model.vars))}"]
        parts = terms + [op, fmt(con.rhs)]
        out.extend(_wrap(f" c{idx}:", parts))

    out.append("Bounds")
    for v in model.vars.values():
        if v.kind == BINARY:
            continue
        lo, hi = v.lower, v.upper
        if lo == -math.inf and hi == math.inf:
            out.append(f" {v.name} free")
        elif hi == math.inf:
            out.append(f" {v.name} >= {fmt(lo)}")
        else:
            out.append(f" {fmt(lo)} <= {v.name} <= {fmt(hi)}")

    bins = model.binaries()
    if bins:
        out.append("Binaries")
        for i in range(0, len(bins), 8):
            out.append(" " + " ".join(bins[i:i + 8]))
    out.append("End")
    return "\n".join(out) + "\n"


_CBC_STATUS = {
    "optimal": "optimal",
    "infeasible": "infeasible",
    "integer infeasible": "infeasible",
    "unbounded": "unbounded",
    "stopped on time": "feasible-time-limit",
    "stopped on iterations": "feasible-time-limit",
    "stopped on nodes": "feasible-time-limit",
}


def read_solution_file(text: str) -> Tuple[str, Dict[str, float]]:
    """Parse a solver solution file into ``(status, values)``.

    Accepts plain ``name value`` lines and CBC's ``solu`` output (a status
    header followed by ``index name value reduced-cost`` rows).  The status is
    ``"unknown"`` for plain files.  Variables not listed are absent.
    """
    status = "unknown"
    values: Dict[str, float] = {}
    lines = text.splitlines()
    if lines and " - objective value" in lines[0]:
        head = lines[0].split(" - objective value")[0].strip().lower()
        status = "unknown"
        for key, mapped in _CBC_STATUS.items():
            if head.startswith(key):
                status = mapped
                break
        if status == "feasible-time-limit" and "no feasible" in lines[0].lower():
            status = "time-limit"
        lines = lines[1:]
    elif lines and lines[0].strip().lower().startswith(("infeasible", "integer infeasible")):
        return "infeasible", {}
    for line in lines:
        tok = line.replace("**", " ").split()
        if not tok or tok[0].startswith("#"):
            continue
        if len(tok) >= 3 and tok[0].isdigit():
            values[tok[1]] = float(tok[2])
        elif len(tok) == 2:
            values[tok[0]] = float(tok[1])
        else:
            raise ValueError(f"unrecognised solution line: {line!r}")
    return status, values
