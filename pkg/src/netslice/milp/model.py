"""Solver-agnostic mixed binary linear program representation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np
from scipy import sparse

BINARY = "binary"
CONTINUOUS = "continuous"

LE, EQ, GE = "<=", "=", ">="
_SENSES = (LE, EQ, GE)


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class MilpVar:
    name: str
    kind: str = CONTINUOUS
    lower: float = 0.0
    upper: float = math.inf

    def __post_init__(self):
        if self.kind not in (BINARY, CONTINUOUS):
            raise ModelError(f"unknown variable kind {self.kind!r}")
        if self.lower > self.upper:
            raise ModelError(f"variable {self.name}: lower bound exceeds upper bound")


@dataclass
class LinearConstraint:
    terms: Dict[str, float]
    sense: str
    rhs: float
    tag: str

    def activity(self, values: Mapping[str, float]) -> float:
        return sum(c * values[v] for v, c in self.terms.items())

    def violation(self, values: Mapping[str, float]) -> float:
        lhs = self.activity(values)
        if self.sense == LE:
            return max(0.0, lhs - self.rhs)
        if self.sense == GE:
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass
class MilpModel:
    """Minimisation model: variables, tagged linear constraints, objective.

    Variables are kept in declaration order, which is also the column order
    used by every solver and the LP writer.
    """

    name: str = "model"
    vars: Dict[str, MilpVar] = field(default_factory=dict)
    constraints: List[LinearConstraint] = field(default_factory=list)
    objective: Dict[str, float] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def add_var(self, name: str, kind: str = CONTINUOUS, lower: float = 0.0,
                upper: float = math.inf) -> str:
        if name in self.vars:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind == BINARY:
            lower, upper = 0.0, 1.0
        self.vars[name] = MilpVar(name, kind, float(lower), float(upper))
        return name

    def add_constraint(self, terms: Iterable[Tuple[str, float]], sense: str, rhs: float,
                       tag: str) -> Optional[LinearConstraint]:
        """Add ``sum(terms) sense rhs``.

        Zero coefficients are dropped and repeated variables merged.  A
        constraint left without terms is skipped when trivially satisfied;
        an unsatisfiable one is kept, which makes the model infeasible.
        """
        if sense not in _SENSES:
            raise ModelError(f"unknown sense {sense!r}")
        merged: Dict[str, float] = {}
        for v, c in terms:
            if v not in self.vars:
                raise ModelError(f"constraint {tag} references undeclared variable {v!r}")
            merged[v] = merged.get(v, 0.0) + float(c)
        merged = {v: c for v, c in merged.items() if c != 0.0}
        rhs = float(rhs)
        if not merged:
            ok = (sense == LE and 0.0 <= rhs) or (sense == GE and 0.0 >= rhs) or (sense == EQ and rhs == 0.0)
            if ok:
                return None
        con = LinearConstraint(merged, sense, rhs, tag)
        self.constraints.append(con)
        return con

    def set_objective(self, terms: Iterable[Tuple[str, float]]) -> None:
        obj: Dict[str, float] = {}
        for v, c in terms:
            if v not in self.vars:
                raise ModelError(f"objective references undeclared variable {v!r}")
            obj[v] = obj.get(v, 0.0) + float(c)
        self.objective = {v: c for v, c in obj.items() if c != 0.0}

    @property
    def n_vars(self) -> int:
        return len(self.vars)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def binaries(self) -> List[str]:
        return [v.name for v in self.vars.values() if v.kind == BINARY]

    def objective_value(self, values: Mapping[str, float]) -> float:
        return sum(c * values[v] for v, c in self.objective.items())

    def without_tags(self, prefix: str) -> "MilpModel":
        """Copy of the model with every constraint whose tag starts with
        ``prefix`` removed."""
        return MilpModel(
            name=self.name,
            vars=dict(self.vars),
            constraints=[c for c in self.constraints if not c.tag.startswith(prefix)],
            objective=dict(self.objective),
            metadata=dict(self.metadata),
        )

    def with_bounds(self, bounds: Mapping[str, Tuple[float, float]]) -> "MilpModel":
        """Copy of the model with some variable bounds replaced."""
        new_vars = dict(self.vars)
        for name, (lo, hi) in bounds.items():
            v = new_vars[name]
            new_vars[name] = MilpVar(name, v.kind, float(lo), float(hi))
        return MilpModel(self.name, new_vars, list(self.constraints), dict(self.objective), dict(self.metadata))

    def arrays(self) -> "ModelArrays":
        return ModelArrays.from_model(self)


@dataclass
class ModelArrays:
    """Column-indexed numeric view: ``row_lo <= A x <= row_hi``."""

    names: List[str]
    c: np.ndarray
    A: sparse.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    is_binary: np.ndarray
    tags: List[str]

    @classmethod
    def from_model(cls, model: MilpModel) -> "ModelArrays":
        names = list(model.vars)
        index = {n: i for i, n in enumerate(names)}
        c = np.zeros(len(names))
        for v, coef in model.objective.items():
            c[index[v]] = coef
        rows, cols, vals = [], [], []
        row_lo = np.empty(len(model.constraints))
        row_hi = np.empty(len(model.constraints))
        for r, con in enumerate(model.constraints):
            for v, coef in con.terms.items():
                rows.append(r)
                cols.append(index[v])
                vals.append(coef)
            row_lo[r] = con.rhs if con.sense in (GE, EQ) else -math.inf
            row_hi[r] = con.rhs if con.sense in (LE, EQ) else math.inf
        A = sparse.csr_matrix((vals, (rows, cols)), shape=(len(model.constraints), len(names)))
        lb = np.array([model.vars[n].lower for n in names])
        ub = np.array([model.vars[n].upper for n in names])
        is_binary = np.array([model.vars[n].kind == BINARY for n in names], dtype=bool)
        return cls(names, c, A, row_lo, row_hi, lb, ub, is_binary, [con.tag for con in model.constraints])
