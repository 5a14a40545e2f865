"""Independent reference computations used by the tests.

Nothing here goes through the package's own solver: binary models are
enumerated exhaustively (vectorised with numpy) and the continuous part of
mixed models is handed to scipy's LP solver.
"""

import itertools
import math

import numpy as np
from scipy.optimize import linprog

from netslice.milp import BINARY, CONTINUOUS, EQ, GE, LE, MilpModel

SENSES = (LE, GE, EQ)


def micro_model(rng: np.random.Generator, n_bin: int, n_cont: int = 0, n_rows: int = 4,
                name: str = "micro") -> MilpModel:
    """Random small model with integer data; some draws are infeasible."""
    m = MilpModel(name=name)
    for j in range(n_bin):
        m.add_var(f"b{j}", BINARY)
    for j in range(n_cont):
        m.add_var(f"x{j}", CONTINUOUS, 0.0, float(rng.integers(1, 6)))
    names = list(m.vars)
    for r in range(n_rows):
        coefs = rng.integers(-4, 6, size=len(names))
        mask = rng.random(len(names)) < 0.7
        terms = [(v, int(c)) for v, c, keep in zip(names, coefs, mask) if keep and c]
        if not terms:
            continue
        sense = SENSES[int(rng.choice(3, p=[0.6, 0.3, 0.1]))]
        scale = sum(abs(c) for _, c in terms)
        rhs = int(rng.integers(-scale // 4, scale // 2 + 2))
        m.add_constraint(terms, sense, rhs, f"r{r}")
    m.set_objective([(v, int(c)) for v, c in zip(names, rng.integers(-5, 6, size=len(names)))])
    return m


def _rows(model: MilpModel, cols):
    index = {v: i for i, v in enumerate(cols)}
    A = np.zeros((len(model.constraints), len(cols)))
    for r, con in enumerate(model.constraints):
        for v, c in con.terms.items():
            if v in index:
                A[r, index[v]] = c
    rhs = np.array([con.rhs for con in model.constraints])
    senses = [con.sense for con in model.constraints]
    return A, rhs, senses


def enumerate_binary(model: MilpModel, tol: float = 1e-9):
    """Optimal value of a pure binary model by full enumeration (None if
    infeasible)."""
    cols = list(model.vars)
    assert all(model.vars[v].kind == BINARY for v in cols)
    n = len(cols)
    X = ((np.arange(2 ** n)[:, None] >> np.arange(n)[None, :]) & 1).astype(float)
    A, rhs, senses = _rows(model, cols)
    act = X @ A.T if A.size else np.zeros((X.shape[0], 0))
    ok = np.ones(X.shape[0], dtype=bool)
    for r, sense in enumerate(senses):
        if sense == LE:
            ok &= act[:, r] <= rhs[r] + tol
        elif sense == GE:
            ok &= act[:, r] >= rhs[r] - tol
        else:
            ok &= np.abs(act[:, r] - rhs[r]) <= tol
    if not ok.any():
        return None
    c = np.array([model.objective.get(v, 0.0) for v in cols])
    return float((X[ok] @ c).min())


def enumerate_mixed(model: MilpModel):
    """Optimal value of a mixed model: every binary pattern, continuous part
    by ``scipy.optimize.linprog`` (None if infeasible)."""
    bins = [v for v, var in model.vars.items() if var.kind == BINARY]
    conts = [v for v, var in model.vars.items() if var.kind == CONTINUOUS]
    A_b, rhs, senses = _rows(model, bins)
    A_c, _, _ = _rows(model, conts)
    c_b = np.array([model.objective.get(v, 0.0) for v in bins])
    c_c = np.array([model.objective.get(v, 0.0) for v in conts])
    bounds = [(model.vars[v].lower, model.vars[v].upper) for v in conts]
    le = [i for i, s in enumerate(senses) if s == LE]
    ge = [i for i, s in enumerate(senses) if s == GE]
    eq = [i for i, s in enumerate(senses) if s == EQ]
    best = math.inf
    for pattern in itertools.product((0.0, 1.0), repeat=len(bins)):
        xb = np.array(pattern)
        resid = rhs - (A_b @ xb if bins else 0.0)
        A_ub = np.vstack([A_c[le], -A_c[ge]])
        b_ub = np.concatenate([resid[le], -resid[ge]])
        res = linprog(c_c, A_ub=A_ub if len(b_ub) else None, b_ub=b_ub if len(b_ub) else None,
                      A_eq=A_c[eq] if eq else None, b_eq=resid[eq] if eq else None,
                      bounds=bounds, method="highs")
        if res.status == 0:
            best = min(best, float(c_b @ xb + res.fun))
    return None if best == math.inf else best


def micro_models(seed: int = 2024, count: int = 60):
    """Deterministic suite: pure binary models with 4..18 binaries and mixed
    models with up to 8 binaries."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        if i % 3 == 2:
            out.append(micro_model(rng, int(rng.integers(2, 9)), int(rng.integers(1, 4)),
                                   int(rng.integers(2, 6)), name=f"mixed{i}"))
        else:
            out.append(micro_model(rng, int(rng.integers(4, 19)), 0, int(rng.integers(3, 11)),
                                   name=f"binary{i}"))
    return out


def reference_value(model: MilpModel):
    if all(v.kind == BINARY for v in model.vars.values()):
        return enumerate_binary(model)
    return enumerate_mixed(model)
