import math

import numpy as np
import pytest
from hypothesis import HealthCheck, example, given, settings, strategies as st
from scipy.optimize import linprog

from netslice.milp import (
    BINARY, CONTINUOUS, EQ, GE, LE, DenseSimplex, IncompleteAssignmentError, MilpModel,
    ModelError, check_assignment, solve_exact,
)
from netslice.milp.bnb import FEASIBLE_LIMIT, LIMIT_NO_SOLUTION
from netslice.milp.simplex import INFEASIBLE, OPTIMAL, UNBOUNDED

from oracles import enumerate_binary, micro_model, micro_models, reference_value


# ------------------------------------------------------------------ model

def test_model_rejects_bad_input():
    m = MilpModel()
    m.add_var("x")
    with pytest.raises(ModelError):
        m.add_var("x")
    with pytest.raises(ModelError):
        m.add_constraint([("y", 1)], LE, 1, "t")
    with pytest.raises(ModelError):
        m.add_constraint([("x", 1)], "<", 1, "t")
    with pytest.raises(ModelError):
        m.set_objective([("y", 1)])
    with pytest.raises(ModelError):
        m.add_var("z", "integer")


def test_constraint_merging_and_trivial_rows():
    m = MilpModel()
    m.add_var("x")
    con = m.add_constraint([("x", 1), ("x", 2)], LE, 3, "t")
    assert con.terms == {"x": 3.0}
    assert m.add_constraint([("x", 1), ("x", -1)], LE, 0, "trivial") is None
    kept = m.add_constraint([("x", 0)], GE, 1, "impossible")
    assert kept is not None and m.n_constraints == 2
    assert solve_exact(m).status == "infeasible"


def test_without_tags_and_with_bounds():
    m = MilpModel()
    m.add_var("x", CONTINUOUS, 0, 10)
    m.add_constraint([("x", 1)], GE, 2, "keep:a")
    m.add_constraint([("x", 1)], GE, 5, "drop:b")
    m.set_objective([("x", 1)])
    assert solve_exact(m).objective_value == pytest.approx(5)
    assert solve_exact(m.without_tags("drop")).objective_value == pytest.approx(2)
    assert solve_exact(m.with_bounds({"x": (3, 10)}).without_tags("drop")).objective_value == pytest.approx(3)
    assert m.n_constraints == 2


# ---------------------------------------------------------------- checker

def test_check_assignment_reports_everything():
    m = MilpModel()
    m.add_var("b", BINARY)
    m.add_var("x", CONTINUOUS, 0, 1)
    m.add_constraint([("b", 1), ("x", 1)], LE, 1, "cap")
    m.add_constraint([("x", 1)], EQ, 0.5, "fix")
    assert check_assignment(m, {"b": 0, "x": 0.5}) == []
    bad = check_assignment(m, {"b": 0.5, "x": 2})
    assert set(bad) == {"integrality[b]", "bound[x]", "cap", "fix"}
    with pytest.raises(IncompleteAssignmentError):
        check_assignment(m, {"b": 0})


# ---------------------------------------------------------------- simplex

@st.composite
def lp_data(draw):
    n = draw(st.integers(1, 6))
    m = draw(st.integers(0, 6))
    ints = st.integers(-5, 5)
    A = np.array(draw(st.lists(st.lists(ints, min_size=n, max_size=n), min_size=m, max_size=m)),
                 dtype=float).reshape(m, n)
    c = np.array(draw(st.lists(ints, min_size=n, max_size=n)), dtype=float)
    lo = np.array(draw(st.lists(st.sampled_from([-math.inf, -5, -1, 0, 2]), min_size=m, max_size=m)), dtype=float)
    width = np.array(draw(st.lists(st.sampled_from([0, 1, 3, math.inf]), min_size=m, max_size=m)), dtype=float)
    free_hi = np.array(draw(st.lists(st.integers(-3, 8), min_size=m, max_size=m)), dtype=float)
    with np.errstate(invalid="ignore"):
        hi = np.where(np.isinf(lo), free_hi, lo + width)
    lb = np.array(draw(st.lists(st.sampled_from([-math.inf, -2, 0]), min_size=n, max_size=n)), dtype=float)
    ub = np.array(draw(st.lists(st.sampled_from([0, 1, 4, math.inf]), min_size=n, max_size=n)), dtype=float)
    ub = np.maximum(ub, np.where(np.isinf(lb), ub, lb))
    return c, A, lo, hi, lb, ub


@settings(max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(lp_data())
@example((np.array([0., 0, 0, 0, 1, 0]), np.array([[0., 0, 0, 1, 1, 1]]), np.array([-5.]), np.array([-4.]),
          np.full(6, -math.inf), np.array([0., 0, 0, 0, 0, math.inf])))   # unbounded
def test_dense_simplex_matches_scipy(data):
    c, A, lo, hi, lb, ub = data
    res = DenseSimplex().solve(c, A, lo, hi, lb, ub)
    fin_hi, fin_lo = ~np.isinf(hi), ~np.isinf(lo)
    A_ub = np.vstack([A[fin_hi], -A[fin_lo]]) if A.size else None
    b_ub = np.concatenate([hi[fin_hi], -lo[fin_lo]]) if A.size else None
    kw = dict(A_ub=A_ub if A_ub is not None and len(b_ub) else None,
              b_ub=b_ub if b_ub is not None and len(b_ub) else None,
              bounds=list(zip([None if math.isinf(v) else v for v in lb],
                              [None if math.isinf(v) else v for v in ub])), method="highs")
    ref = linprog(c, **kw)
    if ref.status == 2 and linprog(np.zeros_like(c), **kw).status == 0:
        # HiGHS may answer "infeasible" for an unbounded LP without a
        # feasibility phase; a feasible LP with no optimum is unbounded
        ref.status = 3
    if ref.status == 2:
        assert res.status == INFEASIBLE
    elif ref.status == 3:
        assert res.status == UNBOUNDED
    else:
        assert ref.status == 0
        assert res.status == OPTIMAL
        assert res.objective == pytest.approx(ref.fun, abs=1e-7, rel=1e-9)
        x = res.x
        assert np.all(x >= lb - 1e-7) and np.all(x <= ub + 1e-7)
        if A.size:
            assert np.all(A @ x >= lo - 1e-7) and np.all(A @ x <= hi + 1e-7)


def test_simplex_handles_degenerate_cycling_example():
    # Beale's classic cycling example (max form turned into min)
    c = np.array([-0.75, 150, -0.02, 6])
    A = np.array([[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]])
    res = DenseSimplex().solve(c, A, np.full(3, -math.inf), np.array([0, 0, 1.0]), np.zeros(4),
                               np.full(4, math.inf))
    assert res.status == OPTIMAL
    assert res.objective == pytest.approx(-0.05)


# ------------------------------------------------------- branch and bound

@pytest.mark.parametrize("engine", ["simplex", "highs"])
def test_bnb_matches_enumeration(engine):
    models = micro_models()
    assert len(models) >= 50
    for m in models:
        assert len(m.binaries()) <= 18
        ref = reference_value(m)
        res = solve_exact(m, gap=0.0, lp_engine=engine, time_limit=60)
        if ref is None:
            assert res.status == "infeasible", m.name
        else:
            assert res.status == "optimal", m.name
            assert res.objective_value == pytest.approx(ref, abs=1e-6), m.name
            assert check_assignment(m, res.assignment) == []


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(3, 12))
def test_bnb_property_random_binary(seed, n):
    m = micro_model(np.random.default_rng(seed), n, 0, 5)
    ref = enumerate_binary(m)
    res = solve_exact(m, gap=0.0)
    if ref is None:
        assert res.status == "infeasible"
    else:
        assert res.objective_value == pytest.approx(ref, abs=1e-6)


def _knapsack(n=14, seed=3):
    rng = np.random.default_rng(seed)
    m = MilpModel("knap")
    w = rng.integers(5, 30, n)
    v = rng.integers(5, 30, n)
    for j in range(n):
        m.add_var(f"b{j}", BINARY)
    m.add_constraint([(f"b{j}", int(w[j])) for j in range(n)], LE, int(w.sum() // 2), "cap")
    m.set_objective([(f"b{j}", -int(v[j])) for j in range(n)])
    return m


def test_node_limit_reports_limit_status():
    m = _knapsack()
    res = solve_exact(m, gap=0.0, node_limit=2)
    assert res.status in (FEASIBLE_LIMIT, LIMIT_NO_SOLUTION)
    full = solve_exact(m, gap=0.0)
    assert full.status == "optimal"
    assert full.objective_value == pytest.approx(enumerate_binary(m))


def test_incumbent_is_used_and_bad_incumbent_ignored():
    m = _knapsack()
    opt = solve_exact(m, gap=0.0)
    warm = solve_exact(m, gap=0.0, incumbent=opt.assignment)
    assert warm.objective_value == pytest.approx(opt.objective_value)
    assert warm.stats["nodes"] <= opt.stats["nodes"]
    bogus = {v: 1.0 for v in m.vars}
    assert solve_exact(m, gap=0.0, incumbent=bogus).objective_value == pytest.approx(opt.objective_value)


def test_objective_grid_and_priority_keep_optimum():
    m = _knapsack()
    ref = enumerate_binary(m)
    assert solve_exact(m, gap=0.0, objective_step=1.0).objective_value == pytest.approx(ref)
    prio = {f"b{j}": j % 2 for j in range(14)}
    assert solve_exact(m, gap=0.0, priority=prio).objective_value == pytest.approx(ref)


def test_unbounded_and_empty_models():
    m = MilpModel()
    m.add_var("x", CONTINUOUS, -math.inf, math.inf)
    m.set_objective([("x", 1)])
    assert solve_exact(m).status == "unbounded"
    assert solve_exact(MilpModel()).status == "optimal"


def test_gap_tolerance_is_respected():
    m = _knapsack(18, seed=9)
    ref = enumerate_binary(m)
    res = solve_exact(m, gap=0.05)
    assert res.status == "optimal"
    assert res.objective_value <= ref + 0.05 * abs(ref) + 1e-9
