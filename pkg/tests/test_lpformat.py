import math

import numpy as np
import pytest

from netslice import build_ns1, build_ns2, build_virtual_network, fig1_fixture
from netslice.milp import BINARY, CONTINUOUS, GE, LE, LpExportError, MilpModel, export_lp, read_solution_file, solve_exact
from netslice.milp.external import find_cbc, solve_external

from oracles import micro_model

needs_cbc = pytest.mark.skipif(find_cbc() is None, reason="no CBC executable available")


def _tiny():
    m = MilpModel("tiny")
    m.add_var("b", BINARY)
    m.add_var("x", CONTINUOUS, -math.inf, math.inf)
    m.add_var("y", CONTINUOUS, 0, 2.5)
    m.add_constraint([("b", 1), ("x", -1)], LE, 1, "first")
    m.add_constraint([("x", 1), ("y", 0.5)], GE, -2, "second")
    m.set_objective([("x", 1), ("b", -3)])
    return m


def test_export_layout():
    text = export_lp(_tiny())
    lines = text.splitlines()
    assert lines[:3] == ["\\ model tiny", "Minimize", " obj: x - 3 b"]
    assert "\\ first" in lines and " c0: b - x <= 1" in lines
    assert " c1: x + 0.5 y >= -2" in lines
    assert " x free" in lines and " 0 <= y <= 2.5" in lines
    assert lines[-3:] == ["Binaries", " b", "End"]
    assert export_lp(_tiny()) == text


def test_export_rejects_illegal_names():
    m = MilpModel()
    m.add_var("a b")
    with pytest.raises(LpExportError):
        export_lp(m)
    with pytest.raises(LpExportError):
        export_lp(MilpModel())


def test_long_rows_are_wrapped(example_s1, example_vnet):
    m, _ = build_ns1(example_s1, example_vnet)
    assert max(len(line) for line in export_lp(m).splitlines()) <= 260


def test_read_solution_formats():
    status, values = read_solution_file("Optimal - objective value 3.5\n  0 x 1.5 0\n  1 b 1 -3\n")
    assert status == "optimal" and values == {"x": 1.5, "b": 1.0}
    assert read_solution_file("Infeasible - objective value 0\n")[0] == "infeasible"
    assert read_solution_file("x 2\n")[1] == {"x": 2.0}
    assert read_solution_file("Stopped on time - objective value 4\n")[0] == "feasible-time-limit"
    with pytest.raises(ValueError):
        read_solution_file("x y z w v\n")


@needs_cbc
def test_cbc_agrees_on_micro_models():
    rng = np.random.default_rng(77)
    for i in range(12):
        m = micro_model(rng, int(rng.integers(3, 12)), int(rng.integers(0, 3)), 5, name=f"m{i}")
        ours = solve_exact(m, gap=0.0)
        theirs = solve_external(m, time_limit=30, gap=0.0)
        assert (ours.status == "infeasible") == (theirs.status == "infeasible"), m.name
        if ours.status == "optimal":
            assert theirs.objective_value == pytest.approx(ours.objective_value, abs=1e-6)


@needs_cbc
@pytest.mark.parametrize("scenario, expected", [(1, 1.005), (2, 2.007)])
def test_cbc_agrees_on_example(scenario, expected):
    inst = fig1_fixture(scenario)
    vnet = build_virtual_network(inst)
    for build in (build_ns1, build_ns2):
        m, _ = build(inst, vnet)
        res = solve_external(m, time_limit=30, gap=0.0)
        assert res.status == "optimal"
        assert res.objective_value == pytest.approx(expected, abs=1e-6)
