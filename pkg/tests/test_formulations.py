from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from netslice import (
    BuildError, build_ns1, build_ns2, build_virtual_network, fig1_fixture, ns1_size, ns2_size,
    preset_instance,
)
from netslice.formulation import objective_grid
from netslice.milp import check_assignment, solve_exact
from netslice.model import SlicingInstance, make_network, make_service
from netslice.semantics import decode, verify_domain

BUILD = {"ns1": build_ns1, "ns2": build_ns2}


def _solve(instance, form, P=2, latency=True):
    vnet = build_virtual_network(instance)
    model, idx = BUILD[form](instance, vnet, P=P, latency=latency)
    res = solve_exact(model, gap=0.0, time_limit=60)
    sol = decode(res.assignment, idx, instance, vnet) if res.assignment else None
    return model, res, sol, vnet


@pytest.mark.parametrize("form", ["ns1", "ns2"])
def test_example_single_service(form):
    inst = fig1_fixture(1)
    model, res, sol, vnet = _solve(inst, form)
    assert res.status == "optimal"
    assert res.objective_value == pytest.approx(1.005, abs=1e-9)
    assert sol.n_activated() == 1
    assert sol.e2e_delay("1") == 5
    assert verify_domain(sol, inst, vnet, 2) == []
    assert check_assignment(model, res.assignment) == []
    assert _solve(inst, form, P=1)[1].status == "infeasible"


@pytest.mark.parametrize("form", ["ns1", "ns2"])
def test_example_two_services(form):
    inst = fig1_fixture(2)
    _, res, sol, vnet = _solve(inst, form)
    assert res.objective_value == pytest.approx(2.007, abs=1e-9)
    assert (sol.e2e_delay("1"), sol.e2e_delay("2")) == (4, 3)
    _, res, sol, vnet = _solve(inst, form, latency=False)
    assert res.objective_value == pytest.approx(1.009, abs=1e-9)
    assert verify_domain(sol, inst, vnet, 2, latency=False) == []
    assert [v.label for v in verify_domain(sol, inst, vnet, 2)] == ["e2e-latency[k=2]"]


def test_example_sizes(example_s1, example_vnet):
    m, _ = build_ns2(example_s1, example_vnet, P=2)
    assert (m.n_vars, m.n_constraints) == (165, 265)
    assert ns2_size(example_s1, example_vnet, 2) == (165, 265)
    m1, _ = build_ns1(example_s1, example_vnet, P=2)
    assert ns1_size(example_s1, example_vnet, 2) == (m1.n_vars, m1.n_constraints)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["sec5a", "sec5b-high"]), st.integers(1, 4), st.integers(0, 10 ** 4),
       st.integers(1, 3), st.booleans(), st.booleans())
def test_size_formulas_match_built_models(preset, k, seed, P, latency, aggregate):
    inst = preset_instance(preset, k, seed)
    vnet = build_virtual_network(inst)
    for build, size in ((build_ns1, ns1_size), (build_ns2, ns2_size)):
        m, _ = build(inst, vnet, P=P, latency=latency, aggregate=aggregate)
        assert size(inst, vnet, P, latency, aggregate) == (m.n_vars, m.n_constraints)


def test_latency_and_aggregate_switches(example_s1, example_vnet):
    full, _ = build_ns2(example_s1, example_vnet)
    free, _ = build_ns2(example_s1, example_vnet, latency=False, aggregate=False)
    assert free.n_constraints < full.n_constraints
    tags = {c.tag.split("[")[0] for c in full.constraints} - {c.tag.split("[")[0] for c in free.constraints}
    assert tags and all("latency" in t or "aggregate" in t for t in tags)


def test_build_errors(example_s1, example_vnet):
    with pytest.raises(ValueError):
        build_ns2(example_s1, example_vnet, P=0)
    with pytest.raises(ValueError):
        build_ns1(example_s1, example_vnet, P=True)
    net = make_network(["A", "B", "C"], {("A", "C"): (1, 1), ("C", "B"): (1, 1)}, {"C": (2, ["f"])})
    inst = SlicingInstance(net, (make_service("1", "A", "B", ["g"], [1, 1], 5),))
    for build in (build_ns1, build_ns2):
        with pytest.raises(BuildError, match="unplaceable"):
            build(inst, build_virtual_network(inst))


def test_objective_grid():
    assert objective_grid(fig1_fixture(1), Fraction(1, 1000)) == Fraction(1, 1000)
    inst = preset_instance("sec5a", 2, 0)
    step = objective_grid(inst, Fraction(1, 1000))
    assert step == Fraction(1, 100000)
    # every delay coefficient of the objective is a multiple of the step
    vnet = build_virtual_network(inst)
    m, _ = build_ns2(inst, vnet)
    assert m.metadata["objective_step"] == float(step)
