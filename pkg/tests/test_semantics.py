import copy

import pytest
from hypothesis import given, settings, strategies as st

from netslice import build_ns1, build_ns2, build_virtual_network, fig1_fixture, preset_instance
from netslice.milp import check_assignment, solve_exact
from netslice.semantics import (
    DecodeError, MappingError, decode, encode_ns1, encode_ns2, map_ns1_to_ns2, map_ns2_to_ns1,
    order_links, verify_domain,
)


@pytest.fixture(scope="module")
def solved_example():
    inst = fig1_fixture(1)
    vnet = build_virtual_network(inst)
    model, idx = build_ns2(inst, vnet)
    res = solve_exact(model, gap=0.0)
    return inst, vnet, model, idx, res, decode(res.assignment, idx, inst, vnet)


def _codes(sol, inst, vnet, P=2):
    return {v.code for v in verify_domain(sol, inst, vnet, P)}


def test_decoded_solution_shape(solved_example):
    inst, vnet, _, _, _, sol = solved_example
    assert sol.placement_physical == {("1", 1): "E", ("1", 2): "E"}
    assert sol.activated == {"C": 0, "E": 1}
    assert sol.comm_delay["1"] == 3 and sol.nfv_delay_total["1"] == 2
    first_segment = [sol.paths[("1", 0, p)] for p in (1, 2)]
    assert {w[0] for w in first_segment} == {("A", "B"), ("A", "C")}


@pytest.mark.parametrize("tamper, code", [
    (lambda s: s.placement_virtual.pop(("1", 1)), "missing-placement"),
    (lambda s: s.activated.update(E=0), "activation"),
    (lambda s: s.path_rate.update({("1", 0, 1): 3.0}), "rate-total"),
    (lambda s: s.paths.update({("1", 0, 1): s.paths[("1", 0, 1)][1:]}), "sfc-order"),
    (lambda s: s.paths.update({("1", 0, 3): list(s.paths[("1", 0, 1)])}), "path-count"),
    (lambda s: s.hop_delay.update({("1", 0): 0}), "delay-report"),
])
def test_tampering_is_detected(solved_example, tamper, code):
    inst, vnet, _, _, _, sol = solved_example
    bad = copy.deepcopy(sol)
    tamper(bad)
    assert code in _codes(bad, inst, vnet)


def test_link_overload_and_latency_detected(solved_example):
    inst, vnet, _, _, _, sol = solved_example
    bad = copy.deepcopy(sol)
    # route all of segment 0 through the first path with doubled link rates
    for key in list(bad.link_rate):
        if key[:3] == ("1", 0, 1):
            bad.link_rate[key] = 4.0
    bad.path_rate[("1", 0, 1)] = 4.0
    bad.path_rate[("1", 0, 2)] = 0.0
    for key in list(bad.link_rate):
        if key[:3] == ("1", 0, 2):
            bad.link_rate[key] = 0.0
    assert "link-capacity" in _codes(bad, inst, vnet)
    tight = fig1_fixture(1, theta=4)
    assert "e2e-latency" in _codes(sol, tight, build_virtual_network(tight))


def test_order_links_and_decode_errors(solved_example):
    assert order_links([("B", "E"), ("A", "B")], "A", "E") == [("A", "B"), ("B", "E")]
    with pytest.raises(DecodeError):
        order_links([("A", "B"), ("C", "E")], "A", "E")
    inst, vnet, _, idx, res, _ = solved_example
    broken = dict(res.assignment)
    for name in idx.x.values():
        broken[name] = 0.0
    with pytest.raises(DecodeError):
        decode(broken, idx, inst, vnet)


def test_encodings_reproduce_the_solution(solved_example):
    inst, vnet, model, idx, res, sol = solved_example
    a2 = encode_ns2(sol, idx, inst, vnet)
    assert check_assignment(model, a2) == []
    assert model.objective_value(a2) == pytest.approx(res.objective_value)
    m1, idx1 = build_ns1(inst, vnet)
    a1 = encode_ns1(sol, idx1, inst, vnet)
    assert check_assignment(m1, a1) == []
    assert m1.objective_value(a1) == pytest.approx(res.objective_value)
    assert decode(a1, idx1, inst, vnet).paths == sol.paths


def test_mapping_rejects_infeasible_source(solved_example):
    inst, vnet, model, idx, res, _ = solved_example
    _, idx1 = build_ns1(inst, vnet)
    bad = dict(res.assignment)
    bad[idx.r[("1", 0, 1)]] += 1.0
    with pytest.raises(MappingError):
        map_ns2_to_ns1(bad, model, idx, idx1, inst, vnet)


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 10 ** 4), st.integers(1, 2))
def test_mappings_preserve_feasibility_and_objective(seed, P):
    inst = preset_instance("sec5a", 1, seed)
    vnet = build_virtual_network(inst)
    m1, i1 = build_ns1(inst, vnet, P=P)
    m2, i2 = build_ns2(inst, vnet, P=P)
    r2 = solve_exact(m2, gap=0.0, time_limit=30)
    r1 = solve_exact(m1, gap=0.0, time_limit=30)
    assert r1.status == r2.status
    if r2.status != "optimal":
        return
    assert r1.objective_value == pytest.approx(r2.objective_value, abs=1e-6)
    a1 = map_ns2_to_ns1(r2.assignment, m2, i2, i1, inst, vnet)
    assert check_assignment(m1, a1) == []
    assert m1.objective_value(a1) == pytest.approx(r2.objective_value, abs=1e-6)
    a2 = map_ns1_to_ns2(r1.assignment, m1, i1, i2, inst, vnet)
    assert check_assignment(m2, a2) == []
    assert m2.objective_value(a2) == pytest.approx(r1.objective_value, abs=1e-6)
    # the domain check agrees with the model check on both decoded optima
    for a, idx in ((r1.assignment, i1), (r2.assignment, i2)):
        assert verify_domain(decode(a, idx, inst, vnet), inst, vnet, P) == []
