import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from netslice import io as nsio
from netslice.model import (
    IncompleteSolutionError,
    ObjectiveWeights,
    SlicingInstance,
    SlicingSolution,
    as_fraction,
    make_network,
    make_service,
    total_power,
    validate_instance,
)


def test_as_fraction_uses_decimal_repr():
    assert as_fraction(0.1) == Fraction(1, 10)
    assert as_fraction("3/4") == Fraction(3, 4)
    assert as_fraction(7) == 7
    with pytest.raises(TypeError):
        as_fraction(True)
    with pytest.raises(TypeError):
        as_fraction(None)


def test_fixture_is_valid(example_s1, example_s2):
    assert validate_instance(example_s1) == []
    assert validate_instance(example_s2) == []


def _codes(instance):
    return {v.code for v in validate_instance(instance)}


def test_validation_reports_structural_errors():
    net = make_network(["A", "B", "C"], {("A", "B"): (1, 1), ("B", "B"): (1, -1)},
                       {"C": (2, ["f"])})
    bad = make_service("1", "C", "X", [], [0], -1)
    codes = _codes(SlicingInstance(net, (bad, bad)))
    assert {"self-loop", "negative-link-delay", "duplicate-service-id", "unknown-endpoint",
            "source-in-cloud", "empty-chain", "nonpositive-rate",
            "negative-latency-budget"} <= codes


def test_missing_nfv_delay_is_reported():
    net = make_network(["A", "B", "C"], {("A", "C"): (1, 1), ("C", "B"): (1, 1)}, {"C": (2, ["f"])})
    svc = make_service("1", "A", "B", ["f"], [1, 1], 5)
    assert "missing-nfv-delay" in _codes(SlicingInstance(net, (svc,)))


def test_weights_validation():
    with pytest.raises(ValueError):
        ObjectiveWeights(beta1=Fraction(1), beta2=Fraction(1))
    with pytest.raises(ValueError):
        ObjectiveWeights(sigma=Fraction(-1))


def _placed(instance, hosts):
    sol = SlicingSolution()
    for k in instance.services:
        for s in range(1, k.length + 1):
            sol.placement_physical[(k.id, s)] = hosts[(k.id, s)]
    for v in instance.network.cloud_nodes:
        sol.activated[v] = int(v in hosts.values())
    return sol


def test_total_power_affine_identity(example_s1):
    sol = _placed(example_s1, {("1", 1): "E", ("1", 2): "E"})
    w = ObjectiveWeights()
    # E on (2 + 0.01*8), C idle (1)
    assert total_power(sol, w, example_s1) == Fraction(2) + Fraction(8, 100) + 1


def test_total_power_requires_full_placement(example_s1):
    sol = _placed(example_s1, {("1", 1): "E", ("1", 2): "E"})
    del sol.placement_physical[("1", 2)]
    with pytest.raises(IncompleteSolutionError):
        total_power(sol, ObjectiveWeights(), example_s1)


@given(st.integers(3, 6), st.integers(1, 5), st.data())
def test_power_is_affine_in_activations(b2, extra, data):
    """For any placement and any activation pattern covering it, the direct
    and affine power expressions agree (checked inside total_power)."""
    from netslice import fig1_fixture
    inst = fig1_fixture(2)
    w = ObjectiveWeights(beta1=Fraction(b2 + extra), beta2=Fraction(b2))
    h1 = data.draw(st.sampled_from(["E"]))
    h2 = data.draw(st.sampled_from(["C", "E"]))
    sol = _placed(inst, {("1", 1): h1, ("2", 1): h2})
    assert total_power(sol, w, inst) > 0


def test_instance_json_roundtrip(tmp_path, example_s1):
    path = tmp_path / "x.json"
    w = ObjectiveWeights(sigma=Fraction(1, 200))
    nsio.write_instance(path, example_s1, weights=w, meta={"preset": "fig1-s1"})
    back, weights = nsio.read_instance(path)
    assert nsio.instance_to_dict(back) == nsio.instance_to_dict(example_s1)
    assert weights == w
    assert json.loads(path.read_text())["meta"]["preset"] == "fig1-s1"
    # deterministic serialisation
    assert nsio.dumps(nsio.instance_to_dict(back)) == nsio.dumps(nsio.instance_to_dict(example_s1))


def test_instance_json_keeps_fractions_exact(tmp_path):
    net = make_network(["A", "B", "C"], {("A", "C"): (Fraction(1, 3), 1), ("C", "B"): (1, 0.25)},
                       {"C": (2, ["f"])})
    svc = make_service("1", "A", "B", ["f"], [1, 1], Fraction(7, 3), {("C", 1): Fraction(1, 7)})
    inst = SlicingInstance(net, (svc,))
    doc = json.loads(nsio.dumps(nsio.instance_to_dict(inst)))
    back = nsio.instance_from_dict(doc)
    assert back.network.link_capacity[("A", "C")] == Fraction(1, 3)
    assert back.network.link_delay[("C", "B")] == Fraction(1, 4)
    assert back.services[0].latency_budget == Fraction(7, 3)
    assert back.services[0].nfv_delay[("C", 1)] == Fraction(1, 7)
