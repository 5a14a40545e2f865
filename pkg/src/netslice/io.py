"""Structured-text (JSON) formats for instances and solution reports.

Numbers with a terminating decimal expansion are written as JSON numbers,
anything else as an ``"n/d"`` string, so that reading back reproduces the
exact ``Fraction``.  Output uses sorted keys and is byte-deterministic.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional, Union

from .model import (
    ObjectiveWeights,
    PhysicalNetwork,
    ServiceRequest,
    SlicingInstance,
    SlicingSolution,
    as_fraction,
)


def _num(value) -> Union[int, float, str]:
    if isinstance(value, float):
        return value
    q = Fraction(value)
    if q.denominator == 1:
        return q.numerator
    d = q.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    if d == 1:
        text = repr(float(q))
        if Fraction(text) == q:
            return float(text)
    return f"{q.numerator}/{q.denominator}"


def _link_key(link) -> str:
    return f"{link[0]}->{link[1]}"


def _parse_link(text: str):
    i, j = text.split("->")
    return (i, j)


def instance_to_dict(instance: SlicingInstance,
                     weights: Optional[ObjectiveWeights] = None,
                     meta: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    net = instance.network
    doc: Dict[str, Any] = {
        "network": {
            "nodes": list(net.nodes),
            "links": [
                {"from": i, "to": j,
                 "capacity": _num(net.link_capacity[(i, j)]),
                 "delay": _num(net.link_delay[(i, j)])}
                for (i, j) in net.links
            ],
            "clouds": [
                {"node": v,
                 "capacity": _num(net.node_capacity[v]),
                 "functions": sorted(net.processable.get(v, ()))}
                for v in net.cloud_nodes
            ],
        },
        "services": [
            {
                "id": k.id,
                "source": k.source,
                "destination": k.destination,
                "chain": list(k.chain),
                "rates": [_num(r) for r in k.rates],
                "latency_budget": _num(k.latency_budget),
                "nfv_delay": [
                    {"node": v, "s": s, "delay": _num(d)}
                    for (v, s), d in sorted(k.nfv_delay.items())
                ],
            }
            for k in instance.services
        ],
    }
    if weights is not None:
        doc["weights"] = {
            "sigma": _num(weights.sigma),
            "beta1": _num(weights.beta1),
            "beta2": _num(weights.beta2),
            "delta": _num(weights.delta),
        }
    if meta:
        doc["meta"] = meta
    return doc


def instance_from_dict(doc: Dict[str, Any]) -> SlicingInstance:
    net = doc["network"]
    links = [(l["from"], l["to"]) for l in net["links"]]
    network = PhysicalNetwork(
        nodes=tuple(net["nodes"]),
        links=tuple(links),
        link_capacity={(l["from"], l["to"]): as_fraction(l["capacity"]) for l in net["links"]},
        link_delay={(l["from"], l["to"]): as_fraction(l["delay"]) for l in net["links"]},
        cloud_nodes=tuple(c["node"] for c in net["clouds"]),
        node_capacity={c["node"]: as_fraction(c["capacity"]) for c in net["clouds"]},
        processable={c["node"]: frozenset(c["functions"]) for c in net["clouds"]},
    )
    services = tuple(
        ServiceRequest(
            id=str(k["id"]),
            source=k["source"],
            destination=k["destination"],
            chain=tuple(k["chain"]),
            rates=tuple(as_fraction(r) for r in k["rates"]),
            latency_budget=as_fraction(k["latency_budget"]),
            nfv_delay={(e["node"], int(e["s"])): as_fraction(e["delay"]) for e in k.get("nfv_delay", [])},
        )
        for k in doc["services"]
    )
    return SlicingInstance(network=network, services=services)


def weights_from_dict(doc: Dict[str, Any]) -> ObjectiveWeights:
    w = doc.get("weights")
    if not w:
        return ObjectiveWeights()
    return ObjectiveWeights(**{key: as_fraction(w[key]) for key in ("sigma", "beta1", "beta2", "delta") if key in w})


def dumps(doc: Dict[str, Any]) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_instance(path: Union[str, Path], instance: SlicingInstance,
                   weights: Optional[ObjectiveWeights] = None,
                   meta: Optional[Dict[str, Any]] = None) -> None:
    Path(path).write_text(dumps(instance_to_dict(instance, weights, meta)), encoding="utf-8", newline="\n")


def read_instance(path: Union[str, Path]):
    """Return ``(instance, weights)`` read from ``path``."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return instance_from_dict(doc), weights_from_dict(doc)


def solution_to_dict(solution: SlicingSolution, instance: Optional[SlicingInstance] = None) -> Dict[str, Any]:
    """Solution report.  With ``instance`` given, per-service listings include
    path hop delays."""
    delays = instance.network.link_delay if instance is not None else {}
    paths = []
    for (k, s, p), links in sorted(solution.paths.items()):
        entry = {
            "k": k, "s": s, "p": p,
            "links": [_link_key(l) for l in links],
            "rate": _num(solution.path_rate.get((k, s, p), 0.0)),
        }
        if instance is not None:
            entry["hop_delays"] = [_num(delays.get(l, 0)) for l in links]
        paths.append(entry)
    return {
        "activated": {v: int(y) for v, y in sorted(solution.activated.items())},
        "placements": [
            {"k": k, "s": s, "physical": solution.placement_physical[(k, s)],
             "virtual": solution.placement_virtual.get((k, s))}
            for (k, s) in sorted(solution.placement_physical)
        ],
        "paths": paths,
        "link_rates": [
            {"k": k, "s": s, "p": p, "link": _link_key(l), "rate": _num(r)}
            for (k, s, p, l), r in sorted(solution.link_rate.items())
        ],
        "hop_delay": [{"k": k, "s": s, "delay": _num(d)} for (k, s), d in sorted(solution.hop_delay.items())],
        "comm_delay": {k: _num(d) for k, d in sorted(solution.comm_delay.items())},
        "nfv_delay": {k: _num(d) for k, d in sorted(solution.nfv_delay_total.items())},
    }


def solution_from_dict(doc: Dict[str, Any]) -> SlicingSolution:
    sol = SlicingSolution()
    sol.activated = {v: int(y) for v, y in doc["activated"].items()}
    for e in doc["placements"]:
        sol.placement_physical[(e["k"], int(e["s"]))] = e["physical"]
        if e.get("virtual") is not None:
            sol.placement_virtual[(e["k"], int(e["s"]))] = e["virtual"]
    for e in doc["paths"]:
        key = (e["k"], int(e["s"]), int(e["p"]))
        sol.paths[key] = [_parse_link(t) for t in e["links"]]
        sol.path_rate[key] = as_fraction(e["rate"])
    for e in doc["link_rates"]:
        sol.link_rate[(e["k"], int(e["s"]), int(e["p"]), _parse_link(e["link"]))] = as_fraction(e["rate"])
    sol.hop_delay = {(e["k"], int(e["s"])): as_fraction(e["delay"]) for e in doc["hop_delay"]}
    sol.comm_delay = {k: as_fraction(d) for k, d in doc["comm_delay"].items()}
    sol.nfv_delay_total = {k: as_fraction(d) for k, d in doc["nfv_delay"].items()}
    return sol


def write_solution(path: Union[str, Path], solution: SlicingSolution,
                   instance: Optional[SlicingInstance] = None, extra: Optional[Dict[str, Any]] = None) -> None:
    doc = solution_to_dict(solution, instance)
    if extra:
        doc.update(extra)
    Path(path).write_text(dumps(doc), encoding="utf-8", newline="\n")


def read_solution(path: Union[str, Path]) -> SlicingSolution:
    return solution_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
