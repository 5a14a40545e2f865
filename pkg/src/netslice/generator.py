"""Seeded random instances and the two hand-made example instances.

Every random field is drawn from its own Philox stream keyed by
``(seed, field, index)``, so adding services or redrawing links never shifts
the draws of unrelated fields, and two parameter sets that differ only in a
range (e.g. low versus high link capacity) see the same underlying uniforms.
Continuous draws are rounded to two decimals and stored as exact fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .model import (
    Link,
    PhysicalNetwork,
    ServiceRequest,
    SlicingInstance,
    make_network,
    make_service,
)

# stream ids; never renumber, or every generated instance changes
_STREAMS = {
    "coords": 1, "clouds": 2, "links": 3, "node_capacity": 4, "link_capacity": 5,
    "capability": 6, "nfv_delay": 7, "link_delay": 8, "destination": 9,
    "endpoints": 10, "chain": 11, "rate": 12, "alpha": 13,
}

FISH_SUBSTITUTION = ("random topology substituted for the 112-node fish topology, "
                     "which is not available; parameter rules are unchanged")


class GenerationError(ValueError):
    pass


@dataclass(frozen=True)
class GenParams:
    """Recipe for one random instance family.

    Ranges are closed intervals of a uniform draw; ``*_choices`` replace a
    range by a uniform pick from a finite set.  Link delays are Euclidean
    length over the mean shortest-path length unless ``link_delay_choices``
    is given.  The latency budget of service k is
    ``theta_base + theta_slope * dist_k + alpha`` with ``alpha`` drawn from
    ``theta_jitter`` and ``dist_k`` the smallest S-D path delay.
    """

    n_nodes: int = 6
    n_clouds: int = 3
    region: float = 100.0
    link_prob: float = 0.6
    node_capacity: Tuple[float, float] = (6.0, 12.0)
    link_capacity: Tuple[float, float] = (0.5, 3.5)
    n_functions: int = 5
    partial_functions: int = 2          # functions per ordinary cloud
    full_clouds: int = 1                # clouds able to run every function
    nfv_delay: Tuple[float, float] = (0.8, 1.2)
    nfv_delay_choices: Optional[Tuple[int, ...]] = None
    link_delay_choices: Optional[Tuple[int, ...]] = None
    chain_length: int = 3
    rate_range: Tuple[int, int] = (1, 1)   # one integer rate per service
    theta_base: float = 3.0
    theta_slope: float = 6.0
    theta_jitter: Tuple[float, float] = (0.0, 2.0)
    n_services: int = 1
    common_destination: bool = False
    seed: int = 0
    max_retries: int = 100
    note: str = ""

    def __post_init__(self):
        ranges = {"node_capacity": self.node_capacity, "link_capacity": self.link_capacity,
                  "nfv_delay": self.nfv_delay, "rate_range": self.rate_range,
                  "theta_jitter": self.theta_jitter}
        for name, (lo, hi) in ranges.items():
            if lo > hi:
                raise ValueError(f"{name}: empty range [{lo}, {hi}]")
            if lo < 0:
                raise ValueError(f"{name}: negative lower end {lo}")
        if self.rate_range[0] < 1:
            raise ValueError("rates must be at least 1")
        if not 0.0 <= self.link_prob <= 1.0:
            raise ValueError(f"link probability {self.link_prob} outside [0, 1]")
        if not 0 < self.n_clouds < self.n_nodes:
            raise ValueError("need at least one cloud and one non-cloud node")
        if not 0 <= self.full_clouds <= self.n_clouds:
            raise ValueError("full_clouds must lie in [0, n_clouds]")
        if not 1 <= self.partial_functions <= self.n_functions:
            raise ValueError("partial_functions must lie in [1, n_functions]")
        if not 1 <= self.chain_length <= self.n_functions:
            raise ValueError("chain_length must lie in [1, n_functions]")
        if self.n_services < 0 or self.max_retries < 1:
            raise ValueError("n_services must be >= 0 and max_retries >= 1")
        n_plain = self.n_nodes - self.n_clouds
        if n_plain < 2:
            raise ValueError("need two non-cloud nodes for distinct source and destination")
        for choices in (self.nfv_delay_choices, self.link_delay_choices):
            if choices is not None and (not choices or min(choices) < 0):
                raise ValueError("choice sets must be nonempty and nonnegative")


PRESETS: Dict[str, GenParams] = {
    "sec5a": GenParams(),
    "sec5b-high": GenParams(
        n_nodes=12, n_clouds=6, link_prob=0.3, node_capacity=(50.0, 100.0),
        link_capacity=(7.0, 77.0), n_functions=4, partial_functions=2, full_clouds=1,
        nfv_delay_choices=(3, 4, 5, 6), link_delay_choices=(1, 2), chain_length=3,
        rate_range=(1, 11), theta_base=20.0, theta_slope=3.0, theta_jitter=(0.0, 5.0),
        common_destination=True, note=FISH_SUBSTITUTION,
    ),
}
PRESETS["sec5b-low"] = replace(PRESETS["sec5b-high"], link_capacity=(5.0, 55.0))
FIXTURES = ("fig1-s1", "fig1-s2")
PRESET_NAMES = tuple(PRESETS) + FIXTURES


def _rng(seed: int, stream: str, *index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_STREAMS[stream],) + tuple(index))
    return np.random.Generator(np.random.Philox(ss))


def _q(value: float) -> Fraction:
    """Round to two decimals and keep exactly."""
    return Fraction(round(float(value) * 100), 100)


def _uniform(rng: np.random.Generator, lo: float, hi: float) -> Fraction:
    return _q(lo + (hi - lo) * rng.random())


def _pick(rng: np.random.Generator, choices: Sequence[int]) -> Fraction:
    return Fraction(int(choices[int(rng.integers(len(choices)))]))


def _shortest(nodes: Sequence[str], weight: Dict[Link, float]) -> Dict[str, Dict[str, float]]:
    g = nx.DiGraph()
    g.add_nodes_from(nodes)
    for (i, j), w in weight.items():
        g.add_edge(i, j, weight=w)
    return {u: dict(d) for u, d in nx.all_pairs_dijkstra_path_length(g, weight="weight")}


def mean_shortest_length(nodes: Sequence[str], length: Dict[Link, float]) -> float:
    """Average shortest-path length over ordered pairs joined by some path."""
    dist = _shortest(nodes, length)
    vals = [d for u in nodes for v, d in dist[u].items() if v != u]
    return sum(vals) / len(vals) if vals else 0.0


def _draw_links(params: GenParams, nodes: List[str], attempt: int) -> List[Link]:
    rng = _rng(params.seed, "links", attempt)
    coins = rng.random(len(nodes) * (len(nodes) - 1))
    pairs = [(i, j) for i in nodes for j in nodes if i != j]
    return [l for l, u in zip(pairs, coins) if u < params.link_prob]


def generate(params: GenParams) -> SlicingInstance:
    """Random instance following ``params``; identical params give an
    identical instance."""
    p = params
    nodes = [f"n{i}" for i in range(1, p.n_nodes + 1)]
    functions = [f"f{i}" for i in range(1, p.n_functions + 1)]

    rng = _rng(p.seed, "clouds")
    clouds = sorted(rng.choice(nodes, size=p.n_clouds, replace=False).tolist(), key=nodes.index)
    plain = [v for v in nodes if v not in clouds]

    rng = _rng(p.seed, "capability")
    full = set(rng.choice(clouds, size=p.full_clouds, replace=False).tolist())
    capability = {}
    for v in clouds:
        if v in full:
            capability[v] = list(functions)
        else:
            picked = rng.choice(functions, size=p.partial_functions, replace=False).tolist()
            capability[v] = sorted(picked, key=functions.index)

    rng = _rng(p.seed, "node_capacity")
    node_cap = {v: _uniform(rng, *p.node_capacity) for v in clouds}

    rng = _rng(p.seed, "nfv_delay")
    nfv = {}
    for v in clouds:
        for f in functions:
            nfv[(v, f)] = (_pick(rng, p.nfv_delay_choices) if p.nfv_delay_choices
                           else _uniform(rng, *p.nfv_delay))

    rng = _rng(p.seed, "coords")
    coords = {v: (_q(p.region * rng.random()), _q(p.region * rng.random())) for v in nodes}

    # endpoints do not depend on the links, so they are fixed across retries
    if p.common_destination:
        rng = _rng(p.seed, "destination")
        common = plain[int(rng.integers(len(plain)))]
    ends: List[Tuple[str, str]] = []
    for n in range(p.n_services):
        rng = _rng(p.seed, "endpoints", n)
        if p.common_destination:
            starts = [v for v in plain if v != common]
            ends.append((starts[int(rng.integers(len(starts)))], common))
        else:
            s, d = rng.choice(plain, size=2, replace=False).tolist()
            ends.append((s, d))

    for attempt in range(p.max_retries):
        links = _draw_links(p, nodes, attempt)
        delay = _link_delays(p, nodes, links, coords)
        dist = _shortest(nodes, {l: float(delay[l]) for l in links})
        if all(d in dist[s] for s, d in ends):
            break
    else:
        raise GenerationError(f"disconnected-instance: no connected draw in {p.max_retries} attempts "
                              f"(seed {p.seed})")

    rng = _rng(p.seed, "link_capacity")
    draws = rng.random(len(nodes) * (len(nodes) - 1))
    pair_no = {(i, j): n for n, (i, j) in enumerate((i, j) for i in nodes for j in nodes if i != j)}
    lo, hi = p.link_capacity
    link_cap = {l: _q(lo + (hi - lo) * draws[pair_no[l]]) for l in links}

    net = make_network(
        nodes, {l: (link_cap[l], delay[l]) for l in links},
        {v: (node_cap[v], capability[v]) for v in clouds},
    )
    exact_dist = _exact_distances(net)
    services = []
    for n, (s, d) in enumerate(ends):
        rng = _rng(p.seed, "chain", n)
        chain = rng.choice(functions, size=p.chain_length, replace=False).tolist()
        rng = _rng(p.seed, "rate", n)
        rate = int(rng.integers(p.rate_range[0], p.rate_range[1] + 1))
        rng = _rng(p.seed, "alpha", n)
        alpha = _uniform(rng, *p.theta_jitter)
        theta = _q(p.theta_base) + _q(p.theta_slope) * exact_dist[(s, d)] + alpha
        nfv_k = {(v, pos): nfv[(v, f)] for pos, f in enumerate(chain, start=1)
                 for v in clouds if f in capability[v]}
        services.append(make_service(str(n + 1), s, d, chain, [rate] * (p.chain_length + 1), theta, nfv_k))
    return SlicingInstance(net, tuple(services))


def _link_delays(p: GenParams, nodes, links, coords) -> Dict[Link, Fraction]:
    if p.link_delay_choices:
        rng = _rng(p.seed, "link_delay")
        draws = {(i, j): _pick(rng, p.link_delay_choices) for i in nodes for j in nodes if i != j}
        return {l: draws[l] for l in links}
    length = {(i, j): math.sqrt(float(coords[i][0] - coords[j][0]) ** 2
                                + float(coords[i][1] - coords[j][1]) ** 2) for i, j in links}
    mean = mean_shortest_length(nodes, length)
    if mean <= 0:
        return {l: Fraction(0) for l in links}
    return {l: _q(length[l] / mean) for l in links}


def _exact_distances(net: PhysicalNetwork) -> Dict[Tuple[str, str], Fraction]:
    g = nx.DiGraph()
    g.add_nodes_from(net.nodes)
    for l in net.links:
        g.add_edge(*l, weight=net.link_delay[l])
    out = {}
    for u, lengths in nx.all_pairs_dijkstra_path_length(g, weight="weight"):
        for v, d in lengths.items():
            out[(u, v)] = Fraction(d)
    return out


def fig1_fixture(scenario: int = 1, theta=None) -> SlicingInstance:
    """The five-node example network with one of its two service sets.

    Scenario 1: one service A->D through (f1, f2) at rate 4, budget 5.
    Scenario 2: service 1 A->D through (f1), budget 4, and service 2 A->B
    through (f2), budget 3, both at rate 1.  ``theta`` overrides the budget
    of the last service.
    """
    links = {("A", "B"): (2, 1), ("A", "C"): (2, 1), ("B", "E"): (2, 1), ("C", "E"): (2, 1),
             ("C", "B"): (2, 1), ("E", "D"): (4, 1), ("D", "B"): (2, 1)}
    net = make_network("ABCDE", links, {"C": (4, ["f2"]), "E": (8, ["f1", "f2"])})
    if scenario == 1:
        services = (make_service("1", "A", "D", ["f1", "f2"], [4, 4, 4], 5 if theta is None else theta,
                                 {("E", 1): 1, ("E", 2): 1, ("C", 2): 1}),)
    elif scenario == 2:
        services = (make_service("1", "A", "D", ["f1"], [1, 1], 4, {("E", 1): 1}),
                    make_service("2", "A", "B", ["f2"], [1, 1], 3 if theta is None else theta,
                                 {("E", 1): 1, ("C", 1): 1}))
    else:
        raise ValueError(f"scenario must be 1 or 2, got {scenario!r}")
    return SlicingInstance(net, services)


def preset_instance(name: str, n_services: Optional[int] = None, seed: int = 0) -> SlicingInstance:
    """Instance for a named preset; fixtures ignore ``n_services`` and ``seed``."""
    if name == "fig1-s1":
        return fig1_fixture(1)
    if name == "fig1-s2":
        return fig1_fixture(2)
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    params = PRESETS[name]
    if n_services is not None:
        params = replace(params, n_services=n_services)
    return generate(replace(params, seed=seed))


def preset_note(name: str) -> str:
    return PRESETS[name].note if name in PRESETS else ""
