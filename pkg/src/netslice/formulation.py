"""Pieces shared by both slicing formulations.

Both models use the same placement variables (activation ``y``, virtual
placement ``x``, physical placement ``x0``), the same delay variables and the
same placement/capacity/latency constraints; they differ only in how the
traffic of each chain segment is represented.  Segment ``(k, s)`` carries the
flow from the host of function ``s`` to the host of function ``s + 1``;
``s = 0`` starts at the source and ``s = len(chain)`` ends at the destination.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Tuple

from .milp.model import BINARY, CONTINUOUS, EQ, GE, LE, MilpModel
from .model import Link, ServiceRequest, SlicingInstance
from .virtual import VirtualNetwork

DEFAULT_PATHS = 2
DEFAULT_SIGMA = Fraction(1, 1000)


class BuildError(ValueError):
    """The instance cannot be turned into a model (e.g. an unplaceable function)."""


def tag(family: str, **idx) -> str:
    """Constraint label ``family[k=..,s=..,...]``; a ``link`` index is
    rendered as ``(i,j)=(a,b)``."""
    parts = []
    for key, val in idx.items():
        if key == "link":
            parts.append(f"(i,j)=({val[0]},{val[1]})")
        else:
            parts.append(f"{key}={val}")
    return f"{family}[{','.join(parts)}]" if parts else family


@dataclass
class PlacementIndex:
    """Variable names of the placement and delay families."""

    y: Dict[str, str] = field(default_factory=dict)
    x: Dict[Tuple[str, int, str], str] = field(default_factory=dict)       # (clone, s, k)
    x0: Dict[Tuple[str, int, str], str] = field(default_factory=dict)      # (cloud, s, k)
    theta: Dict[Tuple[str, int], str] = field(default_factory=dict)        # (k, s)
    thetaL: Dict[str, str] = field(default_factory=dict)
    thetaN: Dict[str, str] = field(default_factory=dict)


class Layout:
    """Integer numbering of nodes, links and services for variable names,
    plus capability lookups shared by builders and size counters."""

    def __init__(self, instance: SlicingInstance, vnet: VirtualNetwork):
        self.instance = instance
        self.vnet = vnet
        self.node_no = {n: i for i, n in enumerate(vnet.nodes)}
        self.link_no = {l: i for i, l in enumerate(vnet.links)}
        self.service_no = {k.id: i for i, k in enumerate(instance.services)}
        self._capable: Dict[Tuple[str, int], List[str]] = {}
        for k in instance.services:
            for s in range(1, k.length + 1):
                f = k.function(s)
                self._capable[(k.id, s)] = [
                    c for c in vnet.clone_nodes if f in vnet.clone_processable[c]
                ]

    def capable(self, k: ServiceRequest, s: int) -> List[str]:
        """Clones able to host function s of k; empty for s outside 1..len."""
        return self._capable.get((k.id, s), [])

    def capable_physical(self, k: ServiceRequest, s: int) -> List[str]:
        seen: List[str] = []
        for c in self.capable(k, s):
            v = self.vnet.parent(c)
            if v not in seen:
                seen.append(v)
        return seen

    def physical_delay_total(self) -> Fraction:
        return sum((self.vnet.link_delay[l] for l in self.vnet.physical_links), Fraction(0))


def check_placeable(instance: SlicingInstance, layout: Layout) -> None:
    for k in instance.services:
        for s in range(1, k.length + 1):
            if not layout.capable(k, s):
                raise BuildError(
                    f"unplaceable-function: no cloud can process {k.function(s)!r} "
                    f"(service {k.id}, position {s})"
                )


def check_paths(P: int) -> None:
    if not isinstance(P, int) or isinstance(P, bool) or P < 1:
        raise ValueError(f"path count P must be an integer >= 1, got {P!r}")


def theta_bound(k: ServiceRequest, layout: Layout, latency: bool) -> float:
    """Upper bound for a segment delay variable.

    A segment's delay is at most the sum of all physical link delays; with
    latency constraints on it is also at most the service's budget.
    """
    bound = layout.physical_delay_total()
    if latency:
        bound = min(bound, k.latency_budget)
    return float(bound)


def add_placement(model: MilpModel, layout: Layout, sigma, latency: bool = True,
                  aggregate: bool = True) -> PlacementIndex:
    """Declare placement and delay variables and add every constraint family
    the two formulations share.  The per-path delay rows that tie the
    segment delays to routing are added by the caller."""
    instance, vnet = layout.instance, layout.vnet
    net = instance.network
    idx = PlacementIndex()

    for v in net.cloud_nodes:
        idx.y[v] = model.add_var(f"y_{layout.node_no[v]}", BINARY)

    for k in instance.services:
        kn = layout.service_no[k.id]
        for s in range(1, k.length + 1):
            for c in layout.capable(k, s):
                idx.x[(c, s, k.id)] = model.add_var(f"x_c{layout.node_no[c]}_k{kn}_s{s}", BINARY)
            for v in layout.capable_physical(k, s):
                idx.x0[(v, s, k.id)] = model.add_var(f"x0_v{layout.node_no[v]}_k{kn}_s{s}", BINARY)
        tb = theta_bound(k, layout, latency)
        for s in range(0, k.length + 1):
            idx.theta[(k.id, s)] = model.add_var(f"th_k{kn}_s{s}", CONTINUOUS, 0.0, tb)
        nfv_max = sum(
            (max((k.nfv_delay[(v, s)] for v in layout.capable_physical(k, s)), default=Fraction(0))
             for s in range(1, k.length + 1)),
            Fraction(0),
        )
        thL_max = float((k.length + 1) * Fraction(tb))
        thN_max = float(nfv_max)
        if latency:
            thL_max = min(thL_max, float(k.latency_budget))
            thN_max = min(thN_max, float(k.latency_budget))
        idx.thetaL[k.id] = model.add_var(f"thL_k{kn}", CONTINUOUS, 0.0, thL_max)
        idx.thetaN[k.id] = model.add_var(f"thN_k{kn}", CONTINUOUS, 0.0, thN_max)

    for k in instance.services:
        # each clone hosts at most one function of a flow
        for c in vnet.clone_nodes:
            terms = [(idx.x[(c, s, k.id)], 1) for s in range(1, k.length + 1) if (c, s, k.id) in idx.x]
            if terms:
                model.add_constraint(terms, LE, 1, tag("clone-exclusive", k=k.id, v=c))
        for s in range(1, k.length + 1):
            model.add_constraint([(idx.x0[(v, s, k.id)], 1) for v in layout.capable_physical(k, s)],
                                 EQ, 1, tag("exactly-one-node", k=k.id, s=s))
            for v in layout.capable_physical(k, s):
                terms = [(idx.x0[(v, s, k.id)], 1)]
                terms += [(idx.x[(c, s, k.id)], -1) for c in vnet.clones[v] if (c, s, k.id) in idx.x]
                model.add_constraint(terms, EQ, 0, tag("x0-definition", k=k.id, s=s, v=v))
                model.add_constraint([(idx.x0[(v, s, k.id)], 1), (idx.y[v], -1)], LE, 0,
                                     tag("activation", k=k.id, s=s, v=v))

    for v in net.cloud_nodes:
        terms = [(idx.y[v], -float(net.node_capacity[v]))]
        for k in instance.services:
            for s in range(1, k.length + 1):
                if (v, s, k.id) in idx.x0:
                    terms.append((idx.x0[(v, s, k.id)], float(k.rates[s])))
        model.add_constraint(terms, LE, 0, tag("node-capacity", v=v))

    if aggregate:
        demand = sum((k.rates[s] for k in instance.services for s in range(1, k.length + 1)), Fraction(0))
        model.add_constraint([(idx.y[v], float(net.node_capacity[v])) for v in net.cloud_nodes],
                             GE, float(demand), tag("aggregate-capacity"))

    for k in instance.services:
        terms = [(idx.thetaL[k.id], 1)] + [(idx.theta[(k.id, s)], -1) for s in range(0, k.length + 1)]
        model.add_constraint(terms, EQ, 0, tag("theta-L", k=k.id))
        terms = [(idx.thetaN[k.id], 1)]
        for s in range(1, k.length + 1):
            for v in layout.capable_physical(k, s):
                terms.append((idx.x0[(v, s, k.id)], -float(k.nfv_delay[(v, s)])))
        model.add_constraint(terms, EQ, 0, tag("theta-N", k=k.id))
        if latency:
            model.add_constraint([(idx.thetaL[k.id], 1), (idx.thetaN[k.id], 1)], LE,
                                 float(k.latency_budget), tag("e2e-latency", k=k.id))

    obj = [(idx.y[v], 1.0) for v in net.cloud_nodes]
    for k in instance.services:
        obj += [(idx.thetaL[k.id], float(sigma)), (idx.thetaN[k.id], float(sigma))]
    model.set_objective(obj)
    return idx


def shared_size(instance: SlicingInstance, vnet: VirtualNetwork, latency: bool = True,
                aggregate: bool = True) -> Tuple[int, int]:
    """Variable and constraint counts of the shared families, derived from
    the instance structure alone."""
    net = instance.network
    n_clouds = len(net.cloud_nodes)
    proc = vnet.clone_processable
    n_vars = n_clouds
    n_cons = 0
    x0_per_cloud = {v: 0 for v in net.cloud_nodes}
    for k in instance.services:
        ell = k.length
        for s in range(1, ell + 1):
            f = k.function(s)
            clones = [c for c in vnet.clone_nodes if f in proc[c]]
            hosts = {vnet.parent(c) for c in clones}
            n_vars += len(clones) + len(hosts)
            n_cons += 1 + 2 * len(hosts)            # exactly-one, x0-definition, activation
            for v in hosts:
                x0_per_cloud[v] += 1
        n_vars += (ell + 1) + 2
        chain_set = set(k.chain)
        n_cons += sum(1 for c in vnet.clone_nodes if proc[c] & chain_set)   # clone-exclusive
        n_cons += 2 + (1 if latency else 0)        # theta-L, theta-N, e2e
    n_cons += sum(1 for v in net.cloud_nodes if net.node_capacity[v] != 0 or x0_per_cloud[v])
    if aggregate:
        demand = sum((r for k in instance.services for r in k.rates[1:]), Fraction(0))
        if any(net.node_capacity[v] != 0 for v in net.cloud_nodes) or demand > 0:
            n_cons += 1
    return n_vars, n_cons


def link_capacity_rows(model: MilpModel, vnet: VirtualNetwork, flow_vars: Dict[Link, List[str]],
                       family: str = "link-capacity") -> None:
    """Capacity rows over every virtual link (clone links use the finite
    surrogate for their unlimited capacity)."""
    for l in vnet.links:
        names = flow_vars.get(l, [])
        model.add_constraint([(n, 1) for n in names], LE, float(vnet.link_capacity[l]),
                             tag(family, link=l))


def objective_grid(instance: SlicingInstance, sigma) -> Fraction:
    """Spacing of the grid that holds every optimal objective value.

    At an optimum each segment delay equals its longest path delay, so the
    objective is an integer node count plus ``sigma`` times a sum of link
    and processing delays; with all delays multiples of ``1/D`` the values
    lie on multiples of ``gcd(1, sigma / D)``.
    """
    from math import lcm

    sigma = Fraction(repr(sigma)) if isinstance(sigma, float) else Fraction(sigma)
    denominators = [d.denominator for d in instance.network.link_delay.values()]
    denominators += [d.denominator for k in instance.services for d in k.nfv_delay.values()]
    D = lcm(*denominators) if denominators else 1
    unit = sigma / D
    if unit == 0:
        return Fraction(1)
    return Fraction(1, unit.denominator)
