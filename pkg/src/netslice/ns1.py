"""Natural formulation: one flow object per segment *and host pair*.

For segment ``(k, s)`` every candidate pair ``(a, b)`` of hosts (``a``
processes function ``s`` or is the source, ``b`` processes ``s + 1`` or is
the destination) gets its own path rates, link indicators and link rates.
A pair is in use exactly when both of its placements are; for two clones
that product of binaries is linearised by a binary ``w`` with three
inequalities, at the chain ends the single placement variable is used
directly.

Pairs with ``a == b`` are not generated: a clone hosts at most one function
per flow, so such a pair can never be in use.  Links of clones other than
``a`` and ``b`` carry nothing for the pair and get no variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .formulation import (
    DEFAULT_PATHS,
    DEFAULT_SIGMA,
    Layout,
    PlacementIndex,
    add_placement,
    check_paths,
    check_placeable,
    link_capacity_rows,
    objective_grid,
    shared_size,
    tag,
)
from .milp.model import BINARY, CONTINUOUS, EQ, GE, LE, MilpModel
from .model import Link, ServiceRequest, SlicingInstance
from .virtual import VirtualNetwork

PairKey = Tuple[str, int, str, str]   # (k, s, a, b)


@dataclass
class Ns1IndexMap(PlacementIndex):
    paths: int = DEFAULT_PATHS
    w: Dict[Tuple[str, str, int, str], str] = field(default_factory=dict)               # (a, b, s, k)
    r: Dict[Tuple[str, int, str, str, int], str] = field(default_factory=dict)          # (k, s, a, b, p)
    z: Dict[Tuple[Link, str, int, str, str, int], str] = field(default_factory=dict)    # (link, k, s, a, b, p)
    rij: Dict[Tuple[Link, str, int, str, str, int], str] = field(default_factory=dict)

    def pair_indicator(self, k: str, s: int, a: str, b: str, ell: int) -> str:
        """Variable that equals 1 iff pair (a, b) serves segment (k, s)."""
        if s == 0:
            return self.x[(b, 1, k)]
        if s == ell:
            return self.x[(a, ell, k)]
        return self.w[(a, b, s, k)]


def segment_pairs(layout: Layout, k: ServiceRequest, s: int) -> List[Tuple[str, str]]:
    ell = k.length
    if s == 0:
        return [(k.source, b) for b in layout.capable(k, 1)]
    if s == ell:
        return [(a, k.destination) for a in layout.capable(k, ell)]
    return [(a, b) for a in layout.capable(k, s) for b in layout.capable(k, s + 1) if a != b]


def pair_links(vnet: VirtualNetwork, a: str, b: str) -> List[Link]:
    """Physical links plus both links of each clone endpoint, in link order."""
    ends = {n for n in (a, b) if vnet.is_clone(n)}
    return [l for l in vnet.links
            if not vnet.is_clone_link(l) or l[0] in ends or l[1] in ends]


def build_ns1(instance: SlicingInstance, vnet: VirtualNetwork, P: int = DEFAULT_PATHS,
              sigma=DEFAULT_SIGMA, latency: bool = True, aggregate: bool = True):
    """Build the natural model; returns ``(MilpModel, Ns1IndexMap)``."""
    check_paths(P)
    layout = Layout(instance, vnet)
    check_placeable(instance, layout)
    model = MilpModel(name="ns1", metadata={"formulation": "ns1", "P": P, "sigma": float(sigma),
                                            "latency": latency, "aggregate": aggregate,
                                            "objective_step": float(objective_grid(instance, sigma))})
    base = add_placement(model, layout, sigma, latency, aggregate)
    idx = Ns1IndexMap(**vars(base), paths=P)
    no = layout.node_no
    flow_on_link: Dict[Link, List[str]] = {}

    for k in instance.services:
        kn = layout.service_no[k.id]
        for s in range(0, k.length + 1):
            lam = float(k.rates[s])
            for a, b in segment_pairs(layout, k, s):
                pre = f"k{kn}_s{s}_a{no[a]}_b{no[b]}"
                if 1 <= s < k.length:
                    idx.w[(a, b, s, k.id)] = model.add_var(f"w_{pre}", BINARY)
                links = pair_links(vnet, a, b)
                for p in range(1, P + 1):
                    idx.r[(k.id, s, a, b, p)] = model.add_var(f"r_{pre}_p{p}", CONTINUOUS, 0.0, lam)
                    for l in links:
                        idx.z[(l, k.id, s, a, b, p)] = model.add_var(
                            f"z_l{layout.link_no[l]}_{pre}_p{p}", BINARY)
                    for l in links:
                        name = model.add_var(f"f_l{layout.link_no[l]}_{pre}_p{p}", CONTINUOUS, 0.0, lam)
                        idx.rij[(l, k.id, s, a, b, p)] = name
                        flow_on_link.setdefault(l, []).append(name)

    for k in instance.services:
        for s in range(0, k.length + 1):
            lam = float(k.rates[s])
            pairs = segment_pairs(layout, k, s)
            for a, b in pairs:
                key = dict(k=k.id, s=s, vs=a, vs1=b)
                g = idx.pair_indicator(k.id, s, a, b, k.length)
                if 1 <= s < k.length:
                    xa, xb = idx.x[(a, s, k.id)], idx.x[(b, s + 1, k.id)]
                    model.add_constraint([(g, 1), (xa, -1)], LE, 0, tag("product-upper-first", **key))
                    model.add_constraint([(g, 1), (xb, -1)], LE, 0, tag("product-upper-second", **key))
                    model.add_constraint([(g, 1), (xa, -1), (xb, -1)], GE, -1, tag("product-lower", **key))
                model.add_constraint([(idx.r[(k.id, s, a, b, p)], 1) for p in range(1, P + 1)] + [(g, -lam)],
                                     EQ, 0, tag("rate-coupling", **key))
                links = pair_links(vnet, a, b)
                for p in range(1, P + 1):
                    _pair_path_rows(model, layout, idx, k, s, a, b, p, lam, g, links)
            for p in range(1, P + 1):
                terms = [(idx.theta[(k.id, s)], 1)]
                for a, b in pairs:
                    for l in vnet.physical_links:
                        terms.append((idx.z[(l, k.id, s, a, b, p)], -float(vnet.link_delay[l])))
                model.add_constraint(terms, GE, 0, tag("path-delay", k=k.id, s=s, p=p))

    link_capacity_rows(model, vnet, flow_on_link)
    return model, idx


def _pair_path_rows(model, layout, idx, k, s, a, b, p, lam, g, links) -> None:
    vnet = layout.vnet
    r = idx.r[(k.id, s, a, b, p)]
    z = {l: idx.z[(l, k.id, s, a, b, p)] for l in links}
    f = {l: idx.rij[(l, k.id, s, a, b, p)] for l in links}
    key = dict(k=k.id, s=s, vs=a, vs1=b, p=p)

    for l in links:
        model.add_constraint([(z[l], 1), (g, -1)], LE, 0, tag("indicator", **key, link=l))
    for c in (a, b):
        if vnet.is_clone(c):
            out_l, in_l = vnet.clone_links(c)
            model.add_constraint([(z[out_l], 1), (z[in_l], 1)], LE, 1, tag("loops", **key, v=c))
    for l in links:
        model.add_constraint([(f[l], 1), (z[l], -lam)], LE, 0, tag("rate-indicator", **key, link=l))

    incoming: Dict[str, List[Link]] = {}
    outgoing: Dict[str, List[Link]] = {}
    for l in links:
        outgoing.setdefault(l[0], []).append(l)
        incoming.setdefault(l[1], []).append(l)
    nodes = list(vnet.physical_nodes) + [c for c in (a, b) if vnet.is_clone(c)]
    for i in nodes:
        rate_terms = [(f[l], 1) for l in incoming.get(i, [])] + [(f[l], -1) for l in outgoing.get(i, [])]
        link_terms = [(z[l], 1) for l in incoming.get(i, [])] + [(z[l], -1) for l in outgoing.get(i, [])]
        if i == a:
            rate_terms.append((r, 1))
            link_terms.append((g, 1))
        if i == b:
            rate_terms.append((r, -1))
            link_terms.append((g, -1))
        model.add_constraint(rate_terms, EQ, 0, tag("conserve-rate", **key, i=i))
        model.add_constraint(link_terms, EQ, 0, tag("conserve-link", **key, i=i))


def ns1_size(instance: SlicingInstance, vnet: VirtualNetwork, P: int = DEFAULT_PATHS,
             latency: bool = True, aggregate: bool = True) -> Tuple[int, int]:
    """(variables, constraints) of ``build_ns1`` computed from counts only."""
    check_paths(P)
    n_vars, n_cons = shared_size(instance, vnet, latency, aggregate)
    proc = vnet.clone_processable
    L = len(vnet.physical_links)
    phys_deg = {i: 0 for i in vnet.physical_nodes}
    for i, j in vnet.physical_links:
        phys_deg[i] += 1
        phys_deg[j] += 1
    routed_nodes = {i for i, d in phys_deg.items() if d}
    used_clones = set()
    for k in instance.services:
        ell = k.length
        hosts = {s: [c for c in vnet.clone_nodes if k.function(s) in proc[c]] for s in range(1, ell + 1)}
        for s in range(0, ell + 1):
            if s == 0:
                pairs = [(k.source, b) for b in hosts[1]]
            elif s == ell:
                pairs = [(a, k.destination) for a in hosts[ell]]
            else:
                pairs = [(a, b) for a in hosts[s] for b in hosts[s + 1] if a != b]
            for a, b in pairs:
                ends = [c for c in (a, b) if c in vnet.anchor]
                used_clones.update(ends)
                n_links = L + 2 * len(ends)
                physical_rows = len(routed_nodes | {vnet.parent(c) for c in ends}
                                    | {n for n in (a, b) if n not in vnet.anchor})
                inner = 1 <= s < ell
                n_vars += (1 if inner else 0) + P * (1 + 2 * n_links)
                n_cons += (3 if inner else 0) + 1
                n_cons += P * (2 * n_links + len(ends) + 2 * (physical_rows + len(ends)))
            n_cons += P   # path-delay
    if instance.services:
        n_cons += L + 2 * len(used_clones)
    return n_vars, n_cons
