"""Compact formulation: one flow object per chain segment.

Traffic of segment ``(k, s)`` is described by path rates ``r(k,s,p)``, link
indicators ``z`` and link rates ``rij`` that do not name the two hosts;
which clones terminate a segment is read off the placement variables.  At a
clone the link rate must equal ``r * x``, a product linearised by an
auxiliary ``omega`` variable with four inequalities.

Clone-link variables exist only where the placement they are tied to can be
nonzero: the clone's outgoing link for segment ``s`` needs ``x[clone, s]``
and its incoming link needs ``x[clone, s + 1]``.  Every other clone-link
variable is zero at every integral feasible point.
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
from .model import Link, SlicingInstance
from .virtual import VirtualNetwork

SRC, DST = "src", "dst"


@dataclass
class Ns2IndexMap(PlacementIndex):
    paths: int = DEFAULT_PATHS
    r: Dict[Tuple[str, int, int], str] = field(default_factory=dict)                # (k, s, p)
    z: Dict[Tuple[Link, str, int, int], str] = field(default_factory=dict)          # (link, k, s, p)
    rij: Dict[Tuple[Link, str, int, int], str] = field(default_factory=dict)
    omega: Dict[Tuple[str, int, int, str, str], str] = field(default_factory=dict)  # (k, s, p, clone, side)


def segment_links(layout: Layout, k, s: int) -> List[Link]:
    """Virtual links that carry variables for segment (k, s), in link order."""
    vnet = layout.vnet
    senders = set(layout.capable(k, s))
    receivers = set(layout.capable(k, s + 1))
    out = []
    for l in vnet.links:
        i, j = l
        if vnet.is_clone(i):
            if i in senders:
                out.append(l)
        elif vnet.is_clone(j):
            if j in receivers:
                out.append(l)
        else:
            out.append(l)
    return out


def build_ns2(instance: SlicingInstance, vnet: VirtualNetwork, P: int = DEFAULT_PATHS,
              sigma=DEFAULT_SIGMA, latency: bool = True, aggregate: bool = True):
    """Build the compact model; returns ``(MilpModel, Ns2IndexMap)``.

    ``latency=False`` drops the end-to-end budget rows (delays are still
    modelled); ``aggregate=False`` drops the redundant total-capacity row.
    """
    check_paths(P)
    layout = Layout(instance, vnet)
    check_placeable(instance, layout)
    model = MilpModel(name="ns2", metadata={"formulation": "ns2", "P": P, "sigma": float(sigma),
                                            "latency": latency, "aggregate": aggregate,
                                            "objective_step": float(objective_grid(instance, sigma))})
    base = add_placement(model, layout, sigma, latency, aggregate)
    idx = Ns2IndexMap(**vars(base), paths=P)
    flow_on_link: Dict[Link, List[str]] = {}

    for k in instance.services:
        kn = layout.service_no[k.id]
        ell = k.length
        for s in range(0, ell + 1):
            lam = float(k.rates[s])
            links = segment_links(layout, k, s)
            senders = layout.capable(k, s)
            receivers = layout.capable(k, s + 1)
            for p in range(1, P + 1):
                suffix = f"k{kn}_s{s}_p{p}"
                idx.r[(k.id, s, p)] = model.add_var(f"r_{suffix}", CONTINUOUS, 0.0, lam)
                for l in links:
                    idx.z[(l, k.id, s, p)] = model.add_var(f"z_l{layout.link_no[l]}_{suffix}", BINARY)
                for l in links:
                    name = model.add_var(f"f_l{layout.link_no[l]}_{suffix}", CONTINUOUS, 0.0, lam)
                    idx.rij[(l, k.id, s, p)] = name
                    flow_on_link.setdefault(l, []).append(name)
                for c in senders:
                    idx.omega[(k.id, s, p, c, SRC)] = model.add_var(
                        f"om_c{layout.node_no[c]}_a_{suffix}", CONTINUOUS, 0.0, lam)
                for c in receivers:
                    idx.omega[(k.id, s, p, c, DST)] = model.add_var(
                        f"om_c{layout.node_no[c]}_b_{suffix}", CONTINUOUS, 0.0, lam)

    for k in instance.services:
        ell = k.length
        for s in range(0, ell + 1):
            lam = float(k.rates[s])
            links = segment_links(layout, k, s)
            senders = layout.capable(k, s)
            receivers = layout.capable(k, s + 1)
            model.add_constraint([(idx.r[(k.id, s, p)], 1) for p in range(1, P + 1)], EQ, lam,
                                 tag("ns2:rate-total", k=k.id, s=s))
            for p in range(1, P + 1):
                _segment_path_rows(model, layout, idx, k, s, p, lam, links, senders, receivers)

    link_capacity_rows(model, vnet, flow_on_link, "ns2:link-capacity")
    return model, idx


def _segment_path_rows(model, layout, idx, k, s, p, lam, links, senders, receivers) -> None:
    vnet = layout.vnet
    ell = k.length
    r = idx.r[(k.id, s, p)]
    z = {l: idx.z[(l, k.id, s, p)] for l in links}
    f = {l: idx.rij[(l, k.id, s, p)] for l in links}
    key = dict(k=k.id, s=s, p=p)

    # conservation at physical (routing) nodes
    incoming: Dict[str, List[Link]] = {}
    outgoing: Dict[str, List[Link]] = {}
    for l in links:
        outgoing.setdefault(l[0], []).append(l)
        incoming.setdefault(l[1], []).append(l)
    for i in vnet.physical_nodes:
        rate_terms = [(f[l], 1) for l in incoming.get(i, [])] + [(f[l], -1) for l in outgoing.get(i, [])]
        link_terms = [(z[l], 1) for l in incoming.get(i, [])] + [(z[l], -1) for l in outgoing.get(i, [])]
        rhs = 0
        if s == 0 and i == k.source:
            rate_terms.append((r, 1))
            rhs -= 1
        if s == ell and i == k.destination:
            rate_terms.append((r, -1))
            rhs += 1
        model.add_constraint(rate_terms, EQ, 0, tag("ns2:conserve-rate", **key, i=i))
        model.add_constraint(link_terms, EQ, rhs, tag("ns2:conserve-link", **key, i=i))

    # clones: leave a clone iff it hosts function s, enter iff it hosts s+1
    for c in vnet.clone_nodes:
        out_l, in_l = vnet.clone_links(c)
        has_out, has_in = c in senders, c in receivers
        if not (has_out or has_in):
            continue
        ckey = dict(key, v=c)
        if 1 <= s < ell:
            if has_out:
                model.add_constraint([(f[out_l], 1), (idx.omega[(k.id, s, p, c, SRC)], -1)], EQ, 0,
                                     tag("ns2:clone-out-rate", **ckey))
                model.add_constraint([(z[out_l], 1), (idx.x[(c, s, k.id)], -1)], EQ, 0,
                                     tag("ns2:clone-out-link", **ckey))
            if has_in:
                model.add_constraint([(f[in_l], 1), (idx.omega[(k.id, s, p, c, DST)], -1)], EQ, 0,
                                     tag("ns2:clone-in-rate", **ckey))
                model.add_constraint([(z[in_l], 1), (idx.x[(c, s + 1, k.id)], -1)], EQ, 0,
                                     tag("ns2:clone-in-link", **ckey))
            if has_out and has_in:
                model.add_constraint([(z[out_l], 1), (z[in_l], 1)], LE, 1, tag("ns2:clone-degree", **ckey))
        else:
            # first segment: clones may only absorb; last segment: only emit
            rate_terms, link_terms = [], []
            if has_in:
                rate_terms += [(f[in_l], 1), (idx.omega[(k.id, s, p, c, DST)], -1)]
                link_terms += [(z[in_l], 1), (idx.x[(c, s + 1, k.id)], -1)]
            if has_out:
                rate_terms += [(f[out_l], -1), (idx.omega[(k.id, s, p, c, SRC)], 1)]
                link_terms += [(z[out_l], -1), (idx.x[(c, s, k.id)], 1)]
            family = "first" if s == 0 else "last"
            model.add_constraint(rate_terms, EQ, 0, tag(f"ns2:{family}-clone-rate", **ckey))
            model.add_constraint(link_terms, EQ, 0, tag(f"ns2:{family}-clone-link", **ckey))
            if has_out and has_in:
                model.add_constraint([(z[out_l], 1), (z[in_l], 1)], LE, 1, tag("ns2:clone-degree", **ckey))

    # omega = r * x, linearised
    for c, side, xs in [(c, SRC, s) for c in senders] + [(c, DST, s + 1) for c in receivers]:
        om = idx.omega[(k.id, s, p, c, side)]
        x = idx.x[(c, xs, k.id)]
        okey = dict(key, v=c, side=side)
        model.add_constraint([(om, 1), (x, -lam), (r, -1)], GE, -lam, tag("ns2:omega-lower", **okey))
        model.add_constraint([(om, 1), (x, -lam)], LE, 0, tag("ns2:omega-cap-x", **okey))
        model.add_constraint([(om, 1), (r, -1)], LE, 0, tag("ns2:omega-cap-r", **okey))

    for l in links:
        model.add_constraint([(f[l], 1), (z[l], -lam)], LE, 0, tag("ns2:rate-indicator", **key, link=l))

    delay_terms = [(z[l], -float(vnet.link_delay[l])) for l in links if not vnet.is_clone_link(l)]
    model.add_constraint([(idx.theta[(k.id, s)], 1)] + delay_terms, GE, 0, tag("ns2:path-delay", **key))


def ns2_size(instance: SlicingInstance, vnet: VirtualNetwork, P: int = DEFAULT_PATHS,
             latency: bool = True, aggregate: bool = True) -> Tuple[int, int]:
    """(variables, constraints) of ``build_ns2`` computed from counts only."""
    check_paths(P)
    n_vars, n_cons = shared_size(instance, vnet, latency, aggregate)
    proc = vnet.clone_processable
    L = len(vnet.physical_links)
    phys_deg = {i: 0 for i in vnet.physical_nodes}
    for i, j in vnet.physical_links:
        phys_deg[i] += 1
        phys_deg[j] += 1
    used_clone_links = set()
    for k in instance.services:
        ell = k.length

        def hosts(s):
            if 1 <= s <= ell:
                return {c for c in vnet.clone_nodes if k.function(s) in proc[c]}
            return set()

        for s in range(0, ell + 1):
            A, B = hosts(s), hosts(s + 1)
            n_links = L + len(A) + len(B)
            used_clone_links |= {(c, "out") for c in A} | {(c, "in") for c in B}
            per_path_vars = 1 + 2 * n_links + len(A) + len(B)
            anchored = {vnet.parent(c) for c in A | B}
            active = sum(1 for i in vnet.physical_nodes
                         if phys_deg[i] or i in anchored
                         or (s == 0 and i == k.source) or (s == ell and i == k.destination))
            if 1 <= s < ell:
                clone_rows = 2 * len(A) + 2 * len(B)
            else:
                clone_rows = 2 * len(A | B)
            per_path_cons = (2 * active + clone_rows + len(A & B)
                             + 3 * (len(A) + len(B)) + n_links + 1)
            n_vars += P * per_path_vars
            n_cons += 1 + P * per_path_cons
    if instance.services:
        n_cons += L + len(used_clone_links)
    return n_vars, n_cons
