"""From MILP assignments to slicing solutions and back.

* ``decode`` turns an assignment of either formulation into a
  ``SlicingSolution`` (placements, ordered paths, rates, delays).
* ``verify_domain`` checks a solution against the slicing problem directly,
  by walking paths and summing rates; it never looks at a MILP.
* ``encode_ns1`` / ``encode_ns2`` produce a full assignment for a solution.
* ``map_ns2_to_ns1`` / ``map_ns1_to_ns2`` carry feasible assignments between
  the two formulations following the pair-by-pair correspondence: a segment
  is served by exactly one host pair, whose variables in the natural model
  equal the segment's variables in the compact one.
"""

from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .milp.check import check_assignment
from .milp.model import MilpModel
from .model import Link, SlicingInstance, SlicingSolution, Violation
from .ns1 import Ns1IndexMap, pair_links, segment_pairs
from .ns2 import DST, SRC, Ns2IndexMap
from .formulation import Layout
from .virtual import VirtualNetwork

IndexMap = Union[Ns1IndexMap, Ns2IndexMap]


class DecodeError(ValueError):
    pass


class MappingError(ValueError):
    def __init__(self, message: str, violations: Sequence[str] = ()):
        super().__init__(message if not violations else f"{message}: {list(violations)[:10]}")
        self.violations = list(violations)


def _clean(value: float) -> float:
    """Float value with signed zeros and round-off below 1e-12 removed."""
    value = float(value)
    return 0.0 if abs(value) < 1e-12 else value


def _by_path(table: Mapping[tuple, str]) -> Dict[tuple, List[Tuple[tuple, str]]]:
    """Group a (link, k, s, p)- or (k, s, p, ...)-keyed name table per path."""
    groups: Dict[tuple, List[Tuple[tuple, str]]] = defaultdict(list)
    for key, name in table.items():
        path = key[1:4] if isinstance(key[0], tuple) else key[:3]
        groups[path].append((key, name))
    return groups


def _binary(assignment: Mapping[str, float], name: str, tol: float) -> int:
    val = float(assignment[name])
    b = round(val)
    if abs(val - b) > tol or b not in (0, 1):
        raise DecodeError(f"binary variable {name} has fractional value {val}")
    return int(b)


def _endpoints(solution: SlicingSolution, k, s: int) -> Tuple[Optional[str], Optional[str]]:
    start = k.source if s == 0 else solution.placement_virtual.get((k.id, s))
    end = k.destination if s == k.length else solution.placement_virtual.get((k.id, s + 1))
    return start, end


def order_links(links: Sequence[Link], start: str, end: str) -> List[Link]:
    """Arrange a set of used links as a walk from ``start`` to ``end``.

    Closed sub-walks hanging off the walk are spliced in (Hierholzer);
    circulations not touching the walk are dropped.  Raises when the links
    do not contain a start-to-end walk.
    """
    adj: Dict[str, List[Link]] = defaultdict(list)
    for l in links:
        adj[l[0]].append(l)
    for node in adj:
        adj[node].reverse()       # pop() then yields declaration order
    stack: List[Tuple[str, Optional[Link]]] = [(start, None)]
    walk: List[Link] = []
    while stack:
        node, via = stack[-1]
        if adj[node]:
            l = adj[node].pop()
            stack.append((l[1], l))
        else:
            stack.pop()
            if via is not None:
                walk.append(via)
    walk.reverse()
    if not walk or walk[0][0] != start or walk[-1][1] != end:
        raise DecodeError(f"used links do not form a walk from {start} to {end}")
    return walk


def decode(assignment: Mapping[str, float], idx: IndexMap, instance: SlicingInstance,
           vnet: VirtualNetwork, tol: float = 1e-6) -> SlicingSolution:
    """Turn a (feasible) assignment of either model into a solution.

    Segment delays are recomputed from the decoded paths as the largest
    path delay, so reported delays never include slack of the MILP.
    """
    sol = SlicingSolution()
    for v, name in idx.y.items():
        sol.activated[v] = _binary(assignment, name, tol)
    for (c, s, k), name in idx.x.items():
        if _binary(assignment, name, tol):
            if (k, s) in sol.placement_virtual:
                raise DecodeError(f"two hosts for function {s} of service {k}")
            sol.placement_virtual[(k, s)] = c
            sol.placement_physical[(k, s)] = vnet.parent(c)
    for (v, s, k), name in idx.x0.items():
        if _binary(assignment, name, tol) != int(sol.placement_physical.get((k, s)) == v):
            raise DecodeError(f"physical placement of function {s} of service {k} disagrees with clones")

    delays = vnet.link_delay
    z_by_path = _by_path(idx.z) if isinstance(idx, Ns2IndexMap) else {}
    for k in instance.services:
        for s in range(1, k.length + 1):
            if (k.id, s) not in sol.placement_virtual:
                raise DecodeError(f"function {s} of service {k.id} is not placed")
        for s in range(0, k.length + 1):
            start, end = _endpoints(sol, k, s)
            for p in range(1, idx.paths + 1):
                if isinstance(idx, Ns2IndexMap):
                    rate = assignment[idx.r[(k.id, s, p)]]
                    z = {key[0]: n for key, n in z_by_path[(k.id, s, p)]}
                    f = {l: idx.rij[(l, k.id, s, p)] for l in z}
                else:
                    rate = assignment[idx.r[(k.id, s, start, end, p)]]
                    z = {l: idx.z[(l, k.id, s, start, end, p)] for l in pair_links(vnet, start, end)}
                    f = {l: idx.rij[(l, k.id, s, start, end, p)] for l in z}
                used = [l for l, n in z.items() if _binary(assignment, n, tol)]
                walk = order_links(used, start, end)
                sol.paths[(k.id, s, p)] = walk
                sol.path_rate[(k.id, s, p)] = _clean(rate)
                for l in walk:
                    sol.link_rate[(k.id, s, p, l)] = _clean(assignment[f[l]])
            sol.hop_delay[(k.id, s)] = max(
                sum((delays[l] for l in sol.paths[(k.id, s, p)]), Fraction(0))
                for p in range(1, idx.paths + 1)
            )
        sol.comm_delay[k.id] = sum((sol.hop_delay[(k.id, s)] for s in range(0, k.length + 1)), Fraction(0))
        sol.nfv_delay_total[k.id] = sum(
            (k.nfv_delay[(sol.placement_physical[(k.id, s)], s)] for s in range(1, k.length + 1)), Fraction(0))
    return sol


def verify_domain(solution: SlicingSolution, instance: SlicingInstance, vnet: VirtualNetwork,
                  P: int, latency: bool = True, allow_cycles: bool = True,
                  tol: float = 1e-6) -> List[Violation]:
    """Every way ``solution`` breaks the slicing problem; empty if feasible.

    Paths are walks in the virtual network; with ``allow_cycles=False`` a
    walk that revisits a node is reported as well.
    """
    out: List[Violation] = []
    net = instance.network
    link_set = set(vnet.links)
    load: Dict[str, Fraction] = defaultdict(Fraction)

    for k in instance.services:
        used_clones: Dict[str, int] = {}
        for s in range(1, k.length + 1):
            c = solution.placement_virtual.get((k.id, s))
            if c is None or c not in vnet.anchor:
                out.append(Violation("missing-placement", f"k={k.id},s={s}"))
                continue
            v = vnet.parent(c)
            if solution.placement_physical.get((k.id, s)) != v:
                out.append(Violation("placement-mismatch", f"k={k.id},s={s}"))
            if k.function(s) not in vnet.clone_processable[c]:
                out.append(Violation("placement-capability", f"k={k.id},s={s},v={c}"))
            if c in used_clones:
                out.append(Violation("clone-exclusive", f"k={k.id},v={c}"))
            used_clones[c] = s
            if solution.activated.get(v, 0) != 1:
                out.append(Violation("activation", f"v={v}"))
            load[v] += k.rates[s]
    for v in net.cloud_nodes:
        if load[v] > net.node_capacity[v] * solution.activated.get(v, 0) + Fraction(tol):
            out.append(Violation("node-capacity", f"v={v}"))
    if any(v not in net.cloud_nodes for v in solution.activated):
        out.append(Violation("unknown-cloud"))

    link_load: Dict[Link, float] = defaultdict(float)
    for k in instance.services:
        if any((k.id, s) not in solution.placement_virtual for s in range(1, k.length + 1)):
            continue
        comm = Fraction(0)
        for s in range(0, k.length + 1):
            start, end = _endpoints(solution, k, s)
            keys = sorted(p for (kk, ss, p) in solution.paths if (kk, ss) == (k.id, s))
            seg = f"k={k.id},s={s}"
            if not keys or len(keys) > P or any(p < 1 or p > P for p in keys):
                out.append(Violation("path-count", seg))
            total = 0.0
            seg_delay = Fraction(0)
            for p in keys:
                walk = solution.paths[(k.id, s, p)]
                rate = float(solution.path_rate.get((k.id, s, p), 0.0))
                total += rate
                pid = f"{seg},p={p}"
                if rate < -tol:
                    out.append(Violation("negative-rate", pid))
                if any(l not in link_set for l in walk):
                    out.append(Violation("unknown-link", pid))
                    continue
                if not walk or walk[0][0] != start or walk[-1][1] != end:
                    out.append(Violation("sfc-order", pid))
                if any(a[1] != b[0] for a, b in zip(walk, walk[1:])):
                    out.append(Violation("broken-path", pid))
                if len(set(walk)) != len(walk):
                    out.append(Violation("repeated-link", pid))
                visited = [l[0] for l in walk[1:]]
                if any(n in vnet.anchor for n in visited):
                    out.append(Violation("clone-transit", pid))
                if not allow_cycles and walk and len(set(visited + [walk[0][0], walk[-1][1]])) != len(walk) + 1:
                    out.append(Violation("path-cycle", pid))
                # per-path rate conservation over the walk's links
                bal: Dict[str, float] = defaultdict(float)
                for l in walk:
                    fl = float(solution.link_rate.get((k.id, s, p, l), 0.0))
                    if fl < -tol or fl > float(k.rates[s]) + tol:
                        out.append(Violation("link-rate-range", f"{pid},(i,j)=({l[0]},{l[1]})"))
                    bal[l[1]] += fl
                    bal[l[0]] -= fl
                    link_load[l] += fl
                if walk:
                    bal[start] += rate
                    bal[end] -= rate
                if any(abs(b) > tol * max(1.0, float(k.rates[s])) for b in bal.values()):
                    out.append(Violation("flow-conservation", pid))
                extra = [l for (kk, ss, pp, l) in solution.link_rate
                         if (kk, ss, pp) == (k.id, s, p) and l not in walk
                         and abs(solution.link_rate[(kk, ss, pp, l)]) > tol]
                if extra:
                    out.append(Violation("rate-off-path", pid))
                seg_delay = max(seg_delay, sum((vnet.link_delay[l] for l in walk), Fraction(0)))
            if abs(total - float(k.rates[s])) > tol * max(1.0, float(k.rates[s])):
                out.append(Violation("rate-total", seg))
            reported = solution.hop_delay.get((k.id, s))
            if reported is not None and float(reported) + tol < float(seg_delay):
                out.append(Violation("delay-report", seg))
            comm += seg_delay
        nfv = sum((k.nfv_delay[(solution.placement_physical[(k.id, s)], s)]
                   for s in range(1, k.length + 1)
                   if (solution.placement_physical.get((k.id, s)), s) in k.nfv_delay), Fraction(0))
        if latency and comm + nfv > k.latency_budget + Fraction(tol):
            out.append(Violation("e2e-latency", f"k={k.id}"))

    for l in net.links:
        if link_load[l] > float(net.link_capacity[l]) + tol * max(1.0, float(net.link_capacity[l])):
            out.append(Violation("link-capacity", f"(i,j)=({l[0]},{l[1]})"))
    return out


# ---------------------------------------------------------------- encoding

def _fill_paths(solution: SlicingSolution, k, s: int, P: int):
    """Paths 1..P of a segment; missing ones repeat the first path at rate 0."""
    keys = sorted(p for (kk, ss, p) in solution.paths if (kk, ss) == (k.id, s))
    if not keys:
        raise MappingError(f"segment k={k.id},s={s} has no path")
    out = {}
    for p in range(1, P + 1):
        if p in keys:
            out[p] = (solution.paths[(k.id, s, p)], float(solution.path_rate.get((k.id, s, p), 0.0)),
                      {l: float(solution.link_rate.get((k.id, s, p, l), 0.0)) for l in solution.paths[(k.id, s, p)]})
        else:
            walk = solution.paths[(k.id, s, keys[0])]
            out[p] = (walk, 0.0, {l: 0.0 for l in walk})
    return out


def _encode_placement(solution: SlicingSolution, idx: IndexMap, instance: SlicingInstance) -> Dict[str, float]:
    a: Dict[str, float] = {}
    for v, n in idx.y.items():
        a[n] = float(solution.activated.get(v, 0))
    for (c, s, k), n in idx.x.items():
        a[n] = 1.0 if solution.placement_virtual.get((k, s)) == c else 0.0
    for (v, s, k), n in idx.x0.items():
        a[n] = 1.0 if solution.placement_physical.get((k, s)) == v else 0.0
    for k in instance.services:
        for s in range(0, k.length + 1):
            a[idx.theta[(k.id, s)]] = float(solution.hop_delay[(k.id, s)])
        a[idx.thetaL[k.id]] = float(solution.comm_delay[k.id])
        a[idx.thetaN[k.id]] = float(solution.nfv_delay_total[k.id])
    return a


def encode_ns2(solution: SlicingSolution, idx: Ns2IndexMap, instance: SlicingInstance,
               vnet: VirtualNetwork) -> Dict[str, float]:
    """Full compact-model assignment describing ``solution``.

    Path links without a variable in the model make the encoding fail."""
    a = _encode_placement(solution, idx, instance)
    for n in list(idx.r.values()) + list(idx.z.values()) + list(idx.rij.values()) + list(idx.omega.values()):
        a[n] = 0.0
    omega_by_path = _by_path(idx.omega)
    for k in instance.services:
        for s in range(0, k.length + 1):
            for p, (walk, rate, flows) in _fill_paths(solution, k, s, idx.paths).items():
                a[idx.r[(k.id, s, p)]] = rate
                for l in walk:
                    if (l, k.id, s, p) not in idx.z:
                        raise MappingError(f"link {l} has no variable for segment k={k.id},s={s}")
                    a[idx.z[(l, k.id, s, p)]] = 1.0
                    a[idx.rij[(l, k.id, s, p)]] = flows[l]
                for (_, _, _, c, side), n in omega_by_path[(k.id, s, p)]:
                    host = solution.placement_virtual.get((k.id, s if side == SRC else s + 1))
                    a[n] = rate if host == c else 0.0
    return a


def encode_ns1(solution: SlicingSolution, idx: Ns1IndexMap, instance: SlicingInstance,
               vnet: VirtualNetwork) -> Dict[str, float]:
    """Full natural-model assignment describing ``solution``."""
    a = _encode_placement(solution, idx, instance)
    for n in list(idx.w.values()) + list(idx.r.values()) + list(idx.z.values()) + list(idx.rij.values()):
        a[n] = 0.0
    for k in instance.services:
        for s in range(0, k.length + 1):
            start, end = _endpoints(solution, k, s)
            if 1 <= s < k.length:
                a[idx.w[(start, end, s, k.id)]] = 1.0
            for p, (walk, rate, flows) in _fill_paths(solution, k, s, idx.paths).items():
                a[idx.r[(k.id, s, start, end, p)]] = rate
                for l in walk:
                    key = (l, k.id, s, start, end, p)
                    if key not in idx.z:
                        raise MappingError(f"link {l} has no variable for segment k={k.id},s={s}")
                    a[idx.z[key]] = 1.0
                    a[idx.rij[key]] = flows[l]
    return a


# ---------------------------------------------------------------- mappings

def _require_feasible(model: MilpModel, assignment: Mapping[str, float], tol: float) -> None:
    bad = check_assignment(model, assignment, tol)
    if bad:
        raise MappingError("source assignment is infeasible", bad)


def _active_host(assignment, idx: IndexMap, k, s: int) -> str:
    hosts = [c for (c, ss, kk), n in idx.x.items() if kk == k.id and ss == s and round(assignment[n]) == 1]
    if len(hosts) != 1:
        raise MappingError(f"function {s} of service {k.id} has {len(hosts)} hosts")
    return hosts[0]


def _segment_pair(assignment, idx: IndexMap, k, s: int) -> Tuple[str, str]:
    a = k.source if s == 0 else _active_host(assignment, idx, k, s)
    b = k.destination if s == k.length else _active_host(assignment, idx, k, s + 1)
    return a, b


def map_ns2_to_ns1(assignment: Mapping[str, float], ns2_model: MilpModel, ns2_idx: Ns2IndexMap,
                   ns1_idx: Ns1IndexMap, instance: SlicingInstance, vnet: VirtualNetwork,
                   tol: float = 1e-6) -> Dict[str, float]:
    """Natural-model assignment built from a feasible compact one.

    Placement and delay variables are copied; the segment variables are
    copied onto the single host pair that serves the segment and every
    other pair is set to zero."""
    _require_feasible(ns2_model, assignment, tol)
    if ns1_idx.paths != ns2_idx.paths:
        raise MappingError("path counts of the two models differ")
    out: Dict[str, float] = {}
    for fam in ("y", "x", "x0", "theta", "thetaL", "thetaN"):
        src, dst = getattr(ns2_idx, fam), getattr(ns1_idx, fam)
        for key, n in dst.items():
            val = assignment[src[key]]
            out[n] = float(round(val)) if fam in ("y", "x", "x0") else float(val)
    for n in list(ns1_idx.w.values()) + list(ns1_idx.r.values()) + list(ns1_idx.z.values()) + list(ns1_idx.rij.values()):
        out[n] = 0.0
    z_by_path = _by_path(ns2_idx.z)
    for k in instance.services:
        for s in range(0, k.length + 1):
            a, b = _segment_pair(assignment, ns2_idx, k, s)
            if 1 <= s < k.length:
                out[ns1_idx.w[(a, b, s, k.id)]] = 1.0
            allowed = set(pair_links(vnet, a, b))
            for p in range(1, ns2_idx.paths + 1):
                out[ns1_idx.r[(k.id, s, a, b, p)]] = float(assignment[ns2_idx.r[(k.id, s, p)]])
                for (l, kk, ss, pp), n in z_by_path[(k.id, s, p)]:
                    zv = float(round(assignment[n]))
                    fv = float(assignment[ns2_idx.rij[(l, kk, ss, pp)]])
                    if l not in allowed:
                        if zv or abs(fv) > tol:
                            raise MappingError(f"segment k={k.id},s={s} uses link {l} outside its host pair")
                        continue
                    out[ns1_idx.z[(l, k.id, s, a, b, p)]] = zv
                    out[ns1_idx.rij[(l, k.id, s, a, b, p)]] = fv
    return out


def map_ns1_to_ns2(assignment: Mapping[str, float], ns1_model: MilpModel, ns1_idx: Ns1IndexMap,
                   ns2_idx: Ns2IndexMap, instance: SlicingInstance, vnet: VirtualNetwork,
                   tol: float = 1e-6) -> Dict[str, float]:
    """Compact-model assignment built from a feasible natural one by summing
    the segment variables over host pairs (only one pair can be active)."""
    _require_feasible(ns1_model, assignment, tol)
    if ns1_idx.paths != ns2_idx.paths:
        raise MappingError("path counts of the two models differ")
    layout = Layout(instance, vnet)
    out: Dict[str, float] = {}
    for fam in ("y", "x", "x0", "theta", "thetaL", "thetaN"):
        src, dst = getattr(ns1_idx, fam), getattr(ns2_idx, fam)
        for key, n in dst.items():
            val = assignment[src[key]]
            out[n] = float(round(val)) if fam in ("y", "x", "x0") else float(val)
    for n in list(ns2_idx.r.values()) + list(ns2_idx.z.values()) + list(ns2_idx.rij.values()):
        out[n] = 0.0
    omega_by_path = _by_path(ns2_idx.omega)
    for k in instance.services:
        for s in range(0, k.length + 1):
            active = [(a, b) for a, b in segment_pairs(layout, k, s)
                      if round(assignment[ns1_idx.pair_indicator(k.id, s, a, b, k.length)]) == 1]
            if len(active) != 1:
                raise MappingError(f"segment k={k.id},s={s} has {len(active)} active host pairs")
            for (a, b) in segment_pairs(layout, k, s):
                for p in range(1, ns1_idx.paths + 1):
                    out[ns2_idx.r[(k.id, s, p)]] += float(assignment[ns1_idx.r[(k.id, s, a, b, p)]])
                    for l in pair_links(vnet, a, b):
                        zv = float(round(assignment[ns1_idx.z[(l, k.id, s, a, b, p)]]))
                        fv = float(assignment[ns1_idx.rij[(l, k.id, s, a, b, p)]])
                        key = (l, k.id, s, p)
                        if key not in ns2_idx.z:
                            if zv or abs(fv) > tol:
                                raise MappingError(f"segment k={k.id},s={s} uses clone link {l} "
                                                   "that cannot carry it")
                            continue
                        out[ns2_idx.z[key]] += zv
                        out[ns2_idx.rij[key]] += fv
            for p in range(1, ns2_idx.paths + 1):
                r = out[ns2_idx.r[(k.id, s, p)]]
                for (_, _, _, c, side), n in omega_by_path[(k.id, s, p)]:
                    xs = s if side == SRC else s + 1
                    out[n] = r * out[ns2_idx.x[(c, xs, k.id)]]
    return out
