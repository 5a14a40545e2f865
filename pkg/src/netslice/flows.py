"""Path decomposition of routed traffic and the path-count statistics.

A segment's link flows are split into source-to-sink paths with positive
rates.  Up to ``EXACT_LINK_LIMIT`` flow-carrying links the number of paths
is the true minimum (subset search over the simple paths of the support);
larger supports use repeated widest-path extraction, which needs at most one
path per flow-carrying link.  Circulations in the summed flow (two paths of
a segment crossing a link pair in opposite directions, say) carry no
source-to-sink traffic; they are cancelled before the paths are extracted.

End-to-end paths of a service are obtained by stitching its segments at the
hosting clones: every segment's paths are laid out, in nonincreasing-rate
order (ties by node sequence), as consecutive shares of the segment's total
rate, and each piece of the common refinement of these layouts is one
end-to-end path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from .model import Link, SlicingInstance, SlicingSolution

EXACT_LINK_LIMIT = 12
EXACT = "exact"
GREEDY = "greedy"

NodePath = Tuple[str, ...]


class DecompositionError(ValueError):
    pass


@dataclass
class Decomposition:
    paths: List[Tuple[NodePath, Fraction]]
    mode: str
    cycles_removed: int = 0

    @property
    def count(self) -> int:
        return len(self.paths)

    @property
    def total(self) -> Fraction:
        return sum((r for _, r in self.paths), Fraction(0))


def _rational(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(float(value)).limit_denominator(10 ** 6)


def _support(edge_flow: Mapping[Link, object]) -> Dict[Link, Fraction]:
    flow = {}
    for l, v in edge_flow.items():
        q = _rational(v)
        if q < 0:
            raise DecompositionError(f"negative flow {q} on link {l[0]}->{l[1]}")
        if q > 0:
            flow[l] = q
    return flow


def check_conservation(flow: Mapping[Link, Fraction], source: str, sink: str) -> Fraction:
    """Flow value leaving ``source``; raises on any unbalanced node."""
    net: Dict[str, Fraction] = {}
    for (i, j), v in flow.items():
        net[i] = net.get(i, Fraction(0)) - v
        net[j] = net.get(j, Fraction(0)) + v
    value = -net.get(source, Fraction(0))
    if source == sink:
        value = Fraction(0)
    for node, excess in sorted(net.items()):
        expected = Fraction(0)
        if source != sink:
            if node == source:
                expected = -value
            elif node == sink:
                expected = value
        if excess != expected:
            raise DecompositionError(f"flow not conserved at node {node} (excess {excess})")
    if source != sink and net.get(sink, Fraction(0)) != value:
        raise DecompositionError(f"flow not conserved at node {sink}")
    if value < 0:
        raise DecompositionError(f"flow runs from {sink} to {source}")
    return value


def simple_paths(links: Sequence[Link], source: str, sink: str) -> List[NodePath]:
    """All simple source-to-sink paths over ``links``, in lexicographic order."""
    adj: Dict[str, List[str]] = {}
    for i, j in links:
        adj.setdefault(i, []).append(j)
    for n in adj:
        adj[n].sort()
    out: List[NodePath] = []

    def walk(path: List[str], seen: set) -> None:
        node = path[-1]
        if node == sink:
            out.append(tuple(path))
            return
        for nxt in adj.get(node, []):
            if nxt not in seen:
                seen.add(nxt)
                path.append(nxt)
                walk(path, seen)
                path.pop()
                seen.remove(nxt)

    walk([source], {source})
    return out


def _path_links(path: NodePath) -> List[Link]:
    return list(zip(path[:-1], path[1:]))


def _solve_exact_weights(paths: Sequence[NodePath], flow: Mapping[Link, Fraction],
                         links: Sequence[Link]) -> Optional[List[Fraction]]:
    """Positive weights w with sum_p w_p * [l in p] == flow[l] for all
    links, if the path incidence vectors are independent and such w exist."""
    k = len(paths)
    row_of = {l: n for n, l in enumerate(links)}
    rows = [[Fraction(0)] * k + [flow[l]] for l in links]
    for c, path in enumerate(paths):
        for l in _path_links(path):
            if l not in row_of:
                return None
            rows[row_of[l]][c] = Fraction(1)
    # Gauss-Jordan elimination in exact arithmetic
    pivot_row = 0
    pivots = []
    for c in range(k):
        r = next((r for r in range(pivot_row, len(rows)) if rows[r][c] != 0), None)
        if r is None:
            return None     # dependent columns: never part of a minimum decomposition
        rows[pivot_row], rows[r] = rows[r], rows[pivot_row]
        piv = rows[pivot_row][c]
        rows[pivot_row] = [v / piv for v in rows[pivot_row]]
        for rr in range(len(rows)):
            if rr != pivot_row and rows[rr][c] != 0:
                factor = rows[rr][c]
                rows[rr] = [a - factor * b for a, b in zip(rows[rr], rows[pivot_row])]
        pivots.append(pivot_row)
        pivot_row += 1
    if any(row[-1] != 0 for row in rows[pivot_row:]):
        return None
    weights = [rows[p][-1] for p in pivots]
    if any(w <= 0 for w in weights):
        return None
    return weights


def _ordered(paths: List[Tuple[NodePath, Fraction]]) -> List[Tuple[NodePath, Fraction]]:
    return sorted(paths, key=lambda pr: (-pr[1], pr[0]))


def greedy_decompose(flow: Mapping[Link, Fraction], source: str, sink: str) -> List[Tuple[NodePath, Fraction]]:
    """Repeatedly remove the widest source-sink path (ties: smallest node
    sequence).  Every round empties at least one link."""
    residual = {l: v for l, v in flow.items() if v > 0}
    out: List[Tuple[NodePath, Fraction]] = []
    while source != sink:
        path, width = _widest_path(residual, source, sink)
        if path is None:
            break
        out.append((path, width))
        for l in _path_links(path):
            residual[l] -= width
            if residual[l] == 0:
                del residual[l]
    if residual:
        left = sorted(residual)
        raise DecompositionError(f"flow contains a circulation through link {left[0][0]}->{left[0][1]}")
    return out


def _widest_path(residual: Mapping[Link, Fraction], source: str, sink: str):
    # Label-setting search maximising the bottleneck; labels compare by
    # (width, then lexicographically smaller node sequence).
    adj: Dict[str, List[str]] = {}
    for i, j in residual:
        adj.setdefault(i, []).append(j)
    best: Dict[str, Tuple[Fraction, NodePath]] = {source: (Fraction(-1), (source,))}
    done: set = set()
    while True:
        open_nodes = [n for n in best if n not in done]
        if not open_nodes:
            return None, None
        node = min(open_nodes, key=lambda n: (-_width(best[n][0]), best[n][1]))
        done.add(node)
        width, path = best[node]
        if node == sink:
            return path, width
        for nxt in sorted(adj.get(node, [])):
            if nxt in done or nxt in path:
                continue
            w = residual[(node, nxt)] if width < 0 else min(width, residual[(node, nxt)])
            cand = (w, path + (nxt,))
            cur = best.get(nxt)
            if cur is None or w > cur[0] or (w == cur[0] and cand[1] < cur[1]):
                best[nxt] = cand


def _width(w: Fraction) -> Fraction:
    # the source's label is "unbounded", encoded as -1
    return Fraction(10 ** 18) if w < 0 else w


def exact_decompose(flow: Mapping[Link, Fraction], source: str, sink: str,
                    upper: Optional[int] = None) -> Optional[List[Tuple[NodePath, Fraction]]]:
    """Minimum-cardinality decomposition by subset search (None if no
    decomposition with fewer than ``upper`` paths exists)."""
    links = sorted(flow)
    candidates = simple_paths(links, source, sink)
    limit = len(links) if upper is None else min(upper - 1, len(links))
    for k in range(1, limit + 1):
        for subset in combinations(candidates, k):
            covered = {l for p in subset for l in _path_links(p)}
            if len(covered) != len(links):
                continue
            weights = _solve_exact_weights(subset, flow, links)
            if weights is not None:
                return list(zip(subset, weights))
    return None


def cancel_cycles(flow: Mapping[Link, Fraction]) -> Tuple[Dict[Link, Fraction], int]:
    """Remove circulations: while the support has a directed cycle, subtract
    its bottleneck rate along it.  Returns the acyclic flow (same net flow
    at every node) and the number of cycles removed."""
    residual = {l: v for l, v in flow.items() if v > 0}
    removed = 0
    while True:
        g = nx.DiGraph(sorted(residual))
        try:
            cycle = nx.find_cycle(g)
        except nx.NetworkXNoCycle:
            return residual, removed
        links = [(i, j) for i, j in cycle]
        width = min(residual[l] for l in links)
        for l in links:
            residual[l] -= width
            if residual[l] == 0:
                del residual[l]
        removed += 1


def decompose(edge_flow: Mapping[Link, object], source: str, sink: str,
              exact_limit: int = EXACT_LINK_LIMIT, links: Optional[Sequence[Link]] = None) -> Decomposition:
    """Split a single-commodity flow into source-to-sink paths.

    ``edge_flow`` maps links to rates (floats are read to within 1e-6).
    ``links``, when given, is the set of links that may carry flow.
    The returned paths are in nonincreasing-rate order; circulations are
    cancelled first (``cycles_removed`` counts them).
    """
    flow = _support(edge_flow)
    if links is not None:
        allowed = set(links)
        stray = sorted(l for l in flow if l not in allowed)
        if stray:
            raise DecompositionError(f"flow on unknown link {stray[0][0]}->{stray[0][1]}")
    check_conservation(flow, source, sink)
    flow, cycles = cancel_cycles(flow)
    if not flow:
        return Decomposition([], EXACT, cycles)
    greedy = greedy_decompose(flow, source, sink)
    if len(flow) > exact_limit:
        return Decomposition(_ordered(greedy), GREEDY, cycles)
    better = exact_decompose(flow, source, sink, upper=len(greedy))
    return Decomposition(_ordered(better if better is not None else greedy), EXACT, cycles)


def stitch(segments: Sequence[Sequence[Tuple[NodePath, Fraction]]], rate: Fraction) -> List[Tuple[NodePath, Fraction]]:
    """End-to-end paths from consecutive segment decompositions.

    Each segment is laid out as shares of its own total in the given order;
    pieces of the common refinement become end-to-end paths whose rate is
    their share of ``rate``.
    """
    layouts = []
    for seg in segments:
        total = sum((r for _, r in seg), Fraction(0))
        if total <= 0:
            raise DecompositionError("segment without flow")
        acc = Fraction(0)
        bounds = []
        for path, r in seg:
            acc += r / total
            bounds.append((acc, path))
        layouts.append(bounds)
    cuts = sorted({b for layout in layouts for b, _ in layout})
    out = []
    prev = Fraction(0)
    for cut in cuts:
        nodes: List[str] = []
        for layout in layouts:
            path = next(p for b, p in layout if b >= cut)
            if nodes and nodes[-1] != path[0]:
                raise DecompositionError(f"segments do not meet: {nodes[-1]} vs {path[0]}")
            nodes.extend(path if not nodes else path[1:])
        out.append((tuple(nodes), (cut - prev) * rate))
        prev = cut
    return out


@dataclass
class PathStats:
    nump: Dict[str, int] = field(default_factory=dict)
    dr: Dict[str, Fraction] = field(default_factory=dict)
    modes: Dict[str, str] = field(default_factory=dict)
    end_to_end: Dict[str, List[Tuple[NodePath, Fraction]]] = field(default_factory=dict)

    @property
    def max_nump(self) -> int:
        return max(self.nump.values(), default=0)

    @property
    def min_dr(self) -> Optional[Fraction]:
        return min(self.dr.values(), default=None)


def segment_flow(solution: SlicingSolution, k: str, s: int) -> Dict[Link, Fraction]:
    """Link flows of segment (k, s) rebuilt from the solution's paths."""
    flow: Dict[Link, Fraction] = {}
    for (kk, ss, p), path in solution.paths.items():
        if (kk, ss) != (k, s):
            continue
        r = _rational(solution.path_rate.get((kk, ss, p), 0))
        if r == 0:
            continue
        for l in path:
            flow[l] = flow.get(l, Fraction(0)) + r
    return flow


def segment_ends(solution: SlicingSolution, k, s: int) -> Tuple[str, str]:
    start = k.source if s == 0 else solution.placement_virtual[(k.id, s)]
    end = k.destination if s == k.length else solution.placement_virtual[(k.id, s + 1)]
    return start, end


def path_stats(solution: SlicingSolution, instance: SlicingInstance,
               exact_limit: int = EXACT_LINK_LIMIT) -> PathStats:
    """NUMP (end-to-end path count) and DR (smallest path rate, measured
    at the source) of every service, plus which decomposition mode ran."""
    stats = PathStats()
    for k in instance.services:
        segs = []
        modes = set()
        for s in range(0, k.length + 1):
            start, end = segment_ends(solution, k, s)
            dec = decompose(segment_flow(solution, k.id, s), start, end, exact_limit)
            if not dec.paths:
                dec = Decomposition([((start,), Fraction(1))], EXACT)
            segs.append(dec.paths)
            modes.add(dec.mode)
        e2e = stitch(segs, Fraction(k.rates[0]))
        stats.end_to_end[k.id] = e2e
        stats.nump[k.id] = len(e2e)
        stats.dr[k.id] = min(r for _, r in e2e)
        stats.modes[k.id] = GREEDY if GREEDY in modes else EXACT
    return stats


def reduce_paths(solution: SlicingSolution, instance: SlicingInstance,
                 link_delay: Mapping[Link, Fraction], P: int) -> Optional[SlicingSolution]:
    """The same placement and link flows written with at most ``P`` paths
    per segment, or None when some segment needs more.

    Each segment keeps its summed link flows; they are decomposed again
    (see ``decompose``) and the segment delays are recomputed from the new
    paths.  The result still has to be checked:
    the new paths may be longer than the old ones.
    """
    out = SlicingSolution(activated=dict(solution.activated),
                          placement_physical=dict(solution.placement_physical),
                          placement_virtual=dict(solution.placement_virtual),
                          nfv_delay_total=dict(solution.nfv_delay_total))
    for k in instance.services:
        comm = Fraction(0)
        for s in range(0, k.length + 1):
            start, end = segment_ends(solution, k, s)
            dec = decompose(segment_flow(solution, k.id, s), start, end)
            if not dec.paths or dec.count > P:
                return None
            delay = Fraction(0)
            for p, (nodes, rate) in enumerate(dec.paths, start=1):
                walk = _path_links(nodes)
                out.paths[(k.id, s, p)] = walk
                out.path_rate[(k.id, s, p)] = float(rate)
                for l in walk:
                    out.link_rate[(k.id, s, p, l)] = float(rate)
                delay = max(delay, sum((Fraction(link_delay[l]) for l in walk), Fraction(0)))
            out.hop_delay[(k.id, s)] = delay
            comm += delay
        out.comm_delay[k.id] = comm
    return out
