"""Virtual network with single-function cloud clones.

Every physical cloud node ``v`` becomes a plain routing node and gets
``m_v = min(n_v, ell_max)`` clones ``v#1 .. v#m_v``.  Each clone hangs off
``v`` through a zero-delay link pair, so a flow may visit ``v`` several times
to have several of its functions processed there while each clone processes
at most one function of a given flow.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, List, Mapping, Tuple

from .model import Link, SlicingInstance


def clone_id(v: str, t: int) -> str:
    return f"{v}#{t}"


@dataclass(frozen=True)
class VirtualNetwork:
    nodes: Tuple[str, ...]
    links: Tuple[Link, ...]
    physical_nodes: Tuple[str, ...]
    physical_links: Tuple[Link, ...]
    clones: Mapping[str, Tuple[str, ...]]
    anchor: Mapping[str, str]
    link_capacity: Mapping[Link, Fraction]
    link_delay: Mapping[Link, Fraction]
    clone_processable: Mapping[str, FrozenSet[str]]
    infinite_capacity: Fraction

    @property
    def clone_nodes(self) -> Tuple[str, ...]:
        return tuple(c for v in self.clones for c in self.clones[v])

    def is_clone(self, node: str) -> bool:
        return node in self.anchor

    def parent(self, clone: str) -> str:
        return self.anchor[clone]

    def clone_links(self, clone: str) -> Tuple[Link, Link]:
        """(outgoing, incoming) link of a clone."""
        n = self.anchor[clone]
        return (clone, n), (n, clone)

    def is_clone_link(self, link: Link) -> bool:
        return link[0] in self.anchor or link[1] in self.anchor

    def out_adjacency(self) -> Dict[str, List[str]]:
        adj: Dict[str, List[str]] = {n: [] for n in self.nodes}
        for i, j in self.links:
            adj[i].append(j)
        return adj

    def clones_for(self, instance: SlicingInstance, k, s: int) -> List[str]:
        """Clones able to host the s-th function of service ``k``."""
        f = k.function(s)
        return [c for v in self.clones for c in self.clones[v] if f in self.clone_processable[c]]


def infinite_capacity_surrogate(instance: SlicingInstance) -> Fraction:
    """Total data rate of all flow segments; no clone link can carry more."""
    return sum((r for k in instance.services for r in k.rates), Fraction(0))


def build_virtual_network(instance: SlicingInstance) -> VirtualNetwork:
    net = instance.network
    ell_max = instance.ell_max
    big = infinite_capacity_surrogate(instance)

    clones: Dict[str, Tuple[str, ...]] = {}
    anchor: Dict[str, str] = {}
    processable: Dict[str, FrozenSet[str]] = {}
    new_links: List[Link] = []
    capacity = dict(net.link_capacity)
    delay = dict(net.link_delay)
    for v in net.cloud_nodes:
        m = min(net.n_functions(v), ell_max)
        ids = tuple(clone_id(v, t) for t in range(1, m + 1))
        clones[v] = ids
        for c in ids:
            anchor[c] = v
            processable[c] = frozenset(net.processable.get(v, ()))
            for link in ((v, c), (c, v)):
                new_links.append(link)
                capacity[link] = big
                delay[link] = Fraction(0)

    clone_nodes = tuple(anchor)
    clash = set(clone_nodes) & set(net.nodes)
    if clash:
        raise ValueError(f"clone ids collide with physical node ids: {sorted(clash)}")
    return VirtualNetwork(
        nodes=tuple(net.nodes) + clone_nodes,
        links=tuple(net.links) + tuple(new_links),
        physical_nodes=tuple(net.nodes),
        physical_links=tuple(net.links),
        clones=clones,
        anchor=anchor,
        link_capacity=capacity,
        link_delay=delay,
        clone_processable=processable,
        infinite_capacity=big,
    )


def to_dot(vnet: VirtualNetwork) -> str:
    """Graphviz rendering: clones grouped per physical cloud, delays on edges."""
    lines = ["digraph virtual {", "  rankdir=LR;"]
    for n in vnet.physical_nodes:
        lines.append(f'  "{n}";')
    for v, ids in vnet.clones.items():
        if not ids:
            continue
        lines.append(f'  subgraph "cluster_{v}" {{')
        lines.append(f'    label="{v}";')
        for c in ids:
            lines.append(f'    "{c}" [shape=diamond];')
        lines.append("  }")
    for (i, j) in vnet.links:
        lines.append(f'  "{i}" -> "{j}" [label="{vnet.link_delay[(i, j)]}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
