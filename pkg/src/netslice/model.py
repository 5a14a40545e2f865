"""Domain types for the network slicing problem.

Numeric instance data (capacities, delays, rates, budgets) is held as
``fractions.Fraction`` so that feasibility and objective checks on decoded
solutions can be carried out exactly.  Values are converted to ``float`` only
when a MILP model is assembled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

Number = Union[int, float, Fraction]
Link = Tuple[str, str]


def as_fraction(value: Number) -> Fraction:
    """Convert ints, floats and numeric strings to an exact ``Fraction``.

    Floats go through their shortest decimal repr, so ``0.1`` becomes 1/10
    rather than the binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numeric data")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a number")


@dataclass(frozen=True)
class PhysicalNetwork:
    nodes: Tuple[str, ...]
    links: Tuple[Link, ...]
    link_capacity: Mapping[Link, Fraction]
    link_delay: Mapping[Link, Fraction]
    cloud_nodes: Tuple[str, ...]
    node_capacity: Mapping[str, Fraction]
    processable: Mapping[str, FrozenSet[str]]

    def n_functions(self, v: str) -> int:
        return len(self.processable.get(v, ()))

    def out_links(self, i: str) -> List[Link]:
        return [l for l in self.links if l[0] == i]


@dataclass(frozen=True)
class ServiceRequest:
    """One service flow k with its function chain.

    ``rates[s]`` is the data rate after the s-th function has been applied
    (``rates[0]`` leaves the source).  ``nfv_delay`` is keyed by
    ``(cloud node, s)`` with ``s`` running from 1 to the chain length.
    """

    id: str
    source: str
    destination: str
    chain: Tuple[str, ...]
    rates: Tuple[Fraction, ...]
    latency_budget: Fraction
    nfv_delay: Mapping[Tuple[str, int], Fraction] = field(default_factory=dict)

    @property
    def length(self) -> int:
        return len(self.chain)

    def function(self, s: int) -> str:
        """Function id of the s-th chain position (1-based)."""
        return self.chain[s - 1]


@dataclass(frozen=True)
class SlicingInstance:
    network: PhysicalNetwork
    services: Tuple[ServiceRequest, ...]

    @property
    def ell_max(self) -> int:
        return max((k.length for k in self.services), default=0)

    def service(self, k: str) -> ServiceRequest:
        for svc in self.services:
            if svc.id == k:
                return svc
        raise KeyError(k)

    def capable_clouds(self, k: ServiceRequest, s: int) -> List[str]:
        f = k.function(s)
        return [v for v in self.network.cloud_nodes if f in self.network.processable.get(v, ())]

    def total_rate(self) -> Fraction:
        return sum((r for k in self.services for r in k.rates), Fraction(0))


@dataclass(frozen=True)
class ObjectiveWeights:
    sigma: Fraction = Fraction(1, 1000)
    beta1: Fraction = Fraction(2)
    beta2: Fraction = Fraction(1)
    delta: Fraction = Fraction(1, 100)

    def __post_init__(self):
        if not (self.beta1 > self.beta2 >= 0):
            raise ValueError("weights require beta1 > beta2 >= 0")
        if self.sigma < 0 or self.delta < 0:
            raise ValueError("sigma and delta must be nonnegative")


SegmentKey = Tuple[str, int]           # (k, s)
PathKey = Tuple[str, int, int]         # (k, s, p)


@dataclass
class SlicingSolution:
    """Domain-level answer to a slicing instance.

    ``paths[(k, s, p)]`` lists the virtual links of the p-th path of segment
    (k, s), in travel order.  Segments run from the host of function s (or
    the source for s=0) to the host of function s+1 (or the destination).
    """

    activated: Dict[str, int] = field(default_factory=dict)
    placement_physical: Dict[SegmentKey, str] = field(default_factory=dict)
    placement_virtual: Dict[SegmentKey, str] = field(default_factory=dict)
    paths: Dict[PathKey, List[Link]] = field(default_factory=dict)
    path_rate: Dict[PathKey, float] = field(default_factory=dict)
    link_rate: Dict[Tuple[str, int, int, Link], float] = field(default_factory=dict)
    hop_delay: Dict[SegmentKey, Number] = field(default_factory=dict)
    comm_delay: Dict[str, Number] = field(default_factory=dict)
    nfv_delay_total: Dict[str, Number] = field(default_factory=dict)

    def e2e_delay(self, k: str) -> Number:
        return self.comm_delay[k] + self.nfv_delay_total[k]

    def n_activated(self) -> int:
        return sum(self.activated.values())

    def objective(self, sigma: Number) -> Number:
        """Weighted objective: activated nodes plus sigma times total delay."""
        total = sum(self.e2e_delay(k) for k in self.comm_delay)
        return self.n_activated() + sigma * total


class IncompleteSolutionError(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str = ""

    def __str__(self):
        return f"{self.code}: {self.detail}" if self.detail else self.code

    @property
    def label(self) -> str:
        """Compact ``code[detail]`` form, e.g. ``e2e-latency[k=2]``."""
        return f"{self.code}[{self.detail}]" if self.detail else self.code


def validate_instance(instance: SlicingInstance) -> List[Violation]:
    """Structural checks on an instance.  Returns an empty list when valid."""
    out: List[Violation] = []
    net = instance.network
    nodes = set(net.nodes)
    clouds = set(net.cloud_nodes)

    if len(nodes) != len(net.nodes):
        out.append(Violation("duplicate-node"))
    if len(set(net.links)) != len(net.links):
        out.append(Violation("duplicate-link"))
    for (i, j) in net.links:
        if i not in nodes or j not in nodes:
            out.append(Violation("unknown-link-endpoint", f"({i},{j})"))
        if i == j:
            out.append(Violation("self-loop", f"({i},{j})"))
        for name, table in (("capacity", net.link_capacity), ("delay", net.link_delay)):
            value = table.get((i, j))
            if value is None:
                out.append(Violation(f"missing-link-{name}", f"({i},{j})"))
            elif value < 0:
                out.append(Violation(f"negative-link-{name}", f"({i},{j})"))
    if not clouds <= nodes:
        out.append(Violation("unknown-cloud-node", ",".join(sorted(clouds - nodes))))
    if set(net.node_capacity) != clouds:
        out.append(Violation("node-capacity-domain"))
    for v, mu in net.node_capacity.items():
        if mu < 0:
            out.append(Violation("negative-node-capacity", v))
    if not set(net.processable) <= clouds:
        out.append(Violation("processable-domain"))

    seen = set()
    for k in instance.services:
        if k.id in seen:
            out.append(Violation("duplicate-service-id", k.id))
        seen.add(k.id)
        if k.source not in nodes or k.destination not in nodes:
            out.append(Violation("unknown-endpoint", k.id))
        if k.source in clouds:
            out.append(Violation("source-in-cloud", k.id))
        if k.destination in clouds:
            out.append(Violation("destination-in-cloud", k.id))
        if not k.chain:
            out.append(Violation("empty-chain", k.id))
        if len(k.rates) != k.length + 1:
            out.append(Violation("rate-arity", k.id))
        if any(r <= 0 for r in k.rates):
            out.append(Violation("nonpositive-rate", k.id))
        if k.latency_budget < 0:
            out.append(Violation("negative-latency-budget", k.id))
        for s in range(1, k.length + 1):
            for v in instance.capable_clouds(k, s) if k.chain else []:
                d = k.nfv_delay.get((v, s))
                if d is None:
                    out.append(Violation("missing-nfv-delay", f"k={k.id},v={v},s={s}"))
                elif d < 0:
                    out.append(Violation("negative-nfv-delay", f"k={k.id},v={v},s={s}"))
    return out


def total_power(solution: SlicingSolution, weights: ObjectiveWeights,
                instance: SlicingInstance) -> Fraction:
    """Absolute power draw of the cloud network for ``solution``.

    Computed both as the direct per-node sum and as the affine form
    ``(beta1 - beta2) * sum(y) + beta2 * |V| + delta * total load``; the two
    must coincide for any complete solution.
    """
    for k in instance.services:
        for s in range(1, k.length + 1):
            if (k.id, s) not in solution.placement_physical:
                raise IncompleteSolutionError(f"no placement for k={k.id}, s={s}")
    clouds = instance.network.cloud_nodes
    y = {v: int(solution.activated.get(v, 0)) for v in clouds}

    load = {v: Fraction(0) for v in clouds}
    for k in instance.services:
        for s in range(1, k.length + 1):
            load[solution.placement_physical[(k.id, s)]] += k.rates[s]

    direct = sum(
        (weights.beta1 * y[v] + weights.delta * load[v] + weights.beta2 * (1 - y[v]) for v in clouds),
        Fraction(0),
    )
    demand = sum((k.rates[s] for k in instance.services for s in range(1, k.length + 1)), Fraction(0))
    affine = (weights.beta1 - weights.beta2) * sum(y.values()) + weights.beta2 * len(clouds) \
        + weights.delta * demand
    assert direct == affine, (direct, affine)
    return direct


def make_network(nodes: Sequence[str], links: Mapping[Link, Tuple[Number, Number]],
                 clouds: Mapping[str, Tuple[Number, Sequence[str]]]) -> PhysicalNetwork:
    """Convenience constructor.

    ``links`` maps (i, j) to (capacity, delay); ``clouds`` maps a cloud node
    to (capacity, processable functions).
    """
    return PhysicalNetwork(
        nodes=tuple(nodes),
        links=tuple(links),
        link_capacity={l: as_fraction(c) for l, (c, _) in links.items()},
        link_delay={l: as_fraction(d) for l, (_, d) in links.items()},
        cloud_nodes=tuple(clouds),
        node_capacity={v: as_fraction(mu) for v, (mu, _) in clouds.items()},
        processable={v: frozenset(fs) for v, (_, fs) in clouds.items()},
    )


def make_service(id: str, source: str, destination: str, chain: Sequence[str],
                 rates: Sequence[Number], latency_budget: Number,
                 nfv_delay: Optional[Mapping[Tuple[str, int], Number]] = None) -> ServiceRequest:
    return ServiceRequest(
        id=str(id),
        source=source,
        destination=destination,
        chain=tuple(chain),
        rates=tuple(as_fraction(r) for r in rates),
        latency_budget=as_fraction(latency_budget),
        nfv_delay={key: as_fraction(d) for key, d in (nfv_delay or {}).items()},
    )
