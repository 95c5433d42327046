"""Graph primitives over networkx graphs: relatives, moralization,
d-separation and minimum separating sets via max-flow."""

import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Hashable, Iterable, NamedTuple, Optional, Set, Tuple

import networkx as nx
from networkx.algorithms.flow import edmonds_karp

from .errors import InfeasibleSeparationError
from .log import get_logger

logger = get_logger()

INFINITE = float("inf")


class Relatives(NamedTuple):
    descendants: FrozenSet
    non_descendants: FrozenSet
    ancestors: FrozenSet
    family: FrozenSet


def relatives(g: nx.DiGraph, x: Hashable) -> Relatives:
    """de(x), nd(x), an(x) (all excluding x) and fa(x) = Pa(x) + {x}."""
    if x not in g:
        raise KeyError(f"unknown node {x!r}")
    de = frozenset(nx.descendants(g, x))
    nd = frozenset(g.nodes) - de - {x}
    an = frozenset(nx.ancestors(g, x))
    fa = frozenset(g.predecessors(x)) | {x}
    return Relatives(de, nd, an, fa)


def family(g: nx.DiGraph, nodes: Iterable) -> Set:
    """fa of a node set: the union of each node's family."""
    out = set()
    for x in nodes:
        out.add(x)
        out.update(g.predecessors(x))
    return out


def ancestral_set(g: nx.DiGraph, nodes: Iterable) -> Set:
    """The nodes together with all of their ancestors."""
    out = set(nodes)
    for x in list(out):
        out |= nx.ancestors(g, x)
    return out


def moralize(g: nx.DiGraph) -> nx.Graph:
    """Drop arc directions and marry every pair of co-parents."""
    moral = nx.Graph()
    moral.add_nodes_from(g.nodes)
    moral.add_edges_from(g.edges)
    for child in g.nodes:
        moral.add_edges_from(itertools.combinations(sorted(g.predecessors(child)), 2))
    return moral


def d_separated(g: nx.DiGraph, A: Iterable, B: Iterable, Z: Iterable = ()) -> bool:
    """Bayes-ball test: is every path between A and B blocked given Z?

    Raises ValueError when the three sets overlap.
    """
    A, B, Z = set(A), set(B), set(Z)
    if A & B or A & Z or B & Z:
        raise ValueError("d-separation query sets must be disjoint")
    if not A or not B:
        return True

    # colliders open when they or a descendant are observed
    opened = ancestral_set(g, Z)

    from_child, from_parent = "child", "parent"
    schedule = [(node, from_child) for node in A]
    visited = set()
    while schedule:
        node, direction = schedule.pop()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node in B:
            return False

        if direction == from_child and node not in Z:
            schedule.extend((parent, from_child) for parent in g.predecessors(node))
            schedule.extend((child, from_parent) for child in g.successors(node))
        if direction == from_parent:
            if node in opened:
                schedule.extend((parent, from_child) for parent in g.predecessors(node))
            if node not in Z:
                schedule.extend((child, from_parent) for child in g.successors(node))
    return True


@dataclass
class FlowNetwork:
    """Capacitated digraph; arcs without a capacity are unbounded."""

    source: int
    sink: int
    capacities: Dict[Tuple[int, int], float] = field(default_factory=dict)

    def add_arc(self, u: int, v: int, capacity: float = INFINITE) -> None:
        self.capacities[(u, v)] = capacity

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        nodes = {self.source, self.sink}
        for u, v in self.capacities:
            nodes.update((u, v))
        g.add_nodes_from(sorted(nodes))
        for (u, v), capacity in sorted(self.capacities.items()):
            if capacity == INFINITE:
                g.add_edge(u, v)
            else:
                g.add_edge(u, v, capacity=capacity)
        return g


@dataclass
class FlowResult:
    value: float
    source_side: FrozenSet[int]
    sink_side: FrozenSet[int]


def max_flow(net: FlowNetwork) -> FlowResult:
    """Maximum flow plus both canonical min-cut sides of the residual graph.

    ``source_side`` holds the nodes reachable from the source and ``sink_side``
    the nodes that still reach the sink. Raises InfeasibleSeparationError when
    an unbounded path joins source and sink.
    """
    g = net.to_networkx()
    try:
        residual = edmonds_karp(g, net.source, net.sink)
    except nx.NetworkXUnbounded as exc:
        raise InfeasibleSeparationError("an uncuttable path joins source and sink") from exc

    open_arcs = nx.DiGraph()
    open_arcs.add_nodes_from(residual.nodes)
    open_arcs.add_edges_from(
        (u, v) for u, v, attr in residual.edges(data=True) if attr["flow"] < attr["capacity"]
    )
    source_side = frozenset(nx.descendants(open_arcs, net.source)) | {net.source}
    sink_side = frozenset(nx.ancestors(open_arcs, net.sink)) | {net.sink}
    return FlowResult(residual.graph["flow_value"], source_side, sink_side)


def min_separating_set(
    g: nx.Graph,
    A: Iterable,
    B: Iterable,
    fixed: Iterable = (),
    candidates: Optional[Iterable] = None,
) -> FrozenSet:
    """Smallest node set containing ``fixed`` whose removal disconnects A from B.

    Each node v becomes an arc v_in -> v_out: capacity 1 for removable nodes,
    0 for fixed ones and unbounded for the rest. When several minimum sets
    exist the one closest to B (the sink-side cut) is returned. ``candidates``
    limits which nodes may be removed; by default every node outside A and B.
    """
    A, B, fixed = set(A), set(B), set(fixed)
    if A & B:
        raise ValueError("separated sets must be disjoint")
    if fixed & (A | B):
        raise ValueError("fixed nodes must lie outside both separated sets")
    removable = set(g.nodes) - A - B - fixed
    if candidates is not None:
        removable &= set(candidates)

    nodes = sorted(g.nodes)
    index = {v: i for i, v in enumerate(nodes)}
    source, sink = 0, 1

    def node_in(v):
        return 2 * index[v] + 2

    def node_out(v):
        return 2 * index[v] + 3

    net = FlowNetwork(source, sink)
    for v in nodes:
        if v in fixed:
            net.add_arc(node_in(v), node_out(v), 0.0)
        elif v in removable:
            net.add_arc(node_in(v), node_out(v), 1.0)
        else:
            net.add_arc(node_in(v), node_out(v))
    for u, v in g.edges:
        net.add_arc(node_out(u), node_in(v))
        net.add_arc(node_out(v), node_in(u))
    for a in A:
        net.add_arc(source, node_in(a))
    for b in B:
        net.add_arc(node_out(b), sink)

    result = max_flow(net)
    cut = {
        v
        for v in removable
        if node_out(v) in result.sink_side and node_in(v) not in result.sink_side
    }
    if len(cut) != round(result.value):
        raise InfeasibleSeparationError(
            f"cut of size {len(cut)} does not match flow value {result.value}"
        )
    logger.debug(f"Separator of size {len(cut)} with {len(fixed)} fixed nodes")
    return frozenset(cut | fixed)


def separates(g: nx.Graph, S: Iterable, A: Iterable, B: Iterable) -> bool:
    """True when no path joins A and B once S is removed."""
    S = set(S)
    rest = g.subgraph(v for v in g.nodes if v not in S)
    reachable = set()
    for a in A:
        if a in rest and a not in reachable:
            reachable |= nx.node_connected_component(rest, a)
    return not (reachable & set(B))
