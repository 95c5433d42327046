"""Strong join trees: constrained elimination, clique tree construction and
potential assignment."""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np

from .config import JOINTREE_MAX_MEMORY_MB
from .errors import ResourceLimitError, StructuralError
from .graph_algorithms import moralize
from .influence_diagram import InfluenceDiagram, PartialOrder
from .log import get_logger
from .potential import table_shape

logger = get_logger()

# phi and psi, float64 each
BYTES_PER_ENTRY = 16


@dataclass
class Clique:
    id: int
    scope: Tuple[int, ...]
    phi: np.ndarray
    psi: np.ndarray


@dataclass
class StrongJoinTree:
    """Clique tree rooted at its strong root.

    ``parent[c]`` is the neighbour of clique ``c`` toward the root (None for the
    root); the separator of ``c`` is the intersection with that neighbour.
    """

    diagram: InfluenceDiagram
    order: PartialOrder
    cliques: List[Clique]
    parent: List[Optional[int]]
    root: int

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(len(self.cliques)))
        g.add_edges_from((c, p) for c, p in enumerate(self.parent) if p is not None)
        return g

    @cached_property
    def children(self) -> Dict[int, List[int]]:
        out = {c: [] for c in range(len(self.cliques))}
        for c, p in enumerate(self.parent):
            if p is not None:
                out[p].append(c)
        return out

    @cached_property
    def separators(self) -> List[Tuple[int, ...]]:
        out = []
        for c, clique in enumerate(self.cliques):
            parent = self.parent[c]
            other = set() if parent is None else set(self.cliques[parent].scope)
            out.append(tuple(v for v in clique.scope if v in other))
        return out

    @cached_property
    def _routes(self) -> Dict[int, Dict[int, List[int]]]:
        # filled per source on first use
        return {}

    def separator(self, child: int) -> Tuple[int, ...]:
        return self.separators[child]

    def routes_from(self, source: int) -> Dict[int, List[int]]:
        """Tree paths from ``source`` to every clique, computed once per source."""
        routes = self._routes.get(source)
        if routes is None:
            routes = nx.single_source_shortest_path(self.graph, source)
            self._routes[source] = routes
        return routes

    def path(self, source: int, target: int) -> List[int]:
        return self.routes_from(source)[target]

    def distance(self, source: int, target: int) -> int:
        return len(self.path(source, target)) - 1

    def cliques_containing(self, var: int) -> List[int]:
        return [c.id for c in self.cliques if var in c.scope]

    def nearest_clique(self, var: int, origin: int) -> int:
        """Closest clique to ``origin`` that contains ``var`` (ties by id)."""
        hosts = self.cliques_containing(var)
        if not hosts:
            raise StructuralError(f"no clique contains variable {var}")
        return min(hosts, key=lambda c: (self.distance(origin, c), c))

    @property
    def max_clique_size(self) -> int:
        return max((len(c.scope) for c in self.cliques), default=0)

    @property
    def total_entries(self) -> int:
        return sum(c.phi.size for c in self.cliques)

    def post_order(self) -> List[int]:
        """Cliques with every child before its parent, root last."""
        return list(nx.dfs_postorder_nodes(self.graph, self.root))


def _fill_in(g: nx.Graph, v: int) -> int:
    neighbours = list(g.neighbors(v))
    return sum(
        1
        for i, a in enumerate(neighbours)
        for b in neighbours[i + 1 :]
        if not g.has_edge(a, b)
    )


def interaction_graph(diagram: InfluenceDiagram) -> nx.Graph:
    """Moral graph over chance and decision variables.

    Chance families and utility parent sets are married; information arcs
    into decisions are left out.
    """
    structural = nx.DiGraph()
    structural.add_nodes_from(diagram.chance_ids + diagram.decision_ids)
    for x in diagram.chance_ids:
        structural.add_edges_from((p, x) for p in diagram.parents(x))
    graph = moralize(structural)
    for u in diagram.utility_ids:
        parents = sorted(diagram.parents(u))
        graph.add_edges_from(
            (a, b) for i, a in enumerate(parents) for b in parents[i + 1 :]
        )
    return graph


def strong_elimination_order(diagram: InfluenceDiagram, po: PartialOrder) -> List[int]:
    """Eliminate groups in reverse partial order, min-fill within a group.

    Ties go to the lowest variable id.
    """
    graph = interaction_graph(diagram)
    order = []
    for group in reversed(po.groups):
        remaining = {group} if isinstance(group, int) else set(group)
        while remaining:
            v = min(remaining, key=lambda x: (_fill_in(graph, x), x))
            neighbours = list(graph.neighbors(v))
            graph.add_edges_from(
                (a, b) for i, a in enumerate(neighbours) for b in neighbours[i + 1 :]
            )
            graph.remove_node(v)
            remaining.remove(v)
            order.append(v)
    return order


def _elimination_cliques(diagram, order) -> Tuple[List[frozenset], List[Optional[int]]]:
    graph = interaction_graph(diagram)
    position = {v: i for i, v in enumerate(order)}
    scopes, parents = [], []
    for i, v in enumerate(order):
        neighbours = set(graph.neighbors(v))
        scopes.append(frozenset(neighbours | {v}))
        if neighbours:
            parents.append(min(position[n] for n in neighbours))
        elif i + 1 < len(order):
            parents.append(i + 1)
        else:
            parents.append(None)
        graph.add_edges_from(
            (a, b) for a in neighbours for b in neighbours if a < b
        )
        graph.remove_node(v)
    return scopes, parents


def _contract(scopes, parents) -> Tuple[List[frozenset], List[Optional[int]], int]:
    """Merge every clique nested inside its tree neighbour."""
    scopes = list(scopes)
    parents = list(parents)
    alive = set(range(len(scopes)))
    changed = True
    while changed:
        changed = False
        for i in sorted(alive):
            p = parents[i]
            if p is None:
                continue
            if not (scopes[i] <= scopes[p] or scopes[p] <= scopes[i]):
                continue
            # p keeps its place in the tree and takes the larger scope
            scopes[p] = scopes[p] | scopes[i]
            for j in alive:
                if parents[j] == i:
                    parents[j] = p
            alive.discard(i)
            changed = True
            break

    kept = sorted(alive)
    renumber = {old: new for new, old in enumerate(kept)}
    root = next(renumber[i] for i in kept if parents[i] is None)
    return (
        [scopes[i] for i in kept],
        [None if parents[i] is None else renumber[parents[i]] for i in kept],
        root,
    )


def check_memory(diagram: InfluenceDiagram, scopes, max_memory_mb: float) -> None:
    entries = sum(math.prod(diagram.cards[v] for v in scope) for scope in scopes)
    needed_mb = entries * BYTES_PER_ENTRY / 2**20
    if needed_mb > max_memory_mb:
        logger.error(f"Join tree needs {needed_mb:.1f} MB, budget is {max_memory_mb} MB")
        raise ResourceLimitError(
            f"join tree needs {needed_mb:.1f} MB, budget is {max_memory_mb} MB"
        )


def build_strong_join_tree(
    diagram: InfluenceDiagram,
    po: PartialOrder,
    max_memory_mb: float = JOINTREE_MAX_MEMORY_MB,
) -> StrongJoinTree:
    """Build the tree and assign every CPT and utility table to one covering clique."""
    order = strong_elimination_order(diagram, po)
    if order:
        scopes, parents = _elimination_cliques(diagram, order)
        scopes, parents, root = _contract(scopes, parents)
    else:
        scopes, parents, root = [frozenset()], [None], 0

    check_memory(diagram, scopes, max_memory_mb)

    cliques = []
    for i, scope in enumerate(scopes):
        ordered = tuple(sorted(scope))
        shape = table_shape(ordered, diagram.cards)
        cliques.append(Clique(i, ordered, np.ones(shape), np.zeros(shape)))

    def host(scope):
        covering = [c for c in cliques if set(scope) <= set(c.scope)]
        if not covering:
            names = diagram.names_of(scope)
            raise StructuralError(f"no clique covers the table over {names}")
        return min(covering, key=lambda c: (len(c.scope), c.id))

    for x in diagram.chance_ids:
        cpt = diagram.cpt(x)
        clique = host(cpt.scope)
        clique.phi = clique.phi * cpt.expand(clique.scope)
    for u in diagram.utility_ids:
        utility = diagram.utility(u)
        clique = host(utility.scope)
        clique.psi = clique.psi + utility.expand(clique.scope)

    tree = StrongJoinTree(diagram, po, cliques, parents, root)
    violations = verify_running_intersection(tree) + verify_strong_root(tree)
    if violations:
        for violation in violations:
            logger.error(f"Join tree check failed: {violation}")
        raise StructuralError("; ".join(violations))
    logger.info(
        f"Strong join tree built: {len(cliques)} cliques, "
        f"largest {tree.max_clique_size} variables, {tree.total_entries} entries"
    )
    return tree


def verify_running_intersection(tree: StrongJoinTree) -> List[str]:
    """Every variable's cliques must form a connected subtree."""
    violations = []
    variables = sorted({v for c in tree.cliques for v in c.scope})
    for v in variables:
        hosts = tree.cliques_containing(v)
        if not nx.is_connected(tree.graph.subgraph(hosts)):
            name = tree.diagram.variables[v].name
            violations.append(f"running intersection: cliques holding {name} are disconnected")
    return violations


def verify_strong_root(tree: StrongJoinTree) -> List[str]:
    """Separator variables must precede the rest of the child clique in the partial order."""
    violations = []
    rank = tree.order.rank
    for c, clique in enumerate(tree.cliques):
        if tree.parent[c] is None:
            continue
        separator = set(tree.separator(c))
        residual = set(clique.scope) - separator
        if not separator or not residual:
            continue
        if max(rank[v] for v in separator) > min(rank[v] for v in residual):
            violations.append(
                f"strong root: separator {tree.diagram.names_of(separator)} of clique {c} "
                f"does not precede {tree.diagram.names_of(residual)}"
            )
    return violations


def describe(tree: StrongJoinTree) -> str:
    """One clique per line: id, variables, neighbour toward the root and separator."""
    lines = []
    for c, clique in enumerate(tree.cliques):
        names = ", ".join(tree.diagram.names_of(clique.scope))
        if tree.parent[c] is None:
            lines.append(f"C{c} [{names}] root")
        else:
            separator = ", ".join(tree.diagram.names_of(tree.separator(c)))
            lines.append(f"C{c} [{names}] parent=C{tree.parent[c]} sep=[{separator}]")
    return "\n".join(lines)
