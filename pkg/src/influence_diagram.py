"""Influence diagrams: definition, validation, the decision partial order and
a brute-force evaluator used as the reference for every other solver."""

import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Dict, List, Mapping, Sequence, Tuple

import networkx as nx
import numpy as np

from .config import ENUMERATION_LIMIT, PROBABILITY_TOLERANCE
from .errors import DiagramValidationError, ResourceLimitError, ZeroProbabilityError
from .log import get_logger
from .policy import AndBranch, PolicyAndNode, PolicyLeaf, PolicyOrNode, PolicyTree
from .potential import Potential

logger = get_logger()

# variable id -> state index
Assignment = Dict[int, int]


class VariableKind(str, Enum):
    CHANCE = "chance"
    DECISION = "decision"
    UTILITY = "utility"


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    kind: VariableKind
    states: Tuple[str, ...] = ()
    parents: Tuple[int, ...] = ()

    @property
    def card(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class InfluenceDiagram:
    """A DAG of chance, decision and utility variables with their tables.

    ``cpts[x]`` is an array over ``parents(x) + (x,)``; ``utilities[u]`` is an
    array over ``parents(u)``. Variable ids are positions in ``variables``.
    """

    variables: Tuple[Variable, ...]
    cpts: Mapping[int, np.ndarray]
    utilities: Mapping[int, np.ndarray]
    decision_order: Tuple[int, ...]

    @cached_property
    def chance_ids(self) -> Tuple[int, ...]:
        return tuple(v.id for v in self.variables if v.kind is VariableKind.CHANCE)

    @cached_property
    def decision_ids(self) -> Tuple[int, ...]:
        return tuple(v.id for v in self.variables if v.kind is VariableKind.DECISION)

    @cached_property
    def utility_ids(self) -> Tuple[int, ...]:
        return tuple(v.id for v in self.variables if v.kind is VariableKind.UTILITY)

    @cached_property
    def cards(self) -> Dict[int, int]:
        return {v.id: v.card for v in self.variables}

    @cached_property
    def graph(self) -> nx.DiGraph:
        """The arc structure, one node per variable (utilities included)."""
        g = nx.DiGraph()
        g.add_nodes_from(v.id for v in self.variables)
        for v in self.variables:
            g.add_edges_from((p, v.id) for p in v.parents)
        return g

    def id_of(self, name: str) -> int:
        for v in self.variables:
            if v.name == name:
                return v.id
        raise KeyError(name)

    def names_of(self, ids) -> List[str]:
        return [self.variables[i].name for i in sorted(ids)]

    def parents(self, var: int) -> Tuple[int, ...]:
        return self.variables[var].parents

    def cpt(self, var: int) -> Potential:
        return Potential(self.variables[var].parents + (var,), self.cpts[var])

    def utility(self, var: int) -> Potential:
        return Potential(self.variables[var].parents, self.utilities[var])

    def with_decision_parents(self, parents: Mapping[int, Sequence[int]]) -> "InfluenceDiagram":
        """Copy of the diagram with the information arcs of some decisions replaced."""
        variables = tuple(
            replace(v, parents=tuple(parents[v.id])) if v.id in parents else v
            for v in self.variables
        )
        return InfluenceDiagram(variables, self.cpts, self.utilities, self.decision_order)

    def arcs(self) -> frozenset:
        return frozenset((p, v.id) for v in self.variables for p in v.parents)

    def information_arcs(self) -> frozenset:
        return frozenset((p, d) for d in self.decision_ids for p in self.variables[d].parents)


def check_assignment(diagram: InfluenceDiagram, assignment: Mapping[int, int]) -> None:
    """Raise ValueError when a state index is outside its variable's range."""
    for var, state in assignment.items():
        if not 0 <= state < diagram.cards[var]:
            raise ValueError(f"state {state} out of range for {diagram.variables[var].name}")


def validate(diagram: InfluenceDiagram) -> List[str]:
    """Return a list of invariant violations; an empty list means the diagram is valid."""
    violations = []
    variables = diagram.variables
    known = set(range(len(variables)))

    for position, v in enumerate(variables):
        if v.id != position:
            violations.append(f"ids: variable {v.name} has id {v.id} at position {position}")
        if v.kind is not VariableKind.UTILITY and not v.states:
            violations.append(f"states: {v.name} has no states")
        if v.kind is VariableKind.UTILITY and v.states:
            violations.append(f"states: utility {v.name} must not declare states")
        unknown = [p for p in v.parents if p not in known]
        if unknown:
            violations.append(f"parents: {v.name} refers to unknown ids {unknown}")
        if v.id in v.parents:
            violations.append(f"cycle: {v.name} is its own parent")
    if violations:
        return violations

    for v in variables:
        for p in v.parents:
            if variables[p].kind is VariableKind.UTILITY:
                violations.append(f"utility: {variables[p].name} has child {v.name}")

    graph = diagram.graph
    if not nx.is_directed_acyclic_graph(graph):
        cycle = nx.find_cycle(graph)
        names = [variables[u].name for u, _ in cycle] + [variables[cycle[0][0]].name]
        path = " -> ".join(names)
        violations.append(f"cycle: {path}")

    for x in diagram.chance_ids:
        table = diagram.cpts.get(x)
        name = variables[x].name
        expected = tuple(diagram.cards[p] for p in variables[x].parents) + (diagram.cards[x],)
        if table is None:
            violations.append(f"table: chance variable {name} has no CPT")
            continue
        if table.shape != expected:
            violations.append(f"table: CPT of {name} has shape {table.shape}, expected {expected}")
            continue
        if np.any(table < 0):
            violations.append(f"normalization: CPT of {name} has negative entries")
        sums = table.sum(axis=-1)
        if np.any(np.abs(sums - 1.0) > PROBABILITY_TOLERANCE):
            worst = float(sums.flat[np.argmax(np.abs(sums - 1.0))])
            violations.append(f"normalization: CPT row of {name} sums to {worst:.12g}")

    for u in diagram.utility_ids:
        table = diagram.utilities.get(u)
        name = variables[u].name
        expected = tuple(diagram.cards[p] for p in variables[u].parents)
        if table is None:
            violations.append(f"table: utility {name} has no table")
        elif table.shape != expected:
            violations.append(f"table: utility {name} has shape {table.shape}, expected {expected}")
        elif not np.all(np.isfinite(table)):
            violations.append(f"table: utility {name} has non-finite entries")

    order = list(diagram.decision_order)
    decisions = set(diagram.decision_ids)
    for d in order:
        if d not in decisions:
            violations.append(f"decision_order: id {d} is not a decision variable")
    for d in decisions:
        if order.count(d) != 1:
            violations.append(
                f"decision_order: {variables[d].name} appears {order.count(d)} times"
            )

    if nx.is_directed_acyclic_graph(graph):
        for j, dj in enumerate(order):
            if dj not in graph:
                continue
            later = set(order[j + 1 :])
            ancestors = nx.ancestors(graph, dj)
            for dk in later & ancestors:
                violations.append(
                    f"decision_order: {variables[dk].name} is an ancestor of earlier "
                    f"decision {variables[dj].name}"
                )
    return violations


def ensure_valid(diagram: InfluenceDiagram) -> None:
    violations = validate(diagram)
    if violations:
        for violation in violations:
            logger.error(f"Invalid diagram: {violation}")
        raise DiagramValidationError(violations)


def apply_no_forgetting(diagram: InfluenceDiagram) -> InfluenceDiagram:
    """Make every earlier decision and its information variables parents of later decisions."""
    parents: Dict[int, List[int]] = {}
    observed: List[int] = []
    for d in diagram.decision_order:
        current = list(diagram.parents(d))
        for var in observed:
            if var not in current:
                current.append(var)
        parents[d] = current
        for var in current + [d]:
            if var not in observed:
                observed.append(var)

    result = diagram.with_decision_parents(parents)
    if not nx.is_directed_acyclic_graph(result.graph):
        raise DiagramValidationError(
            ["cycle: no-forgetting arcs conflict with the decision order"]
        )
    return result


@dataclass(frozen=True)
class PartialOrder:
    """I_0 < D_1 < I_1 < ... < D_n < I_n over chance and decision variables."""

    info_sets: Tuple[frozenset, ...]
    decisions: Tuple[int, ...]

    @property
    def groups(self) -> List:
        """Alternating list [I_0, D_1, I_1, ..., D_n, I_n]."""
        out = [self.info_sets[0]]
        for k, d in enumerate(self.decisions):
            out.extend([d, self.info_sets[k + 1]])
        return out

    @cached_property
    def rank(self) -> Dict[int, int]:
        """Position of each variable's group in ``groups``."""
        ranks = {}
        for k, info in enumerate(self.info_sets):
            for x in info:
                ranks[x] = 2 * k
        for k, d in enumerate(self.decisions):
            ranks[d] = 2 * k + 1
        return ranks

    @property
    def observed(self) -> frozenset:
        """Chance variables observed before some decision."""
        return frozenset().union(*self.info_sets[:-1]) if self.decisions else frozenset()


def partial_order(diagram: InfluenceDiagram) -> PartialOrder:
    """Derive the information sets from the parents of the ordered decisions."""
    chance = set(diagram.chance_ids)
    seen = set()
    info_sets = []
    for d in diagram.decision_order:
        group = frozenset(p for p in diagram.parents(d) if p in chance and p not in seen)
        info_sets.append(group)
        seen |= group
    info_sets.append(frozenset(chance - seen))
    return PartialOrder(tuple(info_sets), tuple(diagram.decision_order))


class _ReferenceEvaluator:
    """Sums out chance variables with einsum for a fixed (partial) assignment."""

    def __init__(self, diagram: InfluenceDiagram):
        self.diagram = diagram
        self.graph = diagram.graph
        self.ancestors = {v: nx.ancestors(self.graph, v) for v in self.graph}

    def _relevant(self, targets) -> List[int]:
        closure = set(targets)
        for t in targets:
            closure |= self.ancestors[t]
        return sorted(x for x in closure if x in self.diagram.cpts)

    def _contract(self, factors: List[Potential]) -> float:
        labels = {}
        operands = []
        for factor in factors:
            operands.append(factor.values)
            operands.append([labels.setdefault(v, len(labels)) for v in factor.scope])
        if not operands:
            return 1.0
        return float(np.einsum(*operands, [], optimize="greedy"))

    def mass(self, evidence: Assignment) -> float:
        """P(evidence) under the given decisions (only ancestors of the evidence matter)."""
        chance = [v for v in evidence if v in self.diagram.cpts]
        factors = [self.diagram.cpt(x).slice(evidence) for x in self._relevant(chance)]
        return self._contract(factors)

    def weighted_utility(self, evidence: Assignment) -> float:
        """Sum over unobserved chance variables of P(X, evidence) times the total utility."""
        total = 0.0
        for u in self.diagram.utility_ids:
            targets = [v for v in evidence if v in self.diagram.cpts]
            targets += list(self.diagram.parents(u))
            factors = [self.diagram.cpt(x).slice(evidence) for x in self._relevant(targets)]
            factors.append(self.diagram.utility(u).slice(evidence))
            total += self._contract(factors)
        return total


def enumerate_meu(diagram: InfluenceDiagram) -> Tuple[float, PolicyTree]:
    """Exact MEU by direct recursion over the partial order.

    Observed chance variables are expanded one at a time as AND nodes, decisions
    as OR nodes; after the last decision the remaining chance variables are
    summed out. Ties between actions go to the lowest action index.
    """
    po = partial_order(diagram)
    layers: List[Tuple[str, int]] = []
    for k, d in enumerate(po.decisions):
        layers.extend(("and", x) for x in sorted(po.info_sets[k]))
        layers.append(("or", d))

    scenarios = math.prod(diagram.cards[v] for _, v in layers)
    if scenarios > ENUMERATION_LIMIT:
        raise ResourceLimitError(
            f"enumeration needs {scenarios} leaf scenarios, limit is {ENUMERATION_LIMIT}"
        )

    evaluator = _ReferenceEvaluator(diagram)
    evidence: Assignment = {}

    def visit(depth: int, mass: float):
        if depth == len(layers):
            return PolicyLeaf(evaluator.weighted_utility(evidence) / mass)
        kind, var = layers[depth]
        if kind == "or":
            best = None
            for action in range(diagram.cards[var]):
                evidence[var] = action
                child = visit(depth + 1, mass)
                del evidence[var]
                if best is None or child.value > best.value:
                    best = PolicyOrNode(var, action, child, child.value)
            return best
        node = PolicyAndNode((var,))
        for state in range(diagram.cards[var]):
            evidence[var] = state
            child_mass = evaluator.mass(evidence)
            if child_mass > 0.0:
                child = visit(depth + 1, child_mass)
                prob = child_mass / mass
                node.children.append(AndBranch((state,), prob, child))
                node.value += prob * child.value
            del evidence[var]
        return node

    if evaluator.mass({}) <= 0.0:
        raise ZeroProbabilityError("diagram assigns zero total probability")
    root = visit(0, 1.0)
    logger.debug(f"Enumerated {scenarios} scenarios, MEU {root.value:.9g}")
    return root.value, PolicyTree(root, root.value)
