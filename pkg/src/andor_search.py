"""Depth-first AND/OR search over the original decision problem, with
bounds and probabilities read incrementally from the upper-bound join tree."""

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import CheckpointError, StructuralError
from .influence_diagram import InfluenceDiagram, PartialOrder
from .log import get_logger
from .policy import AndBranch, PolicyAndNode, PolicyLeaf, PolicyOrNode, PolicyTree
from .propagation import JoinTreeEngine
from .strong_jointree import StrongJoinTree

logger = get_logger()

AND, OR = "and", "or"
EXHAUSTIVE, DFBNB = "exhaustive", "dfbnb"

# slack when checking that a bound covers the exact value
BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class SearchLayer:
    kind: str
    variables: Tuple[int, ...]
    clique: int
    observed: bool = True


@dataclass
class SearchPlan:
    """Layers in expansion order, each with the upper-bound clique that hosts it."""

    layers: List[SearchLayer]

    @property
    def expanded_layers(self) -> List[SearchLayer]:
        return [layer for layer in self.layers if layer.observed]

    def describe(self, diagram: InfluenceDiagram) -> str:
        parts = []
        for layer in self.layers:
            names = ", ".join(diagram.names_of(layer.variables))
            text = names if len(layer.variables) == 1 else f"({names})"
            parts.append(text if layer.observed else f"[{text}]")
        return " ".join(parts)


@dataclass
class SolveStats:
    expanded: int = 0
    policy: int = 0
    bounds: int = 0
    zeros: int = 0
    elapsed_ms: float = 0.0


@dataclass
class BoundViolation:
    decision: int
    action: int
    bound: float
    value: float


@dataclass
class SearchResult:
    meu: float
    policy: PolicyTree
    stats: SolveStats
    violations: List[BoundViolation] = field(default_factory=list)


def _group_layers(tree: StrongJoinTree, variables, start: int) -> Tuple[List[SearchLayer], int]:
    """Split one information set into clique-co-located groups, walking the tree greedily."""
    remaining = set(variables)
    layers = []
    current = start
    while remaining:
        options = [c for c in tree.cliques if remaining & set(c.scope)]
        if not options:
            raise StructuralError(f"no clique holds variables {sorted(remaining)}")
        best = min(
            options,
            key=lambda c: (tree.distance(current, c.id), -len(remaining & set(c.scope)), c.id),
        )
        group = tuple(sorted(remaining & set(best.scope)))
        layers.append(SearchLayer(AND, group, best.id))
        remaining -= set(group)
        current = best.id
    return layers, current


def plan_search_order(
    diagram: InfluenceDiagram, ub_tree: StrongJoinTree, po: PartialOrder
) -> SearchPlan:
    """Order the original partial order's variables into AND and OR layers.

    Each information set is split into groups sharing a clique of the
    upper-bound tree, chosen nearest the previous layer's host. The last
    information set is never observed and only appears as tail layers.
    """
    layers: List[SearchLayer] = []
    current = ub_tree.root
    for k, decision in enumerate(po.decisions):
        groups, current = _group_layers(ub_tree, po.info_sets[k], current)
        layers.extend(groups)
        current = ub_tree.nearest_clique(decision, current)
        layers.append(SearchLayer(OR, (decision,), current))
    tail, _ = _group_layers(ub_tree, po.info_sets[-1], current)
    layers.extend(SearchLayer(AND, g.variables, g.clique, observed=False) for g in tail)

    plan = SearchPlan(layers)
    logger.debug(f"Search plan: {plan.describe(diagram)}")
    return plan


class AndOrSearch:
    """One depth-first search over a plan.

    Args:
        engine: propagation engine over the upper-bound join tree
        plan: layer order from plan_search_order
        mode: "dfbnb" to prune with bounds, "exhaustive" to use infinite bounds
        verify_bounds: also explore pruned actions and record bounds below the
            exact value
    """

    def __init__(
        self,
        engine: JoinTreeEngine,
        plan: SearchPlan,
        mode: str = DFBNB,
        verify_bounds: bool = False,
    ):
        if mode not in (EXHAUSTIVE, DFBNB):
            raise ValueError(f"unknown search mode {mode!r}")
        self.engine = engine
        self.plan = plan
        self.mode = mode
        self.verify_bounds = verify_bounds
        self.layers = plan.expanded_layers
        self.violations: List[BoundViolation] = []
        self._check_plan()

    def _check_plan(self) -> None:
        cliques = self.engine.tree.cliques
        for layer in self.plan.layers:
            if not 0 <= layer.clique < len(cliques):
                raise StructuralError(f"plan refers to unknown clique {layer.clique}")
            if not set(layer.variables) <= set(cliques[layer.clique].scope):
                raise StructuralError(
                    f"clique {layer.clique} does not hold layer variables {layer.variables}"
                )

    def run(self) -> SearchResult:
        stats = SolveStats()
        started = time.perf_counter()
        if self.engine.depth:
            raise CheckpointError("search started with open checkpoints")

        token = self.engine.checkpoint()
        if any(layer.kind == OR for layer in self.layers):
            root = self._visit(0, stats)
        else:
            root = PolicyLeaf(self.engine.value())
            stats.expanded += 1
        if self.engine.depth != token:
            raise CheckpointError(
                f"{self.engine.depth - token} checkpoints left open after search"
            )
        # the tree goes back to its state before the search
        self.engine.restore(token)

        policy = PolicyTree(root, root.value)
        stats.policy = policy.node_count()
        stats.elapsed_ms = (time.perf_counter() - started) * 1000.0
        logger.info(
            f"{self.mode} search finished: meu {root.value:.9g}, expanded {stats.expanded}, "
            f"policy {stats.policy}, #bounds {stats.bounds}, #zeros {stats.zeros}"
        )
        return SearchResult(root.value, policy, stats, self.violations)

    def _visit(self, depth: int, stats: SolveStats):
        layer = self.layers[depth]
        stats.expanded += 1
        if layer.kind == AND:
            return self._expand_and(depth, layer, stats)
        if depth == len(self.layers) - 1:
            return self._expand_last_or(layer, stats)
        return self._expand_or(depth, layer, stats)

    def _expand_and(self, depth: int, layer: SearchLayer, stats: SolveStats) -> PolicyAndNode:
        engine = self.engine
        marginal = engine.query_marginal(layer.clique, layer.variables)
        node = PolicyAndNode(layer.variables)
        for states in np.ndindex(*marginal.table.shape):
            prob = float(marginal.table[states])
            if prob == 0.0:
                stats.zeros += 1
                continue
            token = engine.checkpoint()
            try:
                for var, state in zip(layer.variables, states):
                    engine.set_evidence(var, state, layer.clique)
                child = self._visit(depth + 1, stats)
            finally:
                engine.restore(token)
            node.children.append(AndBranch(tuple(states), prob, child))
            node.value += prob * child.value
        return node

    def _expand_last_or(self, layer: SearchLayer, stats: SolveStats) -> PolicyOrNode:
        decision = layer.variables[0]
        exact = self.engine.query_decision_bounds(layer.clique, decision)
        stats.expanded += len(exact.values)
        action = int(np.argmax(exact.values))
        leaf = PolicyLeaf(float(exact.values[action]))
        return PolicyOrNode(decision, action, leaf, leaf.value)

    def _child(self, depth: int, layer: SearchLayer, action: int, stats: SolveStats):
        engine = self.engine
        token = engine.checkpoint()
        try:
            engine.set_evidence(layer.variables[0], action, layer.clique)
            return self._visit(depth + 1, stats)
        finally:
            engine.restore(token)

    def _expand_or(self, depth: int, layer: SearchLayer, stats: SolveStats) -> PolicyOrNode:
        decision = layer.variables[0]
        if self.mode == DFBNB:
            bounds = self.engine.query_decision_bounds(layer.clique, decision).values
        else:
            card = self.engine.tree.diagram.cards[decision]
            bounds = np.full(card, math.inf)
        order = sorted(range(len(bounds)), key=lambda a: (-bounds[a], a))

        best: Optional[PolicyOrNode] = None
        pruned = []
        for position, action in enumerate(order):
            if best is not None and bounds[action] <= best.value:
                pruned = order[position:]
                stats.bounds += len(pruned)
                break
            child = self._child(depth, layer, action, stats)
            self._check_bound(decision, action, bounds[action], child.value)
            if best is None or child.value > best.value:
                best = PolicyOrNode(decision, action, child, child.value)

        if self.verify_bounds:
            scratch = SolveStats()
            for action in pruned:
                child = self._child(depth, layer, action, scratch)
                self._check_bound(decision, action, bounds[action], child.value)
        return best

    def _check_bound(self, decision: int, action: int, bound: float, value: float) -> None:
        if not self.verify_bounds:
            return
        if bound < value - BOUND_SLACK * max(1.0, abs(value)):
            logger.warning(
                f"Bound {bound:.12g} for action {action} of decision {decision} "
                f"is below the exact value {value:.12g}"
            )
            self.violations.append(BoundViolation(decision, action, float(bound), value))


def search(
    engine: JoinTreeEngine,
    plan: SearchPlan,
    mode: str = DFBNB,
    verify_bounds: bool = False,
) -> SearchResult:
    """Run exhaustive or branch-and-bound search and return meu, policy and stats."""
    return AndOrSearch(engine, plan, mode, verify_bounds).run()
