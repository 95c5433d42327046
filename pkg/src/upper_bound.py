"""Upper-bound influence diagrams built from sufficient information sets.

Each decision D_j, from last to first, is given the smallest set of
non-descendants that separates the earlier history from the utilities it can
still affect. Information arcs that become non-requisite are then removed.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

from .errors import InfeasibleSeparationError
from .graph_algorithms import (
    ancestral_set,
    d_separated,
    family,
    min_separating_set,
    moralize,
    relatives,
)
from .influence_diagram import InfluenceDiagram, apply_no_forgetting, ensure_valid
from .log import get_logger

logger = get_logger()

# synthetic node joined to every member of fa(D_1..D_j)
HISTORY = -1


@dataclass
class SisResult:
    decision: int
    sis: frozenset
    candidate_pool: frozenset
    added_arcs: List[Tuple[int, int]] = field(default_factory=list)
    removed_arcs: List[Tuple[int, int]] = field(default_factory=list)
    widened: bool = False


def _future_utilities(diagram: InfluenceDiagram, decision: int) -> set:
    descendants = relatives(diagram.graph, decision).descendants
    return {u for u in diagram.utility_ids if u in descendants}


def is_requisite(diagram: InfluenceDiagram, decision: int, info: int) -> bool:
    """False when ``info`` is d-separated from the utilities downstream of the decision.

    The conditioning set is the decision together with its other parents.
    """
    parents = diagram.parents(decision)
    if info not in parents:
        raise ValueError(
            f"{diagram.variables[info].name} is not a parent of {diagram.variables[decision].name}"
        )
    utilities = _future_utilities(diagram, decision)
    given = ({decision} | set(parents)) - {info}
    return not d_separated(diagram.graph, {info}, utilities, given)


def reduce(diagram: InfluenceDiagram) -> InfluenceDiagram:
    """Delete non-requisite information arcs one at a time until none remain."""
    current = diagram
    while True:
        removed = None
        for decision in reversed(current.decision_order):
            for info in sorted(current.parents(decision)):
                if not is_requisite(current, decision, info):
                    removed = (info, decision)
                    break
            if removed:
                break
        if removed is None:
            return current
        info, decision = removed
        logger.debug(
            f"Removing non-requisite arc {current.variables[info].name} -> "
            f"{current.variables[decision].name}"
        )
        parents = [p for p in current.parents(decision) if p != info]
        current = current.with_decision_parents({decision: parents})


def _candidate_pool(diagram: InfluenceDiagram, j: int, utilities: set) -> set:
    order = diagram.decision_order
    pool = set(diagram.chance_ids) | set(diagram.decision_ids)
    for later in order[j + 1 :]:
        fa_later = family(diagram.graph, [later])
        pool = {
            v
            for v in pool
            if v in fa_later
            or (v not in utilities and d_separated(diagram.graph, {v}, utilities, fa_later))
        }
    return pool


def compute_sis(diagram: InfluenceDiagram, j: int) -> SisResult:
    """Minimum sufficient information set for the decision at position ``j``.

    ``j`` indexes ``decision_order`` from zero; decisions after it must already
    carry their own sets.
    """
    decision = diagram.decision_order[j]
    name = diagram.variables[decision].name
    graph = diagram.graph
    utilities = _future_utilities(diagram, decision)
    if not utilities:
        logger.info(f"No utility depends on {name}; empty sufficient information set")
        return SisResult(decision, frozenset(), frozenset())

    history = family(graph, diagram.decision_order[: j + 1])
    sources = history - {decision}
    descendants = relatives(graph, decision).descendants
    relevant = ancestral_set(graph, utilities | history)
    sinks = (descendants & ancestral_set(graph, utilities)) | utilities

    moral = moralize(graph.subgraph(relevant))
    moral.add_node(HISTORY)
    moral.add_edges_from((HISTORY, v) for v in sources)

    closed = apply_no_forgetting(diagram).graph
    admissible = relatives(closed, decision).non_descendants
    admissible = {v for v in admissible if v not in diagram.utility_ids} - sinks

    pool = _candidate_pool(diagram, j, utilities)
    widened = False
    try:
        separator = min_separating_set(
            moral, {HISTORY}, sinks, fixed={decision}, candidates=pool & admissible
        )
    except InfeasibleSeparationError:
        logger.warning(f"Candidate pool for {name} admits no separator; widening it")
        widened = True
        pool = set(admissible)
        separator = min_separating_set(
            moral, {HISTORY}, sinks, fixed={decision}, candidates=pool
        )

    sis = frozenset(separator - {decision})
    existing = set(diagram.parents(decision))
    added = [(v, decision) for v in sorted(sis) if v not in existing]
    logger.info(f"Sufficient information set for {name}: {diagram.names_of(sis)}")
    return SisResult(decision, sis, frozenset(pool & admissible), added, widened=widened)


def build_upper_bound_id(diagram: InfluenceDiagram) -> Tuple[InfluenceDiagram, List[SisResult]]:
    """Add every decision's sufficient information set, last decision first, reducing after each.

    Returns the upper-bound diagram and one SisResult per decision in decision order.
    """
    current = diagram
    results = []
    for j in reversed(range(len(diagram.decision_order))):
        result = compute_sis(current, j)
        if result.added_arcs:
            decision = result.decision
            parents = list(current.parents(decision)) + [v for v, _ in result.added_arcs]
            current = current.with_decision_parents({decision: parents})
        before = current.information_arcs()
        current = reduce(current)
        result.removed_arcs = sorted(before - current.information_arcs())
        results.append(result)

    ensure_valid(current)
    logger.info(
        f"Upper-bound diagram has {len(current.information_arcs())} information arcs, "
        f"original {len(diagram.information_arcs())}"
    )
    return current, list(reversed(results))
