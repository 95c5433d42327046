"""Message passing on a strong join tree.

The engine keeps one focus clique. Every separator message pointing toward
the focus is current, so moving the focus to a neighbour only needs the single
message across that edge. Probability messages run both ways; utility
messages only run toward the strong root. Every table write goes through a
log so checkpoints can be restored exactly.
"""

import hashlib
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .config import PROBABILITY_TOLERANCE
from .errors import (
    CheckpointError,
    InconsistentEvidenceError,
    StructuralError,
    ZeroProbabilityError,
)
from .log import get_logger
from .potential import align, indicator, sum_to
from .strong_jointree import StrongJoinTree

logger = get_logger()


@dataclass
class SeparatorMessage:
    scope: Tuple[int, ...]
    phi: np.ndarray
    psi: np.ndarray
    maximizers: Dict[int, np.ndarray] = field(default_factory=dict)


@dataclass
class Marginal:
    variables: Tuple[int, ...]
    table: np.ndarray
    zero_mass: bool = False


@dataclass
class DecisionBounds:
    decision: int
    values: np.ndarray
    zero_mass: bool = False


def _ratio(new: np.ndarray, old: np.ndarray) -> np.ndarray:
    if np.any((old == 0.0) & (new != 0.0)):
        raise InconsistentEvidenceError("message revives a configuration already ruled out")
    return np.divide(new, old, out=np.zeros_like(new, dtype=float), where=old != 0.0)


def marginalize_out(
    phi: np.ndarray,
    psi: np.ndarray,
    scope: Sequence[int],
    eliminate: Iterable[int],
    rank: Mapping[int, int],
    maximize: Iterable[int] = (),
    tol: float = PROBABILITY_TOLERANCE,
) -> SeparatorMessage:
    """Eliminate variables one at a time, latest in the partial order first.

    Chance variables (and decisions carrying evidence) are summed: phi by Σ,
    psi as the phi-weighted average with 0/0 taken as 0. Variables in
    ``maximize`` take the max of psi while phi, which must be constant over
    them at that point, is summed.
    """
    maximize = set(maximize)
    scope = list(scope)
    maximizers = {}
    for v in sorted(eliminate, key=lambda x: (rank[x], x), reverse=True):
        axis = scope.index(v)
        if v in maximize:
            spread = phi.max(axis=axis) - phi.min(axis=axis)
            scale = float(np.abs(phi).max(initial=0.0))
            if np.any(spread > tol * max(scale, 1e-300)):
                raise StructuralError(f"probability varies over free decision {v}")
            maximizers[v] = np.argmax(psi, axis=axis)
            psi = psi.max(axis=axis)
            phi = phi.sum(axis=axis)
        else:
            weighted = (phi * psi).sum(axis=axis)
            phi = phi.sum(axis=axis)
            psi = np.divide(weighted, phi, out=np.zeros_like(phi, dtype=float), where=phi != 0.0)
        scope.pop(axis)
    return SeparatorMessage(tuple(scope), phi, psi, maximizers)


class JoinTreeEngine:
    """Evidence, focus moves, queries and checkpoints over one strong join tree.

    Args:
        tree: the join tree; its clique tables are copied and never modified
        evidence: optional evidence entered into the initial tables before any
            message is sent (a from-scratch evaluation)
    """

    def __init__(self, tree: StrongJoinTree, evidence: Optional[Mapping[int, int]] = None):
        self.tree = tree
        self.rank = tree.order.rank
        self.decisions = set(tree.diagram.decision_ids)
        self._phi = [np.array(c.phi, dtype=float) for c in tree.cliques]
        self._psi = [np.array(c.psi, dtype=float) for c in tree.cliques]
        self._sep_phi: Dict[int, np.ndarray] = {}
        self._sep_psi: Dict[int, np.ndarray] = {}
        for c in range(len(tree.cliques)):
            if tree.parent[c] is not None:
                shape = tuple(tree.diagram.cards[v] for v in tree.separator(c))
                self._sep_phi[c] = np.ones(shape)
                self._sep_psi[c] = np.zeros(shape)
        self._evidence: Dict[int, int] = {}
        self._focus = tree.root
        self._log: List[Tuple[tuple, object]] = []
        self._marks: List[int] = []

        for var, state in sorted((evidence or {}).items()):
            host = min(tree.cliques_containing(var))
            self._evidence[var] = state
            scope = tree.cliques[host].scope
            self._phi[host] = self._phi[host] * indicator(scope, tree.diagram.cards, var, state)
        self.collect()

    # state access

    @property
    def focus(self) -> int:
        return self._focus

    @property
    def evidence(self) -> Dict[int, int]:
        return dict(self._evidence)

    @property
    def depth(self) -> int:
        return len(self._marks)

    def _read(self, location: tuple):
        kind = location[0]
        if kind == "phi":
            return self._phi[location[1]]
        if kind == "psi":
            return self._psi[location[1]]
        if kind == "sep_phi":
            return self._sep_phi[location[1]]
        if kind == "sep_psi":
            return self._sep_psi[location[1]]
        if kind == "evidence":
            return self._evidence.get(location[1])
        return self._focus

    def _store(self, location: tuple, value) -> None:
        kind = location[0]
        if kind == "phi":
            self._phi[location[1]] = value
        elif kind == "psi":
            self._psi[location[1]] = value
        elif kind == "sep_phi":
            self._sep_phi[location[1]] = value
        elif kind == "sep_psi":
            self._sep_psi[location[1]] = value
        elif kind == "evidence":
            if value is None:
                self._evidence.pop(location[1], None)
            else:
                self._evidence[location[1]] = value
        else:
            self._focus = value

    def _write(self, location: tuple, value) -> None:
        # tables are replaced, never mutated, so the log can keep references
        if self._marks:
            self._log.append((location, self._read(location)))
        self._store(location, value)

    # checkpoints

    def checkpoint(self) -> int:
        self._marks.append(len(self._log))
        return len(self._marks)

    def restore(self, token: int) -> None:
        if token != len(self._marks):
            raise CheckpointError(
                f"restore of checkpoint {token} while {len(self._marks)} are open"
            )
        mark = self._marks.pop()
        while len(self._log) > mark:
            location, value = self._log.pop()
            self._store(location, value)

    # message passing

    def _free_decisions(self, variables: Iterable[int]) -> List[int]:
        return [v for v in variables if v in self.decisions and v not in self._evidence]

    def absorb(
        self, clique: int, edge: int, message: SeparatorMessage, utility: bool = True
    ) -> None:
        """Update ``clique`` with a new message over the separator of ``edge``.

        phi is scaled by the ratio of new to old separator tables; psi (when
        ``utility`` is set) gains the difference. The separator then holds the
        new message.
        """
        separator = self.tree.separator(edge)
        scope = self.tree.cliques[clique].scope
        ratio = _ratio(message.phi, self._sep_phi[edge])
        self._write(("phi", clique), self._phi[clique] * align(ratio, separator, scope))
        self._write(("sep_phi", edge), message.phi)
        if utility:
            delta = message.psi - self._sep_psi[edge]
            self._write(("psi", clique), self._psi[clique] + align(delta, separator, scope))
            self._write(("sep_psi", edge), message.psi)

    def _send(self, source: int, target: int) -> None:
        tree = self.tree
        if tree.parent[source] == target:
            edge = source
            separator = tree.separator(edge)
            scope = tree.cliques[source].scope
            eliminate = [v for v in scope if v not in separator]
            message = marginalize_out(
                self._phi[source],
                self._psi[source],
                scope,
                eliminate,
                self.rank,
                self._free_decisions(eliminate),
            )
            self.absorb(target, edge, message)
        elif tree.parent[target] == source:
            edge = target
            separator = tree.separator(edge)
            scope = tree.cliques[source].scope
            phi = sum_to(self._phi[source], scope, separator)
            self.absorb(target, edge, SeparatorMessage(separator, phi, self._sep_psi[edge]), False)
        else:
            raise StructuralError(f"cliques {source} and {target} are not adjacent")

    def move_focus(self, target: int) -> None:
        """Pass messages along the tree path from the current focus to ``target``."""
        if not 0 <= target < len(self.tree.cliques):
            raise StructuralError(f"unknown clique {target}")
        if target == self._focus:
            return
        path = self.tree.path(self._focus, target)
        for source, nxt in zip(path, path[1:]):
            self._send(source, nxt)
        self._write(("focus",), target)

    def incremental_propagate(self, source: int, target: int) -> None:
        """Move the focus from ``source`` to ``target`` along the tree path."""
        if source != self._focus:
            self.move_focus(source)
        self.move_focus(target)

    def collect(self) -> float:
        """Send every upward message, leaves first, and return the root value."""
        for c in self.tree.post_order():
            if c != self.tree.root:
                self._send(c, self.tree.parent[c])
        self._write(("focus",), self.tree.root)
        return self.value()

    # evidence and queries

    def set_evidence(self, var: int, state: int, clique: Optional[int] = None) -> None:
        """Zero the entries of one host clique that disagree with ``var == state``.

        The host is ``clique`` when given, otherwise the clique holding ``var``
        nearest the current focus.
        """
        current = self._evidence.get(var)
        if current is not None:
            if current != state:
                raise InconsistentEvidenceError(
                    f"variable {var} already fixed to {current}, cannot set {state}"
                )
            return
        host = self.tree.nearest_clique(var, self._focus) if clique is None else clique
        scope = self.tree.cliques[host].scope
        if var not in scope:
            raise StructuralError(f"clique {host} does not contain variable {var}")
        self.move_focus(host)
        mask = indicator(scope, self.tree.diagram.cards, var, state)
        self._write(("phi", host), self._phi[host] * mask)
        self._write(("evidence", var), state)

    def value(self) -> float:
        """Expected utility given the entered evidence, free decisions maximized."""
        root = self.tree.root
        self.move_focus(root)
        scope = self.tree.cliques[root].scope
        message = marginalize_out(
            self._phi[root], self._psi[root], scope, scope, self.rank, self._free_decisions(scope)
        )
        if float(message.phi) == 0.0:
            raise ZeroProbabilityError("entered evidence has probability zero")
        return float(message.psi)

    def query_marginal(self, clique: int, variables: Sequence[int]) -> Marginal:
        """Normalized joint of ``variables`` given the evidence, read from ``clique``."""
        variables = tuple(variables)
        scope = self.tree.cliques[clique].scope
        missing = [v for v in variables if v not in scope]
        if missing:
            raise StructuralError(f"clique {clique} does not contain {missing}")
        self.move_focus(clique)
        table = sum_to(self._phi[clique], scope, variables)
        total = float(table.sum())
        if total == 0.0:
            return Marginal(variables, np.zeros_like(table), zero_mass=True)
        return Marginal(variables, table / total)

    def query_decision_bounds(self, clique: int, decision: int) -> DecisionBounds:
        """Expected utility of each action of a free decision given the evidence.

        All actions are evaluated in one upward pass from ``clique`` to the
        root: the decision stays as an extra axis of every message on the path
        instead of being entered as evidence once per action. Tables are not
        modified and the focus is returned to where it was.
        """
        if decision in self._evidence:
            raise StructuralError(f"decision {decision} already carries evidence")
        tree = self.tree
        root = tree.root
        host = root if decision in tree.cliques[root].scope else clique
        if decision not in tree.cliques[host].scope:
            raise StructuralError(f"clique {host} does not contain variable {decision}")

        token = self.checkpoint()
        try:
            self.move_focus(host)
            scope = tree.cliques[host].scope
            phi, psi = self._phi[host], self._psi[host]
            path = tree.path(host, root)
            for source, target in zip(path, path[1:]):
                scope, phi, psi = self._carry_up(source, target, decision, scope, phi, psi)
            eliminate = [v for v in scope if v != decision]
            message = marginalize_out(
                phi, psi, scope, eliminate, self.rank, self._free_decisions(eliminate)
            )
        finally:
            self.restore(token)

        card = tree.diagram.cards[decision]
        if np.any(message.phi == 0.0):
            return DecisionBounds(decision, np.zeros(card), zero_mass=True)
        return DecisionBounds(decision, np.asarray(message.psi, dtype=float))

    def _carry_up(self, source, target, decision, scope, phi, psi):
        """One upward message that keeps ``decision``, absorbed into a copy of ``target``."""
        tree = self.tree
        separator = tree.separator(source)
        keep = set(separator) | {decision}
        eliminate = [v for v in scope if v not in keep]
        message = marginalize_out(
            phi, psi, scope, eliminate, self.rank, self._free_decisions(eliminate)
        )
        old_phi = align(self._sep_phi[source], separator, message.scope)
        old_psi = align(self._sep_psi[source], separator, message.scope)
        ratio = _ratio(message.phi, np.broadcast_to(old_phi, message.phi.shape))

        target_scope = tree.cliques[target].scope
        if decision not in target_scope:
            target_scope = target_scope + (decision,)
        base = tree.cliques[target].scope
        phi = align(self._phi[target], base, target_scope) * align(
            ratio, message.scope, target_scope
        )
        psi = align(self._psi[target], base, target_scope) + align(
            message.psi - old_psi, message.scope, target_scope
        )
        return target_scope, phi, psi

    def state_digest(self) -> str:
        """Hash of every table, the evidence and the focus."""
        digest = hashlib.sha256()
        for table in self._phi + self._psi:
            digest.update(np.ascontiguousarray(table).tobytes())
        for key in sorted(self._sep_phi):
            digest.update(np.ascontiguousarray(self._sep_phi[key]).tobytes())
            digest.update(np.ascontiguousarray(self._sep_psi[key]).tobytes())
        digest.update(repr(sorted(self._evidence.items())).encode())
        digest.update(repr(self._focus).encode())
        return digest.hexdigest()
