"""Policy trees: the retained subtree of the AND/OR search space."""

import math
from dataclasses import dataclass, field
from typing import List, Tuple, Union

from .errors import MalformedPolicyError

# Children of an AND node must carry probabilities summing to one
PROBABILITY_SLACK = 1e-9


@dataclass
class PolicyLeaf:
    utility: float

    @property
    def value(self) -> float:
        return self.utility


@dataclass
class AndBranch:
    states: Tuple[int, ...]
    prob: float
    child: "PolicyNode"


@dataclass
class PolicyAndNode:
    variables: Tuple[int, ...]
    children: List[AndBranch] = field(default_factory=list)
    value: float = 0.0


@dataclass
class PolicyOrNode:
    decision: int
    action: int
    child: "PolicyNode"
    value: float = 0.0


PolicyNode = Union[PolicyLeaf, PolicyAndNode, PolicyOrNode]


@dataclass
class PolicyTree:
    """An optimal strategy restricted to the histories it can reach."""

    root: PolicyNode
    value: float

    def node_count(self) -> int:
        """Count AND, OR and leaf nodes."""
        count = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            count += 1
            if isinstance(node, PolicyAndNode):
                stack.extend(branch.child for branch in node.children)
            elif isinstance(node, PolicyOrNode):
                stack.append(node.child)
        return count

    def to_json(self, diagram) -> dict:
        """Nested JSON form using the diagram's variable names and state labels."""
        return _node_to_json(self.root, diagram)


def _node_to_json(node, diagram):
    if isinstance(node, PolicyLeaf):
        return {"utility": node.utility}
    if isinstance(node, PolicyOrNode):
        variable = diagram.variables[node.decision]
        return {
            "decision": variable.name,
            "action": variable.states[node.action],
            "child": _node_to_json(node.child, diagram),
        }
    group = [diagram.variables[v] for v in node.variables]
    return {
        "group": [v.name for v in group],
        "children": [
            {
                "state": [v.states[s] for v, s in zip(group, branch.states)],
                "prob": branch.prob,
                "child": _node_to_json(branch.child, diagram),
            }
            for branch in node.children
        ],
    }


def evaluate_policy(diagram, policy: PolicyTree) -> float:
    """Recompute the root value bottom-up from leaf utilities and arc probabilities.

    Raises MalformedPolicyError when the tree refers to unknown variables or
    states, when AND probabilities do not sum to one, or when the recomputed
    value disagrees with the stored root value.
    """
    value = _evaluate(diagram, policy.root)
    if not math.isclose(value, policy.value, rel_tol=1e-9, abs_tol=1e-9):
        raise MalformedPolicyError(
            f"stored root value {policy.value!r} differs from recomputed {value!r}"
        )
    return value


def _evaluate(diagram, node) -> float:
    if isinstance(node, PolicyLeaf):
        return float(node.utility)
    if isinstance(node, PolicyOrNode):
        variable = _lookup(diagram, node.decision)
        if variable.kind.value != "decision":
            raise MalformedPolicyError(f"OR node on non-decision {variable.name}")
        if not 0 <= node.action < len(variable.states):
            raise MalformedPolicyError(f"action {node.action} out of range for {variable.name}")
        return _evaluate(diagram, node.child)
    if isinstance(node, PolicyAndNode):
        group = [_lookup(diagram, v) for v in node.variables]
        total_prob = 0.0
        value = 0.0
        for branch in node.children:
            if len(branch.states) != len(group):
                raise MalformedPolicyError("AND branch state arity differs from its group")
            for variable, state in zip(group, branch.states):
                if not 0 <= state < len(variable.states):
                    raise MalformedPolicyError(f"state {state} out of range for {variable.name}")
            if branch.prob < 0:
                raise MalformedPolicyError("negative arc probability")
            total_prob += branch.prob
            value += branch.prob * _evaluate(diagram, branch.child)
        if abs(total_prob - 1.0) > PROBABILITY_SLACK * max(1, len(node.children)):
            raise MalformedPolicyError(f"AND node probabilities sum to {total_prob!r}")
        return value
    raise MalformedPolicyError(f"unknown policy node {type(node).__name__}")


def _lookup(diagram, var_id):
    if not 0 <= var_id < len(diagram.variables):
        raise MalformedPolicyError(f"unknown variable id {var_id}")
    return diagram.variables[var_id]
