"""Table helpers shared by CPTs, utility tables and clique potentials.

A table over scope (V_1, ..., V_m) is a numpy array whose axis i belongs to
V_i. Flattened in C order this gives the layout used in model files: the first
scope variable varies slowest and the last one fastest.
"""

from dataclasses import dataclass
from typing import Mapping, Sequence, Tuple

import numpy as np


def table_shape(scope: Sequence[int], cards: Mapping[int, int]) -> Tuple[int, ...]:
    """Shape of a table over ``scope``."""
    return tuple(cards[v] for v in scope)


def align(values: np.ndarray, scope: Sequence[int], target: Sequence[int]) -> np.ndarray:
    """Reshape ``values`` (over ``scope``) so it broadcasts against a table over ``target``.

    ``scope`` must be a subset of ``target``. Missing axes become length one.
    """
    if tuple(scope) == tuple(target):
        return values
    positions = [target.index(v) for v in scope]
    perm = np.argsort(positions, kind="stable")
    moved = np.transpose(values, perm) if len(perm) > 1 else values
    shape = [1] * len(target)
    for length, position in zip(moved.shape, sorted(positions)):
        shape[position] = length
    return moved.reshape(shape)


def indicator(scope: Sequence[int], cards: Mapping[int, int], var: int, state: int) -> np.ndarray:
    """0/1 mask over ``scope`` selecting ``var == state``, broadcastable over the scope."""
    shape = [1] * len(scope)
    axis = list(scope).index(var)
    shape[axis] = cards[var]
    mask = np.zeros(cards[var])
    mask[state] = 1.0
    return mask.reshape(shape)


def sum_to(values: np.ndarray, scope: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Sum ``values`` down to the variables in ``keep``, returned in ``keep`` order."""
    drop = tuple(i for i, v in enumerate(scope) if v not in keep)
    reduced = values.sum(axis=drop) if drop else values
    remaining = [v for v in scope if v in keep]
    if remaining == list(keep):
        return reduced
    return np.transpose(reduced, [remaining.index(v) for v in keep])


@dataclass(frozen=True)
class Potential:
    """A real-valued table over an ordered variable scope."""

    scope: Tuple[int, ...]
    values: np.ndarray

    def expand(self, target: Sequence[int]) -> np.ndarray:
        return align(self.values, self.scope, target)

    def slice(self, evidence: Mapping[int, int]) -> "Potential":
        """Fix the evidence variables in scope and drop their axes."""
        index = tuple(evidence[v] if v in evidence else slice(None) for v in self.scope)
        scope = tuple(v for v in self.scope if v not in evidence)
        return Potential(scope, self.values[index])
