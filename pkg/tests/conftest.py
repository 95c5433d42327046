"""Shared fixtures: hand-built diagrams, a random diagram generator and maze layouts."""

from pathlib import Path

import numpy as np
import pytest

from src.influence_diagram import InfluenceDiagram, Variable, VariableKind, apply_no_forgetting
from src.maze import MazeSpec, MazeVariant, build_maze_id, load_layout
from src.model_io import diagram_from_dict

MAZE_DIR = Path(__file__).resolve().parent.parent / "data" / "mazes"


def umbrella_model(observed: bool) -> dict:
    """P(good) = 0.4; action a1 pays 10 when good and 0 when bad, a2 always pays 2."""
    return {
        "variables": [
            {"name": "X", "kind": "chance", "states": ["good", "bad"], "parents": [],
             "table": [0.4, 0.6]},
            {"name": "D", "kind": "decision", "states": ["a1", "a2"],
             "parents": ["X"] if observed else []},
            {"name": "U", "kind": "utility", "parents": ["X", "D"], "table": [10, 2, 0, 2]},
        ],
        "decision_order": ["D"],
    }


@pytest.fixture
def unobserved_diagram():
    return diagram_from_dict(umbrella_model(observed=False))


@pytest.fixture
def observed_diagram():
    return diagram_from_dict(umbrella_model(observed=True))


def random_diagram(
    seed: int, n_chance: int = 6, n_decisions: int = 2, max_parents: int = 2
) -> InfluenceDiagram:
    """A valid random no-forgetting diagram with binary variables and one utility."""
    rng = np.random.default_rng(seed)
    kinds = [VariableKind.CHANCE] * n_chance + [VariableKind.DECISION] * n_decisions
    rng.shuffle(kinds)

    variables, cpts, decisions = [], {}, []
    for var, kind in enumerate(kinds):
        earlier = list(range(var))
        if kind is VariableKind.CHANCE:
            count = int(rng.integers(0, min(max_parents, len(earlier)) + 1))
            parents = tuple(sorted(rng.choice(earlier, size=count, replace=False).tolist()))
            variables.append(Variable(var, f"x{var}", kind, ("0", "1"), parents))
            shape = (2,) * len(parents)
            cpts[var] = rng.dirichlet(np.ones(2), size=shape or None)
        else:
            chance = [v for v in earlier if kinds[v] is VariableKind.CHANCE]
            count = int(rng.integers(0, min(2, len(chance)) + 1))
            parents = tuple(sorted(rng.choice(chance, size=count, replace=False).tolist()))
            variables.append(Variable(var, f"d{var}", kind, ("0", "1"), parents))
            decisions.append(var)

    u = len(variables)
    count = int(rng.integers(1, min(3, u) + 1))
    parents = tuple(sorted(rng.choice(u, size=count, replace=False).tolist()))
    variables.append(Variable(u, "u", VariableKind.UTILITY, (), parents))
    utilities = {u: np.round(rng.uniform(0.0, 10.0, size=(2,) * len(parents)), 3)}

    diagram = InfluenceDiagram(tuple(variables), cpts, utilities, tuple(decisions))
    return apply_no_forgetting(diagram)


@pytest.fixture
def random_diagrams():
    return [random_diagram(seed) for seed in range(40)]


@pytest.fixture
def maze_a_layout():
    return load_layout(str(MAZE_DIR / "maze_a.txt"))


@pytest.fixture
def maze_b_layout():
    return load_layout(str(MAZE_DIR / "maze_b.txt"))


@pytest.fixture
def maze_a_2(maze_a_layout):
    return build_maze_id(MazeSpec(maze_a_layout, 2, MazeVariant.ORIGINAL))


@pytest.fixture
def tiny_maze():
    """One open tile beside the goal."""
    return build_maze_id(MazeSpec((".*",), 1, MazeVariant.EXACT_BOTH))
