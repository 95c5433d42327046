"""Maze navigation benchmark: layouts, transition and sensor models, and the
N-stage influence diagram built from them."""

import os
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Tuple

import numpy as np

from .config import MAZE_DIRECTORY
from .errors import ModelFormatError
from .influence_diagram import InfluenceDiagram, Variable, VariableKind, apply_no_forgetting
from .log import get_logger

logger = get_logger()

WALL, OPEN, GOAL = "#", ".", "*"

# (column, row); rows grow southward
Cell = Tuple[int, int]

ACTIONS = ("N", "E", "S", "W", "stay")
DIRECTIONS = {"N": (0, -1), "E": (1, 0), "S": (0, 1), "W": (-1, 0)}
SIDES = {"N": ("E", "W"), "S": ("E", "W"), "E": ("N", "S"), "W": ("N", "S")}
BACKWARD = {"N": "S", "S": "N", "E": "W", "W": "E"}
SENSOR_STATES = ("wall", "no-wall")

MOVE_PROB = 0.89
STAY_PROB = 0.089
SIDE_PROB = 0.01
BACKWARD_PROB = 0.001
EXACT_STAY_PROB = 0.11

SENSOR_HIT = 0.9
SENSOR_FALSE_ALARM = 0.05


class MazeVariant(str, Enum):
    ORIGINAL = "original"
    EXACT_SENSORS = "exact-sensors"
    EXACT_BOTH = "exact-both"


@dataclass(frozen=True)
class MazeSpec:
    grid: Tuple[str, ...]
    stages: int
    variant: MazeVariant = MazeVariant.ORIGINAL

    @property
    def rows(self) -> int:
        return len(self.grid)

    @property
    def cols(self) -> int:
        return len(self.grid[0]) if self.grid else 0

    def tile(self, cell: Cell) -> str:
        x, y = cell
        if 0 <= y < self.rows and 0 <= x < self.cols:
            return self.grid[y][x]
        return WALL

    def is_wall(self, cell: Cell) -> bool:
        return self.tile(cell) == WALL

    def cells(self) -> List[Cell]:
        return [(x, y) for y in range(self.rows) for x in range(self.cols)]

    def start_cells(self) -> List[Cell]:
        return [c for c in self.cells() if self.tile(c) == OPEN]

    def goal_cells(self) -> List[Cell]:
        return [c for c in self.cells() if self.tile(c) == GOAL]


def parse_layout(text: str) -> Tuple[str, ...]:
    """Rows of '#', '.' and '*'; blank lines are ignored."""
    rows = tuple(line.strip() for line in text.splitlines() if line.strip())
    if not rows:
        raise ModelFormatError("maze layout is empty")
    width = len(rows[0])
    for number, row in enumerate(rows, start=1):
        if len(row) != width:
            raise ModelFormatError(f"maze row {number} has width {len(row)}, expected {width}")
        bad = set(row) - {WALL, OPEN, GOAL}
        if bad:
            raise ModelFormatError(f"maze row {number} has invalid tiles {sorted(bad)}")
    if not any(GOAL in row for row in rows):
        raise ModelFormatError("maze layout has no goal tile")
    if not any(OPEN in row for row in rows):
        raise ModelFormatError("maze layout has no open non-goal tile")
    return rows


def load_layout(path: str) -> Tuple[str, ...]:
    """Read a layout file; bare names are looked up in MAZE_DIRECTORY."""
    if not os.path.exists(path) and not os.path.dirname(path):
        candidate = os.path.join(MAZE_DIRECTORY, path)
        path = candidate if os.path.exists(candidate) else candidate + ".txt"
    try:
        with open(path) as f:
            return parse_layout(f.read())
    except OSError as exc:
        raise ModelFormatError(f"cannot read maze layout {path}: {exc}") from exc


def _step(cell: Cell, direction: str) -> Cell:
    dx, dy = DIRECTIONS[direction]
    return cell[0] + dx, cell[1] + dy


def transition_table(spec: MazeSpec, cell: Cell, action: str) -> Dict[Cell, float]:
    """Distribution over next cells when ``action`` is taken in ``cell``."""
    if spec.is_wall(cell):
        raise ValueError(f"cell {cell} is a wall")
    if action not in ACTIONS:
        raise ValueError(f"unknown action {action!r}")
    if action == "stay":
        return {cell: 1.0}

    if spec.variant is MazeVariant.EXACT_BOTH:
        outcomes = [(action, MOVE_PROB), (None, EXACT_STAY_PROB)]
    else:
        outcomes = [
            (action, MOVE_PROB),
            (None, STAY_PROB),
            (SIDES[action][0], SIDE_PROB),
            (SIDES[action][1], SIDE_PROB),
            (BACKWARD[action], BACKWARD_PROB),
        ]

    table: Dict[Cell, float] = {}
    for direction, prob in outcomes:
        target = cell if direction is None else _step(cell, direction)
        if spec.is_wall(target):
            continue
        table[target] = table.get(target, 0.0) + prob
    total = sum(table.values())
    return {target: prob / total for target, prob in table.items()}


def sensor_table(spec: MazeSpec, cell: Cell, direction: str) -> np.ndarray:
    """Distribution of one sensor over (wall, no-wall)."""
    if spec.is_wall(cell):
        raise ValueError(f"cell {cell} is a wall")
    wall = spec.is_wall(_step(cell, direction))
    if spec.variant is MazeVariant.ORIGINAL:
        p_wall = SENSOR_HIT if wall else SENSOR_FALSE_ALARM
    else:
        p_wall = 1.0 if wall else 0.0
    return np.array([p_wall, 1.0 - p_wall])


class _Builder:
    def __init__(self):
        self.variables: List[Variable] = []
        self.cpts: Dict[int, np.ndarray] = {}
        self.utilities: Dict[int, np.ndarray] = {}

    def add(self, name, kind, states=(), parents=(), table=None) -> int:
        var = len(self.variables)
        self.variables.append(Variable(var, name, kind, tuple(states), tuple(parents)))
        if kind is VariableKind.CHANCE:
            self.cpts[var] = table
        elif kind is VariableKind.UTILITY:
            self.utilities[var] = table
        return var


def _start_tables(spec: MazeSpec) -> Tuple[np.ndarray, np.ndarray]:
    joint = np.zeros((spec.cols, spec.rows))
    for x, y in spec.start_cells():
        joint[x, y] = 1.0
    joint /= joint.sum()
    p_x = joint.sum(axis=1)
    p_y = np.full((spec.cols, spec.rows), 1.0 / spec.rows)
    for x in range(spec.cols):
        if p_x[x] > 0:
            p_y[x] = joint[x] / p_x[x]
    return p_x, p_y


def _move_tables(spec: MazeSpec) -> Tuple[np.ndarray, np.ndarray]:
    """P(x' | x, y, d) and P(y' | x, y, d, x'); unreachable parent rows stay put."""
    cols, rows, actions = spec.cols, spec.rows, len(ACTIONS)
    p_x = np.zeros((cols, rows, actions, cols))
    p_y = np.zeros((cols, rows, actions, cols, rows))
    for x, y in spec.cells():
        for a, action in enumerate(ACTIONS):
            joint = np.zeros((cols, rows))
            if spec.is_wall((x, y)):
                joint[x, y] = 1.0
            else:
                for (nx_, ny_), prob in transition_table(spec, (x, y), action).items():
                    joint[nx_, ny_] += prob
            p_x[x, y, a] = joint.sum(axis=1)
            for x_next in range(cols):
                mass = p_x[x, y, a, x_next]
                if mass > 0:
                    p_y[x, y, a, x_next] = joint[x_next] / mass
                else:
                    p_y[x, y, a, x_next, y] = 1.0
    return p_x, p_y


def _sensor_cpt(spec: MazeSpec, direction: str) -> np.ndarray:
    table = np.zeros((spec.cols, spec.rows, len(SENSOR_STATES)))
    for x, y in spec.cells():
        if spec.is_wall((x, y)):
            table[x, y] = 1.0 / len(SENSOR_STATES)
        else:
            table[x, y] = sensor_table(spec, (x, y), direction)
    return table


def build_maze_id(spec: MazeSpec) -> InfluenceDiagram:
    """Influence diagram for ``spec.stages`` moves through the maze.

    Each stage i has location x_i, y_i, four sensors and a decision d_i; the
    final location x_N, y_N feeds the utility u (1 at a goal tile).
    """
    if spec.stages < 0:
        raise ValueError("stage count must be nonnegative")
    parse_layout("\n".join(spec.grid))

    builder = _Builder()
    xs = tuple(str(i) for i in range(spec.cols))
    ys = tuple(str(i) for i in range(spec.rows))
    start_x, start_y = _start_tables(spec)
    move_x, move_y = _move_tables(spec)
    sensors = {d: _sensor_cpt(spec, d) for d in ("N", "E", "S", "W")}

    x = builder.add("x_0", VariableKind.CHANCE, xs, (), start_x)
    y = builder.add("y_0", VariableKind.CHANCE, ys, (x,), start_y)
    decisions = []
    for i in range(spec.stages):
        readings = [
            builder.add(
                f"{direction.lower()}s_{i}",
                VariableKind.CHANCE,
                SENSOR_STATES,
                (x, y),
                sensors[direction],
            )
            for direction in ("N", "E", "S", "W")
        ]
        d = builder.add(f"d_{i}", VariableKind.DECISION, ACTIONS, readings)
        decisions.append(d)
        next_x = builder.add(f"x_{i + 1}", VariableKind.CHANCE, xs, (x, y, d), move_x)
        next_y = builder.add(f"y_{i + 1}", VariableKind.CHANCE, ys, (x, y, d, next_x), move_y)
        x, y = next_x, next_y

    goal = np.zeros((spec.cols, spec.rows))
    for gx, gy in spec.goal_cells():
        goal[gx, gy] = 1.0
    builder.add("u", VariableKind.UTILITY, (), (x, y), goal)

    diagram = InfluenceDiagram(
        tuple(builder.variables), builder.cpts, builder.utilities, tuple(decisions)
    )
    logger.info(
        f"Maze diagram: {spec.rows}x{spec.cols} grid, {spec.stages} stages, "
        f"variant {spec.variant.value}, {len(diagram.variables)} variables"
    )
    return apply_no_forgetting(diagram)
