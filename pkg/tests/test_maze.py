import numpy as np
import pytest

from src.errors import ModelFormatError
from src.graph_algorithms import d_separated
from src.influence_diagram import ensure_valid, enumerate_meu
from src.maze import (
    ACTIONS,
    MazeSpec,
    MazeVariant,
    build_maze_id,
    load_layout,
    parse_layout,
    sensor_table,
    transition_table,
)
from src.policy import PolicyOrNode
from tests.conftest import MAZE_DIR

MAZE_A = ("..#*", ".#..", "....")


def test_layout_files_load(maze_a_layout, maze_b_layout):
    assert maze_a_layout == MAZE_A
    assert maze_b_layout == ("*..#", ".#..", "...#")


def test_bare_layout_names(monkeypatch):
    monkeypatch.setattr("src.maze.MAZE_DIRECTORY", str(MAZE_DIR))
    assert load_layout("maze_a") == MAZE_A
    with pytest.raises(ModelFormatError):
        load_layout("no_such_maze")


@pytest.mark.parametrize(
    "text",
    ["", "..*\n..", "..x*", "...#", "*#"],
    ids=["empty", "ragged", "bad-tile", "no-goal", "no-open"],
)
def test_bad_layouts(text):
    with pytest.raises(ModelFormatError):
        parse_layout(text)


def test_noisy_move_into_open_cell():
    spec = MazeSpec(MAZE_A, 1)
    table = transition_table(spec, (0, 2), "N")
    # west and backward targets are outside the grid
    total = 0.89 + 0.089 + 0.01
    assert table[(0, 1)] == pytest.approx(0.89 / total)
    assert table[(0, 2)] == pytest.approx(0.089 / total)
    assert table[(1, 2)] == pytest.approx(0.01 / total)
    assert sum(table.values()) == pytest.approx(1.0)


def test_move_against_wall_mostly_stays():
    spec = MazeSpec(MAZE_A, 1)
    table = transition_table(spec, (1, 0), "N")
    assert set(table) == {(1, 0), (0, 0)}
    assert table[(1, 0)] == pytest.approx(0.089 / 0.099)


def test_exact_moves():
    spec = MazeSpec(MAZE_A, 1, MazeVariant.EXACT_BOTH)
    assert transition_table(spec, (0, 2), "N") == pytest.approx({(0, 1): 0.89, (0, 2): 0.11})
    assert transition_table(spec, (0, 0), "N") == pytest.approx({(0, 0): 1.0})
    assert transition_table(spec, (0, 0), "stay") == {(0, 0): 1.0}


def test_transition_errors():
    spec = MazeSpec(MAZE_A, 1)
    with pytest.raises(ValueError):
        transition_table(spec, (2, 0), "N")
    with pytest.raises(ValueError):
        transition_table(spec, (0, 0), "up")


def test_sensors():
    noisy = MazeSpec(MAZE_A, 1)
    assert np.allclose(sensor_table(noisy, (0, 0), "N"), [0.9, 0.1])
    assert np.allclose(sensor_table(noisy, (0, 0), "E"), [0.05, 0.95])
    exact = MazeSpec(MAZE_A, 1, MazeVariant.EXACT_SENSORS)
    assert np.allclose(sensor_table(exact, (0, 0), "W"), [1.0, 0.0])
    assert np.allclose(sensor_table(exact, (0, 0), "S"), [0.0, 1.0])


def test_two_stage_structure(maze_a_2):
    ensure_valid(maze_a_2)
    assert len(maze_a_2.variables) == 17
    names = [v.name for v in maze_a_2.variables]
    assert names[:7] == ["x_0", "y_0", "ns_0", "es_0", "ss_0", "ws_0", "d_0"]
    assert names[-1] == "u"
    d1 = maze_a_2.id_of("d_1")
    assert maze_a_2.variables[d1].states == ACTIONS
    assert set(maze_a_2.names_of(maze_a_2.parents(d1))) == {
        "ns_0", "es_0", "ss_0", "ws_0", "d_0", "ns_1", "es_1", "ss_1", "ws_1"
    }


def test_start_is_uniform_over_open_tiles(maze_a_2):
    joint = maze_a_2.cpts[0][:, None] * maze_a_2.cpts[1]
    assert joint[0, 0] == pytest.approx(1 / 9)
    assert joint[1, 1] == 0.0
    assert joint[3, 0] == 0.0


def test_zero_stage_maze():
    diagram = build_maze_id(MazeSpec(MAZE_A, 0))
    assert [v.name for v in diagram.variables] == ["x_0", "y_0", "u"]
    meu, _ = enumerate_meu(diagram)
    assert meu == 0.0


def test_tiny_maze_value(tiny_maze):
    meu, policy = enumerate_meu(tiny_maze)
    assert meu == pytest.approx(0.89)
    node = policy.root
    while not isinstance(node, PolicyOrNode):
        assert len(node.children) == 1
        node = node.children[0].child
    assert ACTIONS[node.action] == "E"


@pytest.mark.parametrize("variant", list(MazeVariant), ids=lambda v: v.value)
def test_tables_are_normalized(maze_a_layout, maze_b_layout, variant):
    for layout in (maze_a_layout, maze_b_layout):
        diagram = build_maze_id(MazeSpec(layout, 2, variant))
        for table in diagram.cpts.values():
            np.testing.assert_allclose(table.sum(axis=-1), 1.0, rtol=0, atol=1e-12)


def test_position_depends_only_on_previous_stage(maze_a_layout):
    diagram = build_maze_id(MazeSpec(maze_a_layout, 3))
    stage = {v.id: int(v.name.rsplit("_", 1)[1]) for v in diagram.variables if "_" in v.name}
    for i in (1, 2):
        current = {diagram.id_of(name) for name in [f"x_{i}", f"y_{i}", f"d_{i}"]}
        following = {diagram.id_of(name) for name in [f"x_{i + 1}", f"y_{i + 1}"]}
        earlier = {v for v, k in stage.items() if k < i}
        assert earlier
        assert d_separated(diagram.graph, following, earlier, current)
