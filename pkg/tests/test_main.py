import json
import logging

import pytest

from src.log import LOGGER_NAME
from src.main import EXIT_INVALID, EXIT_OK, EXIT_RESOURCE, EXIT_USAGE, main
from src.model_io import dump_model
from tests.conftest import MAZE_DIR, umbrella_model


@pytest.fixture
def model_file(tmp_path, observed_diagram):
    path = tmp_path / "umbrella.json"
    dump_model(observed_diagram, str(path))
    return str(path)


def test_solve_prints_meu(model_file, capsys):
    assert main(["solve", model_file, "--method", "jointree"]) == EXIT_OK
    assert capsys.readouterr().out == "5.2\n"


def test_solve_with_stats(model_file, capsys):
    assert main(["solve", model_file, "--method", "exhaustive", "--stats", "--header"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "method\ttime_ms\tpolicy\t#bounds\t#zeros"
    assert lines[1] == "5.2"
    assert lines[2].startswith("exhaustive\t")
    assert lines[2].endswith("\t5\t0\t0")


def test_several_inputs_are_labelled(model_file, capsys):
    assert main(["solve", model_file, model_file]) == EXIT_OK
    assert capsys.readouterr().out.splitlines() == [f"{model_file}\t5.2"] * 2


def test_policy_output(model_file, tmp_path):
    out = tmp_path / "policy.json"
    assert main(["solve", model_file, "--policy-out", str(out)]) == EXIT_OK
    policy = json.loads(out.read_text())
    assert policy["group"] == ["X"]
    assert policy["children"][1]["child"]["action"] == "a2"


def test_invalid_model_exit_code(tmp_path, capsys):
    model = umbrella_model(observed=True)
    model["variables"][0]["table"] = [0.9, 0.9]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(model))
    assert main(["solve", str(path)]) == EXIT_INVALID
    assert "normalization" in capsys.readouterr().err


def test_parse_error_exit_code(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("not json")
    assert main(["solve", str(path)]) == EXIT_USAGE


def test_memory_budget_exit_code(model_file):
    assert main(["solve", model_file, "--max-memory", "1e-9"]) == EXIT_RESOURCE


def test_usage_errors():
    with pytest.raises(SystemExit) as exc:
        main(["solve", "model.json", "--method", "greedy"])
    assert exc.value.code == EXIT_USAGE
    assert main(["maze", str(MAZE_DIR / "maze_a.txt"), "--stages", "0"]) == EXIT_USAGE


def test_maze_to_stdout(capsys):
    path = str(MAZE_DIR / "maze_a.txt")
    assert main(["maze", path, "--stages", "1", "--variant", "exact-both"]) == EXIT_OK
    document = json.loads(capsys.readouterr().out)
    assert [v["name"] for v in document["variables"]][-1] == "u"
    assert document["decision_order"] == ["d_0"]


def test_bounds_report(tmp_path, capsys):
    model = tmp_path / "maze.json"
    upper = tmp_path / "upper.json"
    assert main(["maze", str(MAZE_DIR / "maze_a.txt"), "--stages", "2", "--out", str(model)]) == 0
    assert main(["bounds", str(model), "--out", str(upper)]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "d_1: {x_1, y_1}"
    assert lines[1] == "  added: [x_1->d_1, y_1->d_1]"
    assert lines[3] == "d_0: {x_0, y_0}"
    assert upper.exists()


def test_bounds_json(tmp_path, model_file, capsys):
    assert main(["bounds", model_file, "--json"]) == EXIT_OK
    document = json.loads(capsys.readouterr().out)
    assert document == [{"decision": "D", "sis": ["X"], "added": [], "removed": []}]


def test_policy_out_needs_one_input(model_file, tmp_path):
    out = tmp_path / "policy.json"
    assert main(["solve", model_file, model_file, "--policy-out", str(out)]) == EXIT_USAGE
    assert not out.exists()


def test_policy_out_ignored_by_jointree(model_file, tmp_path, caplog):
    out = tmp_path / "policy.json"
    with caplog.at_level("WARNING", logger=LOGGER_NAME):
        argv = ["solve", model_file, "--method", "jointree", "--policy-out", str(out)]
        assert main(argv) == EXIT_OK
    assert "--policy-out is ignored" in caplog.text
    assert not out.exists()


def test_unwritable_policy_out(model_file, tmp_path, capsys):
    out = tmp_path / "missing" / "policy.json"
    assert main(["solve", model_file, "--policy-out", str(out)]) == EXIT_USAGE
    assert "error:" in capsys.readouterr().err


def test_bad_configuration_exit_code(model_file, monkeypatch):
    def broken():
        raise EnvironmentError("JOINTREE_MAX_MEMORY_MB must be positive")

    monkeypatch.setattr("src.main.validate_config", broken)
    assert main(["solve", model_file]) == EXIT_USAGE


def test_log_level_option(model_file):
    logger = logging.getLogger(LOGGER_NAME)
    level = logger.level
    try:
        assert main(["--log-level", "debug", "solve", model_file]) == EXIT_OK
        assert logger.level == logging.DEBUG
    finally:
        logger.setLevel(level)
