import asyncio

import pytest

from src.errors import ModelFormatError
from src.model_io import diagram_from_dict, dump_model
from src.propagation import JoinTreeEngine
from src.solver import STATS_HEADER, solve_diagram, solve_files
from tests.test_strong_jointree import CHAIN


@pytest.mark.parametrize("method", ["jointree", "exhaustive", "dfbnb"])
def test_methods_agree(method, observed_diagram, tiny_maze):
    assert solve_diagram(observed_diagram, method).meu == pytest.approx(5.2)
    assert solve_diagram(tiny_maze, method).meu == pytest.approx(0.89)


def test_join_tree_has_no_policy(observed_diagram):
    report = solve_diagram(observed_diagram, "jointree")
    assert report.policy is None
    assert report.sis == []


def test_stats_line(observed_diagram):
    report = solve_diagram(observed_diagram, "dfbnb")
    fields = report.stats_line().split("\t")
    assert len(fields) == len(STATS_HEADER.split("\t"))
    assert fields[0] == "dfbnb"
    assert fields[2:] == ["5", "0", "0"]
    assert float(fields[1]) >= 0.0
    assert len(report.sis) == 1


def test_unknown_method(observed_diagram):
    with pytest.raises(ValueError):
        solve_diagram(observed_diagram, "greedy")


def test_batch_keeps_order_and_errors(tmp_path, observed_diagram, unobserved_diagram):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    dump_model(observed_diagram, str(first))
    dump_model(unobserved_diagram, str(second))
    paths = [str(first), str(tmp_path / "missing.json"), str(second)]
    reports = asyncio.run(solve_files(paths, "exhaustive", jobs=2))
    assert reports[0].meu == pytest.approx(5.2)
    assert reports[0].source == str(first)
    assert isinstance(reports[1], ModelFormatError)
    assert reports[2].meu == pytest.approx(4.0)


def test_admissible_bounds_report_no_violations(observed_diagram):
    report = solve_diagram(diagram_from_dict(CHAIN), "dfbnb", verify_bounds=True)
    assert report.violations == []
    assert solve_diagram(observed_diagram, "dfbnb", verify_bounds=True).violations == []


def test_bound_violations_reach_the_report(monkeypatch):
    exact = JoinTreeEngine.query_decision_bounds

    def lowered(self, clique, decision):
        bounds = exact(self, clique, decision)
        if decision == 1:
            bounds.values = bounds.values - 100.0
        return bounds

    monkeypatch.setattr(JoinTreeEngine, "query_decision_bounds", lowered)
    report = solve_diagram(diagram_from_dict(CHAIN), "dfbnb", verify_bounds=True)
    assert report.violations
    assert {v.decision for v in report.violations} == {1}
    assert all(v.bound < v.value for v in report.violations)
