import numpy as np
import pytest

from src.errors import (
    CheckpointError,
    InconsistentEvidenceError,
    StructuralError,
    ZeroProbabilityError,
)
from src.influence_diagram import enumerate_meu, partial_order
from src.model_io import diagram_from_dict
from src.propagation import JoinTreeEngine, SeparatorMessage, marginalize_out
from src.strong_jointree import build_strong_join_tree
from tests.conftest import umbrella_model
from tests.test_strong_jointree import CHAIN


def engine_for(diagram, evidence=None):
    return JoinTreeEngine(build_strong_join_tree(diagram, partial_order(diagram)), evidence)


def test_sum_elimination_averages_utility():
    message = marginalize_out(
        np.array([0.3, 0.7]), np.array([10.0, 0.0]), (0,), [0], {0: 0}
    )
    assert message.scope == ()
    assert float(message.phi) == pytest.approx(1.0)
    assert float(message.psi) == pytest.approx(3.0)


def test_decision_elimination_maximizes():
    message = marginalize_out(
        np.array([0.5, 0.5]), np.array([4.0, 9.0]), (0,), [0], {0: 1}, maximize=[0]
    )
    assert float(message.psi) == pytest.approx(9.0)
    assert int(message.maximizers[0]) == 1


def test_decision_elimination_needs_constant_probability():
    with pytest.raises(StructuralError):
        marginalize_out(
            np.array([0.2, 0.8]), np.array([4.0, 9.0]), (0,), [0], {0: 1}, maximize=[0]
        )


def test_zero_mass_entries_average_to_zero():
    message = marginalize_out(
        np.zeros((2, 2)), np.ones((2, 2)), (0, 1), [1], {0: 0, 1: 2}
    )
    assert np.array_equal(message.psi, np.zeros(2))


def test_values_of_small_diagrams(unobserved_diagram, observed_diagram):
    assert engine_for(unobserved_diagram).value() == pytest.approx(4.0)
    assert engine_for(observed_diagram).value() == pytest.approx(5.2)


def test_evidence_and_restore(observed_diagram):
    engine = engine_for(observed_diagram)
    before = engine.state_digest()
    token = engine.checkpoint()
    engine.set_evidence(0, 0)
    assert engine.value() == pytest.approx(10.0)
    assert engine.evidence == {0: 0}
    engine.set_evidence(0, 0)
    with pytest.raises(InconsistentEvidenceError):
        engine.set_evidence(0, 1)
    engine.restore(token)
    assert engine.state_digest() == before
    assert engine.evidence == {}
    assert engine.value() == pytest.approx(5.2)


def test_initial_evidence_matches_incremental(observed_diagram):
    assert engine_for(observed_diagram, {0: 1}).value() == pytest.approx(2.0)


def test_marginal(observed_diagram):
    engine = engine_for(observed_diagram)
    marginal = engine.query_marginal(0, [0])
    assert np.allclose(marginal.table, [0.4, 0.6])
    assert not marginal.zero_mass


def test_decision_bounds_in_root(unobserved_diagram, observed_diagram):
    bounds = engine_for(unobserved_diagram).query_decision_bounds(0, 1)
    assert np.allclose(bounds.values, [4.0, 2.0])

    engine = engine_for(observed_diagram)
    engine.set_evidence(0, 0)
    assert np.allclose(engine.query_decision_bounds(0, 1).values, [10.0, 2.0])
    engine.set_evidence(1, 1)
    with pytest.raises(StructuralError):
        engine.query_decision_bounds(0, 1)


def test_decision_bounds_outside_root():
    diagram = diagram_from_dict(CHAIN)
    engine = engine_for(diagram)
    child = next(c for c in range(len(engine.tree.cliques)) if c != engine.tree.root)
    engine.set_evidence(0, 1)
    engine.set_evidence(1, 0)
    engine.set_evidence(2, 1)
    depth = engine.depth
    bounds = engine.query_decision_bounds(child, 3)
    assert engine.depth == depth
    # C given B=1: D2=0 -> P(C=1)=0.4, D2=1 -> 0.75; V adds 1 for D1=0
    assert np.allclose(bounds.values, [5.0, 8.5])


def test_zero_probability_evidence():
    model = umbrella_model(observed=True)
    model["variables"][0]["table"] = [1.0, 0.0]
    engine = engine_for(diagram_from_dict(model))
    engine.set_evidence(0, 1)
    with pytest.raises(ZeroProbabilityError):
        engine.value()
    assert engine.query_marginal(0, [0]).zero_mass


def test_restore_out_of_order(observed_diagram):
    engine = engine_for(observed_diagram)
    first = engine.checkpoint()
    engine.checkpoint()
    with pytest.raises(CheckpointError):
        engine.restore(first)


def test_focus_moves_along_the_tree():
    engine = engine_for(diagram_from_dict(CHAIN))
    child = next(c for c in range(len(engine.tree.cliques)) if c != engine.tree.root)
    engine.incremental_propagate(engine.tree.root, child)
    assert engine.focus == child
    with pytest.raises(StructuralError):
        engine.move_focus(len(engine.tree.cliques))


def test_join_tree_matches_enumeration(random_diagrams):
    for diagram in random_diagrams:
        expected, _ = enumerate_meu(diagram)
        assert engine_for(diagram).value() == pytest.approx(expected)


def test_incremental_evidence_matches_fresh_tables(random_diagrams):
    for diagram in random_diagrams:
        po = partial_order(diagram)
        observed = sorted(po.info_sets[0])
        if not observed:
            continue
        evidence = {x: 1 for x in observed}
        tree = build_strong_join_tree(diagram, po)
        engine = JoinTreeEngine(tree)
        before = engine.state_digest()
        token = engine.checkpoint()
        for x in observed:
            engine.set_evidence(x, 1)
        assert engine.value() == pytest.approx(JoinTreeEngine(tree, evidence).value())
        engine.restore(token)
        assert engine.state_digest() == before


def test_absorbing_the_current_message_changes_nothing():
    engine = engine_for(diagram_from_dict(CHAIN))
    child = next(c for c in range(len(engine.tree.cliques)) if c != engine.tree.root)
    before = engine.state_digest()
    current = SeparatorMessage(
        engine.tree.separator(child), engine._sep_phi[child], engine._sep_psi[child]
    )
    engine.absorb(engine.tree.root, child, current)
    assert engine.state_digest() == before


def test_decision_bounds_match_one_action_at_a_time(random_diagrams):
    for diagram in random_diagrams:
        po = partial_order(diagram)
        engine = JoinTreeEngine(build_strong_join_tree(diagram, po))
        for var in sorted(po.info_sets[0]):
            engine.set_evidence(var, 0)
        decision = po.decisions[0]
        host = engine.tree.nearest_clique(decision, engine.focus)
        before = engine.state_digest()
        bounds = engine.query_decision_bounds(host, decision)
        assert engine.state_digest() == before
        assert not bounds.zero_mass
        for action, value in enumerate(bounds.values):
            token = engine.checkpoint()
            engine.set_evidence(decision, action, host)
            assert engine.value() == pytest.approx(value)
            engine.restore(token)
