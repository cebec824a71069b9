"""Event trees, staged trees, CEG merging, cuts and pseudo-ancestral views."""

import numpy as np
import pytest

from structelicit import ceg as cm
from structelicit.ceg import (
    Ceg,
    CutQuery,
    EventTree,
    StagedTree,
    articulation_positions,
    enumerate_paths,
    event_from_labels,
    find_fine_cuts,
    is_cut,
    is_fine_cut,
    pseudo_ancestral,
    separated,
    to_ceg,
    validate_staging,
)
from structelicit.errors import (
    EmptyEventError,
    InvalidStagingError,
    MalformedQueryError,
    UnknownPositionError,
    UnknownStageError,
)
from structelicit.fixtures import snap_staged_tree

from . import oracles


def symmetric_tree(levels=2, probs=(0.5, 0.5)):
    """Binary tree with one stage per level (all vertices alike)."""
    edges, stage_by_level = [], {}
    frontier = ["r"]
    count = 0
    for level in range(levels):
        nxt = []
        stage_by_level[level] = list(frontier)
        for v in frontier:
            for lab in ("l", "r"):
                count += 1
                child = f"n{count}"
                edges.append((v, child, lab))
                nxt.append(child)
        frontier = nxt
    tree = EventTree("r", edges)
    probabilities = {
        (e[0], e[2]): probs[0] if e[2] == "l" else probs[1] for e in edges
    }
    stages = [sorted(vs) for vs in stage_by_level.values()]
    return StagedTree(tree, stages, probabilities)


class TestEventTree:
    def test_rejects_two_parents(self):
        with pytest.raises(ValueError):
            EventTree("r", [("r", "a", "x"), ("r", "b", "y"), ("a", "c", "x"), ("b", "c", "y")])

    def test_rejects_duplicate_sibling_label(self):
        with pytest.raises(ValueError):
            EventTree("r", [("r", "a", "x"), ("r", "b", "x")])

    def test_rejects_disconnected(self):
        with pytest.raises(ValueError):
            EventTree("r", [("a", "b", "x")])

    def test_leaves_and_depth(self):
        t = EventTree("r", [("r", "a", "x"), ("a", "b", "y")])
        assert t.leaves == frozenset({"b"})
        assert t.depth("b") == 2


class TestValidateStaging:
    def test_matching_probabilities_ok(self):
        tree = EventTree("r", [("r", "a", "x"), ("r", "b", "y"), ("a", "c", "x"), ("a", "d", "y"),
                               ("b", "e", "x"), ("b", "f", "y")])
        st = StagedTree(
            tree,
            [["r"], ["a", "b"]],
            {("r", "x"): 0.5, ("r", "y"): 0.5,
             ("a", "x"): 0.3, ("a", "y"): 0.7,
             ("b", "x"): 0.3, ("b", "y"): 0.7},
        )
        assert validate_staging(st) == []

    def test_probability_mismatch_flagged(self):
        tree = EventTree("r", [("r", "a", "x"), ("r", "b", "y"), ("a", "c", "x"), ("a", "d", "y"),
                               ("b", "e", "x"), ("b", "f", "y")])
        st = StagedTree(
            tree,
            [["r"], ["a", "b"]],
            {("r", "x"): 0.5, ("r", "y"): 0.5,
             ("a", "x"): 0.3, ("a", "y"): 0.7,
             ("b", "x"): 0.4, ("b", "y"): 0.6},
        )
        violations = validate_staging(st)
        assert len(violations) == 2  # both labels mismatch

    def test_sum_to_one_flagged(self):
        tree = EventTree("r", [("r", "a", "x"), ("r", "b", "y")])
        st = StagedTree(tree, [["r"]], {("r", "x"): 0.5, ("r", "y"): 0.4})
        assert any("sum" in v.reason for v in validate_staging(st))

    def test_out_degree_mismatch_flagged(self):
        tree = EventTree("r", [("r", "a", "x"), ("r", "b", "y"), ("a", "c", "x")])
        st = StagedTree(tree, [["r", "a"]])
        assert any("out-degree" in v.reason for v in validate_staging(st))

    def test_snap_fixture_ok(self):
        assert validate_staging(snap_staged_tree()) == []

    def test_stage_partition_enforced(self):
        tree = EventTree("r", [("r", "a", "x"), ("a", "b", "y")])
        with pytest.raises(ValueError):
            StagedTree(tree, [["r"], ["r", "a"]])


class TestToCeg:
    def test_trivially_coloured_tree(self):
        # every vertex its own stage: positions = internal vertices + sink
        tree = EventTree("r", [("r", "a", "x"), ("r", "b", "y"), ("a", "c", "x"), ("a", "d", "y")])
        g = to_ceg(StagedTree(tree))
        assert len(g.positions) == len(tree.internal) + 1
        assert g.sink == cm.SINK

    def test_merges_identical_subtrees(self):
        st = symmetric_tree(levels=2)
        g = to_ceg(st)
        # one position per level plus the sink
        assert len(g.positions) == 3

    def test_snap_merges_positions(self):
        st = snap_staged_tree()
        g = to_ceg(st)
        assert len(g.positions) < len(st.tree.vertices)
        assert set(g.position_map) == set(st.tree.vertices)
        for leaf in st.tree.leaves:
            assert g.position_map[leaf] == cm.SINK

    def test_path_multiset_preserved(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            st = oracles.random_staged_tree(rng)
            tree_paths = sorted((p.labels, round(p.prob, 12)) for p in enumerate_paths(st))
            ceg_paths = sorted((p.labels, round(p.prob, 12)) for p in enumerate_paths(to_ceg(st)))
            assert tree_paths == ceg_paths

    def test_invalid_staging_rejected(self):
        tree = EventTree("r", [("r", "a", "x"), ("r", "b", "y"), ("a", "c", "x"), ("a", "d", "y"),
                               ("b", "e", "x"), ("b", "f", "y")])
        st = StagedTree(
            tree,
            [["r"], ["a", "b"]],
            {("r", "x"): 0.5, ("r", "y"): 0.5,
             ("a", "x"): 0.3, ("a", "y"): 0.7,
             ("b", "x"): 0.4, ("b", "y"): 0.6},
        )
        with pytest.raises(InvalidStagingError):
            to_ceg(st)


class TestEnumeratePaths:
    def test_four_quarter_paths(self):
        st = symmetric_tree(levels=2)
        paths = enumerate_paths(st)
        assert len(paths) == 4
        assert all(abs(p.prob - 0.25) < 1e-12 for p in paths)

    def test_single_edge_tree(self):
        tree = EventTree("r", [("r", "a", "x")])
        paths = enumerate_paths(StagedTree(tree, [["r"]], {("r", "x"): 1.0}))
        assert len(paths) == 1
        assert paths[0].prob == 1.0

    def test_snap_paths_sum_to_one(self):
        paths = enumerate_paths(snap_staged_tree())
        assert abs(sum(p.prob for p in paths) - 1.0) < 1e-10

    def test_lexicographic_order(self):
        paths = enumerate_paths(snap_staged_tree())
        assert [p.labels for p in paths] == sorted(p.labels for p in paths)


class TestCuts:
    def test_depth_one_level_is_fine_cut(self):
        g = to_ceg(symmetric_tree(levels=3))
        depth1 = {p.positions[1] for p in enumerate_paths(g)}
        assert is_fine_cut(g, depth1)

    def test_two_positions_on_one_path_rejected(self):
        g = to_ceg(symmetric_tree(levels=3))
        some_path = enumerate_paths(g)[0].positions
        inner = [w for w in some_path if w not in (g.root, g.sink)]
        assert not is_fine_cut(g, set(inner))

    def test_root_and_sink_not_allowed(self):
        g = to_ceg(symmetric_tree(levels=2))
        with pytest.raises(MalformedQueryError):
            is_fine_cut(g, {g.root})

    def test_unknown_position(self):
        g = to_ceg(symmetric_tree(levels=2))
        with pytest.raises(UnknownPositionError):
            is_fine_cut(g, {"nope"})

    def test_stage_cut(self):
        st = snap_staged_tree()
        g = to_ceg(st)
        # the two apply-decision stages together cover every path once
        apply_stages = {g.stage_map[w] for w in g.positions
                        if w not in (g.root, g.sink) and
                        any(p.positions[1] == w for p in enumerate_paths(g))}
        assert is_cut(g, apply_stages)

    def test_unknown_stage(self):
        g = to_ceg(snap_staged_tree())
        with pytest.raises(UnknownStageError):
            is_cut(g, {999})

    def test_find_fine_cuts_complete(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            st = oracles.random_staged_tree(rng, max_levels=3)
            g = to_ceg(st)
            cuts = find_fine_cuts(g)
            for cut in cuts:
                assert is_fine_cut(g, cut)
            # cross-check: no other interior subset of size <= 3 is a fine cut
            import itertools

            interior = sorted(g.positions - {g.root, g.sink})
            for r in range(1, min(3, len(interior)) + 1):
                for combo in itertools.combinations(interior, r):
                    assert is_fine_cut(g, set(combo)) == (frozenset(combo) in set(cuts))


class TestSeparated:
    def test_fine_cut_certificate(self):
        g = to_ceg(symmetric_tree(levels=3))
        depth1 = frozenset(p.positions[1] for p in enumerate_paths(g))
        result = separated(g, CutQuery(depth1))
        assert result.separated
        assert result.cut_positions == depth1
        assert "position reached" in result.cut_variable

    def test_non_cut_returns_witness(self):
        g = to_ceg(symmetric_tree(levels=3))
        some_path = enumerate_paths(g)[0].positions
        inner = frozenset(w for w in some_path if w not in (g.root, g.sink))
        result = separated(g, CutQuery(inner))
        assert not result.separated
        assert result.witness is not None
        assert len(set(result.witness.positions) & inner) != 1

    def test_snap_apply_cut_separates(self):
        g = to_ceg(snap_staged_tree())
        depth1 = frozenset(p.positions[1] for p in enumerate_paths(g))
        assert separated(g, CutQuery(depth1))

    def test_snap_verdict_positions_not_a_cut(self):
        # "Decides not to apply" paths skip the verdict level entirely, so
        # verdict positions cannot separate: no cut vertex exists there.
        g = to_ceg(snap_staged_tree())
        verdict_positions = frozenset(
            p.positions[2]
            for p in enumerate_paths(g)
            if len(p.positions) > 3
        )
        result = separated(g, CutQuery(verdict_positions))
        assert not result.separated

    def test_certified_separation_is_numerically_sound(self):
        rng = np.random.default_rng(17)
        for _ in range(15):
            st = oracles.random_staged_tree(rng)
            g = to_ceg(st)
            paths = [(p.labels, p.prob, p.positions) for p in enumerate_paths(g)]
            for cut in find_fine_cuts(g)[:4]:
                result = separated(g, CutQuery(cut))
                assert result.separated
                assert oracles.cut_ci_holds(paths, cut)

    def test_empty_query_rejected(self):
        with pytest.raises(MalformedQueryError):
            CutQuery(frozenset())


class TestPseudoAncestral:
    def test_all_paths_keeps_structure(self):
        g = to_ceg(snap_staged_tree())
        pa = pseudo_ancestral(g, lambda p: True)
        before = sorted((p.labels, round(p.prob, 12)) for p in enumerate_paths(g))
        after = sorted((p.labels, round(p.prob, 12)) for p in enumerate_paths(pa))
        assert before == after
        assert pa.stage_map == {}  # colouring removed

    def test_single_path_is_chain(self):
        g = to_ceg(snap_staged_tree())
        target = enumerate_paths(g)[0].labels
        pa = pseudo_ancestral(g, lambda p: p.labels == target)
        paths = enumerate_paths(pa)
        assert len(paths) == 1
        assert abs(paths[0].prob - 1.0) < 1e-12
        assert all(len(pa.outgoing(w)) <= 1 for w in pa.positions)

    def test_accepted_event_has_articulation(self):
        # Restricting to applicants whose regular application was accepted
        # forces all paths through one position: the cut vertex.
        g = to_ceg(snap_staged_tree())
        pa = pseudo_ancestral(g, event_from_labels("Regular application", "Accepted"))
        pivots = articulation_positions(pa)
        assert pivots
        result = separated(pa, CutQuery(frozenset({sorted(pivots)[0]})))
        assert result.separated

    def test_renormalization(self):
        g = to_ceg(snap_staged_tree())
        pa = pseudo_ancestral(g, event_from_labels("Accepted"))
        assert abs(sum(p.prob for p in enumerate_paths(pa)) - 1.0) < 1e-10

    def test_filtered_path_set_preserved(self):
        g = to_ceg(snap_staged_tree())
        event = event_from_labels("Expedited")
        pa = pseudo_ancestral(g, event)
        kept = sorted(p.labels for p in enumerate_paths(g) if event(p))
        assert sorted(p.labels for p in enumerate_paths(pa)) == kept

    def test_empty_event_rejected(self):
        g = to_ceg(snap_staged_tree())
        with pytest.raises(EmptyEventError):
            pseudo_ancestral(g, lambda p: False)
