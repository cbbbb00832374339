"""Multigraph enumeration, automorphism orders, and the graph-sum oracles."""

import pytest

from grav1d.graphs import (
    PLAIN,
    ROOT,
    classes_for_profile,
    enumerate_classes,
    enumerate_rooted_trees,
    oracle_compare,
    pairing_count,
)
from grav1d.partition import recommended_spec


def test_pairing_counts_are_double_factorials():
    assert [pairing_count(2 * n) for n in range(1, 5)] == [1, 3, 15, 105]


def test_single_loop_automorphisms():
    classes = classes_for_profile([(PLAIN, 2)])
    assert len(classes) == 1
    assert classes[0].aut_order == 2
    assert classes[0].loops == 1


def test_figure_eight_automorphisms():
    classes = classes_for_profile([(PLAIN, 4)])
    assert len(classes) == 1
    assert classes[0].aut_order == 8
    assert classes[0].loops == 2


def test_theta_and_dumbbell_automorphisms():
    classes = classes_for_profile([(PLAIN, 3), (PLAIN, 3)])
    by_code = {}
    for g in classes:
        loops_on_vertices = sum(g.matrix[i][i] for i in range(2))
        by_code[loops_on_vertices] = g
    theta = by_code[0]  # triple edge, no self-loops
    dumbbell = by_code[2]  # one self-loop on each vertex
    assert theta.aut_order == 12
    assert dumbbell.aut_order == 8
    assert theta.loops == 2 and dumbbell.loops == 2


def test_connected_counts_small():
    one_edge = enumerate_classes(1)
    assert {g.connected for g in one_edge} == {True}
    # one edge: a single loop or a segment between two univalent vertices
    assert len(one_edge) == 2


def test_rooted_tree_enumeration_counts():
    trees = enumerate_rooted_trees(3, 4)
    assert all(g.connected and g.loops == 0 for g in trees)
    assert all(
        sum(1 for c, v in g.vertices if c == ROOT) == 1 for g in trees
    )


def test_oracle_identities():
    spec = recommended_spec(5, 6, 3)
    for name, res in oracle_compare(spec, max_edges=4, tree_degree=5).items():
        assert res.is_zero(), name
