from __future__ import annotations

import pytest

from querydeck.graph import EmptyLogError, build_graph
from querydeck.parser import parse
from querydeck.tree import NodePath


def q(text, ann):
    return parse(text, ann)


def test_single_query_graph(ann):
    g = build_graph([q("SELECT a FROM t", ann)], ann=ann)
    assert len(g.vertices) == 1
    assert g.edges == []
    assert g.q0 == 0


def test_empty_log_raises(ann):
    with pytest.raises(EmptyLogError):
        build_graph([], ann=ann)


def test_duplicate_queries_collapse(ann):
    qs = [q("SELECT a FROM t", ann), q("SELECT b FROM t", ann),
          q("SELECT a FROM t", ann)]
    g = build_graph(qs, window=3, ann=ann)
    assert len(g.vertices) == 2
    # pair (a,b) compared once in each window placement, single edge set
    assert {(e.q_from, e.q_to) for e in g.edges} == {(0, 1)}


def test_window_bounds_pair_count(ann):
    qs = [q(f"SELECT a FROM t WHERE k = {i}", ann) for i in range(10)]
    g2 = build_graph(qs, window=2, ann=ann)
    pairs2 = {(e.q_from, e.q_to) for e in g2.edges}
    assert len(pairs2) == 9
    g4 = build_graph(qs, window=4, ann=ann)
    pairs4 = {(e.q_from, e.q_to) for e in g4.edges}
    assert len(pairs4) == 9 + 8 + 7
    assert pairs2 <= pairs4


def test_three_query_chain_edges_and_ancestors(ann):
    # One leaf change per consecutive pair, both leaves on the far pair.
    # Every pair carries its leaf edge plus a root ancestor edge (the root
    # is the least common ancestor of the two observed leaf paths), which
    # is what lets whole-query selection widgets form.
    q1 = q("SELECT day, sales FROM sf WHERE cty = 'USA'", ann)
    q2 = q("SELECT day, costs FROM sf WHERE cty = 'USA'", ann)
    q3 = q("SELECT day, costs FROM sf WHERE cty = 'EUR'", ann)
    g = build_graph([q1, q2, q3], window=3, ann=ann)
    labels = {}
    for e in g.edges:
        labels.setdefault((e.q_from, e.q_to), []).append(
            sorted(str(d.path) for d in e.interaction))
    assert sorted(labels[(0, 1)]) == [[""], ["0/1/0"]]
    assert sorted(labels[(1, 2)]) == [[""], ["2/0/0/1"]]
    assert sorted(labels[(0, 2)]) == [[""], ["0/1/0", "2/0/0/1"]]
    root_domain = {d.tau_new for d in g.partitions()[NodePath(())]}
    assert len(root_domain | {d.tau_old for d in g.partitions()[NodePath(())]}) == 3


def test_interaction_graph_determinism(ann):
    qs = [q(f"SELECT a FROM t WHERE k = {i % 4}", ann) for i in range(12)]
    g1 = build_graph(qs, window=3, ann=ann)
    g2 = build_graph(qs, window=3, ann=ann)
    assert list(g1.dump_records()) == list(g2.dump_records())


def test_deltas_in_edges_are_sound(ann):
    from querydeck.diff import apply_all
    qs = [q("SELECT a FROM t WHERE k = 1", ann),
          q("SELECT b FROM t WHERE k = 2", ann),
          q("SELECT b FROM t WHERE k = 9", ann)]
    g = build_graph(qs, window=3, ann=ann)
    for e in g.edges:
        got = apply_all(sorted(e.interaction, key=lambda d: d.path.components),
                        g.vertices[e.q_from], ann)
        assert got == g.vertices[e.q_to]


def test_lca_retention_suppressed_below_structural_swap(ann):
    # Inside a swapped-in subtree, no extra ancestor partitions appear: the
    # swap widget already covers whole-subtree replacement.
    qs = [q("SELECT * FROM T", ann),
          q("SELECT * FROM (SELECT a FROM T WHERE b > 10)", ann),
          q("SELECT * FROM (SELECT a FROM T WHERE b > 20)", ann),
          q("SELECT * FROM (SELECT b FROM T WHERE b > 20)", ann)]
    g = build_graph(qs, window=2, ann=ann)
    paths = {str(p) for p in g.partitions()}
    assert paths == {"1/0", "1/0/0/0/0/0", "1/0/0/2/0/0/1"}
