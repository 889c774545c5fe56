from __future__ import annotations

import itertools
import random

import pytest

from conftest import load_bundled_log
from querydeck.graph import build_graph
from querydeck.mapper import (InterfaceModel, check_coverage, initialize,
                              map_interface, merge, pick_widget)
from querydeck.parser import parse, serialize
from querydeck.tree import AstNode, NodePath
from querydeck.widgets import WidgetLibrary, expresses_edge


def mine(sqls, ann, lib, window=2, pruning="lca"):
    graph = build_graph([parse(s, ann) for s in sqls], window=window,
                        pruning=pruning, ann=ann)
    return graph, map_interface(graph, lib, ann)


def widget_summary(model):
    return sorted((w.wtype.name, str(w.path), len(w.domain))
                  for w in model.widgets)


class TestThreeQueryExample:
    """Three queries differing in two structural subtrees: the whole-query
    widget is emptied in favor of the two subtree widgets, which are
    cheaper together and express the full cross product."""

    SQLS = ["SELECT f(x), sum(a, b) FROM t",
            "SELECT g(y, z), sum(a, b) FROM t",
            "SELECT g(y, z), sum(a) FROM t"]

    def test_initialize_three_widgets(self, ann, lib):
        graph = build_graph([parse(s, ann) for s in self.SQLS], window=3, ann=ann)
        model = initialize(graph, lib, ann)
        by_path = {str(w.path): w for w in model.widgets}
        assert set(by_path) == {"0", "0/0/0", "0/1/0"}
        assert len(by_path["0"].domain) == 3         # the three select lists
        assert len(by_path["0/0/0"].domain) == 2     # f(x), g(y, z)
        assert len(by_path["0/1/0"].domain) == 2     # sum(a, b), sum(a)
        # the ancestor alone covers the log but costs more than the pair
        assert by_path["0"].cost > by_path["0/0/0"].cost + by_path["0/1/0"].cost

    def test_merge_empties_the_ancestor(self, ann, lib):
        graph, model = mine(self.SQLS, ann, lib, window=3)
        assert {str(w.path) for w in model.widgets} == {"0/0/0", "0/1/0"}
        # two 2-option structural toggles beat one 3-option tree widget
        assert model.total_cost == pytest.approx(400.0)

    def test_cross_product_expressible(self, ann, lib):
        from querydeck.evaluate import in_closure
        graph, model = mine(self.SQLS, ann, lib, window=3)
        q0 = graph.vertices[model.initial_query]
        unseen = parse("SELECT f(x), sum(a) FROM t", ann)
        assert in_closure(model.widgets, q0, unseen, ann)

    def test_string_leaves_keep_the_selector_instead(self, ann, lib):
        # When the two changing parts are plain string literals, the leaf
        # widgets are dropdowns and the 3-option selector is cheaper; the
        # merge keeps whichever side wins on cost.
        sqls = ["SELECT day, sales FROM sf WHERE cty = 'USA'",
                "SELECT day, costs FROM sf WHERE cty = 'USA'",
                "SELECT day, costs FROM sf WHERE cty = 'EUR'"]
        graph, model = mine(sqls, ann, lib, window=3)
        assert widget_summary(model) == [("radio_buttons", "", 3)]


def test_single_vertex_interface(ann, lib):
    graph, model = mine(["SELECT a FROM t"], ann, lib)
    assert model.widgets == []
    assert model.total_cost == 0
    assert model.initial_query == graph.q0


def test_pick_widget_prefers_slider_for_numbers(ann, lib):
    qs = [parse(f"SELECT a FROM t WHERE k = {v}", ann) for v in (3, 5, 7, 9)]
    graph = build_graph(qs, ann=ann)
    part = graph.partitions()[NodePath.parse("2/0/0/1")]
    w = pick_widget(part, lib, ann)
    assert w.wtype.name == "slider"
    assert w.domain.numeric_range == (3, 9)


def test_pick_widget_dropdown_beats_textbox_for_two_strings(ann, lib):
    qs = [parse("SELECT a FROM t WHERE c = 'USA'", ann),
          parse("SELECT a FROM t WHERE c = 'EUR'", ann)]
    graph = build_graph(qs, ann=ann)
    part = graph.partitions()[NodePath.parse("2/0/0/1")]
    w = pick_widget(part, lib, ann)
    assert w.wtype.name == "dropdown"
    assert w.cost == pytest.approx(526.28)


def test_pick_widget_mixed_domain_never_slider(ann, lib):
    qs = [parse("SELECT a FROM t WHERE k = 3", ann),
          parse("SELECT a FROM t WHERE k = 'x'", ann),
          parse("SELECT a FROM t WHERE k = f(1)", ann)]
    graph = build_graph(qs, window=3, ann=ann)
    part = graph.partitions()[NodePath.parse("2/0/0/1")]
    w = pick_widget(part, lib, ann)
    assert w.wtype.ceiling == "tree"


def test_pick_widget_rejects_mixed_paths(ann, lib):
    qs = [parse("SELECT a, b FROM t", ann), parse("SELECT x, y FROM t", ann)]
    graph = build_graph(qs, ann=ann)
    deltas = [d for part in graph.partitions().values() for d in part
              if d.path.components]
    with pytest.raises(ValueError):
        pick_widget(deltas, lib, ann)


class TestFigureSuite:
    """The five bundled case logs must reproduce their target interfaces."""

    def test_function_log_small_one_selector(self, ann, lib):
        graph, model = mine([serialize(q) for q in load_bundled_log("func_small")],
                            ann, lib)
        assert widget_summary(model) == [("radio_buttons", "0/0/0", 3)]

    def test_function_log_full_splits_name_and_argument(self, ann, lib):
        graph, model = mine([serialize(q) for q in load_bundled_log("func_full")],
                            ann, lib)
        assert widget_summary(model) == [("dropdown", "0/0/0/0", 2),
                                         ("dropdown", "0/0/0/1", 5)]
        names = {w.path.components: w for w in model.widgets}
        opts = {e.attrs["name"] for e in names[(0, 0, 0, 0)].domain.entries}
        assert opts == {"avg", "count"}
        args = {e.attrs["name"] for e in names[(0, 0, 0, 1)].domain.entries}
        assert args == {"a", "b", "c", "d", "e"}

    def test_top_log_toggle_plus_guarded_slider(self, ann, lib):
        graph, model = mine([serialize(q) for q in load_bundled_log("top")],
                            ann, lib)
        assert widget_summary(model) == [("slider", "0/0", 2),
                                         ("toggle_button", "0", 2)]
        toggle = next(w for w in model.widgets if w.wtype.name == "toggle_button")
        assert toggle.domain.has_absent

    def test_subquery_log_toggle_dropdown_slider(self, ann, lib):
        graph, model = mine([serialize(q) for q in load_bundled_log("subquery")],
                            ann, lib)
        assert widget_summary(model) == [
            ("dropdown", "1/0/0/0/0/0", 2),
            ("slider", "1/0/0/2/0/0/1", 2),
            ("toggle_button", "1/0", 2),
        ]

    def test_params_log_dropdown_and_slider(self, ann, lib):
        graph, model = mine([serialize(q) for q in load_bundled_log("params")],
                            ann, lib)
        assert widget_summary(model) == [
            ("dropdown", "2/0/0/0/1", 5),
            ("slider", "1/0/0/2/0/0/1/1/1", 4),
        ]


def test_coverage_preserved_through_merging(ann, lib):
    sqls = [f"SELECT {c}({a}) FROM t WHERE k = {v}"
            for c, a, v in [("avg", "a", 1), ("count", "b", 1), ("count", "b", 5),
                            ("avg", "b", 5), ("avg", "c", 9), ("count", "c", 9)]]
    graph, model = mine(sqls, ann, lib, window=3)
    check_coverage(model)  # raises on violation
    # every vertex reachable implies training expressiveness 1.0
    from querydeck.evaluate import expressiveness
    q0 = graph.vertices[model.initial_query]
    assert expressiveness(model.widgets, q0,
                          list(graph.vertices.values()), ann) == 1.0


def test_monotone_cost_and_determinism(ann, lib):
    sqls = [f"SELECT f({c}) FROM t WHERE k = {v}"
            for c, v in [("a", 1), ("b", 1), ("b", 7), ("c", 7), ("c", 2)]]
    graph = build_graph([parse(s, ann) for s in sqls], window=4, ann=ann)
    init = initialize(graph, lib, ann)
    final = map_interface(graph, lib, ann)
    assert final.total_cost <= init.total_cost
    again = map_interface(build_graph([parse(s, ann) for s in sqls],
                                      window=4, ann=ann), lib, ann)
    assert widget_summary(final) == widget_summary(again)


# ---------------------------------------------------------------------------
# Heuristic vs exhaustive search on toy graphs


TOY_LIB = WidgetLibrary.from_dict({"types": [
    {"name": "dropdown", "ceiling": "tree", "allows_absent": True,
     "a0": 276.0, "a1": 125.0, "a2": 0.07},
    {"name": "slider", "ceiling": "number", "a0": 150.0, "a1": 10.0, "a2": 0.0,
     "extrapolates": True},
    {"name": "textbox", "ceiling": "string", "a0": 4790.0, "a1": 0.0, "a2": 0.0},
    {"name": "toggle_button", "ceiling": "tree", "allows_absent": True,
     "max_domain": 2, "structural_only": True, "a0": 200.0, "a1": 0.0, "a2": 0.0},
]})


def exhaustive_optimum(graph, lib, ann) -> float:
    """Minimum interface cost over all delta-subset assignments that keep
    every query connected to the initial one (brute force oracle)."""
    omega = graph.deltas
    best = None
    for keep_mask in itertools.product([False, True], repeat=len(omega)):
        kept = [d for d, keep in zip(omega, keep_mask) if keep]
        partitions = {}
        for d in kept:
            partitions.setdefault(d.path, []).append(d)
        widgets = [pick_widget(part, lib, ann) for part in partitions.values()]
        model = InterfaceModel([w for w in widgets if w], graph.q0, graph)
        try:
            check_coverage(model)
        except AssertionError:
            continue
        cost = model.total_cost
        if best is None or cost < best:
            best = cost
    return best


def random_toy_log(rng: random.Random):
    """A short walk over two leaf slots (one numeric, one string)."""
    nums = [1, 3, 5, 7]
    cols = ["a", "b", "c", "d"]
    n, c = rng.choice(nums), rng.choice(cols)
    sqls = [f"SELECT {c} FROM t WHERE k = {n}"]
    for _ in range(rng.randint(2, 4)):
        move = rng.random()
        if move < 0.4:
            n = rng.choice([x for x in nums if x != n])
        elif move < 0.8:
            c = rng.choice([x for x in cols if x != c])
        else:
            n = rng.choice([x for x in nums if x != n])
            c = rng.choice([x for x in cols if x != c])
        sqls.append(f"SELECT {c} FROM t WHERE k = {n}")
    return sqls


def test_heuristic_matches_exhaustive_on_toy_graphs(ann):
    rng = random.Random(2024)
    for trial in range(50):
        sqls = random_toy_log(rng)
        window = rng.choice([2, 3, len(sqls)])
        graph = build_graph([parse(s, ann) for s in sqls],
                            window=window, ann=ann)
        if len(graph.deltas) > 16:
            graph = build_graph([parse(s, ann) for s in sqls], window=2, ann=ann)
        model = map_interface(graph, TOY_LIB, ann)
        optimum = exhaustive_optimum(graph, TOY_LIB, ann)
        assert model.total_cost == pytest.approx(optimum), (trial, sqls, window)
