from __future__ import annotations

import itertools

import pytest

from querydeck.diff import Delta, extract_deltas
from querydeck.parser import parse
from querydeck.tree import AstNode, NodePath, node_at
from querydeck.widgets import (Domain, Widget, WidgetLibrary, cost,
                               default_library, rule_check)


def num(text):
    return AstNode("NumExpr", {"text": str(text)})


def col(name):
    return AstNode("ColExpr", {"name": name})


def s(value):
    return AstNode("StrExpr", {"value": value})


def dom(entries, ann):
    return Domain.from_entries(entries, ann)


class TestRules:
    def test_slider_accepts_numbers_and_extrapolates(self, ann, lib):
        d = dom([num(1), num(5), num(100)], ann)
        slider = lib.by_name["slider"]
        assert rule_check(slider, d)
        assert d.numeric_range == (1, 100)
        assert d.integer_step

    def test_slider_rejects_strings(self, ann, lib):
        assert not rule_check(lib.by_name["slider"], dom([s("USA")], ann))

    def test_toggle_accepts_presence_domain(self, ann):
        lib = default_library()
        q = parse("SELECT TOP 1 a FROM t", ann)
        top = node_at(q, NodePath((0,)))
        d = dom([top, None], ann)
        assert rule_check(lib.by_name["toggle_button"], d)

    def test_toggle_caps_domain_at_two(self, ann, lib):
        q = parse("SELECT a FROM t", ann)
        trees = [node_at(q, NodePath(())),
                 node_at(parse("SELECT b FROM t", ann), NodePath(())),
                 node_at(parse("SELECT c FROM t", ann), NodePath(()))]
        assert not rule_check(lib.by_name["toggle_button"], dom(trees, ann))

    def test_toggle_rejects_plain_value_domains(self, ann, lib):
        # two-option string or numeric pickers belong to dropdowns/sliders
        assert not rule_check(lib.by_name["toggle_button"], dom([col("a"), col("b")], ann))
        assert not rule_check(lib.by_name["toggle_button"], dom([num(1), num(2)], ann))

    def test_absent_requires_allows_absent(self, ann, lib):
        d = dom([num(3), None], ann)
        assert not rule_check(lib.by_name["slider"], d)
        assert rule_check(lib.by_name["dropdown"], d)

    def test_radio_needs_three_options(self, ann, lib):
        radio = lib.by_name["radio_buttons"]
        assert not rule_check(radio, dom([s("x"), s("y")], ann))
        assert rule_check(radio, dom([s("x"), s("y"), s("z")], ann))

    def test_catch_all_feasibility(self, ann, lib):
        # any non-empty domain is accepted by at least one configured type
        q = parse("SELECT TOP 1 a FROM t", ann)
        domains = [
            dom([num(1)], ann),
            dom([s("a"), num(2), col("c")], ann),
            dom([node_at(q, NodePath(())), None], ann),
            dom([None, num(1), s("b"), col("z"), node_at(q, NodePath((0,)))], ann),
        ]
        for d in domains:
            assert lib.accepting(d), d


class TestCosts:
    def test_dropdown_cost_at_two(self, ann, lib):
        # 276 + 125*2 + 0.07*4
        assert cost(lib.by_name["dropdown"], dom([s("USA"), s("EUR")], ann)) == pytest.approx(526.28)

    def test_textbox_cost_constant(self, ann, lib):
        for n in (1, 7, 40):
            d = dom([s(f"v{i}") for i in range(n)], ann)
            assert cost(lib.by_name["textbox"], d) == 4790

    def test_dropdown_overtakes_textbox_at_36(self, lib):
        dd, tb = lib.by_name["dropdown"], lib.by_name["textbox"]
        assert dd.cost(35) < tb.cost(35)
        assert dd.cost(36) > tb.cost(36)

    def test_cost_monotone_in_domain_size(self, lib):
        for wt in lib.types:
            costs = [wt.cost(n) for n in range(1, 30)]
            assert costs == sorted(costs)

    def test_slider_cost_counts_initializing_values_not_range(self, ann, lib):
        d = dom([num(1), num(5), num(100)], ann)
        slider = lib.by_name["slider"]
        assert cost(slider, d) == slider.a0 + slider.a1 * 3


def test_type_lattice_coherence(ann, lib):
    # any domain a number-ceiling uncapped type accepts is accepted by every
    # string- or tree-ceiling type without caps or absent entries
    d = dom([num(2), num(9)], ann)
    uncapped = [t for t in lib.types
                if t.max_domain is None and t.min_domain in (None, 1, 2)
                and not t.structural_only and not t.reorder_only]
    for t in uncapped:
        if t.ceiling in ("string", "tree"):
            assert rule_check(t, d), t.name


class TestExpressiveness:
    def test_slider_expresses_unseen_value_in_range(self, ann, lib):
        d = dom([num(1), num(100)], ann)
        w = Widget(lib.by_name["slider"], NodePath((0,)), d, frozenset())
        delta = Delta(0, 1, NodePath((0,)), num(1), num(42), "number")
        assert w.expresses(delta)
        outside = Delta(0, 1, NodePath((0,)), num(1), num(101), "number")
        assert not w.expresses(outside)

    def test_dropdown_does_not_extrapolate(self, ann, lib):
        d = dom([num(1), num(100), None], ann)
        w = Widget(lib.by_name["dropdown"], NodePath((0,)), d, frozenset())
        assert not w.expresses(Delta(0, 1, NodePath((0,)), num(1), num(42), "number"))
        assert w.expresses(Delta(0, 1, NodePath((0,)), num(1), None, "number"))

    def test_path_mismatch_never_expresses(self, ann, lib):
        d = dom([s("x"), s("y")], ann)
        w = Widget(lib.by_name["dropdown"], NodePath((0, 1, 0)), d, frozenset())
        delta = Delta(0, 1, NodePath((2, 0, 0, 1)), s("x"), s("y"), "string")
        assert not w.expresses(delta)

    def test_integer_step_blocks_fractional_values(self, ann, lib):
        d = dom([num(1), num(10)], ann)
        w = Widget(lib.by_name["slider"], NodePath((0,)), d, frozenset())
        assert not w.expresses(Delta(0, 1, NodePath((0,)), num(1), num("2.5"), "number"))


def test_widget_rejects_foreign_delta_paths(ann, lib):
    d = dom([s("x"), s("y")], ann)
    delta = Delta(0, 1, NodePath((1,)), s("x"), s("y"), "string")
    with pytest.raises(ValueError):
        Widget(lib.by_name["dropdown"], NodePath((0,)), d, frozenset([delta]))


def test_library_cheapest_deterministic_tiebreak(ann):
    lib = WidgetLibrary.from_dict({"types": [
        {"name": "zeta", "ceiling": "tree", "a0": 100, "a1": 0, "a2": 0},
        {"name": "alpha", "ceiling": "tree", "a0": 100, "a1": 0, "a2": 0},
        {"name": "numeric", "ceiling": "number", "a0": 100, "a1": 0, "a2": 0},
    ]})
    d = Domain.from_entries([num(1), num(2)], ann)
    # equal costs: smaller ceiling wins, then name order
    assert lib.cheapest(d).name == "numeric"
    d2 = Domain.from_entries([s("a"), s("b")], ann)
    assert lib.cheapest(d2).name == "alpha"


def test_hex_domain_format(ann):
    d = Domain.from_entries([num("0x3"), num("0x400")], ann)
    assert d.hex_format and d.numeric_range == (3, 1024)
