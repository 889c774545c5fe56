"""Map an interaction graph to a minimal-cost widget set.

Initialization places one widget per delta-path partition (cheapest type
whose rule accepts the partition's domain).  Merging then repeatedly
compares each widget against the set of widgets whose paths it prefixes:
deltas connecting the same vertices on both sides are redundant and get
assigned exclusively to whichever side yields the larger cost saving,
until a full pass stops reducing the interface cost.  Full-log coverage
is asserted after every step: each query vertex must stay connected to
the initial query through edges the widget set expresses.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .diff import Delta
from .graph import Edge, InteractionGraph
from .tree import GrammarAnnotations, NodePath
from .widgets import Domain, Widget, WidgetLibrary, expresses_edge


class CoverageError(AssertionError):
    """A merge step disconnected part of the log from the initial query."""


@dataclass
class InterfaceModel:
    """A widget set plus the initial query it operates on."""

    widgets: list[Widget]
    initial_query: int
    graph: InteractionGraph

    @property
    def total_cost(self) -> float:
        return sum(w.cost for w in self.widgets)

    def sorted_widgets(self) -> list[Widget]:
        return sorted(self.widgets, key=lambda w: w.path.components)


def pick_widget(partition: list[Delta], lib: WidgetLibrary,
                ann: GrammarAnnotations) -> Widget | None:
    """Instantiate the cheapest accepting widget type over a delta partition.

    The domain is the union of the partition's outgoing and incoming
    subtrees (deduplicated, the absent element kept when present).
    Returns None for an empty partition: the widget disappears.
    """
    if not partition:
        return None
    paths = {d.path for d in partition}
    if len(paths) != 1:
        raise ValueError(f"partition mixes paths: {sorted(str(p) for p in paths)}")
    entries = []
    for d in partition:
        entries.append(d.tau_old)
        entries.append(d.tau_new)
    domain = Domain.from_entries(entries, ann)
    wtype = lib.cheapest(domain)
    return Widget(wtype, next(iter(paths)), domain, frozenset(partition))


def initialize(graph: InteractionGraph, lib: WidgetLibrary,
               ann: GrammarAnnotations) -> InterfaceModel:
    """One widget per delta-path partition; the earliest query starts it."""
    widgets = []
    for path, part in sorted(graph.partitions().items(),
                             key=lambda kv: kv[0].components):
        w = pick_widget(part, lib, ann)
        if w is not None:
            widgets.append(w)
    model = InterfaceModel(widgets, graph.q0, graph)
    check_coverage(model)
    return model


def _edge_traversable(widgets: list[Widget], interaction) -> bool:
    """Both directions of every delta must be expressible, so walking the
    edge lands on a reachable query and can be undone: some widget at the
    delta's path must hold the incoming and the outgoing subtree."""
    for d in interaction:
        if not any(w.expresses(d) and w.covers_subtree(d.tau_old)
                   for w in widgets):
            return False
    return True


def check_coverage(model: InterfaceModel) -> None:
    """Every vertex must reach the initial query over traversable edges,
    which keeps the whole log inside the interface closure."""
    graph = model.graph
    if len(graph.order) <= 1:
        return
    parent = {v: v for v in graph.order}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in graph.edges:
        if _edge_traversable(model.widgets, e.interaction):
            ra, rb = find(e.q_from), find(e.q_to)
            if ra != rb:
                parent[ra] = rb
    root = find(model.initial_query)
    stranded = [v for v in graph.order if find(v) != root]
    if stranded:
        raise CoverageError(
            f"{len(stranded)} queries no longer reachable (e.g. vertex {stranded[0]})")


@dataclass
class MergeResult:
    ancestor: Widget | None
    descendants: list[Widget | None]
    saving: float


def merge(w_a: Widget, descendants: list[Widget], lib: WidgetLibrary,
          ann: GrammarAnnotations) -> MergeResult:
    """Assign redundant deltas exclusively to the ancestor or its descendants.

    Deltas whose endpoints are covered by both sides are removed from
    whichever side loses less expressiveness per cost: the side with the
    larger cost saving drops them (ties drop from the ancestor, keeping
    the more specific controls).  Widgets left with no deltas are dropped.
    """
    v_a = {q for d in w_a.init_deltas for q in (d.q_from, d.q_to)}
    v_d = {q for w in descendants for d in w.init_deltas for q in (d.q_from, d.q_to)}
    shared = v_a & v_d
    g_a = {d for d in w_a.init_deltas
           if d.q_from in shared and d.q_to in shared}
    g_d = [ {d for d in w.init_deltas if d.q_from in shared and d.q_to in shared}
            for w in descendants ]

    if not g_a and not any(g_d):
        return MergeResult(w_a, list(descendants), 0.0)

    new_a = pick_widget(sorted(w_a.init_deltas - g_a, key=_delta_key), lib, ann)
    s_a = w_a.cost - (new_a.cost if new_a else 0.0)

    new_ds, s_d = [], 0.0
    for w, g in zip(descendants, g_d):
        nw = pick_widget(sorted(w.init_deltas - g, key=_delta_key), lib, ann)
        new_ds.append(nw)
        s_d += w.cost - (nw.cost if nw else 0.0)

    if s_a >= s_d:
        return MergeResult(new_a, list(descendants), s_a)
    return MergeResult(w_a, new_ds, s_d)


def _delta_key(d: Delta):
    return (d.q_from, d.q_to, d.path.components,
            d.tau_old is None, d.tau_new is None)


def map_interface(graph: InteractionGraph, lib: WidgetLibrary,
                  ann: GrammarAnnotations) -> InterfaceModel:
    """Initialize, then merge prefix-related widget pairs until the cost
    stops improving.  Deterministic for fixed inputs."""
    model = initialize(graph, lib, ann)
    while True:
        improved = 0.0
        # Deepest ancestors first so nested chains resolve bottom-up.
        for anc_path in sorted({w.path for w in model.widgets},
                               key=lambda p: (-len(p.components), p.components)):
            current = {w.path: w for w in model.widgets}
            w_a = current.get(anc_path)
            if w_a is None:
                continue
            descendants = [w for w in model.widgets
                           if anc_path.is_strict_prefix_of(w.path)]
            if not descendants:
                continue
            result = merge(w_a, descendants, lib, ann)
            if result.saving <= 0:
                continue
            dropped = [w_a] + descendants
            keep = [w for w in model.widgets
                    if all(w is not d for d in dropped)]
            if result.ancestor is not None:
                keep.append(result.ancestor)
            keep.extend(w for w in result.descendants if w is not None)
            candidate = InterfaceModel(
                sorted(keep, key=lambda w: w.path.components),
                model.initial_query, graph)
            check_coverage(candidate)
            model = candidate
            improved += result.saving
        if improved <= 0:
            break
    return model
