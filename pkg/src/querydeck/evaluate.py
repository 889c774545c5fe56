"""Closure membership, hold-out recall, and schema-based precision.

Membership in an interface's closure is decided by decomposition: the
target query is diffed against the initial query and every leaf
difference must be covered by a widget at its path, or swallowed whole by
a widget at a prefix path whose domain contains the target's subtree
there.  A bounded breadth-first enumeration of widget applications serves
as the reference oracle on small interfaces.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

from .diff import collect_leaf_records
from .parser import serialize
from .tree import (AstNode, GrammarAnnotations, NodePath, node_at, resolves,
                   insert_at, delete_at, replace_at)
from .widgets import Widget


class EmptyHoldout(Exception):
    """Recall was requested against an empty hold-out split."""


@dataclass
class EvalReport:
    expressiveness: float | None = None
    recall: float | None = None
    precision: float | None = None
    precision_filtered: float | None = None
    truncated: bool = False
    timings: dict[str, float] = field(default_factory=dict)
    extras: dict[str, object] = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = []
        for key in ("expressiveness", "recall", "precision", "precision_filtered"):
            value = getattr(self, key)
            if value is not None:
                out.append(f"{key}={value:.6f}")
        out.append(f"truncated={'true' if self.truncated else 'false'}")
        for key, value in sorted(self.timings.items()):
            out.append(f"time_{key}_s={value:.3f}")
        for key, value in sorted(self.extras.items()):
            out.append(f"{key}={value}")
        return out

    def dumps(self) -> str:
        return "\n".join(self.lines()) + "\n"


def in_closure(widgets: list[Widget], q0: AstNode, q: AstNode,
               ann: GrammarAnnotations) -> bool:
    """Can the widget set transform the initial query into ``q``?"""
    records = collect_leaf_records(q0, q, ann)
    if not records:
        return True
    by_path = {w.path: w for w in widgets}
    for rec in records:
        w = by_path.get(rec.path)
        if w is not None and w.covers_subtree(rec.tau_new):
            continue
        if _prefix_covers(widgets, q, rec.path):
            continue
        return False
    return True


def _prefix_covers(widgets: list[Widget], q: AstNode, leaf: NodePath) -> bool:
    for w in widgets:
        if w.path.is_prefix_of(leaf) and w.path != leaf:
            if resolves(q, w.path) and w.covers_subtree(node_at(q, w.path)):
                return True
        if w.path == NodePath(()) and w.covers_subtree(q):
            return True
    return False


def expressiveness(widgets: list[Widget], q0: AstNode, queries: list[AstNode],
                   ann: GrammarAnnotations) -> float:
    if not queries:
        return 1.0
    hits = sum(1 for q in queries if in_closure(widgets, q0, q, ann))
    return hits / len(queries)


# ---------------------------------------------------------------------------
# Reference oracle: explicit closure enumeration


def _apply_choice(q: AstNode, w: Widget, entry: AstNode | None,
                  ann: GrammarAnnotations) -> AstNode | None:
    """Set one widget to one domain entry; None when inapplicable."""
    path = w.path
    if not path.components:
        return entry
    if entry is None:
        if resolves(q, path):
            try:
                return delete_at(q, path, ann)
            except Exception:
                return None
        return q
    if resolves(q, path):
        return replace_at(q, path, entry, ann)
    parent = NodePath(path.components[:-1])
    if resolves(q, parent) and path.components[-1] <= len(node_at(q, parent).children):
        try:
            return insert_at(q, path, entry, ann)
        except Exception:
            return None
    return None


def bfs_closure(widgets: list[Widget], q0: AstNode, ann: GrammarAnnotations,
                budget: int = 100_000) -> tuple[set[AstNode], bool]:
    """All queries reachable by sequences of widget applications.

    Extrapolated ranges are explored over their observed domain entries.
    Returns (states, truncated).
    """
    seen = {q0}
    frontier = [q0]
    truncated = False
    while frontier:
        nxt = []
        for q in frontier:
            for w in sorted(widgets, key=lambda w: w.path.components):
                for entry in w.domain.entries:
                    q2 = _apply_choice(q, w, entry, ann)
                    if q2 is None or q2 in seen:
                        continue
                    if len(seen) >= budget:
                        truncated = True
                        return seen, truncated
                    seen.add(q2)
                    nxt.append(q2)
        frontier = nxt
    return seen, truncated


def enumerate_closure(widgets: list[Widget], q0: AstNode, ann: GrammarAnnotations,
                      budget: int = 100_000) -> tuple[list[tuple[dict[int, int], AstNode]], bool]:
    """Cross-product enumeration of widget states, shallow paths first.

    Returns (pairs, truncated) where each pair maps widget index to the
    selected domain entry index alongside the resulting query.
    """
    order = sorted(range(len(widgets)), key=lambda i: widgets[i].path.components)
    pools = [range(len(widgets[i].domain.entries)) for i in order]
    out: list[tuple[dict[int, int], AstNode]] = []
    for combo in itertools.product(*pools):
        if len(out) >= budget:
            return out, True
        q: AstNode | None = q0
        for idx, entry_idx in zip(order, combo):
            w = widgets[idx]
            q = _apply_choice(q, w, w.domain.entries[entry_idx], ann)
            if q is None:
                break
        if q is not None:
            out.append((dict(zip(order, combo)), q))
    return out, False


# ---------------------------------------------------------------------------
# Recall


def recall(train: list[AstNode], holdout: list[AstNode],
           window: int = 2, pruning: str = "lca",
           ann: GrammarAnnotations | None = None, lib=None) -> float:
    """Mine an interface from ``train`` and measure the expressible
    fraction of ``holdout``."""
    from .graph import build_graph
    from .mapper import map_interface
    from .parser import default_grammar
    from .widgets import default_library

    if not holdout:
        raise EmptyHoldout("empty hold-out split")
    ann = ann or default_grammar()
    lib = lib or default_library()
    graph = build_graph(train, window=window, pruning=pruning, ann=ann)
    model = map_interface(graph, lib, ann)
    q0 = graph.vertices[model.initial_query]
    hits = sum(1 for q in holdout if in_closure(model.widgets, q0, q, ann))
    return hits / len(holdout)


def recall_curve(queries: list[AstNode], train_sizes: list[int],
                 holdout_size: int = 100, **kw) -> list[tuple[int, float]]:
    """Recall at increasing training prefixes against the trailing hold-out."""
    if holdout_size >= len(queries):
        raise EmptyHoldout("log smaller than the hold-out size")
    holdout = queries[-holdout_size:]
    pool = queries[:-holdout_size]
    curve = []
    for size in train_sizes:
        train = pool[:size]
        if not train:
            continue
        curve.append((len(train), recall(train, holdout, **kw)))
    return curve


# ---------------------------------------------------------------------------
# Schema precision


def derive_schema(queries: list[AstNode]) -> dict[str, set[str]]:
    """Column name -> containing tables, read off the corpus itself."""
    schema: dict[str, set[str]] = {}
    for q in queries:
        for tables, columns in _select_scopes(q):
            for col in columns:
                schema.setdefault(col, set()).update(tables)
    return schema


def _select_scopes(q: AstNode):
    """Yield (table names, column names) per SELECT scope, outermost first."""
    if q.node_type != "Select":
        for child in q.children:
            yield from _select_scopes(child)
        return
    tables: set[str] = set()
    columns: set[str] = set()
    nested: list[AstNode] = []

    def visit(node: AstNode):
        if node.node_type == "SubQuery":
            nested.append(node.children[0])
            return
        if node.node_type == "TableRef":
            tables.add(node.attrs["name"])
        elif node.node_type == "ColExpr":
            columns.add(node.attrs["name"].split(".")[-1])
        for c in node.children:
            visit(c)

    for child in q.children:
        visit(child)
    yield tables, columns
    for sub in nested:
        yield from _select_scopes(sub)


def schema_consistent(q: AstNode, schema: dict[str, set[str]]) -> bool:
    """Every known column must see one of its tables in its FROM scope."""
    for tables, columns in _select_scopes(q):
        for col in columns:
            owners = schema.get(col)
            if owners is not None and not (owners & tables):
                return False
    return True


@dataclass
class PrecisionResult:
    total: int
    passed: int
    truncated: bool
    invalid_choices: list[dict[int, int]]

    @property
    def precision(self) -> float:
        return self.passed / self.total if self.total else 1.0


def schema_filter(widgets: list[Widget], q0: AstNode,
                  schema: dict[str, set[str]], ann: GrammarAnnotations,
                  sample_budget: int = 100_000) -> PrecisionResult:
    """Fraction of the enumerated closure consistent with the schema map.

    The invalid widget-state combinations are reported so a client can
    disable them; by construction the remaining (filtered) closure has
    precision 1.0.
    """
    pairs, truncated = enumerate_closure(widgets, q0, ann, budget=sample_budget)
    passed = 0
    invalid = []
    for choices, q in pairs:
        if schema_consistent(q, schema):
            passed += 1
        else:
            invalid.append(choices)
    return PrecisionResult(len(pairs), passed, truncated, invalid)


def timed(label: str, timings: dict[str, float]):
    class _Timer:
        def __enter__(self):
            self.t0 = time.perf_counter()
            return self

        def __exit__(self, *exc):
            timings[label] = timings.get(label, 0.0) + time.perf_counter() - self.t0

    return _Timer()
