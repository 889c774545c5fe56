"""The interaction graph: queries as vertices, delta sets as labeled edges.

Structural duplicates collapse to one vertex.  Differences are only
computed for query pairs within a sliding window of ``window`` positions,
which bounds the work at O(|Q| * window) comparisons.  Under LCA pruning
the retained ancestor transformations are the least common ancestors of
incomparable leaf-delta paths observed anywhere in the run (minus those
already sitting inside a structurally swapped subtree); with pruning off,
every leaf also contributes its parent and the root.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diff import (Delta, LeafRecord, _ancestor_delta, _ancestor_depths,
                   _leaf_delta, collect_leaf_records, retention_paths)
from .tree import AstNode, GrammarAnnotations, NodePath


class EmptyLogError(Exception):
    """No parseable queries were available to build a graph from."""


@dataclass(frozen=True)
class Edge:
    """A directed labeled edge: the interaction transforms q_from into q_to."""

    q_from: int
    q_to: int
    interaction: frozenset[Delta]


@dataclass
class InteractionGraph:
    vertices: dict[int, AstNode]
    order: list[int]                  # vertex ids in first-appearance order
    edges: list[Edge]
    deltas: list[Delta] = field(default_factory=list)   # the delta index Omega
    leaf_paths: set[tuple[int, ...]] = field(default_factory=set)

    @property
    def q0(self) -> int:
        return self.order[0]

    def partitions(self) -> dict[NodePath, list[Delta]]:
        """Partition the delta index by path."""
        out: dict[NodePath, list[Delta]] = {}
        for d in self.deltas:
            out.setdefault(d.path, []).append(d)
        return out

    def dump_records(self):
        """Line-oriented debug records: vertices then edges with delta paths."""
        from .parser import serialize
        for vid in self.order:
            yield f"vertex\t{vid}\t{serialize(self.vertices[vid])}"
        for e in self.edges:
            paths = ",".join(str(d.path) for d in sorted(
                e.interaction, key=lambda d: d.path.components))
            yield f"edge\t{e.q_from}\t{e.q_to}\t{paths}"


def build_graph(queries: list[AstNode], window: int = 2, pruning: str = "lca",
                ann: GrammarAnnotations | None = None) -> InteractionGraph:
    """Build the interaction graph for an ordered query log.

    ``window`` is the number of log positions a sliding window spans, so
    ``window=2`` diffs consecutive queries only.  Deterministic for a
    fixed (log, window, pruning).
    """
    if ann is None:
        from .parser import default_grammar
        ann = default_grammar()
    if window < 1:
        raise ValueError("window must be >= 1")
    if pruning not in ("lca", "none"):
        raise ValueError(f"unknown pruning mode {pruning!r}")
    if not queries:
        raise EmptyLogError("no parseable queries in the log")

    vertices: dict[int, AstNode] = {}
    order: list[int] = []
    by_tree: dict[AstNode, int] = {}
    log_ids: list[int] = []
    for q in queries:
        vid = by_tree.get(q)
        if vid is None:
            vid = len(order)
            by_tree[q] = vid
            vertices[vid] = q
            order.append(vid)
        log_ids.append(vid)

    # Phase 1: leaf differences for every in-window pair.
    pair_records: dict[tuple[int, int], list[LeafRecord]] = {}
    n = len(log_ids)
    for i in range(n):
        for j in range(i + 1, min(i + window, n)):
            a, b = log_ids[i], log_ids[j]
            if a == b:
                continue
            key = (a, b) if a < b else (b, a)
            if key in pair_records:
                continue
            t1, t2 = vertices[key[0]], vertices[key[1]]
            pair_records[key] = collect_leaf_records(t1, t2, ann)

    leaf_paths = {rec.path.components
                  for records in pair_records.values() for rec in records}
    retained = retention_paths(leaf_paths) if pruning == "lca" else set()

    # Phase 2: deltas and edges, in deterministic pair order.
    edges: list[Edge] = []
    omega: list[Delta] = []
    for (a, b) in sorted(pair_records):
        records = pair_records[(a, b)]
        if not records:
            continue
        t1, t2 = vertices[a], vertices[b]
        leaves = [_leaf_delta(r, a, b, ann) for r in records]
        omega.extend(leaves)
        edges.append(Edge(a, b, frozenset(leaves)))
        seen: set[tuple[int, ...]] = set()
        for rec in records:
            for depth in _ancestor_depths(rec, pruning, retained):
                anc = _ancestor_delta(t1, t2, rec, depth, a, b, ann)
                prefix = anc.path.components
                if prefix in seen:
                    continue
                seen.add(prefix)
                omega.append(anc)
                # An ancestor edge bundles the leaf deltas it does not
                # subsume, so the label still transforms q_a into q_b.
                rest = [l for l in leaves
                        if l.path.components[:depth] != prefix]
                edges.append(Edge(a, b, frozenset([anc] + rest)))

    return InteractionGraph(vertices, order, edges, omega, leaf_paths)
