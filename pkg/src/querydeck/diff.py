"""Subtree differences between query pairs.

A :class:`Delta` is one subtree transformation: a path, the outgoing
subtree, the incoming subtree (either may be absent for deletions and
insertions inside collections) and a value kind.  Leaf deltas are the
minimal differing subtree pairs found by structural descent; ancestor
deltas root at enclosing nodes and are retained according to the pruning
mode (see :func:`extract_deltas`).

Coordinate convention: replacement and deletion paths address ``q_from``;
insertion paths address the position in the transformed tree.  A DiffSet
is replayed by :func:`apply_all` as replacements, then deletions from the
right, then insertions from the left, which keeps every stored path valid
at its moment of application.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .tree import (AstNode, GrammarAnnotations, NodePath, ROOT, lca_path,
                   node_at, insert_at, delete_at, replace_at)

NUMBER = "number"
STRING = "string"
TREE = "tree"


class MismatchError(Exception):
    """A delta's expected outgoing subtree is not present in the target query."""


@dataclass(frozen=True)
class Delta:
    """One subtree transformation between two queries."""

    q_from: int
    q_to: int
    path: NodePath
    tau_old: AstNode | None
    tau_new: AstNode | None
    value_type: str

    def __post_init__(self):
        if self.tau_old is None and self.tau_new is None:
            raise ValueError("delta needs at least one subtree")

    @property
    def is_insert(self) -> bool:
        return self.tau_old is None

    @property
    def is_delete(self) -> bool:
        return self.tau_new is None

    def inverse(self) -> Delta:
        return Delta(self.q_to, self.q_from, self.path,
                     self.tau_new, self.tau_old, self.value_type)


@dataclass
class DiffSet:
    """All deltas for one ordered query pair, leaf deltas flagged."""

    q_from: int
    q_to: int
    deltas: list[Delta]
    leaf_flags: list[bool]

    def leaves(self) -> list[Delta]:
        return [d for d, f in zip(self.deltas, self.leaf_flags) if f]

    def ancestors(self) -> list[Delta]:
        return [d for d, f in zip(self.deltas, self.leaf_flags) if not f]


def value_kind(node: AstNode | None, ann: GrammarAnnotations) -> str | None:
    """number/string for single primitive leaves, tree otherwise, None for absent."""
    if node is None:
        return None
    kind = ann.primitive_kind(node)
    return kind if kind is not None else TREE


def _delta_value_type(tau_old: AstNode | None, tau_new: AstNode | None,
                      ann: GrammarAnnotations) -> str:
    kinds = {value_kind(t, ann) for t in (tau_old, tau_new) if t is not None}
    if kinds == {NUMBER}:
        return NUMBER
    if kinds <= {NUMBER, STRING}:
        return STRING
    return TREE


@dataclass(frozen=True)
class LeafRecord:
    """Internal extraction record carrying both coordinate systems."""

    old_path: tuple[int, ...] | None   # None for pure insertions
    new_path: tuple[int, ...] | None   # None for pure deletions
    anchor_old: tuple[int, ...]        # old coords of the nearest matched ancestor chain
    anchor_new: tuple[int, ...]
    tau_old: AstNode | None
    tau_new: AstNode | None

    @property
    def path(self) -> NodePath:
        if self.tau_old is not None:
            return NodePath(self.old_path)
        return NodePath(self.new_path)


def _lcs_pairs(old: tuple, new: tuple, eq) -> list[tuple[int, int]]:
    """Longest common subsequence of two child tuples under ``eq``."""
    n, m = len(old), len(new)
    if n == 0 or m == 0:
        return []
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt = dp[i], dp[i + 1]
        for j in range(m - 1, -1, -1):
            if eq(old[i], new[j]):
                row[j] = nxt[j + 1] + 1
            else:
                row[j] = max(nxt[j], row[j + 1])
    pairs = []
    i = j = 0
    while i < n and j < m:
        if eq(old[i], new[j]) and dp[i][j] == dp[i + 1][j + 1] + 1:
            pairs.append((i, j))
            i += 1
            j += 1
        elif dp[i + 1][j] >= dp[i][j + 1]:
            i += 1
        else:
            j += 1
    return pairs


def _loose_eq(a: AstNode, b: AstNode) -> bool:
    return a.node_type == b.node_type and a.attrs == b.attrs


def collect_leaf_records(t1: AstNode, t2: AstNode,
                         ann: GrammarAnnotations) -> list[LeafRecord]:
    out: list[LeafRecord] = []
    _descend(t1, t2, (), (), ann, out)
    return out


def _descend(a: AstNode, b: AstNode, old_path: tuple[int, ...],
             new_path: tuple[int, ...], ann: GrammarAnnotations,
             out: list[LeafRecord]) -> None:
    if a == b:
        return
    if not _loose_eq(a, b):
        out.append(LeafRecord(old_path, new_path, old_path[:-1], new_path[:-1], a, b))
        return
    if a.node_type in ann.collection_types:
        _descend_collection(a, b, old_path, new_path, ann, out)
        return
    if len(a.children) != len(b.children):
        out.append(LeafRecord(old_path, new_path, old_path[:-1], new_path[:-1], a, b))
        return
    for i, (ca, cb) in enumerate(zip(a.children, b.children)):
        _descend(ca, cb, old_path + (i,), new_path + (i,), ann, out)


def _descend_collection(a: AstNode, b: AstNode, old_path: tuple[int, ...],
                        new_path: tuple[int, ...], ann: GrammarAnnotations,
                        out: list[LeafRecord]) -> None:
    anchors = _lcs_pairs(a.children, b.children, lambda x, y: x == y)
    anchors = anchors + [(len(a.children), len(b.children))]
    pi = pj = 0
    for ai, aj in anchors:
        run_old = list(range(pi, ai))
        run_new = list(range(pj, aj))
        # Items that changed in place: pair up same-shaped nodes first, the
        # remainder positionally; length excess becomes deletes/inserts.
        loose = _lcs_pairs(tuple(a.children[i] for i in run_old),
                           tuple(b.children[j] for j in run_new),
                           _loose_eq)
        paired_old = {run_old[x] for x, _ in loose}
        paired_new = {run_new[y] for _, y in loose}
        rest_old = [i for i in run_old if i not in paired_old]
        rest_new = [j for j in run_new if j not in paired_new]
        pairs = [(run_old[x], run_new[y]) for x, y in loose]
        pairs += list(zip(rest_old, rest_new))
        for i, j in sorted(pairs):
            _descend(a.children[i], b.children[j],
                     old_path + (i,), new_path + (j,), ann, out)
        for i in rest_old[len(rest_new):]:
            out.append(LeafRecord(old_path + (i,), None, old_path, new_path,
                                  a.children[i], None))
        for j in rest_new[len(rest_old):]:
            out.append(LeafRecord(None, new_path + (j,), old_path, new_path,
                                  None, b.children[j]))
        pi, pj = ai + 1, aj + 1


def _leaf_delta(rec: LeafRecord, q_from: int, q_to: int,
                ann: GrammarAnnotations) -> Delta:
    return Delta(q_from, q_to, rec.path, rec.tau_old, rec.tau_new,
                 _delta_value_type(rec.tau_old, rec.tau_new, ann))


def _ancestor_coords(rec: LeafRecord, depth: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    old = rec.old_path if rec.old_path is not None else rec.anchor_old
    new = rec.new_path if rec.new_path is not None else rec.anchor_new
    return old[:depth], new[:depth]


def _ancestor_delta(t1: AstNode, t2: AstNode, rec: LeafRecord, depth: int,
                    q_from: int, q_to: int, ann: GrammarAnnotations) -> Delta:
    old_prefix, new_prefix = _ancestor_coords(rec, depth)
    tau_old = node_at(t1, NodePath(old_prefix))
    tau_new = node_at(t2, NodePath(new_prefix))
    return Delta(q_from, q_to, NodePath(old_prefix), tau_old, tau_new,
                 _delta_value_type(tau_old, tau_new, ann))


def retention_paths(leaf_paths: set[tuple[int, ...]]) -> set[tuple[int, ...]]:
    """Ancestor paths kept under LCA pruning for the given leaf-delta paths.

    A candidate is the least common ancestor of two incomparable leaf
    paths.  Candidates lying strictly below some leaf path are dropped:
    the transformation at that leaf already swaps the whole enclosing
    subtree, so a second tree widget inside it is always redundant.
    """
    paths = [NodePath(p) for p in leaf_paths]
    cands: set[tuple[int, ...]] = set()
    for i, p in enumerate(paths):
        for q in paths[i + 1:]:
            if not p.is_prefix_of(q) and not q.is_prefix_of(p):
                cands.add(lca_path(p, q).components)
    return {a for a in cands
            if not any(NodePath(p).is_strict_prefix_of(NodePath(a)) for p in leaf_paths)}


def _ancestor_depths(rec: LeafRecord, pruning: str,
                     retained: set[tuple[int, ...]]) -> list[int]:
    leaf = rec.path.components
    if not leaf:
        return []
    if pruning == "none":
        # The smallest enclosing structural unit plus the whole query.
        return sorted({0, len(leaf) - 1})
    return sorted(len(a) for a in retained
                  if len(a) < len(leaf) and leaf[:len(a)] == a)


def extract_deltas(q_from_ast: AstNode, q_to_ast: AstNode,
                   pruning: str = "lca",
                   ann: GrammarAnnotations | None = None,
                   q_from: int = 0, q_to: int = 1,
                   retained: set[tuple[int, ...]] | None = None) -> DiffSet:
    """Diff two queries into leaf deltas plus retained ancestor deltas.

    ``pruning="none"`` adds, for every leaf delta, the transformation at
    its parent node and at the root.  ``pruning="lca"`` keeps only
    ancestors at least common ancestors of two leaf-delta paths; the scope
    of those leaf paths is this pair unless ``retained`` (a precomputed
    mining-run-wide retention set) is supplied by the graph builder.
    """
    if ann is None:
        from .parser import default_grammar
        ann = default_grammar()
    if pruning not in ("lca", "none"):
        raise ValueError(f"unknown pruning mode {pruning!r}")
    records = collect_leaf_records(q_from_ast, q_to_ast, ann)
    deltas = [_leaf_delta(r, q_from, q_to, ann) for r in records]
    flags = [True] * len(deltas)
    if pruning == "lca" and retained is None:
        retained = retention_paths({r.path.components for r in records})
    seen: set[tuple[int, ...]] = set()
    for rec in records:
        for depth in _ancestor_depths(rec, pruning, retained or set()):
            old_prefix, _ = _ancestor_coords(rec, depth)
            if old_prefix in seen:
                continue
            seen.add(old_prefix)
            deltas.append(_ancestor_delta(q_from_ast, q_to_ast, rec, depth,
                                          q_from, q_to, ann))
            flags.append(False)
    return DiffSet(q_from, q_to, deltas, flags)


def apply(delta: Delta, q: AstNode, ann: GrammarAnnotations | None = None) -> AstNode:
    """Apply one delta to a query; raises MismatchError on a stale target."""
    if ann is None:
        from .parser import default_grammar
        ann = default_grammar()
    if delta.is_insert:
        parent_path = delta.path.parent()
        try:
            parent = node_at(q, parent_path)
        except Exception as exc:
            raise MismatchError(f"insert parent missing at {parent_path}") from exc
        index = delta.path.components[-1]
        if index > len(parent.children):
            raise MismatchError(f"insert index {index} beyond {len(parent.children)}")
        return insert_at(q, delta.path, delta.tau_new, ann)
    try:
        current = node_at(q, delta.path)
    except Exception as exc:
        raise MismatchError(f"no node at {delta.path}") from exc
    if current != delta.tau_old:
        raise MismatchError(
            f"subtree at {delta.path} is not the expected {delta.tau_old!r}")
    if delta.is_delete:
        return delete_at(q, delta.path, ann)
    return replace_at(q, delta.path, delta.tau_new, ann)


def apply_all(deltas: list[Delta], q: AstNode,
              ann: GrammarAnnotations | None = None) -> AstNode:
    """Replay a set of leaf deltas: replacements, deletions (rightmost
    first), then insertions (leftmost first)."""
    repl = [d for d in deltas if not d.is_insert and not d.is_delete]
    dels = sorted((d for d in deltas if d.is_delete),
                  key=lambda d: d.path.components, reverse=True)
    ins = sorted((d for d in deltas if d.is_insert),
                 key=lambda d: d.path.components)
    for d in repl + dels + ins:
        q = apply(d, q, ann)
    return q


# ---------------------------------------------------------------------------
# Ordered tree matching


class _Indexed:
    """Postorder-indexed view of a tree for the matching DP."""

    def __init__(self, root: AstNode):
        self.nodes: list[AstNode] = []
        self.kids: list[tuple[int, ...]] = []
        self.paths: list[tuple[int, ...]] = []
        self._index(root, ())
        self.labels = [(n.node_type, tuple(sorted(n.attrs.items()))) for n in self.nodes]
        self.sizes = [0] * len(self.nodes)
        for i in range(len(self.nodes)):
            self.sizes[i] = 1 + sum(self.sizes[c] for c in self.kids[i])
        self.root_id = len(self.nodes) - 1

    def _index(self, node: AstNode, path: tuple[int, ...]) -> int:
        child_ids = tuple(self._index(c, path + (i,)) for i, c in enumerate(node.children))
        self.nodes.append(node)
        self.kids.append(child_ids)
        self.paths.append(path)
        return len(self.nodes) - 1


def align(t1: AstNode, t2: AstNode) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Maximum ordered matching between two trees.

    Returns (path-in-t1, path-in-t2) pairs for a largest one-to-one node
    mapping that pairs only label-equal nodes and preserves ancestorship
    and left-to-right sibling order both ways (an edit-distance mapping
    with substitutions restricted to equal labels).  Ties resolve to the
    leftmost pre-order candidate.  Disjoint trees map nothing.
    """
    a, b = _Indexed(t1), _Indexed(t2)

    def forest_size(forest: tuple[int, ...], side: _Indexed) -> int:
        return sum(side.sizes[i] for i in forest)

    @lru_cache(maxsize=None)
    def dist(f1: tuple[int, ...], f2: tuple[int, ...]) -> int:
        if not f1:
            return forest_size(f2, b)
        if not f2:
            return forest_size(f1, a)
        r1, r2 = f1[-1], f2[-1]
        best = dist(f1[:-1] + a.kids[r1], f2) + 1
        best = min(best, dist(f1, f2[:-1] + b.kids[r2]) + 1)
        if a.labels[r1] == b.labels[r2]:
            best = min(best, dist(f1[:-1], f2[:-1]) + dist(a.kids[r1], b.kids[r2]))
        return best

    pairs: list[tuple[int, int]] = []

    def backtrace(f1: tuple[int, ...], f2: tuple[int, ...]) -> None:
        while f1 and f2:
            d = dist(f1, f2)
            r1, r2 = f1[-1], f2[-1]
            if (a.labels[r1] == b.labels[r2]
                    and d == dist(f1[:-1], f2[:-1]) + dist(a.kids[r1], b.kids[r2])):
                pairs.append((r1, r2))
                backtrace(a.kids[r1], b.kids[r2])
                f1, f2 = f1[:-1], f2[:-1]
            elif d == dist(f1[:-1] + a.kids[r1], f2) + 1:
                f1 = f1[:-1] + a.kids[r1]
            else:
                f2 = f2[:-1] + b.kids[r2]

    backtrace((a.root_id,), (b.root_id,))
    return sorted((a.paths[i], b.paths[j]) for i, j in pairs)


def matched_count(t1: AstNode, t2: AstNode) -> int:
    return len(align(t1, t2))
