"""Ordered, labeled query trees and path-based subtree addressing.

An :class:`AstNode` is immutable after construction: a symbolic node type,
a flat attribute map, and an ordered child list.  Structural equality and
hashing ignore attribute-map ordering.  Subtrees are addressed by
:class:`NodePath`, a sequence of zero-based child indices ("0/1/0" in text
form, the empty string for the root).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator


class PathError(Exception):
    """A node path does not resolve against the given tree."""


class CollectionError(Exception):
    """Insert/delete targeted a parent that is not a collection type."""


class AstNode:
    """One node of a query AST.

    Nodes are value objects: equality and hash are structural, and the
    child list must never be mutated after construction (the structural
    hash is precomputed).
    """

    __slots__ = ("node_type", "attrs", "children", "_hash")

    def __init__(self, node_type: str, attrs: dict | None = None,
                 children: list[AstNode] | tuple[AstNode, ...] | None = None):
        self.node_type = node_type
        self.attrs = dict(attrs) if attrs else {}
        self.children: tuple[AstNode, ...] = tuple(children) if children else ()
        self._hash = hash(
            (node_type, tuple(sorted(self.attrs.items())),
             tuple(c._hash for c in self.children))
        )

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, AstNode):
            return NotImplemented
        if self._hash != other._hash:
            return False
        return (self.node_type == other.node_type
                and self.attrs == other.attrs
                and self.children == other.children)

    def __repr__(self) -> str:
        bits = [self.node_type]
        if self.attrs:
            bits.append(",".join(f"{k}={v!r}" for k, v in sorted(self.attrs.items())))
        if self.children:
            bits.append(f"{len(self.children)} kids")
        return f"AstNode({' '.join(str(b) for b in bits)})"

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)

    def walk(self, prefix: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], AstNode]]:
        """Pre-order traversal yielding (path, node) pairs."""
        yield prefix, self
        for i, child in enumerate(self.children):
            yield from child.walk(prefix + (i,))

    def with_children(self, children: tuple[AstNode, ...]) -> AstNode:
        return AstNode(self.node_type, self.attrs, children)


@dataclass(frozen=True)
class NodePath:
    """A root-to-node address as zero-based child indices."""

    components: tuple[int, ...] = ()

    @classmethod
    def parse(cls, text: str) -> NodePath:
        """Parse the slash-joined textual form; empty string is the root."""
        text = text.strip().strip("/")
        if not text:
            return cls(())
        return cls(tuple(int(p) for p in text.split("/")))

    def __str__(self) -> str:
        return "/".join(str(c) for c in self.components)

    def __len__(self) -> int:
        return len(self.components)

    def child(self, index: int) -> NodePath:
        return NodePath(self.components + (index,))

    def parent(self) -> NodePath:
        if not self.components:
            raise PathError("root has no parent")
        return NodePath(self.components[:-1])

    def is_prefix_of(self, other: NodePath) -> bool:
        """True for proper prefixes and for equality."""
        n = len(self.components)
        return n <= len(other.components) and other.components[:n] == self.components

    def is_strict_prefix_of(self, other: NodePath) -> bool:
        return len(self.components) < len(other.components) and self.is_prefix_of(other)


ROOT = NodePath(())


def lca_path(a: NodePath, b: NodePath) -> NodePath:
    """Longest common prefix of two paths."""
    out = []
    for x, y in zip(a.components, b.components):
        if x != y:
            break
        out.append(x)
    return NodePath(tuple(out))


@dataclass(frozen=True)
class GrammarAnnotations:
    """Per-dialect grammar hints the miner needs.

    ``primitive_map`` maps terminal node types to their literal kind
    (``number`` or ``string``); ``collection_types`` are node types whose
    children form an ordered collection supporting insert/delete.
    """

    primitive_map: dict[str, str] = field(default_factory=dict)
    collection_types: frozenset[str] = frozenset()
    version: int = 1

    def __post_init__(self):
        overlap = set(self.primitive_map) & set(self.collection_types)
        if overlap:
            raise ValueError(f"node types both primitive and collection: {sorted(overlap)}")

    @classmethod
    def from_dict(cls, raw: dict) -> GrammarAnnotations:
        return cls(
            primitive_map=dict(raw.get("primitive_types", {})),
            collection_types=frozenset(raw.get("collection_types", ())),
            version=int(raw.get("version", 1)),
        )

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "primitive_types": dict(sorted(self.primitive_map.items())),
            "collection_types": sorted(self.collection_types),
        }

    def is_primitive(self, node: AstNode) -> bool:
        return node.node_type in self.primitive_map and not node.children

    def primitive_kind(self, node: AstNode) -> str | None:
        if self.is_primitive(node):
            return self.primitive_map[node.node_type]
        return None


def node_at(ast: AstNode, path: NodePath) -> AstNode:
    """Resolve ``path`` against ``ast``; raises PathError when out of range."""
    node = ast
    for depth, index in enumerate(path.components):
        if index < 0 or index >= len(node.children):
            raise PathError(
                f"index {index} out of range at depth {depth} "
                f"({node.node_type} has {len(node.children)} children)"
            )
        node = node.children[index]
    return node


def resolves(ast: AstNode, path: NodePath) -> bool:
    try:
        node_at(ast, path)
        return True
    except PathError:
        return False


def _rebuild(ast: AstNode, components: tuple[int, ...], make_children) -> AstNode:
    if not components:
        raise PathError("operation requires a non-root path")
    index = components[0]
    if len(components) == 1:
        return ast.with_children(make_children(ast, index))
    if index < 0 or index >= len(ast.children):
        raise PathError(f"index {index} out of range ({ast.node_type})")
    kids = list(ast.children)
    kids[index] = _rebuild(kids[index], components[1:], make_children)
    return ast.with_children(tuple(kids))


def replace_at(ast: AstNode, path: NodePath, subtree: AstNode | None,
               ann: GrammarAnnotations | None = None) -> AstNode:
    """Return a new tree with the subtree at ``path`` replaced, inserted or deleted.

    ``subtree is None`` deletes the addressed child (collection parents
    only).  A present subtree whose path resolves replaces in place; a path
    whose last index equals the parent's child count appends into a
    collection parent.  The input tree is never mutated.
    """
    if not path.components:
        if subtree is None:
            raise CollectionError("cannot delete the root")
        return subtree

    def make_children(parent: AstNode, index: int) -> tuple[AstNode, ...]:
        kids = list(parent.children)
        is_collection = ann is not None and parent.node_type in ann.collection_types
        if subtree is None:
            if not is_collection:
                raise CollectionError(
                    f"delete inside non-collection node {parent.node_type}")
            if index >= len(kids):
                raise PathError(f"index {index} out of range ({parent.node_type})")
            del kids[index]
        elif index == len(kids):
            if not is_collection:
                raise CollectionError(
                    f"insert inside non-collection node {parent.node_type}")
            kids.append(subtree)
        elif 0 <= index < len(kids):
            kids[index] = subtree
        else:
            raise PathError(f"index {index} out of range ({parent.node_type})")
        return tuple(kids)

    return _rebuild(ast, path.components, make_children)


def insert_at(ast: AstNode, path: NodePath, subtree: AstNode,
              ann: GrammarAnnotations | None = None) -> AstNode:
    """Insert ``subtree`` so it ends up at ``path``, shifting later siblings right."""
    if not path.components:
        raise PathError("cannot insert at the root")

    def make_children(parent: AstNode, index: int) -> tuple[AstNode, ...]:
        is_collection = ann is not None and parent.node_type in ann.collection_types
        if not is_collection:
            raise CollectionError(f"insert inside non-collection node {parent.node_type}")
        if index < 0 or index > len(parent.children):
            raise PathError(f"insert index {index} out of range ({parent.node_type})")
        kids = list(parent.children)
        kids.insert(index, subtree)
        return tuple(kids)

    return _rebuild(ast, path.components, make_children)


def delete_at(ast: AstNode, path: NodePath, ann: GrammarAnnotations | None = None) -> AstNode:
    """Delete the child at ``path``, shifting later siblings left."""
    return replace_at(ast, path, None, ann)
