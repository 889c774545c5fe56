"""Widget types (rule + cost polynomial) and instantiated widgets.

A widget type accepts or rejects a candidate domain via its rule and
prices it with ``c(d) = a0 + a1*|d| + a2*|d|^2``.  Three value kinds form
a cast lattice: numbers cast to strings, anything casts to a tree.  An
instantiated widget binds a type to one AST path and a domain of
substitutable subtrees; numeric domains extrapolate to the full observed
[min, max] range.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .diff import Delta, NUMBER, STRING, TREE
from .parser import numeric_value, serialize
from .tree import AstNode, GrammarAnnotations, NodePath

ABSENT = "absent"

_CASTS = {
    NUMBER: {NUMBER, STRING, TREE},
    STRING: {STRING, TREE},
    TREE: {TREE},
}


@dataclass(frozen=True)
class WidgetType:
    """One class of UI control: a domain rule plus a cost polynomial."""

    name: str
    ceiling: str                 # number | string | tree
    a0: float
    a1: float
    a2: float
    allows_absent: bool = False
    max_domain: int | None = None
    min_domain: int | None = None
    structural_only: bool = False
    reorder_only: bool = False
    extrapolates: bool = False   # numeric domains widen to [min, max]

    def __post_init__(self):
        if self.a0 < 0 or self.a1 < 0 or self.a2 < 0:
            raise ValueError(f"{self.name}: cost coefficients must be non-negative")
        if self.ceiling not in (NUMBER, STRING, TREE):
            raise ValueError(f"{self.name}: bad ceiling {self.ceiling}")

    def cost(self, n: int) -> float:
        return self.a0 + self.a1 * n + self.a2 * n * n


@dataclass(frozen=True)
class Domain:
    """A deduplicated, canonically ordered set of substitutable subtrees.

    ``entries`` may contain ``None`` for the absent element (presence
    toggles).  For all-numeric domains the observed values extrapolate to
    a closed range with an integer or 0.01 step.
    """

    entries: tuple[AstNode | None, ...]
    kinds: tuple[str, ...]
    numeric_range: tuple[float, float] | None = None
    integer_step: bool = True
    hex_format: bool = False
    entry_set: frozenset = frozenset()

    @classmethod
    def from_entries(cls, entries, ann: GrammarAnnotations) -> Domain:
        seen: dict = {}
        for e in entries:
            if e not in seen:
                seen[e] = e
        uniq = list(seen.values())
        uniq.sort(key=lambda e: (0, "") if e is None else (1, serialize(e)))
        kinds = tuple(ABSENT if e is None else _entry_kind(e, ann) for e in uniq)
        numeric = [numeric_value(e) for e, k in zip(uniq, kinds) if k == NUMBER]
        rng = None
        int_step = True
        hex_fmt = False
        if numeric and all(k in (NUMBER, ABSENT) for k in kinds):
            rng = (min(numeric), max(numeric))
            int_step = all(float(v).is_integer() for v in numeric)
            hex_fmt = all(e is None or e.attrs["text"].lower().startswith("0x")
                          for e in uniq)
        return cls(tuple(uniq), kinds, rng, int_step, hex_fmt, frozenset(uniq))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def has_absent(self) -> bool:
        return bool(self.entries) and self.entries[0] is None

    def contains(self, subtree: AstNode | None) -> bool:
        return subtree in self.entry_set

    def covers_value(self, subtree: AstNode) -> bool:
        """Range membership for extrapolated numeric domains."""
        if self.numeric_range is None:
            return False
        if subtree.node_type != "NumExpr" or subtree.children:
            return False
        v = numeric_value(subtree)
        lo, hi = self.numeric_range
        if not lo <= v <= hi:
            return False
        return not self.integer_step or float(v).is_integer()


def _entry_kind(node: AstNode, ann: GrammarAnnotations) -> str:
    kind = ann.primitive_kind(node)
    return kind if kind is not None else TREE


def rule_check(wt: WidgetType, d: Domain) -> bool:
    """Does this widget type accept the candidate domain?"""
    n = len(d)
    if n == 0:
        return False
    if wt.max_domain is not None and n > wt.max_domain:
        return False
    if wt.min_domain is not None and n < wt.min_domain:
        return False
    for entry, kind in zip(d.entries, d.kinds):
        if kind == ABSENT:
            if not wt.allows_absent:
                return False
        elif wt.ceiling not in _CASTS[kind]:
            return False
    if wt.structural_only and not (d.has_absent or TREE in d.kinds):
        return False
    if wt.reorder_only and not _is_reorder_domain(d):
        return False
    return True


def _is_reorder_domain(d: Domain) -> bool:
    trees = [e for e in d.entries if e is not None]
    if len(trees) < 2 or any(not t.children for t in trees):
        return False
    first = sorted(hash(c) for c in trees[0].children)
    return all(t.node_type == trees[0].node_type
               and sorted(hash(c) for c in t.children) == first
               for t in trees[1:])


def cost(wt: WidgetType, d: Domain) -> float:
    """Evaluate the cost polynomial on the domain size (distinct
    initializing subtrees; extrapolated ranges do not inflate it)."""
    return wt.cost(len(d))


@dataclass(frozen=True)
class Widget:
    """A widget type bound to a path and a domain, with its seeding deltas."""

    wtype: WidgetType
    path: NodePath
    domain: Domain
    init_deltas: frozenset[Delta]
    label: str = ""

    def __post_init__(self):
        bad = [d for d in self.init_deltas if d.path != self.path]
        if bad:
            raise ValueError(f"delta path {bad[0].path} differs from widget path {self.path}")

    @property
    def cost(self) -> float:
        return cost(self.wtype, self.domain)

    def expresses(self, delta: Delta) -> bool:
        """A widget expresses a delta when the paths agree and the incoming
        subtree is inside the widget's (possibly extrapolated) domain."""
        if delta.path != self.path:
            return False
        return self.covers_subtree(delta.tau_new)

    def covers_subtree(self, subtree: AstNode | None) -> bool:
        if subtree is None:
            return self.domain.has_absent
        if self.domain.contains(subtree):
            return True
        return self.wtype.extrapolates and self.domain.covers_value(subtree)


def expresses_edge(widgets, interaction) -> bool:
    """An edge is expressed when each of its deltas is expressed by some widget."""
    return all(any(w.expresses(d) for w in widgets) for d in interaction)


_CEILING_ORDER = {NUMBER: 0, STRING: 1, TREE: 2}


class WidgetLibrary:
    """The configured widget types, with deterministic selection order."""

    def __init__(self, types: list[WidgetType]):
        if not types:
            raise ValueError("empty widget library")
        self.types = sorted(types, key=lambda t: t.name)
        self.by_name = {t.name: t for t in self.types}

    def accepting(self, d: Domain) -> list[WidgetType]:
        return [t for t in self.types if rule_check(t, d)]

    def cheapest(self, d: Domain) -> WidgetType:
        """Lowest cost, then smallest type ceiling, then name order."""
        candidates = self.accepting(d)
        if not candidates:
            raise ValueError(f"no widget type accepts domain of size {len(d)}")
        return min(candidates,
                   key=lambda t: (t.cost(len(d)), _CEILING_ORDER[t.ceiling], t.name))

    @classmethod
    def from_dict(cls, raw: dict) -> WidgetLibrary:
        types = []
        for item in raw["types"]:
            types.append(WidgetType(
                name=item["name"],
                ceiling=item["ceiling"],
                a0=float(item["a0"]),
                a1=float(item["a1"]),
                a2=float(item["a2"]),
                allows_absent=bool(item.get("allows_absent", False)),
                max_domain=item.get("max_domain"),
                min_domain=item.get("min_domain"),
                structural_only=bool(item.get("structural_only", False)),
                reorder_only=bool(item.get("reorder_only", False)),
                extrapolates=bool(item.get("extrapolates", False)),
            ))
        return cls(types)

    @classmethod
    def load(cls, path: str) -> WidgetLibrary:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


_DEFAULT: WidgetLibrary | None = None


def default_library() -> WidgetLibrary:
    global _DEFAULT
    if _DEFAULT is None:
        raw = resources.files("querydeck.data").joinpath("widget_types.json").read_text()
        _DEFAULT = WidgetLibrary.from_dict(json.loads(raw))
    return _DEFAULT
