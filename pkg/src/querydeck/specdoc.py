"""The interface document: the file contract between miner and UI.

Exported as versioned, deterministically ordered JSON.  Besides the
widget list (type, path, domain, label, guards, grid position) the
document carries pre-serialized SQL fragments and a placeholder template
so a client can splice widget selections into the query text without a
SQL parser: each domain entry ships its fragment text, with nested
``{{id}}`` placeholders where inner widgets apply, and each slot carries
the separator text to drop when the selection is absent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .parser import numeric_value, serialize, serialize_template
from .tree import AstNode, GrammarAnnotations, NodePath, insert_at, node_at, resolves
from .widgets import (Domain, Widget, WidgetLibrary, default_library, NUMBER,
                      STRING, TREE)

DOCUMENT_VERSION = 1


class SchemaVersionError(Exception):
    """The document's version is not supported by this reader."""


class ValidationError(Exception):
    """A malformed document field; carries the offending field path."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def tree_to_json(node: AstNode) -> dict:
    out: dict = {"t": node.node_type}
    if node.attrs:
        out["a"] = {k: node.attrs[k] for k in sorted(node.attrs)}
    if node.children:
        out["c"] = [tree_to_json(c) for c in node.children]
    return out


def tree_from_json(raw: dict, field: str) -> AstNode:
    if not isinstance(raw, dict) or "t" not in raw:
        raise ValidationError(field, "expected a tree object with 't'")
    return AstNode(raw["t"], raw.get("a"),
                   [tree_from_json(c, f"{field}.c[{i}]")
                    for i, c in enumerate(raw.get("c", []))])


_CLAUSE_WORDS = {
    "TopClause": "TOP", "Where": "WHERE", "Having": "HAVING",
    "GroupBy": "GROUP BY", "Project": "SELECT", "From": "FROM",
}


def _q0_match(w: Widget, q0: AstNode):
    """How the initial query sets this widget: ("entry", i), ("value", v)
    or None when the widget's subtree is not present in q0."""
    if resolves(q0, w.path):
        current = node_at(q0, w.path)
        for i, entry in enumerate(w.domain.entries):
            if entry is not None and entry == current:
                return ("entry", i)
        if w.wtype.extrapolates and w.domain.covers_value(current):
            return ("value", numeric_value(current))
    return None


def _walk_chain(root: AstNode, comps: tuple[int, ...]) -> list[AstNode]:
    """Nodes along a path, stopping early when it stops resolving."""
    chain = [root]
    node = root
    for idx in comps:
        if idx >= len(node.children):
            break
        node = node.children[idx]
        chain.append(node)
    return chain


def _label_chain(i: int, ws: list[Widget], parents: list[int | None],
                 q0: AstNode) -> list[AstNode]:
    w = ws[i]
    first_entry = next((e for e in w.domain.entries if e is not None), None)
    g = parents[i]
    if g is None:
        if _q0_match(w, q0) is not None or not w.domain.has_absent:
            chain = _walk_chain(q0, w.path.components)
            if len(chain) == len(w.path.components) + 1:
                return chain
        chain = _walk_chain(q0, w.path.components[:-1])
        if first_entry is not None:
            chain.append(first_entry)
        return chain
    rel = w.path.components[len(ws[g].path.components):]
    for entry in ws[g].domain.entries:
        if entry is not None and resolves(entry, NodePath(rel)):
            return _label_chain(g, ws, parents, q0)[:-1] + _walk_chain(entry, rel)
    return _label_chain(g, ws, parents, q0)


def auto_label(i: int, ws: list[Widget], parents: list[int | None],
               q0: AstNode) -> str:
    """Deterministic default label: enclosing clause plus a nearby name."""
    chain = _label_chain(i, ws, parents, q0)
    words = []
    for n in reversed(chain):
        if n.node_type in _CLAUSE_WORDS:
            words.append(_CLAUSE_WORDS[n.node_type])
            break
    hint = _name_hint(chain)
    if hint:
        words.append(hint)
    return " ".join(words) if words else "query"


def _name_hint(chain: list[AstNode]) -> str | None:
    target = chain[-1]
    if target.node_type in ("ColExpr", "TableRef"):
        return target.attrs.get("name")
    if len(chain) >= 2:
        parent = chain[-2]
        if parent.node_type == "BiExpr" and parent.children:
            left = parent.children[0]
            if left.node_type == "ColExpr" and left is not target:
                return left.attrs.get("name")
        if parent.node_type == "FuncExpr" and parent.children:
            name = parent.children[0]
            if name.node_type == "FuncName" and name is not target:
                return name.attrs.get("name")
    for n in reversed(chain[:-1]):
        if n.node_type == "TopClause":
            return None
    return None


def _domain_value_type(domain: Domain) -> str:
    if domain.numeric_range is not None:
        return NUMBER
    kinds = {k for k in domain.kinds if k != "absent"}
    if kinds <= {NUMBER, STRING}:
        return STRING
    return TREE


def _template_parent(i: int, widgets: list[Widget]) -> int | None:
    """Index of the deepest widget whose path strictly prefixes widget i."""
    best, best_len = None, -1
    for j, w in enumerate(widgets):
        if j != i and w.path.is_strict_prefix_of(widgets[i].path):
            if len(w.path.components) > best_len:
                best, best_len = j, len(w.path.components)
    return best


def _shift_for_marker(slots: dict[tuple[int, ...], str],
                      marker: tuple[int, ...]) -> dict[tuple[int, ...], str]:
    """Re-key slot paths for a marker inserted at ``marker``."""
    depth = len(marker) - 1
    out = {}
    for comps, sid in slots.items():
        if (len(comps) > depth and comps[:depth] == marker[:depth]
                and comps[depth] >= marker[depth]):
            comps = comps[:depth] + (comps[depth] + 1,) + comps[depth + 1:]
        out[comps] = sid
    return out


def _top_template(q0: AstNode, widgets: list[Widget], ids: list[str],
                  parents: list[int | None], ann: GrammarAnnotations):
    slots = {}
    missing = []
    for i, w in enumerate(widgets):
        if parents[i] is not None:
            continue
        # Absent-capable widgets whose subtree is not in q0 need a hole
        # spliced into the template at their clause position.
        if w.domain.has_absent and _q0_match(w, q0) is None:
            missing.append((w.path.components, ids[i], i))
        else:
            slots[w.path.components] = ids[i]
    tree = q0
    for comps, sid, i in sorted(missing, reverse=True):
        entry = next((e for e in widgets[i].domain.entries if e is not None), None)
        marker_type = entry.node_type if entry is not None else "Hole"
        marker = AstNode("Hole", {"as": marker_type})
        parent = NodePath(comps[:-1])
        if not resolves(tree, parent):
            continue
        index = min(comps[-1], len(node_at(tree, parent).children))
        tree = insert_at(tree, NodePath(comps[:-1] + (index,)), marker, ann)
        slots = _shift_for_marker(slots, comps[:-1] + (index,))
        slots[comps[:-1] + (index,)] = sid
    return serialize_template(tree, slots)


def _entry_payload(entry: AstNode | None, widget_index: int,
                   widgets: list[Widget], ids: list[str],
                   parents: list[int | None]) -> dict:
    if entry is None:
        return {"absent": True}
    payload = {"sql": serialize(entry), "tree": tree_to_json(entry)}
    rel_slots = {}
    base = widgets[widget_index].path.components
    for j, w in enumerate(widgets):
        if parents[j] == widget_index:
            rel = w.path.components[len(base):]
            if resolves(entry, NodePath(rel)):
                rel_slots[rel] = ids[j]
    if rel_slots:
        template, contexts = serialize_template(entry, rel_slots)
        payload["template"] = template
        payload["slots"] = {k: contexts[k] for k in sorted(contexts)}
    return payload


def _initial_state(w: Widget, q0: AstNode) -> dict | None:
    match = _q0_match(w, q0)
    if match is not None:
        kind, value = match
        return {kind: value}
    if w.domain.has_absent:
        return {"entry": w.domain.entries.index(None)}
    return None


def export_document(widgets: list[Widget], q0: AstNode,
                    ann: GrammarAnnotations,
                    labels: dict[str, str] | None = None,
                    layouts: dict[str, dict] | None = None) -> dict:
    """Build the interface document; deterministic for identical inputs."""
    ws = sorted(widgets, key=lambda w: w.path.components)
    ids = [f"w{i}" for i in range(len(ws))]
    parents = [_template_parent(i, ws) for i in range(len(ws))]
    template_text, template_contexts = _top_template(q0, ws, ids, parents, ann)

    records = []
    for i, w in enumerate(ws):
        domain: dict = {
            "kind": "range" if (w.wtype.extrapolates and w.domain.numeric_range) else "options",
            "entries": [_entry_payload(e, i, ws, ids, parents)
                        for e in w.domain.entries],
        }
        if domain["kind"] == "range":
            lo, hi = w.domain.numeric_range
            domain.update({
                "min": lo, "max": hi,
                "step": 1 if w.domain.integer_step else 0.01,
                "format": "hex" if w.domain.hex_format else
                          ("int" if w.domain.integer_step else "float"),
            })
        guard = None
        if parents[i] is not None:
            g = ws[parents[i]]
            rel = NodePath(w.path.components[len(g.path.components):])
            enabled = [k for k, e in enumerate(g.domain.entries)
                       if e is not None and resolves(e, rel)]
            if len(enabled) < len(g.domain.entries):
                guard = {"widget": ids[parents[i]], "entries": enabled}
        label = (labels or {}).get(ids[i]) or (w.label or auto_label(i, ws, parents, q0))
        layout = (layouts or {}).get(ids[i]) or {"row": i, "col": 0}
        records.append({
            "id": ids[i],
            "type": w.wtype.name,
            "path": str(w.path),
            "label": label,
            "value_type": _domain_value_type(w.domain),
            "allows_absent": w.domain.has_absent,
            "domain": domain,
            "enabled_when": guard,
            "initial": _initial_state(w, q0),
            "layout": layout,
        })

    return {
        "version": DOCUMENT_VERSION,
        "initial_query": {"sql": serialize(q0), "tree": tree_to_json(q0)},
        "template": {"text": template_text,
                     "contexts": {k: template_contexts[k]
                                  for k in sorted(template_contexts)}},
        "widgets": records,
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def save(doc: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(doc))


@dataclass
class LoadedInterface:
    """An imported document: widgets plus the initial query."""

    widgets: list[Widget]
    q0: AstNode
    labels: dict[str, str]
    layouts: dict[str, dict]
    document: dict

    def reexport(self, ann: GrammarAnnotations) -> dict:
        return export_document(self.widgets, self.q0, ann,
                               labels=self.labels, layouts=self.layouts)


def import_document(doc: dict, ann: GrammarAnnotations,
                    lib: WidgetLibrary | None = None) -> LoadedInterface:
    """Validate and reconstruct an interface from its document."""
    lib = lib or default_library()
    if not isinstance(doc, dict):
        raise ValidationError("$", "document must be an object")
    version = doc.get("version")
    if version != DOCUMENT_VERSION:
        raise SchemaVersionError(f"unsupported document version {version!r}")
    iq = doc.get("initial_query")
    if not isinstance(iq, dict) or "tree" not in iq:
        raise ValidationError("initial_query", "missing initial query tree")
    q0 = tree_from_json(iq["tree"], "initial_query.tree")
    raw_widgets = doc.get("widgets")
    if not isinstance(raw_widgets, list):
        raise ValidationError("widgets", "expected a list")

    widgets, labels, layouts = [], {}, {}
    seen_ids = set()
    for k, rec in enumerate(raw_widgets):
        where = f"widgets[{k}]"
        wid = rec.get("id")
        if not wid or wid in seen_ids:
            raise ValidationError(f"{where}.id", f"missing or duplicate id {wid!r}")
        seen_ids.add(wid)
        tname = rec.get("type")
        if tname not in lib.by_name:
            raise ValidationError(f"{where}.type",
                                  f"unknown widget type {tname!r} (widget {wid})")
        try:
            path = NodePath.parse(rec.get("path", ""))
        except Exception:
            raise ValidationError(f"{where}.path", f"bad path (widget {wid})")
        domain_rec = rec.get("domain") or {}
        entries_raw = domain_rec.get("entries")
        if not isinstance(entries_raw, list) or not entries_raw:
            raise ValidationError(f"{where}.domain", f"missing entries (widget {wid})")
        entries = []
        for j, e in enumerate(entries_raw):
            if not isinstance(e, dict):
                raise ValidationError(f"{where}.domain.entries[{j}]",
                                      f"malformed entry (widget {wid})")
            if e.get("absent"):
                entries.append(None)
            else:
                entries.append(tree_from_json(e.get("tree"),
                                              f"{where}.domain.entries[{j}].tree"))
        domain = Domain.from_entries(entries, ann)
        wtype = lib.by_name[tname]
        from .widgets import rule_check
        if not rule_check(wtype, domain):
            raise ValidationError(f"{where}.domain",
                                  f"domain violates {tname} rule (widget {wid})")
        widgets.append(Widget(wtype, path, domain, frozenset(),
                              label=rec.get("label", "")))
        labels[wid] = rec.get("label", "")
        if rec.get("layout"):
            layouts[wid] = rec["layout"]
    return LoadedInterface(widgets, q0, labels, layouts, doc)


def load(path: str, ann: GrammarAnnotations,
         lib: WidgetLibrary | None = None) -> LoadedInterface:
    with open(path, encoding="utf-8") as fh:
        return import_document(json.load(fh), ann, lib)
