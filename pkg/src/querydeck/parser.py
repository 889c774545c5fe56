"""Recursive-descent parser for the supported SQL subset, plus the serializer.

The grammar covers SELECT [DISTINCT] [TOP n] select-lists, FROM items
(tables, aliased subqueries, table-valued function calls), WHERE/HAVING
boolean expressions with AND/OR, comparisons and arithmetic, GROUP BY,
CASE WHEN, CAST and scalar function calls.  Anything else raises
:class:`ParseError` with the byte offset of the offending token.

Tree shape produced for ``SELECT day, sales FROM sf WHERE cty = 'USA'``::

    Select
      Project                    path 0
        ProjClause ColExpr(day)
        ProjClause ColExpr(sales)     0/1, 0/1/0
      From TableRef(sf)          path 1
      Where                      path 2
        Cond                     path 2/0
          BiExpr(=)              path 2/0/0
            ColExpr(cty)
            StrExpr(USA)         path 2/0/0/1

AND/OR chains nest left-associative into binary nodes; only Project, From,
GroupBy and the statement's clause list are collections.
"""

from __future__ import annotations

import json
import re
from importlib import resources

from .tree import AstNode, GrammarAnnotations


class ParseError(Exception):
    """Input is outside the supported grammar; carries a byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


KEYWORDS = {
    "SELECT", "DISTINCT", "TOP", "FROM", "WHERE", "GROUP", "BY",
    "HAVING", "AND", "OR", "AS", "CASE", "WHEN", "THEN", "ELSE",
    "END", "CAST",
}

# Binary operator precedence; higher binds tighter.
PRECEDENCE = {
    "or": 1, "and": 2,
    "=": 3, "!=": 3, "<>": 3, "<": 3, "<=": 3, ">": 3, ">=": 3,
    "+": 4, "-": 4,
    "*": 5, "/": 5, "%": 5,
}

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+|--[^\n]*|/\*.*?\*/)
  | (?P<number>0[xX][0-9a-fA-F]+|\d+\.\d*(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<string>'(?:[^']|'')*')
  | (?P<ident>[A-Za-z_][A-Za-z0-9_$]*(?:\.[A-Za-z_][A-Za-z0-9_$]*)*)
  | (?P<op><=|>=|!=|<>|=|<|>|\+|-|\*|/|%|\(|\)|,|;)
""", re.VERBOSE | re.DOTALL)


class _Token:
    __slots__ = ("kind", "text", "offset")

    def __init__(self, kind: str, text: str, offset: int):
        self.kind = kind
        self.text = text
        self.offset = offset

    def __repr__(self):
        return f"Token({self.kind},{self.text!r}@{self.offset})"


def tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            kind = m.lastgroup
            tok_text = m.group()
            if kind == "ident" and "." not in tok_text and tok_text.upper() in KEYWORDS:
                kind = "keyword"
                tok_text = tok_text.upper()
            tokens.append(_Token(kind, tok_text, pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.cur.offset)

    def accept(self, kind: str, text: str | None = None) -> _Token | None:
        tok = self.cur
        if tok.kind == kind and (text is None or tok.text == text):
            self.i += 1
            return tok
        return None

    def expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self.accept(kind, text)
        if tok is None:
            want = text or kind
            raise self.error(f"expected {want}, found {self.cur.text or 'end of input'!r}")
        return tok

    # statement := SELECT [DISTINCT] [TOP n] projlist [FROM ...] [WHERE ...]
    #              [GROUP BY ...] [HAVING ...]
    def parse_select(self) -> AstNode:
        self.expect("keyword", "SELECT")
        attrs = {}
        if self.accept("keyword", "DISTINCT"):
            attrs["distinct"] = True
        clauses: list[AstNode] = []
        if self.accept("keyword", "TOP"):
            num = self.expect("number")
            clauses.append(AstNode("TopClause", None, [AstNode("NumExpr", {"text": num.text})]))
        clauses.append(self.parse_project())
        if self.accept("keyword", "FROM"):
            clauses.append(self.parse_from())
        if self.accept("keyword", "WHERE"):
            clauses.append(AstNode("Where", None, [AstNode("Cond", None, [self.parse_expr()])]))
        if self.accept("keyword", "GROUP"):
            self.expect("keyword", "BY")
            cols = [self.parse_expr()]
            while self.accept("op", ","):
                cols.append(self.parse_expr())
            clauses.append(AstNode("GroupBy", None, cols))
        if self.accept("keyword", "HAVING"):
            clauses.append(AstNode("Having", None, [AstNode("Cond", None, [self.parse_expr()])]))
        return AstNode("Select", attrs, clauses)

    def parse_project(self) -> AstNode:
        items = [self.parse_proj_clause()]
        while self.accept("op", ","):
            items.append(self.parse_proj_clause())
        return AstNode("Project", None, items)

    def parse_proj_clause(self) -> AstNode:
        if self.cur.kind == "op" and self.cur.text == "*":
            self.i += 1
            return AstNode("ProjClause", None, [AstNode("Star")])
        expr = self.parse_expr()
        attrs = {}
        if self.accept("keyword", "AS"):
            attrs["alias"] = self.expect("ident").text
        return AstNode("ProjClause", attrs, [expr])

    def parse_from(self) -> AstNode:
        items = [self.parse_from_item()]
        while self.accept("op", ","):
            items.append(self.parse_from_item())
        return AstNode("From", None, items)

    def _optional_alias(self) -> str | None:
        if self.accept("keyword", "AS"):
            return self.expect("ident").text
        if self.cur.kind == "ident":
            return self.expect("ident").text
        return None

    def parse_from_item(self) -> AstNode:
        if self.accept("op", "("):
            inner = self.parse_select()
            self.expect("op", ")")
            attrs = {}
            alias = self._optional_alias()
            if alias:
                attrs["alias"] = alias
            return AstNode("SubQuery", attrs, [inner])
        name = self.expect("ident").text
        if self.accept("op", "("):
            args = []
            if not (self.cur.kind == "op" and self.cur.text == ")"):
                args.append(self.parse_expr())
                while self.accept("op", ","):
                    args.append(self.parse_expr())
            self.expect("op", ")")
            attrs = {"name": name}
            alias = self._optional_alias()
            if alias:
                attrs["alias"] = alias
            return AstNode("TableFunc", attrs, args)
        attrs = {"name": name}
        alias = self._optional_alias()
        if alias:
            attrs["alias"] = alias
        return AstNode("TableRef", attrs)

    # Boolean / arithmetic expressions, left-associative binary chains.
    def parse_expr(self) -> AstNode:
        return self.parse_or()

    def _binary_chain(self, sub, ops: set[str], keyword: bool = False) -> AstNode:
        node = sub()
        while True:
            tok = self.cur
            if keyword and tok.kind == "keyword" and tok.text.lower() in ops:
                self.i += 1
                node = AstNode("BiExpr", {"op": tok.text.lower()}, [node, sub()])
            elif not keyword and tok.kind == "op" and tok.text in ops:
                self.i += 1
                node = AstNode("BiExpr", {"op": tok.text}, [node, sub()])
            else:
                return node

    def parse_or(self) -> AstNode:
        return self._binary_chain(self.parse_and, {"or"}, keyword=True)

    def parse_and(self) -> AstNode:
        return self._binary_chain(self.parse_cmp, {"and"}, keyword=True)

    def parse_cmp(self) -> AstNode:
        node = self.parse_add()
        tok = self.cur
        if tok.kind == "op" and tok.text in ("=", "!=", "<>", "<", "<=", ">", ">="):
            self.i += 1
            node = AstNode("BiExpr", {"op": tok.text}, [node, self.parse_add()])
        return node

    def parse_add(self) -> AstNode:
        return self._binary_chain(self.parse_mul, {"+", "-"})

    def parse_mul(self) -> AstNode:
        return self._binary_chain(self.parse_primary, {"*", "/", "%"})

    def parse_primary(self) -> AstNode:
        tok = self.cur
        if tok.kind == "number":
            self.i += 1
            return AstNode("NumExpr", {"text": tok.text})
        if tok.kind == "op" and tok.text == "-" and self.tokens[self.i + 1].kind == "number":
            self.i += 2
            return AstNode("NumExpr", {"text": "-" + self.tokens[self.i - 1].text})
        if tok.kind == "string":
            self.i += 1
            return AstNode("StrExpr", {"value": tok.text[1:-1].replace("''", "'")})
        if tok.kind == "op" and tok.text == "(":
            self.i += 1
            inner = self.parse_expr()
            self.expect("op", ")")
            return inner
        if tok.kind == "op" and tok.text == "*":
            self.i += 1
            return AstNode("Star")
        if tok.kind == "keyword" and tok.text == "CASE":
            return self.parse_case()
        if tok.kind == "keyword" and tok.text == "CAST":
            return self.parse_cast()
        if tok.kind == "ident":
            self.i += 1
            if self.accept("op", "("):
                args = []
                if not (self.cur.kind == "op" and self.cur.text == ")"):
                    args.append(self.parse_expr())
                    while self.accept("op", ","):
                        args.append(self.parse_expr())
                self.expect("op", ")")
                return AstNode("FuncExpr", None,
                               [AstNode("FuncName", {"name": tok.text})] + args)
            return AstNode("ColExpr", {"name": tok.text})
        raise self.error(f"unexpected token {tok.text or 'end of input'!r}")

    def parse_case(self) -> AstNode:
        self.expect("keyword", "CASE")
        children: list[AstNode] = []
        if not (self.cur.kind == "keyword" and self.cur.text == "WHEN"):
            children.append(self.parse_expr())
        while self.accept("keyword", "WHEN"):
            when = self.parse_expr()
            self.expect("keyword", "THEN")
            then = self.parse_expr()
            children.append(AstNode("WhenClause", None, [when, then]))
        if not any(c.node_type == "WhenClause" for c in children):
            raise self.error("CASE requires at least one WHEN")
        if self.accept("keyword", "ELSE"):
            children.append(AstNode("ElseClause", None, [self.parse_expr()]))
        self.expect("keyword", "END")
        return AstNode("CaseExpr", None, children)

    def parse_cast(self) -> AstNode:
        self.expect("keyword", "CAST")
        self.expect("op", "(")
        expr = self.parse_expr()
        if self.accept("keyword", "AS"):
            type_name = self.expect("ident").text
            self.expect("op", ")")
            return AstNode("CastExpr", None, [expr, AstNode("TypeName", {"name": type_name})])
        # Single-argument CAST(x) appears in ad-hoc logs; treat as a call.
        self.expect("op", ")")
        return AstNode("FuncExpr", None,
                       [AstNode("FuncName", {"name": "CAST"}), expr])


def parse(text: str, ann: GrammarAnnotations | None = None) -> AstNode:
    """Parse one SELECT statement into an AST.

    Raises :class:`ParseError` with a byte offset for anything outside the
    supported grammar, including trailing garbage after the statement.
    """
    tokens = tokenize(text)
    parser = _Parser(tokens)
    if parser.cur.kind != "keyword" or parser.cur.text != "SELECT":
        raise parser.error("only SELECT statements are supported")
    ast = parser.parse_select()
    parser.accept("op", ";")
    if parser.cur.kind != "eof":
        raise parser.error(f"trailing input {parser.cur.text!r}")
    if ann is not None:
        _check_annotation_coverage(ast, ann)
    return ast


def _check_annotation_coverage(ast: AstNode, ann: GrammarAnnotations) -> None:
    for _, node in ast.walk():
        if not node.children and node.node_type in ("NumExpr", "StrExpr"):
            if node.node_type not in ann.primitive_map:
                raise ParseError(
                    f"literal node type {node.node_type} missing from primitive map", 0)


def numeric_value(node: AstNode) -> int | float:
    """Numeric value of a NumExpr, honoring hex and float lexical forms."""
    text = node.attrs["text"]
    neg = text.startswith("-")
    body = text[1:] if neg else text
    if body.lower().startswith("0x"):
        value: int | float = int(body, 16)
    elif any(c in body for c in ".eE"):
        value = float(body)
    else:
        value = int(body)
    return -value if neg else value


def primitive_value(node: AstNode) -> int | float | str:
    """Scalar payload of a primitive leaf (literal, column, name or table)."""
    if node.node_type == "NumExpr":
        return numeric_value(node)
    if node.node_type == "StrExpr":
        return node.attrs["value"]
    return node.attrs["name"]


# ---------------------------------------------------------------------------
# Serialization


class _Emitter:
    """Accumulates text while recording spans and placeholder slots."""

    def __init__(self, slots: dict[tuple[int, ...], str] | None = None):
        self.parts: list[str] = []
        self.pos = 0
        self.slots = slots or {}
        self.contexts: dict[str, dict] = {}

    def text(self, s: str) -> None:
        self.parts.append(s)
        self.pos += len(s)

    def result(self) -> str:
        return "".join(self.parts)

    def slot_id(self, path: tuple[int, ...]) -> str | None:
        return self.slots.get(path)

    def placeholder(self, slot: str, prefix: str = "", suffix: str = "") -> None:
        self.contexts[slot] = {"sep_prefix": prefix, "sep_suffix": suffix}
        self.text("{{" + slot + "}}")


def _needs_parens(child: AstNode, parent_op: str, right_side: bool) -> bool:
    if child.node_type != "BiExpr":
        return False
    cp = PRECEDENCE[child.attrs["op"]]
    pp = PRECEDENCE[parent_op]
    return cp < pp or (cp == pp and right_side)


def _emit_expr(node: AstNode, em: _Emitter, path: tuple[int, ...]) -> None:
    slot = em.slot_id(path)
    if slot is not None:
        em.placeholder(slot)
        return
    t = node.node_type
    if t == "BiExpr":
        op = node.attrs["op"]
        left, right = node.children
        for side, (child, idx) in enumerate(((left, 0), (right, 1))):
            if side == 1:
                em.text(f" {op.upper()} " if op in ("and", "or") else f" {op} ")
            wrap = _needs_parens(child, op, right_side=(side == 1))
            if wrap:
                em.text("(")
            _emit_expr(child, em, path + (idx,))
            if wrap:
                em.text(")")
    elif t == "NumExpr":
        em.text(node.attrs["text"])
    elif t == "StrExpr":
        em.text("'" + node.attrs["value"].replace("'", "''") + "'")
    elif t == "ColExpr":
        em.text(node.attrs["name"])
    elif t == "Star":
        em.text("*")
    elif t == "FuncExpr":
        _emit_expr(node.children[0], em, path + (0,))
        em.text("(")
        for i, arg in enumerate(node.children[1:], start=1):
            if i > 1:
                em.text(", ")
            _emit_expr(arg, em, path + (i,))
        em.text(")")
    elif t == "FuncName":
        em.text(node.attrs["name"])
    elif t == "CaseExpr":
        em.text("CASE")
        for i, child in enumerate(node.children):
            if child.node_type == "WhenClause":
                em.text(" WHEN ")
                _emit_expr(child.children[0], em, path + (i, 0))
                em.text(" THEN ")
                _emit_expr(child.children[1], em, path + (i, 1))
            elif child.node_type == "ElseClause":
                em.text(" ELSE ")
                _emit_expr(child.children[0], em, path + (i, 0))
            else:
                em.text(" ")
                _emit_expr(child, em, path + (i,))
        em.text(" END")
    elif t == "CastExpr":
        em.text("CAST(")
        _emit_expr(node.children[0], em, path + (0,))
        em.text(" AS ")
        em.text(node.children[1].attrs["name"])
        em.text(")")
    else:
        raise ValueError(f"cannot serialize node type {t}")


def _emit_node(node: AstNode, em: _Emitter, path: tuple[int, ...]) -> None:
    slot = em.slot_id(path)
    if slot is not None:
        em.placeholder(slot)
        return
    t = node.node_type
    if t == "Select":
        em.text("SELECT ")
        if node.attrs.get("distinct"):
            em.text("DISTINCT ")
        for i, clause in enumerate(node.children):
            _emit_clause(clause, em, path + (i,))
    elif t == "TopClause":
        em.text("TOP ")
        _emit_expr(node.children[0], em, path + (0,))
    elif t == "Project":
        _emit_list(node, em, path)
    elif t == "From":
        em.text("FROM ")
        _emit_list(node, em, path)
    elif t == "ProjClause":
        if node.children:
            _emit_expr(node.children[0], em, path + (0,))
        if node.attrs.get("alias"):
            em.text(" AS " + node.attrs["alias"])
    elif t == "TableRef":
        em.text(node.attrs["name"])
        if node.attrs.get("alias"):
            em.text(" AS " + node.attrs["alias"])
    elif t == "TableFunc":
        em.text(node.attrs["name"] + "(")
        for i, arg in enumerate(node.children):
            if i:
                em.text(", ")
            _emit_expr(arg, em, path + (i,))
        em.text(")")
        if node.attrs.get("alias"):
            em.text(" AS " + node.attrs["alias"])
    elif t == "SubQuery":
        em.text("(")
        _emit_node(node.children[0], em, path + (0,))
        em.text(")")
        if node.attrs.get("alias"):
            em.text(" AS " + node.attrs["alias"])
    elif t in ("Where", "Having"):
        em.text("WHERE " if t == "Where" else "HAVING ")
        _emit_node(node.children[0], em, path + (0,))
    elif t == "Cond":
        _emit_expr(node.children[0], em, path + (0,))
    elif t == "GroupBy":
        em.text("GROUP BY ")
        _emit_list(node, em, path)
    else:
        _emit_expr(node, em, path)


def _emit_list(node: AstNode, em: _Emitter, path: tuple[int, ...]) -> None:
    last = len(node.children) - 1
    for i, item in enumerate(node.children):
        child_path = path + (i,)
        slot = em.slot_id(child_path)
        # A slot owns one adjacent ", " so that an absent splice still yields
        # well-formed SQL: non-last items own the following separator, a last
        # item with predecessors owns the preceding one.  Ownership is
        # exclusive; the emitter writes separators nobody owns.
        prev_slot = em.slot_id(path + (i - 1,)) if i > 0 else None
        owned_by_prev = prev_slot is not None and (i - 1) < last
        owns_preceding = slot is not None and i == last and i > 0 and not owned_by_prev
        if i > 0 and not owned_by_prev and not owns_preceding:
            em.text(", ")
        if slot is not None:
            em.placeholder(slot,
                           prefix=", " if owns_preceding else "",
                           suffix=", " if i < last else "")
        else:
            _emit_node(item, em, child_path)


def _emit_clause(clause: AstNode, em: _Emitter, path: tuple[int, ...]) -> None:
    """Emit one top-level clause of a Select, handling slot separators."""
    slot = em.slot_id(path)
    # Hole markers stand in for clauses absent from the reference query.
    t = clause.attrs["as"] if clause.node_type == "Hole" else clause.node_type
    if t == "TopClause":
        if slot is not None:
            em.placeholder(slot, suffix=" ")
        else:
            _emit_node(clause, em, path)
            em.text(" ")
    elif t == "Project":
        _emit_node(clause, em, path)
    else:
        if slot is not None:
            em.placeholder(slot, prefix=" ")
        else:
            em.text(" ")
            _emit_node(clause, em, path)


def serialize(ast: AstNode) -> str:
    """Render an AST (or any grammar subtree) back to canonical SQL text.

    Canonical form uses uppercase keywords and single spaces;
    ``parse(serialize(ast))`` is structurally equal to ``ast`` for
    statement roots.
    """
    em = _Emitter()
    _emit_node(ast, em, ())
    return em.result()


def serialize_template(ast: AstNode, slots: dict[tuple[int, ...], str]) -> tuple[str, dict]:
    """Render SQL with ``{{id}}`` placeholders at the given relative paths.

    Returns the template text and, per slot id, the separator context a
    client must re-attach when splicing a present value (and drop when the
    value is absent).
    """
    em = _Emitter(slots)
    _emit_node(ast, em, ())
    return em.result(), em.contexts


_DEFAULT_GRAMMAR: GrammarAnnotations | None = None


def default_grammar() -> GrammarAnnotations:
    """Grammar annotations bundled with the package."""
    global _DEFAULT_GRAMMAR
    if _DEFAULT_GRAMMAR is None:
        raw = resources.files("querydeck.data").joinpath("grammar.json").read_text()
        _DEFAULT_GRAMMAR = GrammarAnnotations.from_dict(json.loads(raw))
    return _DEFAULT_GRAMMAR


def load_grammar(path: str) -> GrammarAnnotations:
    with open(path, encoding="utf-8") as fh:
        return GrammarAnnotations.from_dict(json.load(fh))
