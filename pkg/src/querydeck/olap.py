"""Synthetic OLAP exploration log: a seeded random walk over one cube query.

Queries follow the shape ``SELECT [agg,] DestState FROM ontime WHERE
Month=<m> AND Day=<d> GROUP BY <dim>``.  Each step applies exactly one
move: toggle the aggregate's presence, regroup by a different dimension,
or modify one of the two filter literals, so consecutive queries always
differ by a single subtree change.
"""

from __future__ import annotations

import random

from .parser import parse, serialize
from .tree import AstNode

DEFAULT_SEED = 7

AGG_FUNC = "COUNT"
AGG_ARG = "Delay"
DIMENSIONS = ["DestState", "OriginState", "DestCityName", "DayOfWeek", "UniqueCarrier"]
MONTHS = list(range(1, 13))
DAYS = list(range(1, 29))

_MOVES = ("toggle_agg", "change_dim", "change_month", "change_day")


def _num(value: int) -> AstNode:
    return AstNode("NumExpr", {"text": str(value)})


def _col(name: str) -> AstNode:
    return AstNode("ColExpr", {"name": name})


def _build(agg_present: bool, dim: str, month: int, day: int) -> AstNode:
    proj = []
    if agg_present:
        proj.append(AstNode("ProjClause", None, [
            AstNode("FuncExpr", None, [
                AstNode("FuncName", {"name": AGG_FUNC}), _col(AGG_ARG)])]))
    proj.append(AstNode("ProjClause", None, [_col("DestState")]))
    where = AstNode("Where", None, [AstNode("Cond", None, [
        AstNode("BiExpr", {"op": "and"}, [
            AstNode("BiExpr", {"op": "="}, [_col("Month"), _num(month)]),
            AstNode("BiExpr", {"op": "="}, [_col("Day"), _num(day)]),
        ])])])
    return AstNode("Select", None, [
        AstNode("Project", None, proj),
        AstNode("From", None, [AstNode("TableRef", {"name": "ontime"})]),
        where,
        AstNode("GroupBy", None, [_col(dim)]),
    ])


def gen_olap_walk(n: int, seed: int = DEFAULT_SEED) -> list[AstNode]:
    """Generate ``n`` queries as ASTs; deterministic per seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    agg, dim, month, day = True, "DestState", 9, 3
    out = [_build(agg, dim, month, day)]
    while len(out) < n:
        move = rng.choice(_MOVES)
        if move == "toggle_agg":
            agg = not agg
        elif move == "change_dim":
            dim = rng.choice([d for d in DIMENSIONS if d != dim])
        elif move == "change_month":
            month = rng.choice([m for m in MONTHS if m != month])
        else:
            day = rng.choice([d for d in DAYS if d != day])
        out.append(_build(agg, dim, month, day))
    return out


def gen_olap_log(n: int, seed: int = DEFAULT_SEED) -> list[str]:
    """Generate ``n`` queries as SQL text."""
    return [serialize(q) for q in gen_olap_walk(n, seed)]


def gen_sdss_style_log(n: int, seed: int = 0, clients: int = 1) -> list[str]:
    """Synthetic sky-survey style log for scale tests.

    Each client loops over object-id lookups against a pair of spectral
    tables, occasionally switching the table or the id attribute, which is
    the change pattern the real survey traces show.
    """
    rng = random.Random(seed)
    tables = ["SpecLineIndex", "XCRedshift", "SpecObjAll", "PhotoObj"]
    attrs = ["specObjId", "objId", "targetId"]
    out = []
    per_client = max(1, n // clients)
    for c in range(clients):
        table = tables[c % len(tables)]
        attr = attrs[c % len(attrs)]
        count = per_client if c < clients - 1 else n - per_client * (clients - 1)
        for _ in range(count):
            move = rng.random()
            if move < 0.08:
                table = rng.choice([t for t in tables if t != table])
            elif move < 0.12:
                attr = rng.choice([a for a in attrs if a != attr])
            oid = rng.randrange(1, 1 << 20)
            out.append(f"SELECT * FROM {table} WHERE {attr}=0x{oid:x}")
    return out


def parse_log(statements: list[str]) -> list[AstNode]:
    return [parse(s) for s in statements]
