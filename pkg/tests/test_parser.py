from __future__ import annotations

import pytest

from conftest import load_bundled_log
from querydeck.parser import (ParseError, numeric_value, parse, serialize,
                              serialize_template)
from querydeck.tree import NodePath, node_at


def test_parse_sdss_lookup(ann):
    q = parse("SELECT * FROM SpecLineIndex WHERE specObjId=0x400", ann)
    assert node_at(q, NodePath((0, 0, 0))).node_type == "Star"
    table = node_at(q, NodePath((1, 0)))
    assert (table.node_type, table.attrs["name"]) == ("TableRef", "SpecLineIndex")
    pred = node_at(q, NodePath.parse("2/0/0"))
    assert pred.node_type == "BiExpr" and pred.attrs["op"] == "="
    lit = node_at(q, NodePath.parse("2/0/0/1"))
    assert lit.node_type == "NumExpr"
    assert numeric_value(lit) == 0x400
    assert serialize(lit) == "0x400"


def test_worked_example_paths(ann, worked_pair):
    q1, _ = worked_pair
    assert node_at(q1, NodePath.parse("0/1")).node_type == "ProjClause"
    leaf = node_at(q1, NodePath.parse("0/1/0"))
    assert (leaf.node_type, leaf.attrs["name"]) == ("ColExpr", "sales")
    assert node_at(q1, NodePath.parse("2/0/0/1")).attrs["value"] == "USA"


def test_round_trip_simple(ann):
    q = parse("SELECT sales, costs FROM T", ann)
    assert parse(serialize(q), ann) == q


def test_serialize_worked_example(ann, worked_pair):
    q1, _ = worked_pair
    assert serialize(q1) == "SELECT day, sales FROM sf WHERE cty = 'USA'"


def test_parse_error_offset(ann):
    with pytest.raises(ParseError) as err:
        parse("SELECT ?? FROM t", ann)
    assert err.value.offset == 7


def test_non_select_rejected(ann):
    with pytest.raises(ParseError):
        parse("INSERT INTO t VALUES (1)", ann)
    with pytest.raises(ParseError):
        parse("DROP TABLE t", ann)


def test_unsupported_construct_rejected(ann):
    with pytest.raises(ParseError):
        parse("SELECT a FROM t WHERE b IN (1, 2)", ann)


def test_fragment_serialization(ann):
    q = parse("SELECT a FROM t WHERE x = 3", ann)
    assert serialize(node_at(q, NodePath.parse("2/0/0/1"))) == "3"
    assert serialize(node_at(q, NodePath.parse("2/0/0"))) == "x = 3"
    assert serialize(node_at(q, NodePath((1,)))) == "FROM t"


def test_keywords_case_insensitive_strings_not(ann):
    a = parse("select A from T where X = 'usa'", ann)
    b = parse("SELECT A FROM T WHERE X = 'usa'", ann)
    c = parse("SELECT A FROM T WHERE X = 'USA'", ann)
    assert a == b
    assert a != c


def test_distinct_top_and_aliases(ann):
    q = parse("SELECT DISTINCT TOP 5 a AS x FROM t1 AS u, t2 v", ann)
    assert q.attrs.get("distinct") is True
    assert node_at(q, NodePath((0,))).node_type == "TopClause"
    assert serialize(q) == "SELECT DISTINCT TOP 5 a AS x FROM t1 AS u, t2 AS v"
    assert parse(serialize(q), ann) == q


def test_case_cast_having_round_trip(ann):
    text = ("SELECT (CASE carrier WHEN 'AA' THEN 'AA' ELSE 'Other' END) AS carrier, "
            "FLOOR(distance / 5) AS distance FROM ontime")
    q = parse(text, ann)
    assert parse(serialize(q), ann) == q
    q2 = parse("SELECT SUM(flights) FROM ontime WHERE canceled = 1 "
               "HAVING SUM(flights) > 149 and SUM(flights) < 1354", ann)
    assert parse(serialize(q2), ann) == q2
    q3 = parse("SELECT CAST(uniquecarrier) AS uniquecarrier FROM ontime", ann)
    assert parse(serialize(q3), ann) == q3
    q4 = parse("SELECT CAST(delay AS int) FROM ontime", ann)
    assert parse(serialize(q4), ann) == q4


def test_operator_precedence_parens(ann):
    q = parse("SELECT a FROM t WHERE x = 1 and (y = 2 or z = 3)", ann)
    assert serialize(q) == "SELECT a FROM t WHERE x = 1 AND (y = 2 OR z = 3)"
    assert parse(serialize(q), ann) == q
    q2 = parse("SELECT a - (b - c) FROM t", ann)
    assert serialize(q2) == "SELECT a - (b - c)  FROM t".replace("  ", " ")
    assert parse(serialize(q2), ann) == q2


def test_subquery_and_table_function(ann):
    q = parse("SELECT g.objID FROM Galaxy as g, "
              "dbo.fGetNearbyObjEq(5.848,0.352,2.0616) as d "
              "WHERE d.objID = g.objID", ann)
    fn = node_at(q, NodePath((1, 1)))
    assert fn.node_type == "TableFunc"
    assert fn.attrs["name"] == "dbo.fGetNearbyObjEq"
    assert parse(serialize(q), ann) == q
    q2 = parse("SELECT * FROM (SELECT a FROM T WHERE b > 10)", ann)
    assert node_at(q2, NodePath((1, 0))).node_type == "SubQuery"
    assert parse(serialize(q2), ann) == q2


@pytest.mark.parametrize("log_name", ["sample_sdss", "params", "func_full",
                                      "top", "subquery"])
def test_serialize_fixed_point_on_corpus(ann, log_name):
    # serialize∘parse∘serialize is a fixed point on every bundled query
    for q in load_bundled_log(log_name):
        text = serialize(q)
        again = parse(text, ann)
        assert again == q
        assert serialize(again) == text


def test_annotation_coverage_on_corpus(ann):
    # every literal leaf in every bundled query has a registered primitive kind
    for q in load_bundled_log("sample_sdss"):
        for _, node in q.walk():
            if node.node_type in ("NumExpr", "StrExpr"):
                assert node.node_type in ann.primitive_map
                assert not node.children


def test_serialize_template_slot_contexts(ann):
    # A slot owns one adjacent separator so absent splices stay well-formed:
    # the client renders prefix + fragment + suffix for a present value.
    q = parse("SELECT TOP 3 a, b FROM t", ann)
    text, contexts = serialize_template(q, {(0,): "wtop", (1, 1): "wb"})
    assert text == "SELECT {{wtop}}a{{wb}} FROM t"
    assert contexts["wtop"] == {"sep_prefix": "", "sep_suffix": " "}
    assert contexts["wb"] == {"sep_prefix": ", ", "sep_suffix": ""}
    filled = (text.replace("{{wtop}}", "TOP 3 ")
                  .replace("{{wb}}", ", b"))
    assert filled == "SELECT TOP 3 a, b FROM t"
    assert text.replace("{{wtop}}", "").replace("{{wb}}", "") == "SELECT a FROM t"


def test_hex_literals_preserved(ann):
    q = parse("SELECT * FROM t WHERE id = 0x3", ann)
    assert serialize(q).endswith("0x3")
    assert numeric_value(node_at(q, NodePath.parse("2/0/0/1"))) == 3
