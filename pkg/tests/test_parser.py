from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rulecheck.parser import (
    ParseError,
    format_test_script,
    parse_bindings,
    parse_clause,
    parse_literal,
    parse_program,
    parse_query,
    parse_test_script,
)
from rulecheck.terms import Atom, Clause, Compound, Const, IntegrityConstraint, Literal, Var

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def test_clause_forms():
    c = parse_clause("gold(C) :- spending(C, V), V > 3000.")
    assert c.head == Atom("gold", (Var("C"),))
    assert c.body[1] == Literal(Atom(">", (Var("V"), Const(3000))))
    assert parse_clause("p.").is_fact


def test_negations():
    lit = parse_literal("not neg p(a)")
    assert lit.naf and lit.atom.neg
    assert parse_literal("not(q)") == Literal(Atom("q"), naf=True)


def test_quoted_and_numbers():
    c = parse_clause("discount(C, '10%') :- price(-3, 2.5, \"str\").")
    assert c.head.args[1] == Const("10%")
    assert c.body[0].atom.args == (Const(-3), Const(2.5), Const("str"))


def test_anonymous_variables_are_distinct():
    c = parse_clause("p :- q(_, _).")
    v1, v2 = c.body[0].atom.args
    assert v1 != v2


def test_comments_are_skipped():
    p = parse_program("# a comment\np. # trailing\nq.")
    assert len(p.clauses) == 2


def test_integrity_syntax():
    p = parse_program("integrity(xor, [gold(X), silver(X)]).")
    ic = p.constraints[0]
    assert isinstance(ic, IntegrityConstraint) and ic.operator == "xor"
    with pytest.raises(ParseError):
        parse_program("integrity(nand, [p]).")


def test_errors_carry_positions():
    with pytest.raises(ParseError) as e:
        parse_program("p.\nq(a :- r.")
    d = e.value.diagnostics[0]
    assert d.line == 2 and d.column > 1


def test_builtin_head_rejected():
    with pytest.raises(ParseError):
        parse_program("X > 3 :- p(X).")


def test_unsafe_variable_warning():
    warnings = []
    parse_program("p(X) :- not q(X).", warnings)
    assert warnings and warnings[0].severity == "warning"
    warnings = []
    parse_program("p(X) :- r(X), not q(X).", warnings)
    assert not warnings


def test_query_trailing_mark_optional():
    assert parse_query("p(X), not q(X)?") == parse_query("p(X), not q(X)")


def test_bindings():
    assert parse_bindings("X = a, Y = f(b, 3)") == {
        Var("X"): Const("a"), Var("Y"): Compound("f", (Const("b"), Const(3)))}
    assert parse_bindings("") == {}


# -- scripts


def test_tc1_script_shape():
    tc = parse_test_script((SAMPLES / "tc1.test").read_text())
    assert tc.id == "./examples/tc1.test"
    assert [str(c) for c in tc.assertions] == ["a(X) :- b(X).", "b(1).", "b(2)."]
    (t,) = tc.tests
    assert t.name == "test1" and t.expected_label == "true"
    assert t.query == (Literal(Atom("a", (Const(1),))),)
    # the negative rule's message wins for reporting
    assert t.message == "can not derive a"


def test_full_goal_vocabulary():
    tc = parse_test_script("""
        testcase("t").
        update("m", "p(a). p(b).").
        testSuccess("all", "m") :- testcase("t"), testQuery(p(X)),
            testResults([X/a, X/b]), testNumberOfResults(2), testTime(500).
        testSuccess("none", "m") :- testcase("t"), testNotQuery(q).
        testSuccess("neg", "m") :- testcase("t"), testNegQuery(r).
        testSuccess("undef", "m") :- testcase("t"), testUnknownQuery(s).
    """)
    t = {x.name: x for x in tc.tests}
    assert t["all"].expected_count == 2 and t["all"].time_budget_ms == 500
    assert len(t["all"].expected_answers) == 2
    assert t["none"].expected_label == "false"
    assert t["neg"].query[0].atom.neg
    assert t["undef"].expected_label == "unknown"


def test_multi_variable_results():
    tc = parse_test_script("""
        testcase("t").
        testSuccess("x", "") :- testcase("t"), testQuery(e(X, Y)),
            testResults([[X/a, Y/b], [X/b, Y/a]]).
    """)
    assert len(tc.tests[0].expected_answers) == 2


@pytest.mark.parametrize("text", [
    'testSuccess("a", "") :- testQuery(p).',  # no header
    'testcase("t"). testSuccess("a", "") :- testcase("t"), testBogus(p).',
    'testcase("t"). testSuccess("a", "") :- testcase("t"), testQuery(p). '
    'testSuccess("a", "") :- testcase("t"), testQuery(q).',
    'testcase("t"). testSuccess("a", "") :- testcase("t"), testQuery(p), testQuery(q).',
    'testcase("t"). testSuccess("a", "") :- testcase("u"), testQuery(p).',
    'testcase("t"). testSuccess("a", "") :- testcase("t"), testQuery(p), testResults([X/a]).',
])
def test_script_errors(text):
    with pytest.raises(ParseError):
        parse_test_script(text)


def test_script_round_trip():
    tc = parse_test_script((SAMPLES / "discount.test").read_text())
    assert parse_test_script(format_test_script(tc)) == tc


# -- printing round trip

names = st.sampled_from(["p", "q", "r", "Moor", "10%", "it's", "not", "a b"])
consts = st.one_of(names.map(Const), st.integers(-50, 50).map(Const),
                   st.sampled_from([0.5, 2.25]).map(Const))
terms = st.recursive(
    st.one_of(consts, st.sampled_from(["X", "Y", "Z"]).map(Var)),
    lambda inner: st.builds(Compound, st.sampled_from(["f", "g", "H"]),
                            st.lists(inner, min_size=1, max_size=2).map(tuple)),
    max_leaves=5,
)
atoms = st.builds(Atom, st.sampled_from(["p", "q", "Rel"]),
                  st.lists(terms, max_size=2).map(tuple), st.booleans())
literals = st.builds(Literal, atoms, st.booleans())
clauses = st.builds(Clause, atoms, st.lists(literals, max_size=3).map(tuple))


@given(st.lists(clauses, max_size=4))
def test_print_parse_round_trip(cs):
    text = "\n".join(map(str, cs))
    assert parse_program(text).clauses == tuple(dict.fromkeys(cs))
