import itertools

import pytest

from rulecheck.engines import STABLE, WFS
from rulecheck.integrity import eval_ic, test_integrity as check, test_integrity_hypothetical
from rulecheck.kb import KnowledgeBase
from rulecheck.parser import parse_literal, parse_program
from rulecheck.terms import Atom, IntegrityConstraint, Literal


def expected(op, proven):
    if op == "and":
        return not all(proven)
    if op == "not":
        return any(proven)
    if op == "or":
        return not any(proven)
    return sum(proven) >= 2


@pytest.mark.parametrize("op", ["and", "or", "not", "xor"])
def test_truth_table_two_valued(op):
    sizes = (2, 3) if op == "xor" else (1, 2, 3)
    for n in sizes:
        for pattern in itertools.product([True, False], repeat=n):
            facts = " ".join(f"c{i}." for i, v in enumerate(pattern) if v)
            ic = IntegrityConstraint(op, tuple(Literal(Atom(f"c{i}")) for i in range(n)))
            v = eval_ic(parse_program(facts), WFS, ic)
            assert v.violated == expected(op, pattern), (op, pattern)


def test_unknown_conditions_count_as_not_provable():
    p = parse_program("u :- not u. t.")
    u, t = parse_literal("u"), parse_literal("t")
    assert eval_ic(p, WFS, IntegrityConstraint("and", (t, u))).violated
    assert not eval_ic(p, WFS, IntegrityConstraint("not", (u,))).violated
    assert eval_ic(p, WFS, IntegrityConstraint("or", (u, u))).violated
    assert not eval_ic(p, WFS, IntegrityConstraint("xor", (t, u))).violated


def test_witnesses():
    p = parse_program("a. b.")
    ic = IntegrityConstraint("not", tuple(map(parse_literal, ["a", "c", "b"])))
    v = eval_ic(p, WFS, ic)
    assert v.witness == (0, 2)
    assert "violated by a, b" in v.describe()


def test_non_ground_conditions():
    p = parse_program("gold(ann). silver(ann). silver(bob).")
    ic = IntegrityConstraint("xor", (parse_literal("gold(X)"), parse_literal("silver(X)")))
    assert eval_ic(p, WFS, ic).violated


def test_kb_level_check_and_coherence():
    kb = KnowledgeBase.from_program(parse_program(
        "p(a). neg p(a). integrity(or, [q])."))
    report = check(kb)
    ops = sorted(v.constraint.operator for v in report.violated)
    assert ops == ["or", "xor"] and report.checked == 2 and not report.ok


def test_hypothetical_check_leaves_kb_untouched():
    kb = KnowledgeBase.from_program(parse_program("silver(ann). integrity(xor, [gold(ann), silver(ann)])."))
    before = kb.clause_set()
    assert check(kb).ok
    report = test_integrity_hypothetical(kb, WFS, parse_literal("gold(ann)"))
    assert len(report) == 1
    assert kb.clause_set() == before
    with pytest.raises(ValueError):
        test_integrity_hypothetical(kb, WFS, parse_literal("gold(X)"))
    with pytest.raises(ValueError):
        test_integrity_hypothetical(kb, WFS, parse_literal("not gold(ann)"))


def test_stable_engine_constraints():
    p = parse_program("a :- not b. b :- not a.")
    ic = IntegrityConstraint("or", (parse_literal("a"), parse_literal("b")))
    # neither is sceptically true
    assert eval_ic(p, STABLE, ic).violated
