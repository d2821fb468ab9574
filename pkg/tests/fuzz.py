"""Random test-suite generator shared by the interchange and acceptance tests."""

import random

from rulecheck.engines import STABLE, STABLE_CREDULOUS, WFS
from rulecheck.parser import MetaAnnotation, Test, TestCase, answers_of
from rulecheck.terms import Atom, Clause, Compound, Const, IntegrityConstraint, Literal, Var
from rulecheck.testcases import TestSuite

NAMES = ["a", "b", "moor", "Moor", "10%", "it's", "x y", "<&>", "ünï", "not", 'say "hi"', "tab\tin"]
PREDS = ["p", "q", "r", "spending", "Rel", "has space"]
VARS = [Var(n) for n in ("X", "Y", "Z", "Cust")]


def term(rng, depth=2):
    k = rng.random()
    if depth > 0 and k < 0.2:
        return Compound(rng.choice(["f", "g", "Ctor"]),
                        tuple(term(rng, depth - 1) for _ in range(rng.randint(1, 2))))
    if k < 0.45:
        return rng.choice(VARS)
    if k < 0.6:
        return Const(rng.randint(-100, 5000))
    if k < 0.65:
        return Const(rng.choice([0.5, -2.25, 1e-3]))
    return Const(rng.choice(NAMES))


def atom(rng, ground=False):
    if rng.random() < 0.1:
        return Atom(rng.choice([">", "<", "=", "!=", ">=", "=<"]), (term(rng, 0), term(rng, 0)))
    args = tuple(term(rng) for _ in range(rng.randint(0, 3)))
    a = Atom(rng.choice(PREDS), args, rng.random() < 0.15)
    if ground:
        from rulecheck.terms import apply_subst
        a = apply_subst(a, {v: Const("a") for v in VARS})
    return a


def literal(rng):
    a = atom(rng)
    return Literal(a, naf=not a.is_builtin and rng.random() < 0.25)


def assertion(rng):
    k = rng.random()
    if k < 0.15:
        op = rng.choice(IntegrityConstraint.OPERATORS)
        n = rng.randint(2 if op == "xor" else 1, 3)
        return IntegrityConstraint(op, tuple(literal(rng) for _ in range(n)))
    head = atom(rng)
    while head.is_builtin:
        head = atom(rng)
    body = tuple(literal(rng) for _ in range(rng.randint(0, 3))) if k > 0.4 else ()
    return Clause(head, body)


def answer_set(rng, query):
    from rulecheck.terms import variables
    vs = variables(query)
    if not vs:
        return None
    return answers_of({v: term(rng, 1) for v in vs} for _ in range(rng.randint(0, 3)))


def test_for(rng, i):
    query = tuple(literal(rng) for _ in range(rng.randint(1, 3)))
    label = rng.choice(["true", "true", "false", "unknown"])
    answers = answer_set(rng, query) if label == "true" and rng.random() < 0.6 else None
    return Test(
        name=rng.choice(["t", "Test 1", "check <x>", "ünï"]) + str(i),
        query=query,
        expected_label=label,
        expected_answers=answers,
        expected_count=rng.choice([None, None, 0, 2]),
        time_budget_ms=rng.choice([None, None, 1000, 5]),
        message=rng.choice(["", "failed", "no discount & no gold"]),
        semantics=rng.choice([None, None, "semantics:WFS", "semantics:STABLE"]),
    )


def annotation(rng):
    if rng.random() < 0.5:
        return None
    ann = MetaAnnotation(rng.choice([None, "semantics:WFS", "semantics:STABLE"]),
                         rng.choice([None, "class:Normal", "class:Propositional"]),
                         rng.choice([None, "syntax:Prolog"]))
    # an empty annotation has no XML form
    return ann if ann != MetaAnnotation() else None


def random_suite(rng: random.Random) -> TestSuite:
    cases = []
    for i in range(rng.randint(0, 4)):
        assertions = tuple(dict.fromkeys(assertion(rng) for _ in range(rng.randint(0, 5))))
        tests = tuple(test_for(rng, j) for j in range(rng.randint(0, 3)))
        cases.append(TestCase(f"case-{i}" if rng.random() < 0.7 else f"./examples/tc{i}.test",
                              assertions, tests, annotation(rng)))
    return TestSuite(rng.choice(["suite", "policy tests", "s&t"]), tuple(cases),
                     rng.choice([WFS, STABLE, STABLE_CREDULOUS]), annotation(rng))
