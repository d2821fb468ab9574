"""Parser for the rule scripting syntax: programs, queries and test scripts.

Variables start with an uppercase letter or ``_``; symbols start lowercase
or are single-quoted.  ``not`` is default negation, ``neg`` explicit
negation.  ``#`` starts a comment (``%`` is left alone so that quoted
constants such as ``'10%'`` survive).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .kb import Program, RuleCheckError, program_of
from .terms import (
    BUILTINS,
    Atom,
    Clause,
    Compound,
    Const,
    IntegrityConstraint,
    Literal,
    Var,
    variables,
)


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    severity: str = "error"

    def __str__(self):
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class ParseError(RuleCheckError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(map(str, self.diagnostics)))


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<number>\d+\.\d+(?![A-Za-z_])|\d+)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<symbol>[a-z][A-Za-z0-9_]*)
  | (?P<quoted>'(?:[^'\\\n]|\\.)*')
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<punct>:-|>=|=<|==|!=|[()\[\],.?><=/-])
    """,
    re.VERBOSE,
)

_UNESCAPE_RE = re.compile(r"\\(.)", re.DOTALL)
_ESCAPES = {"n": "\n", "t": "\t"}


def _unescape(s: str) -> str:
    return _UNESCAPE_RE.sub(lambda m: _ESCAPES.get(m.group(1), m.group(1)), s)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int

    @property
    def value(self):
        if self.kind == "quoted" or self.kind == "string":
            return _unescape(self.text[1:-1])
        return self.text


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError([ParseDiagnostic(line, col, f"unexpected character {text[pos]!r}")])
        kind = m.lastgroup
        tok_text = m.group()
        if kind != "ws":
            tokens.append(Token(kind, tok_text, line, col))
        newlines = tok_text.count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + tok_text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.anon = 0

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k=1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, text, kind="punct") -> bool:
        return self.tok.kind == kind and self.tok.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def error(self, message, tok=None):
        tok = tok or self.tok
        where = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError([ParseDiagnostic(tok.line, tok.col, f"{message} (at {where})")])

    def expect(self, text, what=None):
        if not self.at(text):
            self.error(f"expected {what or repr(text)}")
        return self.advance()

    # -- terms
    def term(self):
        t = self.tok
        if t.kind == "var":
            self.advance()
            if t.text == "_":
                self.anon += 1
                return Var(f"_G{self.anon}")
            return Var(t.text)
        if t.kind == "number" or (self.at("-") and self.peek().kind == "number"):
            sign = -1 if self.at("-") else 1
            if sign < 0:
                self.advance()
            num = self.advance().text
            return Const(sign * (float(num) if "." in num else int(num)))
        if t.kind in ("symbol", "quoted", "string"):
            self.advance()
            name = t.value
            if t.kind != "string" and self.at("("):
                return Compound(name, self.args(self.term))
            return Const(name)
        self.error("expected a term")

    def args(self, item):
        self.expect("(")
        out = [item()]
        while self.at(","):
            self.advance()
            out.append(item())
        self.expect(")", "',' or ')'")
        return tuple(out)

    # -- atoms and literals
    def atom(self) -> Atom:
        neg = False
        if self.tok.kind == "symbol" and self.tok.text == "neg" and self.peek().kind in (
            "symbol",
            "quoted",
        ):
            self.advance()
            neg = True
        t = self.tok
        if t.kind not in ("symbol", "quoted"):
            self.error("expected an atom")
        self.advance()
        args = self.args(self.term) if self.at("(") else ()
        return Atom(t.value, args, neg)

    def literal(self) -> Literal:
        if self.tok.kind == "symbol" and self.tok.text == "not":
            nxt = self.peek()
            if nxt.kind == "punct" and nxt.text == "(":
                self.advance()
                self.advance()
                inner = self.literal()
                self.expect(")")
                return Literal(inner.atom, not inner.naf)
            if nxt.kind in ("symbol", "quoted", "var", "number") or nxt.text == "-":
                self.advance()
                inner = self.literal()
                return Literal(inner.atom, not inner.naf)
        # infix builtin: term op term
        start = self.i
        if self.tok.kind in ("var", "number") or self.at("-") or self._looks_like_builtin():
            left = self.term()
            if self.tok.kind == "punct" and self.tok.text in BUILTINS:
                op = self.advance().text
                right = self.term()
                return Literal(Atom(op, (left, right)))
            self.i = start
        return Literal(self.atom())

    def _looks_like_builtin(self) -> bool:
        # a term followed by a comparison operator, e.g. f(X) > 3 or a == b
        depth, j = 0, self.i
        while j < len(self.tokens):
            t = self.tokens[j]
            if t.kind == "punct" and t.text in "([":
                depth += 1
            elif t.kind == "punct" and t.text in ")]":
                depth -= 1
                if depth < 0:
                    return False
            elif depth == 0 and t.kind == "punct":
                return t.text in BUILTINS
            elif depth == 0 and j > self.i and t.kind != "punct":
                return False
            j += 1
        return False

    def body(self) -> tuple:
        out = [self.literal()]
        while self.at(","):
            self.advance()
            out.append(self.literal())
        return tuple(out)

    def clause(self):
        """A clause or ``integrity(op, [conditions])``, terminated by '.'."""
        if self.tok.kind == "symbol" and self.tok.text == "integrity" and self.peek().text == "(":
            return self.integrity()
        head = self.atom()
        if head.predicate in BUILTINS and not head.neg:
            self.error("built-in predicate cannot be a rule head")
        body = ()
        if self.at(":-"):
            self.advance()
            body = self.body()
        self.expect(".", "'.' at end of clause")
        return Clause(head, body)

    def integrity(self) -> IntegrityConstraint:
        start = self.advance()
        self.expect("(")
        op_tok = self.tok
        if op_tok.kind != "symbol" or op_tok.text not in IntegrityConstraint.OPERATORS:
            self.error("expected integrity operator and/or/not/xor")
        self.advance()
        self.expect(",")
        self.expect("[")
        conds = [self.literal()]
        while self.at(","):
            self.advance()
            conds.append(self.literal())
        self.expect("]")
        self.expect(")")
        self.expect(".", "'.' at end of clause")
        try:
            return IntegrityConstraint(op_tok.text, tuple(conds))
        except ValueError as e:
            self.error(str(e), start)


def _unsafe_warnings(clause: Clause, tok: Token) -> list:
    positive = {v for lit in clause.body if not lit.naf and not lit.atom.is_builtin
                for v in variables(lit.atom)}
    unsafe = [v.name for v in variables(clause.head) if v not in positive]
    if clause.body and unsafe:
        return [ParseDiagnostic(tok.line, tok.col,
                                f"unsafe head variable(s) {', '.join(unsafe)} in rule for "
                                f"{clause.head.predicate}", "warning")]
    return []


def parse_program(text: str, warnings: list | None = None) -> Program:
    """Parse program text into a :class:`Program` (clauses and integrity constraints).

    Raises :class:`ParseError` on syntax errors.  Unsafe-variable warnings are
    appended to ``warnings`` when a list is given.
    """
    p = _Parser(text)
    items = []
    while p.tok.kind != "eof":
        tok = p.tok
        item = p.clause()
        if isinstance(item, Clause) and warnings is not None:
            warnings.extend(_unsafe_warnings(item, tok))
        items.append(item)
    return program_of(items)


def parse_clause(text: str) -> Clause:
    prog = parse_program(text if text.rstrip().endswith(".") else text + ".")
    if len(prog.clauses) != 1:
        raise ParseError([ParseDiagnostic(1, 1, "expected exactly one clause")])
    return prog.clauses[0]


def parse_query(text: str) -> tuple:
    """Parse ``L1, ..., Ln?`` (the trailing ``?`` is optional) into literals."""
    p = _Parser(text)
    lits = p.body()
    if p.at("?") or p.at("."):
        p.advance()
    if p.tok.kind != "eof":
        p.error("expected end of query")
    return lits


def parse_literal(text: str) -> Literal:
    lits = parse_query(text)
    if len(lits) != 1:
        raise ParseError([ParseDiagnostic(1, 1, "expected a single literal")])
    return lits[0]


def parse_bindings(text: str) -> dict:
    """Parse ``X = t1, Y = t2`` into a substitution (empty text gives ``{}``)."""
    p = _Parser(text)
    out = {}
    while p.tok.kind != "eof":
        if out:
            p.expect(",")
        v = p.term()
        if not isinstance(v, Var):
            p.error("expected a variable")
        p.expect("=")
        out[v] = p.term()
    return out


def format_bindings(binding: dict) -> str:
    return ", ".join(f"{v} = {t}" for v, t in sorted(binding.items(), key=lambda kv: kv[0].name))


# -- test scripts --------------------------------------------------------------


@dataclass(frozen=True)
class Test:
    """One test ``Q => R : answers [< ms]``."""

    __test__ = False

    name: str
    query: tuple
    expected_label: str = "true"
    expected_answers: frozenset | None = None  # of frozenset((Var, Term) pairs)
    expected_count: int | None = None
    time_budget_ms: int | None = None
    message: str = ""
    semantics: str | None = None

    def __post_init__(self):
        if self.expected_label not in ("true", "false", "unknown"):
            raise ValueError(f"bad expected label {self.expected_label!r}")
        if self.expected_answers is not None:
            free = set(variables(self.query))
            if not free:
                raise ValueError(f"test {self.name!r}: answer set on a ground query")
            if self.expected_label == "false" and self.expected_answers:
                raise ValueError(f"test {self.name!r}: failing test with nonempty answers")
        if self.time_budget_ms is not None and self.time_budget_ms <= 0:
            raise ValueError("time budget must be positive")
        if self.expected_count is not None and self.expected_count < 0:
            raise ValueError("expected count must be >= 0")


@dataclass(frozen=True)
class MetaAnnotation:
    semantics: str | None = None
    lp_class: str | None = None
    syntax: str | None = None


@dataclass(frozen=True)
class TestCase:
    __test__ = False

    id: str
    assertions: tuple = ()  # Clause | IntegrityConstraint
    tests: tuple = ()
    annotations: MetaAnnotation | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("test case id must be nonempty")


def answers_of(bindings) -> frozenset:
    """Normalize an iterable of ``{Var: Term}`` dicts into a comparable answer set."""
    return frozenset(frozenset(b.items()) for b in bindings)


_TEST_GOALS = {
    "testQuery",
    "testNotQuery",
    "testNegQuery",
    "testUnknownQuery",
    "testResults",
    "testNumberOfResults",
    "testTime",
}


@dataclass
class _TestDraft:
    name: str
    message: str = ""
    failure_message: str | None = None
    query: tuple | None = None
    label: str | None = None
    answers: frozenset | None = None
    count: int | None = None
    budget: int | None = None
    tok: Token | None = None
    extras: dict = field(default_factory=dict)


class _ScriptParser(_Parser):
    def string(self) -> str:
        t = self.tok
        if t.kind not in ("string", "quoted", "symbol"):
            self.error("expected a string")
        self.advance()
        return t.value

    def case_ref(self) -> str:
        """A test case id, quoted or written as a bare path like ``./dir/tc1.test``."""
        if self.tok.kind in ("string", "quoted"):
            return self.string()
        parts = []
        while not self.at(")") and self.tok.kind != "eof":
            parts.append(self.advance().text)
        if not parts:
            self.error("expected a test case id")
        return "".join(parts)

    def integer(self) -> int:
        t = self.tok
        if t.kind != "number" or "." in t.text:
            self.error("expected an integer")
        self.advance()
        return int(t.text)

    def bindings_list(self) -> frozenset:
        self.expect("[")
        answers = []
        if not self.at("]"):
            while True:
                if self.at("["):
                    self.advance()
                    pairs = []
                    if not self.at("]"):
                        pairs.append(self.binding())
                        while self.at(","):
                            self.advance()
                            pairs.append(self.binding())
                    self.expect("]")
                    answers.append(dict(pairs))
                else:
                    answers.append(dict([self.binding()]))
                if not self.at(","):
                    break
                self.advance()
        self.expect("]")
        return answers_of(answers)

    def binding(self):
        t = self.tok
        if t.kind != "var" or t.text == "_":
            self.error("expected a variable binding Var/Term")
        self.advance()
        self.expect("/")
        return Var(t.text), self.term()

    def goal_args(self, draft: _TestDraft, name: str):
        """Parse ``(lit, ..., [bindings] | N)`` after a test goal name."""
        self.expect("(")
        lits, answers, count = [], None, None
        while True:
            if self.at("["):
                answers = self.bindings_list()
            elif self.tok.kind == "number" and self.peek().text == ")":
                count = self.integer()
            else:
                lits.append(self.literal())
            if not self.at(","):
                break
            self.advance()
        self.expect(")")
        return tuple(lits), answers, count

    def test_goal(self, draft: _TestDraft, case_id: str | None):
        t = self.tok
        if t.kind == "symbol" and t.text == "testcase":
            self.advance()
            self.expect("(")
            ref = self.case_ref()
            self.expect(")")
            if case_id is not None and ref != case_id:
                self.error(f"test refers to unknown test case {ref!r}", t)
            return
        if t.kind != "symbol" or t.text not in _TEST_GOALS:
            self.error("unknown test goal", t)
        self.advance()
        if t.text == "testTime":
            self.expect("(")
            draft.budget = self.integer()
            self.expect(")")
            return
        lits, answers, count = self.goal_args(draft, t.text)
        if t.text == "testNegQuery":
            lits = tuple(Literal(Atom(l.atom.predicate, l.atom.args, not l.atom.neg), l.naf)
                         for l in lits)
        if lits:
            if draft.query is not None and draft.query != lits:
                self.error("conflicting queries in one test", t)
            draft.query = lits
        label = {"testQuery": "true", "testNegQuery": "true", "testNotQuery": "false",
                 "testUnknownQuery": "unknown"}.get(t.text)
        if label is not None:
            if draft.label is not None and draft.label != label:
                self.error("conflicting expected results in one test", t)
            draft.label = label
        if t.text == "testResults":
            if answers is None:
                self.error("testResults needs a binding list", t)
            draft.answers = answers
        if t.text == "testNumberOfResults":
            if count is None:
                self.error("testNumberOfResults needs a count", t)
            draft.count = count


def parse_test_script(text: str) -> TestCase:
    """Parse a ``.test`` script into a :class:`TestCase`.

    Recognized statements::

        testcase("id").
        update("module", "clauses ...").          # also :- solve(update(...)).
        integrity(xor, [p(X), q(X)]).
        p(a).  q(X) :- p(X).                      # plain clauses are assertions
        testSuccess("name", "msg") :- testcase("id"), testQuery(p(X)),
            testResults([X/a, X/b]), testNumberOfResults(2), testTime(1000).
        testFailure("name", "msg") :- not(testSuccess("name", M)).
        runTest("id") :- testSuccess("name", M).
    """
    p = _ScriptParser(text)
    case_id = None
    assertions: list = []
    drafts: dict = {}
    while p.tok.kind != "eof":
        t = p.tok
        if p.at(":-"):
            p.advance()
            if p.tok.text == "solve":
                p.advance()
                p.expect("(")
                _script_update(p, assertions)
                p.expect(")")
            elif p.tok.text == "update":
                _script_update(p, assertions)
            else:
                p.error("unknown directive")
            p.expect(".")
            continue
        if t.kind == "symbol" and p.peek().text == "(" and t.text in (
            "testcase", "update", "testSuccess", "testFailure", "runTest"):
            if t.text == "testcase":
                p.advance()
                p.expect("(")
                if case_id is not None:
                    p.error("duplicate testcase header", t)
                case_id = p.string()
                p.expect(")")
                p.expect(".")
            elif t.text == "update":
                _script_update(p, assertions)
                p.expect(".")
            elif t.text == "testSuccess":
                _script_success(p, drafts, case_id)
            elif t.text == "testFailure":
                _script_failure(p, drafts)
            else:
                p.advance()
                p.args(p.term)
                if p.at(":-"):
                    p.advance()
                    p.body()
                p.expect(".")
            continue
        if t.kind == "symbol" and t.text.startswith("test") and t.text != "test":
            p.error("unknown directive")
        assertions.append(p.clause())
    if case_id is None:
        tok = p.tokens[0]
        raise ParseError([ParseDiagnostic(tok.line, tok.col, "missing testcase(ID) header")])
    tests = []
    for d in drafts.values():
        tests.append(_finish_test(d))
    return TestCase(case_id, tuple(dict.fromkeys(assertions)), tuple(tests))


def _script_update(p: _ScriptParser, assertions: list):
    p.advance()  # 'update'
    p.expect("(")
    p.string()
    p.expect(",")
    tok = p.tok
    text = p.string()
    p.expect(")")
    try:
        prog = parse_program(text)
    except ParseError as e:
        # re-anchor diagnostics at the update string
        raise ParseError([ParseDiagnostic(tok.line, tok.col, f"in update: {d.message}")
                          for d in e.diagnostics]) from None
    assertions.extend(prog.clauses + prog.constraints)


def _script_success(p: _ScriptParser, drafts: dict, case_id):
    tok = p.advance()
    p.expect("(")
    name = p.string()
    message = ""
    if p.at(","):
        p.advance()
        if p.tok.kind == "var":
            p.advance()
        else:
            message = p.string()
    p.expect(")")
    if name in drafts and drafts[name].query is not None:
        p.error(f"duplicate test {name!r}", tok)
    draft = drafts.setdefault(name, _TestDraft(name))
    draft.message, draft.tok = message, tok
    p.expect(":-")
    p.test_goal(draft, case_id)
    while p.at(","):
        p.advance()
        p.test_goal(draft, case_id)
    p.expect(".")
    if draft.query is None:
        p.error(f"test {name!r} has no query", tok)


def _script_failure(p: _ScriptParser, drafts: dict):
    tok = p.advance()
    p.expect("(")
    name = p.string()
    message = ""
    if p.at(","):
        p.advance()
        message = p.string()
    p.expect(")")
    if p.at(":-"):
        p.advance()
        p.body()
    p.expect(".")
    drafts.setdefault(name, _TestDraft(name, tok=tok)).failure_message = message


def _finish_test(d: _TestDraft) -> Test:
    if d.query is None:
        tok = d.tok
        raise ParseError([ParseDiagnostic(tok.line, tok.col,
                                          f"testFailure for unknown test {d.name!r}")])
    label = d.label
    if label is None:
        label = "false" if d.count == 0 or d.answers == frozenset() else "true"
    message = d.failure_message if d.failure_message is not None else d.message
    try:
        return Test(d.name, d.query, label, d.answers, d.count, d.budget, message)
    except ValueError as e:
        raise ParseError([ParseDiagnostic(d.tok.line, d.tok.col, str(e))]) from None


# -- printing ------------------------------------------------------------------


def _quote_string(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def format_answers(answers: frozenset) -> str:
    rows = sorted((sorted((v.name, str(t)) for v, t in ans) for ans in answers))
    if all(len(r) == 1 for r in rows):
        return "[" + ", ".join(f"{v}/{t}" for r in rows for v, t in r) + "]"
    return "[" + ", ".join("[" + ", ".join(f"{v}/{t}" for v, t in r) + "]" for r in rows) + "]"


def format_test_script(tc: TestCase) -> str:
    lines = [f"testcase({_quote_string(tc.id)})."]
    lines += [str(a) for a in tc.assertions]
    for t in tc.tests:
        q = ", ".join(map(str, t.query))
        goal = {"true": "testQuery", "false": "testNotQuery", "unknown": "testUnknownQuery"}
        goals = [f"testcase({_quote_string(tc.id)})", f"{goal[t.expected_label]}({q})"]
        if t.expected_answers is not None:
            goals.append(f"testResults({format_answers(t.expected_answers)})")
        if t.expected_count is not None:
            goals.append(f"testNumberOfResults({t.expected_count})")
        if t.time_budget_ms is not None:
            goals.append(f"testTime({t.time_budget_ms})")
        lines.append(f"testSuccess({_quote_string(t.name)}, {_quote_string(t.message)}) :-\n    "
                     + ",\n    ".join(goals) + ".")
    return "\n".join(lines) + "\n"
