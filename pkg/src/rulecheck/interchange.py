"""XML interchange for test suites, and xUnit-style run reports.

Document grammar (alternatives ``|``, optional ``[]``, repeated ``{}``)::

    TestSuite  ::= [oid,] content | And
    content    ::= {TestCase}
    TestCase   ::= [oid,] {Test,} [assertions | And]
    Test       ::= [oid,] [Ind | Var,] [Ind | Var,] Query, [answer]
    Query      ::= And | literal
    answer     ::= {Substitutions}
    Substitutions ::= {Var, Ind | Cterm}
    assertions ::= And
    And        ::= {literal | Implies | Integrity}
    literal    ::= Atom | Neg | Naf
    Atom       ::= Rel, {Ind | Var | Cterm}
    Cterm      ::= Ctor, {Ind | Var | Cterm}

Without an ``oid`` the first ``Ind`` of a Test is its name and the second
its message.  ``semantics``, ``class`` and ``syntax`` attributes carry meta
annotations on TestSuite, TestCase and Test.  Test also takes ``label``
(true/false/unknown), ``count`` and ``timeout`` (ms).
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timezone
from xml.parsers import expat

from .engines import WFS, EngineId
from .parser import MetaAnnotation, ParseDiagnostic, ParseError, Test, TestCase
from .terms import Atom, Clause, Compound, Const, IntegrityConstraint, Literal, Var
from .testcases import TestSuite

SEMANTICS = {"WFS", "STABLE", "COMP", "COMP3", "WGCWA", "GCWA", "PERFECT", "LHM", "SUPPORTED",
             "GWFS"}
CLASSES = {"Propositional", "Datalog", "Definite", "Stratified", "Normal", "Extended",
           "Disjunctive", "Positive", "PosDisjunctive", "StratDisjunctive"}
SYNTAXES = {"Prolog", "ContractLog", "RuleML", "ISO-Prolog", "Datalog"}
_VOCAB = {"semantics": SEMANTICS, "class": CLASSES, "syntax": SYNTAXES}


class XmlError(ParseError):
    pass


# -- export ---------------------------------------------------------------------


def _term_el(t) -> ET.Element:
    if isinstance(t, Var):
        el = ET.Element("Var")
        el.text = t.name
    elif isinstance(t, Const):
        el = ET.Element("Ind")
        if isinstance(t.value, int):
            el.set("type", "integer")
        elif isinstance(t.value, float):
            el.set("type", "float")
        el.text = repr(t.value) if isinstance(t.value, float) else str(t.value)
    else:
        el = ET.Element("Cterm")
        ET.SubElement(el, "Ctor").text = t.functor
        el.extend(_term_el(a) for a in t.args)
    return el


def _atom_el(a: Atom) -> ET.Element:
    el = ET.Element("Atom")
    ET.SubElement(el, "Rel").text = a.predicate
    el.extend(_term_el(t) for t in a.args)
    if a.neg:
        wrap = ET.Element("Neg")
        wrap.append(el)
        return wrap
    return el


def _literal_el(l: Literal) -> ET.Element:
    el = _atom_el(l.atom)
    if l.naf:
        wrap = ET.Element("Naf")
        wrap.append(el)
        return wrap
    return el


def _and(children) -> ET.Element:
    el = ET.Element("And")
    el.extend(children)
    return el


def _assertion_el(a) -> ET.Element:
    if isinstance(a, IntegrityConstraint):
        el = ET.Element("Integrity", {"operator": a.operator})
        el.extend(_literal_el(c) for c in a.conditions)
        return el
    if a.is_fact:
        return _atom_el(a.head)
    el = ET.Element("Implies")
    if a.head is not None:
        ET.SubElement(el, "head").append(_atom_el(a.head))
    ET.SubElement(el, "body").append(_and(_literal_el(l) for l in a.body))
    return el


def _annotate(el: ET.Element, ann: MetaAnnotation | None):
    if ann is None:
        return
    for key, value in (("semantics", ann.semantics), ("class", ann.lp_class),
                       ("syntax", ann.syntax)):
        if value is not None:
            el.set(key, value)


def _oid(parent: ET.Element, name: str):
    ET.SubElement(ET.SubElement(parent, "oid"), "Ind").text = name


def _answer_key(ans):
    return sorted((v.name, str(t)) for v, t in ans)


def _test_el(t: Test) -> ET.Element:
    el = ET.Element("Test")
    if t.semantics is not None:
        el.set("semantics", t.semantics)
    el.set("label", t.expected_label)
    if t.expected_count is not None:
        el.set("count", str(t.expected_count))
    if t.time_budget_ms is not None:
        el.set("timeout", str(t.time_budget_ms))
    ET.SubElement(el, "Ind").text = t.name
    if t.message:
        ET.SubElement(el, "Ind").text = t.message
    ET.SubElement(el, "Query").append(_and(_literal_el(l) for l in t.query))
    if t.expected_answers is not None:
        ans = ET.SubElement(el, "answer")
        for a in sorted(t.expected_answers, key=_answer_key):
            sub = ET.SubElement(ans, "Substitutions")
            for v, term in sorted(a, key=lambda vt: vt[0].name):
                sub.append(_term_el(v))
                sub.append(_term_el(term))
    return el


def export_test_suite_xml(suite: TestSuite, annotations: MetaAnnotation | None = None) -> str:
    """Serialize a suite; output is byte-identical for equal inputs."""
    root = ET.Element("TestSuite", {"engine": str(suite.engine)})
    _annotate(root, annotations if annotations is not None else suite.annotations)
    _oid(root, suite.name)
    content = ET.SubElement(root, "content")
    for tc in suite.cases:
        el = ET.SubElement(content, "TestCase")
        _annotate(el, tc.annotations)
        _oid(el, tc.id)
        el.extend(_test_el(t) for t in tc.tests)
        if tc.assertions:
            ET.SubElement(el, "assertions").append(_and(_assertion_el(a) for a in tc.assertions))
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, "unicode") + "\n"


# -- import ---------------------------------------------------------------------------------


@dataclass
class Node:
    tag: str
    attrs: dict
    line: int
    col: int
    children: list = field(default_factory=list)
    text: str = ""


_AT_ATTR = re.compile(r"(?<=\s)@(?=[A-Za-z_][\w:.-]*\s*=)")


def parse_xml(text: str) -> Node:
    """Parse into a position-carrying tree; ``@name=`` attributes are accepted."""
    text = _AT_ATTR.sub(" ", text)  # same length keeps columns stable
    p = expat.ParserCreate()
    stack: list = []
    root: list = []

    def start(tag, attrs):
        n = Node(tag, dict(attrs), p.CurrentLineNumber, p.CurrentColumnNumber + 1)
        (stack[-1].children if stack else root).append(n)
        stack.append(n)

    def end(tag):
        stack.pop()

    def chars(data):
        if stack:
            stack[-1].text += data

    p.StartElementHandler = start
    p.EndElementHandler = end
    p.CharacterDataHandler = chars
    try:
        p.Parse(text, True)
    except expat.ExpatError as e:
        raise XmlError([ParseDiagnostic(e.lineno, e.offset + 1,
                                        f"malformed XML: {expat.ErrorString(e.code)}")]) from None
    return root[0]


def _fail(n: Node, message: str):
    raise XmlError([ParseDiagnostic(n.line, n.col, message)])


def _elements(n: Node, allowed=None) -> list:
    if n.children and n.text.strip():
        _fail(n, f"unexpected text in <{n.tag}>")
    if allowed is not None:
        for c in n.children:
            if c.tag not in allowed:
                _fail(c, f"unexpected element <{c.tag}> in <{n.tag}>")
    return n.children


def _leaf(n: Node) -> str:
    if n.children:
        _fail(n.children[0], f"<{n.tag}> must contain text only")
    return n.text


_TERMS = ("Ind", "Var", "Cterm")


def _term(n: Node):
    if n.tag == "Var":
        name = _leaf(n).strip()
        if not re.fullmatch(r"[A-Z_][A-Za-z0-9_]*", name):
            _fail(n, f"bad variable name {name!r}")
        return Var(name)
    if n.tag == "Ind":
        text, kind = _leaf(n), n.attrs.get("type")
        try:
            if kind == "integer":
                return Const(int(text))
            if kind == "float":
                return Const(float(text))
        except ValueError:
            _fail(n, f"bad {kind} {text!r}")
        if kind not in (None, "string"):
            _fail(n, f"unknown Ind type {kind!r}")
        return Const(text)
    if n.tag == "Cterm":
        kids = _elements(n, ("Ctor",) + _TERMS)
        if not kids or kids[0].tag != "Ctor" or len(kids) < 2:
            _fail(n, "Cterm needs a Ctor and at least one argument")
        return Compound(_leaf(kids[0]), tuple(_term(k) for k in kids[1:]))
    _fail(n, f"expected a term, got <{n.tag}>")


def _atom(n: Node) -> Atom:
    if n.tag == "Neg":
        kids = _elements(n, ("Atom",))
        if len(kids) != 1:
            _fail(n, "Neg needs exactly one Atom")
        a = _atom(kids[0])
        return Atom(a.predicate, a.args, True)
    if n.tag != "Atom":
        _fail(n, f"expected Atom, got <{n.tag}>")
    kids = _elements(n, ("Rel",) + _TERMS)
    if not kids or kids[0].tag != "Rel":
        _fail(n, "Atom needs a Rel first")
    if any(k.tag == "Rel" for k in kids[1:]):
        _fail(n, "Atom has more than one Rel")
    return Atom(_leaf(kids[0]), tuple(_term(k) for k in kids[1:]))


def _literal(n: Node) -> Literal:
    if n.tag == "Naf":
        kids = _elements(n, ("Atom", "Neg"))
        if len(kids) != 1:
            _fail(n, "Naf needs exactly one Atom or Neg")
        return Literal(_atom(kids[0]), True)
    if n.tag in ("Atom", "Neg"):
        return Literal(_atom(n))
    _fail(n, f"expected a literal, got <{n.tag}>")


_LITERALS = ("Atom", "Neg", "Naf")


def _conjunction(n: Node) -> tuple:
    if n.tag == "And":
        return tuple(_literal(k) for k in _elements(n, _LITERALS))
    return (_literal(n),)


def _assertion(n: Node):
    if n.tag == "Integrity":
        op = n.attrs.get("operator")
        try:
            return IntegrityConstraint(op, tuple(_literal(k) for k in _elements(n, _LITERALS)))
        except ValueError as e:
            _fail(n, str(e))
    if n.tag == "Implies":
        kids = _elements(n, ("head", "body"))
        heads = [k for k in kids if k.tag == "head"]
        bodies = [k for k in kids if k.tag == "body"]
        if len(bodies) != 1 or len(heads) > 1:
            _fail(n, "Implies needs one body and at most one head")
        head = None
        if heads:
            hk = _elements(heads[0], ("Atom", "Neg"))
            if len(hk) != 1:
                _fail(heads[0], "head needs exactly one Atom")
            head = _atom(hk[0])
        bk = _elements(bodies[0], ("And",) + _LITERALS)
        if len(bk) != 1:
            _fail(bodies[0], "body needs one And or literal")
        return Clause(head, _conjunction(bk[0]))
    if n.tag in ("Atom", "Neg"):
        return Clause(_atom(n))
    _fail(n, f"unexpected element <{n.tag}> in assertions")


def _assertions(n: Node) -> list:
    if n.tag == "assertions":
        kids = _elements(n, ("And",))
        if len(kids) > 1:
            _fail(n, "assertions holds a single And")
        return _assertions(kids[0]) if kids else []
    return [_assertion(k) for k in _elements(n)]


def _annotation(n: Node, warnings: list) -> MetaAnnotation | None:
    vals = {}
    for key in ("semantics", "class", "syntax"):
        v = n.attrs.get(key)
        if v is None:
            continue
        prefix, _, name = v.partition(":")
        if not (v.startswith("x-") or name.startswith("x-") or
                (prefix == key and name in _VOCAB[key])):
            warnings.append(ParseDiagnostic(n.line, n.col,
                                            f"unknown {key} annotation {v!r}", "warning"))
        vals[key] = v
    if not vals:
        return None
    return MetaAnnotation(vals.get("semantics"), vals.get("class"), vals.get("syntax"))


def _int_attr(n: Node, key: str):
    v = n.attrs.get(key)
    if v is None:
        return None
    if not re.fullmatch(r"\d+", v):
        _fail(n, f"attribute {key} must be a non-negative integer")
    return int(v)


def _test(n: Node, index: int, warnings: list) -> Test:
    kids = _elements(n, ("oid", "Ind", "Var", "Query", "answer"))
    name = message = None
    texts = []
    query = answers = None
    for k in kids:
        if k.tag == "oid":
            name = _oid_text(k)
        elif k.tag in ("Ind", "Var"):
            if query is not None:
                _fail(k, "name and message must precede Query")
            texts.append(_leaf(k) if k.tag == "Ind" else None)
        elif k.tag == "Query":
            if query is not None:
                _fail(k, "Test has more than one Query")
            q = _elements(k, ("And",) + _LITERALS)
            if len(q) != 1:
                _fail(k, "Query needs one And or literal")
            query = _conjunction(q[0])
        else:
            if answers is not None:
                _fail(k, "Test has more than one answer")
            answers = frozenset(_substitution(s) for s in _elements(k, ("Substitutions",)))
    if query is None:
        _fail(n, "Test is missing its Query")
    if len(texts) > (1 if name is not None else 2):
        _fail(n, "too many Ind/Var children in Test")
    if name is None:
        name = texts.pop(0) if texts else None
    message = texts[0] if texts else None
    ann = _annotation(n, warnings)
    label = n.attrs.get("label", "true")
    try:
        return Test(name or f"test{index}", query, label, answers, _int_attr(n, "count"),
                    _int_attr(n, "timeout"), message or "", ann.semantics if ann else None)
    except ValueError as e:
        _fail(n, str(e))


def _substitution(n: Node) -> frozenset:
    kids = _elements(n, _TERMS)
    if len(kids) % 2:
        _fail(n, "Substitutions needs Var/term pairs")
    out = {}
    for v, t in zip(kids[::2], kids[1::2]):
        if v.tag != "Var":
            _fail(v, "expected Var")
        out[_term(v)] = _term(t)
    return frozenset(out.items())


def _oid_text(n: Node) -> str:
    kids = _elements(n, ("Ind",))
    if len(kids) != 1:
        _fail(n, "oid holds one Ind")
    return _leaf(kids[0])


def _test_case(n: Node, index: int, warnings: list) -> TestCase:
    kids = _elements(n, ("oid", "Test", "assertions", "And"))
    case_id, tests, assertions = None, [], []
    for k in kids:
        if k.tag == "oid":
            case_id = _oid_text(k)
        elif k.tag == "Test":
            if assertions:
                _fail(k, "tests must precede assertions")
            tests.append(_test(k, len(tests) + 1, warnings))
        else:
            assertions += _assertions(k)
    names = [t.name for t in tests]
    if len(names) != len(set(names)):
        _fail(n, "duplicate test names in TestCase")
    return TestCase(case_id or f"case{index}", tuple(dict.fromkeys(assertions)), tuple(tests),
                    _annotation(n, warnings))


def _engine_of(n: Node, ann: MetaAnnotation | None) -> EngineId:
    e = n.attrs.get("engine")
    if e is not None:
        try:
            return EngineId.parse(e)
        except ValueError as err:
            _fail(n, str(err))
    if ann is not None and ann.semantics in ("semantics:WFS", "semantics:STABLE"):
        return EngineId.parse(ann.semantics.split(":")[1])
    return WFS


@dataclass
class ImportResult:
    suite: TestSuite
    warnings: list


def import_test_suite_xml(text: str) -> ImportResult:
    """Inverse of :func:`export_test_suite_xml`; a bare TestCase root becomes a one-case suite."""
    root = parse_xml(text)
    warnings: list = []
    if root.tag == "TestCase":
        tc = _test_case(root, 1, warnings)
        return ImportResult(TestSuite(tc.id, (tc,), _engine_of(root, tc.annotations)),
                            warnings)
    if root.tag != "TestSuite":
        _fail(root, f"root must be TestSuite or TestCase, got <{root.tag}>")
    kids = _elements(root, ("oid", "content", "And"))
    name, cases = "suite", []
    for k in kids:
        if k.tag == "oid":
            name = _oid_text(k)
        else:
            for c in _elements(k, ("TestCase",)):
                cases.append(_test_case(c, len(cases) + 1, warnings))
    ann = _annotation(root, warnings)
    try:
        suite = TestSuite(name, tuple(cases), _engine_of(root, ann), ann)
    except ValueError as e:
        _fail(root, str(e))
    return ImportResult(suite, warnings)


# -- run reports ---------------------------------------------------------------------------


def _secs(ms, deterministic) -> str:
    return "0.000" if deterministic else f"{ms / 1000:.3f}"


def export_run_report(reports, coverage=None, deterministic: bool = False) -> str:
    """xUnit XML for one or more suite reports, with coverage as properties.

    ``coverage`` is a :class:`~rulecheck.coverage.CoverageReport` or a list
    aligned with ``reports``.  ``deterministic`` zeroes times and drops the
    timestamp.
    """
    if not isinstance(reports, (list, tuple)):
        reports = [reports]
    if not isinstance(coverage, (list, tuple)):
        coverage = [coverage] * len(reports)
    root = ET.Element("testsuites")
    totals = {"tests": 0, "failures": 0, "errors": 0}
    total_ms = 0
    for rep, cov in zip(reports, coverage):
        ms = sum(r.elapsed_ms for r in rep.results)
        total_ms += ms
        el = ET.SubElement(root, "testsuite", {
            "name": rep.name,
            "tests": str(rep.tests),
            "failures": str(rep.failures),
            "errors": str(rep.errors),
            "time": _secs(ms, deterministic),
        })
        if not deterministic:
            el.set("timestamp", datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S"))
        props = ET.SubElement(el, "properties")
        ET.SubElement(props, "property", {"name": "engine", "value": str(rep.engine)})
        if cov is not None:
            ET.SubElement(props, "property", {"name": "coverage",
                                              "value": repr(float(cov.ratio))})
            ET.SubElement(props, "property", {"name": "coverage.covered",
                                              "value": str(cov.covered)})
            ET.SubElement(props, "property", {"name": "coverage.total", "value": str(cov.total)})
            for i, rc in enumerate(cov.rules):
                ET.SubElement(props, "property", {
                    "name": f"rule.{i}",
                    "value": f"{'covered' if rc.covered else 'uncovered'}: {rc.rule}",
                })
        for case_id, msg in sorted(rep.case_errors.items()):
            ET.SubElement(props, "property", {"name": f"case-error.{case_id}", "value": msg})
        for r in rep.results:
            tc = ET.SubElement(el, "testcase", {"classname": r.case_id, "name": r.test_name,
                                                "time": _secs(r.elapsed_ms, deterministic)})
            if r.passed:
                continue
            kind = "error" if r.error else "failure"
            f = ET.SubElement(tc, kind, {"message": r.failure_reason or "", "type": kind})
            if r.message:
                f.text = r.message
        for k in totals:
            totals[k] += int(el.get(k))
    for k, v in totals.items():
        root.set(k, str(v))
    root.set("time", _secs(total_ms, deterministic))
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, "unicode") + "\n"
