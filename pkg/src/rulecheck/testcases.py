"""Running test cases ``T = A + {Q => R : answers [< ms]}`` against a knowledge base."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .engines import DEFAULT_DEPTH, WFS, EngineId, EngineTimeout, entails
from .kb import KnowledgeBase, Program, RuleCheckError
from .parser import MetaAnnotation, Test, TestCase, answers_of, format_answers

__all__ = [
    "MetaAnnotation",
    "SuiteReport",
    "Test",
    "TestCase",
    "TestResult",
    "TestSuite",
    "TraceEntry",
    "run_suite",
    "run_test",
    "run_test_case",
]


@dataclass(frozen=True)
class TestSuite:
    __test__ = False

    name: str
    cases: tuple = ()
    engine: EngineId = WFS
    annotations: MetaAnnotation | None = None

    def __post_init__(self):
        ids = [c.id for c in self.cases]
        if len(ids) != len(set(ids)):
            raise ValueError("test case ids must be unique within a suite")


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    test_name: str
    passed: bool
    actual_label: str | None = None
    actual_answers: tuple = ()
    elapsed_ms: int = 0
    failure_reason: str | None = None
    case_id: str = ""
    error: bool = False  # engine error rather than a failed expectation
    message: str = ""


@dataclass(frozen=True)
class TraceEntry:
    """One answered test query, with the program it was answered against."""

    case_id: str
    test_name: str
    query: tuple
    expected_label: str
    label: str
    answers: tuple
    program: Program


@dataclass
class SuiteReport:
    name: str
    engine: EngineId
    results: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    case_errors: dict = field(default_factory=dict)

    @property
    def tests(self) -> int:
        return len(self.results)

    @property
    def passed(self) -> int:
        return sum(r.passed for r in self.results)

    @property
    def failures(self) -> int:
        return sum(not r.passed and not r.error for r in self.results)

    @property
    def errors(self) -> int:
        return sum(r.error for r in self.results)

    @property
    def ok(self) -> bool:
        return self.passed == self.tests


def _answer_diff(expected: frozenset, actual: frozenset) -> str:
    parts = []
    missing, unexpected = expected - actual, actual - expected
    if missing:
        parts.append(f"missing {format_answers(missing)}")
    if unexpected:
        parts.append(f"unexpected {format_answers(unexpected)}")
    return "answers: " + "; ".join(parts)


def run_test(
    kb,
    engine: EngineId,
    test: Test,
    depth_bound: int = DEFAULT_DEPTH,
    timeout_ms: float | None = None,
) -> TestResult:
    """Run one test against the current state of ``kb`` and compare every expectation."""
    budget = test.time_budget_ms if test.time_budget_ms is not None else timeout_ms
    start = time.perf_counter()
    try:
        out = entails(kb, engine, test.query, depth_bound, budget)
    except EngineTimeout:
        elapsed = int((time.perf_counter() - start) * 1000)
        # a missed test budget is a failed expectation; a global timeout an engine error
        return TestResult(test.name, False, None, (), elapsed, "timeout",
                          error=test.time_budget_ms is None, message=test.message)
    except (RuleCheckError, ValueError) as e:
        elapsed = int((time.perf_counter() - start) * 1000)
        return TestResult(test.name, False, None, (), elapsed, f"error: {e}", error=True,
                          message=test.message)
    elapsed_s = time.perf_counter() - start
    elapsed = int(elapsed_s * 1000)

    reasons = []
    if out.label != test.expected_label:
        reasons.append(f"label: expected {test.expected_label}, got {out.label}")
    actual = answers_of(out.answers)
    if test.expected_answers is not None and test.expected_answers != actual:
        reasons.append(_answer_diff(test.expected_answers, actual))
    if test.expected_count is not None:
        count = len(out.answers) if out.label == "true" else 0
        if count != test.expected_count:
            reasons.append(f"count: expected {test.expected_count}, got {count}")
    if test.time_budget_ms is not None and elapsed_s * 1000 >= test.time_budget_ms:
        reasons.append(f"time: {elapsed} ms >= budget {test.time_budget_ms} ms")
    if out.no_stable_model:
        reasons = [r + " (no stable model)" for r in reasons]
    return TestResult(test.name, not reasons, out.label, out.answers, elapsed,
                      "; ".join(reasons) or None, message=test.message)


run_test.__test__ = False


def run_test_case(
    kb: KnowledgeBase,
    engine: EngineId,
    tc: TestCase,
    depth_bound: int = DEFAULT_DEPTH,
    timeout_ms: float | None = None,
    trace: list | None = None,
) -> list:
    """Temporarily assert the case's assertions, run its tests in order, then retract."""
    kb.add_module(tc.id, tc.assertions)
    try:
        program = kb.current_program()
        results = []
        for t in tc.tests:
            r = run_test(kb, engine, t, depth_bound, timeout_ms)
            results.append(TestResult(r.test_name, r.passed, r.actual_label, r.actual_answers,
                                      r.elapsed_ms, r.failure_reason, tc.id, r.error,
                                      r.message))
            if trace is not None and r.actual_label is not None:
                trace.append(TraceEntry(tc.id, t.name, t.query, t.expected_label,
                                        r.actual_label, r.actual_answers, program))
        return results
    finally:
        kb.remove_module(tc.id)


run_test_case.__test__ = False


def run_suite(
    kb: KnowledgeBase,
    suite: TestSuite,
    depth_bound: int = DEFAULT_DEPTH,
    timeout_ms: float | None = None,
) -> SuiteReport:
    """Run every case in order; per-case errors are embedded in the report."""
    report = SuiteReport(suite.name, suite.engine)
    for tc in suite.cases:
        try:
            report.results.extend(
                run_test_case(kb, suite.engine, tc, depth_bound, timeout_ms, report.trace))
        except RuleCheckError as e:
            report.case_errors[tc.id] = str(e)
            for t in tc.tests:
                report.results.append(TestResult(t.name, False, None, (), 0,
                                                 f"error: {type(e).__name__}: {e}",
                                                 tc.id, True, t.message))
    return report
