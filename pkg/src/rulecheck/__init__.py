"""Verification, validation and integrity testing for logic-program rule bases."""

from .coverage import CoverageReport, coverage_level, coverage_of_queries, generalize, specialize
from .engines import (
    STABLE,
    STABLE_CREDULOUS,
    WFS,
    BuiltinEngine,
    EngineId,
    EngineTimeout,
    QueryOutcome,
    answer_set,
    entails,
    ground,
    stable_models,
    well_founded_model,
)
from .integrity import eval_ic, test_integrity, test_integrity_hypothetical
from .interchange import export_run_report, export_test_suite_xml, import_test_suite_xml
from .kb import KnowledgeBase, Program, RuleCheckError
from .meta import classify_engine, default_probe_suite, match_profile
from .parser import (
    MetaAnnotation,
    ParseError,
    Test,
    TestCase,
    parse_clause,
    parse_literal,
    parse_program,
    parse_query,
    parse_test_script,
)
from .protocol import ExternalEngine
from .terms import (
    Atom,
    Clause,
    Compound,
    Const,
    IntegrityConstraint,
    Literal,
    Var,
    is_variant,
    lgg_clauses,
    lgg_terms,
    theta_subsumes,
    unify,
)
from .testcases import TestSuite, run_suite, run_test, run_test_case

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "BuiltinEngine",
    "Clause",
    "Compound",
    "Const",
    "CoverageReport",
    "EngineId",
    "EngineTimeout",
    "ExternalEngine",
    "IntegrityConstraint",
    "KnowledgeBase",
    "Literal",
    "MetaAnnotation",
    "ParseError",
    "Program",
    "QueryOutcome",
    "RuleCheckError",
    "STABLE",
    "STABLE_CREDULOUS",
    "Test",
    "TestCase",
    "TestSuite",
    "Var",
    "WFS",
    "answer_set",
    "classify_engine",
    "coverage_level",
    "coverage_of_queries",
    "default_probe_suite",
    "entails",
    "eval_ic",
    "export_run_report",
    "export_test_suite_xml",
    "generalize",
    "ground",
    "import_test_suite_xml",
    "is_variant",
    "lgg_clauses",
    "lgg_terms",
    "match_profile",
    "parse_clause",
    "parse_literal",
    "parse_program",
    "parse_query",
    "parse_test_script",
    "run_suite",
    "run_test",
    "run_test_case",
    "specialize",
    "stable_models",
    "test_integrity",
    "test_integrity_hypothetical",
    "theta_subsumes",
    "unify",
    "well_founded_model",
]
