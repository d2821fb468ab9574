"""Command line front end.

Exit codes: 0 all passed, 1 test failures or integrity violations,
2 usage or parse errors, 3 engine or protocol errors.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

from .coverage import coverage_level, format_coverage
from .engines import DEFAULT_DEPTH, BuiltinEngine, EngineId, EngineTimeout
from .integrity import test_integrity, test_integrity_hypothetical
from .interchange import export_run_report, export_test_suite_xml, import_test_suite_xml
from .kb import KnowledgeBase, RuleCheckError
from .meta import (
    classify_engine,
    default_probe_suite,
    format_profile,
    load_probe_suite,
    match_profile,
)
from .parser import ParseError, format_test_script, parse_literal, parse_program, parse_test_script
from .protocol import ExternalEngine, ProtocolError, make_server, serve_stream
from .testcases import TestSuite, run_suite

OK, FAILED, USAGE, ENGINE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"{path}: {e.strerror or e}") from None


def _parse(path: str, fn):
    try:
        return fn(_read(path))
    except ParseError as e:
        raise UsageError("\n".join(f"{path}:{d}" for d in e.diagnostics)) from None


def load_kb(paths) -> KnowledgeBase:
    kb = KnowledgeBase()
    for p in paths or ():
        kb.add_module(p, _parse(p, parse_program))
    return kb


def load_suites(paths, engine: EngineId | None) -> list:
    """``.xml`` files are interchange documents; anything else is a test script."""
    suites, scripts = [], []
    for p in paths or ():
        if p.endswith(".xml"):
            s = _parse(p, lambda t: import_test_suite_xml(t).suite)
            if engine is not None:
                s = TestSuite(s.name, s.cases, engine, s.annotations)
            suites.append(s)
        else:
            scripts.append(_parse(p, parse_test_script))
    if scripts:
        try:
            suites.insert(0, TestSuite("tests", tuple(scripts), engine or EngineId.parse("wfs")))
        except ValueError as e:
            raise UsageError(str(e)) from None
    return suites


def _engine(args) -> EngineId | None:
    return EngineId.parse(args.engine) if args.engine else None


def _run_all(args):
    kb = load_kb(args.kb)
    suites = load_suites(args.test, _engine(args))
    if not suites:
        raise UsageError("no test files given (--test)")
    reports = [run_suite(kb, s, args.depth, args.timeout_ms) for s in suites]
    return kb, reports


def _status(reports) -> int:
    if any(r.errors for r in reports):
        return ENGINE
    return OK if all(r.ok for r in reports) else FAILED


def cmd_run(args) -> int:
    kb, reports = _run_all(args)
    for rep in reports:
        for r in rep.results:
            word = "PASS" if r.passed else ("ERROR" if r.error else "FAIL")
            line = f"{word}\t{r.case_id}/{r.test_name}"
            if not r.passed:
                line += f"\t{r.failure_reason}"
                if r.message:
                    line += f"\t{r.message}"
            print(line)
        for case_id, msg in rep.case_errors.items():
            print(f"ERROR\t{case_id}\t{msg}")
        print(f"{rep.name} [{rep.engine}]: {rep.tests} tests, {rep.passed} passed, "
              f"{rep.failures} failed, {rep.errors} errors")
    if args.report:
        program = kb.current_program()
        cov = [coverage_level(program, rep.trace, rep.engine, args.depth) for rep in reports]
        Path(args.report).write_text(export_run_report(reports, cov, args.deterministic),
                                     encoding="utf-8")
    return _status(reports)


def cmd_cover(args) -> int:
    kb, reports = _run_all(args)
    program = kb.current_program()
    trace = [e for rep in reports for e in rep.trace]
    engine = _engine(args) or reports[0].engine
    print(format_coverage(coverage_level(program, trace, engine, args.depth)))
    return _status(reports)


def cmd_integrity(args) -> int:
    kb = load_kb(args.kb)
    engine = _engine(args) or EngineId.parse("wfs")
    if args.hypothetical:
        try:
            lit = parse_literal(args.hypothetical)
        except ParseError as e:
            raise UsageError(f"--hypothetical: {e}") from None
        try:
            report = test_integrity_hypothetical(kb, engine, lit, args.depth)
        except ValueError as e:
            raise UsageError(f"--hypothetical: {e}") from None
    else:
        report = test_integrity(kb, engine, args.depth)
    for v in report.violated:
        print(f"VIOLATED\t{v.describe()}")
    print(f"{report.checked} constraints checked, {len(report)} violated")
    return OK if report.ok else FAILED


def cmd_classify(args) -> int:
    suite = default_probe_suite()
    if args.suite:
        try:
            suite = load_probe_suite(args.suite)
        except OSError as e:
            raise UsageError(f"{args.suite}: {e.strerror or e}") from None
        except (KeyError, TypeError, ValueError) as e:
            raise UsageError(f"{args.suite}: bad probe suite: {e}") from None
    if args.external:
        with ExternalEngine.connect(args.external) as engine:
            profile = classify_engine(engine, suite)
    else:
        profile = classify_engine(BuiltinEngine(_engine(args) or EngineId.parse("wfs"),
                                                args.depth), suite)
    print(format_profile(profile, match_profile(profile, declared=args.declared)))
    return OK


def _slug(s: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", s) or "case"


def cmd_convert(args) -> int:
    to = args.to or ("xml" if Path(args.output).suffix == ".xml" else "script")
    src = args.input
    if src.endswith(".xml"):
        suite = _parse(src, lambda t: _import_warn(t, src))
    else:
        tc = _parse(src, parse_test_script)
        suite = TestSuite(tc.id, (tc,), _engine(args) or EngineId.parse("wfs"))
    if to == "xml":
        Path(args.output).write_text(export_test_suite_xml(suite), encoding="utf-8")
        return OK
    if len(suite.cases) == 1:
        Path(args.output).write_text(format_test_script(suite.cases[0]), encoding="utf-8")
        return OK
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for tc in suite.cases:
        (out / f"{_slug(tc.id)}.test").write_text(format_test_script(tc), encoding="utf-8")
    return OK


def _import_warn(text: str, path: str):
    result = import_test_suite_xml(text)
    for w in result.warnings:
        print(f"{path}:{w}", file=sys.stderr)
    return result.suite


def cmd_serve(args) -> int:
    engine = BuiltinEngine(_engine(args) or EngineId.parse("wfs"), args.depth)
    if args.stdio:
        serve_stream(engine, sys.stdin, sys.stdout)
        return OK
    server = make_server(engine, args.host, args.port)
    host, port = server.server_address[:2]
    print(f"serving {engine.label} on {host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rulecheck",
                                 description="Verification, validation and integrity testing "
                                             "for logic-program rule bases.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, kb=True, tests=False):
        if kb:
            p.add_argument("--kb", nargs="+", default=[], metavar="FILE",
                           help="program files, each loaded as one module")
        if tests:
            p.add_argument("--test", nargs="+", default=[], metavar="FILE",
                           help="test scripts (.test) or interchange documents (.xml)")
        p.add_argument("--engine", choices=["wfs", "stable", "stable-sceptical",
                                            "stable-credulous"],
                       help="inference semantics (default wfs)")
        p.add_argument("--depth", type=int, default=DEFAULT_DEPTH,
                       help="term depth bound for grounding")

    p = sub.add_parser("run", help="run test suites")
    common(p, tests=True)
    p.add_argument("--timeout-ms", type=float, help="global per-query timeout")
    p.add_argument("--report", metavar="PATH", help="write an xUnit XML report")
    p.add_argument("--deterministic", action="store_true",
                   help="zero times and drop timestamps in the report")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("cover", help="run test suites and print rule coverage")
    common(p, tests=True)
    p.add_argument("--timeout-ms", type=float)
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("integrity", help="check integrity constraints")
    common(p)
    p.add_argument("--hypothetical", metavar="LITERAL",
                   help="check as if this ground literal were asserted")
    p.set_defaults(func=cmd_integrity)

    p = sub.add_parser("classify", help="probe an engine's semantic properties")
    common(p, kb=False)
    p.add_argument("--external", metavar="HOST:PORT", help="probe an engine over the protocol")
    p.add_argument("--suite", metavar="JSON", help="probe suite (default: the shipped one)")
    p.add_argument("--declared", metavar="SEMANTICS",
                   help="intended semantics of a program, to check executability")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("convert", help="convert between test scripts and XML")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--to", choices=["xml", "script"])
    p.add_argument("--engine", choices=["wfs", "stable", "stable-sceptical",
                                        "stable-credulous"])
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("serve", help="serve the built-in engine over the line protocol")
    common(p, kb=False)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7878)
    p.add_argument("--stdio", action="store_true", help="serve on stdin/stdout instead of TCP")
    p.set_defaults(func=cmd_serve)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code else OK
    if getattr(args, "depth", 1) < 0:
        print("rulecheck: --depth must be >= 0", file=sys.stderr)
        return USAGE
    try:
        return args.func(args)
    except UsageError as e:
        print(f"rulecheck: {e}", file=sys.stderr)
        return USAGE
    except (ProtocolError, EngineTimeout) as e:
        print(f"rulecheck: engine error: {e or 'timeout'}", file=sys.stderr)
        return ENGINE
    except ParseError as e:
        print(f"rulecheck: {e}", file=sys.stderr)
        return USAGE
    except (RuleCheckError, ValueError) as e:
        print(f"rulecheck: {e}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
