"""Declarative test coverage by specialization and least general generalization.

A rule counts as covered when the lgg of all its specializations by
successful test queries is a variant of the rule itself.  Facts are not
counted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

from .engines import DEFAULT_DEPTH, WFS, EngineId, Evaluation
from .kb import Program
from .terms import (
    Atom,
    Clause,
    apply_subst,
    is_variant,
    lgg_clauses,
    rename_apart,
    theta_subsumes,
    unify,
    variables,
)


@dataclass(frozen=True)
class SpecializationRecord:
    rule_index: int
    query: Atom
    unifier: dict = field(compare=False)
    specialized: Clause = None


@dataclass(frozen=True)
class RuleCoverage:
    rule: Clause
    covered: bool
    lgg: Clause | None
    specializations: int
    near_misses: int = 0


@dataclass
class CoverageReport:
    rules: list
    ratio: Fraction
    total: int
    unknown_queries: list = field(default_factory=list)

    @property
    def covered(self) -> int:
        return sum(r.covered for r in self.rules)

    def uncovered(self) -> list:
        return [r for r in self.rules if not r.covered]


def specialize(
    program: Program,
    queries,
    engine: EngineId = WFS,
    context: Program | None = None,
    depth_bound: int = DEFAULT_DEPTH,
    near_misses: list | None = None,
) -> list:
    """Specialize each rule by each answered query instance whose head it unifies with.

    A specialization is kept only when its body is entailed in ``context``
    (default: ``program``), i.e. the rule actually fired.  Head matches whose
    body fails are appended to ``near_misses`` when given.
    """
    queries = list(dict.fromkeys(queries))
    ev = Evaluation(context if context is not None else program, engine, depth_bound,
                    extra_constants=queries)
    out = []
    for ri, rule in enumerate(program.rules):
        for q in queries:
            r = rename_apart(rule, "_r") if set(variables(rule)) & set(variables(q)) else rule
            s = unify(r.head, q)
            if s is None:
                continue
            spec = apply_subst(r, s)
            rec = SpecializationRecord(ri, q, s, spec)
            if ev.query(spec.body).label == "true":
                out.append(rec)
            elif near_misses is not None:
                near_misses.append(rec)
    return out


def generalize(records) -> Clause:
    """Left fold of clause lgg over the records' specializations."""
    clauses = [r.specialized if isinstance(r, SpecializationRecord) else r for r in records]
    if not clauses:
        raise ValueError("generalize needs at least one specialization")
    if len(clauses) == 1:
        return clauses[0]
    out = reduce(lgg_clauses, clauses)
    if out is None:
        raise ValueError("specializations of different relations cannot be generalized")
    return out


def answered_queries(entry) -> list:
    """Ground positive query atoms of a successful trace entry."""
    atoms = [l.atom for l in entry.query if not l.naf and not l.atom.is_builtin]
    bindings = entry.answers or ({},)
    out = []
    for b in bindings:
        for a in atoms:
            out.append(apply_subst(a, b))
    return out


def coverage_level(
    program: Program,
    trace,
    engine: EngineId = WFS,
    depth_bound: int = DEFAULT_DEPTH,
) -> CoverageReport:
    """Coverage of ``program``'s rules by the successful queries in a suite trace.

    ``trace`` holds :class:`~rulecheck.testcases.TraceEntry` items; each is
    specialized against the program snapshot it was answered in.
    """
    by_context: dict = {}
    unknown = []
    for e in trace:
        if e.label == "unknown":
            unknown.append(e)
            continue
        if e.label != "true" or e.expected_label != "true":
            continue
        by_context.setdefault(e.program, []).extend(answered_queries(e))
    records, misses = [], []
    for ctx, queries in by_context.items():
        records += specialize(program, queries, engine, ctx, depth_bound, misses)
    return _report(program, records, misses, unknown)


def coverage_of_queries(program: Program, queries, engine: EngineId = WFS,
                        depth_bound: int = DEFAULT_DEPTH) -> CoverageReport:
    """Coverage for ground query atoms answered directly against ``program``."""
    misses: list = []
    records = specialize(program, queries, engine, None, depth_bound, misses)
    return _report(program, records, misses, [])


def _report(program, records, misses, unknown) -> CoverageReport:
    rules = []
    for ri, rule in enumerate(program.rules):
        recs = list({r.specialized: r for r in records if r.rule_index == ri}.values())
        nm = sum(1 for r in misses if r.rule_index == ri)
        if not recs:
            rules.append(RuleCoverage(rule, False, None, 0, nm))
            continue
        g = generalize(recs)
        rules.append(RuleCoverage(rule, is_variant(g, rule), g, len(recs), nm))
    k = len(rules)
    ratio = Fraction(sum(r.covered for r in rules), k) if k else Fraction(1)
    return CoverageReport(rules, ratio, k, unknown)


def check_lgg_subsumes(report: CoverageReport, records) -> bool:
    """Every reported lgg subsumes each specialization it was built from."""
    for ri, rc in enumerate(report.rules):
        if rc.lgg is None:
            continue
        for r in records:
            if r.rule_index == ri and not theta_subsumes(rc.lgg, r.specialized):
                return False
    return True


def format_coverage(report: CoverageReport) -> str:
    lines = ["rule\tcovered\tspecializations\tlgg"]
    for rc in report.rules:
        lines.append(f"{rc.rule}\t{'yes' if rc.covered else 'no'}\t{rc.specializations}\t"
                     f"{rc.lgg if rc.lgg is not None else '-'}")
    pct = float(report.ratio) * 100
    lines.append(f"coverage\t{report.covered}/{report.total}\t{pct:.1f}%")
    if report.total == 0:
        lines.append("note\tno rules with a body; coverage is vacuously complete")
    for rc in report.uncovered():
        hint = (f"add test goals instantiating {rc.rule.head} beyond {rc.lgg.head}"
                if rc.lgg is not None else f"add a successful test goal for {rc.rule.head}")
        if rc.near_misses:
            hint += f" ({rc.near_misses} head match(es) failed in the body)"
        lines.append(f"suggest\t{hint}")
    for e in report.unknown_queries:
        lines.append(f"unknown\t{e.case_id}/{e.test_name} answered unknown; not counted")
    return "\n".join(lines)
