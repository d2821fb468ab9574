"""Semantics-preserving transformations and meta test probes for inference engines.

An engine is anything with ``label`` and ``ask(program, query) -> QueryOutcome``
(see :class:`~rulecheck.engines.BuiltinEngine` and
:class:`~rulecheck.protocol.ExternalEngine`).  A finite probe suite can only
falsify a property, so a clean result is reported as ``satisfiedOnSuite``.
All probes use normal programs (single-atom heads).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

from .kb import Program, RuleCheckError, program_of
from .terms import (
    Atom,
    Clause,
    Literal,
    apply_subst,
    is_ground,
    match,
    rename_apart,
    unify,
)

PROPERTIES = (
    "cumulativity",
    "rationality",
    "tautElim",
    "gppe",
    "posReduction",
    "negReduction",
    "nonMinElim",
    "relevance",
    "consistency",
    "independence",
)

SATISFIED = "satisfiedOnSuite"
VIOLATED = "violated"
RESTRICTION = "normal programs only (single-atom heads)"


class ProbeError(RuleCheckError):
    """A probe whose precondition does not hold for the engine under test."""


# -- transformations -------------------------------------------------------------


def _positive_atoms(c: Clause):
    return [l.atom for l in c.body if not l.naf and not l.atom.is_builtin]


def _with_clauses(p: Program, clauses) -> Program:
    return Program(tuple(dict.fromkeys(clauses)), p.constraints)


def transform_taut_elim(p: Program) -> Program:
    """Remove every rule whose head occurs in its own positive body."""
    return _with_clauses(p, [c for c in p.clauses if c.head not in _positive_atoms(c)])


def transform_gppe(p: Program, rule_index: int, position: int) -> Program:
    """Unfold the positive body literal at ``position`` of clause ``rule_index``.

    The clause is replaced by one resolvent per clause whose head unifies with
    the selected atom (possibly none).
    """
    if not 0 <= rule_index < len(p.clauses):
        raise ValueError(f"invalid rule index {rule_index}")
    rule = p.clauses[rule_index]
    if not 0 <= position < len(rule.body):
        raise ValueError(f"invalid body position {position}")
    selected = rule.body[position]
    if selected.naf or selected.atom.is_builtin:
        raise ValueError("GPPE unfolds positive, non-builtin body literals only")
    unfolded = []
    for d in p.clauses:
        d = rename_apart(d, "_u")
        s = unify(selected.atom, d.head)
        if s is None:
            continue
        body = rule.body[:position] + d.body + rule.body[position + 1 :]
        new = apply_subst(Clause(rule.head, body), s)
        unfolded.append(Clause(new.head, tuple(dict.fromkeys(new.body))))
    clauses = list(p.clauses[:rule_index]) + unfolded + list(p.clauses[rule_index + 1 :])
    return _with_clauses(p, clauses)


def gppe_positions(p: Program) -> list:
    """Every ``(rule_index, position)`` GPPE can unfold."""
    return [(i, j) for i, c in enumerate(p.clauses) for j, l in enumerate(c.body)
            if not l.naf and not l.atom.is_builtin]


def _heads(p: Program):
    return [c.head for c in p.clauses]


def transform_pos_reduction(p: Program) -> Program:
    """Drop ``not C`` wherever ``C`` matches no rule head and no fact."""
    heads = _heads(p)

    def keep(l: Literal) -> bool:
        if not l.naf or l.atom.is_builtin:
            return True
        return any(unify(l.atom, rename_apart(h, "_h")) is not None for h in heads)

    return _with_clauses(p, [Clause(c.head, tuple(l for l in c.body if keep(l)))
                             for c in p.clauses])


def transform_neg_reduction(p: Program) -> Program:
    """Delete rules containing ``not B`` where ``B`` is an instance of a fact."""
    facts = [c.head for c in p.clauses if c.is_fact]

    def refuted(c: Clause) -> bool:
        return any(l.naf and not l.atom.is_builtin and any(match(f, l.atom) is not None
                                                          for f in facts)
                   for l in c.body)

    return _with_clauses(p, [c for c in p.clauses if not refuted(c)])


def transform_remove_subsumed(p: Program) -> Program:
    """Delete ``H :- B'`` when another ``H :- B`` exists with ``B`` a proper subset of ``B'``."""
    bodies = [(c.head, frozenset(c.body)) for c in p.clauses]

    def non_minimal(c: Clause) -> bool:
        b = frozenset(c.body)
        return any(h == c.head and other < b for h, other in bodies)

    return _with_clauses(p, [c for c in p.clauses if not non_minimal(c)])


TRANSFORMS = {
    "tautElim": transform_taut_elim,
    "posReduction": transform_pos_reduction,
    "negReduction": transform_neg_reduction,
    "nonMinElim": transform_remove_subsumed,
}


def relevant_subprogram(p: Program, literal) -> Program:
    """Clauses reachable from the literal's relation in the dependency graph (both signs)."""
    a = literal.atom if isinstance(literal, Literal) else literal
    deps: dict = {}
    for c in p.clauses:
        deps.setdefault(c.head.key, set()).update(
            l.atom.key for l in c.body if not l.atom.is_builtin)
    seen, stack = set(), [a.key]
    while stack:
        k = stack.pop()
        if k in seen:
            continue
        seen.add(k)
        stack.extend(deps.get(k, ()))
    return Program(tuple(c for c in p.clauses if c.head.key in seen))


# -- probes -------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeCase:
    name: str
    property: str
    program: Program
    extension: Program | None = None  # independence: a program over a disjoint alphabet
    transform_args: tuple = ()  # gppe: (rule_index, position)
    lemmas: tuple = ()  # U, ground atoms
    vsets: tuple | None = None  # explicit V sets; None enumerates them
    queries: tuple = ()  # literals; default: every ground atom of the programs

    def __post_init__(self):
        if self.property not in PROPERTIES:
            raise ValueError(f"unknown property {self.property!r}")


@dataclass(frozen=True)
class Witness:
    probe: str
    literal: str
    before: str
    after: str
    detail: str = ""

    def __str__(self):
        s = f"{self.probe}: {self.literal} {self.before} -> {self.after}"
        return f"{s} ({self.detail})" if self.detail else s


@dataclass(frozen=True)
class PropertyVerdict:
    property: str
    status: str
    witness: Witness | None = None
    probes: int = 1
    skipped: int = 0
    note: str = RESTRICTION

    @property
    def violated(self) -> bool:
        return self.status == VIOLATED


@dataclass
class SemanticsProfile:
    engine: str
    verdicts: dict = field(default_factory=dict)

    def status(self, prop: str) -> str:
        return self.verdicts[prop].status


def program_atoms(*programs) -> list:
    out: dict = {}
    for p in programs:
        if p is None:
            continue
        for c in p.clauses:
            for a in [c.head] + [l.atom for l in c.body]:
                if not a.is_builtin and is_ground(a):
                    out[a] = None
    return sorted(out, key=str)


def _queries(probe: ProbeCase, *programs) -> list:
    if probe.queries:
        return list(probe.queries)
    return [Literal(a) for a in program_atoms(*programs)]


def _labels(engine, program: Program, queries) -> dict:
    return {q: engine.ask(program, (q,)).label for q in queries}


def _conclusions(engine, program: Program, atoms) -> set:
    return {a for a in atoms if engine.ask(program, (Literal(a),)).label == "true"}


def _facts(atoms) -> Program:
    return program_of(Clause(a) for a in atoms)


def _compare(prop, probe, before: dict, after: dict, detail="") -> PropertyVerdict:
    for q in before:
        if before[q] != after.get(q, "false"):
            return PropertyVerdict(prop, VIOLATED,
                                   Witness(probe.name, str(q), before[q], after.get(q, "false"),
                                           detail))
    return PropertyVerdict(prop, SATISFIED)


def transformed(probe: ProbeCase) -> Program:
    if probe.property == "gppe":
        return transform_gppe(probe.program, *probe.transform_args)
    return TRANSFORMS[probe.property](probe.program)


def check_weak_property(engine, prop: str, probe: ProbeCase) -> PropertyVerdict:
    """Check an equivalence, consistency, independence or relevance property on one probe."""
    if prop != probe.property:
        raise ValueError(f"probe {probe.name!r} is for {probe.property}, not {prop}")
    p = probe.program
    if prop in TRANSFORMS or prop == "gppe":
        p2 = transformed(probe)
        qs = _queries(probe, p, p2)
        return _compare(prop, probe, _labels(engine, p, qs), _labels(engine, p2, qs),
                        "transformed program")
    if prop == "consistency":
        qs = _queries(probe, p) or [Literal(Atom("__probe__"))]
        out = engine.ask(p, (qs[0],))
        if out.no_stable_model:
            return PropertyVerdict(prop, VIOLATED,
                                   Witness(probe.name, str(qs[0]), "-", "no model",
                                           "engine yields no model"))
        return PropertyVerdict(prop, SATISFIED)
    if prop == "independence":
        ext = probe.extension
        if ext is None:
            raise ValueError("independence probe needs an extension program")
        preds = {(k, n, a) for k, n, a in p.alphabet if k == "predicate"}
        if preds & {(k, n, a) for k, n, a in ext.alphabet if k == "predicate"}:
            raise ValueError("alphabets-not-disjoint")
        qs = _queries(probe, p)
        union = p.extend(ext)
        before = {q: engine.ask(p, (q,)).label == "true" for q in qs}
        after = {q: engine.ask(union, (q,)).label == "true" for q in qs}
        for q in qs:
            if before[q] != after[q]:
                return PropertyVerdict(prop, VIOLATED,
                                       Witness(probe.name, str(q), _tf(before[q]), _tf(after[q]),
                                               "after adding a disjoint program"))
        return PropertyVerdict(prop, SATISFIED)
    if prop == "relevance":
        for q in _queries(probe, p):
            full = engine.ask(p, (q,)).label
            rel = engine.ask(relevant_subprogram(p, q), (q,)).label
            if full != rel:
                return PropertyVerdict(prop, VIOLATED,
                                       Witness(probe.name, str(q), rel, full,
                                               "relevant subprogram vs. whole program"))
        return PropertyVerdict(prop, SATISFIED)
    raise ValueError(f"{prop} is not a weak property; use its own check")


def _tf(b: bool) -> str:
    return "true" if b else "not true"


def _subsets_between(low, high, limit=12):
    extra = sorted(set(high) - set(low), key=str)
    if len(extra) > limit:
        raise ValueError("too many atoms to enumerate V sets; give them explicitly")
    for k in range(len(extra) + 1):
        for combo in itertools.combinations(extra, k):
            yield tuple(sorted(set(low) | set(combo), key=str))


def check_cumulativity(engine, probe: ProbeCase) -> PropertyVerdict:
    """Adding derived lemmas ``V`` (U <= V <= conclusions) must not change the conclusions."""
    p, u = probe.program, tuple(probe.lemmas)
    atoms = program_atoms(p)
    base = _conclusions(engine, p, atoms)
    if not set(u) <= base:
        raise ProbeError(f"{probe.name}: lemmas not derivable (U-not-derivable)")
    with_u = _conclusions(engine, p.extend(_facts(u)), atoms)
    vsets = probe.vsets if probe.vsets is not None else _subsets_between(u, with_u)
    for v in vsets:
        if not (set(u) <= set(v) <= with_u):
            continue
        with_v = _conclusions(engine, p.extend(_facts(v)), atoms)
        if with_v != with_u:
            diff = sorted(with_u ^ with_v, key=str)[0]
            return PropertyVerdict(
                "cumulativity", VIOLATED,
                Witness(probe.name, str(diff), _tf(diff in with_u), _tf(diff in with_v),
                        f"after adding lemma(s) {', '.join(map(str, v)) or '-'}"))
    return PropertyVerdict("cumulativity", SATISFIED)


def check_rationality(engine, probe: ProbeCase) -> PropertyVerdict:
    """Adding atoms not sceptically false (U <= V) must not lose any conclusion."""
    p, u = probe.program, tuple(probe.lemmas)
    atoms = program_atoms(p)
    pu = p.extend(_facts(u))
    with_u = _conclusions(engine, pu, atoms)
    refuted = {a for a in atoms if engine.ask(pu, (Literal(a, naf=True),)).label == "true"}
    vsets = probe.vsets if probe.vsets is not None else _subsets_between(u, atoms)
    checked = skipped = 0
    for v in vsets:
        if not set(u) <= set(v):
            continue
        if set(v) & refuted:
            skipped += 1
            continue
        checked += 1
        with_v = _conclusions(engine, p.extend(_facts(v)), atoms)
        if not with_u <= with_v:
            lost = sorted(with_u - with_v, key=str)[0]
            return PropertyVerdict(
                "rationality", VIOLATED,
                Witness(probe.name, str(lost), "true", "not true",
                        f"after adding {', '.join(map(str, v)) or '-'}"),
                skipped=skipped)
    if not checked:
        return PropertyVerdict("rationality", SATISFIED, skipped=skipped,
                               note=RESTRICTION + "; every V set skipped by precondition")
    return PropertyVerdict("rationality", SATISFIED, skipped=skipped)


def run_probe(engine, probe: ProbeCase) -> PropertyVerdict:
    if probe.property == "cumulativity":
        return check_cumulativity(engine, probe)
    if probe.property == "rationality":
        return check_rationality(engine, probe)
    return check_weak_property(engine, probe.property, probe)


def classify_engine(engine, suite) -> SemanticsProfile:
    """Run every probe and aggregate per property (any violation wins)."""
    suite = list(suite)
    if not suite:
        raise ValueError("empty probe suite")
    missing = set(PROPERTIES) - {p.property for p in suite}
    if missing:
        raise ValueError(f"probe suite lacks properties: {', '.join(sorted(missing))}")
    verdicts: dict = {}
    counts = {prop: [0, 0] for prop in PROPERTIES}
    for probe in suite:
        try:
            v = run_probe(engine, probe)
        except ProbeError:
            counts[probe.property][1] += 1
            continue
        counts[probe.property][0] += 1
        counts[probe.property][1] += v.skipped
        if v.violated and probe.property not in verdicts:
            verdicts[probe.property] = v
    out = SemanticsProfile(engine.label)
    for prop in PROPERTIES:
        n, skipped = counts[prop]
        v = verdicts.get(prop)
        if v is None:
            v = PropertyVerdict(prop, SATISFIED)
        out.verdicts[prop] = PropertyVerdict(prop, v.status, v.witness, n, skipped)
    return out


# -- reference matrix ---------------------------------------------------------------------

COLUMNS = ("cumulativity", "rationality", "tautElim", "gppe", "reduction", "nonMinElim",
           "relevance", "consistency", "independence")

_PROPERTY_COLUMN = {p: ("reduction" if p in ("posReduction", "negReduction") else p)
                    for p in PROPERTIES}


def _row(cls, marks):
    return cls, dict(zip(COLUMNS, (m == "+" for m in marks.split())))


# "+" = property holds, "-" = it does not
REFERENCE_MATRIX = {
    "COMP": _row("Normal", "- + - + + + - - -"),
    "COMP3": _row("Normal", "+ + - + + + - - -"),
    "WFS": _row("Normal", "+ + + + + + + + +"),
    "STABLE": _row("Normal", "- + + + + + - - -"),
    "WGCWA": _row("Pos. Disj.", "- + - + + - + + +"),
    "GCWA": _row("Strat. Disj.", "+ - + + + + + + +"),
    "PERFECT": _row("Strat. Disj.", "+ - + + + + - + +"),
}

# (a, b): semantics a derives at least what b derives on the programs both accept
EXTENDS = {("WFS", "COMP3"), ("STABLE", "WFS"), ("STABLE", "COMP3"), ("COMP", "COMP3"),
           ("GCWA", "WGCWA")}


def executable(engine_semantics: str, program_semantics: str) -> bool:
    """Can a program written for ``program_semantics`` run on an engine implementing
    ``engine_semantics``?  Only if the engine derives at least as much."""
    a, b = _sem_name(engine_semantics), _sem_name(program_semantics)
    return a == b or (a, b) in EXTENDS


def _sem_name(s: str) -> str:
    s = s.split(":", 1)[-1].upper().replace("₃", "3")
    return "GCWA" if s == "CGWA" else s


@dataclass(frozen=True)
class Candidate:
    name: str
    exact: int
    weak: tuple  # properties satisfied on the suite although the row says they fail


@dataclass
class MatchResult:
    candidates: list
    declared: str | None = None
    executable: bool | None = None

    @property
    def best(self) -> str | None:
        return self.candidates[0].name if self.candidates else None


def match_profile(profile: SemanticsProfile, matrix=REFERENCE_MATRIX,
                  declared: str | None = None) -> MatchResult:
    """Rows consistent with the profile, best first.

    A violation contradicts a row that claims the property; a clean result
    is compatible with either mark (weakly so with a failing mark).
    """
    out = []
    for name, (_, row) in matrix.items():
        exact, weak, ok = 0, [], True
        for prop in PROPERTIES:
            holds = row[_PROPERTY_COLUMN[prop]]
            violated = profile.status(prop) == VIOLATED
            if violated and holds:
                ok = False
                break
            if violated or holds:
                exact += 1
            else:
                weak.append(prop)
        if ok:
            out.append(Candidate(name, exact, tuple(weak)))
    order = list(matrix)
    out.sort(key=lambda c: (-c.exact, order.index(c.name)))
    result = MatchResult(out)
    if declared is not None and out:
        result.declared = declared
        result.executable = executable(out[0].name, declared)
    return result


# -- shipped probe suite ---------------------------------------------------------------------


def _P(text: str) -> Program:
    from .parser import parse_program

    return parse_program(text)


def _atoms(*names) -> tuple:
    return tuple(Atom(n) for n in names)


def default_probe_suite() -> list:
    """Meta test probes covering all ten properties."""
    cautious = _P("a :- not b. b :- not a. c :- not c. c :- a.")
    return [
        ProbeCase("cautious-monotony", "cumulativity", cautious, queries=()),
        ProbeCase("stratified-lemma", "cumulativity",
                  _P("p :- q. q :- not r. s :- p, not t.")),
        ProbeCase("even-loop-lemma", "rationality", _P("a :- not b. b :- not a."),
                  vsets=(_atoms("a"), _atoms("b"))),
        ProbeCase("stratified-extension", "rationality",
                  _P("p :- q. q. r :- not s. t :- s."), vsets=(_atoms("p"), _atoms("s"))),
        ProbeCase("single-fact", "rationality", _P("f."), vsets=(_atoms("f"),)),
        ProbeCase("tautology", "tautElim", _P("a :- a. b :- not a.")),
        ProbeCase("tautology-with-negation", "tautElim",
                  _P("p :- p, not q. q :- not r. r :- not q.")),
        ProbeCase("unfold-two-definitions", "gppe",
                  _P("a :- b, not c. b :- not d. b :- e. e."), transform_args=(0, 0)),
        ProbeCase("unfold-loop", "gppe", _P("a :- b. b :- not c. c :- not b."),
                  transform_args=(0, 0)),
        ProbeCase("undefined-negated", "posReduction", _P("a :- not c. b :- a.")),
        ProbeCase("undefined-in-loop", "posReduction", _P("a :- not b, not z. b :- not a.")),
        ProbeCase("negated-fact", "negReduction", _P("a :- not b. b. c :- not a.")),
        ProbeCase("non-minimal", "nonMinElim", _P("p :- q, r. p :- q. q. r :- not s.")),
        ProbeCase("odd-loop", "consistency", _P("c :- not c.")),
        ProbeCase("positive-program", "consistency", _P("a :- b. b.")),
        ProbeCase("disjoint-odd-loop", "independence", _P("a :- not b."),
                  extension=_P("c :- not c.")),
        ProbeCase("disjoint-facts", "independence", _P("p :- q. q."), extension=_P("r.")),
        ProbeCase("unrelated-odd-loop", "relevance", _P("a :- not b. c :- not c."),
                  queries=(Literal(Atom("a")),)),
    ]


def load_probe_suite(path) -> list:
    """Load probes from JSON: a list of objects with ``name``, ``property``,
    ``program`` (program text) and optional ``extension``, ``transform_args``,
    ``lemmas``, ``vsets`` and ``queries``."""
    from .parser import parse_literal

    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    out = []
    for d in data:
        out.append(ProbeCase(
            d["name"], d["property"], _P(d["program"]),
            _P(d["extension"]) if d.get("extension") else None,
            tuple(d.get("transform_args", ())),
            tuple(parse_literal(a).atom for a in d.get("lemmas", ())),
            None if d.get("vsets") is None else
            tuple(tuple(parse_literal(a).atom for a in v) for v in d["vsets"]),
            tuple(parse_literal(q) for q in d.get("queries", ())),
        ))
    return out


def dump_probe_suite(suite) -> str:
    out = []
    for p in suite:
        d = {"name": p.name, "property": p.property, "program": str(p.program)}
        if p.extension is not None:
            d["extension"] = str(p.extension)
        if p.transform_args:
            d["transform_args"] = list(p.transform_args)
        if p.lemmas:
            d["lemmas"] = [str(a) for a in p.lemmas]
        if p.vsets is not None:
            d["vsets"] = [[str(a) for a in v] for v in p.vsets]
        if p.queries:
            d["queries"] = [str(q) for q in p.queries]
        out.append(d)
    return json.dumps(out, indent=2)


def format_profile(profile: SemanticsProfile, result: MatchResult | None = None) -> str:
    lines = ["property\tstatus\tprobes\twitness"]
    for prop in PROPERTIES:
        v = profile.verdicts[prop]
        lines.append(f"{prop}\t{v.status}\t{v.probes}\t{v.witness or '-'}")
    lines.append(f"note\t{RESTRICTION}; {SATISFIED} means no violation on this finite suite")
    if result is not None:
        for c in result.candidates:
            weak = f" (weak on {', '.join(c.weak)})" if c.weak else ""
            lines.append(f"candidate\t{c.name}\t{c.exact}/{len(PROPERTIES)}{weak}")
        if not result.candidates:
            lines.append("candidate\tnone")
        if result.declared is not None:
            lines.append(f"executable\t{result.declared}\t{'yes' if result.executable else 'no'}")
    return "\n".join(lines)
