"""Integrity constraints evaluated as goals against a knowledge state."""

from __future__ import annotations

from dataclasses import dataclass, field

from .engines import DEFAULT_DEPTH, WFS, EngineId, Evaluation, ground
from .kb import KnowledgeBase
from .terms import Atom, Clause, IntegrityConstraint, Literal, is_ground

HYPOTHETICAL_MODULE = "__hypothetical__"


@dataclass(frozen=True)
class ICVerdict:
    constraint: IntegrityConstraint
    violated: bool
    # condition indices that witness the violation, with their answers
    witness: tuple = ()
    answers: dict = field(default_factory=dict, compare=False)

    def describe(self) -> str:
        conds = self.constraint.conditions
        ic = str(self.constraint).rstrip(".")
        if not self.violated:
            return f"{ic} satisfied"
        shown = ", ".join(str(conds[i]) for i in self.witness) or "-"
        return f"{ic} violated by {shown}"


@dataclass(frozen=True)
class IntegrityReport:
    violated: tuple  # of ICVerdict
    state: int
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violated

    def __len__(self):
        return len(self.violated)


def _provable(ev: Evaluation, lit: Literal):
    out = ev.query((lit,))
    return out.label == "true", out.answers


def eval_ic(source, engine: EngineId, ic: IntegrityConstraint, depth_bound: int = DEFAULT_DEPTH,
            evaluation: Evaluation | None = None) -> ICVerdict:
    """Evaluate one constraint; a condition counts only if it is provably true.

    and: violated iff some condition is not provable (all such are reported).
    not: violated iff some condition is provable (all such are reported).
    or:  violated iff no condition is provable.
    xor: violated iff two distinct conditions are both provable (first pair reported).
    """
    if evaluation is None:
        program = source.current_program() if isinstance(source, KnowledgeBase) else source
        evaluation = Evaluation(program, engine, depth_bound, extra_constants=ic.conditions)
    proven = {}
    for i, c in enumerate(ic.conditions):
        ok, answers = _provable(evaluation, c)
        if ok:
            proven[i] = answers
    n = len(ic.conditions)
    op = ic.operator
    if op == "and":
        witness = tuple(i for i in range(n) if i not in proven)
        return ICVerdict(ic, bool(witness), witness)
    if op == "not":
        witness = tuple(sorted(proven))
        return ICVerdict(ic, bool(witness), witness, {i: proven[i] for i in witness})
    if op == "or":
        return ICVerdict(ic, not proven, tuple(range(n)) if not proven else ())
    for j in sorted(proven):
        for k in sorted(proven):
            if j < k and ic.conditions[j] != ic.conditions[k]:
                return ICVerdict(ic, True, (j, k), {j: proven[j], k: proven[k]})
    return ICVerdict(ic, False)


def coherence_constraints(program, depth_bound: int = DEFAULT_DEPTH) -> tuple:
    """Ground ``xor(p(t), neg p(t))`` for every atom occurring with both signs."""
    g = ground(program, depth_bound)
    out = []
    for a in sorted(g.base, key=str):
        if a.neg:
            pos_atom = Atom(a.predicate, a.args, False)
            if pos_atom in g.base:
                out.append(IntegrityConstraint(
                    "xor", (Literal(pos_atom), Literal(a)), origin="coherence"))
    return tuple(out)


def test_integrity(kb: KnowledgeBase, engine: EngineId = WFS,
                   depth_bound: int = DEFAULT_DEPTH) -> IntegrityReport:
    """Evaluate every registered constraint (plus explicit-negation coherence)."""
    program = kb.current_program()
    ics = program.constraints + coherence_constraints(program, depth_bound)
    conds = tuple(c for ic in ics for c in ic.conditions)
    ev = Evaluation(program, engine, depth_bound, extra_constants=conds)
    verdicts = [eval_ic(program, engine, ic, depth_bound, ev) for ic in ics]
    return IntegrityReport(tuple(v for v in verdicts if v.violated), kb.state, len(verdicts))


test_integrity.__test__ = False


def test_integrity_hypothetical(kb: KnowledgeBase, engine: EngineId, literal,
                                depth_bound: int = DEFAULT_DEPTH) -> IntegrityReport:
    """Assert ``literal`` in a scratch module, check integrity, then retract it."""
    if isinstance(literal, Literal):
        if literal.naf:
            raise ValueError("hypothetical literal must be positive (explicit neg allowed)")
        literal = literal.atom
    if not is_ground(literal):
        raise ValueError("hypothetical literal must be ground")
    kb.add_module(HYPOTHETICAL_MODULE, [Clause(literal)])
    try:
        return test_integrity(kb, engine, depth_bound)
    finally:
        kb.remove_module(HYPOTHETICAL_MODULE)


test_integrity_hypothetical.__test__ = False
