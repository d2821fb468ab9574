"""Knowledge base: a base program plus ID-addressable update modules."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from .terms import Atom, Clause, Compound, IntegrityConstraint


class RuleCheckError(Exception):
    """Base class for errors raised by this package."""


class DuplicateModuleError(RuleCheckError):
    pass


class UnknownModuleError(RuleCheckError):
    pass


@dataclass(frozen=True)
class Program:
    clauses: tuple = ()
    constraints: tuple = ()

    def __iter__(self):
        return iter(self.clauses)

    def __len__(self):
        return len(self.clauses)

    @property
    def rules(self) -> tuple:
        return tuple(c for c in self.clauses if c.body)

    @property
    def facts(self) -> tuple:
        return tuple(c for c in self.clauses if not c.body)

    @cached_property
    def alphabet(self) -> frozenset:
        """Predicate and functor symbols as ``(kind, name, arity)`` triples."""
        out = set()

        def walk_term(t):
            if isinstance(t, Compound):
                out.add(("functor", t.functor, len(t.args)))
                for a in t.args:
                    walk_term(a)

        def walk_atom(a: Atom):
            out.add(("predicate", a.predicate, a.arity))
            for t in a.args:
                walk_term(t)

        for c in self.clauses:
            if c.head is not None:
                walk_atom(c.head)
            for lit in c.body:
                walk_atom(lit.atom)
        return frozenset(out)

    def __str__(self):
        return "\n".join(str(x) for x in self.clauses + self.constraints)

    def extend(self, other: "Program | tuple | list") -> "Program":
        if isinstance(other, Program):
            return Program(
                tuple(dict.fromkeys(self.clauses + other.clauses)),
                tuple(dict.fromkeys(self.constraints + other.constraints)),
            )
        return self.extend(program_of(other))

    @property
    def is_ground(self) -> bool:
        return not any(c._vars for c in self.clauses)


def program_of(items) -> Program:
    """Build a :class:`Program` from clauses and integrity constraints (deduplicated, in order)."""
    if isinstance(items, Program):
        return items
    clauses, constraints = [], []
    for x in items:
        if isinstance(x, Clause):
            clauses.append(x)
        elif isinstance(x, IntegrityConstraint):
            constraints.append(x)
        else:
            raise TypeError(f"not a clause or integrity constraint: {x!r}")
    return Program(tuple(dict.fromkeys(clauses)), tuple(dict.fromkeys(constraints)))


@dataclass
class KnowledgeBase:
    """Ordered update modules; the logical program is their deduplicated union.

    Each module keeps its own copy of its clauses, so retracting one module
    never removes a clause still contributed by another.
    """

    modules: dict = field(default_factory=dict)
    state: int = 0
    log: list = field(default_factory=list)

    @classmethod
    def from_program(cls, program, module_id: str = "base") -> "KnowledgeBase":
        kb = cls()
        kb.add_module(module_id, program)
        return kb

    def add_module(self, module_id: str, items=()) -> "KnowledgeBase":
        if not module_id:
            raise ValueError("module id must be nonempty")
        if module_id in self.modules:
            raise DuplicateModuleError(module_id)
        # validates every item before touching state
        prog = program_of(items)
        self.modules[module_id] = prog.clauses + prog.constraints
        self.state += 1
        self.log.append(("add", module_id))
        return self

    def remove_module(self, module_id: str) -> "KnowledgeBase":
        if module_id not in self.modules:
            raise UnknownModuleError(module_id)
        del self.modules[module_id]
        self.state += 1
        self.log.append(("remove", module_id))
        return self

    def current_program(self) -> Program:
        items = [x for mod in self.modules.values() for x in mod]
        return program_of(items)

    def integrity_constraints(self) -> tuple:
        return self.current_program().constraints

    def clause_set(self) -> frozenset:
        return frozenset(self.current_program().clauses)

    def __contains__(self, module_id):
        return module_id in self.modules
