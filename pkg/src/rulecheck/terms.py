"""Symbolic term layer: terms, literals, clauses and the operations over them.

Substitutions are plain dicts mapping :class:`Var` to terms.  Functions that
can fail (``unify``, ``match``, ``lgg_clauses``) return ``None`` on failure.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Union

BUILTINS = frozenset({">", "<", ">=", "=<", "==", "!="})

_SYMBOL_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_RESERVED = frozenset({"not", "neg"})


class _Cached:
    """Structural hash and variable list, computed once per immutable node."""

    __slots__ = ()

    def __hash__(self):
        d = self.__dict__
        h = d.get("_hash")
        if h is None:
            h = d["_hash"] = hash(tuple(getattr(self, f) for f in self.__dataclass_fields__))
        return h

    def __getstate__(self):
        # string hashes differ between processes
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    @cached_property
    def _vars(self) -> tuple:
        return tuple(_term_vars(self))

    @cached_property
    def _depth(self) -> int:
        d = max((term_depth(a) for a in self.args), default=0)
        return d + 1 if isinstance(self, Compound) else d



@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    """A constant: symbol, quoted string, integer or decimal."""

    value: Union[str, int, float]

    def __str__(self):
        if isinstance(self.value, str):
            return format_symbol(self.value)
        return repr(self.value)


@dataclass(frozen=True)
class Compound(_Cached):
    __hash__ = _Cached.__hash__

    functor: str
    args: tuple

    def __post_init__(self):
        if not self.args:
            raise ValueError(f"compound {self.functor!r} needs at least one argument")

    def __str__(self):
        return f"{format_symbol(self.functor)}({', '.join(map(str, self.args))})"


Term = Union[Var, Const, Compound]


@dataclass(frozen=True)
class Atom(_Cached):
    __hash__ = _Cached.__hash__

    predicate: str
    args: tuple = ()
    neg: bool = False  # explicit (classical) negation

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def key(self) -> tuple:
        """Relation identity: predicate, arity and explicit-negation flag."""
        return (self.predicate, len(self.args), self.neg)

    @property
    def is_builtin(self) -> bool:
        return self.predicate in BUILTINS and len(self.args) == 2 and not self.neg

    def __str__(self):
        return self._text

    @cached_property
    def _text(self) -> str:
        if self.is_builtin:
            body = f"{self.args[0]} {self.predicate} {self.args[1]}"
        elif self.args:
            body = f"{format_symbol(self.predicate)}({', '.join(map(str, self.args))})"
        else:
            body = format_symbol(self.predicate)
        return f"neg {body}" if self.neg else body


@dataclass(frozen=True)
class Literal(_Cached):
    __hash__ = _Cached.__hash__

    atom: Atom
    naf: bool = False  # default negation

    def __str__(self):
        return f"not {self.atom}" if self.naf else str(self.atom)


@dataclass(frozen=True)
class Clause(_Cached):
    """A rule ``head :- body``; a fact has an empty body, a goal clause no head."""

    __hash__ = _Cached.__hash__

    head: Atom | None
    body: tuple = ()

    @property
    def is_fact(self) -> bool:
        return self.head is not None and not self.body

    @property
    def is_rule(self) -> bool:
        return self.head is not None and bool(self.body)

    def __str__(self):
        body = ", ".join(map(str, self.body))
        if self.head is None:
            return f":- {body}."
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {body}."


@dataclass(frozen=True)
class IntegrityConstraint:
    operator: str  # and | or | not | xor
    conditions: tuple  # of Literal
    origin: str = ""

    OPERATORS = ("and", "or", "not", "xor")

    def __post_init__(self):
        if self.operator not in self.OPERATORS:
            raise ValueError(f"unknown integrity operator {self.operator!r}")
        if not self.conditions:
            raise ValueError("integrity constraint needs at least one condition")
        if self.operator == "xor" and len(self.conditions) < 2:
            raise ValueError("xor constraint needs at least two conditions")

    def __str__(self):
        return f"integrity({self.operator}, [{', '.join(map(str, self.conditions))}])."


def format_symbol(name: str) -> str:
    if _SYMBOL_RE.match(name) and name not in _RESERVED:
        return name
    escaped = (name.replace("\\", "\\\\").replace("'", "\\'")
               .replace("\n", "\\n").replace("\t", "\\t"))
    return f"'{escaped}'"


def pos(predicate: str, *args, neg: bool = False) -> Literal:
    """Shorthand for a positive literal; string args starting uppercase become variables."""
    return Literal(atom(predicate, *args, neg=neg))


def atom(predicate: str, *args, neg: bool = False) -> Atom:
    return Atom(predicate, tuple(_coerce(a) for a in args), neg)


def _coerce(x) -> Term:
    if isinstance(x, (Var, Const, Compound)):
        return x
    if isinstance(x, str) and x[:1].isupper() or x == "_":
        return Var(x)
    return Const(x)


# -- traversal ---------------------------------------------------------------


def term_vars(t) -> Iterator[Var]:
    """Variables of a term, atom, literal or clause in first-occurrence order (with repeats)."""
    if isinstance(t, Var):
        yield t
    elif isinstance(t, _Cached):
        yield from t._vars
    elif isinstance(t, (tuple, list)):
        for x in t:
            yield from term_vars(x)


def _term_vars(t) -> Iterator[Var]:
    if isinstance(t, Compound):
        for a in t.args:
            yield from term_vars(a)
    elif isinstance(t, Atom):
        for a in t.args:
            yield from term_vars(a)
    elif isinstance(t, Literal):
        yield from term_vars(t.atom)
    elif isinstance(t, Clause):
        if t.head is not None:
            yield from term_vars(t.head)
        for lit in t.body:
            yield from term_vars(lit)


def variables(t) -> list[Var]:
    return list(dict.fromkeys(term_vars(t)))


def is_ground(t) -> bool:
    return next(term_vars(t), None) is None


def term_depth(t) -> int:
    if isinstance(t, (Compound, Atom)):
        return t._depth
    return 0


def apply_subst(x, s: dict):
    """Simultaneous replacement of the variables bound in ``s``."""
    if not s:
        return x
    if isinstance(x, Var):
        return s.get(x, x)
    if isinstance(x, Const):
        return x
    if isinstance(x, Compound):
        return Compound(x.functor, tuple(apply_subst(a, s) for a in x.args))
    if isinstance(x, Atom):
        if not x.args:
            return x
        return Atom(x.predicate, tuple(apply_subst(a, s) for a in x.args), x.neg)
    if isinstance(x, Literal):
        return Literal(apply_subst(x.atom, s), x.naf)
    if isinstance(x, Clause):
        head = None if x.head is None else apply_subst(x.head, s)
        return Clause(head, tuple(apply_subst(lit, s) for lit in x.body))
    if isinstance(x, IntegrityConstraint):
        return IntegrityConstraint(
            x.operator, tuple(apply_subst(c, s) for c in x.conditions), x.origin
        )
    if isinstance(x, tuple):
        return tuple(apply_subst(e, s) for e in x)
    raise TypeError(f"cannot substitute into {type(x).__name__}")


def compose(s1: dict, s2: dict) -> dict:
    """The substitution equivalent to applying ``s1`` then ``s2``."""
    out = {}
    for v, t in s1.items():
        t2 = apply_subst(t, s2)
        if t2 != v:
            out[v] = t2
    for v, t in s2.items():
        if v not in s1 and t != v:
            out[v] = t
    return out


# -- unification -------------------------------------------------------------


def _walk(t, s):
    while isinstance(t, Var) and t in s:
        t = s[t]
    return t


def _occurs(v: Var, t, s) -> bool:
    t = _walk(t, s)
    if t == v:
        return True
    if isinstance(t, Compound):
        return any(_occurs(v, a, s) for a in t.args)
    return False


def _unify_terms(a, b, s: dict) -> bool:
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x, y = _walk(x, s), _walk(y, s)
        if x == y:
            continue
        if isinstance(x, Var):
            if _occurs(x, y, s):
                return False
            s[x] = y
        elif isinstance(y, Var):
            if _occurs(y, x, s):
                return False
            s[y] = x
        elif (
            isinstance(x, Compound)
            and isinstance(y, Compound)
            and x.functor == y.functor
            and len(x.args) == len(y.args)
        ):
            stack.extend(zip(x.args, y.args))
        else:
            return False
    return True


def _resolve(s: dict) -> dict:
    def full(t):
        t = _walk(t, s)
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(full(a) for a in t.args))
        return t

    return {v: full(t) for v, t in s.items()}


def unify(t1, t2) -> dict | None:
    """Most general unifier of two terms or atoms (with occurs check), or ``None``."""
    if isinstance(t1, Literal) or isinstance(t2, Literal):
        if not (isinstance(t1, Literal) and isinstance(t2, Literal)) or t1.naf != t2.naf:
            return None
        t1, t2 = t1.atom, t2.atom
    if isinstance(t1, Atom) or isinstance(t2, Atom):
        if not (isinstance(t1, Atom) and isinstance(t2, Atom)) or t1.key != t2.key:
            return None
        pairs = zip(t1.args, t2.args)
    else:
        pairs = [(t1, t2)]
    s: dict = {}
    for a, b in pairs:
        if not _unify_terms(a, b, s):
            return None
    return _resolve(s)


def match(pattern, target, s: dict | None = None) -> dict | None:
    """One-way matching: a substitution ``m`` extending ``s`` with ``pattern m == target``.

    Variables of ``target`` are treated as constants.
    """
    s = {} if s is None else dict(s)
    stack = [(pattern, target)]
    while stack:
        p, t = stack.pop()
        if isinstance(p, Var):
            bound = s.get(p)
            if bound is None:
                s[p] = t
            elif bound != t:
                return None
        elif isinstance(p, Const):
            if p != t:
                return None
        elif isinstance(p, Compound):
            if (
                not isinstance(t, Compound)
                or p.functor != t.functor
                or len(p.args) != len(t.args)
            ):
                return None
            stack.extend(zip(p.args, t.args))
        elif isinstance(p, Atom):
            if not isinstance(t, Atom) or p.key != t.key:
                return None
            stack.extend(zip(p.args, t.args))
        elif isinstance(p, Literal):
            if not isinstance(t, Literal) or p.naf != t.naf:
                return None
            stack.append((p.atom, t.atom))
        else:
            raise TypeError(f"cannot match {type(p).__name__}")
    return s


def term_subsumes(general, specific) -> bool:
    return match(general, specific) is not None


# -- subsumption and variants -----------------------------------------------


def _embed(lits, targets, s, injective_vars=False):
    """Backtracking search mapping every literal of ``lits`` into ``targets``."""
    if not lits:
        yield s
        return
    # most constrained literal first: fewest candidate targets
    best, best_cands = None, None
    for i, lit in enumerate(lits):
        cands = []
        for t in targets:
            m = match(lit, t, s)
            if m is not None and (not injective_vars or _injective(m)):
                cands.append(m)
        if best_cands is None or len(cands) < len(best_cands):
            best, best_cands = i, cands
            if not cands:
                return
    rest = lits[:best] + lits[best + 1 :]
    for m in best_cands:
        yield from _embed(rest, targets, m, injective_vars)


def _injective(s: dict) -> bool:
    vals = list(s.values())
    return all(isinstance(v, Var) for v in vals) and len(set(vals)) == len(vals)


def theta_subsumes(c1: Clause, c2: Clause) -> bool:
    """True iff some substitution maps ``c1`` into ``c2`` (heads positionally, bodies as sets)."""
    return _subsumer(c1, c2) is not None


def _subsumer(c1: Clause, c2: Clause, renaming: bool = False) -> dict | None:
    if (c1.head is None) != (c2.head is None):
        return None
    s: dict = {}
    if c1.head is not None:
        s = match(c1.head, c2.head)
        if s is None or (renaming and not _injective(s)):
            return None
    targets = list(dict.fromkeys(c2.body))
    lits = list(dict.fromkeys(c1.body))
    return next(_embed(lits, targets, s, renaming), None)


def is_variant(c1: Clause, c2: Clause) -> bool:
    """True iff the clauses are equal up to a bijective variable renaming."""
    if isinstance(c1, Clause) and isinstance(c2, Clause):
        b1, b2 = set(c1.body), set(c2.body)
        if len(b1) != len(b2) or (c1.head is None) != (c2.head is None):
            return False
        s = _subsumer(c1, c2, renaming=True)
        if s is None:
            return False
        # an injective renaming mapping one literal set onto an equal-size set is onto
        return {apply_subst(l, s) for l in b1} == b2
    s = match(c1, c2)
    return s is not None and _injective(s) and match(c2, c1) is not None


def clause_equivalent(c1: Clause, c2: Clause) -> bool:
    return theta_subsumes(c1, c2) and theta_subsumes(c2, c1)


# -- anti-unification ---------------------------------------------------------


class _Generalizer:
    """Shared mismatch table for Plotkin anti-unification."""

    def __init__(self, avoid: Iterable[str] = ()):
        self.table: dict = {}
        self.avoid = set(avoid)
        self.counter = itertools.count(1)

    def fresh(self) -> Var:
        while True:
            name = f"V{next(self.counter)}"
            if name not in self.avoid:
                return Var(name)

    def term(self, t1, t2):
        if t1 == t2:
            return t1
        if (
            isinstance(t1, Compound)
            and isinstance(t2, Compound)
            and t1.functor == t2.functor
            and len(t1.args) == len(t2.args)
        ):
            return Compound(t1.functor, tuple(self.term(a, b) for a, b in zip(t1.args, t2.args)))
        v = self.table.get((t1, t2))
        if v is None:
            v = self.table[(t1, t2)] = self.fresh()
        return v

    def atom(self, a1: Atom, a2: Atom) -> Atom:
        return Atom(a1.predicate, tuple(self.term(x, y) for x, y in zip(a1.args, a2.args)), a1.neg)


def lgg_terms(t1, t2):
    """Least general generalization of two terms (or two atoms of the same relation)."""
    g = _Generalizer(v.name for v in variables((t1, t2)))
    if isinstance(t1, Atom):
        if not isinstance(t2, Atom) or t1.key != t2.key:
            raise ValueError("atoms of different relations have no atom lgg")
        return g.atom(t1, t2)
    return g.term(t1, t2)


def lgg_clauses(c1: Clause, c2: Clause) -> Clause | None:
    """Plotkin lgg of two clauses, reduced; ``None`` if the heads are incompatible."""
    if c1.head is None or c2.head is None or c1.head.key != c2.head.key:
        return None
    g = _Generalizer(v.name for v in variables((c1, c2)))
    head = g.atom(c1.head, c2.head)
    body = []
    for l1 in c1.body:
        for l2 in c2.body:
            if l1.naf == l2.naf and l1.atom.key == l2.atom.key:
                body.append(Literal(g.atom(l1.atom, l2.atom), l1.naf))
    return reduce_clause(Clause(head, tuple(dict.fromkeys(body))))


def reduce_clause(c: Clause) -> Clause:
    """Drop body literals whose removal keeps the clause subsumption-equivalent."""
    body = list(dict.fromkeys(c.body))
    i = 0
    while i < len(body):
        shorter = Clause(c.head, tuple(body[:i] + body[i + 1 :]))
        if theta_subsumes(Clause(c.head, tuple(body)), shorter):
            body.pop(i)
        else:
            i += 1
    return Clause(c.head, tuple(body))


def rename_apart(c, suffix: str):
    if is_ground(c):
        return c
    return apply_subst(c, {v: Var(f"{v.name}{suffix}") for v in variables(c)})
