"""Grounding, well-founded and stable model computation, and query answering.

Both engines work on normal ground programs.  Explicit negation needs no
special treatment here: ``neg p(a)`` is simply a different ground atom from
``p(a)`` (the coherence check between the two lives in :mod:`integrity`).
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from functools import cached_property

from .kb import KnowledgeBase, Program, RuleCheckError
from .terms import (
    Atom,
    Compound,
    Const,
    Literal,
    apply_subst,
    match,
    term_depth,
    variables,
)

DEFAULT_DEPTH = 6


class EngineTimeout(RuleCheckError):
    pass


class Deadline:
    """Cooperative time budget checked inside the engines' inner loops."""

    def __init__(self, budget_ms: float | None = None):
        self.budget_ms = budget_ms
        self.start = time.perf_counter()
        self.end = None if budget_ms is None else self.start + budget_ms / 1000.0
        self._tick = 0

    def check(self):
        if self.end is None:
            return
        self._tick += 1
        if self._tick & 0xFF == 0 and time.perf_counter() >= self.end:
            raise EngineTimeout(f"time budget of {self.budget_ms} ms exceeded")

    def elapsed_ms(self) -> float:
        return (time.perf_counter() - self.start) * 1000.0


_NO_DEADLINE = Deadline()


@dataclass(frozen=True)
class EngineId:
    name: str = "WFS"  # WFS | STABLE
    mode: str = "sceptical"  # sceptical | credulous; ignored by WFS

    def __post_init__(self):
        if self.name not in ("WFS", "STABLE"):
            raise ValueError(f"unknown engine {self.name!r}")
        if self.mode not in ("sceptical", "credulous"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.name == "WFS" and self.mode != "sceptical":
            object.__setattr__(self, "mode", "sceptical")

    @classmethod
    def parse(cls, text: str) -> "EngineId":
        key = text.strip().lower()
        table = {
            "wfs": cls("WFS"),
            "stable": cls("STABLE", "sceptical"),
            "stable-sceptical": cls("STABLE", "sceptical"),
            "stable-skeptical": cls("STABLE", "sceptical"),
            "stable-credulous": cls("STABLE", "credulous"),
        }
        if key not in table:
            raise ValueError(f"unknown engine {text!r}; expected wfs, stable-sceptical "
                             "or stable-credulous")
        return table[key]

    def __str__(self):
        return "wfs" if self.name == "WFS" else f"stable-{self.mode}"


WFS = EngineId("WFS")
STABLE = EngineId("STABLE", "sceptical")
STABLE_CREDULOUS = EngineId("STABLE", "credulous")


@dataclass(frozen=True)
class GroundRule:
    head: Atom
    pos: frozenset = frozenset()
    neg: frozenset = frozenset()

    def __str__(self):
        body = sorted(map(str, self.pos)) + sorted(f"not {a}" for a in self.neg)
        return f"{self.head} :- {', '.join(body)}." if body else f"{self.head}."


@dataclass(frozen=True)
class GroundProgram:
    rules: tuple
    base: frozenset
    truncated: bool = False

    @classmethod
    def from_rules(cls, rules) -> "GroundProgram":
        rules = tuple(dict.fromkeys(rules))
        base = set()
        for r in rules:
            base.add(r.head)
            base.update(r.pos)
            base.update(r.neg)
        return cls(rules, frozenset(base))

    @cached_property
    def _compiled(self) -> "_Compiled":
        return _Compiled(self)


@dataclass(frozen=True)
class Interpretation3:
    true: frozenset
    false: frozenset
    unknown: frozenset = frozenset()

    def value(self, a: Atom) -> str:
        if a in self.true:
            return "true"
        if a in self.unknown:
            return "unknown"
        return "false"


@dataclass(frozen=True)
class QueryOutcome:
    label: str
    answers: tuple = ()  # of {Var: Term} dicts over the query's free variables
    no_stable_model: bool = False
    depth_bound_hit: bool = False

    @property
    def answer_set(self) -> frozenset:
        return frozenset(frozenset(a.items()) for a in self.answers)


# -- builtins ------------------------------------------------------------------


def _number(t):
    if isinstance(t, Const) and isinstance(t.value, (int, float)) and not isinstance(
        t.value, bool
    ):
        return t.value
    return None


def eval_builtin(a: Atom) -> bool:
    """Evaluate a ground comparison; non-numeric ordering comparisons are false."""
    x, y = a.args
    if a.predicate == "==":
        return x == y
    if a.predicate == "!=":
        return x != y
    nx, ny = _number(x), _number(y)
    if nx is None or ny is None:
        return False
    return {
        ">": nx > ny,
        "<": nx < ny,
        ">=": nx >= ny,
        "=<": nx <= ny,
    }[a.predicate]


# -- grounding ---------------------------------------------------------------------


def _constants_and_functors(items, consts: dict, functors: dict):
    def walk(t):
        if isinstance(t, Const):
            consts[t] = None
        elif isinstance(t, Compound):
            functors[(t.functor, len(t.args))] = None
            for a in t.args:
                walk(a)

    for x in items:
        atoms = []
        if isinstance(x, Atom):
            atoms = [x]
        elif isinstance(x, Literal):
            atoms = [x.atom]
        elif hasattr(x, "body"):
            atoms = ([x.head] if x.head is not None else []) + [l.atom for l in x.body]
        for a in atoms:
            for t in a.args:
                walk(t)


class _Universe:
    """Herbrand universe truncated at a term depth, built lazily."""

    def __init__(self, consts, functors, depth, deadline):
        self.consts = list(consts)
        self.functors = list(functors)
        self.depth = depth
        self.deadline = deadline
        self._terms = None
        self.truncated = False

    @property
    def terms(self) -> list:
        if self._terms is None:
            levels = [list(self.consts)]
            allterms = list(self.consts)
            for _ in range(self.depth):
                if not self.functors:
                    break
                new = []
                for f, n in self.functors:
                    for args in itertools.product(allterms, repeat=n):
                        self.deadline.check()
                        if any(a in levels[-1] for a in args) or len(levels) == 1:
                            new.append(Compound(f, args))
                seen = set(allterms)
                new = [t for t in dict.fromkeys(new) if t not in seen]
                if not new:
                    break
                levels.append(new)
                allterms.extend(new)
            else:
                if self.functors:
                    self.truncated = True
            self._terms = allterms
        return self._terms

    def assignments(self, vs):
        if not vs:
            yield {}
            return
        for combo in itertools.product(self.terms, repeat=len(vs)):
            self.deadline.check()
            yield dict(zip(vs, combo))


def _join(atoms, index, s, deadline, delta=None, delta_pos=-1):
    """All extensions of ``s`` matching every pattern in ``atoms`` against indexed atoms."""
    if not atoms:
        yield s
        return
    first, rest = atoms[0], atoms[1:]
    pool = delta if delta_pos == 0 else index
    for cand in pool.get(first.key, ()):
        deadline.check()
        m = match(first, cand, s)
        if m is not None:
            yield from _join(rest, index, m, deadline, delta, delta_pos - 1)


def max_depth(program: Program) -> int:
    d = 0
    for c in program.clauses:
        if c.head is not None:
            d = max(d, c.head._depth)
        for l in c.body:
            d = max(d, l.atom._depth)
    return d


def ground(
    program: Program,
    depth_bound: int = DEFAULT_DEPTH,
    extra_constants=(),
    deadline: Deadline | None = None,
) -> GroundProgram:
    """Instantiate the rules over the (depth-truncated) Herbrand universe.

    Only instances whose positive body atoms are possibly derivable are kept;
    other instances can never fire and do not affect either semantics.
    Built-in comparisons are evaluated and removed.  Terms deeper than
    ``depth_bound`` are cut off and reported via ``truncated``.
    """
    if depth_bound < 0:
        raise ValueError("depth bound must be >= 0")
    depth = max_depth(program)
    if depth > depth_bound:
        raise ValueError(f"program term depth {depth} exceeds depth bound {depth_bound}")
    deadline = deadline or _NO_DEADLINE
    clauses = [c for c in program.clauses if c.head is not None]

    if program.is_ground and not any(l.atom.is_builtin for c in clauses for l in c.body):
        return GroundProgram.from_rules(
            GroundRule(
                c.head,
                frozenset(l.atom for l in c.body if not l.naf),
                frozenset(l.atom for l in c.body if l.naf),
            )
            for c in clauses
        )

    consts: dict = {}
    functors: dict = {}
    _constants_and_functors(clauses, consts, functors)
    _constants_and_functors(extra_constants, consts, functors)
    universe = _Universe(consts, functors, depth_bound, deadline)

    prepared = []
    for c in clauses:
        pos = [l.atom for l in c.body if not l.naf and not l.atom.is_builtin]
        neg = [l.atom for l in c.body if l.naf and not l.atom.is_builtin]
        builtins = [l for l in c.body if l.atom.is_builtin]
        prepared.append((c, pos, neg, builtins, variables(c)))

    index: dict = {}
    known: set = set()
    rules: dict = {}
    truncated = False

    def emit(c, pos, neg, builtins, allvars, s, out):
        nonlocal truncated
        missing = [v for v in allvars if v not in s]
        for extra in universe.assignments(missing):
            full = {**s, **extra} if extra else s
            ok = True
            for b in builtins:
                if eval_builtin(apply_subst(b.atom, full)) == b.naf:
                    ok = False
                    break
            if not ok:
                continue
            head = apply_subst(c.head, full)
            if term_depth(head) > depth_bound:
                truncated = True
                continue
            rule = GroundRule(
                head,
                frozenset(apply_subst(a, full) for a in pos),
                frozenset(apply_subst(a, full) for a in neg),
            )
            if rule not in rules:
                rules[rule] = None
                if head not in known:
                    out.append(head)

    def add_atoms(new, delta):
        for a in new:
            if a not in known:
                known.add(a)
                index.setdefault(a.key, []).append(a)
                delta.setdefault(a.key, []).append(a)

    delta: dict = {}
    new: list = []
    for c, pos, neg, builtins, allvars in prepared:
        if not pos:
            emit(c, pos, neg, builtins, allvars, {}, new)
    add_atoms(new, delta)
    while delta:
        new = []
        for c, pos, neg, builtins, allvars in prepared:
            for i in range(len(pos)):
                if pos[i].key not in delta:
                    continue
                # literal i from the newest atoms, the rest from everything known
                order = [pos[i]] + pos[:i] + pos[i + 1 :]
                for s in _join(order, index, {}, deadline, delta, 0):
                    emit(c, pos, neg, builtins, allvars, s, new)
        delta = {}
        add_atoms(new, delta)

    truncated = truncated or universe.truncated
    g = GroundProgram.from_rules(rules)
    return GroundProgram(g.rules, g.base, truncated)


# -- model computation ----------------------------------------------------------------


class _Compiled:
    def __init__(self, g: GroundProgram):
        self.atoms = sorted(g.base, key=str)
        idx = {a: i for i, a in enumerate(self.atoms)}
        self.index = idx
        self.heads = [idx[r.head] for r in g.rules]
        self.pos = [tuple(idx[a] for a in r.pos) for r in g.rules]
        self.neg = [tuple(idx[a] for a in r.neg) for r in g.rules]
        self.watch = [[] for _ in self.atoms]
        for ri, p in enumerate(self.pos):
            for a in p:
                self.watch[a].append(ri)
        self.negative_atoms = sorted({a for n in self.neg for a in n})

    def gamma(self, assumed) -> set:
        """Least model of the reduct of the program with respect to ``assumed``."""
        heads, watch = self.heads, self.watch
        remaining = [len(p) for p in self.pos]
        applicable = [not any(a in assumed for a in n) for n in self.neg]
        stack = [heads[ri] for ri in range(len(heads)) if applicable[ri] and not remaining[ri]]
        true: set = set()
        while stack:
            a = stack.pop()
            if a in true:
                continue
            true.add(a)
            for ri in watch[a]:
                if applicable[ri]:
                    remaining[ri] -= 1
                    if not remaining[ri]:
                        stack.append(heads[ri])
        return true

    def wfs(self):
        t: set = set()
        u = self.gamma(t)
        while True:
            t2 = self.gamma(u)
            if t2 == t:
                return t, u
            t = t2
            u = self.gamma(t)


def well_founded_model(g: GroundProgram) -> Interpretation3:
    """Well-founded model by the alternating fixpoint."""
    comp = g._compiled
    t, u = comp.wfs()
    atoms = comp.atoms
    true = frozenset(atoms[i] for i in t)
    possible = frozenset(atoms[i] for i in u)
    return Interpretation3(true, g.base - possible, possible - true)


def stable_models(g: GroundProgram, deadline: Deadline | None = None) -> list:
    """All stable models, as frozensets of atoms, in a deterministic order.

    Candidates are guessed only over the atoms that occur negatively and are
    undefined in the well-founded model; every stable model contains the
    well-founded true atoms and none of the false ones.
    """
    deadline = deadline or _NO_DEADLINE
    comp = g._compiled
    t, u = comp.wfs()
    neg_atoms = set(comp.negative_atoms)
    fixed = t & neg_atoms
    choices = sorted((u - t) & neg_atoms)
    models = []
    for k in range(len(choices) + 1):
        for chosen in itertools.combinations(choices, k):
            deadline.check()
            guess = fixed | set(chosen)
            m = comp.gamma(guess)
            if m & neg_atoms == guess:
                models.append(frozenset(comp.atoms[i] for i in m))
    return sorted(models, key=lambda m: sorted(map(str, m)))


# -- query answering -------------------------------------------------------------------


def _query_vars(literals) -> list:
    return [v for v in variables(tuple(literals)) if not v.name.startswith("_")]


def _solve(literals, index, value, universe, deadline):
    """Yield ``(substitution, value)`` pairs; value 2 = true, 1 = unknown, 0 = false."""
    pos = [l.atom for l in literals if not l.naf and not l.atom.is_builtin]
    rest = [l for l in literals if l.naf or l.atom.is_builtin]
    allvars = variables(tuple(literals))
    for s in _join(pos, index, {}, deadline):
        v = min((value(apply_subst(a, s)) for a in pos), default=2)
        if v == 0:
            continue
        missing = [x for x in allvars if x not in s]
        for extra in universe.assignments(missing):
            full = {**s, **extra} if extra else s
            best = v
            for lit in rest:
                a = apply_subst(lit.atom, full)
                if a.is_builtin:
                    lv = 2 if eval_builtin(a) else 0
                else:
                    lv = value(a)
                if lit.naf:
                    lv = 2 - lv
                best = min(best, lv)
                if not best:
                    break
            if best:
                yield full, best


def _index(atoms) -> dict:
    idx: dict = {}
    for a in atoms:
        idx.setdefault(a.key, []).append(a)
    return idx


def _sorted_answers(answers) -> tuple:
    uniq = {frozenset(a.items()): a for a in answers}
    return tuple(
        uniq[k] for k in sorted(uniq, key=lambda k: sorted((v.name, str(t)) for v, t in k))
    )


class Evaluation:
    """The model(s) of one program snapshot under one engine, ready for queries."""

    def __init__(
        self,
        program: Program,
        engine: EngineId = WFS,
        depth_bound: int = DEFAULT_DEPTH,
        deadline: Deadline | None = None,
        extra_constants=(),
    ):
        self.program = program
        self.engine = engine
        self.deadline = deadline or _NO_DEADLINE
        self.ground = ground(program, depth_bound, extra_constants, self.deadline)
        consts: dict = {}
        functors: dict = {}
        _constants_and_functors(program.clauses, consts, functors)
        _constants_and_functors(extra_constants, consts, functors)
        self._consts, self._functors, self._depth = consts, functors, depth_bound
        if engine.name == "WFS":
            self.wfs = well_founded_model(self.ground)
            self.models = None
        else:
            self.wfs = None
            self.models = stable_models(self.ground, self.deadline)

    def _universe(self, literals) -> _Universe:
        consts, functors = dict(self._consts), dict(self._functors)
        _constants_and_functors(literals, consts, functors)
        return _Universe(consts, functors, self._depth, self.deadline)

    def query(self, literals) -> QueryOutcome:
        literals = tuple(literals)
        qvars = _query_vars(literals)
        universe = self._universe(literals)
        truncated = self.ground.truncated

        def project(s):
            return {v: s[v] for v in qvars}

        if self.wfs is not None:
            wfs = self.wfs
            true, unknown = wfs.true, wfs.unknown

            def value(a):
                return 2 if a in true else 1 if a in unknown else 0

            idx = _index(true | unknown)
            best, answers = 0, []
            for s, v in _solve(literals, idx, value, universe, self.deadline):
                best = max(best, v)
                if v == 2:
                    answers.append(project(s))
            label = {2: "true", 1: "unknown", 0: "false"}[best]
            return QueryOutcome(label, _sorted_answers(answers), False, truncated)

        per_model = []
        for m in self.models:
            idx = _index(m)

            def value(a, m=m):
                return 2 if a in m else 0

            per_model.append(
                {frozenset(project(s).items())
                 for s, _ in _solve(literals, idx, value, universe, self.deadline)}
            )
        if not per_model:
            return QueryOutcome("false", (), True, truncated)
        if self.engine.mode == "sceptical":
            ok = all(per_model)
            common = set.intersection(*per_model)
        else:
            ok = any(per_model)
            common = set.union(*per_model)
        answers = _sorted_answers(dict(a) for a in common) if ok else ()
        return QueryOutcome("true" if ok else "false", answers, False, truncated)

    def label(self, literal: Literal) -> str:
        return self.query((literal,)).label


def _as_program(source) -> Program:
    if isinstance(source, KnowledgeBase):
        return source.current_program()
    if isinstance(source, Program):
        return source
    from .kb import program_of

    return program_of(source)


def _as_query(query) -> tuple:
    if isinstance(query, str):
        from .parser import parse_query

        return parse_query(query)
    if isinstance(query, Literal):
        return (query,)
    if isinstance(query, Atom):
        return (Literal(query),)
    return tuple(Literal(q) if isinstance(q, Atom) else q for q in query)


def entails(
    source,
    engine: EngineId = WFS,
    query=(),
    depth_bound: int = DEFAULT_DEPTH,
    time_budget_ms: float | None = None,
) -> QueryOutcome:
    """Answer ``query`` against a knowledge base or program under ``engine``.

    Raises :class:`EngineTimeout` when ``time_budget_ms`` is exceeded.
    """
    literals = _as_query(query)
    deadline = Deadline(time_budget_ms)
    ev = Evaluation(_as_program(source), engine, depth_bound, deadline, literals)
    out = ev.query(literals)
    if deadline.end is not None and time.perf_counter() >= deadline.end:
        raise EngineTimeout(f"time budget of {time_budget_ms} ms exceeded")
    return out


def answer_set(source, engine: EngineId = WFS, query=(), depth_bound: int = DEFAULT_DEPTH,
               time_budget_ms: float | None = None) -> tuple:
    literals = _as_query(query)
    if not _query_vars(literals):
        raise ValueError("answer_set needs a query with at least one free variable")
    return entails(source, engine, literals, depth_bound, time_budget_ms).answers


@dataclass
class BuiltinEngine:
    """In-process engine with the same ``ask`` surface as external engines."""

    engine: EngineId = WFS
    depth_bound: int = DEFAULT_DEPTH
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def label(self) -> str:
        return str(self.engine)

    def evaluation(self, program: Program) -> Evaluation:
        ev = self._cache.get(program)
        if ev is None:
            if len(self._cache) > 256:
                self._cache.clear()
            ev = self._cache[program] = Evaluation(program, self.engine, self.depth_bound)
        return ev

    def ask(self, program: Program, query) -> QueryOutcome:
        literals = _as_query(query)
        ev = self.evaluation(program)
        if _has_new_constants(ev, literals):
            ev = Evaluation(program, self.engine, self.depth_bound, None, literals)
        return ev.query(literals)


def _has_new_constants(ev: Evaluation, literals) -> bool:
    consts: dict = {}
    _constants_and_functors(literals, consts, {})
    return any(c not in ev._consts for c in consts)
