"""Reference implementations used as test oracles.

They follow the textbook definitions directly and share no code with the
engines under test.
"""

from __future__ import annotations

import itertools

ATOMS = ("a", "b", "c")

# a ground normal rule is (head, positive body, negative body) over atom names


def least_model(rules) -> frozenset:
    m = set()
    changed = True
    while changed:
        changed = False
        for h, pos, _ in rules:
            if h not in m and pos <= m:
                m.add(h)
                changed = True
    return frozenset(m)


def reduct(rules, m) -> list:
    return [(h, pos, frozenset()) for h, pos, neg in rules if not neg & m]


def stable_models(rules, atoms) -> list:
    """Every M with M == least_model(reduct(P, M)), by enumerating all subsets."""
    atoms = sorted(atoms)
    out = []
    for k in range(len(atoms) + 1):
        for combo in itertools.combinations(atoms, k):
            m = frozenset(combo)
            if least_model(reduct(rules, m)) == m:
                out.append(m)
    return sorted(out, key=lambda s: sorted(s))


def well_founded(rules, atoms):
    """Well-founded model as the least fixpoint of ``W(I) = T(I) + not U(I)``.

    ``U(I)`` is the greatest unfounded set w.r.t. ``I``.  Returns (true, false).
    """
    true, false = frozenset(), frozenset()
    while True:
        t = {h for h, pos, neg in rules if pos <= true and neg <= false}
        # greatest unfounded set: shrink from all atoms
        u = set(atoms)
        changed = True
        while changed:
            changed = False
            for h, pos, neg in rules:
                if h not in u:
                    continue
                blocked = (pos & false) or (neg & true) or (pos & u)
                if not blocked:
                    u.discard(h)
                    changed = True
        nt, nf = frozenset(t), frozenset(u)
        if (nt, nf) == (true, false):
            return true, false
        true, false = nt, nf


# -- the exhaustive program family --------------------------------------------------


def bodies(atoms=ATOMS, max_len=2) -> list:
    lits = [(a, False) for a in atoms] + [(a, True) for a in atoms]
    out = []
    for k in range(max_len + 1):
        out.extend(itertools.combinations(lits, k))
    return out


def all_rules(atoms=ATOMS, max_len=2) -> list:
    out = []
    for h in atoms:
        for b in bodies(atoms, max_len):
            pos = frozenset(a for a, n in b if not n)
            neg = frozenset(a for a, n in b if n)
            out.append((h, pos, neg))
    return out


def _rename(rule, perm):
    h, pos, neg = rule
    return perm[h], frozenset(perm[a] for a in pos), frozenset(perm[a] for a in neg)


def _key(rule):
    h, pos, neg = rule
    return h, tuple(sorted(pos)), tuple(sorted(neg))


def program_family(atoms=ATOMS, max_rules=4, max_len=2) -> list:
    """All sets of at most ``max_rules`` distinct rules, one per atom-renaming class."""
    rules = all_rules(atoms, max_len)
    keys = [_key(r) for r in rules]
    index = {k: i for i, k in enumerate(keys)}
    perms = []
    for p in itertools.permutations(atoms):
        m = dict(zip(atoms, p))
        perms.append([index[_key(_rename(r, m))] for r in rules])
    seen = set()
    out = []
    for k in range(max_rules + 1):
        for combo in itertools.combinations(range(len(rules)), k):
            canon = min(tuple(sorted(pm[i] for i in combo)) for pm in perms)
            if canon in seen:
                continue
            seen.add(canon)
            out.append(tuple(rules[i] for i in canon))
    return out


def to_text(rules) -> str:
    out = []
    for h, pos, neg in rules:
        body = sorted(pos) + [f"not {a}" for a in sorted(neg)]
        out.append(f"{h} :- {', '.join(body)}." if body else f"{h}.")
    return " ".join(out)
