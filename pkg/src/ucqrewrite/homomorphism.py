"""Homomorphism search, the generality preorder, cores and covers."""
from __future__ import annotations

from typing import Iterable, Iterator, Optional

from .kb import Atom, ConjunctiveQuery, Term, canonicalize, sorted_atoms

# A substitution maps variables to terms; constants are implicitly fixed.
Substitution = dict[Term, Term]


def apply_to_term(s: Substitution, t: Term) -> Term:
    return s.get(t, t)


def apply_to_atom(s: Substitution, a: Atom) -> Atom:
    return Atom(a.predicate, tuple(s.get(t, t) for t in a.args))


def apply_to_atoms(s: Substitution, atoms: Iterable[Atom]) -> frozenset[Atom]:
    return frozenset(apply_to_atom(s, a) for a in atoms)


def compose(outer: Substitution, inner: Substitution) -> Substitution:
    """(outer . inner): apply inner first."""
    out = {v: outer.get(t, t) for v, t in inner.items()}
    for v, t in outer.items():
        out.setdefault(v, t)
    return out


def _try_match(src: Atom, tgt: Atom, binding: Substitution) -> Optional[Substitution]:
    b = binding
    extended = False
    for s, t in zip(src.args, tgt.args):
        if s.is_constant:
            if s != t:
                return None
        else:
            cur = b.get(s)
            if cur is None:
                if not extended:
                    b = dict(b)
                    extended = True
                b[s] = t
            elif cur != t:
                return None
    return b


def homomorphisms(
    source: Iterable[Atom],
    target: Iterable[Atom],
    binding: Optional[Substitution] = None,
) -> Iterator[Substitution]:
    """All substitutions h with h(source) a subset of target, extending binding.

    Backtracking search; the next atom to match is always the one with the
    fewest remaining candidate target atoms.
    """
    src = list(source)
    tgt_by_pred: dict[tuple[str, int], list[Atom]] = {}
    for a in set(target):
        tgt_by_pred.setdefault((a.predicate, a.arity), []).append(a)
    for key in tgt_by_pred:
        tgt_by_pred[key].sort(key=Atom.sort_key)

    def candidates(a: Atom, b: Substitution) -> list[Substitution]:
        out = []
        for t in tgt_by_pred.get((a.predicate, a.arity), ()):
            nb = _try_match(a, t, b)
            if nb is not None:
                out.append(nb)
        return out

    def search(remaining: list[Atom], b: Substitution) -> Iterator[Substitution]:
        if not remaining:
            yield dict(b)
            return
        scored = [(candidates(a, b), a) for a in remaining]
        cands, best = min(scored, key=lambda p: len(p[0]))
        rest = [a for a in remaining if a is not best]
        for nb in cands:
            yield from search(rest, nb)

    yield from search(src, dict(binding or {}))


def find_homomorphism(
    source: Iterable[Atom],
    target: Iterable[Atom],
    binding: Optional[Substitution] = None,
) -> Optional[Substitution]:
    for h in homomorphisms(source, target, binding):
        return h
    return None


def more_general(q1: ConjunctiveQuery, q2: ConjunctiveQuery) -> bool:
    """q1 >= q2: q1 maps homomorphically into q2 (on ans-augmented forms)."""
    from .kb import attach_answer_atom

    a1 = attach_answer_atom(q1) if not q1.is_boolean else q1
    a2 = attach_answer_atom(q2) if not q2.is_boolean else q2
    return find_homomorphism(a1.atoms, a2.atoms) is not None


def equivalent(q1: ConjunctiveQuery, q2: ConjunctiveQuery) -> bool:
    return more_general(q1, q2) and more_general(q2, q1)


def isomorphic(q1: ConjunctiveQuery, q2: ConjunctiveQuery) -> bool:
    return len(q1.atoms) == len(q2.atoms) and equivalent(q1, q2)


def core(q: ConjunctiveQuery) -> ConjunctiveQuery:
    """Remove redundant atoms until no single-atom retract remains."""
    atoms = set(q.atoms)
    changed = True
    while changed and len(atoms) > 1:
        changed = False
        for a in sorted_atoms(atoms):
            rest = atoms - {a}
            if find_homomorphism(atoms, rest) is not None:
                atoms = rest
                changed = True
                break
    return ConjunctiveQuery(frozenset(atoms), q.answer_vars)


class _HomCache:
    def __init__(self):
        self._ge: dict[tuple[ConjunctiveQuery, ConjunctiveQuery], bool] = {}

    def ge(self, a: ConjunctiveQuery, b: ConjunctiveQuery) -> bool:
        key = (a, b)
        hit = self._ge.get(key)
        if hit is None:
            hit = self._ge[key] = more_general(a, b)
        return hit


def cover(
    explored: Iterable[ConjunctiveQuery],
    fresh: Iterable[ConjunctiveQuery],
) -> set[ConjunctiveQuery]:
    """Minimal subset covering explored + fresh under >=.

    Within an equivalence class an explored element is always preferred to a
    fresh one; remaining ties go to the smallest canonical form.
    """
    explored = list(explored)
    fresh = list(fresh)
    explored_set = set(explored)

    # dedup, explored first
    items: list[ConjunctiveQuery] = []
    seen: set[ConjunctiveQuery] = set()
    for q in explored + fresh:
        if q not in seen:
            seen.add(q)
            items.append(q)

    cache = _HomCache()

    def pref_key(q: ConjunctiveQuery):
        return (0 if q in explored_set else 1, canonicalize(q).sort_key(), q.sort_key())

    # group into equivalence classes
    classes: list[list[ConjunctiveQuery]] = []
    for q in items:
        for cls in classes:
            rep = cls[0]
            if cache.ge(rep, q) and cache.ge(q, rep):
                cls.append(q)
                break
        else:
            classes.append([q])

    reps = [min(cls, key=pref_key) for cls in classes]
    # keep only maximal representatives
    kept = [
        r
        for r in reps
        if not any(other is not r and cache.ge(other, r) for other in reps)
    ]
    return set(kept)
