"""Union-find partitions over terms: the carrier of unification state."""
from __future__ import annotations

from typing import Iterable, Optional

from .kb import Term
from .homomorphism import Substitution


class TermPartition:
    """Partition of a finite term set, built by unions over an initial carrier."""

    def __init__(self, classes: Iterable[Iterable[Term]] = ()):
        self._parent: dict[Term, Term] = {}
        for cls in classes:
            cls = list(cls)
            for t in cls:
                self.add(t)
            for t in cls[1:]:
                self.union(cls[0], t)

    def add(self, t: Term) -> None:
        self._parent.setdefault(t, t)

    def find(self, t: Term) -> Term:
        parent = self._parent
        root = t
        while parent[root] != root:
            root = parent[root]
        while parent[t] != root:  # path compression
            parent[t], t = root, parent[t]
        return root

    def union(self, a: Term, b: Term) -> None:
        self.add(a)
        self.add(b)
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self._parent[ra] = rb

    @property
    def carrier(self) -> frozenset[Term]:
        return frozenset(self._parent)

    def same_class(self, a: Term, b: Term) -> bool:
        return a in self._parent and b in self._parent and self.find(a) == self.find(b)

    def class_of(self, t: Term) -> frozenset[Term]:
        root = self.find(t)
        return frozenset(x for x in self._parent if self.find(x) == root)

    def classes(self) -> list[frozenset[Term]]:
        by_root: dict[Term, set[Term]] = {}
        for t in self._parent:
            by_root.setdefault(self.find(t), set()).add(t)
        return sorted((frozenset(c) for c in by_root.values()),
                      key=lambda c: min(c).sort_key())

    def as_sets(self) -> frozenset[frozenset[Term]]:
        return frozenset(self.classes())

    def copy(self) -> "TermPartition":
        p = TermPartition()
        p._parent = dict(self._parent)
        return p

    def __eq__(self, other) -> bool:
        if not isinstance(other, TermPartition):
            return NotImplemented
        return self.as_sets() == other.as_sets()

    def __repr__(self) -> str:
        cls = ", ".join("{" + ",".join(str(t) for t in sorted(c)) + "}" for c in self.classes())
        return "{" + cls + "}"


def join(p1: TermPartition, p2: TermPartition) -> TermPartition:
    """Union of non-disjoint classes until stability; carrier is the union."""
    out = p1.copy()
    for cls in p2.classes():
        cls = list(cls)
        for t in cls:
            out.add(t)
        for t in cls[1:]:
            out.union(cls[0], t)
    return out


def join_all(parts: Iterable[TermPartition]) -> TermPartition:
    out = TermPartition()
    for p in parts:
        out = join(out, p)
    return out


def is_admissible(p: TermPartition) -> bool:
    """No class holds two distinct constants."""
    return all(sum(1 for t in c if t.is_constant) <= 1 for c in p.classes())


def finer_than(p1: TermPartition, p2: TermPartition) -> bool:
    """Every class of p1 is included in a class of p2 (same carrier)."""
    if p1.carrier != p2.carrier:
        raise ValueError("finer_than requires identical carriers")
    return all(
        all(p2.same_class(next(iter(c)), t) for t in c) for c in p1.classes()
    )


def associated_substitution(p: TermPartition) -> Substitution:
    """Map each term to its class minimum (constants win by the term order)."""
    if not is_admissible(p):
        raise ValueError("partition is not admissible")
    sub: Substitution = {}
    for cls in p.classes():
        rep = min(cls)
        for t in cls:
            if t != rep and t.is_variable:
                sub[t] = rep
    return sub
