"""Piece-unifiers: pieces, validity, the single-piece algorithm for
atomic-head rules, aggregation of compatible unifiers, and an exhaustive
oracle for general heads."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Optional

from .kb import (
    Atom,
    ConjunctiveQuery,
    ExistentialRule,
    FreshCounter,
    Term,
    freshen_rule,
    sorted_atoms,
    terms_of,
    vars_of,
)
from .homomorphism import Substitution, apply_to_atoms
from .partition import (
    TermPartition,
    associated_substitution,
    finer_than,
    is_admissible,
    join,
    join_all,
)


@dataclass(eq=False)
class PieceUnifier:
    """Unifies a query subset with a rule-head subset through a term partition."""

    q_part: frozenset[Atom]
    h_part: frozenset[Atom]
    partition: TermPartition
    rule: ExistentialRule

    def substitution(self) -> Substitution:
        return associated_substitution(self.partition)

    def cutpoints(self) -> frozenset[Term]:
        """Unified query variables not merged with an existential variable."""
        ex = self.rule.existentials
        out = set()
        for v in vars_of(self.q_part):
            if not any(t in ex for t in self.partition.class_of(v)):
                out.add(v)
        return frozenset(out)

    def __repr__(self) -> str:
        qp = ",".join(str(a) for a in sorted_atoms(self.q_part))
        hp = ",".join(str(a) for a in sorted_atoms(self.h_part))
        return f"PieceUnifier([{qp}], [{hp}], {self.partition})"


def separating_vars(q: ConjunctiveQuery, q_part: Iterable[Atom]) -> frozenset[Term]:
    q_part = frozenset(q_part)
    if not q_part <= q.atoms:
        raise ValueError("q_part must be a subset of the query")
    return vars_of(q_part) & vars_of(q.atoms - q_part)


def validate_piece_unifier(q: ConjunctiveQuery, mu: PieceUnifier) -> list[str]:
    """Return the list of violated piece-unifier conditions (empty if valid)."""
    problems = []
    if not mu.q_part or not mu.q_part <= q.atoms:
        problems.append("q_part must be a non-empty subset of the query")
    if not mu.h_part <= mu.rule.head:
        problems.append("h_part must be a subset of the rule head")
    if mu.partition.carrier != terms_of(mu.q_part) | terms_of(mu.h_part):
        problems.append("partition carrier must be terms(q_part) + terms(h_part)")
    if not is_admissible(mu.partition):
        problems.append("partition not admissible")
        return problems
    sep = vars_of(mu.q_part) & vars_of(q.atoms - mu.q_part)
    nonsep = vars_of(mu.q_part) - sep
    for cls in mu.partition.classes():
        existentials = cls & mu.rule.existentials
        if len(existentials) > 1 or (
            existentials and not all(t in nonsep for t in cls - existentials)
        ):
            problems.append(
                "class with an existential variable contains a term other than "
                "a non-separating query variable"
            )
            break
    u = associated_substitution(mu.partition)
    if apply_to_atoms(u, mu.h_part) != apply_to_atoms(u, mu.q_part):
        problems.append("u(h_part) != u(q_part)")
    return problems


def pieces(atoms: Iterable[Atom], cutpoint_set: Iterable[Term]) -> list[frozenset[Atom]]:
    """Connected components of atoms glued by variables outside cutpoint_set."""
    atoms = sorted_atoms(atoms)
    cut = frozenset(cutpoint_set)
    glue = [a.variables() - cut for a in atoms]
    n = len(atoms)
    comp = list(range(n))

    def root(i):
        while comp[i] != i:
            i = comp[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if glue[i] & glue[j]:
                ri, rj = root(i), root(j)
                if ri != rj:
                    comp[ri] = rj
    by_root: dict[int, set[Atom]] = {}
    for i, a in enumerate(atoms):
        by_root.setdefault(root(i), set()).add(a)
    return sorted((frozenset(c) for c in by_root.values()),
                  key=lambda c: min(a.sort_key() for a in c))


def partition_by_position(atoms: Iterable[Atom]) -> TermPartition:
    """Merge terms appearing at the same argument position of one predicate."""
    atoms = list(atoms)
    preds = {a.predicate for a in atoms}
    if len(preds) > 1:
        raise ValueError(f"mixed predicates: {sorted(preds)}")
    p = TermPartition()
    if not atoms:
        return p
    first = atoms[0]
    for t in first.args:
        p.add(t)
    for a in atoms[1:]:
        for i, t in enumerate(a.args):
            p.union(first.args[i], t)
    return p


def unifiable(q_atoms: Iterable[Atom], rule: ExistentialRule) -> bool:
    """Can q_atoms be unified with the (atomic) head, respecting existentials?"""
    head = rule.head_atom
    pp = partition_by_position(list(q_atoms) + [head])
    ex = rule.existentials
    fr = rule.frontier
    for cls in pp.classes():
        n_const = sum(1 for t in cls if t.is_constant)
        n_ex = len(cls & ex)
        if n_const > 1 or n_ex > 1:
            return False
        if n_ex and (n_const or cls & fr):
            return False
    return True


def sticky_variables(
    q: ConjunctiveQuery, q_atoms: Iterable[Atom], rule: ExistentialRule
) -> frozenset[Term]:
    """Separating variables landing in a class with an existential variable."""
    q_atoms = frozenset(q_atoms)
    sep = separating_vars(q, q_atoms)
    pp = partition_by_position(list(q_atoms) + [rule.head_atom])
    sticky = set()
    for cls in pp.classes():
        if cls & rule.existentials:
            sticky |= cls & sep
    return frozenset(sticky)


def single_piece_unifiers(q: ConjunctiveQuery, rule: ExistentialRule) -> list[PieceUnifier]:
    """All most general single-piece unifiers of q with an atomic-head rule.

    Grows a candidate piece by sticky-variable closure; accepted pieces are
    removed from the pool, a failed seed alone is removed.  The rule is
    assumed variable-disjoint from q.
    """
    if not rule.has_atomic_head:
        raise ValueError("single_piece_unifiers requires an atomic-head rule")
    head = rule.head_atom
    pool = {a for a in q.atoms if a.predicate == head.predicate and a.arity == head.arity}
    out = []
    while pool:
        seed = min(pool, key=Atom.sort_key)
        piece = {seed}
        while piece <= pool and unifiable(piece, rule):
            sticky = sticky_variables(q, piece, rule)
            if not sticky:
                break
            piece |= {a for a in q.atoms if a.variables() & sticky}
        if piece <= pool and unifiable(piece, rule):
            part = partition_by_position(sorted_atoms(piece) + [head])
            out.append(PieceUnifier(frozenset(piece), rule.head, part, rule))
            pool -= piece
        else:
            pool.discard(seed)
    return out


def aggregate_rules(rules: list[ExistentialRule]) -> ExistentialRule:
    """Conjoin variable-disjoint rules into one rule."""
    seen: set[Term] = set()
    for r in rules:
        rv = r.variables()
        if rv & seen:
            raise ValueError("aggregated rules must have disjoint variables")
        seen |= rv
    label = "+".join(r.label for r in rules)
    body = frozenset(a for r in rules for a in r.body)
    head = frozenset(a for r in rules for a in r.head)
    return ExistentialRule(label, body, head)


@dataclass(eq=False)
class AggregatedUnifier:
    """Compatible single-piece unifiers merged over an aggregated rule."""

    members: list[PieceUnifier]
    rule: ExistentialRule
    merged: PieceUnifier


def aggregate(members: list[PieceUnifier]) -> Optional[AggregatedUnifier]:
    """Merge compatible unifiers; None when parts overlap or the join breaks."""
    if not members:
        raise ValueError("aggregate needs at least one member")
    taken: set[Atom] = set()
    for m in members:
        if m.q_part & taken:
            return None
        taken |= m.q_part
    joined = join_all(m.partition for m in members)
    if not is_admissible(joined):
        return None
    agg_rule = aggregate_rules([m.rule for m in members])
    merged = PieceUnifier(
        frozenset(taken),
        frozenset(a for m in members for a in m.h_part),
        joined,
        agg_rule,
    )
    return AggregatedUnifier(list(members), agg_rule, merged)


def enumerate_aggregated(
    q: ConjunctiveQuery,
    rule: ExistentialRule,
    counter: Optional[FreshCounter] = None,
) -> list[AggregatedUnifier]:
    """Levelwise closure of compatible aggregations of single-piece unifiers.

    Each member set uses pairwise variable-disjoint freshened copies of the
    rule; member sets are deduplicated by their q_parts.
    """
    counter = counter or FreshCounter()
    first = freshen_rule(rule, counter)
    base = single_piece_unifiers(q, first)
    k = len(base)
    if k == 0:
        return []
    # one variable-disjoint rule copy per potential member slot
    slots: list[dict[frozenset[Atom], PieceUnifier]] = []
    slots.append({m.q_part: m for m in base})
    for _ in range(1, k):
        copy = freshen_rule(rule, counter)
        slots.append({m.q_part: m for m in single_piece_unifiers(q, copy)})

    parts = sorted((m.q_part for m in base), key=lambda p: min(a.sort_key() for a in p))

    def build(subset: tuple[frozenset[Atom], ...]) -> Optional[AggregatedUnifier]:
        members = [slots[i][p] for i, p in enumerate(subset)]
        return aggregate(members)

    out: list[AggregatedUnifier] = []
    level: list[tuple[frozenset[Atom], ...]] = []
    for p in parts:
        agg = build((p,))
        if agg is not None:
            out.append(agg)
            level.append((p,))
    while level:
        nxt: list[tuple[frozenset[Atom], ...]] = []
        seen: set[frozenset[frozenset[Atom]]] = set()
        for subset in level:
            for p in parts:
                if p in subset:
                    continue
                key = frozenset(subset) | {p}
                if key in seen:
                    continue
                seen.add(key)
                cand = tuple(sorted(subset + (p,),
                                    key=lambda x: min(a.sort_key() for a in x)))
                agg = build(cand)
                if agg is not None:
                    out.append(agg)
                    nxt.append(cand)
        level = nxt
    return out


def _emit_minimal(
    q: ConjunctiveQuery,
    q_part: frozenset[Atom],
    h_part: frozenset[Atom],
    rule: ExistentialRule,
    partitions: list[TermPartition],
) -> list[PieceUnifier]:
    valid = []
    seen = set()
    for p in partitions:
        key = p.as_sets()
        if key in seen:
            continue
        seen.add(key)
        mu = PieceUnifier(q_part, h_part, p, rule)
        if not validate_piece_unifier(q, mu):
            valid.append(mu)
    # keep partition-minimal (finest) unifiers only
    out = []
    for mu in valid:
        if not any(
            other is not mu and finer_than(other.partition, mu.partition)
            and other.partition != mu.partition
            for other in valid
        ):
            out.append(mu)
    return out


def general_piece_unifiers(
    q: ConjunctiveQuery,
    rule: ExistentialRule,
    max_query_atoms: int = 10,
    max_head_atoms: int = 4,
) -> list[PieceUnifier]:
    """Exhaustive enumeration of most general piece-unifiers (oracle-grade).

    Exponential by design; refuses inputs beyond the size caps.  For atomic
    heads the finest candidate partition per q_part is the positionwise one,
    so the enumeration collapses to subsets of the query.
    """
    if len(q.atoms) > max_query_atoms or len(rule.head) > max_head_atoms:
        raise ValueError("input beyond oracle size caps")

    out: list[PieceUnifier] = []
    if rule.has_atomic_head:
        head = rule.head_atom
        cands = [a for a in sorted_atoms(q.atoms)
                 if a.predicate == head.predicate and a.arity == head.arity]
        for mask in range(1, 1 << len(cands)):
            q_part = frozenset(a for i, a in enumerate(cands) if mask >> i & 1)
            try:
                pp = partition_by_position(sorted_atoms(q_part) + [head])
            except ValueError:
                continue
            out.extend(_emit_minimal(q, q_part, rule.head, rule, [pp]))
        return out

    head_atoms = sorted_atoms(rule.head)
    head_preds = {a.predicate for a in head_atoms}
    cands = [a for a in sorted_atoms(q.atoms) if a.predicate in head_preds]
    for qmask in range(1, 1 << len(cands)):
        q_sel = [a for i, a in enumerate(cands) if qmask >> i & 1]
        q_part = frozenset(q_sel)
        for hmask in range(1, 1 << len(head_atoms)):
            h_sel = [a for i, a in enumerate(head_atoms) if hmask >> i & 1]
            h_part = frozenset(h_sel)
            if {a.predicate for a in q_sel} != {a.predicate for a in h_sel}:
                continue
            f_choices = [[h for h in h_sel if h.predicate == a.predicate
                          and h.arity == a.arity] for a in q_sel]
            g_choices = [[a for a in q_sel if a.predicate == h.predicate
                          and a.arity == h.arity] for h in h_sel]
            if any(not c for c in f_choices) or any(not c for c in g_choices):
                continue
            partitions = []
            for f in product(*f_choices):
                for g in product(*g_choices):
                    p = TermPartition()
                    pairs = list(zip(q_sel, f)) + [(qa, ha) for ha, qa in zip(h_sel, g)]
                    for qa, ha in pairs:
                        for s, t in zip(qa.args, ha.args):
                            p.union(s, t)
                    partitions.append(p)
            out.extend(_emit_minimal(q, q_part, h_part, rule, partitions))
    return out
