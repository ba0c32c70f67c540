"""Shared helpers: random instance generators and data-file access."""
from __future__ import annotations

import random
from pathlib import Path

import pytest

from ucqrewrite import Atom, ConjunctiveQuery, ExistentialRule, atom, const, cq, rule, var

DATA = Path(__file__).parent / "data"


def load(name: str) -> str:
    return (DATA / name).read_text()


def random_linear_rules(
    rng: random.Random,
    n_rules: int,
    n_preds: int = 5,
    max_arity: int = 3,
) -> list[ExistentialRule]:
    """Linear rules (one body atom, one head atom) over a small signature."""
    arity = {f"p{i}": rng.randint(1, max_arity) for i in range(n_preds)}
    names = sorted(arity)
    rules = []
    for i in range(n_rules):
        bp, hp = rng.choice(names), rng.choice(names)
        body_vars = [var(f"X{j}") for j in range(arity[bp])]
        # each head position is a body variable or a fresh existential
        head_args = []
        for j in range(arity[hp]):
            if body_vars and rng.random() < 0.7:
                head_args.append(rng.choice(body_vars))
            else:
                head_args.append(var(f"Y{j}"))
        rules.append(rule(f"r{i}", [Atom(bp, tuple(body_vars))],
                          [Atom(hp, tuple(head_args))]))
    return rules


def random_query(
    rng: random.Random,
    rules: list[ExistentialRule],
    max_atoms: int = 5,
    n_vars: int = 4,
) -> ConjunctiveQuery:
    arity = {}
    for r in rules:
        for a in list(r.body) + list(r.head):
            arity.setdefault(a.predicate, a.arity)
    names = sorted(arity)
    pool = [var(f"U{i}") for i in range(n_vars)]
    atoms = set()
    for _ in range(rng.randint(1, max_atoms)):
        p = rng.choice(names)
        atoms.add(Atom(p, tuple(rng.choice(pool) for _ in range(arity[p]))))
    return ConjunctiveQuery(frozenset(atoms), ())


def random_facts(
    rng: random.Random,
    rules: list[ExistentialRule],
    max_atoms: int = 12,
    n_consts: int = 5,
) -> frozenset[Atom]:
    arity = {}
    for r in rules:
        for a in list(r.body) + list(r.head):
            arity.setdefault(a.predicate, a.arity)
    names = sorted(arity)
    consts = [const(f"a{i}") for i in range(n_consts)]
    atoms = set()
    for _ in range(rng.randint(1, max_atoms)):
        p = rng.choice(names)
        atoms.add(Atom(p, tuple(rng.choice(consts) for _ in range(arity[p]))))
    return frozenset(atoms)
