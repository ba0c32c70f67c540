"""One-step rewriting, the breadth-first loop, guards, and saturation."""
import random

import pytest

from ucqrewrite import (
    ConjunctiveQuery,
    Limits,
    atom,
    canonicalize,
    core,
    cq,
    equivalent,
    general_piece_unifiers,
    make_operator,
    more_general,
    rewrite,
    rule,
    saturate,
    var,
)
from ucqrewrite.kb import FreshCounter, freshen_rule
from ucqrewrite.rewriting import InvariantViolation, beta
from conftest import random_linear_rules, random_query

x, y, z, t, u, v, w = (var(n) for n in "xyztuvw")


def covers_of(res):
    return {canonicalize(q) for q in res.cover}


def test_beta_on_glued_pair():
    r = rule("r", [atom("q", x)], [atom("p", x, y)])
    q = cq(atom("p", u, v), atom("p", w, v), atom("r", u, w))
    (mu,) = [m for m in general_piece_unifiers(q, r) if len(m.q_part) == 2]
    got = beta(q, r, mu)
    want = canonicalize(cq(atom("q", x), atom("r", x, x)))
    assert got == want


def test_beta_rejects_invalid_unifier():
    r = rule("r", [atom("q", x)], [atom("p", x, y)])
    q = cq(atom("p", u, v), atom("p", v, t))
    mus = general_piece_unifiers(q, r)
    # a unifier of p(u,v) alone is invalid here (v meets the existential)
    from ucqrewrite import PieceUnifier, TermPartition

    bad = PieceUnifier(
        frozenset({atom("p", u, v)}),
        frozenset({atom("p", x, y)}),
        TermPartition([{u, x}, {v, y}]),
        r,
    )
    with pytest.raises(ValueError):
        beta(q, r, bad)
    assert len(mus) == 1  # only the tail atom unifies


def test_two_rule_loop_terminates_with_two_element_cover():
    r1 = rule("r1", [atom("t", x), atom("p", x, y)], [atom("r", y)])
    r2 = rule("r2", [atom("r", x), atom("p", x, y)], [atom("t", y)])
    q = cq(atom("t", u))
    for kind in ("full-piece", "single-piece", "aggregated"):
        res = rewrite(q, [r1, r2], make_operator(kind))
        assert res.terminated
        assert covers_of(res) == {
            canonicalize(cq(atom("t", u))),
            canonicalize(cq(atom("r", x), atom("p", x, y))),
        }


def test_empty_rule_set_returns_query_at_depth_zero():
    q = cq(atom("p", u, v))
    res = rewrite(q, [], make_operator("aggregated"))
    assert res.terminated and res.depth_reached == 0
    assert covers_of(res) == {canonicalize(q)}


def divergent_instance():
    """Transitive closure with answer variables: no finite cover exists."""
    from ucqrewrite import attach_answer_atom

    r1 = rule("r1", [atom("e", x, y)], [atom("t", x, y)])
    r2 = rule("r2", [atom("e", x, y), atom("t", y, z)], [atom("t", x, z)])
    q = attach_answer_atom(cq(atom("t", u, v), answer_vars=(u, v)))
    return q, [r1, r2]


def test_max_depth_guard():
    q, rules = divergent_instance()
    res = rewrite(q, rules, make_operator("aggregated"),
                  Limits(max_depth=2, max_generated=None, timeout=None))
    assert not res.terminated
    assert res.depth_reached <= 2
    # depth 0 means: report the processed input without exploring
    res0 = rewrite(q, rules, make_operator("aggregated"),
                   Limits(max_depth=0))
    assert not res0.terminated and res0.depth_reached == 0


def test_max_generated_guard_fires_on_divergent_instance():
    q, rules = divergent_instance()
    res = rewrite(q, rules, make_operator("aggregated"),
                  Limits(max_generated=20, timeout=None))
    assert not res.terminated
    assert res.generated_count > 20


def test_timeout_guard():
    q, rules = divergent_instance()
    res = rewrite(q, rules, make_operator("aggregated"),
                  Limits(max_generated=None, timeout=0.0))
    assert not res.terminated


def test_reflexive_specialization_needs_multi_piece():
    r = rule("r", [atom("r", x, x)], [atom("p", x, x)])
    q = cq(atom("p", y, z), atom("p", z, y))
    full = rewrite(q, [r], make_operator("full-piece"))
    sp = rewrite(q, [r], make_operator("single-piece"))
    target = canonicalize(cq(atom("r", x, x)))
    assert target in covers_of(full)
    assert target not in covers_of(sp)


def test_debug_invariants_clean_on_terminating_instance():
    r1 = rule("r1", [atom("t", x), atom("p", x, y)], [atom("r", y)])
    r2 = rule("r2", [atom("r", x), atom("p", x, y)], [atom("t", y)])
    rewrite(cq(atom("t", u)), [r1, r2], make_operator("aggregated"),
            debug_invariants=True)


def test_debug_invariants_detects_bad_operator():
    # an operator that "forgets" rewritings of explored queries after step one
    r = rule("r", [atom("q", x)], [atom("p", x)])
    calls = []

    def flaky(q, rules):
        calls.append(q)
        if len(calls) == 1:
            return []
        from ucqrewrite.rewriting import make_operator as mk
        return mk("aggregated")(q, rules)

    from ucqrewrite.rewriting import RewritingOperator, _check_invariants

    q0 = canonicalize(cq(atom("p", u)))
    op = RewritingOperator("flaky", flaky)
    qf = {q0}
    with pytest.raises(InvariantViolation):
        # q0 explored but its rewriting q(x) is not covered
        _check_invariants(qf, set(), make_operator("aggregated"), [r],
                          lambda q: canonicalize(core(q)))


def test_saturate_reaches_all_depths():
    r1 = rule("r1", [atom("t", x), atom("p", x, y)], [atom("r", y)])
    r2 = rule("r2", [atom("r", x), atom("p", x, y)], [atom("t", y)])
    q = cq(atom("t", u))
    s0 = saturate(q, [r1, r2], make_operator("single-piece"), 0)
    s2 = saturate(q, [r1, r2], make_operator("single-piece"), 2)
    assert len(s0) == 1
    assert len(s2) > len(s0)
    assert s0 <= s2


def test_operator_determinism():
    rng = random.Random(3)
    rules = random_linear_rules(rng, 5)
    q = random_query(rng, rules)
    results = [
        sorted(covers_of(rewrite(q, rules, make_operator("aggregated"),
                                 Limits(max_generated=3000, timeout=10))),
               key=ConjunctiveQuery.sort_key)
        for _ in range(3)
    ]
    assert results[0] == results[1] == results[2]


def test_full_and_aggregated_equivalent_covers_on_random_instances():
    rng = random.Random(5)
    checked = 0
    for _ in range(15):
        rules = random_linear_rules(rng, rng.randint(1, 4), n_preds=3, max_arity=2)
        q = random_query(rng, rules, max_atoms=3, n_vars=3)
        ra = rewrite(q, rules, make_operator("aggregated"),
                     Limits(max_generated=2000, timeout=10))
        rf = rewrite(q, rules, make_operator("full-piece"),
                     Limits(max_generated=2000, timeout=10))
        if not (ra.terminated and rf.terminated):
            continue
        checked += 1
        assert len(ra.cover) == len(rf.cover)
        for qa in ra.cover:
            assert any(equivalent(qa, qf) for qf in rf.cover)
    assert checked >= 5
