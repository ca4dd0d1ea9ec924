import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from _support import random_query, random_triples
from mixstore.planner import (EncodedPattern, NodeKind, NodeSpec, Strategy, UnknownPredicate, build_join_tree,
                              explain, group_patterns, plan, score_node)
from mixstore.sparql import TriplePattern, Variable, parse_query
from mixstore.stats import PredicateStats, Stats, compute_stats
from mixstore.terms import Term

X, Y, Z, W, V = (Variable(n) for n in "xyzwv")


def enc(s, p: int, o) -> EncodedPattern:
    term = lambda v: v if isinstance(v, Variable) else Term.iri(f"http://ex/c{v}")
    return EncodedPattern(s, p, o, TriplePattern(term(s), Term.iri(f"http://ex/p{p}"), term(o)))


def stats(**counts) -> Stats:
    # counts: p<id>=(T, D) or T
    out = {}
    for key, v in counts.items():
        t, d = v if isinstance(v, tuple) else (v, max(1, v // 2))
        out[int(key[1:])] = PredicateStats(t, d)
    return Stats(out)


def vp(p):
    return NodeSpec(NodeKind.VP, (p,))


# ---------------------------------------------------------------- grouping


def test_group_star_plus_single():
    pats = [enc(X, 1, Y), enc(X, 2, Z), enc(Y, 4, V), enc(X, 3, W)]
    nodes = group_patterns(pats, Strategy.MIXED)
    assert [n.kind for n in nodes] == [NodeKind.PT, NodeKind.VP]
    assert nodes[0].patterns == (pats[0], pats[1], pats[3])
    assert nodes[1].patterns == (pats[2],)


def test_group_vp_only():
    pats = [enc(X, 1, Y), enc(X, 2, Z), enc(Y, 4, V)]
    nodes = group_patterns(pats, Strategy.VP_ONLY)
    assert [n.kind for n in nodes] == [NodeKind.VP] * 3


def test_group_single_pattern():
    nodes = group_patterns([enc(X, 1, Y)], Strategy.MIXED)
    assert len(nodes) == 1 and nodes[0].kind is NodeKind.VP


def test_group_constant_subject():
    pats = [enc(7, 1, Y), enc(7, 2, Z), enc(X, 2, Z)]
    nodes = group_patterns(pats, Strategy.MIXED)
    assert [n.kind for n in nodes] == [NodeKind.PT, NodeKind.VP]


def test_nodespec_invariants():
    with pytest.raises(ValueError):
        NodeSpec(NodeKind.PT, (enc(X, 1, Y), enc(Y, 2, Z)))
    with pytest.raises(ValueError):
        NodeSpec(NodeKind.VP, (enc(X, 1, Y), enc(X, 2, Z)))
    assert NodeSpec(NodeKind.PT, (enc(X, 1, Y), enc(X, 2, 5))).out_vars == {X, Y}


# ----------------------------------------------------------------- scoring


def test_score_all_variable_vp():
    assert score_node(vp(enc(X, 1, Y)), stats(p1=1000)) == 1000


@pytest.mark.parametrize("t", [2, 50, 10_000])
def test_score_constant_object(t):
    assert score_node(vp(enc(X, 1, 9)), stats(p1=t)) == 1


def test_score_constant_subject_uses_fanout():
    assert score_node(vp(enc(9, 1, Y)), stats(p1=(1000, 10))) == 100
    assert score_node(vp(enc(9, 1, Y)), stats(p1=(10, 10))) == 1


def test_score_pt_with_literal():
    spec = NodeSpec(NodeKind.PT, (enc(X, 1, Y), enc(X, 2, 9)))
    assert score_node(spec, stats(p1=100, p2=400)) == pytest.approx(50)


def test_score_pt_without_literal():
    spec = NodeSpec(NodeKind.PT, (enc(X, 1, Y), enc(X, 2, Z)))
    assert score_node(spec, stats(p1=100, p2=400)) == 500


def test_unknown_predicate():
    with pytest.raises(UnknownPredicate):
        score_node(vp(enc(X, 5, Y)), stats(p1=3))


@settings(max_examples=50)
@given(st.integers(1, 10**6), st.integers(1, 10**6))
def test_score_monotone_in_tuple_count(tp, tq):
    s = stats(p1=tp, p2=tq)
    a, b = score_node(vp(enc(X, 1, Y)), s), score_node(vp(enc(X, 2, Y)), s)
    if tp < tq:
        assert a < b


# -------------------------------------------------------------- join tree


def _order(tree):
    return [n.spec.patterns[0].predicate for n in tree.order()]


def test_ascending_score_order_when_connected():
    nodes = [vp(enc(X, 3, Z)), vp(enc(X, 1, 9)), vp(enc(X, 2, Y))]
    tree = build_join_tree(nodes, stats(p1=50, p2=10, p3=1000))
    assert _order(tree) == [1, 2, 3]
    assert tree.root.spec.patterns[0].predicate == 3
    assert tree.num_joins == 2


def test_single_node_tree():
    tree = build_join_tree([vp(enc(X, 1, Y))], stats(p1=4))
    assert tree.order() == [tree.root]
    assert tree.num_joins == 0
    assert not tree.root.children


def test_connectivity_overrides_score():
    a, b, c = vp(enc(X, 1, Y)), vp(enc(Z, 2, W)), vp(enc(Y, 3, Z))
    tree = build_join_tree([b, c, a], stats(p1=1, p2=10, p3=1000))
    assert _order(tree) == [1, 3, 2]
    assert not any(n.cartesian for n in tree.order())


def test_ties_break_on_predicate_id():
    nodes = [vp(enc(X, 5, Y)), vp(enc(X, 2, Z)), vp(enc(X, 9, W))]
    tree = build_join_tree(nodes, stats(p5=7, p2=7, p9=7))
    assert _order(tree) == [2, 5, 9]


def test_disconnected_is_flagged_cartesian():
    tree = build_join_tree([vp(enc(X, 1, Y)), vp(enc(Z, 2, W))], stats(p1=3, p2=4))
    assert tree.root.cartesian
    assert "CARTESIAN" in explain(tree)


# ------------------------------------------------------------------ explain


def test_explain_single_node():
    tree = build_join_tree([vp(enc(X, 1, Y))], stats(p1=1000))
    assert explain(tree) == "VP score=1000 {?x <http://ex/p1> ?y}\n"


def test_explain_pt_root_with_vp_chain():
    pats = [enc(X, 1, Y), enc(X, 2, Z), enc(X, 3, W), enc(Y, 4, V), enc(V, 5, W)]
    s = stats(p1=500, p2=600, p3=700, p4=20, p5=30)
    tree = build_join_tree(group_patterns(pats, Strategy.MIXED), s)
    lines = explain(tree).splitlines()
    assert lines[0].startswith("PT score=1800 ")
    assert all(line.startswith("  " * i + "VP ") for i, line in enumerate(lines[1:], 1))
    assert "join=" in lines[0]


def test_explain_is_deterministic():
    rng = random.Random(4)
    triples, d = random_triples(rng, 200)
    st_ = compute_stats(triples)
    for _ in range(20):
        q = random_query(rng, triples, d, 5)
        assert explain(plan(q, d, st_)) == explain(plan(q, d, st_))


# --------------------------------------------------------------- properties


def _pattern_bag(tree):
    return Counter(tp.source for n in tree.order() for tp in n.spec.patterns)


@settings(max_examples=60)
@given(st.integers(0, 100_000), st.integers(1, 6), st.sampled_from(list(Strategy)))
def test_coverage(seed, n, strategy):
    rng = random.Random(seed)
    triples, d = random_triples(rng, 120)
    q = random_query(rng, triples, d, n)
    tree = plan(q, d, compute_stats(triples), strategy)
    assert _pattern_bag(tree) == Counter(q.patterns)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_star_collapse(n):
    pats = [enc(X, i, Variable(f"o{i}")) for i in range(1, n + 1)]
    s = stats(**{f"p{i}": 10 * i for i in range(1, n + 1)})
    mixed = build_join_tree(group_patterns(pats, Strategy.MIXED), s)
    vp_only = build_join_tree(group_patterns(pats, Strategy.VP_ONLY), s)
    assert mixed.num_joins == 0 and len(mixed.order()) == 1
    assert vp_only.num_joins == n - 1


@settings(max_examples=80)
@given(st.lists(st.tuples(st.integers(2, 10_000), st.booleans()), min_size=1, max_size=7))
def test_literal_first_and_root_max_on_connected_queries(spec):
    # all patterns share ?x, so every pair of nodes is connected
    pats = [enc(X, i, 100 + i if const else Variable(f"o{i}")) for i, (_, const) in enumerate(spec, 1)]
    s = stats(**{f"p{i}": t for i, (t, _) in enumerate(spec, 1)})
    tree = build_join_tree(group_patterns(pats, Strategy.VP_ONLY), s)
    flags = [n.spec.has_constant_object for n in tree.order()]
    assert flags == sorted(flags, reverse=True)
    assert tree.root.score == max(n.score for n in tree.order())


def test_plan_short_circuits_unknown_predicate():
    q = parse_query("SELECT ?x { ?x <http://nowhere/p> ?y }")
    triples, d = random_triples(random.Random(0), 10)
    tree = plan(q, d, compute_stats(triples))
    assert tree.root is None
    assert tree.unknown_predicate == "http://nowhere/p"
    assert explain(tree).startswith("EMPTY")
