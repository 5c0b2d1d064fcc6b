"""Automaton contracts: accumulating explicit solution sets bottom-up through
the fitting pairs must reproduce the oracle's feasible families exactly, with
no duplicate solution at any (node, state)."""
import random

import pytest

from twkbest.core import WeightedGraph, edge, vertex
from twkbest.treedec import balance, heuristic_decomposition
from twkbest.algebra import build_parse_tree
from twkbest.problems import (
    BUILTIN_PROBLEMS,
    SpanningTreeAutomaton,
    builtin,
    state_key,
)
from twkbest import oracle


def make_graph(n, edges, directed=False):
    return WeightedGraph(
        n=n, m=len(edges), directed=directed, edges=tuple(edges),
        weights={edge(i): 1 for i in range(1, len(edges) + 1)},
    )


def accumulate(tree, automaton):
    """Explicit per-(node, state) solution sets; asserts no duplicates."""
    acc = {}
    for pnode in tree.nodes:
        if pnode.is_leaf():
            table = {q: list(sols) for q, sols in automaton.leaf_table(pnode).items()}
        else:
            sig = automaton.signature(pnode)
            a1 = acc[pnode.children[0].nid]
            a2 = acc[pnode.children[1].nid]
            table = {}
            for q1 in a1:
                for q2 in a2:
                    q = automaton.delta(sig, q1, q2)
                    if q is None:
                        continue
                    table.setdefault(q, []).extend(
                        s1 | s2 for s1 in a1[q1] for s2 in a2[q2])
        for q, sols in table.items():
            assert len(sols) == len(set(sols)), \
                f"duplicate solution at node {pnode.nid} state {q!r}"
        acc[pnode.nid] = table
    return acc


def check_against_oracle(g, problem, s=None, t=None):
    tree = build_parse_tree(balance(heuristic_decomposition(g), g), g)
    automaton = builtin(problem, g, s, t)
    acc = accumulate(tree, automaton)
    got = set(acc[tree.root.nid].get(automaton.root_state(), []))
    pred, kind = oracle.predicate_for(problem, s, t)
    want = {sol.sets[0] for _, sol in oracle.enumerate_sorted(g, pred, kind)}
    assert got == want


K3 = make_graph(3, [(1, 2), (2, 3), (3, 1)])
P3 = make_graph(3, [(1, 2), (2, 3)])


def test_simple_path_k3_feasible_sets():
    check_against_oracle(K3, "simple-path", 1, 3)


def test_spanning_tree_k3():
    check_against_oracle(K3, "spanning-tree")


def test_perfect_matching_p3_infeasible():
    tree = build_parse_tree(balance(heuristic_decomposition(P3), P3), P3)
    a = builtin("perfect-matching", P3)
    acc = accumulate(tree, a)
    assert acc[tree.root.nid].get(a.root_state(), []) == []


def test_vertex_cover_triangle():
    check_against_oracle(K3, "vertex-cover")


def test_directed_path():
    g = make_graph(3, [(1, 2), (2, 3), (3, 1)], directed=True)
    check_against_oracle(g, "simple-path", 1, 3)
    check_against_oracle(g, "simple-path", 3, 1)


def test_terminal_validation():
    with pytest.raises(ValueError):
        builtin("simple-path", K3, 1, 1)
    with pytest.raises(ValueError):
        builtin("simple-path", K3, 1, 9)
    with pytest.raises(ValueError):
        builtin("simple-path", K3)
    with pytest.raises(ValueError):
        builtin("tour", K3)


def test_leaf_table_rejects_inner_nodes():
    tree = build_parse_tree(balance(heuristic_decomposition(K3), K3), K3)
    a = builtin("spanning-tree", K3)
    inner = next(n for n in tree.nodes if not n.is_leaf())
    with pytest.raises(ValueError):
        a.leaf_table(inner)
    leaf = next(n for n in tree.nodes if n.is_leaf())
    with pytest.raises(ValueError):
        a.signature(leaf)


def test_spanning_tree_fuse_merges_blocks():
    a = SpanningTreeAutomaton()
    # fusing the two sources of a 2-source fragment: states whose blocks are
    # separate merge into one; same-block states are rejected (cycle)
    sig = ("fuse", 0, 1)
    assert a.delta(sig, ((0,), (1,)), ((0,),)) == ((0,),)
    assert a.delta(sig, ((0, 1),), ((0,),)) is None
    pairs = a.transitions(sig, ((0,),), 2, 1)
    assert (((0,), (1,)), ((0,),)) in pairs
    assert all(q1 != ((0, 1),) for q1, _ in pairs)


def test_transitions_complete_and_deterministic():
    g = P3
    tree = build_parse_tree(balance(heuristic_decomposition(g), g), g)
    a = builtin("simple-path", g, 1, 3)
    node = next(n for n in tree.nodes if n.op[0] == "join")
    sig = a.signature(node)
    r1 = node.children[0].order
    r2 = node.children[1].order
    for q in a.states(r1 + r2):
        pairs = a.transitions(sig, q, r1, r2)
        assert pairs == sorted(pairs, key=lambda p: (state_key(p[0]), state_key(p[1])))
        for q1, q2 in pairs:
            assert a.delta(sig, q1, q2) == q


@pytest.mark.parametrize("problem", BUILTIN_PROBLEMS)
def test_small_graph_sweep(problem):
    rng = random.Random(hash(problem) & 0xFFFF)
    for _ in range(25):
        n = rng.randint(1, 5)
        m = rng.randint(0, 4)
        directed = rng.random() < 0.5
        g = make_graph(n, [(rng.randint(1, n), rng.randint(1, n))
                           for _ in range(m)], directed)
        if problem == "simple-path":
            if n < 2:
                continue
            s, t = rng.sample(range(1, n + 1), 2)
            check_against_oracle(g, problem, s, t)
        else:
            check_against_oracle(g, problem)
