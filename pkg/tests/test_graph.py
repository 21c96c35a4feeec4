from itertools import combinations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ngdep.graph import (
    GraphError,
    MixedGraph,
    SepsetMap,
    ancestors,
    apply_meek_rules,
    backdoor_common_ancestors,
    cpdag,
    d_separated,
    descendants,
    from_json_dict,
    has_directed_cycle,
    induced_subgraph,
    is_dmg,
    orient_v_structures,
    source_nodes,
    to_dot,
    to_json_dict,
    topological_order,
    undirected_components,
    v_structures,
    weakly_connected_components,
)
from oracles import (
    all_dags,
    bca_bf,
    colliders,
    d_separated_bf,
    descendants_bf,
    dsep_table_bf,
    is_dmg_bf,
    orientations,
)


@st.composite
def dags(draw, max_p=6):
    p = draw(st.integers(1, max_p))
    order = draw(st.permutations(range(p)))
    edges = [(order[a], order[b]) for a, b in combinations(range(p), 2) if draw(st.booleans())]
    return MixedGraph.from_edges(p, edges)


@st.composite
def chain_graphs(draw, max_p=6):
    """Random DAG with a random subset of its edges made undirected."""
    g = draw(dags(max_p))
    directed, undirected = [], []
    for a, b in sorted(g.directed):
        (undirected if draw(st.booleans()) else directed).append((a, b))
    return g.replace(directed=directed, undirected=undirected)


@st.composite
def patterns_with_knowledge(draw, max_p=6):
    """A DAG and its completed pattern with some extra edges directed as in the DAG."""
    g = draw(dags(max_p))
    pat = cpdag(g)
    extra = [
        (a, b) for a, b in sorted(g.directed)
        if (min(a, b), max(a, b)) in pat.undirected and draw(st.booleans())
    ]
    und = pat.undirected - {(min(a, b), max(a, b)) for a, b in extra}
    return g, pat.replace(directed=pat.directed | set(extra), undirected=und)


# ---------------------------------------------------------------------------
# construction


def test_graph_rejects_self_loops_and_double_edges():
    with pytest.raises(GraphError):
        MixedGraph.from_edges(2, [(0, 0)])
    with pytest.raises(GraphError):
        MixedGraph.from_edges(2, [(0, 1)], [(1, 0)])
    with pytest.raises(GraphError):
        MixedGraph.from_edges(2, [(0, 1), (1, 0)])
    with pytest.raises(GraphError):
        MixedGraph.from_edges(2, [(0, 5)])


def test_equality_ignores_names_and_order():
    a = MixedGraph.from_edges(3, [(0, 1), (1, 2)], names=["a", "b", "c"])
    b = MixedGraph.from_edges(3, [(1, 2), (0, 1)])
    assert a == b and hash(a) == hash(b)
    assert MixedGraph.from_edges(2, undirected=[(1, 0)]) == MixedGraph.from_edges(2, undirected=[(0, 1)])


def test_sepset_map_is_symmetric():
    m = SepsetMap({(3, 1): [2]})
    assert m[1, 3] == frozenset({2}) and (1, 3) in m and (3, 1) in m
    with pytest.raises(GraphError):
        m[0, 1] = [0]


# ---------------------------------------------------------------------------
# components and subgraphs


def test_weakly_connected_components_examples():
    g = MixedGraph.from_edges(4, undirected=[(0, 1), (2, 3)])
    assert weakly_connected_components(g) == [{0, 1}, {2, 3}]
    assert weakly_connected_components(MixedGraph.from_edges(1)) == [{0}]
    mixed = MixedGraph.from_edges(5, [(0, 1), (4, 2)], [(1, 2)])
    assert weakly_connected_components(mixed) == [{0, 1, 2, 4}, {3}]


def test_triangle_left_after_removing_the_gaussian_root():
    dsep = MixedGraph.complete_undirected(4)
    sub = induced_subgraph(dsep, {1, 2, 3})
    assert sub.vertices == (1, 2, 3)
    assert sub.undirected == {(1, 2), (1, 3), (2, 3)} and not sub.directed
    assert weakly_connected_components(sub) == [{1, 2, 3}]


def test_induced_subgraph_edge_cases():
    g = MixedGraph.from_edges(3, [(0, 1)], [(1, 2)])
    assert induced_subgraph(g, {0, 1, 2}) == g
    empty = induced_subgraph(g, set())
    assert empty.p == 0 and not empty.directed and not empty.undirected
    with pytest.raises(GraphError):
        induced_subgraph(g, {7})


def test_undirected_components_skip_singletons():
    g = MixedGraph.from_edges(5, [(0, 1)], [(1, 2), (3, 4)])
    assert undirected_components(g) == [{1, 2}, {3, 4}]


# ---------------------------------------------------------------------------
# cycles and ancestry


def test_directed_cycle_examples():
    assert has_directed_cycle(MixedGraph.from_edges(3, [(0, 1), (1, 2), (2, 0)]))
    assert not has_directed_cycle(MixedGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)]))
    assert not has_directed_cycle(MixedGraph.complete_undirected(3))
    assert topological_order(MixedGraph.from_edges(3, [(0, 1), (1, 2), (2, 0)])) is None


@given(dags())
def test_descendants_match_brute_force(g):
    for v in g.vertices:
        assert descendants(g, v) == descendants_bf(g, v)
        assert all(v in descendants(g, a) for a in ancestors(g, v))


@given(dags())
def test_topological_order_respects_edges(g):
    order = topological_order(g)
    pos = {v: k for k, v in enumerate(order)}
    assert all(pos[a] < pos[b] for a, b in g.directed)


def test_source_nodes_examples(four_var_model):
    assert source_nodes(four_var_model.dag) == {0}
    assert source_nodes(MixedGraph.from_edges(3, [(0, 2), (1, 2)])) == {0, 1}
    assert source_nodes(MixedGraph.from_edges(1)) == {0}


# ---------------------------------------------------------------------------
# d-separation


def test_d_separation_examples():
    chain = MixedGraph.from_edges(3, [(0, 1), (1, 2)])
    assert d_separated(chain, 0, 2, {1})
    assert not d_separated(chain, 0, 2)
    collider = MixedGraph.from_edges(3, [(0, 2), (1, 2)])
    assert d_separated(collider, 0, 1)
    assert not d_separated(collider, 0, 1, {2})


def test_siblings_of_the_hub_are_separated_by_it():
    # x4 -> x1 -> {x2, x3, x5}, x2 -> x3
    g = MixedGraph.from_edges(5, [(0, 1), (0, 2), (1, 2), (3, 0), (0, 4)])
    assert d_separated(g, 3, 4, {0})
    assert d_separated_bf(g, 3, 4, {0})
    assert not d_separated(g, 3, 4)


def test_d_separation_input_errors():
    g = MixedGraph.from_edges(3, [(0, 1), (1, 2)])
    with pytest.raises(GraphError):
        d_separated(g, 0, 0)
    with pytest.raises(GraphError):
        d_separated(g, 0, 2, {0})
    with pytest.raises(GraphError):
        d_separated(MixedGraph.from_edges(2, undirected=[(0, 1)]), 0, 1)
    with pytest.raises(GraphError):
        d_separated(g, 0, 9)


@pytest.mark.parametrize("p", [2, 3, 4, 5])
def test_d_separation_agrees_with_path_enumeration_on_every_dag(p):
    for g in all_dags(p):
        for (i, j, S), sep in dsep_table_bf(g).items():
            assert d_separated(g, i, j, S) == sep, (g, i, j, S)


# ---------------------------------------------------------------------------
# v-structures and the Meek rules


def test_orient_v_structures_uses_sepsets():
    skel = MixedGraph.from_edges(3, undirected=[(0, 2), (1, 2)])
    g = orient_v_structures(skel, {(0, 1): ()})
    assert g.directed == {(0, 2), (1, 2)} and not g.undirected
    g = orient_v_structures(skel, {(0, 1): (2,)})
    assert g == skel
    with pytest.raises(GraphError):
        orient_v_structures(skel, {})


def test_orient_v_structures_keeps_first_orientation_on_conflict():
    # path 0 - 1 - 2 - 3 where both (0, 2) and (1, 3) claim a collider
    skel = MixedGraph.from_edges(4, undirected=[(0, 1), (1, 2), (2, 3)])
    g = orient_v_structures(skel, {(0, 2): (), (1, 3): (), (0, 3): ()})
    assert (0, 1) in g.directed and (2, 1) in g.directed
    assert (2, 3) not in g.directed and (3, 2) in g.directed


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_cpdag_orients_exactly_the_invariant_edges(p):
    for dag in all_dags(p):
        pattern = cpdag(dag)
        members = [
            d for d in orientations(dag.skeleton())
            if colliders(d) == colliders(dag)
        ]
        shared = set.intersection(*(set(d.directed) for d in members))
        assert pattern.directed == shared, dag
        assert pattern.skeleton_edges() == dag.skeleton_edges()


@given(patterns_with_knowledge())
def test_meek_closure_is_monotone_and_idempotent(case):
    dag, g = case
    closed = apply_meek_rules(g)
    assert closed.directed <= dag.directed
    assert g.directed <= closed.directed
    assert closed.undirected <= g.undirected
    assert closed.skeleton_edges() == g.skeleton_edges()
    assert apply_meek_rules(closed) == closed


def test_meek_rule_four_needs_nonadjacent_ends():
    # x - k -> l -> y with k adjacent to y must not force x -> y
    x, k, l, y = 0, 1, 2, 3
    g = MixedGraph.from_edges(
        4, [(k, l), (l, y), (k, y)], [(x, k), (x, l), (x, y)]
    )
    assert pair_state(apply_meek_rules(g), x, y) == "undirected"


def pair_state(g, a, b):
    if (a, b) in g.directed:
        return "forward"
    if (b, a) in g.directed:
        return "backward"
    return "undirected" if (min(a, b), max(a, b)) in g.undirected else "absent"


def test_meek_rejects_cyclic_input():
    with pytest.raises(GraphError):
        apply_meek_rules(MixedGraph.from_edges(3, [(0, 1), (1, 2), (2, 0)]))


# ---------------------------------------------------------------------------
# backdoor common ancestors


def test_backdoor_common_ancestor_examples(four_var_model):
    fork = MixedGraph.from_edges(3, [(2, 0), (2, 1)])
    assert backdoor_common_ancestors(fork, 0, 1) == {2}
    chain = MixedGraph.from_edges(3, [(2, 0), (0, 1)])
    assert backdoor_common_ancestors(chain, 0, 1) == set()
    sub = induced_subgraph(four_var_model.dag, {1, 2, 3})
    assert backdoor_common_ancestors(sub, 2, 3) == {1}


@given(chain_graphs(max_p=6))
def test_backdoor_common_ancestors_match_path_enumeration(g):
    for i, j in combinations(g.vertices, 2):
        got = backdoor_common_ancestors(g, i, j)
        assert got == bca_bf(g, i, j)
        assert got == backdoor_common_ancestors(g, j, i)


# ---------------------------------------------------------------------------
# directed moral graphs


def test_is_dmg_examples():
    assert is_dmg(MixedGraph.from_edges(2, [(0, 1)]))
    assert not is_dmg(MixedGraph.from_edges(3, [(0, 2), (1, 2)]))
    complete = MixedGraph.from_edges(4, [(a, b) for a, b in combinations(range(4), 2)])
    assert is_dmg(complete)
    with pytest.raises(GraphError):
        is_dmg(MixedGraph.from_edges(3, [(0, 1)]))


@pytest.mark.parametrize("p", [2, 3, 4])
def test_is_dmg_matches_definition(p):
    for g in all_dags(p):
        if len(weakly_connected_components(g)) == 1:
            assert is_dmg(g) == is_dmg_bf(g)
            assert is_dmg(g) == (not v_structures(g))


# ---------------------------------------------------------------------------
# serialisation


@given(chain_graphs())
def test_json_round_trip(g):
    named = MixedGraph(g.vertices, g.directed, g.undirected, tuple(f"v{k}" for k in g.vertices))
    back = from_json_dict(to_json_dict(named))
    assert back == named and back.names == named.names


def test_json_rejects_unknown_node():
    with pytest.raises(GraphError):
        from_json_dict({"nodes": ["a", "b"], "directed": [["a", "c"]]})
    with pytest.raises(GraphError):
        from_json_dict({"directed": []})


def test_dot_marks_undirected_edges():
    g = MixedGraph.from_edges(3, [(0, 1)], [(1, 2)])
    text = to_dot(g)
    assert '"x1" -> "x2";' in text
    assert '"x2" -> "x3" [dir=none];' in text
