import random
import re

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cwerank.errors import CycleDetected, RejectedEdgeWarning
from cwerank.graph import (
    EdgeKind,
    UnifiedGraph,
    augment_direct_edges,
    augment_indirect_edges,
    build_base_view,
    build_composite_dag,
    build_unified_graph,
    export_dot,
    indirect_pairs,
    topological_order,
)

from .helpers import make_catalog


# ------------------------------------------------------------------ fixture counts

def test_fixture_base_view(catalog):
    base = build_base_view(catalog)
    assert len(base.nodes) == 16
    assert len(base.edges) == 11
    assert all(p.kind is EdgeKind.BASE for p in base.edges.values())


def test_fixture_direct_edges(catalog):
    dag = augment_direct_edges(build_base_view(catalog), catalog)
    direct = {e: p.label for e, p in dag.edges.items() if p.kind is EdgeKind.DIRECT}
    assert direct == {(190, 20): "direct:1000", (74, 20): "direct:1000", (22, 20): "direct:699"}


def test_fixture_unified_graph(catalog):
    unified = build_unified_graph(catalog)
    assert (len(unified.nodes), len(unified.edges)) == (21, 25)


def test_fixture_indirect_edges(catalog, dag):
    indirect = {e for e, p in dag.edges.items() if p.kind is EdgeKind.INDIRECT}
    assert indirect == {(787, 664), (125, 664), (125, 20), (352, 20), (119, 664)}


def test_fixture_composite_partition(dag):
    counts = dag.edge_counts()
    assert len(dag.nodes) == 16
    assert len(dag.edges) == counts[EdgeKind.BASE] + counts[EdgeKind.DIRECT] + counts[EdgeKind.INDIRECT] == 19


def test_composite_is_acyclic_without_self_loops(dag):
    assert nx.is_directed_acyclic_graph(nx.DiGraph(list(dag.edges)))
    assert all(c != p for c, p in dag.edges)
    assert all(c in dag.nodes and p in dag.nodes for c, p in dag.edges)


# ------------------------------------------------------------------ synthetic cases

def test_direct_edge_added():
    cat = make_catalog({1: "Class", 2: "Base"}, {1003: [], 1000: [(2, 1)]}, members={1003: {1, 2}})
    dag = augment_direct_edges(build_base_view(cat), cat)
    assert dag.edges[(2, 1)].label == "direct:1000"


def test_repeated_relations_add_nothing():
    rels = [(2, 1), (3, 1)]
    cat = make_catalog({1: "Class", 2: "Base", 3: "Base"}, {1003: rels, 1000: rels, 699: rels})
    dag = build_composite_dag(cat)
    assert dag.edge_counts() == {EdgeKind.BASE: 2}


def test_direct_edge_closing_a_cycle_is_rejected():
    cat = make_catalog({1: "Class", 2: "Base"}, {1003: [(2, 1)], 1000: [(1, 2)]})
    with pytest.warns(RejectedEdgeWarning, match="CWE-1 -> CWE-2"):
        dag = augment_direct_edges(build_base_view(cat), cat)
    assert set(dag.edges) == {(2, 1)}
    assert dag.rejected == ((1, 2, 1000),)


def test_base_cycle_aborts_with_cycle_listed():
    cat = make_catalog({1: "Class", 2: "Class", 3: "Base"}, {1003: [(1, 2), (2, 3), (3, 1)]})
    with pytest.raises(CycleDetected) as info:
        build_base_view(cat)
    assert set(info.value.cycle) == {1, 2, 3}
    assert "CWE-" in str(info.value)


def test_indirect_through_outside_node():
    cat = make_catalog({1: "Base", 2: "Class", 9: "Class"}, {1003: [], 1000: [(1, 9), (9, 2)]}, members={1003: {1, 2}})
    dag = build_composite_dag(cat)
    assert dag.edges[(1, 2)].kind is EdgeKind.INDIRECT


def test_no_indirect_when_interior_is_all_base_view():
    cat = make_catalog({1: "Base", 2: "Class", 3: "Class"}, {1003: [], 1000: [(1, 3), (3, 2)]}, members={1003: {1, 2, 3}})
    dag = build_composite_dag(cat)
    assert dag.edge_counts()[EdgeKind.INDIRECT] == 0


def test_mixed_interior_counts():
    # 1 -> 3 (in view) -> 9 (outside) -> 2
    cat = make_catalog(
        {1: "Base", 2: "Class", 3: "Class", 9: "Class"},
        {1003: [(1, 3)], 1000: [(3, 9), (9, 2)]},
        members={1003: {1, 2, 3}},
    )
    indirect = {e for e, p in build_composite_dag(cat).edges.items() if p.kind is EdgeKind.INDIRECT}
    assert indirect == {(1, 2), (3, 2)}


def test_existing_edge_keeps_its_provenance():
    cat = make_catalog({1: "Base", 2: "Class", 9: "Class"}, {1003: [(1, 2)], 1000: [(1, 9), (9, 2)]})
    dag = build_composite_dag(cat)
    assert dag.edges[(1, 2)].kind is EdgeKind.BASE
    assert len(dag.edges) == 1


def test_unified_union_is_idempotent(catalog):
    once = build_unified_graph(catalog, views=(1003,))
    thrice = build_unified_graph(catalog, views=(1003, 1003, 1003))
    assert once == thrice


def test_unified_disjoint_views_sum_memberships():
    cat = make_catalog(
        {1: "Class", 2: "Base", 3: "Class", 4: "Base", 5: "Class", 6: "Base"},
        {1003: [(2, 1)], 1000: [(4, 3)], 699: [(6, 5)]},
    )
    unified = build_unified_graph(cat)
    assert len(unified.nodes) == sum(len(cat.members(v)) for v in (1003, 1000, 699))


def test_topological_order_children_first(dag):
    order = dag.topological_order()
    position = {n: i for i, n in enumerate(order)}
    assert sorted(order) == sorted(dag.nodes)
    assert all(position[c] < position[p] for c, p in dag.edges)
    assert topological_order(dag.nodes, dag.edges) == order


# ------------------------------------------------------------------ oracle

def brute_force_indirect(base_nodes, edges):
    graph = nx.DiGraph()
    graph.add_nodes_from({n for e in edges for n in e} | set(base_nodes))
    graph.add_edges_from(edges)
    found = set()
    for a in base_nodes:
        for b in base_nodes:
            if a == b:
                continue
            for path in nx.all_simple_paths(graph, a, b):
                if any(n not in base_nodes for n in path[1:-1]):
                    found.add((a, b))
                    break
    return found


def random_unified(rng, n_nodes, n_edges):
    order = list(range(1, n_nodes + 1))
    rng.shuffle(order)
    rank = {n: i for i, n in enumerate(order)}
    edges = set()
    for _ in range(n_edges):
        a, b = rng.sample(order, 2)
        if rank[a] > rank[b]:
            a, b = b, a
        edges.add((a, b))
    base = frozenset(n for n in order if rng.random() < 0.6)
    return base, edges


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=2, max_value=30))
def test_indirect_pairs_match_brute_force(seed, n_nodes):
    rng = random.Random(seed)
    base, edges = random_unified(rng, n_nodes, rng.randint(0, 2 * n_nodes))
    unified = UnifiedGraph(nodes=frozenset(range(1, n_nodes + 1)), edges=frozenset(edges))
    assert indirect_pairs(base, unified) == brute_force_indirect(base, edges)


def test_augment_indirect_on_random_graphs():
    rng = random.Random(7)
    for _ in range(40):
        n = rng.randint(3, 20)
        base, edges = random_unified(rng, n, rng.randint(0, 3 * n))
        abstractions = {i: "Base" for i in range(1, n + 1)}
        cat = make_catalog(
            abstractions,
            {1003: [e for e in edges if set(e) <= base], 1000: sorted(edges)},
            members={1003: base, 1000: set(range(1, n + 1))},
        )
        dag = augment_indirect_edges(build_base_view(cat), build_unified_graph(cat))
        expected = brute_force_indirect(base, edges) - {e for e in edges if set(e) <= base}
        got = {e for e, p in dag.edges.items() if p.kind is EdgeKind.INDIRECT}
        assert got == expected


# ------------------------------------------------------------------ DOT

def test_dot_is_deterministic_and_styled(dag):
    text = export_dot(dag)
    assert text == export_dot(dag)
    assert text.startswith("digraph cwe {")
    assert text.count(" -> ") == len(dag.edges)
    assert 'style=dashed, provenance="indirect"' in text
    assert 'provenance="direct:699"' in text


def test_dot_node_size_tracks_counts(adorned):
    text = export_dot(adorned)
    sizes = {int(m.group(1)): float(m.group(2)) for m in re.finditer(r'"(\d+)" \[.*?width=([\d.]+)', text)}
    counts = {n: len(ids) for n, ids in adorned.propagated.items()}
    biggest = max(counts, key=counts.get)
    assert sizes[biggest] == pytest.approx(2.0)
    assert min(sizes.values()) >= 0.3
    for a in counts:
        for b in counts:
            if counts[a] > counts[b]:
                assert sizes[a] > sizes[b]


def test_graph_json(dag):
    doc = dag.to_json()
    assert doc["edge_counts"] == {"base": 11, "direct": 3, "indirect": 5}
    assert len(doc["nodes"]) == 16
