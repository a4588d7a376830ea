"""Construction of the composite view-1003 weakness DAG.

Edges always point child -> parent, which is the direction CVE data flows
during propagation.  The composite graph is the view-1003 tree (root removed),
plus ChildOf edges between view-1003 weaknesses that only the 1000/699 views
record ("direct" edges), plus edges standing for paths between view-1003
weaknesses that pass through at least one weakness outside view 1003
("indirect" edges).
"""

from __future__ import annotations

import enum
import graphlib
import logging
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .catalog import BASE_VIEW, OTHER_VIEWS, Abstraction, Catalog
from .errors import CycleDetected, RejectedEdgeWarning

logger = logging.getLogger(__name__)


class EdgeKind(enum.IntEnum):
    # lower value wins when the same (child, parent) pair is found twice
    BASE = 0
    DIRECT = 1
    INDIRECT = 2


@dataclass(frozen=True, order=True)
class EdgeProvenance:
    kind: EdgeKind
    view: int | None = None

    @classmethod
    def base(cls) -> EdgeProvenance:
        return cls(EdgeKind.BASE, BASE_VIEW)

    @classmethod
    def direct(cls, view: int) -> EdgeProvenance:
        return cls(EdgeKind.DIRECT, view)

    @classmethod
    def indirect(cls) -> EdgeProvenance:
        return cls(EdgeKind.INDIRECT, None)

    @property
    def label(self) -> str:
        if self.kind is EdgeKind.BASE:
            return "base"
        if self.kind is EdgeKind.DIRECT:
            return f"direct:{self.view}"
        return "indirect"


@dataclass(frozen=True)
class WeaknessDag:
    nodes: frozenset
    edges: Mapping[tuple[int, int], EdgeProvenance]
    abstractions: Mapping[int, Abstraction] = field(default_factory=dict)
    names: Mapping[int, str] = field(default_factory=dict)
    release: Mapping[str, str] = field(default_factory=dict)
    rejected: tuple = ()

    def parents(self, node: int) -> list[int]:
        return sorted(p for (c, p) in self.edges if c == node)

    def children_map(self) -> dict[int, list[int]]:
        children: dict[int, list[int]] = {n: [] for n in self.nodes}
        for c, p in sorted(self.edges):
            children[p].append(c)
        return children

    def parents_map(self) -> dict[int, list[int]]:
        parents: dict[int, list[int]] = {n: [] for n in self.nodes}
        for c, p in sorted(self.edges):
            parents[c].append(p)
        return parents

    def edge_counts(self) -> Counter:
        return Counter(prov.kind for prov in self.edges.values())

    def topological_order(self) -> list[int]:
        """Children before parents."""
        return topological_order(self.nodes, self.edges)

    def with_edges(self, edges: Mapping[tuple[int, int], EdgeProvenance], rejected=()) -> WeaknessDag:
        return WeaknessDag(
            nodes=self.nodes,
            edges=dict(sorted(edges.items())),
            abstractions=self.abstractions,
            names=self.names,
            release=self.release,
            rejected=tuple(self.rejected) + tuple(rejected),
        )

    def to_json(self) -> dict:
        counts = self.edge_counts()
        return {
            "release": dict(sorted(self.release.items())),
            "node_count": len(self.nodes),
            "edge_count": len(self.edges),
            "edge_counts": {k.name.lower(): counts.get(k, 0) for k in EdgeKind},
            "nodes": [
                {
                    "id": n,
                    "cwe": f"CWE-{n}",
                    "abstraction": self.abstractions[n].value if n in self.abstractions else None,
                    "name": self.names.get(n, ""),
                }
                for n in sorted(self.nodes)
            ],
            "edges": [
                {"child": c, "parent": p, "provenance": prov.label}
                for (c, p), prov in sorted(self.edges.items())
            ],
        }


@dataclass(frozen=True)
class UnifiedGraph:
    """All weaknesses of views 1003, 1000 and 699 with their ChildOf edges."""

    nodes: frozenset
    edges: frozenset

    def successors(self) -> dict[int, list[int]]:
        succ: dict[int, list[int]] = {n: [] for n in self.nodes}
        for c, p in sorted(self.edges):
            succ[c].append(p)
        return succ


def topological_order(nodes: Iterable[int], edges: Iterable[tuple[int, int]]) -> list[int]:
    """Deterministic order placing every child before its parents."""
    sorter = graphlib.TopologicalSorter()
    for n in sorted(nodes):
        sorter.add(n)
    for c, p in sorted(edges):
        sorter.add(p, c)
    try:
        sorter.prepare()
    except graphlib.CycleError as exc:
        raise CycleDetected(exc.args[1]) from None
    order = []
    while sorter.is_active():
        ready = sorted(sorter.get_ready())
        order.extend(ready)
        sorter.done(*ready)
    return order


def _reaches(start: int, goal: int, succ: Mapping[int, Iterable[int]]) -> bool:
    stack, seen = [start], {start}
    while stack:
        node = stack.pop()
        if node == goal:
            return True
        for nxt in succ.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


def build_base_view(catalog: Catalog) -> WeaknessDag:
    members = catalog.members(BASE_VIEW)
    if not members and BASE_VIEW not in catalog.views:
        raise ValueError("catalog does not contain view 1003")
    nodes = frozenset(n for n in members if n in catalog.entries)
    edges = {
        (c, p): EdgeProvenance.base()
        for (c, p) in catalog.relations(BASE_VIEW)
        if c in nodes and p in nodes
    }
    topological_order(nodes, edges)
    return WeaknessDag(
        nodes=nodes,
        edges=dict(sorted(edges.items())),
        abstractions={n: catalog.entries[n].abstraction for n in sorted(nodes)},
        names={n: catalog.entries[n].name for n in sorted(nodes)},
        release=dict(catalog.release),
    )


def augment_direct_edges(dag: WeaknessDag, catalog: Catalog, views: Iterable[int] = OTHER_VIEWS) -> WeaknessDag:
    """Add ChildOf relations between view-1003 weaknesses recorded by other views.

    A relation that would close a cycle is skipped and reported through
    :class:`RejectedEdgeWarning`.
    """
    edges = dict(dag.edges)
    succ: dict[int, set[int]] = {n: set() for n in dag.nodes}
    for c, p in edges:
        succ[c].add(p)
    rejected = []
    for view in views:
        for c, p in sorted(catalog.relations(view)):
            if c not in dag.nodes or p not in dag.nodes or (c, p) in edges:
                continue
            if _reaches(p, c, succ):
                rejected.append((c, p, view))
                warnings.warn(
                    f"view {view}: edge CWE-{c} -> CWE-{p} would create a cycle; rejected",
                    RejectedEdgeWarning,
                    stacklevel=2,
                )
                continue
            edges[(c, p)] = EdgeProvenance.direct(view)
            succ[c].add(p)
    return dag.with_edges(edges, rejected)


def build_unified_graph(catalog: Catalog, views: Iterable[int] = (BASE_VIEW,) + OTHER_VIEWS) -> UnifiedGraph:
    views = list(views)
    nodes = set()
    for view in views:
        nodes.update(n for n in catalog.members(view) if n in catalog.entries)
    edges = set()
    for view in views:
        edges.update((c, p) for c, p in catalog.relations(view) if c in nodes and p in nodes)
    topological_order(nodes, edges)
    return UnifiedGraph(nodes=frozenset(nodes), edges=frozenset(edges))


def indirect_pairs(base_nodes: frozenset, unified: UnifiedGraph) -> set[tuple[int, int]]:
    """Pairs of ``base_nodes`` joined by a unified-graph path with a non-base interior node.

    The search state is (vertex, whether a non-base vertex has been passed
    strictly before it), so each source costs at most two visits per vertex.
    """
    succ = unified.successors()
    found = set()
    for source in sorted(base_nodes):
        if source not in succ:
            continue
        seen = set()
        stack = [(nxt, False) for nxt in succ[source]]
        while stack:
            state = stack.pop()
            if state in seen:
                continue
            seen.add(state)
            node, passed_outside = state
            if passed_outside and node in base_nodes:
                found.add((source, node))
            flag = passed_outside or node not in base_nodes
            stack.extend((nxt, flag) for nxt in succ[node] if (nxt, flag) not in seen)
    return found


def augment_indirect_edges(dag: WeaknessDag, unified: UnifiedGraph) -> WeaknessDag:
    if not dag.nodes <= unified.nodes:
        missing = sorted(dag.nodes - unified.nodes)
        raise ValueError(f"unified graph lacks DAG nodes: {missing[:10]}")
    edges = dict(dag.edges)
    for pair in sorted(indirect_pairs(dag.nodes, unified)):
        edges.setdefault(pair, EdgeProvenance.indirect())
    out = dag.with_edges(edges)
    out.topological_order()
    return out


def build_composite_dag(catalog: Catalog) -> WeaknessDag:
    dag = build_base_view(catalog)
    dag = augment_direct_edges(dag, catalog)
    dag = augment_indirect_edges(dag, build_unified_graph(catalog))
    counts = dag.edge_counts()
    logger.info(
        "composite DAG: %d nodes, %d edges (base %d, direct %d, indirect %d)",
        len(dag.nodes),
        len(dag.edges),
        counts[EdgeKind.BASE],
        counts[EdgeKind.DIRECT],
        counts[EdgeKind.INDIRECT],
    )
    return dag


_NODE_COLORS = {
    Abstraction.CLASS: "#1f77b4",
    Abstraction.BASE: "#9467bd",
    Abstraction.VARIANT: "#2ca02c",
    Abstraction.COMPOUND: "#ff7f0e",
}

_EDGE_STYLES = {
    EdgeKind.BASE: 'color="#000000"',
    EdgeKind.DIRECT: 'color="#2ca02c"',
    EdgeKind.INDIRECT: 'color="#1f77b4", style=dashed',
}


def export_dot(dag, counts: Mapping[int, int] | None = None, *, min_size: float = 0.3, max_size: float = 2.0) -> str:
    """Render ``dag`` (a :class:`WeaknessDag` or an adorned one) as Graphviz DOT.

    For adorned graphs the propagated vector counts size the nodes unless
    ``counts`` is given explicitly.
    """
    if counts is None and hasattr(dag, "propagated"):
        counts = {n: len(ids) for n, ids in dag.propagated.items()}
        dag = dag.dag
    lines = [
        "digraph cwe {",
        "  rankdir=RL;",
        '  node [shape=circle, style=filled, fontsize=10];',
    ]
    if dag.release.get("version"):
        lines.append(f'  label="CWE {dag.release["version"]}";')
    top = max(counts.values(), default=0) if counts else 0
    for n in sorted(dag.nodes):
        abstraction = dag.abstractions.get(n)
        attrs = [f'label="CWE-{n}"']
        if abstraction is not None:
            attrs.append(f'fillcolor="{_NODE_COLORS[abstraction]}"')
            attrs.append(f'abstraction="{abstraction.value}"')
        if counts is not None:
            value = counts.get(n, 0)
            size = min_size + (max_size - min_size) * (value / top if top else 0.0)
            attrs.append(f"width={size:.4f}")
            attrs.append(f"height={size:.4f}")
            attrs.append("fixedsize=true")
            attrs.append(f"vectors={value}")
        lines.append(f'  "{n}" [{", ".join(attrs)}];')
    for (c, p), prov in sorted(dag.edges.items()):
        lines.append(f'  "{c}" -> "{p}" [{_EDGE_STYLES[prov.kind]}, provenance="{prov.label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
