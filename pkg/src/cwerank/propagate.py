"""Attaching CVE ids to DAG nodes and pushing them up to every ancestor."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from statistics import fmean
from typing import Mapping

from .errors import UnknownCwe
from .graph import WeaknessDag
from .nvd import VulnSet


class Mode(str, enum.Enum):
    RAW = "raw"
    PROPAGATED = "propagated"


@dataclass(frozen=True)
class AdornedDag:
    dag: WeaknessDag
    raw: Mapping[int, frozenset]
    propagated: Mapping[int, frozenset]
    vulns: VulnSet = field(default_factory=VulnSet)

    @property
    def nodes(self) -> frozenset:
        return self.dag.nodes

    def cves(self, node: int, mode: Mode = Mode.PROPAGATED) -> frozenset:
        table = self.raw if Mode(mode) is Mode.RAW else self.propagated
        try:
            return table[node]
        except KeyError:
            raise UnknownCwe(f"CWE-{node} is not a node of the DAG") from None

    def to_json(self, include_ids: bool = False) -> list[dict]:
        rows = []
        for n in sorted(self.dag.nodes):
            abstraction = self.dag.abstractions.get(n)
            row = {
                "cwe": f"CWE-{n}",
                "abstraction": abstraction.value if abstraction is not None else None,
                "raw_count": len(self.raw[n]),
                "propagated_count": len(self.propagated[n]),
            }
            if include_ids:
                row["raw_cve_ids"] = sorted(self.raw[n])
                row["propagated_cve_ids"] = sorted(self.propagated[n])
            rows.append(row)
        return rows


def adorn(dag: WeaknessDag, vulns: VulnSet) -> AdornedDag:
    """Label each node with the ids of CVEs mapped directly to it."""
    raw: dict[int, set[str]] = {n: set() for n in dag.nodes}
    for vector in vulns:
        for cwe in vector.cwes:
            if cwe not in raw:
                raise UnknownCwe(f"{vector.cve_id} maps to CWE-{cwe}, which is not in the DAG")
            raw[cwe].add(vector.cve_id)
    frozen = {n: frozenset(ids) for n, ids in sorted(raw.items())}
    return AdornedDag(dag=dag, raw=frozen, propagated=dict(frozen), vulns=vulns)


def propagate(adorned: AdornedDag) -> AdornedDag:
    """Give every node the union of its own and all descendants' CVE ids."""
    dag = adorned.dag
    children = dag.children_map()
    propagated: dict[int, frozenset] = {}
    for node in dag.topological_order():
        acc = set(adorned.raw[node])
        for child in children[node]:
            acc |= propagated[child]
        propagated[node] = frozenset(acc)
    return AdornedDag(
        dag=dag,
        raw=adorned.raw,
        propagated=dict(sorted(propagated.items())),
        vulns=adorned.vulns,
    )


def node_count(adorned: AdornedDag, node: int, mode: Mode = Mode.PROPAGATED) -> int:
    return len(adorned.cves(node, mode))


def mean_counts(adorned: AdornedDag) -> dict[str, float]:
    """Mean CVE count per node, over all nodes and over nodes with a raw mapping."""
    nodes = sorted(adorned.nodes)
    observed = [n for n in nodes if adorned.raw[n]]
    out = {}
    for mode in Mode:
        table = adorned.raw if mode is Mode.RAW else adorned.propagated
        out[f"{mode.value}_all"] = fmean(len(table[n]) for n in nodes) if nodes else 0.0
        out[f"{mode.value}_observed"] = fmean(len(table[n]) for n in observed) if observed else 0.0
    return out
