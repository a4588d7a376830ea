"""Per-weakness significance metrics and the rankings built from them.

For a node ``i`` with CVE set ``J_i`` (raw or propagated):

* ``N_i``  number of CVEs in ``J_i``
* ``F_i``  min-max normalized ``N_i`` over a normalization scope
* ``Q_i``, ``R_i``, ``S_i``  mean exploitability, impact and base score over ``J_i``
* ``D_i``  the official CWE Top 25 score, ``F_i`` times ``S_i`` min-max
  normalized against the lowest and highest base score of any CVE, times 100
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .catalog import AbstractionGroup
from .errors import DegenerateScopeWarning, EmptyNode, UnknownCve
from .propagate import AdornedDag, Mode


class MetricKind(str, enum.Enum):
    FREQUENCY = "freq"
    EXPLOITABILITY = "exploit"
    IMPACT = "impact"
    CVSS = "cvss"
    OFFICIAL = "official"

    @property
    def title(self) -> str:
        return _TITLES[self]


_TITLES = {
    MetricKind.FREQUENCY: "Normalized Frequency",
    MetricKind.EXPLOITABILITY: "Mean Exploitability",
    MetricKind.IMPACT: "Mean Impact",
    MetricKind.CVSS: "Mean CVSS Score",
    MetricKind.OFFICIAL: "Official Danger Score",
}

SUBSCORE_FIELDS = {"exploitability", "impact", "base_score"}

_METRIC_FIELD = {
    MetricKind.FREQUENCY: "frequency",
    MetricKind.EXPLOITABILITY: "exploitability",
    MetricKind.IMPACT: "impact",
    MetricKind.CVSS: "cvss",
    MetricKind.OFFICIAL: "danger",
}


class NormalizationScope(str, enum.Enum):
    GROUP = "group"  # every DAG node in the ranking's abstraction group
    VIEW = "view"  # every DAG node
    OBSERVED = "observed"  # group nodes with at least one CVE


@dataclass(frozen=True)
class MetricRecord:
    cwe: int
    count: int
    frequency: float | None = None
    exploitability: float | None = None
    impact: float | None = None
    cvss: float | None = None
    danger: float | None = None

    def value(self, metric: MetricKind) -> float | None:
        return getattr(self, _METRIC_FIELD[MetricKind(metric)])


@dataclass(frozen=True)
class RankEntry:
    cwe: int
    value: float
    count: int = 0
    abstraction: str = ""


@dataclass(frozen=True)
class Ranking:
    metric: MetricKind
    group: AbstractionGroup
    mode: Mode
    entries: tuple = ()
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def ids(self) -> list[int]:
        return [e.cwe for e in self.entries]

    @property
    def label(self) -> str:
        return f"{self.metric.value}/{self.group.value}/{self.mode.value}"

    def to_json(self) -> dict:
        return {
            "metric": self.metric.value,
            "group": self.group.value,
            "mode": self.mode.value,
            "metadata": dict(sorted(self.metadata.items())),
            "entries": [
                {
                    "rank": k,
                    "cwe_id": f"CWE-{e.cwe}",
                    "abstraction": e.abstraction,
                    "value": e.value,
                    "n_i": e.count,
                }
                for k, e in enumerate(self.entries, start=1)
            ],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> Ranking:
        entries = tuple(
            RankEntry(
                cwe=int(str(row["cwe_id"]).upper().removeprefix("CWE-")),
                value=float(row["value"]),
                count=int(row.get("n_i", 0)),
                abstraction=row.get("abstraction", ""),
            )
            for row in doc["entries"]
        )
        return cls(
            metric=MetricKind(doc["metric"]),
            group=AbstractionGroup(doc["group"]),
            mode=Mode(doc["mode"]),
            entries=entries,
            metadata=dict(doc.get("metadata", {})),
        )


def e_ij(adorned: AdornedDag, mode: Mode, i: int, j: str) -> int:
    if j not in adorned.vulns:
        raise UnknownCve(f"{j} is not in the vulnerability set")
    return int(j in adorned.cves(i, mode))


def normalized_frequency(counts: Mapping[int, int]) -> dict[int, float]:
    """Min-max normalize counts over the scope given by the mapping's keys."""
    if not counts:
        raise ValueError("normalization scope is empty")
    lo = min(counts.values())
    hi = max(counts.values())
    if hi == lo:
        warnings.warn(
            f"all {len(counts)} counts in scope equal {lo}; normalized frequency is 0 for every node",
            DegenerateScopeWarning,
            stacklevel=2,
        )
        return {i: 0.0 for i in counts}
    span = hi - lo
    return {i: (n - lo) / span for i, n in counts.items()}


def mean_subscore(adorned: AdornedDag, i: int, mode: Mode, which: str) -> float:
    if which not in SUBSCORE_FIELDS:
        raise ValueError(f"unknown sub-score {which!r}; expected one of {sorted(SUBSCORE_FIELDS)}")
    ids = adorned.cves(i, mode)
    if not ids:
        raise EmptyNode(f"CWE-{i} has no CVEs in {Mode(mode).value} mode")
    vectors = adorned.vulns.vectors
    # fsum keeps the mean independent of set iteration order
    return math.fsum(getattr(vectors[j], which) for j in ids) / len(ids)


def score_extremes(adorned: AdornedDag) -> tuple[float, float]:
    scores = [v.base_score for v in adorned.vulns]
    if not scores:
        raise ValueError("vulnerability set is empty")
    return min(scores), max(scores)


def official_danger_score(adorned: AdornedDag, scope: Iterable[int], mode: Mode) -> dict[int, float]:
    """D_i for every scope node with at least one CVE; nodes without CVEs are omitted."""
    scope = sorted(scope)
    counts = {i: len(adorned.cves(i, mode)) for i in scope}
    return _danger(adorned, normalized_frequency(counts), counts, mode)


def _danger(adorned: AdornedDag, freq: Mapping[int, float], counts: Mapping[int, int], mode: Mode) -> dict[int, float]:
    lo, hi = score_extremes(adorned)
    if hi == lo:
        warnings.warn(
            f"every CVE has base score {lo}; severity factor is 0",
            DegenerateScopeWarning,
            stacklevel=3,
        )
    out = {}
    for i in sorted(freq):
        if counts[i] == 0:
            continue
        severity = (mean_subscore(adorned, i, mode, "base_score") - lo) / (hi - lo) if hi != lo else 0.0
        out[i] = freq[i] * severity * 100.0
    return out


def scope_nodes(adorned: AdornedDag, group: AbstractionGroup, mode: Mode, scope: NormalizationScope) -> list[int]:
    dag = adorned.dag
    if NormalizationScope(scope) is NormalizationScope.VIEW:
        return sorted(dag.nodes)
    members = [n for n in sorted(dag.nodes) if group.contains(dag.abstractions[n])]
    if NormalizationScope(scope) is NormalizationScope.OBSERVED:
        members = [n for n in members if adorned.cves(n, mode)]
    return members


def compute_records(
    adorned: AdornedDag,
    group: AbstractionGroup = AbstractionGroup.ALL,
    mode: Mode = Mode.PROPAGATED,
    scope: NormalizationScope = NormalizationScope.GROUP,
) -> dict[int, MetricRecord]:
    """Metric records for every node of ``group``; normalization uses ``scope``."""
    group = AbstractionGroup(group)
    mode = Mode(mode)
    norm_nodes = scope_nodes(adorned, group, mode, scope)
    members = [n for n in sorted(adorned.nodes) if group.contains(adorned.dag.abstractions[n])]
    counts = {i: len(adorned.cves(i, mode)) for i in sorted(set(norm_nodes) | set(members))}
    freq = normalized_frequency({i: counts[i] for i in norm_nodes}) if norm_nodes else {}
    danger = _danger(adorned, freq, counts, mode) if freq and len(adorned.vulns) else {}

    records = {}
    for i in members:
        n = counts[i]
        if n == 0:
            records[i] = MetricRecord(cwe=i, count=0, frequency=freq.get(i))
            continue
        records[i] = MetricRecord(
            cwe=i,
            count=n,
            frequency=freq.get(i),
            exploitability=mean_subscore(adorned, i, mode, "exploitability"),
            impact=mean_subscore(adorned, i, mode, "impact"),
            cvss=mean_subscore(adorned, i, mode, "base_score"),
            danger=danger.get(i),
        )
    return records


def rank_records(
    records: Mapping[int, MetricRecord],
    metric: MetricKind,
    group: AbstractionGroup,
    mode: Mode,
    abstractions: Mapping | None = None,
    metadata: Mapping | None = None,
) -> Ranking:
    """Sort observed nodes by value descending, ties by ascending CWE id."""
    metric = MetricKind(metric)
    rows = []
    for i, rec in records.items():
        value = rec.value(metric)
        if rec.count == 0 or value is None:
            continue
        rows.append((i, value, rec.count))
    rows.sort(key=lambda row: (-row[1], row[0]))
    abstractions = abstractions or {}
    entries = tuple(
        RankEntry(
            cwe=i,
            value=value,
            count=count,
            abstraction=getattr(abstractions.get(i), "value", ""),
        )
        for i, value, count in rows
    )
    return Ranking(metric=metric, group=AbstractionGroup(group), mode=Mode(mode), entries=entries, metadata=dict(metadata or {}))


def rank(
    adorned: AdornedDag,
    metric: MetricKind,
    group: AbstractionGroup = AbstractionGroup.ALL,
    mode: Mode = Mode.PROPAGATED,
    scope: NormalizationScope = NormalizationScope.GROUP,
) -> Ranking:
    records = compute_records(adorned, group, mode, scope)
    metadata = {
        "release": dict(sorted(adorned.dag.release.items())),
        "scope": NormalizationScope(scope).value,
    }
    return rank_records(records, metric, group, mode, adorned.dag.abstractions, metadata)


def top(r: Ranking, x: int) -> Ranking:
    if x < 1:
        raise ValueError("top list size must be at least 1")
    return Ranking(metric=r.metric, group=r.group, mode=r.mode, entries=r.entries[:x], metadata=r.metadata)
