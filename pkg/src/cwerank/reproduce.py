"""End-to-end analysis bundle and expectation checks.

``reproduce_analysis`` computes every ranking, distance table and summary
figure for one adorned DAG.  ``check_expectations`` compares the bundle with a
plain ``key = value [+- tol]`` file so that fixture runs and full-snapshot
runs go through the same checks.
"""

from __future__ import annotations

import logging
import shutil
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .catalog import Abstraction, AbstractionGroup
from .graph import EdgeKind, build_base_view, build_unified_graph
from .metrics import MetricKind, NormalizationScope, Ranking, rank, top
from .nvd import fully_analyzed, mapped_share
from .output import csv_text, dumps_json, ranking_rows
from .propagate import Mode, mean_counts
from .rankdist import DistanceReport, compare_matrix, distances, random_baseline, restrict_common

logger = logging.getLogger(__name__)

GROUPS = (AbstractionGroup.CLASS, AbstractionGroup.NONCLASS)
LIST_METRICS = (MetricKind.FREQUENCY, MetricKind.EXPLOITABILITY, MetricKind.IMPACT, MetricKind.CVSS)
TOP_LIST = 25


@dataclass
class ReportBundle:
    graph: dict
    rankings: dict
    raw_vs_propagated: dict
    matrices: dict
    means: dict
    official: dict
    baselines: dict
    vulns: dict
    metadata: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "metadata": self.metadata,
            "graph": self.graph,
            "vulnerabilities": self.vulns,
            "mean_cve_counts": self.means,
            "official_top_list": self.official,
            "ranking_lengths": {
                f"{m.value}/{g.value}/{mode.value}": len(r) for (m, g, mode), r in sorted(self.rankings.items())
            },
            "raw_vs_propagated": {
                f"{g.value}/{m.value}": {"kendall": d.kendall, "footrule": d.footrule}
                for (g, m), d in sorted(self.raw_vs_propagated.items())
            },
            "metric_matrices": {g.value: mat.to_json() for g, mat in sorted(self.matrices.items())},
            "random_baselines": {str(n): b.to_json() for n, b in sorted(self.baselines.items())},
        }


def graph_counts(catalog, dag) -> dict:
    base = build_base_view(catalog)
    unified = build_unified_graph(catalog)
    kinds = dag.edge_counts()
    abstractions = {a: 0 for a in Abstraction}
    for n in dag.nodes:
        abstractions[dag.abstractions[n]] += 1
    return {
        "base_nodes": len(base.nodes),
        "base_edges": len(base.edges),
        "direct_edges": kinds[EdgeKind.DIRECT],
        "unified_nodes": len(unified.nodes),
        "unified_edges": len(unified.edges),
        "indirect_edges": kinds[EdgeKind.INDIRECT],
        "composite_nodes": len(dag.nodes),
        "composite_edges": len(dag.edges),
        "classes": abstractions[Abstraction.CLASS],
        "bases": abstractions[Abstraction.BASE],
        "variants": abstractions[Abstraction.VARIANT],
        "compounds": abstractions[Abstraction.COMPOUND],
    }


def _pair_distance(a: Ranking, b: Ranking) -> DistanceReport:
    (la, lb), _ = restrict_common([a, b])
    return distances(la, lb)


def reproduce_analysis(
    catalog,
    dag,
    adorned,
    scope: NormalizationScope = NormalizationScope.GROUP,
    baseline_trials: int = 100_000,
    seed: int | None = None,
) -> ReportBundle:
    rankings = {}
    for metric in LIST_METRICS:
        for group in GROUPS:
            for mode in Mode:
                rankings[(metric, group, mode)] = rank(adorned, metric, group, mode, scope)
    for mode in Mode:
        rankings[(MetricKind.OFFICIAL, AbstractionGroup.ALL, mode)] = rank(
            adorned, MetricKind.OFFICIAL, AbstractionGroup.ALL, mode, scope
        )

    raw_vs_prop = {
        (group, metric): _pair_distance(
            rankings[(metric, group, Mode.RAW)], rankings[(metric, group, Mode.PROPAGATED)]
        )
        for group in GROUPS
        for metric in LIST_METRICS
    }
    matrices = {
        group: compare_matrix(
            [rankings[(m, group, Mode.PROPAGATED)] for m in LIST_METRICS],
            labels=[m.value for m in LIST_METRICS],
        )
        for group in GROUPS
    }

    official = {}
    for mode in Mode:
        head = top(rankings[(MetricKind.OFFICIAL, AbstractionGroup.ALL, mode)], TOP_LIST) if adorned.vulns else None
        ids = head.ids() if head else []
        official[mode.value] = {
            "top": [f"CWE-{i}" for i in ids],
            "classes": sum(1 for i in ids if dag.abstractions[i] is Abstraction.CLASS),
        }

    baselines = {}
    if baseline_trials:
        lengths = {len(rankings[(MetricKind.FREQUENCY, g, Mode.PROPAGATED)]) for g in GROUPS}
        for n in sorted(x for x in lengths if x >= 2):
            kwargs = {"seed": seed} if seed is not None else {}
            baselines[n] = random_baseline(n, baseline_trials, **kwargs)

    analyzed = fully_analyzed(adorned.vulns)
    vulns = {
        "vectors": len(adorned.vulns),
        "fully_analyzed": len(analyzed),
        "mapped_share": mapped_share(adorned.vulns, dag),
        "pairs": adorned.vulns.pair_count(),
    }
    return ReportBundle(
        graph=graph_counts(catalog, dag),
        rankings=rankings,
        raw_vs_propagated=raw_vs_prop,
        matrices=matrices,
        means=mean_counts(adorned),
        official=official,
        baselines=baselines,
        vulns=vulns,
        metadata={"scope": NormalizationScope(scope).value},
    )


def write_bundle(bundle: ReportBundle, out_dir: Path) -> list[Path]:
    """Write every artifact under ``out_dir``; a failed run leaves no partial files."""
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.", dir=out_dir.parent))
    try:
        files = {}
        files["summary.json"] = dumps_json(bundle.summary())
        for (metric, group, mode), r in sorted(bundle.rankings.items()):
            stem = f"rankings/{metric.value}_{group.value}_{mode.value}"
            meta = {**bundle.metadata, "metric": metric.value, "group": group.value, "mode": mode.value}
            files[f"{stem}.csv"] = csv_text(ranking_rows(r), meta)
            doc = r.to_json()
            doc["metadata"] = {**doc["metadata"], **bundle.metadata}
            files[f"{stem}.json"] = dumps_json(doc)
        rows = [["group", "metric", "kendall", "footrule"]]
        for (group, metric), d in sorted(bundle.raw_vs_propagated.items()):
            rows.append([group.value, metric.value, d.kendall, d.footrule])
        files["raw_vs_propagated.csv"] = csv_text(rows, bundle.metadata)
        for group, matrix in sorted(bundle.matrices.items()):
            files[f"metric_matrix_{group.value}.csv"] = csv_text(matrix.rows(), bundle.metadata)

        written = []
        for rel, text in sorted(files.items()):
            path = staging / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8", newline="")
        out_dir.mkdir(parents=True, exist_ok=True)
        for rel in sorted(files):
            target = out_dir / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            shutil.move(str(staging / rel), target)
            written.append(target)
        return written
    finally:
        shutil.rmtree(staging, ignore_errors=True)


# ---------------------------------------------------------------- expectations

@dataclass
class Expectation:
    key: str
    value: float
    tolerance: float


@dataclass
class CheckResult:
    key: str
    expected: float
    tolerance: float
    actual: float | None
    ok: bool
    note: str = ""

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        tol = f" +- {self.tolerance:g}" if self.tolerance else ""
        note = f" ({self.note})" if self.note else ""
        return f"[{status}] {self.key}: expected {self.expected:g}{tol}, got {self.actual if self.actual is not None else 'n/a'}{note}"


def _default_tolerance(text: str) -> float:
    if "." not in text:
        return 0.0
    decimals = len(text.split(".", 1)[1])
    return 0.5 * 10.0 ** -decimals


def parse_expectations(text: str) -> list[Expectation]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rhs = line.partition("=")
        if not sep:
            raise ValueError(f"expectations line {lineno}: expected 'key = value'")
        value_text, _, tol_text = rhs.partition("+-")
        value_text = value_text.strip()
        tol = float(tol_text) if tol_text.strip() else _default_tolerance(value_text)
        out.append(Expectation(key.strip(), float(value_text), tol))
    return out


def load_expectations(source: str) -> list[Expectation]:
    if source == "reference":
        text = resources.files("cwerank").joinpath("data/reference_2019.txt").read_text(encoding="utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    return parse_expectations(text)


def _candidates(bundle: ReportBundle, key: str) -> list[tuple[str, float]]:
    """Values the bundle offers for ``key``; several when the definition is ambiguous."""
    parts = key.split(".")
    head = parts[0]
    if head == "graph" and len(parts) == 2:
        return [("", bundle.graph[parts[1]])]
    if head == "means" and len(parts) == 2:
        mode = parts[1]
        return [
            ("mean over all nodes", bundle.means[f"{mode}_all"]),
            ("mean over nodes with a direct mapping", bundle.means[f"{mode}_observed"]),
        ]
    if head == "official" and len(parts) == 3 and parts[1] == "top25_classes":
        return [("", bundle.official[parts[2]]["classes"])]
    if head == "length" and len(parts) == 2:
        group = AbstractionGroup(parts[1])
        return [("", len(bundle.rankings[(MetricKind.FREQUENCY, group, Mode.PROPAGATED)]))]
    if head == "dist" and len(parts) == 4:
        d = bundle.raw_vs_propagated[(AbstractionGroup(parts[1]), MetricKind(parts[2]))]
        return [("", getattr(d, parts[3]))]
    if head == "matrix" and len(parts) == 5:
        mat = bundle.matrices[AbstractionGroup(parts[1])]
        d = mat.report(parts[2], parts[3])
        return [("", getattr(d, parts[4]))]
    if head == "baseline" and len(parts) == 3:
        b = bundle.baselines.get(int(parts[1]))
        if b is None:
            b = random_baseline(int(parts[1]))
            bundle.baselines[int(parts[1])] = b
        return [("", b.mean_kendall if parts[2] == "kendall" else b.mean_footrule)]
    if head == "vulns" and len(parts) == 2:
        return [("", bundle.vulns[parts[1]])]
    raise KeyError(key)


def check_expectations(bundle: ReportBundle, expectations: list[Expectation]) -> list[CheckResult]:
    results = []
    for exp in expectations:
        try:
            candidates = _candidates(bundle, exp.key)
        except (KeyError, ValueError, IndexError):
            results.append(CheckResult(exp.key, exp.value, exp.tolerance, None, False, "unknown key"))
            continue
        hit = next(((note, v) for note, v in candidates if abs(v - exp.value) <= exp.tolerance + 1e-12), None)
        if hit is not None:
            note, actual = hit
            results.append(CheckResult(exp.key, exp.value, exp.tolerance, round(actual, 6), True, note))
        else:
            shown = ", ".join(f"{round(v, 6)}" + (f" [{n}]" if n else "") for n, v in candidates)
            results.append(CheckResult(exp.key, exp.value, exp.tolerance, candidates[0][1], False, shown))
    return results
