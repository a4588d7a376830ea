"""Command line entry point: ``cwerank <subcommand>``.

Inputs come from flags, from an INI-style config file (``--config``), or from
a data directory (``--data-dir`` / ``$CWERANK_DATA_DIR``) laid out as::

    <data-dir>/cwe/1003.xml  <data-dir>/cwe/1000.xml  <data-dir>/cwe/699.xml
    <data-dir>/nvd/*.json[.gz]
"""

from __future__ import annotations

import argparse
import configparser
import datetime as dt
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__, _backend
from .catalog import SUPPORTED_VIEWS, AbstractionGroup, check_view, load_catalog
from .errors import CweRankError
from .graph import EdgeKind, build_base_view, build_composite_dag, build_unified_graph, export_dot
from .metrics import MetricKind, NormalizationScope, Ranking, rank, top
from .nvd import filter_year, load_feeds, restrict_to_view
from .propagate import Mode, adorn, propagate
from .rankdist import DEFAULT_SEED, compare_matrix, random_baseline
from . import reproduce as repro
from .output import csv_text, dumps_json, ranking_rows, write_output

logger = logging.getLogger("cwerank")

DATA_DIR_ENV = "CWERANK_DATA_DIR"
CONFIG_SECTION = "cwerank"


class ConfigError(CweRankError):
    pass


@dataclass
class RunConfig:
    catalogs: dict[int, Path] = field(default_factory=dict)
    feeds: list[Path] = field(default_factory=list)
    year: int | None = None
    mode: Mode = Mode.PROPAGATED
    metric: MetricKind = MetricKind.FREQUENCY
    group: AbstractionGroup = AbstractionGroup.CLASS
    scope: NormalizationScope = NormalizationScope.GROUP
    fmt: str = "csv"
    output: Path | None = None
    seed: int = DEFAULT_SEED
    top: int | None = None

    def validate(self, need_catalog: bool = True, need_feeds: bool = False) -> None:
        if need_catalog:
            missing = [v for v in SUPPORTED_VIEWS if v not in self.catalogs]
            if missing:
                raise ConfigError(f"no catalog file given for view(s) {missing}")
            for view, path in self.catalogs.items():
                check_view(view)
                _require_file(path, f"view {view} catalog")
        if need_feeds:
            if not self.feeds:
                raise ConfigError("no NVD feed files given")
            for path in self.feeds:
                _require_file(path, "feed")
        if self.year is not None and not 1999 <= self.year <= dt.date.today().year:
            raise ConfigError(f"year {self.year} outside [1999, {dt.date.today().year}]")


def _require_file(path: Path, what: str) -> None:
    if not path.is_file():
        raise ConfigError(f"{what} not found: {path}")
    if not os.access(path, os.R_OK):
        raise ConfigError(f"{what} not readable: {path}")


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()[:16]


def _snapshot(cfg: RunConfig, catalog=None) -> dict:
    meta = {
        "tool": f"cwerank {__version__}",
        "catalog_files": {str(v): f"{p.name}@{_digest(p)}" for v, p in sorted(cfg.catalogs.items()) if p.is_file()},
        "feed_files": [f"{p.name}@{_digest(p)}" for p in cfg.feeds if p.is_file()],
        "year": cfg.year,
    }
    if catalog is not None:
        meta["catalog_release"] = dict(catalog.release)
    return meta


@dataclass
class Pipeline:
    cfg: RunConfig
    catalog: object
    dag: object
    vulns: object = None
    adorned: object = None

    @property
    def metadata(self) -> dict:
        meta = _snapshot(self.cfg, self.catalog)
        if self.vulns is not None:
            meta["vectors"] = len(self.vulns)
        return meta


def load_pipeline(cfg: RunConfig, with_feeds: bool = True) -> Pipeline:
    catalog = load_catalog(cfg.catalogs)
    dag = build_composite_dag(catalog)
    if not with_feeds:
        return Pipeline(cfg, catalog, dag)
    vulns = load_feeds(cfg.feeds)
    if cfg.year is not None:
        vulns = filter_year(vulns, cfg.year)
    vulns = restrict_to_view(vulns, dag)
    adorned = propagate(adorn(dag, vulns))
    return Pipeline(cfg, catalog, dag, vulns, adorned)


# ---------------------------------------------------------------- config

def _split(value: str) -> list[str]:
    return [tok for tok in value.replace(",", " ").split() if tok]


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    data_dir = getattr(args, "data_dir", None) or os.environ.get(DATA_DIR_ENV)
    if data_dir:
        root = Path(data_dir)
        for view in SUPPORTED_VIEWS:
            candidate = root / "cwe" / f"{view}.xml"
            if candidate.exists():
                cfg.catalogs[view] = candidate
        nvd = root / "nvd"
        if nvd.is_dir():
            cfg.feeds = sorted(p for p in nvd.iterdir() if p.name.endswith((".json", ".json.gz")))

    if getattr(args, "config", None):
        path = Path(args.config)
        _require_file(path, "config file")
        parser = configparser.ConfigParser()
        parser.read(path, encoding="utf-8")
        if not parser.has_section(CONFIG_SECTION):
            raise ConfigError(f"{path}: missing [{CONFIG_SECTION}] section")
        sect = parser[CONFIG_SECTION]
        base = path.parent
        for view in SUPPORTED_VIEWS:
            if f"catalog.{view}" in sect:
                cfg.catalogs[view] = base / sect[f"catalog.{view}"]
        if "feeds" in sect:
            cfg.feeds = [base / p for p in _split(sect["feeds"])]
        for key, conv in (("year", int), ("seed", int), ("top", int)):
            if key in sect:
                setattr(cfg, key, conv(sect[key]))
        for key, conv in (("mode", Mode), ("metric", MetricKind), ("group", AbstractionGroup), ("scope", NormalizationScope)):
            if key in sect:
                setattr(cfg, key, conv(sect[key]))
        if "format" in sect:
            cfg.fmt = sect["format"]

    for spec in getattr(args, "catalog", None) or []:
        view, sep, path = spec.partition("=")
        if not sep:
            raise ConfigError(f"--catalog expects VIEW=PATH, got {spec!r}")
        cfg.catalogs[check_view(int(view))] = Path(path)
    if getattr(args, "feed", None):
        cfg.feeds = [Path(p) for p in args.feed]
    for key in ("year", "seed", "top"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    for key, conv in (("mode", Mode), ("metric", MetricKind), ("group", AbstractionGroup), ("scope", NormalizationScope)):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, conv(value))
    if getattr(args, "format", None):
        cfg.fmt = args.format
    if getattr(args, "output", None):
        cfg.output = Path(args.output)
    return cfg


# ---------------------------------------------------------------- commands

def cmd_build(args) -> int:
    cfg = config_from_args(args)
    cfg.validate()
    catalog = load_catalog(cfg.catalogs)
    base = build_base_view(catalog)
    unified = build_unified_graph(catalog)
    dag = build_composite_dag(catalog)
    counts = dag.edge_counts()
    doc = {
        "metadata": _snapshot(cfg, catalog),
        "base": {"nodes": len(base.nodes), "edges": len(base.edges)},
        "unified": {"nodes": len(unified.nodes), "edges": len(unified.edges)},
        "composite": {
            "nodes": len(dag.nodes),
            "edges": len(dag.edges),
            "base_edges": counts[EdgeKind.BASE],
            "direct_edges": counts[EdgeKind.DIRECT],
            "indirect_edges": counts[EdgeKind.INDIRECT],
        },
        "abstractions": _abstraction_counts(dag),
        "rejected_edges": [list(r) for r in dag.rejected],
    }
    write_output(dumps_json(doc), cfg.output)
    return 0


def _abstraction_counts(dag) -> dict:
    out: dict[str, int] = {}
    for n in dag.nodes:
        key = dag.abstractions[n].value
        out[key] = out.get(key, 0) + 1
    return dict(sorted(out.items()))


def cmd_ingest(args) -> int:
    cfg = config_from_args(args)
    cfg.validate(need_catalog=False, need_feeds=True)
    vulns = load_feeds(cfg.feeds)
    if cfg.year is not None:
        vulns = filter_year(vulns, cfg.year)
    doc = vulns.to_json()
    doc["metadata"] = {**doc["metadata"], **_snapshot(cfg)}
    if not args.vectors:
        doc.pop("vectors")
    write_output(dumps_json(doc), cfg.output)
    return 0


def cmd_rank(args) -> int:
    cfg = config_from_args(args)
    cfg.validate(need_feeds=True)
    pipe = load_pipeline(cfg)
    r = rank(pipe.adorned, cfg.metric, cfg.group, cfg.mode, cfg.scope)
    if cfg.top:
        r = top(r, cfg.top)
    meta = {**pipe.metadata, "metric": cfg.metric.value, "group": cfg.group.value, "mode": cfg.mode.value, "scope": cfg.scope.value}
    if cfg.fmt == "json":
        doc = r.to_json()
        doc["metadata"] = meta
        text = dumps_json(doc)
    else:
        text = csv_text(ranking_rows(r), meta)
    write_output(text, cfg.output)
    return 0


def _load_ranking(path: Path) -> Ranking:
    _require_file(path, "ranking file")
    try:
        return Ranking.from_json(json.loads(path.read_text(encoding="utf-8")))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: not a ranking JSON file ({exc})") from exc


def cmd_compare(args) -> int:
    paths = [Path(p) for p in args.rankings]
    if len(paths) < 2:
        raise ConfigError("compare needs at least two ranking files")
    rankings = [_load_ranking(p) for p in paths]
    matrix = compare_matrix(rankings, labels=[p.stem for p in paths])
    meta = {"inputs": [p.name for p in paths], "dropped": matrix.dropped, "length": matrix.length}
    if args.format == "json":
        text = dumps_json({"metadata": meta, **matrix.to_json()})
    else:
        text = csv_text(matrix.rows(), meta)
    write_output(text, Path(args.output) if args.output else None)
    return 0


def cmd_baseline(args) -> int:
    result = random_baseline(args.n, args.trials, args.seed)
    doc = result.to_json()
    if args.format == "json":
        text = dumps_json(doc)
    else:
        keys = ["n", "trials", "seed", "kendall", "footrule", "mean_kendall", "mean_footrule"]
        text = csv_text([keys, [doc[k] for k in keys]])
    write_output(text, Path(args.output) if args.output else None)
    return 0


def cmd_export_dot(args) -> int:
    cfg = config_from_args(args)
    if args.adorned:
        cfg.validate(need_feeds=True)
        pipe = load_pipeline(cfg)
        table = pipe.adorned.raw if cfg.mode is Mode.RAW else pipe.adorned.propagated
        text = export_dot(pipe.dag, {n: len(ids) for n, ids in table.items()})
    else:
        cfg.validate()
        text = export_dot(build_composite_dag(load_catalog(cfg.catalogs)))
    write_output(text, cfg.output)
    return 0


def cmd_export_graph(args) -> int:
    cfg = config_from_args(args)
    cfg.validate()
    catalog = load_catalog(cfg.catalogs)
    doc = build_composite_dag(catalog).to_json()
    doc["metadata"] = _snapshot(cfg, catalog)
    write_output(dumps_json(doc), cfg.output)
    return 0


def cmd_export_adorned(args) -> int:
    cfg = config_from_args(args)
    cfg.validate(need_feeds=True)
    pipe = load_pipeline(cfg)
    doc = {"metadata": pipe.metadata, "nodes": pipe.adorned.to_json(include_ids=args.ids)}
    write_output(dumps_json(doc), cfg.output)
    return 0


def cmd_dump_catalog(args) -> int:
    cfg = config_from_args(args)
    cfg.validate()
    catalog = load_catalog(cfg.catalogs)
    write_output(dumps_json(catalog.to_json()), cfg.output)
    return 0


def cmd_reproduce(args) -> int:
    cfg = config_from_args(args)
    cfg.validate(need_feeds=True)
    pipe = load_pipeline(cfg)
    bundle = repro.reproduce_analysis(
        pipe.catalog,
        pipe.dag,
        pipe.adorned,
        scope=cfg.scope,
        baseline_trials=args.baseline_trials,
        seed=cfg.seed,
    )
    bundle.metadata.update(pipe.metadata)
    out_dir = Path(args.out_dir)
    repro.write_bundle(bundle, out_dir)
    status = 0
    if args.expect:
        expectations = repro.load_expectations(args.expect)
        results = repro.check_expectations(bundle, expectations)
        lines = [r.line() for r in results]
        write_output("\n".join(lines) + "\n", out_dir / "expectations.txt")
        for line in lines:
            print(line)
        if not all(r.ok for r in results):
            status = 1
    print(f"wrote {out_dir}", file=sys.stderr)
    return status


# ---------------------------------------------------------------- parser

def _add_inputs(p: argparse.ArgumentParser, feeds: bool = True) -> None:
    p.add_argument("--config", help="INI file with a [cwerank] section")
    p.add_argument("--data-dir", help=f"data directory (default ${DATA_DIR_ENV})")
    p.add_argument("--catalog", action="append", metavar="VIEW=PATH", help="CWE view XML file; repeat per view")
    if feeds:
        p.add_argument("--feed", action="append", metavar="PATH", help="NVD JSON feed; repeat per file")
        p.add_argument("--year", type=int, help="keep CVEs published in this year")
    p.add_argument("-o", "--output", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cwerank", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({_backend.BACKEND} kernels)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build the composite DAG and print node/edge counts")
    _add_inputs(p, feeds=False)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("ingest", help="parse NVD feeds and summarize them")
    p.add_argument("--config")
    p.add_argument("--data-dir")
    p.add_argument("--feed", action="append", metavar="PATH")
    p.add_argument("--year", type=int)
    p.add_argument("--vectors", action="store_true", help="include every vector in the output")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("rank", help="rank weaknesses by one metric")
    _add_inputs(p)
    p.add_argument("--metric", choices=[m.value for m in MetricKind])
    p.add_argument("--group", choices=[g.value for g in AbstractionGroup])
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.add_argument("--scope", choices=[s.value for s in NormalizationScope], help="normalization scope for F_i")
    p.add_argument("--top", type=int)
    p.add_argument("--format", choices=["csv", "json"])
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("compare", help="Kendall/footrule distance matrix between ranking JSON files")
    p.add_argument("--rankings", nargs="+", required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("baseline", help="mean distances between random rankings")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--format", choices=["csv", "json"], default="json")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("export-dot", help="Graphviz DOT of the composite DAG")
    _add_inputs(p)
    p.add_argument("--adorned", action="store_true", help="size nodes by CVE count (needs feeds)")
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.set_defaults(func=cmd_export_dot)

    p = sub.add_parser("export-graph", help="JSON nodes and edges with provenance")
    _add_inputs(p, feeds=False)
    p.set_defaults(func=cmd_export_graph)

    p = sub.add_parser("export-adorned", help="JSON per-node raw and propagated CVE counts")
    _add_inputs(p)
    p.add_argument("--ids", action="store_true", help="include full CVE id lists")
    p.set_defaults(func=cmd_export_adorned)

    p = sub.add_parser("dump-catalog", help="JSON of the normalized catalog")
    _add_inputs(p, feeds=False)
    p.set_defaults(func=cmd_dump_catalog)

    p = sub.add_parser("reproduce", help="rankings, distance tables and summary figures in one bundle")
    _add_inputs(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--scope", choices=[s.value for s in NormalizationScope])
    p.add_argument("--seed", type=int)
    p.add_argument("--baseline-trials", type=int, default=100_000)
    p.add_argument("--expect", help="expectations file, or 'reference' for the bundled 2019 values")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.captureWarnings(True)
    try:
        return args.func(args)
    except (CweRankError, OSError, ValueError) as exc:
        print(f"cwerank {args.command}: error: {exc}", file=sys.stderr)
        return 2
    finally:
        logging.captureWarnings(False)


if __name__ == "__main__":
    sys.exit(main())
