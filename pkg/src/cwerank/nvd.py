"""Ingestion of NVD legacy JSON yearly feeds (``nvdcve-1.1-YYYY.json[.gz]``)."""

from __future__ import annotations

import gzip
import json
import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping

from .errors import MalformedFeed

logger = logging.getLogger(__name__)

PLACEHOLDER_PREFIX = "NVD-CWE-"


@dataclass(frozen=True)
class VulnVector:
    cve_id: str
    published: datetime
    base_score: float
    exploitability: float
    impact: float
    cwes: frozenset = frozenset()
    last_modified: datetime | None = None
    listed: bool = True  # carried at least one weakness label, placeholders included

    def __post_init__(self):
        for name in ("base_score", "exploitability", "impact"):
            value = getattr(self, name)
            if not 0.0 <= value <= 10.0:
                raise ValueError(f"{self.cve_id}: {name} {value} outside [0, 10]")

    def score(self, which: str) -> float:
        return getattr(self, which)

    def to_json(self) -> dict:
        return {
            "cve_id": self.cve_id,
            "published": self.published.isoformat(),
            "base_score": self.base_score,
            "exploitability": self.exploitability,
            "impact": self.impact,
            "cwes": sorted(self.cwes),
        }


@dataclass(frozen=True)
class VulnSet:
    vectors: Mapping[str, VulnVector] = field(default_factory=dict)
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors.values())

    def __getitem__(self, cve_id: str) -> VulnVector:
        return self.vectors[cve_id]

    def __contains__(self, cve_id: str) -> bool:
        return cve_id in self.vectors

    def pair_count(self) -> int:
        return sum(len(v.cwes) for v in self.vectors.values())

    def to_json(self) -> dict:
        return {
            "metadata": dict(sorted(self.metadata.items())),
            "count": len(self.vectors),
            "vectors": [v.to_json() for _, v in sorted(self.vectors.items())],
        }


def _parse_time(raw: str | None, cve_id: str, name: str) -> datetime | None:
    if raw is None:
        return None
    text = raw.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        stamp = datetime.fromisoformat(text)
    except ValueError:
        raise MalformedFeed(f"{cve_id}: bad {name} {raw!r}") from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.astimezone(timezone.utc)


def _cwe_labels(cve: dict) -> list[str]:
    labels = []
    for pt in cve.get("problemtype", {}).get("problemtype_data", []):
        for desc in pt.get("description", []):
            value = desc.get("value")
            if value:
                labels.append(value.strip())
    return labels


def _parse_labels(labels: Iterable[str]) -> frozenset:
    cwes = set()
    for label in labels:
        if label.startswith(PLACEHOLDER_PREFIX):
            continue
        if label.upper().startswith("CWE-"):
            try:
                value = int(label[4:])
            except ValueError:
                continue
            if value > 0:
                cwes.add(value)
    return frozenset(cwes)


def _score(data: dict, key: str, cve_id: str) -> float:
    try:
        value = float(data[key])
    except (KeyError, TypeError, ValueError):
        raise MalformedFeed(f"{cve_id}: missing or invalid {key}") from None
    if not 0.0 <= value <= 10.0:
        raise MalformedFeed(f"{cve_id}: {key}={value} outside [0, 10]")
    return value


def parse_feed(content: bytes | str | dict, stats: Counter | None = None) -> list[VulnVector]:
    """Parse one legacy NVD feed document.

    Entries without a CVSS v3.x base metric are skipped; the optional
    ``stats`` counter records how many entries were seen, kept and skipped.
    """
    if stats is None:
        stats = Counter()
    if isinstance(content, dict):
        doc = content
    else:
        if isinstance(content, bytes) and content[:2] == b"\x1f\x8b":
            content = gzip.decompress(content)
        try:
            doc = json.loads(content)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise MalformedFeed(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("CVE_Items"), list):
        raise MalformedFeed("expected an object with a CVE_Items list")

    vectors = []
    for item in doc["CVE_Items"]:
        stats["entries"] += 1
        try:
            cve = item["cve"]
            cve_id = cve["CVE_data_meta"]["ID"]
        except (KeyError, TypeError):
            raise MalformedFeed(f"entry #{stats['entries']} lacks cve.CVE_data_meta.ID") from None
        metric = (item.get("impact") or {}).get("baseMetricV3")
        if not metric:
            stats["no_v3_score"] += 1
            continue
        cvss = metric.get("cvssV3") or {}
        labels = _cwe_labels(cve)
        if not labels:
            stats["no_weakness_listing"] += 1
        published = _parse_time(item.get("publishedDate"), cve_id, "publishedDate")
        if published is None:
            raise MalformedFeed(f"{cve_id}: missing publishedDate")
        vector = VulnVector(
            cve_id=cve_id,
            published=published,
            base_score=_score(cvss, "baseScore", cve_id),
            exploitability=_score(metric, "exploitabilityScore", cve_id),
            impact=_score(metric, "impactScore", cve_id),
            cwes=_parse_labels(labels),
            last_modified=_parse_time(item.get("lastModifiedDate"), cve_id, "lastModifiedDate"),
            listed=bool(labels),
        )
        if not vector.cwes:
            stats["no_cwe_mapping"] += 1
        stats["kept"] += 1
        vectors.append(vector)
    return vectors


def merge_vectors(groups: Iterable[Iterable[VulnVector]], stats: Counter | None = None) -> dict[str, VulnVector]:
    """Key vectors by CVE id; on duplicates the latest ``last_modified`` wins."""
    if stats is None:
        stats = Counter()
    merged: dict[str, VulnVector] = {}
    floor = datetime.min.replace(tzinfo=timezone.utc)
    for group in groups:
        for vector in group:
            prior = merged.get(vector.cve_id)
            if prior is None:
                merged[vector.cve_id] = vector
                continue
            stats["duplicates"] += 1
            logger.warning("duplicate %s across feeds; keeping latest lastModified", vector.cve_id)
            key_new = (vector.last_modified or floor, vector.published)
            key_old = (prior.last_modified or floor, prior.published)
            if key_new > key_old:
                merged[vector.cve_id] = vector
    return dict(sorted(merged.items()))


def load_feeds(paths: Iterable[str | Path]) -> VulnSet:
    paths = [Path(p) for p in paths]
    stats: Counter = Counter()
    groups = []
    for path in paths:
        try:
            content = path.read_bytes()
        except OSError as exc:
            raise MalformedFeed(f"{path}: {exc.strerror or exc}") from exc
        try:
            groups.append(parse_feed(content, stats))
        except MalformedFeed as exc:
            raise MalformedFeed(f"{path}: {exc}") from exc
    vectors = merge_vectors(groups, stats)
    if stats["no_v3_score"]:
        logger.info("skipped %d entries without a CVSS v3 score", stats["no_v3_score"])
    return VulnSet(
        vectors=vectors,
        metadata={"feeds": [p.name for p in paths], "stats": dict(sorted(stats.items()))},
    )


def filter_year(vulns: VulnSet, year: int) -> VulnSet:
    kept = {k: v for k, v in vulns.vectors.items() if v.published.astimezone(timezone.utc).year == year}
    return VulnSet(vectors=kept, metadata={**vulns.metadata, "year": year})


def restrict_to_view(vulns: VulnSet, dag) -> VulnSet:
    """Drop CWE mappings outside ``dag``; vectors left without mappings stay in the set."""
    nodes = dag.nodes
    kept = {}
    for cve_id, vector in vulns.vectors.items():
        cwes = vector.cwes & nodes
        kept[cve_id] = vector if cwes == vector.cwes else replace(vector, cwes=frozenset(cwes))
    return VulnSet(vectors=kept, metadata=dict(vulns.metadata))


def fully_analyzed(vulns: VulnSet) -> list[VulnVector]:
    """Vectors with a v3 score and at least one weakness label."""
    return [v for v in vulns.vectors.values() if v.listed]


def mapped_share(vulns: VulnSet, dag) -> float:
    """Fraction of fully analyzed vectors with at least one mapping inside ``dag``."""
    analyzed = fully_analyzed(vulns)
    if not analyzed:
        return 0.0
    return sum(1 for v in analyzed if v.cwes & dag.nodes) / len(analyzed)
