"""Parsing of CWE List view files into a normalized weakness catalog.

Each supported view file (1003, 1000, 699) is parsed into a partial
:class:`Catalog`; the partial catalogs are then combined with
:func:`merge_catalogs`.  Only ``ChildOf`` relations tagged with the view being
parsed are kept.  Categories, views and deprecated entries never become
catalog entries.
"""

from __future__ import annotations

import enum
import logging
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import (
    ConflictingEntry,
    DanglingParentWarning,
    MalformedFile,
    UnsupportedView,
)

logger = logging.getLogger(__name__)

SUPPORTED_VIEWS = (1003, 1000, 699)
BASE_VIEW = 1003
OTHER_VIEWS = (1000, 699)


class Abstraction(str, enum.Enum):
    CLASS = "Class"
    BASE = "Base"
    VARIANT = "Variant"
    COMPOUND = "Compound"


class AbstractionGroup(str, enum.Enum):
    CLASS = "class"
    NONCLASS = "nonclass"
    ALL = "all"

    def contains(self, abstraction: Abstraction) -> bool:
        if self is AbstractionGroup.ALL:
            return True
        return classify_abstraction(abstraction) is self


# Newer CWE releases split the top level into "Pillar"; those entries are the
# most general weaknesses and are grouped with classes.
_ABSTRACTION_ALIASES = {
    "class": Abstraction.CLASS,
    "pillar": Abstraction.CLASS,
    "base": Abstraction.BASE,
    "variant": Abstraction.VARIANT,
    "compound": Abstraction.COMPOUND,
}


def format_cwe(cwe_id: int) -> str:
    return f"CWE-{cwe_id}"


def parse_cwe_id(text: str | int) -> int:
    """Parse ``"CWE-79"``, ``"79"`` or ``79`` into a positive integer id."""
    if isinstance(text, int):
        value = text
    else:
        raw = text.strip()
        if raw.upper().startswith("CWE-"):
            raw = raw[4:]
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"not a CWE identifier: {text!r}") from None
    if value <= 0:
        raise ValueError(f"CWE identifiers are positive, got {value}")
    return value


def check_view(view: int) -> int:
    if view == 1008:
        raise UnsupportedView(
            "view 1008 groups weaknesses by category and has no weakness hierarchy; "
            "use views 1003, 1000 or 699"
        )
    if view not in SUPPORTED_VIEWS:
        raise UnsupportedView(f"unsupported view {view}; expected one of {SUPPORTED_VIEWS}")
    return view


@dataclass(frozen=True)
class WeaknessEntry:
    id: int
    abstraction: Abstraction
    name: str = ""
    parents: Mapping[int, frozenset] = field(default_factory=dict)

    @property
    def group(self) -> AbstractionGroup:
        return classify(self)

    def parents_in(self, view: int) -> frozenset:
        return self.parents.get(view, frozenset())


@dataclass(frozen=True)
class Catalog:
    entries: Mapping[int, WeaknessEntry] = field(default_factory=dict)
    views: Mapping[int, frozenset] = field(default_factory=dict)
    release: Mapping[str, str] = field(default_factory=dict)

    def __contains__(self, cwe_id: int) -> bool:
        return cwe_id in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def members(self, view: int) -> frozenset:
        return self.views.get(view, frozenset())

    def relations(self, view: int) -> set[tuple[int, int]]:
        """All ``(child, parent)`` ChildOf pairs recorded under ``view``."""
        pairs = set()
        for entry in self.entries.values():
            for parent in entry.parents_in(view):
                pairs.add((entry.id, parent))
        return pairs

    def to_json(self) -> dict:
        return {
            "release": dict(sorted(self.release.items())),
            "views": {str(v): sorted(m) for v, m in sorted(self.views.items())},
            "entries": [
                {
                    "id": e.id,
                    "cwe": format_cwe(e.id),
                    "name": e.name,
                    "abstraction": e.abstraction.value,
                    "parents": {str(v): sorted(p) for v, p in sorted(e.parents.items())},
                }
                for _, e in sorted(self.entries.items())
            ],
        }


def classify_abstraction(abstraction: Abstraction) -> AbstractionGroup:
    if abstraction is Abstraction.CLASS:
        return AbstractionGroup.CLASS
    return AbstractionGroup.NONCLASS


def classify(entry: WeaknessEntry) -> AbstractionGroup:
    return classify_abstraction(entry.abstraction)


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _children(elem: ET.Element, name: str) -> Iterable[ET.Element]:
    return (child for child in elem if _local(child.tag) == name)


def _parse_abstraction(raw: str | None, cwe_id: int) -> Abstraction:
    try:
        return _ABSTRACTION_ALIASES[(raw or "").strip().lower()]
    except KeyError:
        raise MalformedFile(f"CWE-{cwe_id}: unknown abstraction {raw!r}") from None


def _iter_weakness_elements(root: ET.Element) -> Iterable[ET.Element]:
    for section in root:
        name = _local(section.tag)
        if name == "Weaknesses":
            yield from _children(section, "Weakness")
        elif name == "Compound_Elements":
            # pre-4.0 schema kept compounds in their own section
            yield from _children(section, "Compound_Element")


def parse_view_file(content: bytes | str, view: int) -> Catalog:
    """Parse one CWE List view file into a partial catalog for ``view``."""
    check_view(view)
    try:
        root = ET.fromstring(content)
    except ET.ParseError as exc:
        raise MalformedFile(f"not well-formed XML: {exc}") from exc
    if _local(root.tag) != "Weakness_Catalog":
        raise MalformedFile(f"expected Weakness_Catalog root element, found {_local(root.tag)!r}")

    # the Name attribute carries the view title, so only version/date identify a release
    release = {"version": root.get("Version", ""), "date": root.get("Date", "")}

    declared_views = {
        v.get("ID") for views in _children(root, "Views") for v in _children(views, "View")
    }
    if declared_views and str(view) not in declared_views:
        logger.warning("view %s is not declared in file (declares %s)", view, sorted(declared_views))

    raw: dict[int, tuple[Abstraction, str, set[int]]] = {}
    for elem in _iter_weakness_elements(root):
        if elem.get("Status", "").lower() == "deprecated":
            continue
        try:
            cwe_id = parse_cwe_id(elem.get("ID", ""))
        except ValueError as exc:
            raise MalformedFile(str(exc)) from None
        abstraction = _parse_abstraction(
            elem.get("Abstraction") or ("Compound" if _local(elem.tag) == "Compound_Element" else None),
            cwe_id,
        )
        parents: set[int] = set()
        for rels in _children(elem, "Related_Weaknesses"):
            for rel in _children(rels, "Related_Weakness"):
                if rel.get("Nature") != "ChildOf" or rel.get("View_ID") != str(view):
                    continue
                try:
                    parents.add(parse_cwe_id(rel.get("CWE_ID", "")))
                except ValueError as exc:
                    raise MalformedFile(f"CWE-{cwe_id}: {exc}") from None
        if cwe_id in raw:
            raise MalformedFile(f"CWE-{cwe_id} appears twice in view {view}")
        raw[cwe_id] = (abstraction, elem.get("Name", ""), parents)

    members = frozenset(raw)
    entries = {}
    for cwe_id, (abstraction, name, parents) in raw.items():
        kept = set()
        for parent in sorted(parents):
            if parent == view:
                # the view root itself; removed from the hierarchy
                continue
            if parent == cwe_id:
                warnings.warn(f"CWE-{cwe_id} lists itself as parent in view {view}", DanglingParentWarning, stacklevel=2)
                continue
            if parent not in members:
                warnings.warn(
                    f"view {view}: CWE-{cwe_id} ChildOf CWE-{parent}, which is not a weakness of the view; relation dropped",
                    DanglingParentWarning,
                    stacklevel=2,
                )
                continue
            kept.add(parent)
        entries[cwe_id] = WeaknessEntry(
            id=cwe_id,
            abstraction=abstraction,
            name=name,
            parents={view: frozenset(kept)} if kept else {},
        )
    return Catalog(entries=entries, views={view: members}, release=release)


def load_view_file(path: str | Path, view: int) -> Catalog:
    path = Path(path)
    try:
        content = path.read_bytes()
    except OSError as exc:
        raise MalformedFile(f"{path}: {exc.strerror or exc}") from exc
    try:
        return parse_view_file(content, view)
    except MalformedFile as exc:
        raise MalformedFile(f"{path}: {exc}") from exc


def merge_catalogs(parts: Iterable[Catalog]) -> Catalog:
    """Union of partial catalogs; raises :class:`ConflictingEntry` on abstraction mismatch."""
    parts = list(parts)
    abstractions: dict[int, Abstraction] = {}
    names: dict[int, str] = {}
    parents: dict[int, dict[int, set[int]]] = {}
    views: dict[int, set[int]] = {}
    release: dict[str, str] = {}

    for part in parts:
        for key, value in part.release.items():
            if value and release.get(key) and release[key] != value:
                logger.warning("merging catalogs from different releases: %s %r vs %r", key, release[key], value)
            if value and not release.get(key):
                release[key] = value
        for view, members in part.views.items():
            views.setdefault(view, set()).update(members)
        for cwe_id, entry in part.entries.items():
            known = abstractions.setdefault(cwe_id, entry.abstraction)
            if known is not entry.abstraction:
                raise ConflictingEntry(
                    f"CWE-{cwe_id} has abstraction {known.value} in one part and {entry.abstraction.value} in another"
                )
            if entry.name and not names.get(cwe_id):
                names[cwe_id] = entry.name
            names.setdefault(cwe_id, "")
            per_view = parents.setdefault(cwe_id, {})
            for view, ps in entry.parents.items():
                per_view.setdefault(view, set()).update(ps)

    entries = {
        cwe_id: WeaknessEntry(
            id=cwe_id,
            abstraction=abstractions[cwe_id],
            name=names[cwe_id],
            parents={v: frozenset(ps) for v, ps in sorted(parents[cwe_id].items()) if ps},
        )
        for cwe_id in sorted(abstractions)
    }
    return Catalog(
        entries=entries,
        views={v: frozenset(m) for v, m in sorted(views.items())},
        release={k: release.get(k, "") for k in ("version", "date")},
    )


def load_catalog(paths: Mapping[int, str | Path]) -> Catalog:
    """Parse one file per view and merge them."""
    return merge_catalogs(load_view_file(path, view) for view, path in sorted(paths.items()))
