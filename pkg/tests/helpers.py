"""Small builders shared by the test modules."""

from cwerank.catalog import Abstraction, Catalog, WeaknessEntry
from cwerank.graph import EdgeProvenance, WeaknessDag
from cwerank.nvd import VulnSet, VulnVector


def make_catalog(abstractions, relations, members=None):
    """``abstractions``: {id: Abstraction or str}; ``relations``: {view: [(child, parent)]}.

    View membership defaults to the endpoints of each view's relations plus,
    for view 1003, every id whose key is listed in ``members[1003]``.
    """
    members = {v: set(m) for v, m in (members or {}).items()}
    for view, pairs in relations.items():
        bucket = members.setdefault(view, set())
        for c, p in pairs:
            bucket.update((c, p))
    parents = {}
    for view, pairs in relations.items():
        for c, p in pairs:
            parents.setdefault(c, {}).setdefault(view, set()).add(p)
    entries = {
        i: WeaknessEntry(
            id=i,
            abstraction=Abstraction(a) if isinstance(a, str) else a,
            name=f"W{i}",
            parents={v: frozenset(ps) for v, ps in parents.get(i, {}).items()},
        )
        for i, a in abstractions.items()
    }
    return Catalog(entries=entries, views={v: frozenset(m) for v, m in members.items()})


def make_dag(abstractions, edges):
    return WeaknessDag(
        nodes=frozenset(abstractions),
        edges={e: EdgeProvenance.base() for e in sorted(edges)},
        abstractions={i: Abstraction(a) if isinstance(a, str) else a for i, a in abstractions.items()},
    )


def vec(cve_id, cwes, base=5.0, exploit=2.0, impact=3.0, year=2019):
    from datetime import datetime, timezone

    return VulnVector(
        cve_id=cve_id,
        published=datetime(year, 6, 1, tzinfo=timezone.utc),
        base_score=base,
        exploitability=exploit,
        impact=impact,
        cwes=frozenset(cwes),
    )


def vulnset(vectors):
    return VulnSet(vectors={v.cve_id: v for v in vectors})
