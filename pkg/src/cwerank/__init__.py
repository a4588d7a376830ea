"""Composite CWE weakness DAGs adorned with NVD data, significance metrics and rank distances."""

from ._backend import BACKEND
from .catalog import (
    Abstraction,
    AbstractionGroup,
    Catalog,
    WeaknessEntry,
    classify,
    load_catalog,
    merge_catalogs,
    parse_view_file,
)
from .graph import (
    EdgeKind,
    EdgeProvenance,
    UnifiedGraph,
    WeaknessDag,
    augment_direct_edges,
    augment_indirect_edges,
    build_base_view,
    build_composite_dag,
    build_unified_graph,
    export_dot,
)
from .metrics import MetricKind, NormalizationScope, Ranking, compute_records, rank, top
from .nvd import VulnSet, VulnVector, filter_year, load_feeds, parse_feed, restrict_to_view
from .propagate import AdornedDag, Mode, adorn, node_count, propagate
from .rankdist import compare_matrix, kendall_tau, random_baseline, spearman_footrule

__version__ = "0.1.0"
