"""Distances between rankings and random-ranking baselines.

Kendall's tau distance counts element pairs ordered oppositely by the two
lists.  Spearman's footrule sums each element's absolute displacement.
Both satisfy K <= F <= 2K (Diaconis and Graham).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from . import _backend
from .errors import MismatchedLists

logger = logging.getLogger(__name__)

BLOCK_TRIALS = 1000
DEFAULT_SEED = 20191231


@dataclass(frozen=True)
class DistanceReport:
    kendall: int
    footrule: int


@dataclass(frozen=True)
class BaselineResult:
    n: int
    trials: int
    seed: int
    mean_kendall: float
    mean_footrule: float
    backend: str = ""

    @property
    def kendall(self) -> int:
        return round(self.mean_kendall)

    @property
    def footrule(self) -> int:
        return round(self.mean_footrule)

    @property
    def expected_kendall(self) -> float:
        return self.n * (self.n - 1) / 4

    @property
    def expected_footrule(self) -> float:
        return (self.n * self.n - 1) / 3

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "kendall": self.kendall,
            "footrule": self.footrule,
            "mean_kendall": self.mean_kendall,
            "mean_footrule": self.mean_footrule,
            "expected_kendall": self.expected_kendall,
            "expected_footrule": self.expected_footrule,
        }


def _ids(ranking) -> list:
    return ranking.ids() if hasattr(ranking, "ids") else list(ranking)


def positions(l1: Sequence[Hashable], l2: Sequence[Hashable]) -> np.ndarray:
    """``p[k]`` = position in ``l2`` of ``l1[k]``; validates the pair."""
    l1, l2 = _ids(l1), _ids(l2)
    if len(l1) != len(l2):
        raise MismatchedLists(f"rankings differ in length: {len(l1)} vs {len(l2)}")
    where = {x: k for k, x in enumerate(l2)}
    if len(where) != len(l2) or len(set(l1)) != len(l1):
        raise MismatchedLists("rankings contain repeated elements")
    try:
        return np.fromiter((where[x] for x in l1), dtype=np.int64, count=len(l1))
    except KeyError as exc:
        raise MismatchedLists(f"element {exc.args[0]!r} is missing from the second ranking") from None


def kendall_tau(l1, l2, backend: str | None = None) -> int:
    return _backend.get(backend).inversions(positions(l1, l2))


def spearman_footrule(l1, l2, backend: str | None = None) -> int:
    return _backend.get(backend).displacement(positions(l1, l2))


def distances(l1, l2, backend: str | None = None) -> DistanceReport:
    p = positions(l1, l2)
    kernels = _backend.get(backend)
    return DistanceReport(kendall=kernels.inversions(p), footrule=kernels.displacement(p))


def random_permutations(n: int, trials: int, seed: int, start: int = 0) -> np.ndarray:
    """Uniform permutations of ``range(n)`` for trials ``start .. start + trials``.

    Trials are drawn in blocks of ``BLOCK_TRIALS``; block ``b`` uses a
    generator seeded with ``(seed, b)`` so any split of the blocks across
    workers yields the same rows.  ``start`` must be a multiple of the block size.
    """
    if start % BLOCK_TRIALS:
        raise ValueError(f"start must be a multiple of {BLOCK_TRIALS}")
    out = np.empty((trials, n), dtype=np.int64)
    base = np.arange(n, dtype=np.int64)
    for lo in range(0, trials, BLOCK_TRIALS):
        hi = min(lo + BLOCK_TRIALS, trials)
        rng = np.random.default_rng([seed, (start + lo) // BLOCK_TRIALS])
        out[lo:hi] = rng.permuted(np.broadcast_to(base, (hi - lo, n)), axis=1)
    return out


def random_baseline(n: int, trials: int = 100_000, seed: int = DEFAULT_SEED, backend: str | None = None) -> BaselineResult:
    """Mean K and F between a fixed list and ``trials`` uniformly shuffled copies."""
    if n < 2:
        raise ValueError("baseline needs lists of length >= 2")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    kernels = _backend.get(backend)
    chunk = 10 * BLOCK_TRIALS
    total_k = total_f = 0
    for lo in range(0, trials, chunk):
        perms = random_permutations(n, min(chunk, trials - lo), seed, start=lo)
        k, f = kernels.batch_distances(perms)
        total_k += int(k.sum())
        total_f += int(f.sum())
    return BaselineResult(
        n=n,
        trials=trials,
        seed=seed,
        mean_kendall=total_k / trials,
        mean_footrule=total_f / trials,
        backend=backend or _backend.BACKEND,
    )


def restrict_common(rankings: Sequence) -> tuple[list[list], list]:
    """Restrict every ranking to the elements all of them share, keeping order."""
    lists = [_ids(r) for r in rankings]
    if not lists:
        return [], []
    common = set(lists[0]).intersection(*lists[1:])
    dropped = sorted(set().union(*lists) - common)
    if dropped:
        logger.info("dropping %d elements not present in every ranking: %s", len(dropped), dropped)
    return [[x for x in lst if x in common] for lst in lists], dropped


@dataclass
class CompareMatrix:
    labels: list[str]
    kendall: list[list[int]]
    footrule: list[list[int]]
    dropped: list = field(default_factory=list)
    length: int = 0

    def report(self, a: str, b: str) -> DistanceReport:
        i, j = self.labels.index(a), self.labels.index(b)
        return DistanceReport(self.kendall[i][j], self.footrule[i][j])

    def to_json(self) -> dict:
        return {
            "labels": self.labels,
            "length": self.length,
            "dropped": self.dropped,
            "kendall": self.kendall,
            "footrule": self.footrule,
            "definitions": {
                "kendall": "number of element pairs ordered oppositely in the two rankings",
                "footrule": "sum over elements of the absolute difference of their positions",
            },
        }

    def rows(self) -> list[list]:
        out = [["a", "b", "kendall", "footrule"]]
        for i, a in enumerate(self.labels):
            for j, b in enumerate(self.labels):
                out.append([a, b, self.kendall[i][j], self.footrule[i][j]])
        return out


def compare_matrix(rankings: Sequence, labels: Sequence[str] | None = None, backend: str | None = None) -> CompareMatrix:
    rankings = list(rankings)
    if labels is None:
        labels = [getattr(r, "label", str(k)) for k, r in enumerate(rankings)]
    lists, dropped = restrict_common(rankings)
    size = len(lists)
    kendall = [[0] * size for _ in range(size)]
    footrule = [[0] * size for _ in range(size)]
    for i in range(size):
        for j in range(i + 1, size):
            rep = distances(lists[i], lists[j], backend)
            kendall[i][j] = kendall[j][i] = rep.kendall
            footrule[i][j] = footrule[j][i] = rep.footrule
    return CompareMatrix(
        labels=list(labels),
        kendall=kendall,
        footrule=footrule,
        dropped=dropped,
        length=len(lists[0]) if lists else 0,
    )
