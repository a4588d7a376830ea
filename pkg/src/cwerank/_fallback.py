"""Numpy implementations of the rank-distance kernels in ``_kernels.pyx``."""

import numpy as np

# caps the boolean comparison cube built by batch_distances
_MAX_CELLS = 1 << 24


def inversions(p) -> int:
    p = np.asarray(p, dtype=np.int64)
    n = p.shape[0]
    if n < 2:
        return 0
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    return int(np.count_nonzero((p[:, None] > p[None, :]) & upper))


def displacement(p) -> int:
    p = np.asarray(p, dtype=np.int64)
    return int(np.abs(p - np.arange(p.shape[0])).sum())


def batch_distances(perms):
    perms = np.ascontiguousarray(perms, dtype=np.int64)
    rows, n = perms.shape
    footrule = np.abs(perms - np.arange(n)).sum(axis=1)
    kendall = np.zeros(rows, dtype=np.int64)
    if n < 2:
        return kendall, footrule
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    step = max(1, _MAX_CELLS // (n * n))
    for lo in range(0, rows, step):
        block = perms[lo : lo + step]
        swapped = (block[:, :, None] > block[:, None, :]) & upper
        kendall[lo : lo + step] = swapped.sum(axis=(1, 2))
    return kendall, footrule
