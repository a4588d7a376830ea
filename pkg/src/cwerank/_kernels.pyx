# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled rank-distance kernels.

Every function takes permutations as int64 arrays where ``p[k]`` is the
position, in the second list, of the element at position ``k`` of the first.
``_fallback.py`` provides the same three functions in numpy.
"""

import numpy as np

from libc.stdlib cimport free, malloc

ctypedef long long i64


cdef i64 _count_inversions(i64* a, i64* buf, Py_ssize_t n) noexcept nogil:
    # bottom-up merge sort; sorts ``a`` in place
    cdef i64 total = 0
    cdef Py_ssize_t width = 1, lo, mid, hi, i, j, k
    while width < n:
        lo = 0
        while lo < n - width:
            mid = lo + width
            hi = mid + width
            if hi > n:
                hi = n
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if a[i] <= a[j]:
                    buf[k] = a[i]
                    i += 1
                else:
                    buf[k] = a[j]
                    total += mid - i
                    j += 1
                k += 1
            while i < mid:
                buf[k] = a[i]
                i += 1
                k += 1
            while j < hi:
                buf[k] = a[j]
                j += 1
                k += 1
            for k in range(lo, hi):
                a[k] = buf[k]
            lo += 2 * width
        width *= 2
    return total


cdef inline i64 _displacement(const i64[::1] p) noexcept nogil:
    cdef i64 total = 0, d
    cdef Py_ssize_t k
    for k in range(p.shape[0]):
        d = p[k] - k
        total += d if d >= 0 else -d
    return total


def inversions(const i64[::1] p):
    cdef Py_ssize_t n = p.shape[0], k
    if n < 2:
        return 0
    cdef i64* a = <i64*> malloc(2 * n * sizeof(i64))
    if a == NULL:
        raise MemoryError()
    cdef i64 total
    try:
        for k in range(n):
            a[k] = p[k]
        with nogil:
            total = _count_inversions(a, a + n, n)
    finally:
        free(a)
    return int(total)


def displacement(const i64[::1] p):
    return int(_displacement(p))


def batch_distances(const i64[:, ::1] perms):
    """Kendall and footrule distance of every row against the identity."""
    cdef Py_ssize_t rows = perms.shape[0], n = perms.shape[1], r, k
    kendall = np.zeros(rows, dtype=np.int64)
    footrule = np.zeros(rows, dtype=np.int64)
    cdef i64[::1] kv = kendall
    cdef i64[::1] fv = footrule
    if n == 0:
        return kendall, footrule
    cdef i64* a = <i64*> malloc(2 * n * sizeof(i64))
    if a == NULL:
        raise MemoryError()
    try:
        with nogil:
            for r in range(rows):
                fv[r] = _displacement(perms[r])
                for k in range(n):
                    a[k] = perms[r, k]
                kv[r] = _count_inversions(a, a + n, n)
    finally:
        free(a)
    return kendall, footrule
