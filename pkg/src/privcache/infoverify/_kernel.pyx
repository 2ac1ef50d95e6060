# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation of a quadratic GF(2) map over a range of inputs."""

import numpy as np

from libc.stdint cimport int32_t, int64_t, uint64_t


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def evaluate_range(
    uint64_t const_code,
    const uint64_t[::1] lin,
    const int64_t[::1] qptr,
    const int32_t[::1] qvar,
    const uint64_t[::1] qmask,
    uint64_t start,
    uint64_t stop,
):
    cdef Py_ssize_t n = <Py_ssize_t>(stop - start)
    out = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] res = out
    cdef Py_ssize_t width = lin.shape[0]
    cdef Py_ssize_t i, o, t
    cdef uint64_t x, code, b
    with nogil:
        for i in range(n):
            x = start + i
            code = const_code
            for o in range(width):
                b = __builtin_popcountll(x & lin[o]) & 1
                for t in range(qptr[o], qptr[o + 1]):
                    if (x >> qvar[t]) & 1:
                        b ^= __builtin_popcountll(x & qmask[t]) & 1
                code ^= b << o
            res[i] = code
    return out
