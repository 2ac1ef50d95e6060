"""Vectorised numpy twin of the compiled kernel."""

from __future__ import annotations

import numpy as np

_ONE = np.uint64(1)


def _parity(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).astype(np.uint64) & _ONE


def evaluate_range(const_code, lin, qptr, qvar, qmask, start, stop):
    x = np.arange(start, stop, dtype=np.uint64)
    code = np.full(x.shape, const_code, dtype=np.uint64)
    for o in range(lin.shape[0]):
        b = _parity(x & lin[o])
        for t in range(qptr[o], qptr[o + 1]):
            b ^= ((x >> np.uint64(qvar[t])) & _ONE) & _parity(x & qmask[t])
        code ^= b << np.uint64(o)
    return code
