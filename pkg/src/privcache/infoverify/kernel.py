"""Backend selection for the enumeration kernel.

The Cython build is used when it was compiled; otherwise the numpy version
is used.  ``PRIVCACHE_KERNEL=numpy`` forces the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernel_py
from .anf import QuadraticMap

try:
    from . import _kernel as _kernel_c
except ImportError:  # extension not built
    _kernel_c = None

_BACKENDS = {"numpy": _kernel_py}
if _kernel_c is not None:
    _BACKENDS["cython"] = _kernel_c

BACKEND = "cython" if _kernel_c is not None and os.environ.get("PRIVCACHE_KERNEL") != "numpy" else "numpy"

CHUNK = 1 << 20


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def evaluate_all(qmap: QuadraticMap, backend: str | None = None) -> np.ndarray:
    """Codes of ``qmap`` at every input ``0 .. 2**n_vars - 1``, as uint64."""
    impl = _BACKENDS[backend or BACKEND]
    total = 1 << qmap.n_vars
    parts = []
    for start in range(0, total, CHUNK):
        stop = min(start + CHUNK, total)
        parts.append(
            impl.evaluate_range(
                np.uint64(qmap.const), qmap.lin, qmap.qptr, qmap.qvar, qmap.qmask, np.uint64(start), np.uint64(stop)
            )
        )
    return np.concatenate(parts) if len(parts) > 1 else parts[0]
