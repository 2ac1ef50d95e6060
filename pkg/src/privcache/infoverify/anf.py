"""Degree-2 algebraic normal form of bit-valued maps over GF(2).

Every observable of the private scheme is at most quadratic in the random
bits (a coefficient times a library bit, XOR a pad).  Such a map is fixed
by its values at ``0``, at every unit vector and at every pair of unit
vectors, so it can be recovered from ``1 + V + V(V-1)/2`` black-box calls
and then evaluated cheaply over all ``2**V`` inputs.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable

import numpy as np


class DegreeError(RuntimeError):
    """The probed map disagrees with its quadratic interpolant."""


@dataclass(frozen=True)
class QuadraticMap:
    """``code(x) = const ^ sum_o bit_o(x) << o`` with

    ``bit_o(x) = parity(x & lin[o]) ^ XOR_t [x_{qvar[t]}] parity(x & qmask[t])``
    over the terms ``t`` in ``qptr[o]:qptr[o+1]``.
    """

    n_vars: int
    width: int
    const: int
    lin: np.ndarray  # uint64[width]
    qptr: np.ndarray  # int64[width + 1]
    qvar: np.ndarray  # int32[n_terms]
    qmask: np.ndarray  # uint64[n_terms]

    def evaluate(self, x: int) -> int:
        code = self.const
        for o in range(self.width):
            b = bin(x & int(self.lin[o])).count("1") & 1
            for t in range(self.qptr[o], self.qptr[o + 1]):
                if (x >> int(self.qvar[t])) & 1:
                    b ^= bin(x & int(self.qmask[t])).count("1") & 1
            code ^= b << o
        return code


def interpolate(fn: Callable[[int], int], n_vars: int, width: int) -> QuadraticMap:
    """Recover the quadratic ANF of ``fn`` from its values on weight <= 2 inputs."""
    if width > 64:
        raise ValueError(f"observation of {width} bits does not fit one 64-bit code")
    c = fn(0)
    single = [fn(1 << i) ^ c for i in range(n_vars)]
    lin = [0] * width
    for i, code in enumerate(single):
        for o in range(width):
            if (code >> o) & 1:
                lin[o] |= 1 << i
    # quad[o][a] = mask of partners b > a with an x_a x_b term in output o
    quad: list[dict[int, int]] = [{} for _ in range(width)]
    for a in range(n_vars):
        for b in range(a + 1, n_vars):
            code = fn((1 << a) | (1 << b)) ^ single[a] ^ single[b] ^ c
            o = 0
            while code:
                if code & 1:
                    quad[o][a] = quad[o].get(a, 0) | (1 << b)
                code >>= 1
                o += 1
    qptr, qvar, qmask = [0], [], []
    for o in range(width):
        for a in sorted(quad[o]):
            qvar.append(a)
            qmask.append(quad[o][a])
        qptr.append(len(qvar))
    return QuadraticMap(
        n_vars,
        width,
        c,
        np.array(lin, dtype=np.uint64),
        np.array(qptr, dtype=np.int64),
        np.array(qvar, dtype=np.int32),
        np.array(qmask, dtype=np.uint64),
    )


def validate(fn: Callable[[int], int], qmap: QuadraticMap, samples: int, rng: random.Random) -> None:
    """Compare ``fn`` and ``qmap`` on random inputs; raise on any mismatch."""
    for _ in range(samples):
        x = rng.getrandbits(qmap.n_vars) if qmap.n_vars else 0
        want, got = fn(x), qmap.evaluate(x)
        if want != got:
            raise DegreeError(f"map is not quadratic: input {x:#x} gives {want:#x}, interpolant {got:#x}")
