"""Core domain types: instance parameters, cyclic topology, bit vectors,
libraries and identically-uncoded subfile partitions."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

Subset = tuple[int, ...]


class ConfigError(ValueError):
    """Raised for parameter combinations a scheme or mode cannot handle."""


def mod1(b: int, a: int) -> int:
    """Return the unique ``r`` in ``[1..a]`` with ``r == b (mod a)``.

    Works for any integer ``b`` (including ``b <= 0``); ``mod1(a, a) == a``.
    """
    if a <= 0:
        raise ValueError(f"modulus must be positive, got {a}")
    return (b - 1) % a + 1


def subset(items: Iterable[int]) -> Subset:
    """Canonical form of a node subset: sorted tuple without duplicates."""
    return tuple(sorted(set(items)))


def format_subset(q: Subset) -> str:
    return "{" + ",".join(str(i) for i in q) + "}"


@dataclass(frozen=True)
class InstanceParams:
    K: int
    L: int
    N: int
    B: int

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError(f"K must be positive, got {self.K}")
        if not 1 <= self.L <= self.K:
            raise ValueError(f"need 1 <= L <= K, got L={self.L}, K={self.K}")
        if self.N < 1:
            raise ValueError(f"N must be positive, got {self.N}")
        if self.B < 1:
            raise ValueError(f"B must be positive, got {self.B}")

    @property
    def users(self) -> range:
        return range(1, self.K + 1)

    @property
    def pad_mode_allowed(self) -> bool:
        # strict L < K/2 + 1, written without fractions
        return 2 * self.L < self.K + 2

    def window(self, k: int) -> tuple[int, ...]:
        return window(k, self)


def window(k: int, params: InstanceParams) -> tuple[int, ...]:
    """Cache-nodes reachable by user ``k``, in cyclic order starting at ``k``."""
    if not 1 <= k <= params.K:
        raise ValueError(f"user index {k} outside [1, {params.K}]")
    return tuple(mod1(k + i, params.K) for i in range(params.L))


@dataclass(frozen=True)
class BitVector:
    """Fixed-length vector over GF(2), packed into a Python int.

    Bit ``i`` of the vector is ``(value >> i) & 1``.
    """

    value: int
    length: int

    def __post_init__(self) -> None:
        if self.length < 0:
            raise ValueError("negative length")
        if self.value < 0 or self.value >> self.length:
            raise ValueError(f"value does not fit in {self.length} bits")

    @classmethod
    def zeros(cls, length: int) -> BitVector:
        return cls(0, length)

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> BitVector:
        value = 0
        for i, b in enumerate(bits):
            if b not in (0, 1):
                raise ValueError(f"bit {i} is {b!r}, expected 0 or 1")
            value |= b << i
        return cls(value, len(bits))

    @classmethod
    def from_string(cls, s: str) -> BitVector:
        """Parse a string of '0'/'1' characters, first character is bit 0."""
        return cls.from_bits([int(c) for c in s])

    @classmethod
    def random(cls, length: int, rng: random.Random) -> BitVector:
        return cls(rng.getrandbits(length) if length else 0, length)

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return (self.value >> i) & 1

    def __xor__(self, other: BitVector) -> BitVector:
        if self.length != other.length:
            raise ValueError(f"XOR of vectors of length {self.length} and {other.length}")
        return BitVector(self.value ^ other.value, self.length)

    def bits(self) -> list[int]:
        return [(self.value >> i) & 1 for i in range(self.length)]

    def slice(self, offset: int, size: int) -> BitVector:
        if offset < 0 or size < 0 or offset + size > self.length:
            raise ValueError(f"slice [{offset}, {offset + size}) outside length {self.length}")
        return BitVector((self.value >> offset) & ((1 << size) - 1), size)

    def to_string(self) -> str:
        return "".join(str(b) for b in self.bits())

    def __str__(self) -> str:
        return self.to_string()


def xor_all(vectors: Iterable[BitVector], length: int) -> BitVector:
    acc = 0
    for v in vectors:
        if v.length != length:
            raise ValueError(f"expected length {length}, got {v.length}")
        acc ^= v.value
    return BitVector(acc, length)


def concat(vectors: Iterable[BitVector]) -> BitVector:
    value, length = 0, 0
    for v in vectors:
        value |= v.value << length
        length += v.length
    return BitVector(value, length)


@dataclass(frozen=True)
class Library:
    files: tuple[BitVector, ...]

    def __post_init__(self) -> None:
        if not self.files:
            raise ValueError("library needs at least one file")
        lengths = {f.length for f in self.files}
        if len(lengths) != 1:
            raise ValueError(f"files have differing lengths {sorted(lengths)}")

    @classmethod
    def random(cls, N: int, B: int, rng: random.Random) -> Library:
        return cls(tuple(BitVector.random(B, rng) for _ in range(N)))

    @property
    def N(self) -> int:
        return len(self.files)

    @property
    def B(self) -> int:
        return self.files[0].length

    def file(self, n: int) -> BitVector:
        """File ``W_n`` for ``n`` in ``[1, N]``."""
        if not 1 <= n <= self.N:
            raise ValueError(f"file index {n} outside [1, {self.N}]")
        return self.files[n - 1]


@dataclass(frozen=True)
class PartitionSpec:
    """Subfile partition shared by every file.

    ``parts`` is a tuple of ``(Q, size)`` sorted lexicographically by ``Q``;
    offsets are assigned in that order.
    """

    parts: tuple[tuple[Subset, int], ...]
    _offsets: Mapping[Subset, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        labels = [q for q, _ in self.parts]
        if labels != sorted(labels) or len(set(labels)) != len(labels):
            raise ValueError("partition labels must be distinct and sorted")
        offsets, off = {}, 0
        for q, size in self.parts:
            if tuple(sorted(set(q))) != q:
                raise ValueError(f"label {q} is not canonical")
            if size < 0:
                raise ValueError(f"negative part size for {q}")
            offsets[q] = off
            off += size
        object.__setattr__(self, "_offsets", offsets)

    @classmethod
    def from_sizes(cls, sizes: Mapping[Subset, int]) -> PartitionSpec:
        return cls(tuple(sorted((subset(q), s) for q, s in sizes.items())))

    @property
    def labels(self) -> tuple[Subset, ...]:
        return tuple(q for q, _ in self.parts)

    @property
    def total(self) -> int:
        return sum(s for _, s in self.parts)

    def size(self, q: Subset) -> int:
        return dict(self.parts)[q]

    def offset(self, q: Subset) -> int:
        return self._offsets[q]

    def split(self, f: BitVector) -> dict[Subset, BitVector]:
        if f.length != self.total:
            raise ValueError(f"file length {f.length} != partition total {self.total}")
        return {q: f.slice(self._offsets[q], s) for q, s in self.parts}

    def subfile(self, f: BitVector, q: Subset) -> BitVector:
        return f.slice(self._offsets[q], self.size(q))

    def assemble(self, pieces: Mapping[Subset, BitVector]) -> BitVector:
        missing = [q for q in self.labels if q not in pieces]
        if missing:
            raise ValueError(f"missing parts {missing}")
        return concat(pieces[q] for q in self.labels)


def blocked_sets(k: int, partition: PartitionSpec, params: InstanceParams) -> tuple[Subset, ...]:
    """Labels of the parts user ``k`` cannot read from its window."""
    w = set(window(k, params))
    return tuple(q for q in partition.labels if not w.intersection(q))


def blocked_bits(k: int, partition: PartitionSpec, params: InstanceParams) -> int:
    return sum(partition.size(q) for q in blocked_sets(k, partition, params))


@dataclass(frozen=True)
class DemandVector:
    d: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.d:
            raise ValueError("empty demand vector")

    def validate(self, params: InstanceParams) -> DemandVector:
        if len(self.d) != params.K:
            raise ValueError(f"demand vector has {len(self.d)} entries, expected K={params.K}")
        bad = [n for n in self.d if not 1 <= n <= params.N]
        if bad:
            raise ValueError(f"demands {bad} outside [1, {params.N}]")
        return self

    def __getitem__(self, k: int) -> int:
        """Demand of user ``k`` (1-based)."""
        return self.d[k - 1]

    def __iter__(self):
        return iter(self.d)

    def others(self, k: int) -> tuple[int, ...]:
        return self.d[: k - 1] + self.d[k:]

    def __str__(self) -> str:
        return ",".join(map(str, self.d))


def parse_demands(text: str) -> DemandVector:
    try:
        return DemandVector(tuple(int(x) for x in text.split(",")))
    except ValueError as exc:
        raise ValueError(f"bad demand list {text!r}") from exc
