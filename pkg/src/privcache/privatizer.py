"""Demand-private transformation of a base scheme.

Each user ``k`` gets a private key ``S_{k,Q}``: the XOR of the ``Q``-subfiles
of the files selected by a random coefficient vector ``p_k``.  The key is
split across cache-nodes so that only user ``k`` can rebuild it, either as
a one-time-padded value plus its pad ("pad" mode) or as ``omega`` additive
shares ("share" mode).  Delivery then serves each user the virtual file
``W_{d_k} xor (combination selected by p_k)`` through the unchanged base
scheme, announcing only the flipped coefficient vectors ``q_k``.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

from .model import (
    BitVector,
    ConfigError,
    DemandVector,
    InstanceParams,
    Library,
    PartitionSpec,
    Subset,
    blocked_sets,
    concat,
    format_subset,
    mod1,
    window,
    xor_all,
)
from .schemes import BaseScheme, Packet

MODES = ("none", "pad", "share")
KEY_FORMAT = "privcache-keys"
KEY_FORMAT_VERSION = 1

# key item labels: ("mask", k, Q), ("pad", k, Q), ("share", k, Q, h)
KeyLabel = tuple


class DecodeError(RuntimeError):
    """A user could not rebuild its file from what it can see."""


# ---------- omega and additive sharing


def omega(K: int, L: int) -> tuple[int, tuple[int, ...]]:
    """Smallest node set inside user 1's window that no other window covers.

    Returns ``(size, positions)`` with the lexicographically least witness.
    Raises :class:`ConfigError` if no such set exists (e.g. ``L == K > 1``).
    """
    if not 1 <= L <= K:
        raise ValueError(f"need 1 <= L <= K, got K={K}, L={L}")
    others = [{mod1(k + i, K) for i in range(L)} for k in range(2, K + 1)]
    for size in range(1, L + 1):
        for cand in itertools.combinations(range(1, L + 1), size):
            if all(not set(cand) <= w for w in others):
                return size, cand
    raise ConfigError(f"no share placement isolates user keys for K={K}, L={L}")


def share_positions(k: int, positions: Sequence[int], K: int) -> tuple[int, ...]:
    """Nodes holding shares ``1..omega`` of user ``k``'s keys."""
    return tuple(mod1(j + k - 1, K) for j in positions)


def split_with(secret: BitVector, masks: Sequence[BitVector]) -> list[BitVector]:
    """Additive sharing with caller-supplied random shares ``1..omega-1``."""
    last = secret
    for m in masks:
        last = last ^ m
    return list(masks) + [last]


def share_split(secret: BitVector, omega: int, rng: random.Random) -> list[BitVector]:
    """Split ``secret`` into ``omega`` XOR shares; all of them are needed."""
    if omega < 1:
        raise ValueError(f"omega must be >= 1, got {omega}")
    masks = [BitVector.random(secret.length, rng) for _ in range(omega - 1)]
    return split_with(secret, masks)


def share_reconstruct(shares: Sequence[BitVector], omega: int | None = None) -> BitVector:
    if not shares:
        raise ValueError("no shares given")
    if omega is not None and len(shares) != omega:
        raise ValueError(f"expected {omega} shares, got {len(shares)}")
    return xor_all(shares, shares[0].length)


# ---------- keys


def virtual_demand(d_k: int, p_k: Sequence[int]) -> tuple[int, ...]:
    """Flip coordinate ``d_k`` (1-based) of ``p_k``."""
    if not 1 <= d_k <= len(p_k):
        raise ValueError(f"demand {d_k} outside [1, {len(p_k)}]")
    q = list(p_k)
    q[d_k - 1] ^= 1
    return tuple(q)


def compute_key(q: Subset, library: Library, partition: PartitionSpec, coeffs: Sequence[int]) -> BitVector:
    """XOR of the ``q``-subfiles of the files whose coefficient is 1."""
    if len(coeffs) != library.N:
        raise ValueError(f"coefficient vector has {len(coeffs)} entries, library has {library.N} files")
    size = partition.size(q)
    return xor_all((partition.subfile(library.file(n), q) for n, c in enumerate(coeffs, 1) if c), size)


@dataclass(frozen=True)
class KeyLayout:
    """Public part of the key setup: what is stored where, never the values."""

    mode: str
    omega: int
    positions: tuple[int, ...]
    blocked: Mapping[int, tuple[Subset, ...]]
    sizes: Mapping[Subset, int]

    def items(self) -> Iterator[tuple[KeyLabel, int]]:
        """Random key items in generation order ``(k, Q, h)``, with bit lengths."""
        if self.mode == "none":
            return
        for k in sorted(self.blocked):
            for q in self.blocked[k]:
                if self.mode == "pad":
                    yield ("pad", k, q), self.sizes[q]
                else:
                    for h in range(1, self.omega):
                        yield ("share", k, q, h), self.sizes[q]


def key_layout(base: BaseScheme, params: InstanceParams, mode: str) -> KeyLayout:
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; choose from {MODES}")
    partition = base.partition(params)
    blocked = {k: blocked_sets(k, partition, params) for k in params.users}
    sizes = dict(partition.parts)
    if mode == "none":
        return KeyLayout(mode, 0, (), blocked, sizes)
    if mode == "pad":
        if not params.pad_mode_allowed:
            raise ConfigError(
                f"pad mode needs L < K/2 + 1 (got K={params.K}, L={params.L}); use share mode"
            )
        return KeyLayout(mode, 2, (), blocked, sizes)
    w, positions = omega(params.K, params.L)
    return KeyLayout(mode, w, positions, blocked, sizes)


@dataclass(frozen=True)
class KeyMaterial:
    layout: KeyLayout
    p: tuple[tuple[int, ...], ...]
    randomness: Mapping[KeyLabel, BitVector] = field(default_factory=dict)
    seed: int | None = None

    @property
    def mode(self) -> str:
        return self.layout.mode

    @property
    def omega(self) -> int:
        return self.layout.omega

    def p_vector(self, k: int) -> tuple[int, ...]:
        return self.p[k - 1]

    def pad(self, k: int, q: Subset) -> BitVector:
        return self.randomness[("pad", k, q)]

    def share_masks(self, k: int, q: Subset) -> list[BitVector]:
        return [self.randomness[("share", k, q, h)] for h in range(1, self.omega)]

    def to_json(self) -> str:
        data = {
            "format": KEY_FORMAT,
            "version": KEY_FORMAT_VERSION,
            "seed": self.seed,
            "mode": self.mode,
            "omega": self.omega,
            "positions": list(self.layout.positions),
            "p": ["".join(map(str, v)) for v in self.p],
            "randomness": [
                {"label": [label[0], label[1], list(label[2]), *label[3:]], "bits": bv.to_string()}
                for label, bv in self.randomness.items()
            ],
        }
        return json.dumps(data, indent=2)

    @classmethod
    def from_json(cls, text: str, base: BaseScheme, params: InstanceParams) -> KeyMaterial:
        data = json.loads(text)
        if data.get("format") != KEY_FORMAT or data.get("version") != KEY_FORMAT_VERSION:
            raise ValueError(f"not a {KEY_FORMAT} v{KEY_FORMAT_VERSION} document")
        layout = key_layout(base, params, data["mode"])
        if layout.omega != data["omega"] or list(layout.positions) != data["positions"]:
            raise ValueError("key document does not match this scheme and parameters")
        p = tuple(tuple(int(c) for c in s) for s in data["p"])
        randomness = {}
        for item in data["randomness"]:
            raw = item["label"]
            label = (raw[0], raw[1], tuple(raw[2]), *raw[3:])
            randomness[label] = BitVector.from_string(item["bits"])
        keys = cls(layout, p, randomness, data["seed"])
        keys.check(params)
        return keys

    def check(self, params: InstanceParams) -> None:
        if len(self.p) != params.K or any(len(v) != params.N for v in self.p):
            raise ValueError("coefficient vectors do not match (K, N)")
        expected = dict(self.layout.items())
        if set(expected) != set(self.randomness):
            raise ValueError("key randomness does not match the layout")
        for label, length in expected.items():
            if self.randomness[label].length != length:
                raise ValueError(f"key item {label} has wrong length")


def generate_keys(base: BaseScheme, params: InstanceParams, seed: int, mode: str = "pad") -> KeyMaterial:
    """Draw coefficient vectors, then pads or shares, from one seeded stream.

    Mode ``"none"`` gives the non-private baseline: all-zero coefficients and
    no key material, so the header announces the true demands.
    """
    layout = key_layout(base, params, mode)
    if mode == "none":
        return KeyMaterial(layout, tuple((0,) * params.N for _ in params.users), {}, seed)
    rng = random.Random(seed)
    p = tuple(tuple(rng.getrandbits(1) for _ in range(params.N)) for _ in params.users)
    randomness = {label: BitVector.random(length, rng) for label, length in layout.items()}
    return KeyMaterial(layout, p, randomness, seed)


def keys_from_int(layout: KeyLayout, params: InstanceParams, value: int) -> KeyMaterial:
    """Keys whose bits are read, in generation order, from ``value``.

    Coefficients come first (user-major), then the key items.
    """
    p = []
    for _ in params.users:
        if layout.mode == "none":
            p.append((0,) * params.N)
            continue
        p.append(tuple((value >> n) & 1 for n in range(params.N)))
        value >>= params.N
    randomness = {}
    for label, length in layout.items():
        randomness[label] = BitVector(value & ((1 << length) - 1), length)
        value >>= length
    return KeyMaterial(layout, tuple(p), randomness)


def key_bits(layout: KeyLayout, params: InstanceParams) -> int:
    """Number of random bits consumed by :func:`keys_from_int`."""
    coeff = 0 if layout.mode == "none" else params.K * params.N
    return coeff + sum(length for _, length in layout.items())


# ---------- placement


@dataclass(frozen=True)
class NodeContent:
    labels: tuple[Subset, ...]
    library: Mapping[tuple[int, Subset], BitVector]
    keys: Mapping[KeyLabel, BitVector]

    @property
    def bits(self) -> int:
        return sum(v.length for v in self.library.values()) + sum(v.length for v in self.keys.values())

    def serialize(self) -> BitVector:
        return concat([*self.library.values(), *self.keys.values()])


@dataclass(frozen=True)
class PlacementSpec:
    nodes: Mapping[int, NodeContent]
    B: int

    def node_bits(self, node: int) -> int:
        return self.nodes[node].bits

    def memory(self, node: int) -> Fraction:
        """Cached bits of ``node`` in units of files."""
        return Fraction(self.node_bits(node), self.B)

    def view(self, k: int, params: InstanceParams) -> dict[int, NodeContent]:
        """Everything user ``k`` can read, keyed by node."""
        return {node: self.nodes[node] for node in window(k, params)}


def expected_memory(base: BaseScheme, params: InstanceParams, mode: str) -> Fraction:
    """``M' + omega (1 - L M'/N)`` in files; ``M'`` alone for mode "none"."""
    m = base.memory_ratio(params)
    if mode == "none":
        return m
    w = key_layout(base, params, mode).omega
    return m + w * (1 - params.L * m / params.N)


def key_holders(layout: KeyLayout, params: InstanceParams, k: int) -> tuple[int, ...]:
    """Nodes storing user ``k``'s key pieces, in piece order."""
    if layout.mode == "pad":
        return (k, mod1(k + params.L - 1, params.K))
    if layout.mode == "share":
        return share_positions(k, layout.positions, params.K)
    return ()


def private_place(base: BaseScheme, params: InstanceParams, library: Library, keys: KeyMaterial) -> PlacementSpec:
    """Base placement plus each user's key pieces at its key holders."""
    partition = base.partition(params)
    if library.N != params.N or library.B != params.B:
        raise ValueError("library shape does not match params")
    keys.check(params)
    base_labels = base.place(params)
    lib_items: dict[int, dict] = {}
    for node in params.users:
        items = {}
        for q in base_labels.get(node, ()):
            for n in range(1, params.N + 1):
                items[(n, q)] = partition.subfile(library.file(n), q)
        lib_items[node] = items

    key_items: dict[int, dict] = {node: {} for node in params.users}
    layout = keys.layout
    for k in params.users:
        holders = key_holders(layout, params, k)
        for q in layout.blocked[k]:
            secret = compute_key(q, library, partition, keys.p_vector(k))
            if layout.mode == "pad":
                pad = keys.pad(k, q)
                key_items[holders[0]][("mask", k, q)] = secret ^ pad
                key_items[holders[1]][("pad", k, q)] = pad
            elif layout.mode == "share":
                for h, (node, share) in enumerate(zip(holders, split_with(secret, keys.share_masks(k, q))), 1):
                    key_items[node][("share", k, q, h)] = share

    nodes = {}
    for node in params.users:
        ordered = dict(sorted(key_items[node].items()))
        nodes[node] = NodeContent(tuple(base_labels.get(node, ())), lib_items[node], ordered)
    return PlacementSpec(nodes, params.B)


# ---------- delivery


@dataclass(frozen=True)
class Broadcast:
    header: tuple[tuple[int, ...], ...]
    packets: tuple[Packet, ...]

    @property
    def header_bits(self) -> int:
        return sum(len(q) for q in self.header)

    @property
    def payload_bits(self) -> int:
        return sum(p.payload.length for p in self.packets)

    def serialize(self) -> BitVector:
        head = BitVector.from_bits([b for q in self.header for b in q])
        return concat([head, *(p.payload for p in self.packets)])


def virtual_needs(
    base: BaseScheme, params: InstanceParams, library: Library, header: Sequence[Sequence[int]]
) -> dict[int, list[tuple[Subset, BitVector]]]:
    partition = base.partition(params)
    return {
        k: [(q, compute_key(q, library, partition, header[k - 1])) for q in blocked_sets(k, partition, params)]
        for k in params.users
    }


def private_deliver(
    base: BaseScheme, params: InstanceParams, library: Library, d: DemandVector, keys: KeyMaterial
) -> Broadcast:
    """Announce every ``q_k``, then run the base delivery on virtual subfiles."""
    d.validate(params)
    header = tuple(virtual_demand(d[k], keys.p_vector(k)) for k in params.users)
    needs = virtual_needs(base, params, library, header)
    return Broadcast(header, tuple(base.deliver(params, needs)))


# ---------- decoding


def _cached_subfiles(view: Mapping[int, NodeContent]) -> dict[tuple[int, Subset], BitVector]:
    out = {}
    for content in view.values():
        out.update(content.library)
    return out


def _key_items(view: Mapping[int, NodeContent]) -> dict[KeyLabel, BitVector]:
    out = {}
    for content in view.values():
        out.update(content.keys)
    return out


def recover_key(k: int, q: Subset, view: Mapping[int, NodeContent], layout: KeyLayout, size: int) -> BitVector:
    items = _key_items(view)
    if layout.mode == "none":
        return BitVector.zeros(size)
    if layout.mode == "pad":
        labels = [("mask", k, q), ("pad", k, q)]
    else:
        labels = [("share", k, q, h) for h in range(1, layout.omega + 1)]
    missing = [label for label in labels if label not in items]
    if missing:
        raise DecodeError(f"user {k}: key pieces {missing} for part {format_subset(q)} not in its window")
    return share_reconstruct([items[label] for label in labels], len(labels))


def user_decode(
    k: int,
    broadcast: Broadcast,
    view: Mapping[int, NodeContent],
    d_k: int,
    base: BaseScheme,
    params: InstanceParams,
    layout: KeyLayout,
) -> BitVector:
    """Rebuild file ``W_{d_k}`` from user ``k``'s window and the broadcast."""
    partition = base.partition(params)
    cached = _cached_subfiles(view)
    pieces: dict[Subset, BitVector] = {}
    blocked = set(blocked_sets(k, partition, params))
    for q in partition.labels:
        if q in blocked:
            continue
        if (d_k, q) not in cached:
            raise DecodeError(f"user {k}: part {format_subset(q)} of file {d_k} should be cached but is not")
        pieces[q] = cached[(d_k, q)]

    for q in sorted(blocked):
        packet = next((p for p in broadcast.packets if (k, q) in p.recipe), None)
        if packet is None:
            raise DecodeError(f"user {k}: no packet carries part {format_subset(q)}")
        virtual = packet.payload
        for j, q2 in packet.recipe:
            if (j, q2) == (k, q):
                continue
            coeffs = broadcast.header[j - 1]
            terms = []
            for n, c in enumerate(coeffs, 1):
                if not c:
                    continue
                if (n, q2) not in cached:
                    raise DecodeError(
                        f"user {k}: cannot cancel term ({j},{format_subset(q2)}): "
                        f"part {format_subset(q2)} of file {n} not in its window"
                    )
                terms.append(cached[(n, q2)])
            virtual = xor_all([virtual, *terms], virtual.length)
        pieces[q] = virtual ^ recover_key(k, q, view, layout, partition.size(q))
    return partition.assemble(pieces)
