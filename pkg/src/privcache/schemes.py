"""Base (non-private) multiaccess coded caching schemes.

Every scheme here places whole subfile labels identically across files and
delivers opaque per-user content blocks, so it never learns which file a
block came from.  That is what lets the privatizer hand it virtual files.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from .model import (
    BitVector,
    ConfigError,
    InstanceParams,
    PartitionSpec,
    Subset,
    format_subset,
    mod1,
    subset,
    window,
    xor_all,
)

Needs = Mapping[int, Sequence[tuple[Subset, BitVector]]]


@dataclass(frozen=True)
class Packet:
    payload: BitVector
    recipe: tuple[tuple[int, Subset], ...]

    def describe(self) -> str:
        return "{" + ",".join(f"({k},{format_subset(q)})" for k, q in self.recipe) + "}"


class BaseScheme:
    """Interface shared by the concrete base schemes.

    Subclasses provide ``partition``, ``place`` and ``deliver``.  ``place``
    returns only labels, so the placement is identically uncoded by
    construction.
    """

    name = "base"

    def granularity(self, params: InstanceParams) -> int:
        """Smallest ``B`` the partition supports; valid ``B`` are its multiples."""
        return 1

    def validate(self, params: InstanceParams) -> None:
        g = self.granularity(params)
        if params.B % g:
            raise ConfigError(f"{self.name} scheme needs B divisible by {g}, got B={params.B}")

    def partition(self, params: InstanceParams) -> PartitionSpec:
        raise NotImplementedError

    def place(self, params: InstanceParams) -> dict[int, tuple[Subset, ...]]:
        raise NotImplementedError

    def deliver(self, params: InstanceParams, needs: Needs) -> list[Packet]:
        raise NotImplementedError

    def memory_ratio(self, params: InstanceParams) -> Fraction:
        """Library memory per node, in files (the M' of the base scheme)."""
        part = self.partition(params)
        per_node = [sum(part.size(q) for q in labels) for labels in self.place(params).values()]
        bits = max(per_node, default=0)
        return Fraction(params.N * bits, params.B)

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


def cached_labels(params: InstanceParams, placement: Mapping[int, Sequence[Subset]], k: int) -> set[Subset]:
    out: set[Subset] = set()
    for node in window(k, params):
        out.update(placement.get(node, ()))
    return out


def _check_needs(needs: Needs) -> None:
    for k, items in needs.items():
        labels = [q for q, _ in items]
        if len(set(labels)) != len(labels):
            raise ValueError(f"user {k} lists a label twice")


def unicast(needs: Needs) -> list[Packet]:
    packets = []
    for k in sorted(needs):
        for q, content in needs[k]:
            packets.append(Packet(content, ((k, q),)))
    return packets


def greedy_clique_cover(params: InstanceParams, placement: Mapping[int, Sequence[Subset]], needs: Needs) -> list[Packet]:
    """Cover the side-information graph with cliques, one XOR packet each.

    Vertices are ``(user, label)`` needs.  Two vertices of different users
    are adjacent when each user can read the other's label from its window
    and the blocks have equal length.  Cliques grow greedily in ascending
    ``(user, label)`` order.
    """
    _check_needs(needs)
    visible = {k: cached_labels(params, placement, k) for k in needs}
    content = {}
    for k in needs:
        for q, block in needs[k]:
            content[(k, q)] = block
    vertices = sorted(content)

    def adjacent(a: tuple[int, Subset], b: tuple[int, Subset]) -> bool:
        (k1, q1), (k2, q2) = a, b
        return (
            k1 != k2
            and q2 in visible[k1]
            and q1 in visible[k2]
            and content[a].length == content[b].length
        )

    covered: set[tuple[int, Subset]] = set()
    packets = []
    for v in vertices:
        if v in covered:
            continue
        clique = [v]
        for u in vertices:
            if u in covered or u in clique:
                continue
            if all(adjacent(u, c) for c in clique):
                clique.append(u)
        covered.update(clique)
        length = content[v].length
        packets.append(Packet(xor_all((content[c] for c in clique), length), tuple(clique)))
    return packets


class UncachedScheme(BaseScheme):
    """Nothing cached; each user gets its full need by unicast."""

    name = "uncached"

    def partition(self, params):
        return PartitionSpec((((), params.B),))

    def place(self, params):
        return {i: () for i in params.users}

    def deliver(self, params, needs):
        _check_needs(needs)
        return unicast(needs)


class SingletonScheme(BaseScheme):
    """Node ``C_i`` caches the ``i``-th of ``K`` equal parts of every file."""

    name = "singleton"

    def granularity(self, params):
        return params.K

    def partition(self, params):
        self.validate(params)
        x = params.B // params.K
        return PartitionSpec(tuple(((i,), x) for i in params.users))

    def place(self, params):
        return {i: ((i,),) for i in params.users}

    def deliver(self, params, needs):
        return greedy_clique_cover(params, self.place(params), needs)


class StripeScheme(BaseScheme):
    """Node ``C_i`` caches stripe ``mod1(i, L)`` of every file; zero load.

    Needs ``L | K``: otherwise the wrap-around window starting near ``K``
    repeats a stripe, which breaks disjointness and leaves a stripe unseen.
    """

    name = "stripe"

    def granularity(self, params):
        return params.L

    def validate(self, params):
        if params.K % params.L:
            raise ConfigError(
                f"stripe scheme needs L | K so every window sees each stripe once, "
                f"got K={params.K}, L={params.L}"
            )
        super().validate(params)

    def stripe(self, params: InstanceParams, r: int) -> Subset:
        return subset(i for i in params.users if mod1(i, params.L) == r)

    def partition(self, params):
        self.validate(params)
        x = params.B // params.L
        return PartitionSpec.from_sizes({self.stripe(params, r): x for r in range(1, params.L + 1)})

    def place(self, params):
        self.validate(params)
        return {i: (self.stripe(params, mod1(i, params.L)),) for i in params.users}

    def deliver(self, params, needs):
        _check_needs(needs)
        if any(needs.values()):
            raise ValueError("stripe scheme leaves no user with missing content")
        return []


SCHEMES: dict[str, type[BaseScheme]] = {
    "uncached": UncachedScheme,
    "singleton": SingletonScheme,
    "stripe": StripeScheme,
}


def uncached_scheme() -> UncachedScheme:
    return UncachedScheme()


def singleton_scheme() -> SingletonScheme:
    return SingletonScheme()


def stripe_scheme() -> StripeScheme:
    return StripeScheme()


def get_scheme(name: str) -> BaseScheme:
    try:
        return SCHEMES[name]()
    except KeyError:
        raise ConfigError(f"unknown scheme {name!r}; choose from {sorted(SCHEMES)}") from None


def payload_bits(packets: Sequence[Packet]) -> int:
    return sum(p.payload.length for p in packets)


# ---------- placement fixtures and requirement checks


@dataclass
class PlacementFixture:
    """Raw placement read from a text fixture.

    Either form may be present: ``labels`` (node -> subset labels, applied to
    every file) or ``bits`` (node -> file -> cached bit positions).
    """

    K: int
    L: int
    N: int
    B: int
    labels: dict[int, tuple[Subset, ...]] = field(default_factory=dict)
    bits: dict[int, dict[int, frozenset[int]]] = field(default_factory=dict)

    @property
    def params(self) -> InstanceParams:
        return InstanceParams(self.K, self.L, self.N, self.B)


_SUBSET_RE = re.compile(r"\{([0-9,\s]*)\}")


def _parse_bits(tokens: Sequence[str]) -> frozenset[int]:
    out: set[int] = set()
    for tok in tokens:
        for piece in tok.split(","):
            if not piece:
                continue
            if "-" in piece:
                lo, hi = piece.split("-")
                out.update(range(int(lo), int(hi) + 1))
            else:
                out.add(int(piece))
    return frozenset(out)


def parse_fixture(text: str) -> PlacementFixture:
    """Parse the placement fixture format (see README)."""
    header = None
    labels: dict[int, tuple[Subset, ...]] = {}
    bits: dict[int, dict[int, frozenset[int]]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "params":
                kv = dict(t.split("=") for t in tok[1:])
                header = {key: int(kv[key]) for key in ("K", "L", "N", "B")}
            elif tok[0] == "node" and tok[2] == "labels":
                node = int(tok[1])
                rest = line.split("labels", 1)[1]
                labels[node] = tuple(
                    subset(int(x) for x in m.split(",") if x.strip()) for m in _SUBSET_RE.findall(rest)
                )
            elif tok[0] == "node" and tok[2] == "file" and tok[4] == "bits":
                node, n = int(tok[1]), int(tok[3])
                bits.setdefault(node, {})[n] = _parse_bits(tok[5:])
            else:
                raise ValueError("unrecognised record")
        except (IndexError, KeyError, ValueError) as exc:
            raise ValueError(f"fixture line {lineno}: {raw!r}: {exc}") from None
    if header is None:
        raise ValueError("fixture has no 'params' line")
    return PlacementFixture(labels=labels, bits=bits, **header)


def load_fixture(path: str | Path) -> PlacementFixture:
    return parse_fixture(Path(path).read_text())


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    witness: dict | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.passed


def _label_sets(obj: BaseScheme | PlacementFixture, params: InstanceParams) -> dict[int, tuple[Subset, ...]]:
    if isinstance(obj, BaseScheme):
        return obj.place(params)
    return obj.labels


def check_requirement1(obj: BaseScheme | PlacementFixture, params: InstanceParams) -> CheckResult:
    """No two nodes inside any user's window cache a common bit."""
    labels = _label_sets(obj, params)
    for k in params.users:
        w = window(k, params)
        for i, a in enumerate(w):
            for b in w[i + 1:]:
                common = sorted(set(labels.get(a, ())) & set(labels.get(b, ())))
                if common:
                    q = common[0]
                    return CheckResult(
                        False,
                        {"window": k, "label": list(q), "nodes": [a, b]},
                        f"window of user {k}: nodes {a} and {b} both cache {format_subset(q)}",
                    )
    if isinstance(obj, PlacementFixture):
        for k in params.users:
            w = window(k, params)
            for i, a in enumerate(w):
                for b in w[i + 1:]:
                    for n in range(1, params.N + 1):
                        common = obj.bits.get(a, {}).get(n, frozenset()) & obj.bits.get(b, {}).get(n, frozenset())
                        if common:
                            bit = min(common)
                            return CheckResult(
                                False,
                                {"window": k, "file": n, "bit": bit, "nodes": [a, b]},
                                f"window of user {k}: nodes {a} and {b} both cache bit {bit} of file {n}",
                            )
    return CheckResult(True)


def check_requirement2(obj: BaseScheme | PlacementFixture, params: InstanceParams) -> CheckResult:
    """Every node caches the same bit positions of every file."""
    if isinstance(obj, BaseScheme):
        placement = obj.place(params)
        if any(not isinstance(q, tuple) for labels in placement.values() for q in labels):
            return CheckResult(False, None, "place() returned non-label content")
        return CheckResult(True)
    for node in sorted(obj.bits):
        per_file = obj.bits[node]
        files = range(1, params.N + 1)
        union = frozenset().union(*(per_file.get(n, frozenset()) for n in files))
        for bit in sorted(union):
            have = [n for n in files if bit in per_file.get(n, frozenset())]
            lack = [n for n in files if bit not in per_file.get(n, frozenset())]
            if lack:
                return CheckResult(
                    False,
                    {"node": node, "bit": bit, "cached_in": have[0], "absent_in": lack[0]},
                    f"node {node} caches bit {bit} of file {have[0]} but not of file {lack[0]}",
                )
    return CheckResult(True)
