"""Exhaustive correctness and privacy oracles for small instances."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from ..model import BitVector, ConfigError, DemandVector, InstanceParams, Library, mod1, window
from ..privatizer import (
    Broadcast,
    DecodeError,
    KeyLayout,
    generate_keys,
    key_bits,
    key_layout,
    keys_from_int,
    omega,
    private_deliver,
    private_place,
    user_decode,
)
from ..schemes import BaseScheme
from . import anf, kernel

DEFAULT_BUDGET = 1 << 28
VALIDATION_SAMPLES = 64


class BudgetExceeded(RuntimeError):
    def __init__(self, cost: int, budget: int):
        super().__init__(f"exhaustive enumeration needs {cost} evaluations, budget is {budget}")
        self.cost = cost
        self.budget = budget


@dataclass(frozen=True)
class Config:
    base: BaseScheme
    params: InstanceParams
    mode: str = "pad"  # "none" means not privatized

    @property
    def privatized(self) -> bool:
        return self.mode != "none"

    def describe(self) -> dict:
        p = self.params
        return {"scheme": self.base.name, "K": p.K, "L": p.L, "N": p.N, "B": p.B, "mode": self.mode}


def demand_vectors(params: InstanceParams) -> Iterator[DemandVector]:
    for d in itertools.product(range(1, params.N + 1), repeat=params.K):
        yield DemandVector(d)


def measure_load(broadcast: Broadcast, B: int) -> tuple[Fraction, int]:
    """Payload load in files and header size in bits."""
    return Fraction(broadcast.payload_bits, B), broadcast.header_bits


# ---------- decoding


@dataclass
class DecodeReport:
    config: dict
    checked: int = 0
    failures: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def verify_decode_all(config: Config, seeds: int | list[int] = 1) -> DecodeReport:
    """Run every demand vector for each seed and compare decoded files to the library."""
    base, params = config.base, config.params
    report = DecodeReport(config.describe())
    for seed in [seeds] if isinstance(seeds, int) else seeds:
        library = Library.random(params.N, params.B, random.Random(f"{seed}/library"))
        keys = generate_keys(base, params, seed, config.mode)
        placement = private_place(base, params, library, keys)
        for d in demand_vectors(params):
            bc = private_deliver(base, params, library, d, keys)
            for k in params.users:
                report.checked += 1
                try:
                    got = user_decode(k, bc, placement.view(k, params), d[k], base, params, keys.layout)
                except DecodeError as exc:
                    report.failures.append({"seed": seed, "demands": list(d), "user": k, "error": str(exc)})
                    continue
                if got != library.file(d[k]):
                    report.failures.append(
                        {
                            "seed": seed,
                            "demands": list(d),
                            "user": k,
                            "expected": library.file(d[k]).to_string(),
                            "decoded": got.to_string(),
                        }
                    )
    return report


# ---------- key isolation


def key_isolation_check(params: InstanceParams, mode: str) -> dict:
    """Only user ``j`` sees every node holding a piece of its keys."""
    if mode == "pad":
        for j in params.users:
            holders = {j, mod1(j + params.L - 1, params.K)}
            for k in params.users:
                if k != j and holders <= set(window(k, params)):
                    return {"passed": False, "witness": {"owner": j, "observer": k, "nodes": sorted(holders)}}
        return {"passed": True, "witness": None}
    if mode == "share":
        try:
            _, positions = omega(params.K, params.L)
        except ConfigError as exc:
            return {"passed": False, "witness": {"reason": str(exc)}}
        for j in params.users:
            holders = {mod1(p + j - 1, params.K) for p in positions}
            if not holders <= set(window(j, params)):
                return {"passed": False, "witness": {"owner": j, "observer": j, "nodes": sorted(holders)}}
            for k in params.users:
                if k != j and holders <= set(window(k, params)):
                    return {"passed": False, "witness": {"owner": j, "observer": k, "nodes": sorted(holders)}}
        return {"passed": True, "witness": None}
    raise ValueError(f"key isolation is defined for pad and share modes, not {mode!r}")


# ---------- exhaustive privacy


@dataclass(frozen=True)
class JointDistribution:
    """Exact outcome counts of an observation over all randomness."""

    values: np.ndarray
    counts: np.ndarray

    @classmethod
    def from_codes(cls, codes: np.ndarray) -> JointDistribution:
        values, counts = np.unique(codes, return_counts=True)
        return cls(values, counts.astype(np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, JointDistribution):
            return NotImplemented
        return np.array_equal(self.values, other.values) and np.array_equal(self.counts, other.counts)

    __hash__ = None


class Observables:
    """Maps an integer assignment of all random bits to what users see.

    Variable layout (bit 0 first): library bits file-major, then the key
    bits in generation order (coefficients user-major, then pads/shares).
    """

    def __init__(self, config: Config):
        self.config = config
        params = config.params
        self.layout: KeyLayout = key_layout(config.base, params, config.mode)
        self.lib_bits = params.N * params.B
        self.n_vars = self.lib_bits + key_bits(self.layout, params)
        self._segments = self._measure_segments()

    def realize(self, x: int):
        params = self.config.params
        mask = (1 << params.B) - 1
        files = [(x >> (i * params.B)) & mask for i in range(params.N)]
        library = Library(tuple(BitVector(v, params.B) for v in files))
        keys = keys_from_int(self.layout, params, x >> self.lib_bits)
        return library, keys

    def _parts(self, x: int, d: DemandVector | None):
        base, params = self.config.base, self.config.params
        library, keys = self.realize(x)
        placement = private_place(base, params, library, keys)
        nodes = [placement.nodes[i].serialize() for i in params.users]
        bc = private_deliver(base, params, library, d, keys).serialize() if d is not None else None
        return bc, nodes

    def _measure_segments(self):
        params = self.config.params
        d0 = DemandVector((1,) * params.K)
        bc, nodes = self._parts(0, d0)
        offsets, off = {}, bc.length
        for i, node in zip(params.users, nodes):
            offsets[i] = (off, node.length)
            off += node.length
        return {"broadcast": bc.length, "nodes": offsets, "width": off}

    @property
    def width(self) -> int:
        return self._segments["width"]

    def global_code(self, x: int, d: DemandVector) -> int:
        """Broadcast bits, then node 1..K contents, packed into one int."""
        bc, nodes = self._parts(x, d)
        code, off = bc.value, bc.length
        for node in nodes:
            code |= node.value << off
            off += node.length
        return code

    def observer_mask(self, k: int, with_broadcast: bool = True) -> int:
        mask = (1 << self._segments["broadcast"]) - 1 if with_broadcast else 0
        for node in window(k, self.config.params):
            off, length = self._segments["nodes"][node]
            mask |= ((1 << length) - 1) << off
        return mask

    def variable_mask(self, kind: str, k: int | None = None) -> int:
        """Bits of the library, of all coefficients, or of user ``k``'s coefficients."""
        params = self.config.params
        if kind == "library":
            return (1 << self.lib_bits) - 1
        if self.layout.mode == "none":
            return 0
        n = params.N
        if kind == "coeffs":
            return ((1 << (params.K * n)) - 1) << self.lib_bits
        if kind == "coeff":
            return ((1 << n) - 1) << (self.lib_bits + (k - 1) * n)
        raise ValueError(kind)

    def quadratic_map(self, d: DemandVector, validate: bool = True) -> anf.QuadraticMap:
        fn = lambda x: self.global_code(x, d)  # noqa: E731
        qmap = anf.interpolate(fn, self.n_vars, self.width)
        if validate:
            anf.validate(fn, qmap, VALIDATION_SAMPLES, random.Random(f"validate/{d}"))
        return qmap


def enumeration_cost(config: Config) -> int:
    obs_bits = Observables(config).n_vars
    return (1 << obs_bits) * config.params.N ** config.params.K


def _mutual_information(groups: dict[int, list[JointDistribution]], n_demands: int) -> float:
    """``I(d_{-k}; O | d_k)`` in bits under uniform demands, from exact counts."""
    total_mi = 0.0
    for dists in groups.values():
        m = len(dists)
        merged_vals = np.unique(np.concatenate([dist.values for dist in dists]))
        merged = np.zeros(merged_vals.shape, dtype=np.int64)
        for dist in dists:
            merged[np.searchsorted(merged_vals, dist.values)] += dist.counts
        for dist in dists:
            tot = dist.total
            mix = merged[np.searchsorted(merged_vals, dist.values)]
            ratio = dist.counts * m / mix
            total_mi += float(np.sum(dist.counts / tot * np.log2(ratio))) / m
    return total_mi / n_demands


def _mi_string(equal: bool, mi: float) -> str:
    return "0" if equal else repr(mi)


@dataclass
class PrivacyReport:
    config: dict
    observers: dict[int, dict]
    placement: dict[int, dict]
    backend: str
    evaluations: int

    @property
    def passed(self) -> bool:
        return all(o["private"] for o in self.observers.values()) and all(
            p["independent"] for p in self.placement.values()
        )


def privacy_check(
    config: Config,
    observers: list[int] | None = None,
    budget: int = DEFAULT_BUDGET,
    backend: str | None = None,
) -> PrivacyReport:
    """Exact test of ``I(d_{-k}; X, Z_{U_k} | d_k) = 0`` for each observer.

    Enumerates every library, coefficient and pad/share assignment for every
    demand vector.  For each observer and each own demand, the outcome
    counts must coincide across all demands of the other users.  Also checks
    that, given the library and the observer's own coefficients, the window
    contents carry no information about the other coefficients.
    """
    params = config.params
    cost = enumeration_cost(config)
    if cost > budget:
        raise BudgetExceeded(cost, budget)
    obs = Observables(config)
    observers = list(params.users) if observers is None else observers
    masks = {k: np.uint64(obs.observer_mask(k)) for k in observers}

    refs: dict[tuple[int, int], JointDistribution] = {}
    differs: set[tuple[int, int]] = set()
    demands = list(demand_vectors(params))
    for d in demands:
        codes = kernel.evaluate_all(obs.quadratic_map(d), backend)
        for k in observers:
            dist = JointDistribution.from_codes(codes & masks[k])
            key = (k, d[k])
            if key not in refs:
                refs[key] = dist
            elif dist != refs[key]:
                differs.add(key)

    mi: dict[int, float] = {k: 0.0 for k in observers}
    if differs:
        # second pass only over the groups that leak
        groups: dict[int, dict[int, list[JointDistribution]]] = {k: {} for k in observers}
        for d in demands:
            wanted = [k for k in observers if (k, d[k]) in differs]
            if not wanted:
                continue
            codes = kernel.evaluate_all(obs.quadratic_map(d, validate=False), backend)
            for k in wanted:
                groups[k].setdefault(d[k], []).append(JointDistribution.from_codes(codes & masks[k]))
        for k in observers:
            if groups[k]:
                mi[k] = _mutual_information(groups[k], params.N)

    report_obs = {}
    for k in observers:
        leaking = sorted(dk for (j, dk) in differs if j == k)
        report_obs[k] = {
            "private": not leaking,
            "mutual_information": _mi_string(not leaking, mi[k]),
            "leaking_own_demands": leaking,
        }
    placement = {k: placement_independence(obs, k, backend) for k in observers}
    return PrivacyReport(config.describe(), report_obs, placement, kernel.BACKEND if backend is None else backend, cost)


def placement_independence(obs: Observables, k: int, backend: str | None = None) -> dict:
    """Given the library and ``p_k``, user ``k``'s window must not depend on the other coefficients."""
    if not obs.config.privatized:
        return {"independent": True, "mutual_information": "0", "note": "no coefficients"}
    params = obs.config.params
    d0 = DemandVector((1,) * params.K)
    codes = kernel.evaluate_all(obs.quadratic_map(d0, validate=False), backend)
    codes &= np.uint64(obs.observer_mask(k, with_broadcast=False))
    x = np.arange(1 << obs.n_vars, dtype=np.uint64)
    cond_mask = obs.variable_mask("library") | obs.variable_mask("coeff", k)
    other_mask = obs.variable_mask("coeffs") & ~obs.variable_mask("coeff", k)
    cond = x & np.uint64(cond_mask)
    other = x & np.uint64(other_mask)
    order = np.lexsort((codes, other, cond))
    n_cond = 1 << bin(cond_mask).count("1")
    n_other = 1 << bin(other_mask).count("1")
    table = codes[order].reshape(n_cond, n_other, -1)
    equal = bool(np.all(table == table[:, :1, :]))
    return {"independent": equal, "mutual_information": "0" if equal else "positive"}
