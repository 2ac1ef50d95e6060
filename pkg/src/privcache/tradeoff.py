"""Achievable memory-load points and their lower convex envelope, in exact
rational arithmetic."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from .model import ConfigError
from .privatizer import omega


@dataclass(frozen=True)
class TradeoffPoint:
    M: Fraction
    R: Fraction
    t: str
    scheme: str = ""

    def __post_init__(self) -> None:
        if self.M < 0 or self.R < 0:
            raise ValueError(f"negative point ({self.M}, {self.R})")


def _check(K: int, L: int, N: int) -> None:
    if not 1 <= L <= K or N < 1:
        raise ValueError(f"need 1 <= L <= K and N >= 1, got K={K}, L={L}, N={N}")


def nonprivate_points(K: int, L: int, N: int) -> list[TradeoffPoint]:
    """``(Nt/K, (K - tL)/(t + 1))`` for ``t = 0 .. K // L``, plus ``(N/L, 0)``."""
    _check(K, L, N)
    pts = [
        TradeoffPoint(Fraction(N * t, K), Fraction(K - t * L, t + 1), str(t), "nonprivate")
        for t in range(K // L + 1)
    ]
    pts.append(TradeoffPoint(Fraction(N, L), Fraction(0), "stripe", "nonprivate"))
    return pts


def private_points(K: int, L: int, N: int, extension: bool = True) -> list[TradeoffPoint]:
    """Private points ``((N - w L) t/K + w, (K - tL)/(t + 1))`` for ``t = 1 .. K // L``.

    ``w = 2`` when ``L < K/2 + 1``.  Otherwise ``w`` is the brute-forced share
    count and the points are tagged ``omega=w``.  With ``extension`` the
    ``t = 0`` point ``(w, K)`` is added, tagged ``extension``.
    """
    _check(K, L, N)
    if 2 * L < K + 2:
        w, tag = 2, ""
    else:
        try:
            w, _ = omega(K, L)
        except ConfigError:
            w = None
        tag = f"omega={w}" if w is not None else ""
    pts = []
    if w is not None:
        if extension:
            pts.append(TradeoffPoint(Fraction(w), Fraction(K), "extension" + (f";{tag}" if tag else ""), "private"))
        for t in range(1, K // L + 1):
            label = str(t) + (f";{tag}" if tag else "")
            pts.append(TradeoffPoint(Fraction((N - w * L) * t, K) + w, Fraction(K - t * L, t + 1), label, "private"))
    pts.append(TradeoffPoint(Fraction(N, L), Fraction(0), "stripe", "private"))
    return pts


class LowerEnvelope:
    """Lower convex hull of a point set, evaluated by linear interpolation."""

    def __init__(self, points: Iterable[TradeoffPoint]):
        pts = sorted(points, key=lambda p: (p.M, p.R))
        if not pts:
            raise ValueError("lower envelope of no points")
        # keep the lowest R per M
        dedup: list[TradeoffPoint] = []
        for p in pts:
            if dedup and dedup[-1].M == p.M:
                continue
            dedup.append(p)
        hull: list[TradeoffPoint] = []
        for p in dedup:
            while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
                hull.pop()
            hull.append(p)
        # beyond the minimum load more memory does not help
        cut = min(range(len(hull)), key=lambda i: (hull[i].R, hull[i].M))
        self.vertices: tuple[TradeoffPoint, ...] = tuple(hull[: cut + 1])

    def __call__(self, M: Fraction | int) -> Fraction | float:
        M = Fraction(M)
        v = self.vertices
        if M < v[0].M:
            return math.inf
        if M >= v[-1].M:
            return v[-1].R
        for a, b in zip(v, v[1:]):
            if a.M <= M <= b.M:
                return a.R + (b.R - a.R) * (M - a.M) / (b.M - a.M)
        raise AssertionError("unreachable")

    eval = __call__


def _cross(o: TradeoffPoint, a: TradeoffPoint, b: TradeoffPoint) -> Fraction:
    return (a.M - o.M) * (b.R - o.R) - (a.R - o.R) * (b.M - o.M)


def lower_envelope(points: Sequence[TradeoffPoint]) -> LowerEnvelope:
    return LowerEnvelope(points)


CSV_COLUMNS = ["scheme", "t", "M_num", "M_den", "R_num", "R_den", "M_float", "R_float"]


def _row(p: TradeoffPoint, scheme: str) -> list:
    return [scheme, p.t, p.M.numerator, p.M.denominator, p.R.numerator, p.R.denominator, f"{float(p.M):.6f}", f"{float(p.R):.6f}"]


def write_csv(out: TextIO, K: int, L: int, N: int, which: str = "both") -> int:
    """Write points, then envelope vertices (``<scheme>-envelope`` rows).  Returns the row count."""
    if which not in ("nonprivate", "private", "both"):
        raise ValueError(f"unknown selection {which!r}")
    groups = []
    if which in ("nonprivate", "both"):
        groups.append(("nonprivate", nonprivate_points(K, L, N)))
    if which in ("private", "both"):
        groups.append(("private", private_points(K, L, N)))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    rows = 0
    for name, pts in groups:
        for p in pts:
            writer.writerow(_row(p, name))
            rows += 1
    for name, pts in groups:
        for p in lower_envelope(pts).vertices:
            writer.writerow(_row(p, f"{name}-envelope"))
            rows += 1
    return rows


def write_csv_file(path: str | Path, K: int, L: int, N: int, which: str = "both") -> int:
    with open(path, "w", newline="") as fh:
        return write_csv(fh, K, L, N, which)
