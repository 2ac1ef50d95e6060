import csv
import io
import itertools
import math
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from privcache.tradeoff import (
    CSV_COLUMNS,
    TradeoffPoint,
    lower_envelope,
    nonprivate_points,
    private_points,
    write_csv,
)


def by_t(points):
    return {p.t: (p.M, p.R) for p in points}


def test_example_points():
    np_ = by_t(nonprivate_points(3, 2, 3))
    assert np_["0"] == (0, 3)
    assert np_["1"] == (1, F(1, 2))
    assert np_["stripe"] == (F(3, 2), 0)
    pr = by_t(private_points(3, 2, 3))
    assert pr["1"] == (F(5, 3), F(1, 2))
    assert pr["extension"] == (2, 3)


def test_large_instance_point():
    pr = by_t(private_points(20, 3, 40))
    assert pr["2"] == (F(27, 5), F(14, 3))
    assert by_t(nonprivate_points(20, 3, 40))["2"] == (4, F(14, 3))


def test_share_mode_points_are_tagged():
    pts = private_points(4, 3, 4)
    tags = [p.t for p in pts]
    assert "1;omega=3" in tags
    assert by_t(pts)["1;omega=3"] == (F(7, 4), F(1, 2))


def test_no_private_points_without_omega():
    pts = private_points(3, 3, 2)
    assert [p.t for p in pts] == ["stripe"]


def test_invalid_arguments():
    with pytest.raises(ValueError):
        nonprivate_points(3, 4, 1)
    with pytest.raises(ValueError):
        lower_envelope([])
    with pytest.raises(ValueError):
        TradeoffPoint(F(-1), F(0), "x")


def brute_envelope(points, M):
    """Minimum over all pairs (and singletons) of the memory-sharing combination reaching M."""
    best = math.inf
    for a in points:
        if a.M <= M:
            best = min(best, a.R)
    for a, b in itertools.combinations(points, 2):
        if a.M == b.M:
            continue
        lo, hi = (a, b) if a.M < b.M else (b, a)
        if lo.M <= M <= hi.M:
            best = min(best, lo.R + (hi.R - lo.R) * (M - lo.M) / (hi.M - lo.M))
    return best


point_sets = st.lists(
    st.tuples(st.fractions(0, 20, max_denominator=6), st.fractions(0, 20, max_denominator=6)),
    min_size=1,
    max_size=8,
)


@given(point_sets, st.fractions(0, 22, max_denominator=7))
def test_envelope_matches_pairwise_brute_force(raw, M):
    pts = [TradeoffPoint(m, r, str(i)) for i, (m, r) in enumerate(raw)]
    assert lower_envelope(pts)(M) == brute_envelope(pts, M)


@given(point_sets)
def test_envelope_is_convex_and_nonincreasing(raw):
    pts = [TradeoffPoint(m, r, str(i)) for i, (m, r) in enumerate(raw)]
    v = lower_envelope(pts).vertices
    slopes = [(b.R - a.R) / (b.M - a.M) for a, b in zip(v, v[1:])]
    assert all(s < 0 for s in slopes)
    assert all(s1 < s2 for s1, s2 in zip(slopes, slopes[1:]))


def test_envelope_below_minimum_memory_is_infinite():
    # the stripe point (3/2, 0) dominates every other private point here
    env = lower_envelope(private_points(3, 2, 3))
    assert env(1) == math.inf
    assert env(F(3, 2)) == 0
    env = lower_envelope([p for p in private_points(3, 2, 3) if p.t != "stripe"])
    assert env(F(3, 2)) == math.inf
    assert env(F(5, 3)) == F(1, 2)
    assert env(10) == F(1, 2)


def test_csv_output():
    buf = io.StringIO()
    rows = write_csv(buf, 20, 3, 40)
    lines = list(csv.reader(io.StringIO(buf.getvalue())))
    assert lines[0] == CSV_COLUMNS
    assert len(lines) == rows + 1
    private = [r for r in lines if r[0] == "private" and r[1] == "2"]
    assert private == [["private", "2", "27", "5", "14", "3", "5.400000", "4.666667"]]
    assert any(r[0] == "nonprivate-envelope" for r in lines)
    with pytest.raises(ValueError):
        write_csv(io.StringIO(), 3, 2, 3, "bogus")


def test_full_window_case():
    np_ = by_t(nonprivate_points(4, 4, 2))
    assert np_["1"] == (F(1, 2), 0)
    env = lower_envelope(nonprivate_points(4, 4, 2))
    assert env.vertices[-1].R == 0
