from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cactoid_lab.metric_core import (
    CapExceeded,
    Correspondence,
    FiniteMetricSpace,
    MetricError,
    PointMap,
    PseudometricSpace,
    distortion,
    gh_exact,
    gh_lower,
    gh_upper,
    hausdorff_in,
    is_eps_isometry,
    net_sample,
)

from oracles import brute_gh, brute_isometric, random_metric

F = Fraction


def equilateral(n, s=1):
    return FiniteMetricSpace(range(n), [[0 if i == j else s for j in range(n)] for i in range(n)])


@pytest.fixture(scope="module")
def corpus():
    rng = np.random.default_rng(20240601)
    return [random_metric(rng, int(rng.integers(1, 6))) for _ in range(40)]


# -- construction -----------------------------------------------------------

def test_rejects_triangle_violation():
    with pytest.raises(MetricError, match="triangle"):
        FiniteMetricSpace("abc", [[0, 1, 5], [1, 0, 1], [5, 1, 0]])


def test_rejects_asymmetry_and_zero():
    with pytest.raises(MetricError):
        FiniteMetricSpace("ab", [[0, 1], [2, 0]])
    with pytest.raises(MetricError, match="distance 0"):
        FiniteMetricSpace("ab", [[0, 0], [0, 0]])


def test_pseudometric_reports_zero_classes():
    P = PseudometricSpace("abc", [[0, 0, 1], [0, 0, 1], [1, 1, 0]])
    assert P.zero_classes() == [("a", "b")]


def test_exact_and_float_storage():
    X = FiniteMetricSpace([0, 1], [["0", "0.25"], ["0.25", "0"]])
    assert X.exact and X.dist[0, 1] == F(1, 4)
    Y = FiniteMetricSpace([0, 1], [[0, 0.25], [0.25, 0]])
    assert not Y.exact


def test_json_round_trip_exact_and_float():
    X = FiniteMetricSpace([("a", 1), "b", 3], [[0, F(1, 3), F(1, 4)], [F(1, 3), 0, F(1, 2)], [F(1, 4), F(1, 2), 0]])
    assert FiniteMetricSpace.from_json(X.to_json()) == X
    assert X.to_json()["dist"][0][2] == "0.25"
    Y = FiniteMetricSpace([0, 1], [[0, 0.1], [0.1, 0]])
    assert FiniteMetricSpace.from_json(Y.to_json()) == Y


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 9), min_size=6, max_size=6))
def test_random_matrices_checked_for_triangle(vals):
    a, b, c = vals[0] + 1, vals[1] + 1, vals[2] + 1
    ok = a <= b + c and b <= a + c and c <= a + b
    mat = [[0, a, b], [a, 0, c], [b, c, 0]]
    if ok:
        FiniteMetricSpace("xyz", mat)
    else:
        with pytest.raises(MetricError):
            FiniteMetricSpace("xyz", mat)


# -- distortion / eps-isometry ---------------------------------------------

def test_distortion_examples():
    X = equilateral(3)
    assert distortion(PointMap.identity(X)) == 0
    two = FiniteMetricSpace.two_point(1)
    pt = FiniteMetricSpace.point()
    assert distortion(PointMap(two, pt, [0, 0])) == 1
    # enumerate the three pairs by hand: |0-1|, |1-1|, |1-1|
    assert distortion(PointMap(X, two, [0, 0, 1])) == 1


def test_distortion_checks_space_references():
    X = equilateral(3)
    f = PointMap.identity(X)
    with pytest.raises(ValueError):
        distortion(f, source=equilateral(3))


def test_eps_isometry_examples():
    X = equilateral(3)
    assert is_eps_isometry(PointMap.identity(X), 0)
    two = FiniteMetricSpace.two_point(1)
    pt = FiniteMetricSpace.point()
    collapse = PointMap(two, pt, [0, 0])
    assert is_eps_isometry(collapse, 1)
    assert not is_eps_isometry(collapse, F(1, 2))
    assert is_eps_isometry(PointMap(pt, two, [0]), 1)
    with pytest.raises(ValueError):
        is_eps_isometry(collapse, -1)


# -- GH bounds ---------------------------------------------------------------

def test_gh_upper_examples():
    X = equilateral(3)
    assert gh_upper(X, X, Correspondence.diagonal(X)) == 0
    pt, two = FiniteMetricSpace.point(), FiniteMetricSpace.two_point(F(7, 3))
    assert gh_upper(pt, two, Correspondence.full(pt, two)) == F(7, 6)
    a, b = FiniteMetricSpace.two_point(F(3, 2)), FiniteMetricSpace.two_point(F(1, 4))
    assert gh_upper(a, b, Correspondence([(0, 0), (1, 1)])) == F(5, 8)
    with pytest.raises(ValueError):
        gh_upper(a, b, Correspondence([(0, 0)]))


def test_gh_exact_closed_forms():
    pt = FiniteMetricSpace.point()
    X = equilateral(4)
    assert gh_exact(X, X) == 0
    assert gh_exact(pt, FiniteMetricSpace.two_point(F(5, 2))) == F(5, 4)
    a, b = FiniteMetricSpace.two_point(3), FiniteMetricSpace.two_point(F(1, 2))
    assert gh_exact(a, b) == F(5, 4)


def test_gh_exact_cap():
    with pytest.raises(CapExceeded):
        gh_exact(equilateral(9), equilateral(2))
    assert gh_exact(equilateral(9), equilateral(2), size_cap=9) == F(1, 2)


def test_gh_lower_examples():
    X = equilateral(3)
    pt = FiniteMetricSpace.point()
    assert gh_lower(X, X) == 0
    assert gh_lower(pt, FiniteMetricSpace.two_point(6)) == 3
    assert gh_lower(X, pt) == F(1, 2)


def test_gh_exact_matches_brute_force(corpus):
    for X, Y in zip(corpus[::2], corpus[1::2]):
        assert gh_exact(X, Y) == brute_gh(X, Y)


def test_gh_sandwich_and_symmetry(corpus):
    rng = np.random.default_rng(5)
    for X, Y in zip(corpus, corpus[1:]):
        g = gh_exact(X, Y)
        assert g == gh_exact(Y, X)
        assert gh_lower(X, Y) <= g
        pairs = {(i, int(rng.integers(len(Y)))) for i in range(len(X))}
        pairs |= {(int(rng.integers(len(X))), j) for j in range(len(Y))}
        assert g <= gh_upper(X, Y, Correspondence(pairs))


def test_gh_zero_iff_isometric(corpus):
    rng = np.random.default_rng(9)
    for X in corpus[:15]:
        perm = rng.permutation(len(X))
        Y = FiniteMetricSpace(list(range(len(X))), X.dist[np.ix_(perm, perm)])
        assert gh_exact(X, Y) == 0 and brute_isometric(X, Y)
    for X, Y in zip(corpus, corpus[1:]):
        assert (gh_exact(X, Y) == 0) == brute_isometric(X, Y)


def test_gh_triangle_inequality():
    rng = np.random.default_rng(11)
    spaces = [random_metric(rng, int(rng.integers(1, 5))) for _ in range(15)]
    for X, Y, Z in zip(spaces, spaces[1:], spaces[2:]):
        assert gh_exact(X, Z) <= gh_exact(X, Y) + gh_exact(Y, Z)


def test_gh_exact_float_mode():
    a = FiniteMetricSpace.two_point(0.3)
    b = FiniteMetricSpace.two_point(1.1)
    assert gh_exact(a, b) == pytest.approx(0.4, abs=1e-9)


# -- Hausdorff and nets -------------------------------------------------------

def test_hausdorff_examples():
    X = FiniteMetricSpace("abc", [[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert hausdorff_in(X, [0, 1], [0, 1]) == 0
    assert hausdorff_in(X, [0], [0, 1, 2]) == 2
    two = FiniteMetricSpace.two_point(F(9, 4))
    assert hausdorff_in(two, [0], [1]) == F(9, 4)
    with pytest.raises(ValueError):
        hausdorff_in(X, [], [1])


def test_net_sample_examples():
    two = FiniteMetricSpace.two_point(3)
    assert net_sample(two, 2) == ([0, 1], 0)
    assert net_sample(two, 1) == ([0], 3)
    idx, r = net_sample(equilateral(3), 2)
    assert r == 1 and idx[0] == 0
    with pytest.raises(ValueError):
        net_sample(two, 3)


def test_net_radius_monotone_and_bounds_gh(corpus):
    for X in corpus:
        radii = [net_sample(X, k)[1] for k in range(1, len(X) + 1)]
        assert all(a >= b for a, b in zip(radii, radii[1:]))
        for k in range(1, len(X) + 1):
            idx, r = net_sample(X, k)
            assert gh_exact(X.subspace(idx), X) <= r
