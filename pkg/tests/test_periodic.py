import json
import math

import mpmath as mp
import numpy as np
import pytest
from scipy.spatial import cKDTree

from perlab import periodic as P
from perlab import systems as S
from perlab.errors import CapabilityError, DomainError, SchemaError

LOG_GOLDEN = math.log((3 + math.sqrt(5)) / 2)


def lucas(k):
    a, b = 2, 1
    for _ in range(k):
        a, b = b, a + b
    return a


def cat_count_oracle(n):
    # |det(A^n - I)| = |2 - tr A^n| and tr A^n = L_{2n} for A = [[2,1],[1,1]]
    return lucas(2 * n) - 2


def points_of(orbits):
    return np.concatenate([o.points for o in orbits])


def matched_distance(sys_, a, b):
    """Largest domain distance under the nearest-neighbour matching of a to b."""
    assert len(a) == len(b)
    box = 1.0 if sys_.periodic_metric else None
    shape = (-1, sys_.dimension)
    tree = cKDTree(np.mod(b, 1.0).reshape(shape) if box else b.reshape(shape), boxsize=box)
    d, idx = tree.query(np.mod(a, 1.0).reshape(shape) if box else a.reshape(shape), p=np.inf)
    assert len(set(idx.tolist())) == len(a), "matching is not a bijection"
    return float(d.max())


@pytest.mark.parametrize("n", range(1, 13))
def test_catmap_exact_counts(n):
    orbits = P.enumerate_exact(S.catmap(), n)
    assert sum(o.minimal_period for o in orbits) == cat_count_oracle(n)


def test_catmap_count_table():
    assert [cat_count_oracle(n) for n in range(1, 13)] == [
        1, 5, 16, 45, 121, 320, 841, 2205, 5776, 15125, 39601, 103680]


@pytest.mark.parametrize("n", [1, 2, 5, 7])
def test_exact_points_are_periodic_and_distinct(n):
    sys_ = S.catmap()
    orbits = P.enumerate_exact(sys_, n)
    pts = points_of(orbits)
    img = pts
    for _ in range(n):
        img = S.step(sys_, img)
    assert S.distance(sys_, img, pts).max() < 1e-9
    assert len(np.unique(np.round(pts * 1e9).astype(np.int64), axis=0)) == len(pts)
    for o in orbits:
        assert S.distance(sys_, S.step(sys_, o.points[-1]), o.points[0]) < 1e-12


def test_catmap_n2_structure():
    orbits = P.enumerate_exact(S.catmap(), 2)
    assert sorted(o.minimal_period for o in orbits) == [1, 2, 2]


def test_doubling_exact_points():
    pts = np.sort(points_of(P.enumerate_exact(S.doubling(), 3)))
    np.testing.assert_allclose(pts, np.arange(7) / 7, atol=1e-15)


def test_logistic_fixed_points():
    pts = np.sort(points_of(P.enumerate_exact(S.logistic(4.0), 1)))
    np.testing.assert_allclose(pts, [0.0, 0.75], atol=1e-15)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_logistic_exact_matches_polynomial_roots(n):
    # roots of f^n(x) - x as a polynomial, independent of the conjugacy
    f = np.poly1d([-4.0, 4.0, 0.0])
    g = np.poly1d([1.0, 0.0])
    for _ in range(n):
        g = f(g)
    h = g - np.poly1d([1.0, 0.0])
    roots = np.roots(h.coeffs)
    roots = np.sort(roots.real[np.abs(roots.imag) < 1e-6])
    # polish the ill-conditioned companion-matrix roots at high precision
    mp.mp.dps = 50

    def fn_minus_id(x):
        y = x
        for _ in range(n):
            y = 4 * y * (1 - y)
        return y - x

    roots = np.array([float(mp.findroot(fn_minus_id, mp.mpf(float(r)))) for r in roots])
    pts = np.sort(points_of(P.enumerate_exact(S.logistic(4.0), n)))
    assert len(pts) == 2**n
    np.testing.assert_allclose(pts, np.sort(roots), atol=1e-10)


@pytest.mark.parametrize("n", range(1, 9))
def test_tent_counts(n):
    pts = points_of(P.enumerate_exact(S.tent(), n))
    assert len(pts) == 2**n
    img = pts
    for _ in range(n):
        img = S.step(S.tent(), img)
    assert np.abs(img - pts).max() < 1e-9


def test_exact_rejects_unsupported_systems():
    with pytest.raises(CapabilityError):
        P.enumerate_exact(S.henon(), 2)
    with pytest.raises(CapabilityError):
        P.enumerate_exact(S.logistic(3.7), 2)


@pytest.mark.parametrize("n", range(1, 7))
def test_newton_matches_exact_catmap(n):
    sys_ = S.catmap()
    newton = points_of(P.find_periodic_newton(sys_, n))
    exact = points_of(P.enumerate_exact(sys_, n))
    assert matched_distance(sys_, newton, exact) < 1e-8


@pytest.mark.parametrize("n", range(1, 9))
def test_newton_matches_exact_logistic(n):
    sys_ = S.logistic(4.0)
    newton = points_of(P.find_periodic_newton(sys_, n))
    exact = points_of(P.enumerate_exact(sys_, n))
    assert matched_distance(sys_, newton, exact) < 1e-8


def test_newton_logistic_period_two():
    orbits = P.find_periodic_newton(S.logistic(4.0), 2)
    assert sorted(o.minimal_period for o in orbits) == [1, 1, 2]


def test_henon_fixed_points():
    orbits = P.classify_orbits(S.henon(), P.find_periodic_newton(S.henon(), 1))
    xs = sorted(o.points[0][0] for o in orbits)
    disc = math.sqrt(0.49 + 5.6)
    np.testing.assert_allclose(xs, [(-0.7 - disc) / 2.8, (-0.7 + disc) / 2.8], atol=1e-12)
    for o in orbits:
        assert o.points[0][1] == pytest.approx(0.3 * o.points[0][0], abs=1e-12)
        assert o.classification == "saddle"
    assert sum(o.exponents) == pytest.approx(math.log(0.3), abs=1e-12)


def test_newton_residuals_and_minimal_periods():
    sys_ = S.henon()
    cfg = P.NewtonConfig()
    for o in P.find_periodic_newton(sys_, 6, cfg):
        assert o.residual <= cfg.tol_residual
        assert 6 % o.minimal_period == 0
        for d in range(1, o.minimal_period):
            if o.minimal_period % d == 0:
                img = o.points[0]
                for _ in range(d):
                    img = S.step(sys_, img)
                assert S.distance(sys_, img, o.points[0]) > cfg.tol_dedupe


def test_newton_is_thread_independent():
    sys_ = S.henon()
    a = P.find_periodic_newton(sys_, 4, threads=1)
    b = P.find_periodic_newton(sys_, 4, threads=4)
    assert P.orbits_to_json("henon", 4, a) == P.orbits_to_json("henon", 4, b)


def test_classification_examples():
    for o in P.per_set(S.catmap(), 3).orbits:
        assert o.classification == "saddle"
        assert o.exponents == pytest.approx((-LOG_GOLDEN, LOG_GOLDEN), abs=1e-12)
    for o in P.per_set(S.doubling(), 4).orbits:
        assert o.classification == "repelling"
        assert o.exponents == pytest.approx((math.log(2),), abs=1e-12)


def test_attracting_orbits_are_reported_but_filtered():
    ps = P.per_set(S.logistic(3.2), 2, method="newton")
    classes = sorted(o.classification for o in ps.orbits)
    assert "attracting" in classes
    kept = P.filter_delta(ps.orbits, 0.01)
    assert all(o.classification == "repelling" for o in kept)


def test_filter_delta_examples():
    orbits = P.per_set(S.catmap(), 4).orbits
    assert len(P.filter_delta(orbits, 0.5)) == len(orbits)
    assert P.filter_delta(orbits, 1.0) == []
    synthetic = P.Orbit(np.array([[0.1, 0.2]]), 0.0, (-0.05, 0.3), "saddle")
    assert P.filter_delta([synthetic], 0.1) == []
    with pytest.raises(DomainError):
        P.filter_delta(orbits, 0.0)


def test_classify_exponents_edge_cases():
    assert P.classify_exponents((1e-9,)) == "nonhyperbolic"
    assert P.classify_exponents((-0.2, -0.1)) == "sink"
    assert P.classify_exponents((0.2, 0.1)) == "source"


@pytest.mark.parametrize("n", [1, 4, 6, 12])
def test_divisor_consistency(n):
    ps = P.per_set(S.catmap(), n)
    assert ps.count() == sum(d * len(v) for d, v in ps.by_period.items())
    assert ps.count() == len(ps.points())
    assert all(n % d == 0 for d in ps.by_period)


def test_distortion_intervals_doubling():
    ivs = P.distortion_intervals(S.doubling(), 5)
    assert [(j.lo, j.hi) for j in ivs] == [(0.0, 1.0)]


def test_distortion_intervals_tent_branches():
    ivs = P.distortion_intervals(S.tent(), 2)
    assert [(j.lo, j.hi) for j in ivs] == [(0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)]


def test_distortion_intervals_logistic_cover_and_bound():
    sys_ = S.logistic(4.0)
    ivs = P.distortion_intervals(sys_, 1)
    assert len(ivs) >= 2
    assert ivs[0].lo == 0 and ivs[-1].hi == 1
    assert all(a.hi == b.lo for a, b in zip(ivs, ivs[1:]))
    for j in ivs:
        if j.resolved:
            x = np.linspace(j.lo, j.hi, 101)[1:-1]
            d = P.derivative_power(sys_, x, 1)
            # finer resampling may exceed the sampled bound slightly
            assert d.max() - d.min() <= np.abs(d).max() / 3 * 1.2
    assert not any(0.25 < j.lo < 0.75 and not j.resolved for j in ivs if j.hi - j.lo > 1e-6)


@pytest.mark.parametrize("n", range(1, 11))
def test_at_most_one_delta_point_per_distortion_interval(n):
    sys_ = S.logistic(4.0)
    ivs = P.distortion_intervals(sys_, n)
    pts = np.sort(points_of(P.filter_delta(P.per_set(sys_, n).orbits, 0.3)))
    lo = np.array([j.lo for j in ivs])
    idx = np.searchsorted(lo, pts, side="right") - 1
    assert np.bincount(idx).max() <= 1


def test_distortion_needs_one_dimension():
    with pytest.raises(CapabilityError):
        P.distortion_intervals(S.catmap(), 1)


def test_orbit_json_round_trip_and_field_order():
    orbits = P.per_set(S.catmap(), 2).orbits
    text = P.orbits_to_json("catmap", 2, orbits)
    doc = json.loads(text)
    assert list(doc) == ["system", "n", "orbits"]
    assert list(doc["orbits"][0]) == ["period", "points", "exponents", "class", "residual"]
    system, n, back = P.orbits_from_dict(doc)
    assert (system, n) == ("catmap", 2)
    assert P.orbits_to_json(system, n, back) == text


def test_orbit_json_schema_errors():
    with pytest.raises(SchemaError):
        P.orbits_from_dict({"system": "catmap"})
    bad = {"system": "catmap", "n": 2, "orbits": [
        {"period": 2, "points": [[0, 0]], "exponents": [], "class": None, "residual": 0}]}
    with pytest.raises(SchemaError):
        P.orbits_from_dict(bad)


def test_newton_config_validation():
    with pytest.raises(ValueError):
        P.NewtonConfig(tol_residual=0)
    assert P.NewtonConfig() == P.NewtonConfig(64, 1e-11, 1e-7, 50, 1e-10)
