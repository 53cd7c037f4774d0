import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perlab import growth as G
from perlab import periodic as P
from perlab import systems as S
from perlab.errors import DomainError, EscapeError, InsufficientDataError

LOG_GOLDEN = math.log((3 + math.sqrt(5)) / 2)


def brute_max_cluster(sys_, pts, n, eps):
    """Pairwise scan with the public Bowen distance, one pair at a time."""
    best = 0
    for p in pts:
        c = sum(G.bowen_distance(sys_, p, q, n) < eps for q in pts)
        best = max(best, c)
    return best


def as_points(orbits):
    return [p.tolist() if np.ndim(p) else float(p) for o in orbits for p in o.points]


# -- Bowen distance and local counts


def test_bowen_distance_examples():
    d = S.doubling()
    assert G.bowen_distance(d, 0.3, 0.3, 4) == 0
    assert G.bowen_distance(d, 0.0, 0.5, 1) == 0.5
    assert G.bowen_distance(d, 0.0, 0.5, 2) == 0.5


def test_bowen_distance_escape():
    with pytest.raises(EscapeError):
        G.bowen_distance(S.henon(), (2.0, 2.0), (0.0, 0.0), 5)


@pytest.mark.parametrize("n", range(1, 11))
def test_catmap_is_locally_separated(n):
    assert G.max_local_count(S.catmap(), P.per_set(S.catmap(), n), n, 0.1) == 1


@pytest.mark.parametrize("sys_,n,eps", [
    (S.catmap(), 3, 0.3), (S.catmap(), 4, 0.45), (S.doubling(), 5, 0.3),
    (S.doubling(), 4, 0.1), (S.tent(), 4, 0.2), (S.logistic(4.0), 4, 0.3),
])
def test_max_local_count_matches_brute_force(sys_, n, eps):
    ps = P.per_set(sys_, n)
    pts = as_points(ps.orbits)
    assert G.max_local_count(sys_, ps, n, eps) == brute_max_cluster(sys_, pts, n, eps)
    # plain point arrays iterate the map themselves and agree
    assert G.max_local_count(sys_, ps.points(), n, eps) == brute_max_cluster(sys_, pts, n, eps)


def test_henon_local_count_matches_brute_force():
    sys_ = S.henon()
    ps = P.per_set(sys_, 4)
    pts = as_points(ps.orbits)
    assert G.max_local_count(sys_, ps, 4, 0.8) == brute_max_cluster(sys_, pts, 4, 0.8)


def test_doubling_example():
    assert G.max_local_count(S.doubling(), P.per_set(S.doubling(), 5), 5, 0.3) == 1


@pytest.mark.parametrize("name", ["catmap", "doubling", "tent", "logistic"])
def test_large_radius_covers_everything(name):
    sys_ = S.get_system(name)
    ps = P.per_set(sys_, 4)
    # balls are open, so the radius must exceed the diameter strictly
    assert G.max_local_count(sys_, ps, 4, sys_.diameter * 1.001) == ps.count()


def test_max_local_count_edge_cases():
    assert G.max_local_count(S.doubling(), np.empty(0), 3, 0.1) == 0
    with pytest.raises(DomainError):
        G.max_local_count(S.doubling(), [0.0], 1, 0.0)


# -- pk functional


def test_pk_catmap_is_zero():
    ps = P.per_set(S.catmap(), 6)
    o = next(o for o in ps.orbits if o.minimal_period == 6)
    assert G.pk_functional(S.catmap(), o, ps, 0.1) == 0.0


def test_pk_large_radius():
    sys_ = S.doubling()
    ps = P.per_set(sys_, 4)
    o = next(o for o in ps.orbits if o.minimal_period == 4)
    assert G.pk_functional(sys_, o, ps, 0.6) == pytest.approx(math.log(15))
    assert G.pk_functional(sys_, o, ps, 0.6, rate=True) == pytest.approx(math.log(15) / 4)


def test_pk_doubling_two_cycle_brute_force():
    sys_ = S.doubling()
    ps = P.per_set(sys_, 2)
    cycle = next(o for o in ps.orbits if o.minimal_period == 2)
    np.testing.assert_allclose(sorted(cycle.points), [1 / 3, 2 / 3])
    per = [0.0, 1 / 3, 2 / 3]
    counts = [sum(G.bowen_distance(sys_, x, q, 2) < 0.4 for q in per) for x in (1 / 3, 2 / 3)]
    expected = (math.log(counts[0]) + math.log(counts[1])) / 2
    assert G.pk_functional(sys_, cycle, ps, 0.4) == pytest.approx(expected)


@pytest.mark.parametrize("name,n", [("doubling", 6), ("logistic", 6), ("catmap", 5)])
def test_pk_monotone_and_bounded(name, n):
    sys_ = S.get_system(name)
    ps = P.per_set(sys_, n)
    orbits = [o for o in ps.orbits if o.minimal_period == n][:5]
    eps_grid = sorted(G.DEFAULT_EPSILONS) + [0.3, 0.45]
    for o in orbits:
        vals = [G.pk_functional(sys_, o, ps, e) for e in eps_grid]
        clusters = [G.max_local_count(sys_, ps, n, e) for e in eps_grid]
        assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))
        assert all(a <= b for a, b in zip(clusters, clusters[1:]))
        assert all(v <= math.log(c) + 1e-12 for v, c in zip(vals, clusters))


# -- tables and rates


def _table(counts, ns):
    return G.GrowthTable(0.5, [G.GrowthRow(n, c, c) for n, c in zip(ns, counts)])


def test_estimate_rate_doubling_counts():
    ns = range(4, 13)
    slope, rates = G.estimate_growth_rate(_table([2**n - 1 for n in ns], ns))
    assert abs(slope - math.log(2)) < 1e-3
    assert rates[0] == pytest.approx(math.log(15) / 4)


def test_estimate_rate_catmap_counts():
    ns = list(range(4, 13))
    slope, _ = G.estimate_growth_rate(_table([S.catmap().exact.periodic_count(n) for n in ns], ns))
    assert abs(slope - LOG_GOLDEN) < 5e-3


def test_estimate_rate_constant_counts():
    slope, rates = G.estimate_growth_rate(_table([1] * 6, range(1, 7)))
    assert slope == pytest.approx(0.0, abs=1e-12)
    assert rates == [0.0] * 6


def test_estimate_rate_needs_three_rows():
    with pytest.raises(InsufficientDataError):
        G.estimate_growth_rate(_table([3, 7], [2, 3]))
    with pytest.raises(InsufficientDataError):
        G.estimate_growth_rate(_table([0, 0, 0, 5], [1, 2, 3, 4]))


def test_growth_table_rows_and_serialization():
    table = G.growth_table(S.catmap(), range(1, 6), 0.5)
    assert [r.count_all for r in table.rows] == [1, 5, 16, 45, 121]
    assert all(r.count_delta == r.count_all for r in table.rows)
    csv = table.to_csv().splitlines()
    assert csv[0] == "n,count_all,count_delta,rate_all,rate_delta"
    assert csv[1] == "1,1,1,0,0"
    doc = json.loads(table.to_json())
    assert doc["rows"][2]["count_all"] == 16
    strict = G.growth_table(S.catmap(), [3], 1.0)
    assert strict.rows[0].count_delta == 0 and strict.rows[0].rate_delta is None
    assert strict.to_csv().splitlines()[1].endswith(",")


def test_local_growth_curve():
    curve = G.local_growth_curve(S.catmap(), [2, 4], (0.05, 0.1))
    assert curve.epsilons == (0.1, 0.05)
    assert [(r.n, r.eps, r.max_cluster) for r in curve.rows] == [
        (2, 0.1, 1), (2, 0.05, 1), (4, 0.1, 1), (4, 0.05, 1)]
    assert curve.to_csv().splitlines()[0] == "n,eps,max_cluster,local_rate"


@pytest.mark.parametrize("name", ["catmap", "doubling", "tent", "logistic"])
def test_rates_respect_entropy_plus_local_rate(name):
    sys_ = S.get_system(name)
    for n in (8, 9, 10):
        ps = P.per_set(sys_, n)
        rate = math.log(ps.count()) / n
        local = math.log(G.max_local_count(sys_, ps, n, 0.1)) / n
        assert rate <= sys_.exact.htop + local + 0.05


# -- H and the counting bound


def test_entropy_defect_examples():
    assert G.entropy_defect_H(2) == pytest.approx(math.log(2), rel=1e-15)
    assert G.entropy_defect_H(1) == 0
    assert G.entropy_defect_H(4) == pytest.approx(-0.25 * math.log(0.25) - 0.75 * math.log(0.75))
    assert G.entropy_defect_H(4) == pytest.approx(0.562335, abs=1e-6)
    with pytest.raises(DomainError):
        G.entropy_defect_H(0.5)


@settings(max_examples=300, deadline=None)
@given(st.floats(1, 1e12, allow_nan=False))
def test_entropy_defect_range(t):
    h = G.entropy_defect_H(t)
    assert 0 <= h <= math.log(2) + 1e-15


def test_entropy_defect_tends_to_zero():
    assert G.entropy_defect_H(1e9) < 1e-7


def brute_count(m, total):
    return sum(1 for ks in itertools.product(range(1, total + 1), repeat=m + 1)
               if sum(ks) <= total)


@pytest.mark.parametrize("m,total,exact", [(1, 4, 6), (0, 3, 3), (2, 3, 1)])
def test_count_examples(m, total, exact):
    assert G.count_bounded_sum_sequences(m, total)[0] == exact


def test_count_example_bound():
    assert G.count_bounded_sum_sequences(1, 4)[1] == pytest.approx(16)


@pytest.mark.parametrize("m", range(0, 4))
@pytest.mark.parametrize("total", range(0, 9))
def test_count_matches_enumeration(m, total):
    exact, bound = G.count_bounded_sum_sequences(m, total)
    assert exact == brute_count(m, total)
    # stars and bars
    assert exact == math.comb(total, m + 1)
    if bound is not None:
        assert exact <= bound


def test_count_below_minimum_is_zero():
    assert G.count_bounded_sum_sequences(3, 2) == (0, None)


# -- cocycle statistics


def test_cocycle_catmap():
    lp, lam, r = G.cocycle_stats(S.catmap(), (0.1, 0.7), 7, 1)
    assert lp == pytest.approx(LOG_GOLDEN, abs=1e-12)
    assert lam == pytest.approx(2 * LOG_GOLDEN, abs=1e-12)
    assert r == pytest.approx(LOG_GOLDEN, abs=1e-12)


def test_cocycle_single_block():
    sys_ = S.henon()
    x = (0.2, 0.1)
    lp, lam, r = G.cocycle_stats(sys_, x, 4, 4)
    M = np.eye(2)
    for p in S.orbit_array(sys_, x, 4):
        M = S.jacobian(sys_, p) @ M
    s = np.linalg.svd(M, compute_uv=False)
    assert lp == pytest.approx(max(0.0, math.log(s[0])), rel=1e-12)
    assert lam == pytest.approx(math.log(s[0] / s[1]), rel=1e-12)
    assert r == pytest.approx(max(0.0, math.log(s[0])) / 4, rel=1e-12)


def test_cocycle_henon_fixed_point():
    sys_ = S.henon()
    fixed = next(o for o in P.find_periodic_newton(sys_, 1) if o.points[0][0] > 0)
    x = tuple(fixed.points[0])
    lp, lam, r = G.cocycle_stats(sys_, x, 6, 1)
    s = np.linalg.svd(S.jacobian(sys_, x), compute_uv=False)
    assert lp == pytest.approx(max(0.0, math.log(s[0])), rel=1e-9)
    assert lam == pytest.approx(math.log(s[0] / s[1]), rel=1e-9)
    M = np.linalg.matrix_power(S.jacobian(sys_, x), 6)
    assert r == pytest.approx(max(0.0, math.log(np.linalg.svd(M, compute_uv=False)[0])) / 6,
                              rel=1e-9)


def test_cocycle_preconditions():
    with pytest.raises(DomainError):
        G.cocycle_stats(S.doubling(), 0.1, 3, 1)
    with pytest.raises(DomainError):
        G.cocycle_stats(S.catmap(), (0.1, 0.1), 2, 3)


def test_r_estimate():
    assert G.r_estimate(S.catmap(), 5) == pytest.approx(LOG_GOLDEN, abs=1e-12)
    assert G.r_estimate(S.doubling(), 5) == pytest.approx(math.log(2), abs=1e-12)
    assert G.r_estimate(S.henon(), 5) > 0
