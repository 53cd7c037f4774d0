import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from perlab import measures as M
from perlab import periodic as P
from perlab import systems as S
from perlab.errors import EscapeError, PreconditionError


def nu(sys_, n, method="auto"):
    return M.empirical_measure(P.per_set(sys_, n, method))


# -- empirical measures


def test_empirical_measure_examples():
    m = nu(S.doubling(), 2)
    np.testing.assert_allclose(np.sort(m.support), [0, 1 / 3, 2 / 3], atol=1e-15)
    np.testing.assert_allclose(m.weights, [1 / 3] * 3)
    assert M.empirical_measure([0.0]).weights.tolist() == [1.0]
    assert nu(S.catmap(), 2).weights.tolist() == [0.2] * 5


def test_empirical_measure_rejects_empty():
    with pytest.raises(ValueError):
        M.empirical_measure([])


def test_measure_validation():
    with pytest.raises(ValueError):
        M.EmpiricalMeasure([0.1, 0.2], [0.5, 0.6])
    with pytest.raises(ValueError):
        M.EmpiricalMeasure([0.1], [0.5, 0.5])


def test_measure_json():
    doc = json.loads(nu(S.doubling(), 2).to_json())
    assert list(doc) == ["support", "weights"]
    assert len(doc["support"]) == 3


# -- partitions and entropy


def test_grid_labels_half_open_cells():
    g = M.GridPartition(1, 4)
    assert g.labels(np.array([0.0, 0.25, 0.2499999999999, 0.5, 0.99, 1.0])).tolist() == [
        0, 1, 1, 2, 3, 3]
    g2 = M.GridPartition(2, 2, periodic=True)
    assert g2.labels(np.array([[0.5, 0.0], [0.2, 0.7]])).tolist() == [2, 1]


def test_cell_diameter():
    assert M.GridPartition.for_system(S.catmap(), 8).cell_diameter(S.catmap()) == 0.125
    h = S.henon()
    assert M.GridPartition.for_system(h, 6).cell_diameter(h) == pytest.approx(math.sqrt(2))


def test_shannon_examples():
    dirac = M.empirical_measure([0.3])
    assert M.shannon_entropy(dirac, M.GridPartition(1, 8)) == 0
    four = M.empirical_measure([0.1, 0.3, 0.6, 0.9])
    assert M.shannon_entropy(four, M.GridPartition(1, 4)) == pytest.approx(math.log(4))
    h = M.shannon_entropy(nu(S.doubling(), 3), M.GridPartition(1, 2))
    assert h == pytest.approx(-(3 / 7) * math.log(3 / 7) - (4 / 7) * math.log(4 / 7), abs=1e-12)
    assert h == pytest.approx(0.682908, abs=1e-6)


support_1d = st.lists(st.floats(0, 1, exclude_max=True, allow_nan=False), min_size=1,
                      max_size=40)


@settings(max_examples=150, deadline=None)
@given(support_1d, st.integers(1, 20), st.integers(1, 20))
def test_entropy_inequalities(pts, k1, k2):
    m = M.empirical_measure(pts)
    Pp, Q = M.GridPartition(1, k1), M.GridPartition(1, k2)
    h = M.shannon_entropy(m, Pp)
    nonempty = len(np.unique(Pp.labels(m.support)))
    assert h <= math.log(nonempty) + 1e-12 <= math.log(k1) + 1e-12
    assert h <= M.shannon_entropy(m, Q) + M.conditional_entropy(m, Pp, Q) + 1e-12
    assert M.conditional_entropy(m, Pp, Q) >= -1e-12


def test_iterated_entropy_examples():
    assert M.iterated_partition_entropy(
        S.catmap(), M.empirical_measure([[0.0, 0.0]]), M.GridPartition(2, 4, periodic=True), 5) == 0
    m = nu(S.doubling(), 8)
    assert M.iterated_partition_entropy(S.doubling(), m, M.GridPartition(1, 2), 8) >= (
        math.log(2) - 0.01)
    cat = S.catmap()
    mc = nu(cat, 6)
    part = M.GridPartition.for_system(cat, 4)
    assert (M.iterated_partition_entropy(cat, mc, part, 6)
            <= M.iterated_partition_entropy(cat, mc, part, 1))


def test_itineraries_follow_the_map():
    m = M.empirical_measure([1 / 7])
    it = M.itineraries(S.doubling(), m, M.GridPartition(1, 2), 6)
    # 1/7 = 0.(001) in binary
    assert it.tolist() == [[0, 0, 1, 0, 0, 1]]


def test_itineraries_escape():
    m = M.empirical_measure([[2.0, 2.0]])
    with pytest.raises(EscapeError):
        M.itineraries(S.henon(), m, M.GridPartition.for_system(S.henon(), 4), 5)


@pytest.mark.parametrize("name,n,cells", [
    ("catmap", 6, 4), ("doubling", 8, 4), ("tent", 8, 4), ("logistic", 8, 4), ("henon", 6, 6),
])
def test_iterated_entropy_nonincreasing(name, n, cells):
    sys_ = S.get_system(name)
    m = nu(sys_, n)
    part = M.GridPartition.for_system(sys_, cells)
    vals = [M.iterated_partition_entropy(sys_, m, part, l) for l in range(1, 9)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:])), vals


# -- the entropy lower bound


def test_cru_gap_doubling():
    sys_ = S.doubling()
    ps = P.per_set(sys_, 10)
    gap = M.lemma_cru_gap(sys_, ps, 10, M.GridPartition.for_system(sys_, 8), 0.2, 10)
    assert gap.holds
    assert gap.rhs == pytest.approx(math.log(2**10 - 1) / 10, abs=1e-12)
    assert gap.lhs == pytest.approx(math.log(2), abs=0.01)


def test_cru_gap_catmap():
    sys_ = S.catmap()
    ps = P.per_set(sys_, 8)
    gap = M.lemma_cru_gap(sys_, ps, 8, M.GridPartition.for_system(sys_, 16), 0.15, 8)
    assert gap.holds
    assert gap.rhs == pytest.approx(math.log(2205) / 8, abs=1e-12)
    assert gap.rhs == pytest.approx(0.962, abs=0.005)


def test_cru_gap_fixed_point():
    gap = M.lemma_cru_gap(S.doubling(), [0.0], 1, M.GridPartition(1, 8), 0.2, 1)
    assert gap.rhs == 0 and gap.lhs >= 0 and gap.holds


def test_cru_gap_preconditions():
    sys_ = S.doubling()
    ps = P.per_set(sys_, 4)
    with pytest.raises(PreconditionError):
        M.lemma_cru_gap(sys_, ps, 4, M.GridPartition(1, 4), 0.2, 4)
    with pytest.raises(PreconditionError):
        M.lemma_cru_gap(sys_, ps, 4, M.GridPartition(1, 8), 0.2, 5)


# -- discrepancy


def test_reference_cell_masses_sum_to_one():
    for rid in S.REFERENCE_IDS:
        ref = M.ReferenceMeasure(rid)
        for k in (2, 7, 64):
            assert ref.cell_masses(k).sum() == pytest.approx(1.0, abs=1e-14)
    a = M.ReferenceMeasure("arcsine")
    assert a.cdf(0.5) == pytest.approx(0.5)
    assert a.cdf(0.25) == pytest.approx(1 / 3)


def test_unknown_reference():
    with pytest.raises(ValueError):
        M.ReferenceMeasure("gauss")


def test_grid_matched_measure_has_zero_discrepancy():
    k = 8
    centers = (np.arange(k * 4) + 0.5) / (k * 4)
    d = M.discrepancy(M.empirical_measure(centers), M.ReferenceMeasure("lebesgue-interval"), k)
    assert d.sup_cell == pytest.approx(0, abs=1e-15)
    xx, yy = np.meshgrid(centers, centers)
    m2 = M.empirical_measure(np.stack([xx.ravel(), yy.ravel()], 1))
    assert M.discrepancy(m2, M.ReferenceMeasure("lebesgue-torus"), k).sup_cell == pytest.approx(
        0, abs=1e-15)


def test_catmap_equidistribution():
    d = M.discrepancy(nu(S.catmap(), 12), M.ReferenceMeasure("lebesgue-torus"), 8)
    assert d.sup_cell <= 0.02 and d.ks is None


def test_logistic_ks_matches_scipy():
    m = nu(S.logistic(4.0), 14)
    ref = M.ReferenceMeasure("arcsine")
    d = M.discrepancy(m, ref, 64)
    assert d.ks <= 0.02
    oracle = stats.kstest(m.support, lambda x: 2 / np.pi * np.arcsin(np.sqrt(np.clip(x, 0, 1))))
    assert d.ks == pytest.approx(oracle.statistic, abs=1e-12)


@pytest.mark.parametrize("n", [6, 9])
def test_doubling_ks_matches_scipy(n):
    m = nu(S.doubling(), n)
    d = M.discrepancy(m, M.ReferenceMeasure("lebesgue-interval"), 8)
    assert d.ks == pytest.approx(stats.kstest(m.support, "uniform").statistic, abs=1e-12)


def test_catmap_discrepancy_trend():
    ref = M.ReferenceMeasure("lebesgue-torus")
    vals = [M.discrepancy(nu(S.catmap(), n), ref, 8).sup_cell for n in (4, 6, 8, 10, 12)]
    assert all(b <= 1.5 * a + 1e-15 for a, b in zip(vals, vals[1:])), vals


def test_discrepancy_csv():
    d = M.discrepancy(nu(S.doubling(), 5), M.ReferenceMeasure("lebesgue-interval"), 4)
    lines = M.discrepancy_csv([(5, 4, d)]).splitlines()
    assert lines[0] == "n,k,sup_cell,ks"
    assert lines[1].startswith("5,4,")
    d2 = M.discrepancy(nu(S.catmap(), 3), M.ReferenceMeasure("lebesgue-torus"), 4)
    assert M.discrepancy_csv([(3, 4, d2)]).splitlines()[1].endswith(",")
