import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from phpnn.geometry import (DomainPartition, GeometryError, Hyperplane, HyperplaneSet, feature_map, relu,
                            restrict, sample_hyperplane, sample_php, sample_unit_normal, superpose)
from stats_helpers import chisquare_counts, poisson_gof


def test_unit_normal_p1_is_a_fair_sign(rng):
    draws = np.array([sample_unit_normal(1, rng)[0] for _ in range(10_000)])
    assert set(np.unique(draws)) == {-1.0, 1.0}
    assert stats.binomtest(int((draws > 0).sum()), draws.size, 0.5).pvalue > 0.01


def test_unit_normal_has_unit_norm(rng):
    for _ in range(100):
        assert abs(np.linalg.norm(sample_unit_normal(3, rng)) - 1.0) < 1e-10


def test_unit_normal_angles_uniform_on_circle(rng):
    v = np.array([sample_unit_normal(2, rng) for _ in range(100_000)])
    angles = np.mod(np.arctan2(v[:, 1], v[:, 0]), 2 * np.pi)
    counts = np.histogram(angles, bins=36, range=(0, 2 * np.pi))[0]
    assert chisquare_counts(counts, np.full(36, 1 / 36)) > 0.01


@pytest.mark.parametrize("p", [0, -1, 1.5])
def test_unit_normal_rejects_bad_dimension(p, rng):
    with pytest.raises(GeometryError):
        sample_unit_normal(p, rng)


def test_hyperplane_offsets_uniform(rng):
    offsets = np.array([sample_hyperplane(2, 1.0, rng).offset for _ in range(100_000)])
    assert stats.kstest(offsets, "uniform").pvalue > 0.01


def test_hyperplane_offsets_in_range(rng):
    offsets = [sample_hyperplane(3, 2.0, rng).offset for _ in range(2000)]
    assert min(offsets) > 0 and max(offsets) < 2


def test_sampled_hyperplane_satisfies_invariants(rng):
    h = sample_hyperplane(2, 1.0, rng)
    assert abs(np.linalg.norm(h.normal) - 1) < 1e-10
    assert 0 < h.offset <= 1


@pytest.mark.parametrize("l", [0.0, -1.0])
def test_hyperplane_rejects_bad_radius(l, rng):
    with pytest.raises(GeometryError):
        sample_hyperplane(2, l, rng)


def test_hyperplane_validation():
    with pytest.raises(GeometryError):
        Hyperplane(np.array([1.0, 1.0]), 0.5)
    with pytest.raises(GeometryError):
        Hyperplane(np.array([1.0, 0.0]), 0.0)
    with pytest.raises(GeometryError):
        HyperplaneSet(np.array([[1.0, 0.0]]), np.array([1.5]), domain_radius=1.0)


def test_php_fixed_count(rng):
    assert len(sample_php(2, 1.0, rng, count=5)) == 5


def test_php_poisson_mean_count(rng):
    counts = np.array([len(sample_php(2, 1.0, rng, intensity=40.0)) for _ in range(10_000)])
    band = 3 * math.sqrt(40 / 10_000)
    assert abs(counts.mean() - 40) < band


def test_php_empty_gives_intercept_only_features(rng):
    planes = sample_php(2, 1.0, rng, count=0)
    assert len(planes) == 0
    Z = feature_map(rng.uniform(-0.5, 0.5, (4, 2)), planes)
    np.testing.assert_array_equal(Z, np.ones((4, 1)))


def test_php_needs_exactly_one_mode(rng):
    with pytest.raises(GeometryError):
        sample_php(2, 1.0, rng)
    with pytest.raises(GeometryError):
        sample_php(2, 1.0, rng, count=3, intensity=3.0)
    with pytest.raises(GeometryError):
        sample_php(2, 1.0, rng, intensity=0.0)


@pytest.mark.parametrize("c, expected", [(-1.0, 0.0), (2.0, 2.0), (0.0, 0.0)])
def test_relu(c, expected):
    assert relu(c) == expected


def test_feature_map_origin_row(rng):
    planes = sample_php(3, 1.0, rng, count=4)
    np.testing.assert_array_equal(feature_map(np.zeros((1, 3)), planes), [[1, 0, 0, 0, 0]])


def test_feature_map_worked_example():
    planes = HyperplaneSet(np.array([[1.0, 0.0]]), np.array([0.5]))
    Z = feature_map(np.array([[0.7, 3.0]]), planes)
    assert Z[0, 0] == 1.0
    assert Z[0, 1] == pytest.approx(0.2, abs=1e-15)


def test_feature_map_matches_loop(rng):
    X = rng.uniform(-1, 1, (5, 3))
    planes = sample_php(3, 1.0, rng, count=4)
    expected = np.empty((5, 5))
    for i in range(5):
        expected[i, 0] = 1.0
        for j, h in enumerate(planes.planes):
            s = sum(X[i, k] * h.normal[k] for k in range(3)) - h.offset
            expected[i, j + 1] = max(0.0, s)
    np.testing.assert_allclose(feature_map(X, planes), expected, rtol=0, atol=1e-14)


def test_feature_map_shape_error(rng):
    with pytest.raises(GeometryError):
        feature_map(np.zeros((3, 2)), sample_php(3, 1.0, rng, count=2))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 20), m=st.integers(0, 6), p=st.integers(1, 4))
def test_feature_map_properties(seed, n, m, p):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, p))
    planes = sample_php(p, 1.0, rng, count=m)
    Z = feature_map(X, planes)
    assert np.all(Z >= 0)
    assert np.all(Z[:, 0] == 1)
    np.testing.assert_array_equal(Z, feature_map(X, planes))
    order = rng.permutation(m)
    np.testing.assert_array_equal(feature_map(X, planes.permuted(order))[:, 1:], Z[:, 1:][:, order])


def test_superpose_empty_sets():
    out = superpose([HyperplaneSet.empty(2), HyperplaneSet.empty(2)])
    assert len(out) == 0 and out.dim == 2


def test_superpose_preserves_order(rng):
    a = sample_php(2, 1.0, rng, count=3)
    b = sample_php(2, 1.0, rng, count=7)
    out = superpose([a, b])
    assert len(out) == 10
    assert out.planes == a.planes + b.planes


def test_superpose_rejects_mismatched_domains(rng):
    with pytest.raises(GeometryError):
        superpose([sample_php(2, 1.0, rng, count=1), sample_php(2, 2.0, rng, count=1)])
    with pytest.raises(GeometryError):
        superpose([sample_php(2, 1.0, rng, count=1), sample_php(3, 1.0, rng, count=1)])


def test_superposition_of_poisson_processes_is_poisson(rng):
    counts = [len(superpose([sample_php(2, 1.0, rng, intensity=10.0) for _ in range(4)]))
              for _ in range(10_000)]
    assert poisson_gof(counts, 40.0) > 0.01


def _foot_tail(c):
    # p = 3: a normal's coordinate is uniform on [-1, 1], the offset uniform on
    # (0, 1); P(offset * coordinate >= c) for 0 <= c <= 1
    return 0.5 * (1 - c + (c * math.log(c) if c > 0 else 0.0))


def test_restrict_to_whole_domain_is_identity(rng):
    planes = sample_php(2, 1.0, rng, count=8)
    assert restrict(planes, DomainPartition(0, (), 1.0), 0) == planes


def test_restrict_to_empty_region(rng):
    planes = sample_php(2, 1.0, rng, count=8)
    assert len(restrict(planes, DomainPartition(0, (), 1.0), region=(0.3, 0.3))) == 0


def test_restriction_of_poisson_process_is_poisson(rng):
    lam, lo = 30.0, 0.25
    q = _foot_tail(lo)
    part = DomainPartition(0, (lo,), 1.0)
    counts = [len(restrict(sample_php(3, 1.0, rng, intensity=lam), part, 1)) for _ in range(10_000)]
    assert poisson_gof(counts, q * lam) > 0.01


def test_restricted_counts_on_disjoint_slabs_uncorrelated(rng):
    part = DomainPartition.even(0, 4, 1.0)
    counts = np.array([[len(restrict(planes, part, c)) for c in range(4)]
                       for planes in (sample_php(3, 1.0, rng, intensity=40.0) for _ in range(10_000))])
    r = np.corrcoef(counts.T)
    assert np.all(np.abs(r[np.triu_indices(4, 1)]) < 0.05)
    # each cell's count is Poisson with the cell's share of the intensity
    for c in range(4):
        lo, hi = part.bounds(c)
        q = _foot_tail(max(lo, 0)) - _foot_tail(max(hi, 0)) if lo >= 0 else \
            _foot_tail(max(-hi, 0)) - _foot_tail(-lo)
        assert poisson_gof(counts[:, c], 40.0 * q) > 0.01


def test_partition_reassembly_reproduces_the_set(rng):
    part = DomainPartition.even(1, 5, 1.0)
    for _ in range(200):
        planes = sample_php(2, 1.0, rng, intensity=25.0)
        pieces = [restrict(planes, part, c) for c in range(part.n_cells)]
        merged = superpose(pieces)
        assert sorted(map(hash, merged.planes)) == sorted(map(hash, planes.planes))
        assert sorted(merged.planes, key=hash) == sorted(planes.planes, key=hash)


def test_partition_even_cuts_and_tie_rule():
    part = DomainPartition.even(0, 4, 1.0)
    np.testing.assert_allclose(part.cut_points, (-0.5, 0.0, 0.5))
    np.testing.assert_array_equal(part.locate([-1.0, -0.5, -0.49, 0.0, 0.5, 1.0]), [0, 1, 1, 2, 3, 3])
    with pytest.raises(GeometryError):
        part.locate([1.5])
    assert part.locate([1.5], clamp=True)[0] == 3


def test_partition_validation():
    with pytest.raises(GeometryError):
        DomainPartition(0, (0.5, 0.1), 1.0)
    with pytest.raises(GeometryError):
        DomainPartition(0, (1.0,), 1.0)
