import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phpnn.data import gen_simulation
from phpnn.evaluation import (EvaluationError, PredictiveBand, PredictiveSummary, coverage, mean_ci_length,
                              mixture_cdf, ols_predict, posterior_predictive, read_metrics, rmse,
                              write_metrics, write_point_table)
from phpnn.geometry import HyperplaneSet, sample_php
from phpnn.inference import DegenerateEnsembleError, ParticleEnsemble
from phpnn.model import ModelParams


def _constant_ensemble(values, sigma_sq, log_weights=None):
    params = [ModelParams(HyperplaneSet.empty(1), [v], s) for v, s in zip(values, sigma_sq)]
    return ParticleEnsemble.from_params(params, log_weights)


def _random_ensemble(rng, L=7, p=2, m=2):
    params = [ModelParams(sample_php(p, 1.0, rng, count=m), rng.standard_normal(m + 1), rng.uniform(0.01, 0.5))
              for _ in range(L)]
    return ParticleEnsemble.from_params(params, rng.standard_normal(L))


def test_single_particle_interval():
    band = posterior_predictive(_constant_ensemble([0.0], [1.0]), np.zeros((1, 1)), 0.95)
    assert band.lower[0] == pytest.approx(-1.959964, abs=1e-6)
    assert band.upper[0] == pytest.approx(1.959964, abs=1e-6)
    assert band.mean[0] == 0.0


def test_duplicate_particles_match_single():
    one = posterior_predictive(_constant_ensemble([0.3], [0.2]), np.zeros((1, 1)))
    two = posterior_predictive(_constant_ensemble([0.3, 0.3], [0.2, 0.2]), np.zeros((1, 1)))
    for name in ("mean", "lower", "upper"):
        assert getattr(one, name)[0] == pytest.approx(getattr(two, name)[0], abs=1e-8)


def test_interval_endpoints_hit_mixture_quantiles(rng):
    ens = _random_ensemble(rng)
    X = rng.uniform(-0.7, 0.7, (25, 2))
    for level in (0.5, 0.9, 0.95):
        band = posterior_predictive(ens, X, level)
        preds = ens.predict_all(X)
        sds = np.sqrt(ens.sigma_sq)
        w = ens.normalized_weights()
        np.testing.assert_allclose(mixture_cdf(band.lower, preds, sds, w), (1 - level) / 2, atol=1e-6)
        np.testing.assert_allclose(mixture_cdf(band.upper, preds, sds, w), (1 + level) / 2, atol=1e-6)
        np.testing.assert_allclose(band.mean, w @ preds, rtol=1e-12)


def test_intervals_nested_in_level(rng):
    ens = _random_ensemble(rng)
    X = rng.uniform(-0.7, 0.7, (25, 2))
    bands = [posterior_predictive(ens, X, lv) for lv in (0.5, 0.9, 0.95)]
    for narrow, wide in zip(bands, bands[1:]):
        assert np.all(wide.lower <= narrow.lower) and np.all(narrow.upper <= wide.upper)


def test_mean_invariant_under_split_duplication(rng):
    ens = _random_ensemble(rng, L=4)
    X = rng.uniform(-0.7, 0.7, (10, 2))
    w = ens.normalized_weights()
    params = [ens.params(t) for t in range(4)]
    split = ParticleEnsemble.from_params(params + [params[0]], np.log(np.r_[w[0] / 2, w[1:], w[0] / 2]))
    a = posterior_predictive(ens, X)
    b = posterior_predictive(split, X)
    np.testing.assert_allclose(a.mean, b.mean, rtol=1e-12)
    np.testing.assert_allclose(a.lower, b.lower, atol=1e-8)


def test_predictive_errors():
    with pytest.raises(EvaluationError):
        posterior_predictive(_constant_ensemble([0.0], [1.0]), np.zeros((1, 1)), 1.0)
    with pytest.raises(DegenerateEnsembleError):
        posterior_predictive(_constant_ensemble([0.0], [1.0], [-np.inf]), np.zeros((1, 1)))


def test_rmse_examples():
    assert rmse([1, 2, 3], [1, 2, 3]) == 0
    assert rmse([3, 4], [0, 0]) == pytest.approx(math.sqrt(12.5))
    with pytest.raises(EvaluationError):
        rmse([], [])
    with pytest.raises(EvaluationError):
        rmse([1], [1, 2])


def test_rmse_noise_floor():
    data, truth = gen_simulation(2, 2, 5000, 0.1, np.random.default_rng(21))
    value = rmse(truth.predict(data.X), data.y)
    # sd of the sample sd is about sigma / sqrt(2 n)
    assert abs(value - 0.1) < 3 * 0.1 / math.sqrt(2 * 5000)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-100, 100).filter(lambda v: abs(v) > 1e-3))
def test_rmse_permutation_and_scale(seed, a):
    rng = np.random.default_rng(seed)
    p, y = rng.standard_normal((2, 30))
    perm = rng.permutation(30)
    assert rmse(p[perm], y[perm]) == pytest.approx(rmse(p, y), rel=1e-12)
    assert rmse(a * p, a * y) == pytest.approx(abs(a) * rmse(p, y), rel=1e-12)


def test_coverage_examples():
    y = np.array([0.1, -3.0, 7.0])
    wide = [PredictiveSummary(0, -1e9, 1e9, 0.95)] * 3
    assert coverage(wide, y) == 1.0
    empty = [PredictiveSummary(5, 5, 5, 0.95)] * 3
    assert coverage(empty, y) == 0.0
    band = PredictiveBand(np.zeros(3), np.array([0, -4, 8.0]), np.array([1, -2, 9.0]), 0.95)
    assert coverage(band, y) == pytest.approx(2 / 3)
    with pytest.raises(EvaluationError):
        coverage([], [])


def test_ci_length_examples():
    assert mean_ci_length([PredictiveSummary(0, -1, 1, 0.9)] * 4) == 2
    band = posterior_predictive(_constant_ensemble([0.0], [0.01]), np.zeros((3, 1)))
    assert mean_ci_length(band) == pytest.approx(2 * 1.959964 * 0.1, abs=1e-6)
    with pytest.raises(EvaluationError):
        mean_ci_length([])


def test_ols_recovers_linear_function(rng):
    X = rng.standard_normal((50, 3))
    y = 1.5 + X @ [1.0, -2.0, 0.5]
    np.testing.assert_allclose(ols_predict(X, y, X[:5]), y[:5], atol=1e-10)


def test_metrics_and_points_files(tmp_path):
    path = tmp_path / "m.txt"
    write_metrics(path, {"rmse": 0.1234567890123, "n_test": 10, "mode": "whole"})
    assert read_metrics(path) == {"rmse": 0.1234567890123, "n_test": 10, "mode": "whole"}
    band = PredictiveBand(np.array([1.0]), np.array([0.5]), np.array([1.5]), 0.95)
    write_point_table(tmp_path / "p.csv", band, [1.2])
    assert (tmp_path / "p.csv").read_text().splitlines() == ["mean,lower,upper,y", "1.0,0.5,1.5,1.2"]
