import logging

import numpy as np
import pytest

from phpnn.data import BallTransform, Dataset, gen_simulation
from phpnn.decomposition import (DecompFit, DecompositionError, fit_domain_decomp, fit_intensity_decomp,
                                 predict_domain_decomp, predict_intensity_decomp, read_decomp, write_decomp)
from phpnn.fitting import Fit, SMCConfig, fit_model
from phpnn.geometry import DomainPartition, GeometryError, HyperplaneSet
from phpnn.inference import ParticleEnsemble
from phpnn.model import Hyperparams, ModelParams

SMALL = SMCConfig(particles=12, iterations=3)


def _identity(p):
    return BallTransform(np.zeros(p), np.ones(p), 1.0)


def _constant_fit(value, p=1):
    ens = ParticleEnsemble.from_params([ModelParams(HyperplaneSet.empty(p), [value], 0.01)])
    return Fit(ens, _identity(p))


def _same_arrays(a, b):
    for name in ("normals", "offsets", "weights", "sigma_sq", "log_weights"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


@pytest.fixture(scope="module")
def sim():
    data, _ = gen_simulation(2, 4, 400, 0.1, np.random.default_rng(2))
    return data


def test_intensity_single_block_is_whole_fit(sim):
    hyper = Hyperparams(n_planes=4)
    dec = fit_intensity_decomp(sim, hyper, 1, SMALL, seed=5)
    whole = fit_model(sim, hyper, SMALL, seed=5)
    _same_arrays(dec.ensembles[0], whole.ensemble)
    np.testing.assert_array_equal(dec.predict(sim.X), whole.predict_mean(sim.X))


def test_intensity_splits_plane_budget(sim):
    dec = fit_intensity_decomp(sim, Hyperparams(n_planes=40), 4, SMALL, seed=1)
    assert dec.K == 4 and dec.scheme == "intensity"
    assert [e.n_planes for e in dec.ensembles] == [10] * 4
    assert dec.cell_sizes == [sim.n] * 4
    # sub-fits are independent draws, not copies
    assert not np.array_equal(dec.ensembles[0].offsets, dec.ensembles[1].offsets)


def test_intensity_indivisible_budget(sim):
    with pytest.raises(DecompositionError, match=r"n_planes=10.*K=4"):
        fit_intensity_decomp(sim, Hyperparams(n_planes=10), 4, SMALL)


def test_intensity_prediction_is_mean_of_submodels(sim):
    dec = fit_intensity_decomp(sim, Hyperparams(n_planes=4), 2, SMALL, seed=3)
    X = sim.X[:30]
    expected = np.mean([f.ensemble.predict_mean(f.transform.apply(X)) for f in dec.submodels], axis=0)
    np.testing.assert_allclose(predict_intensity_decomp(dec, X), expected, rtol=1e-12)


def test_intensity_aggregation_examples():
    X = np.zeros((3, 1))
    assert np.all(predict_intensity_decomp(DecompFit("intensity", [_constant_fit(1.0), _constant_fit(3.0)]), X) == 2.0)
    same = DecompFit("intensity", [_constant_fit(0.7)] * 3)
    np.testing.assert_allclose(predict_intensity_decomp(same, X), _constant_fit(0.7).predict_mean(X), rtol=1e-15)


def test_domain_single_cell_is_whole_fit(sim):
    hyper = Hyperparams(n_planes=4)
    dec = fit_domain_decomp(sim, hyper, DomainPartition(0, (), 1.0), SMALL, seed=9)
    whole = fit_model(sim, hyper, SMALL, seed=9)
    _same_arrays(dec.ensembles[0], whole.ensemble)


def test_domain_routing_partitions_rows(sim):
    part = DomainPartition.even(0, 4, 1.0)
    assert part.cut_points == pytest.approx((-0.5, 0.0, 0.5))
    dec = fit_domain_decomp(sim, Hyperparams(n_planes=3), part, SMALL, seed=2)
    assert sum(dec.cell_sizes) == sim.n
    cells = part.assign_rows(sim.X)
    assert dec.cell_sizes == [int(np.sum(cells == c)) for c in range(4)]
    assert all(e.n_planes == 3 for e in dec.ensembles)


def test_domain_planes_per_cell(sim):
    dec = fit_domain_decomp(sim, Hyperparams(n_planes=40), DomainPartition.even(0, 2, 1.0), SMALL,
                            planes_per_cell=10)
    assert [e.n_planes for e in dec.ensembles] == [10, 10]


def test_domain_prediction_uses_owning_cell(sim):
    part = DomainPartition.even(0, 2, 1.0)
    dec = fit_domain_decomp(sim, Hyperparams(n_planes=2), part, SMALL, seed=4)
    X = sim.X[:40]
    cells = part.assign_rows(X)
    expected = [dec.submodels[c].predict_mean(X[i:i + 1])[0] for i, c in enumerate(cells)]
    np.testing.assert_allclose(predict_domain_decomp(dec, X), expected, rtol=1e-12)


def test_domain_step_function_and_tie_rule():
    part = DomainPartition(0, (0.0,), 1.0)
    dec = DecompFit("domain", [_constant_fit(1.0), _constant_fit(2.0)], part)
    X = np.array([[-0.9], [-1e-12], [0.0], [0.4]])
    np.testing.assert_allclose(predict_domain_decomp(dec, X), [1, 1, 2, 2])
    with pytest.raises(GeometryError):
        predict_domain_decomp(dec, np.array([[1.5]]))
    np.testing.assert_allclose(predict_domain_decomp(dec, np.array([[1.5]]), clamp=True), [2.0])


def test_scheme_mismatch_errors():
    dec = DecompFit("intensity", [_constant_fit(1.0)])
    with pytest.raises(DecompositionError):
        predict_domain_decomp(dec, np.zeros((1, 1)))
    with pytest.raises(DecompositionError):
        DecompFit("domain", [_constant_fit(1.0)], DomainPartition(0, (0.0,), 1.0))
    with pytest.raises(DecompositionError):
        DecompFit("spectral", [_constant_fit(1.0)])


def test_empty_cell_gets_prior_submodel(caplog):
    rng = np.random.default_rng(0)
    X = np.column_stack([rng.uniform(-1, -0.1, 50), rng.uniform(-1, 1, 50)])
    data = Dataset(X, rng.standard_normal(50))
    with caplog.at_level(logging.WARNING):
        dec = fit_domain_decomp(data, Hyperparams(n_planes=2), DomainPartition(0, (0.0,), 1.0), SMALL)
    assert "no rows" in caplog.text
    assert dec.cell_sizes == [50, 0]
    assert dec.submodels[1].extra.get("prior_only")
    assert np.all(np.isfinite(dec.predict(np.array([[0.5, 0.0]]))))


def test_manifest_round_trip(tmp_path, sim):
    dec = fit_domain_decomp(sim, Hyperparams(n_planes=2), DomainPartition.even(0, 3, 1.0), SMALL, seed=1)
    path = write_decomp(dec, tmp_path / "dec")
    back = read_decomp(path)
    assert back.scheme == "domain" and back.K == 3
    assert back.partition.cut_points == dec.partition.cut_points
    for a, b in zip(dec.ensembles, back.ensembles):
        _same_arrays(a, b)
    np.testing.assert_array_equal(back.predict(sim.X), dec.predict(sim.X))
