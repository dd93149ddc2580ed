"""Scaling by decomposition: split the plane budget across independent
sub-models (``intensity``) or split the input domain into slabs (``domain``)."""
from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .data import BallTransform, Dataset, fit_ball_transform, read_transform, write_transform
from .evaluation import PredictiveBand, posterior_predictive
from .fitting import Fit, SMCConfig, fit_model, sub_seed
from .geometry import DomainPartition
from .inference import ParticleEnsemble, _prior_ensemble, particle_stream, read_ensemble, write_ensemble
from .model import Hyperparams

__all__ = [
    "DecompositionError",
    "DecompFit",
    "fit_intensity_decomp",
    "predict_intensity_decomp",
    "fit_domain_decomp",
    "predict_domain_decomp",
    "write_decomp",
    "read_decomp",
]

log = logging.getLogger(__name__)


class DecompositionError(ValueError):
    pass


@dataclass
class DecompFit:
    scheme: str
    submodels: list[Fit]
    partition: DomainPartition | None = None
    cell_sizes: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.scheme not in ("intensity", "domain"):
            raise DecompositionError(f"unknown scheme {self.scheme!r}")
        if not self.submodels:
            raise DecompositionError("a decomposition needs at least one sub-model")
        if self.scheme == "domain":
            if self.partition is None or self.partition.n_cells != len(self.submodels):
                raise DecompositionError("domain scheme needs a partition with one cell per sub-model")
        if len({f.ensemble.dim for f in self.submodels}) != 1:
            raise DecompositionError("sub-models disagree on the input dimension")

    @property
    def K(self) -> int:
        return len(self.submodels)

    @property
    def ensembles(self) -> list[ParticleEnsemble]:
        return [f.ensemble for f in self.submodels]

    def predict(self, X, clamp: bool = False) -> np.ndarray:
        if self.scheme == "intensity":
            return predict_intensity_decomp(self, X)
        return predict_domain_decomp(self, X, clamp=clamp)


def fit_intensity_decomp(data: Dataset, hyper: Hyperparams, K: int, smc: SMCConfig = SMCConfig(),
                         seed=0, *, workers: int = 1) -> DecompFit:
    """``K`` independent fits on the full data, each with ``n_planes / K`` planes."""
    if int(K) != K or K < 1:
        raise DecompositionError(f"K must be a positive integer, got {K!r}")
    if hyper.n_planes % K:
        raise DecompositionError(
            f"n_planes={hyper.n_planes} is not divisible by K={K}"
        )
    sub_hyper = hyper.with_planes(hyper.n_planes // K)
    transform = fit_ball_transform(data.X, hyper.domain_radius)
    subs = [fit_model(data, sub_hyper, smc, sub_seed(seed, i), workers=workers, transform=transform)
            for i in range(K)]
    return DecompFit("intensity", subs, cell_sizes=[data.n] * K)


def predict_intensity_decomp(fit: DecompFit, X) -> np.ndarray:
    """Average of the sub-models' posterior-mean predictions."""
    if fit.scheme != "intensity":
        raise DecompositionError(f"expected an intensity decomposition, got {fit.scheme!r}")
    return np.mean([f.predict_mean(X) for f in fit.submodels], axis=0)


def _prior_fit(data: Dataset, hyper: Hyperparams, smc: SMCConfig, seed, transform: BallTransform) -> Fit:
    ens = _prior_ensemble(hyper, data.p, smc.particles, particle_stream(seed, 0, 0))
    return Fit(ens, transform, 0.0, 0, {"prior_only": True})


def fit_domain_decomp(data: Dataset, hyper: Hyperparams, partition: DomainPartition,
                      smc: SMCConfig = SMCConfig(), seed=0, *, workers: int = 1,
                      planes_per_cell: int | None = None, clamp: bool = False) -> DecompFit:
    """One independent fit per slab, on the rows that fall in it.

    Every sub-fit uses ``planes_per_cell`` planes (default ``hyper.n_planes``)
    and normalizes its own rows to the unit ball. A slab without rows gets a
    prior-only sub-model and a warning.
    """
    if planes_per_cell is not None:
        hyper = hyper.with_planes(planes_per_cell)
    cells = partition.assign_rows(data.X, clamp=clamp)
    subs, sizes = [], []
    for i in range(partition.n_cells):
        rows = np.flatnonzero(cells == i)
        sizes.append(int(rows.size))
        if rows.size == 0:
            log.warning("cell %d of the partition holds no rows; using a prior-only sub-model", i)
            subs.append(_prior_fit(data, hyper, smc, sub_seed(seed, i),
                                   fit_ball_transform(data.X, hyper.domain_radius)))
            continue
        subs.append(fit_model(data.subset(rows), hyper, smc, sub_seed(seed, i), workers=workers))
    return DecompFit("domain", subs, partition, sizes)


def predict_domain_decomp(fit: DecompFit, X, clamp: bool = False) -> np.ndarray:
    """Route each row to its slab's sub-model."""
    if fit.scheme != "domain":
        raise DecompositionError(f"expected a domain decomposition, got {fit.scheme!r}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    cells = fit.partition.assign_rows(X, clamp=clamp)
    out = np.empty(X.shape[0])
    for i, sub in enumerate(fit.submodels):
        rows = cells == i
        if rows.any():
            out[rows] = sub.predict_mean(X[rows])
    return out


def predictive_domain_decomp(fit: DecompFit, X, level: float = 0.95, clamp: bool = False) -> PredictiveBand:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    cells = fit.partition.assign_rows(X, clamp=clamp)
    mean, lower, upper = (np.empty(X.shape[0]) for _ in range(3))
    for i, sub in enumerate(fit.submodels):
        rows = cells == i
        if rows.any():
            band = sub.predictive(X[rows], level)
            mean[rows], lower[rows], upper[rows] = band.mean, band.lower, band.upper
    return PredictiveBand(mean, lower, upper, float(level))


_MANIFEST = "phpnn-decomposition"


def write_decomp(fit: DecompFit, directory) -> str:
    """Write one ensemble snapshot and transform per sub-model plus a JSON
    manifest listing them; returns the manifest path."""
    os.makedirs(directory, exist_ok=True)
    subs = []
    for i, sub in enumerate(fit.submodels):
        ens_name, tr_name = f"sub{i}.ensemble.jsonl", f"sub{i}.transform"
        write_ensemble(sub.ensemble, os.path.join(directory, ens_name))
        write_transform(sub.transform, os.path.join(directory, tr_name))
        subs.append({"ensemble": ens_name, "transform": tr_name, "rows": fit.cell_sizes[i] if fit.cell_sizes else None,
                     "seconds": sub.seconds, "prior_only": bool(sub.extra.get("prior_only", False))})
    manifest = {"format": _MANIFEST, "version": 1, "scheme": fit.scheme, "K": fit.K, "submodels": subs}
    if fit.partition is not None:
        manifest["partition"] = {"axis": fit.partition.axis, "cut_points": list(fit.partition.cut_points),
                                 "domain_radius": fit.partition.domain_radius}
    path = os.path.join(directory, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return path


def read_decomp(path) -> DecompFit:
    with open(path) as fh:
        manifest = json.load(fh)
    if manifest.get("format") != _MANIFEST:
        raise DecompositionError(f"{path}: not a decomposition manifest")
    base = os.path.dirname(os.path.abspath(path))
    subs, sizes = [], []
    for rec in manifest["submodels"]:
        ens = read_ensemble(os.path.join(base, rec["ensemble"]))
        tr = read_transform(os.path.join(base, rec["transform"]))
        subs.append(Fit(ens, tr, rec.get("seconds", 0.0), rec.get("rows") or 0,
                        {"prior_only": rec.get("prior_only", False)}))
        sizes.append(rec.get("rows") or 0)
    part = None
    if "partition" in manifest:
        pr = manifest["partition"]
        part = DomainPartition(pr["axis"], tuple(pr["cut_points"]), pr["domain_radius"])
    return DecompFit(manifest["scheme"], subs, part, sizes)
