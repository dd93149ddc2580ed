"""Whole-model fitting: normalize inputs to the unit ball, run the sampler,
and predict back in the original coordinates."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data import BallTransform, Dataset, fit_ball_transform
from .evaluation import PredictiveBand, posterior_predictive
from .inference import ParticleEnsemble, annealed_smc, make_schedule, _as_seed
from .model import Hyperparams

__all__ = ["SMCConfig", "Fit", "fit_model", "sub_seed"]


@dataclass(frozen=True)
class SMCConfig:
    particles: int = 1000
    iterations: int = 100
    schedule: str = "linear"
    rate: float = 2.0
    resampler: str = "multinomial"
    adaptive: bool = False
    ess_threshold: float = 0.5
    order: str = "weight-first"

    def __post_init__(self):
        if self.particles < 2:
            raise ValueError(f"need at least two particles, got {self.particles}")
        if self.iterations < 1:
            raise ValueError(f"need at least one annealing step, got {self.iterations}")
        if self.schedule not in ("linear", "geometric"):
            raise ValueError(f"unknown schedule shape {self.schedule!r}")
        if self.resampler not in ("multinomial", "systematic"):
            raise ValueError(f"unknown resampler {self.resampler!r}")
        if not 0 < self.ess_threshold <= 1:
            raise ValueError("ess_threshold must lie in (0, 1]")
        if self.order not in ("weight-first", "move-first"):
            raise ValueError(f"unknown step order {self.order!r}")


@dataclass
class Fit:
    ensemble: ParticleEnsemble
    transform: BallTransform
    seconds: float = 0.0
    n_train: int = 0
    extra: dict = field(default_factory=dict)

    def predict_mean(self, X) -> np.ndarray:
        return self.ensemble.predict_mean(self.transform.apply(X))

    def predictive(self, X, level: float = 0.95) -> PredictiveBand:
        return posterior_predictive(self.ensemble, self.transform.apply(X), level)


def sub_seed(seed, i: int) -> tuple[int, ...]:
    """Seed of the ``i``-th independent sub-fit; sub-fit 0 reuses ``seed``."""
    key = _as_seed(seed)
    return key if i == 0 else (*key, i)


def fit_model(data: Dataset, hyper: Hyperparams, smc: SMCConfig = SMCConfig(), seed=0, *,
              workers: int = 1, transform: BallTransform | None = None) -> Fit:
    """Fit on ``data`` given in original coordinates.

    The inputs are mapped into the ball of radius ``hyper.domain_radius``
    (with ``transform`` if supplied, otherwise one fitted to ``data``).
    """
    if transform is None:
        transform = fit_ball_transform(data.X, hyper.domain_radius)
    norm = Dataset(transform.apply(data.X), data.y)
    schedule = make_schedule(smc.iterations, smc.schedule, smc.rate)
    tic = time.perf_counter()
    ens = annealed_smc(norm, hyper, schedule, smc.particles, seed, resampler=smc.resampler,
                       adaptive=smc.adaptive, ess_threshold=smc.ess_threshold, order=smc.order,
                       workers=workers)
    return Fit(ens, transform, time.perf_counter() - tic, data.n)
