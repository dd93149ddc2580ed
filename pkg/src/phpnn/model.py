"""The hierarchical regression model: priors, predictor and Gaussian likelihood."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import HyperplaneSet, feature_map, sample_php

__all__ = [
    "ModelError",
    "Hyperparams",
    "ModelParams",
    "sample_prior",
    "predict_point",
    "predict",
    "log_likelihood",
    "gaussian_loglik",
]

_LOG_2PI = float(np.log(2.0 * np.pi))


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    """Prior settings. ``sigma_sq ~ IG(a0, b0)`` (shape, rate-of-the-gamma),
    ``w_j ~ N(mu0, sigma0_sq)`` for every weight including the intercept."""

    a0: float = 1.0
    b0: float = 0.01
    mu0: float = 0.0
    sigma0_sq: float = 1.0
    n_planes: int = 2
    domain_radius: float = 1.0

    def __post_init__(self):
        for name in ("a0", "b0", "sigma0_sq", "domain_radius"):
            if not getattr(self, name) > 0:
                raise ModelError(f"{name} must be positive, got {getattr(self, name)!r}")
        if int(self.n_planes) != self.n_planes or self.n_planes < 0:
            raise ModelError(f"n_planes must be a non-negative integer, got {self.n_planes!r}")
        if not np.isfinite(self.mu0):
            raise ModelError("mu0 must be finite")
        object.__setattr__(self, "n_planes", int(self.n_planes))

    def with_planes(self, n_planes: int) -> "Hyperparams":
        return Hyperparams(self.a0, self.b0, self.mu0, self.sigma0_sq, n_planes, self.domain_radius)


@dataclass(frozen=True)
class ModelParams:
    planes: HyperplaneSet
    weights: np.ndarray
    sigma_sq: float

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size != len(self.planes) + 1:
            raise ModelError(f"expected {len(self.planes) + 1} weights, got {w.size}")
        if not self.sigma_sq > 0:
            raise ModelError(f"sigma_sq must be positive, got {self.sigma_sq!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "sigma_sq", float(self.sigma_sq))

    @property
    def dim(self) -> int:
        return self.planes.dim

    def replace(self, **changes) -> "ModelParams":
        fields = {"planes": self.planes, "weights": self.weights, "sigma_sq": self.sigma_sq}
        fields.update(changes)
        return ModelParams(**fields)


def sample_inverse_gamma(shape, rate, rng: np.random.Generator, size=None):
    """IG(shape, rate) as ``rate / Gamma(shape, 1)``."""
    return rate / rng.standard_gamma(shape, size)


def sample_prior(hyper: Hyperparams, p: int, rng: np.random.Generator) -> ModelParams:
    planes = sample_php(p, hyper.domain_radius, rng, count=hyper.n_planes)
    sigma_sq = float(sample_inverse_gamma(hyper.a0, hyper.b0, rng))
    weights = hyper.mu0 + np.sqrt(hyper.sigma0_sq) * rng.standard_normal(hyper.n_planes + 1)
    return ModelParams(planes, weights, sigma_sq)


def predict(theta: ModelParams, X) -> np.ndarray:
    """Noiseless mean response for every row of ``X``."""
    return feature_map(X, theta.planes) @ theta.weights


def predict_point(theta: ModelParams, x) -> float:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return float(predict(theta, x)[0])


def gaussian_loglik(sum_sq, n, sigma_sq):
    """Log density of ``n`` independent N(0, sigma_sq) residuals with the given
    residual sum of squares."""
    return -0.5 * n * (_LOG_2PI + np.log(sigma_sq)) - 0.5 * sum_sq / sigma_sq


def log_likelihood(theta: ModelParams, X, y) -> float:
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size == 0:
        raise ModelError("log-likelihood of an empty dataset")
    if not theta.sigma_sq > 0:
        raise ModelError("sigma_sq must be positive")
    resid = y - predict(theta, X)
    return float(gaussian_loglik(resid @ resid, y.size, theta.sigma_sq))
