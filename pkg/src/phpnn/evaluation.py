"""Posterior-predictive intervals and the regression metrics used in reports."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .inference import ParticleEnsemble

__all__ = [
    "EvaluationError",
    "PredictiveSummary",
    "PredictiveBand",
    "posterior_predictive",
    "mixture_cdf",
    "rmse",
    "coverage",
    "mean_ci_length",
    "ols_predict",
    "write_metrics",
    "read_metrics",
    "write_point_table",
]


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class PredictiveSummary:
    mean: float
    lower: float
    upper: float
    level: float


@dataclass(frozen=True)
class PredictiveBand:
    """Column-wise predictive summaries for many inputs."""

    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float

    def __len__(self) -> int:
        return self.mean.size

    def __getitem__(self, i) -> PredictiveSummary:
        return PredictiveSummary(float(self.mean[i]), float(self.lower[i]), float(self.upper[i]), self.level)

    def __iter__(self):
        return (self[i] for i in range(len(self)))


def mixture_cdf(q, means, sds, weights) -> np.ndarray:
    """CDF of ``sum_t weights[t] * N(means[t, i], sds[t]**2)`` at ``q[i]``."""
    return weights @ ndtr((np.asarray(q)[None, :] - means) / sds[:, None])


def _mixture_quantile(prob, means, sds, weights, tol):
    lo = (means - 12.0 * sds[:, None]).min(axis=0)
    hi = (means + 12.0 * sds[:, None]).max(axis=0)
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        below = mixture_cdf(mid, means, sds, weights) < prob
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def posterior_predictive(ensemble: ParticleEnsemble, X, level: float = 0.95, *, tol: float = 1e-9,
                         chunk: int = 2048) -> PredictiveBand:
    """Weighted predictive mean and a central interval for a new noisy response.

    The interval endpoints are the ``(1 -/+ level) / 2`` quantiles of the
    Gaussian mixture ``sum_t w_t N(f_t(x), sigma_t^2)``, located by bisection.
    """
    if not 0 < level < 1:
        raise EvaluationError(f"level must lie in (0, 1), got {level!r}")
    w = ensemble.normalized_weights()
    keep = w > 0
    X = np.atleast_2d(np.asarray(X, dtype=float))
    preds = ensemble.predict_all(X)[keep]
    w = w[keep]
    sds = np.sqrt(ensemble.sigma_sq[keep])
    mean = w @ preds
    lower = np.empty_like(mean)
    upper = np.empty_like(mean)
    a = 0.5 * (1.0 - level)
    for s in range(0, mean.size, chunk):
        sl = slice(s, s + chunk)
        lower[sl] = _mixture_quantile(a, preds[:, sl], sds, w, tol)
        upper[sl] = _mixture_quantile(1.0 - a, preds[:, sl], sds, w, tol)
    return PredictiveBand(mean, lower, upper, float(level))


def gaussian_interval(mean, sd, level):
    z = ndtri(0.5 * (1.0 + level))
    return mean - z * sd, mean + z * sd


def _pair(pred, y):
    pred = np.asarray(pred, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if pred.size != y.size:
        raise EvaluationError(f"length mismatch: {pred.size} predictions, {y.size} responses")
    if y.size == 0:
        raise EvaluationError("empty input")
    return pred, y


def rmse(predictions, y) -> float:
    pred, y = _pair(predictions, y)
    return float(np.sqrt(np.mean((pred - y) ** 2)))


def _bounds(summaries):
    if isinstance(summaries, PredictiveBand):
        return summaries.lower, summaries.upper
    summaries = list(summaries)
    return (np.array([s.lower for s in summaries], dtype=float),
            np.array([s.upper for s in summaries], dtype=float))


def coverage(summaries, y) -> float:
    lower, upper = _bounds(summaries)
    _, y = _pair(lower, y)
    return float(np.mean((lower <= y) & (y <= upper)))


def mean_ci_length(summaries) -> float:
    lower, upper = _bounds(summaries)
    if lower.size == 0:
        raise EvaluationError("empty input")
    return float(np.mean(upper - lower))


def ols_predict(X_train, y_train, X_test) -> np.ndarray:
    """Least-squares linear baseline with an intercept."""
    A = np.column_stack([np.ones(len(X_train)), X_train])
    coef, *_ = np.linalg.lstsq(A, np.asarray(y_train, dtype=float), rcond=None)
    return np.column_stack([np.ones(len(X_test)), X_test]) @ coef


def write_metrics(path, metrics: dict) -> None:
    """Flat ``key = value`` text report, one metric per line, keys in insertion order."""
    with open(path, "w") as fh:
        for k, v in metrics.items():
            fh.write(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n")


def read_metrics(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            k, _, v = line.partition("=")
            v = v.strip()
            try:
                out[k.strip()] = int(v)
            except ValueError:
                try:
                    out[k.strip()] = float(v)
                except ValueError:
                    out[k.strip()] = v
    return out


def write_point_table(path, band: PredictiveBand, y=None) -> None:
    """One row per test point: ``mean,lower,upper[,y]``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mean", "lower", "upper"] + (["y"] if y is not None else []))
        for i in range(len(band)):
            row = [repr(float(band.mean[i])), repr(float(band.lower[i])), repr(float(band.upper[i]))]
            if y is not None:
                row.append(repr(float(y[i])))
            w.writerow(row)
