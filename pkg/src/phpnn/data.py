"""Datasets: synthetic generators, CSV ingestion, splitting and ball normalization."""
from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .geometry import HyperplaneSet, feature_map, sample_unit_normals

__all__ = [
    "DataError",
    "EmptyDatasetError",
    "MalformedRowError",
    "UnknownColumnError",
    "BallTransform",
    "Dataset",
    "GroundTruth",
    "SIMULATION_PRESETS",
    "gen_simulation",
    "load_csv",
    "save_csv",
    "train_test_split",
    "normalize_to_ball",
    "read_transform",
    "write_transform",
]

log = logging.getLogger(__name__)


class DataError(ValueError):
    pass


class EmptyDatasetError(DataError):
    pass


class UnknownColumnError(DataError):
    pass


class MalformedRowError(DataError):
    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}: column {column!r} has non-numeric value {value!r}")


@dataclass(frozen=True)
class BallTransform:
    """Affine map ``x -> (x - center) / scale`` landing the data in the ball of
    radius ``radius``."""

    center: np.ndarray
    scale: np.ndarray
    radius: float = 1.0

    def apply(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.center) / self.scale

    def invert(self, Xn) -> np.ndarray:
        return np.asarray(Xn, dtype=float) * self.scale + self.center

    def to_text(self) -> str:
        fmt = lambda v: ", ".join(repr(float(x)) for x in v)
        return (
            "# phpnn ball transform: x_normalized = (x - center) / scale\n"
            f"radius = {float(self.radius)!r}\n"
            f"center = {fmt(self.center)}\n"
            f"scale = {fmt(self.scale)}\n"
        )

    @classmethod
    def from_text(cls, text: str) -> "BallTransform":
        fields = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise DataError(f"bad transform line: {line!r}")
            fields[key.strip()] = value.strip()
        try:
            center = np.array([float(v) for v in fields["center"].split(",")])
            scale = np.array([float(v) for v in fields["scale"].split(",")])
            radius = float(fields["radius"])
        except KeyError as err:
            raise DataError(f"transform record lacks key {err}") from None
        if center.shape != scale.shape:
            raise DataError("transform center and scale lengths differ")
        return cls(center, scale, radius)


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    transform: BallTransform | None = None
    row_ids: np.ndarray | None = None
    # generator-side bookkeeping, only set by gen_simulation
    noise: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2 or X.shape[0] != y.size:
            raise DataError(f"X has shape {X.shape} but y has {y.size} entries")
        if self.transform is not None and X.shape[0]:
            if np.linalg.norm(X, axis=1).max() > self.transform.radius * (1 + 1e-9):
                raise DataError("rows lie outside the recorded normalization ball")
        ids = np.arange(y.size) if self.row_ids is None else np.asarray(self.row_ids)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "row_ids", ids)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        noise = None if self.noise is None else self.noise[idx]
        return Dataset(self.X[idx], self.y[idx], self.transform, self.row_ids[idx], noise)


@dataclass(frozen=True)
class GroundTruth:
    planes: HyperplaneSet
    weights: np.ndarray
    noise_sd: float

    def predict(self, X) -> np.ndarray:
        return feature_map(X, self.planes) @ self.weights


SIMULATION_PRESETS = {
    "sim1": dict(p=2, m=2, n=5000, noise_sd=0.1),
    "sim2": dict(p=5, m=5, n=5000, noise_sd=0.1),
    "sim3": dict(p=2, m=40, n=5000, noise_sd=0.1),
    "sim4": dict(p=2, m=2, n=5000, noise_sd=0.1),
}


def _cutting_planes(p: int, m: int, rng: np.random.Generator) -> HyperplaneSet:
    """``m`` planes with uniform normals and offsets uniform on (0, sqrt(p)),
    kept only if they cut the cube [-1, 1]^p (offset below the normal's L1 norm)."""
    reach = math.sqrt(p)
    normals = np.empty((m, p))
    offsets = np.empty(m)
    filled = 0
    while filled < m:
        n = sample_unit_normals(p, 1, rng)[0]
        mu = reach * (1.0 - rng.random())
        if mu < np.abs(n).sum():
            normals[filled] = n
            offsets[filled] = mu
            filled += 1
    return HyperplaneSet(normals, offsets, reach, _dim=p)


def gen_simulation(p: int, m: int, n: int, noise_sd: float, rng: np.random.Generator):
    """Draw ``n`` inputs uniformly on [-1, 1]^p and responses from a random
    ``m``-neuron ReLU network plus Gaussian noise.

    Returns ``(Dataset, GroundTruth)``. The dataset carries the exact noise
    draws so ``y - noise`` reproduces the noiseless response.
    """
    if int(p) != p or p < 1:
        raise DataError(f"p must be a positive integer, got {p!r}")
    if int(m) != m or m < 0:
        raise DataError(f"m must be a non-negative integer, got {m!r}")
    if int(n) != n or n < 1:
        raise DataError(f"n must be a positive integer, got {n!r}")
    if not noise_sd >= 0:
        raise DataError(f"noise_sd must be non-negative, got {noise_sd!r}")
    X = rng.uniform(-1.0, 1.0, size=(n, p))
    planes = _cutting_planes(p, m, rng)
    weights = np.empty(m + 1)
    weights[1:] = rng.standard_normal(m)
    weights[0] = noise_sd * rng.standard_normal()
    truth = GroundTruth(planes, weights, float(noise_sd))
    noise = noise_sd * rng.standard_normal(n)
    y = truth.predict(X) + noise
    return Dataset(X, y, noise=noise), truth


def _resolve_columns(header: list[str] | None, ncols: int, spec) -> list[int]:
    out = []
    for c in spec:
        if isinstance(c, (int, np.integer)):
            if not 0 <= c < ncols:
                raise UnknownColumnError(f"column index {c} out of range (file has {ncols} columns)")
            out.append(int(c))
        elif header is not None and c in header:
            out.append(header.index(c))
        elif header is None and str(c).isdigit() and int(c) < ncols:
            out.append(int(c))
        else:
            raise UnknownColumnError(f"unknown column {c!r}")
    return out


def load_csv(path, response, features: Sequence | None = None, header: bool | None = None) -> Dataset:
    """Read a comma-separated table into a Dataset.

    ``response`` and ``features`` name columns (or give 0-based indices). By
    default every non-response column is a feature. ``header=None`` sniffs:
    the first line is a header if any of its cells is non-numeric. Rows with
    missing or non-numeric selected values raise :class:`MalformedRowError`
    carrying the 0-based data-row index.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such data file: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    if not rows:
        raise EmptyDatasetError(f"{path} is empty")
    if header is None:
        header = any(not _is_number(c) for c in rows[0])
    names = [c.strip() for c in rows[0]] if header else None
    body = rows[1:] if header else rows
    ncols = len(names) if names else len(body[0]) if body else 0
    (resp_col,) = _resolve_columns(names, ncols, [response])
    if features is None:
        feat_cols = [c for c in range(ncols) if c != resp_col]
    else:
        feat_cols = _resolve_columns(names, ncols, features)
    if not body:
        raise EmptyDatasetError(f"{path} has a header but no data rows")
    X = np.empty((len(body), len(feat_cols)))
    y = np.empty(len(body))
    label = (lambda c: names[c]) if names else str
    for i, row in enumerate(body):
        for out_j, c in enumerate([resp_col, *feat_cols]):
            cell = row[c].strip() if c < len(row) else ""
            try:
                v = float(cell)
            except ValueError:
                raise MalformedRowError(i, label(c), cell) from None
            if not math.isfinite(v):
                raise MalformedRowError(i, label(c), cell)
            if out_j == 0:
                y[i] = v
            else:
                X[i, out_j - 1] = v
    return Dataset(X, y)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def save_csv(data: Dataset, path, feature_names: Sequence[str] | None = None, response_name: str = "y") -> None:
    """Write ``y`` followed by the features, with a header. A ``.transform``
    sidecar is written next to the file when the dataset carries one."""
    names = list(feature_names) if feature_names else [f"x{j + 1}" for j in range(data.p)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([response_name, *names])
        for yi, xi in zip(data.y, data.X):
            w.writerow([repr(float(yi)), *(repr(float(v)) for v in xi)])
    if data.transform is not None:
        write_transform(data.transform, str(path) + ".transform")


def write_transform(transform: BallTransform, path) -> None:
    with open(path, "w") as fh:
        fh.write(transform.to_text())


def read_transform(path) -> BallTransform:
    with open(path) as fh:
        return BallTransform.from_text(fh.read())


def train_test_split(data: Dataset, train_fraction: float, rng: np.random.Generator):
    if not 0 < train_fraction < 1:
        raise DataError(f"train fraction must lie in (0, 1), got {train_fraction!r}")
    perm = rng.permutation(data.n)
    n_train = int(math.floor(train_fraction * data.n))
    return data.subset(np.sort(perm[:n_train])), data.subset(np.sort(perm[n_train:]))


def fit_ball_transform(X, radius: float = 1.0) -> BallTransform:
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 1:
        raise EmptyDatasetError("cannot normalize an empty dataset")
    lo, hi = X.min(axis=0), X.max(axis=0)
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    const = half == 0
    if np.any(const):
        log.warning("constant feature column(s) %s left unscaled", np.flatnonzero(const).tolist())
        half = np.where(const, 1.0, half)
    reach = np.linalg.norm((X - center) / half, axis=1).max()
    scale = half * (reach / radius if reach > 0 else 1.0)
    return BallTransform(center, scale, radius)


def normalize_to_ball(data: Dataset, radius: float = 1.0):
    """Center each column at its midrange and rescale so every row lies in the
    ball of the given radius. Returns ``(normalized dataset, transform)``."""
    tr = fit_ball_transform(data.X, radius)
    return replace(data, X=tr.apply(data.X), transform=tr), tr
