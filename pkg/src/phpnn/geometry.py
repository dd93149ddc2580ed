"""Hyperplanes, Poisson hyperplane processes and the ReLU feature map.

A hyperplane is stored as a point ``(offset, normal)`` of the parameter space
``(0, l] x S^{p-1}`` and acts on inputs through ``<x, normal> - offset``.
Process-level operations (superposition, restriction) work on that parameter
representation; a plane's *foot point* ``offset * normal`` lies in the ball of
radius ``l`` and is what domain partitions are applied to.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GeometryError",
    "Hyperplane",
    "HyperplaneSet",
    "DomainPartition",
    "sample_unit_normal",
    "sample_unit_normals",
    "sample_hyperplane",
    "sample_php",
    "relu",
    "feature_map",
    "superpose",
    "restrict",
]

_NORM_TOL = 1e-10


class GeometryError(ValueError):
    """Invalid dimension, domain or incompatible hyperplane sets."""


@dataclass(frozen=True)
class Hyperplane:
    normal: np.ndarray
    offset: float

    def __post_init__(self):
        normal = np.asarray(self.normal, dtype=float).reshape(-1)
        if normal.size == 0:
            raise GeometryError("hyperplane normal must have p >= 1 entries")
        if abs(np.linalg.norm(normal) - 1.0) > _NORM_TOL:
            raise GeometryError(f"normal has norm {np.linalg.norm(normal)!r}, expected 1")
        if not self.offset > 0:
            raise GeometryError(f"offset must be positive, got {self.offset!r}")
        normal.setflags(write=False)
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.normal.size

    def foot(self) -> np.ndarray:
        """Closest point of the plane to the origin."""
        return self.offset * self.normal

    def __eq__(self, other):
        if not isinstance(other, Hyperplane):
            return NotImplemented
        return self.offset == other.offset and np.array_equal(self.normal, other.normal)

    def __hash__(self):
        return hash((self.offset, self.normal.tobytes()))


@dataclass(frozen=True)
class HyperplaneSet:
    """An ordered realization of a hyperplane process inside the ball of radius
    ``domain_radius``. Plane ``j`` drives neuron ``j``.

    Stored as arrays (``normals`` is ``(m, p)``, ``offsets`` is ``(m,)``) so the
    feature map and the samplers never iterate over Python objects.
    """

    normals: np.ndarray
    offsets: np.ndarray
    domain_radius: float = 1.0
    _dim: int = field(default=-1, repr=False)

    def __post_init__(self):
        normals = np.array(self.normals, dtype=float)
        offsets = np.array(self.offsets, dtype=float).reshape(-1)
        if normals.ndim == 1 and offsets.size == 0:
            if self._dim < 1:
                raise GeometryError("empty hyperplane set needs an explicit dimension")
            normals = normals.reshape(0, self._dim)
        if normals.ndim != 2 or normals.shape[0] != offsets.size:
            raise GeometryError(
                f"normals {normals.shape} and offsets {offsets.shape} do not describe the same planes"
            )
        if normals.shape[1] < 1:
            raise GeometryError("hyperplanes need dimension p >= 1")
        if not self.domain_radius > 0:
            raise GeometryError(f"domain radius must be positive, got {self.domain_radius!r}")
        if offsets.size:
            norms = np.linalg.norm(normals, axis=1)
            if np.any(np.abs(norms - 1.0) > _NORM_TOL):
                raise GeometryError("all normals must have unit length")
            if np.any(offsets <= 0):
                raise GeometryError("all offsets must be positive")
            if np.any(offsets > self.domain_radius):
                raise GeometryError(
                    f"offset {offsets.max()!r} lies outside the domain ball of radius {self.domain_radius!r}"
                )
        normals.setflags(write=False)
        offsets.setflags(write=False)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "domain_radius", float(self.domain_radius))
        object.__setattr__(self, "_dim", normals.shape[1])

    @classmethod
    def empty(cls, p: int, domain_radius: float = 1.0) -> "HyperplaneSet":
        return cls(np.zeros((0, p)), np.zeros(0), domain_radius)

    @classmethod
    def from_planes(cls, planes: Iterable[Hyperplane], p: int, domain_radius: float = 1.0) -> "HyperplaneSet":
        planes = list(planes)
        if not planes:
            return cls.empty(p, domain_radius)
        return cls(
            np.stack([h.normal for h in planes]),
            np.array([h.offset for h in planes]),
            domain_radius,
        )

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def planes(self) -> list[Hyperplane]:
        return [Hyperplane(n, mu) for n, mu in zip(self.normals, self.offsets)]

    def feet(self) -> np.ndarray:
        return self.offsets[:, None] * self.normals

    def replace(self, j: int, plane: Hyperplane) -> "HyperplaneSet":
        normals = self.normals.copy()
        offsets = self.offsets.copy()
        normals[j] = plane.normal
        offsets[j] = plane.offset
        return HyperplaneSet(normals, offsets, self.domain_radius)

    def permuted(self, order: Sequence[int]) -> "HyperplaneSet":
        order = np.asarray(order, dtype=int)
        return HyperplaneSet(self.normals[order], self.offsets[order], self.domain_radius, _dim=self.dim)

    def __len__(self) -> int:
        return self.offsets.size

    def __iter__(self):
        return iter(self.planes)

    def __eq__(self, other):
        if not isinstance(other, HyperplaneSet):
            return NotImplemented
        return (
            self.domain_radius == other.domain_radius
            and self.normals.shape == other.normals.shape
            and np.array_equal(self.normals, other.normals)
            and np.array_equal(self.offsets, other.offsets)
        )

    __hash__ = None


@dataclass(frozen=True)
class DomainPartition:
    """Axis-aligned slabs cutting the ball of radius ``domain_radius``.

    Cell ``i`` is ``[cut_{i-1}, cut_i)``; a coordinate sitting exactly on a cut
    belongs to the cell on its greater side. The outermost cells are closed at
    ``-domain_radius`` and ``+domain_radius``.
    """

    axis: int
    cut_points: tuple[float, ...]
    domain_radius: float = 1.0

    def __post_init__(self):
        cuts = tuple(float(c) for c in self.cut_points)
        if self.axis < 0:
            raise GeometryError(f"axis must be non-negative, got {self.axis}")
        if not self.domain_radius > 0:
            raise GeometryError("domain radius must be positive")
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise GeometryError(f"cut points must be strictly increasing: {cuts}")
        if cuts and (cuts[0] <= -self.domain_radius or cuts[-1] >= self.domain_radius):
            raise GeometryError(f"cut points {cuts} must lie strictly inside the domain")
        object.__setattr__(self, "cut_points", cuts)
        object.__setattr__(self, "domain_radius", float(self.domain_radius))

    @classmethod
    def even(cls, axis: int, k: int, domain_radius: float = 1.0, lower: float | None = None,
             upper: float | None = None) -> "DomainPartition":
        """``k`` equal-width slabs over ``[lower, upper]`` (default the full ball)."""
        if k < 1:
            raise GeometryError(f"need at least one cell, got {k}")
        lo = -domain_radius if lower is None else lower
        hi = domain_radius if upper is None else upper
        cuts = np.linspace(lo, hi, k + 1)[1:-1]
        return cls(axis, tuple(cuts), domain_radius)

    @property
    def n_cells(self) -> int:
        return len(self.cut_points) + 1

    def bounds(self, cell: int) -> tuple[float, float]:
        edges = (-self.domain_radius, *self.cut_points, self.domain_radius)
        return edges[cell], edges[cell + 1]

    def locate(self, coords, clamp: bool = False) -> np.ndarray:
        """Cell index of each coordinate value along the partition axis."""
        v = np.asarray(coords, dtype=float)
        if clamp:
            v = np.clip(v, -self.domain_radius, self.domain_radius)
        elif np.any(np.abs(v) > self.domain_radius):
            raise GeometryError("coordinate outside the partitioned domain")
        return np.searchsorted(np.asarray(self.cut_points), v, side="right")

    def assign_rows(self, X, clamp: bool = False) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or self.axis >= X.shape[1]:
            raise GeometryError(f"partition axis {self.axis} not available for shape {X.shape}")
        return self.locate(X[:, self.axis], clamp=clamp)


def _check_dim(p: int) -> None:
    if int(p) != p or p < 1:
        raise GeometryError(f"dimension must be a positive integer, got {p!r}")


def sample_unit_normals(p: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` directions uniform on the unit sphere, as a ``(size, p)`` array."""
    _check_dim(p)
    g = rng.standard_normal((size, p))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    # a zero Gaussian draw has probability zero; redraw just in case
    while np.any(norms == 0):
        bad = norms[:, 0] == 0
        g[bad] = rng.standard_normal((bad.sum(), p))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
    return g / norms


def sample_unit_normal(p: int, rng: np.random.Generator) -> np.ndarray:
    return sample_unit_normals(p, 1, rng)[0]


def _check_radius(l: float) -> None:
    if not l > 0:
        raise GeometryError(f"domain radius must be positive, got {l!r}")


def _uniform_offsets(l: float, size: int, rng: np.random.Generator) -> np.ndarray:
    # Uniform on (0, l]: 1 - U with U in [0, 1) never returns 0
    return l * (1.0 - rng.random(size))


def sample_hyperplane(p: int, l: float, rng: np.random.Generator) -> Hyperplane:
    _check_dim(p)
    _check_radius(l)
    normal = sample_unit_normal(p, rng)
    return Hyperplane(normal, float(_uniform_offsets(l, 1, rng)[0]))


def sample_php(p: int, l: float, rng: np.random.Generator, *, count: int | None = None,
               intensity: float | None = None) -> HyperplaneSet:
    """Draw a hyperplane process realization.

    Exactly one of ``count`` (a fixed number of i.i.d. planes) or ``intensity``
    (total mass of the Poisson mean measure) must be given.
    """
    _check_dim(p)
    _check_radius(l)
    if (count is None) == (intensity is None):
        raise GeometryError("give exactly one of count= or intensity=")
    if count is not None:
        if int(count) != count or count < 0:
            raise GeometryError(f"plane count must be a non-negative integer, got {count!r}")
        m = int(count)
    else:
        if not intensity > 0:
            raise GeometryError(f"Poisson intensity must be positive, got {intensity!r}")
        m = int(rng.poisson(intensity))
    normals = sample_unit_normals(p, m, rng)
    offsets = _uniform_offsets(l, m, rng)
    return HyperplaneSet(normals, offsets, l, _dim=p)


def relu(c):
    return np.maximum(c, 0.0)


def feature_map(X, planes: HyperplaneSet) -> np.ndarray:
    """Hidden-layer activations with a leading constant column.

    Row ``i`` is ``(1, relu(<x_i, n_1> - mu_1), ..., relu(<x_i, n_m> - mu_m))``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != planes.dim:
        raise GeometryError(f"inputs have {X.shape[1]} columns but planes live in p={planes.dim}")
    Z = np.empty((X.shape[0], len(planes) + 1))
    Z[:, 0] = 1.0
    if len(planes):
        Z[:, 1:] = relu(X @ planes.normals.T - planes.offsets)
    return Z


def superpose(sets: Sequence[HyperplaneSet]) -> HyperplaneSet:
    sets = list(sets)
    if not sets:
        raise GeometryError("nothing to superpose")
    p, l = sets[0].dim, sets[0].domain_radius
    for s in sets[1:]:
        if s.dim != p or s.domain_radius != l:
            raise GeometryError(
                f"incompatible domains: (p={s.dim}, l={s.domain_radius}) vs (p={p}, l={l})"
            )
    return HyperplaneSet(
        np.concatenate([s.normals for s in sets]),
        np.concatenate([s.offsets for s in sets]),
        l,
        _dim=p,
    )


def restrict(planes: HyperplaneSet, partition: DomainPartition | None, cell: int | None = None,
             *, region: tuple[float, float] | None = None) -> HyperplaneSet:
    """Keep the planes whose foot point falls in one slab.

    Either pass a partition and a cell index, or an explicit ``region`` as a
    half-open interval ``[lo, hi)`` on ``partition.axis``. A region with
    ``lo >= hi`` is empty.
    """
    if partition is None:
        return planes
    if partition.axis >= planes.dim:
        raise GeometryError(f"partition axis {partition.axis} exceeds plane dimension {planes.dim}")
    coord = planes.feet()[:, partition.axis]
    if region is not None:
        lo, hi = region
        keep = (coord >= lo) & (coord < hi)
    else:
        if cell is None or not 0 <= cell < partition.n_cells:
            raise GeometryError(f"cell {cell!r} not in partition with {partition.n_cells} cells")
        keep = partition.locate(coord, clamp=True) == cell
    return HyperplaneSet(planes.normals[keep], planes.offsets[keep], planes.domain_radius, _dim=planes.dim)
