"""Samplers: conjugate Gibbs updates, the hyperplane Metropolis-Hastings move,
annealed SMC and a plain MCMC chain.

Tempering: a Gaussian likelihood raised to a power ``phi`` is a Gaussian with
noise variance ``sigma_sq / phi``, so every conditional stays conjugate and one
kernel sweep leaves ``likelihood**phi * prior`` invariant.
"""
from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from . import _kernels
from .geometry import HyperplaneSet, feature_map, sample_unit_normals
from .model import Hyperparams, ModelParams, sample_prior

__all__ = [
    "InferenceError",
    "DegenerateEnsembleError",
    "AnnealingSchedule",
    "Particle",
    "ParticleEnsemble",
    "Chain",
    "gibbs_sigma_sq",
    "weight_conditional",
    "gibbs_weight",
    "mh_step",
    "ess",
    "normalized_weights",
    "resample_indices",
    "resample_multinomial",
    "resample_systematic",
    "make_schedule",
    "annealed_smc",
    "mcmc_run",
    "gibbs_run",
    "write_ensemble",
    "read_ensemble",
    "particle_stream",
]

log = logging.getLogger(__name__)

# stream tags: (master seed, tag, iteration) keys every random stream
_INIT, _MOVE, _RESAMPLE = 0, 1, 2


class InferenceError(ValueError):
    pass


class DegenerateEnsembleError(InferenceError):
    """All particle weights are zero (or not finite)."""


def _as_seed(seed) -> tuple[int, ...]:
    if isinstance(seed, np.random.Generator):
        return (int(seed.integers(2**63)),)
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(s) for s in seed)


def particle_stream(seed, tag: int, iteration: int) -> np.random.Generator:
    """Random stream for one stage of one SMC iteration.

    Particle ``t`` always consumes row ``t`` of the arrays drawn from this
    stream, so splitting particles across workers never changes the result.
    """
    key = _as_seed(seed)
    # SeedSequence ignores trailing zero words; the length marker keeps keys distinct
    return np.random.default_rng([*key, tag, iteration, len(key)])


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _check_phi(phi: float) -> None:
    if not 0 < phi <= 1:
        raise InferenceError(f"tempering power must lie in (0, 1], got {phi!r}")


def _xy(data):
    X = np.ascontiguousarray(data.X, dtype=float)
    y = np.ascontiguousarray(data.y, dtype=float)
    if y.size == 0:
        raise InferenceError("data set is empty")
    return X, y


# --------------------------------------------------------------------------
# conjugate updates (reference implementations on a single parameter vector)

def gibbs_sigma_sq(theta: ModelParams, data, hyper: Hyperparams, phi: float, rng) -> float:
    _check_phi(phi)
    X, y = _xy(data)
    resid = y - feature_map(X, theta.planes) @ theta.weights
    shape = hyper.a0 + 0.5 * phi * y.size
    rate = hyper.b0 + 0.5 * phi * float(resid @ resid)
    return rate / _rng(rng).standard_gamma(shape)


def weight_conditional(theta: ModelParams, j: int, data, hyper: Hyperparams, phi: float):
    """Mean and variance of ``w_j`` given everything else at power ``phi``."""
    _check_phi(phi)
    X, y = _xy(data)
    if not 0 <= j <= len(theta.planes):
        raise InferenceError(f"weight index {j} out of range")
    Z = feature_map(X, theta.planes)
    partial = y - Z @ theta.weights + Z[:, j] * theta.weights[j]
    zj = Z[:, j]
    s_eff = theta.sigma_sq / phi
    szz = float(zj @ zj)
    den = s_eff + hyper.sigma0_sq * szz
    mean = (hyper.mu0 * s_eff + hyper.sigma0_sq * float(partial @ zj)) / den
    var = s_eff * hyper.sigma0_sq / den
    return mean, var


def gibbs_weight(theta: ModelParams, j: int, data, hyper: Hyperparams, phi: float, rng) -> float:
    mean, var = weight_conditional(theta, j, data, hyper, phi)
    return mean + math.sqrt(var) * _rng(rng).standard_normal()


@dataclass
class _Draws:
    gam: np.ndarray
    zw: np.ndarray
    uj: np.ndarray
    zn: np.ndarray
    uo: np.ndarray
    ua: np.ndarray

    def rows(self, sl) -> tuple:
        return self.gam[sl], self.zw[sl], self.uj[sl], self.zn[sl], self.uo[sl], self.ua[sl]


def _draw_sweep_randoms(rng: np.random.Generator, size: int, n_planes: int, p: int, gamma_shape: float) -> _Draws:
    # draw order is part of the reproducibility contract
    gam = rng.standard_gamma(gamma_shape, size)
    zw = rng.standard_normal((size, n_planes + 1))
    uj = rng.random(size)
    zn = rng.standard_normal((size, p))
    uo = rng.random(size)
    ua = rng.random(size)
    return _Draws(gam, zw, uj, zn, uo, ua)


def mh_step(theta: ModelParams, data, hyper: Hyperparams, phi: float, rng, *, return_log_ratio: bool = False):
    """One kernel sweep: Gibbs for sigma_sq, Gibbs for w_0..w_|P| in index
    order, then an independence proposal replacing one uniformly chosen plane,
    accepted with probability ``min(1, exp(phi * loglik ratio))``.

    Returns ``(new_theta, accepted)``, plus the untempered log-likelihood ratio
    of the plane proposal when ``return_log_ratio`` is set. With no planes the
    Gibbs updates still run and ``accepted`` is False.
    """
    _check_phi(phi)
    X, y = _xy(data)
    P, p = len(theta.planes), theta.dim
    d = _draw_sweep_randoms(_rng(rng), 1, P, p, hyper.a0 + 0.5 * phi * y.size)
    normals = theta.planes.normals.copy().reshape(1, P, p)
    offsets = theta.planes.offsets.copy().reshape(1, P)
    weights = theta.weights.copy().reshape(1, P + 1)
    sig = np.array([theta.sigma_sq])
    out = np.empty(4)
    _kernels.sweep_one(X, y, normals[0], offsets[0], weights[0], phi, hyper.b0, hyper.mu0,
                       hyper.sigma0_sq, hyper.domain_radius, d.gam[0], d.zw[0], d.uj[0], d.zn[0],
                       d.uo[0], d.ua[0], True, np.empty((P, y.size)), np.empty(y.size),
                       np.empty(y.size), out)
    sig[0] = out[0]
    accepted = bool(out[1] > 0)
    planes = theta.planes if not accepted else HyperplaneSet(normals[0], offsets[0], hyper.domain_radius, _dim=p)
    new = ModelParams(planes, weights[0], float(sig[0]))
    if return_log_ratio:
        return new, accepted, float(out[3])
    return new, accepted


# --------------------------------------------------------------------------
# weights and resampling

def normalized_weights(log_weights) -> np.ndarray:
    lw = np.asarray(log_weights, dtype=float)
    if lw.size == 0:
        raise InferenceError("no weights")
    if np.any(np.isnan(lw)) or np.any(lw == np.inf):
        raise DegenerateEnsembleError("log-weights contain NaN or +inf")
    top = lw.max()
    if top == -np.inf:
        raise DegenerateEnsembleError("all particle weights are zero")
    w = np.exp(lw - top)
    return w / w.sum()


def ess(log_weights) -> float:
    """Effective sample size ``1 / sum(w_t**2)`` of normalized weights."""
    w = normalized_weights(log_weights)
    return float(1.0 / np.sum(w * w))


def resample_indices(log_weights, rng: np.random.Generator, method: str = "multinomial", size: int | None = None):
    w = normalized_weights(log_weights)
    L = w.size if size is None else size
    if method == "multinomial":
        counts = rng.multinomial(L, w)
        return np.repeat(np.arange(w.size), counts)
    if method == "systematic":
        u = (rng.random() + np.arange(L)) / L
        cdf = np.cumsum(w)
        cdf[-1] = 1.0
        return np.searchsorted(cdf, u, side="right")
    raise InferenceError(f"unknown resampling method {method!r}")


# --------------------------------------------------------------------------
# particle containers

@dataclass(frozen=True)
class Particle:
    params: ModelParams
    log_weight: float


@dataclass
class ParticleEnsemble:
    """``L`` weighted parameter vectors, held as stacked arrays.

    ``normals`` is ``(L, P, p)``, ``offsets`` ``(L, P)``, ``weights``
    ``(L, P + 1)`` with the intercept first, ``sigma_sq`` and ``log_weights``
    ``(L,)``.
    """

    normals: np.ndarray
    offsets: np.ndarray
    weights: np.ndarray
    sigma_sq: np.ndarray
    log_weights: np.ndarray
    domain_radius: float = 1.0
    iteration: int = 0
    log_evidence: float = 0.0
    history: list = field(default_factory=list)

    def __post_init__(self):
        L, P, p = self.normals.shape
        if L < 1:
            raise InferenceError("an ensemble needs at least one particle")
        if self.offsets.shape != (L, P) or self.weights.shape != (L, P + 1):
            raise InferenceError("inconsistent ensemble array shapes")
        if self.sigma_sq.shape != (L,) or self.log_weights.shape != (L,):
            raise InferenceError("inconsistent ensemble array shapes")

    @property
    def size(self) -> int:
        return self.sigma_sq.size

    def __len__(self) -> int:
        return self.size

    @property
    def n_planes(self) -> int:
        return self.offsets.shape[1]

    @property
    def dim(self) -> int:
        return self.normals.shape[2]

    @property
    def particles(self) -> list[Particle]:
        return [self.particle(t) for t in range(self.size)]

    def params(self, t: int) -> ModelParams:
        planes = HyperplaneSet(self.normals[t], self.offsets[t], self.domain_radius, _dim=self.dim)
        return ModelParams(planes, self.weights[t], float(self.sigma_sq[t]))

    def particle(self, t: int) -> Particle:
        return Particle(self.params(t), float(self.log_weights[t]))

    @classmethod
    def from_params(cls, params: Sequence[ModelParams], log_weights=None, **kw) -> "ParticleEnsemble":
        params = list(params)
        if not params:
            raise InferenceError("an ensemble needs at least one particle")
        p = params[0].dim
        P = len(params[0].planes)
        lw = np.zeros(len(params)) if log_weights is None else np.asarray(log_weights, dtype=float)
        kw.setdefault("domain_radius", params[0].planes.domain_radius)
        return cls(
            np.stack([th.planes.normals.reshape(P, p) for th in params]),
            np.stack([th.planes.offsets for th in params]).reshape(len(params), P),
            np.stack([th.weights for th in params]),
            np.array([th.sigma_sq for th in params]),
            lw.copy(),
            **kw,
        )

    def normalized_weights(self) -> np.ndarray:
        return normalized_weights(self.log_weights)

    def ess(self) -> float:
        return ess(self.log_weights)

    def take(self, idx) -> "ParticleEnsemble":
        """Copy of the particles at ``idx`` with log-weights reset to zero."""
        idx = np.asarray(idx)
        return ParticleEnsemble(
            self.normals[idx].copy(), self.offsets[idx].copy(), self.weights[idx].copy(),
            self.sigma_sq[idx].copy(), np.zeros(idx.size), self.domain_radius, self.iteration,
            self.log_evidence, list(self.history),
        )

    def predict_all(self, X) -> np.ndarray:
        """Noiseless prediction of every particle at every row, ``(L, M)``."""
        X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
        if X.shape[1] != self.dim:
            raise InferenceError(f"inputs have {X.shape[1]} columns, ensemble expects {self.dim}")
        return _kernels.predict_batch(X, self.normals, self.offsets, self.weights)

    def predict_mean(self, X) -> np.ndarray:
        """Posterior-mean prediction: weighted average over particles."""
        return self.normalized_weights() @ self.predict_all(X)


def resample_multinomial(ensemble: ParticleEnsemble, rng) -> ParticleEnsemble:
    return ensemble.take(resample_indices(ensemble.log_weights, _rng(rng), "multinomial"))


def resample_systematic(ensemble: ParticleEnsemble, rng) -> ParticleEnsemble:
    return ensemble.take(resample_indices(ensemble.log_weights, _rng(rng), "systematic"))


# --------------------------------------------------------------------------
# annealing

@dataclass(frozen=True)
class AnnealingSchedule:
    powers: tuple[float, ...]

    def __post_init__(self):
        pw = tuple(float(v) for v in self.powers)
        if len(pw) < 2 or pw[0] != 0.0 or pw[-1] != 1.0:
            raise InferenceError("schedule must start at 0 and end at 1")
        if any(b <= a for a, b in zip(pw, pw[1:])):
            raise InferenceError("schedule must be strictly increasing")
        object.__setattr__(self, "powers", pw)

    @property
    def R(self) -> int:
        return len(self.powers) - 1

    def __len__(self) -> int:
        return len(self.powers)

    def __getitem__(self, r):
        return self.powers[r]


def make_schedule(R: int, shape: str = "linear", rate: float = 2.0) -> AnnealingSchedule:
    """Tempering powers ``0 = phi_0 < ... < phi_R = 1``.

    ``linear`` spaces them evenly. ``geometric`` makes successive increments
    grow by the factor ``rate``: ``phi_r = (rate**r - 1) / (rate**R - 1)``.
    """
    if int(R) != R or R < 1:
        raise InferenceError(f"R must be a positive integer, got {R!r}")
    r = np.arange(R + 1)
    if shape == "linear":
        pw = r / R
    elif shape == "geometric":
        if not rate > 0 or rate == 1:
            raise InferenceError(f"geometric rate must be positive and != 1, got {rate!r}")
        lr = math.log(rate)
        if rate > 1:
            # rate**(r - R) form keeps large R from overflowing
            pw = np.exp((r - R) * lr) * -np.expm1(-r * lr) / -math.expm1(-R * lr)
        else:
            pw = np.expm1(r * lr) / math.expm1(R * lr)
    else:
        raise InferenceError(f"unknown schedule shape {shape!r}")
    pw[0], pw[-1] = 0.0, 1.0
    return AnnealingSchedule(tuple(pw))


# --------------------------------------------------------------------------
# samplers

def _prior_ensemble(hyper: Hyperparams, p: int, L: int, rng: np.random.Generator) -> ParticleEnsemble:
    P = hyper.n_planes
    normals = sample_unit_normals(p, L * P, rng).reshape(L, P, p)
    offsets = hyper.domain_radius * (1.0 - rng.random((L, P)))
    sigma_sq = hyper.b0 / rng.standard_gamma(hyper.a0, L)
    weights = hyper.mu0 + math.sqrt(hyper.sigma0_sq) * rng.standard_normal((L, P + 1))
    return ParticleEnsemble(normals, offsets, weights, sigma_sq, np.zeros(L), hyper.domain_radius)


def _check_inputs(X, hyper: Hyperparams) -> None:
    if X.shape[0] and np.linalg.norm(X, axis=1).max() > hyper.domain_radius * (1 + 1e-9):
        log.warning("data extend beyond the domain ball of radius %g; planes can never reach them",
                    hyper.domain_radius)


def _sweep_particles(X, y, ens: ParticleEnsemble, hyper: Hyperparams, phi: float, draws: _Draws,
                     move_planes: bool, workers: int, pool):
    L = ens.size
    accepted = np.zeros(L, dtype=np.bool_)
    loglik = np.empty(L)

    def work(sl):
        _kernels.sweep_batch(X, y, ens.normals[sl], ens.offsets[sl], ens.weights[sl], ens.sigma_sq[sl],
                             phi, hyper.b0, hyper.mu0, hyper.sigma0_sq, hyper.domain_radius,
                             *draws.rows(sl), move_planes, accepted[sl], loglik[sl])

    if pool is None or workers <= 1:
        work(slice(0, L))
    else:
        bounds = np.linspace(0, L, workers + 1).astype(int)
        list(pool.map(work, [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]))
    return accepted, loglik


def annealed_smc(data, hyper: Hyperparams, schedule: AnnealingSchedule, L: int, seed=0, *,
                 resampler: str = "multinomial", adaptive: bool = False, ess_threshold: float = 0.5,
                 workers: int = 1, move_planes: bool = True, order: str = "weight-first",
                 callback: Callable[[ParticleEnsemble], None] | None = None) -> ParticleEnsemble:
    """Annealed sequential Monte Carlo over ``likelihood**phi_r * prior``.

    Particles start from the prior with equal weights. At each power
    ``phi_r`` every particle gains log-weight ``(phi_r - phi_{r-1}) * loglik``
    and takes one kernel sweep that leaves the ``phi_r`` target invariant.
    With ``order="weight-first"`` the weight is evaluated at the state before the
    sweep, which keeps the weighted ensemble and ``log_evidence`` consistent
    for any schedule; the resampling step sits between weighting and moving.
    ``order="move-first"`` sweeps first and weights the moved state, which is only
    exact in the limit of small increments. Before the last step the ensemble
    is resampled (every step, or only when ESS < ``ess_threshold * L`` if
    ``adaptive``).

    ``seed`` keys all random streams; the output does not depend on
    ``workers``.
    """
    if int(L) != L or L < 2:
        raise InferenceError(f"need at least two particles, got {L!r}")
    if not isinstance(schedule, AnnealingSchedule):
        schedule = AnnealingSchedule(tuple(schedule))
    X, y = _xy(data)
    _check_inputs(X, hyper)
    seed = _as_seed(seed)
    ens = _prior_ensemble(hyper, X.shape[1], int(L), particle_stream(seed, _INIT, 0))
    N, P, p = y.size, hyper.n_planes, X.shape[1]
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    if order == "weight-first":
        loglik = _kernels.loglik_batch(X, y, ens.normals, ens.offsets, ens.weights, ens.sigma_sq)
    elif order != "move-first":
        raise InferenceError(f"unknown step order {order!r}")
    try:
        for r in range(1, schedule.R + 1):
            phi, dphi = schedule[r], schedule[r] - schedule[r - 1]
            tic = time.perf_counter()
            draws = _draw_sweep_randoms(particle_stream(seed, _MOVE, r), ens.size, P, p,
                                        hyper.a0 + 0.5 * phi * N)
            if order == "move-first":
                accepted, loglik = _sweep_particles(X, y, ens, hyper, phi, draws, move_planes, workers, pool)
            prev = ens.log_weights - logsumexp(ens.log_weights)
            incr = dphi * loglik
            ens.log_evidence += float(logsumexp(prev + incr))
            ens.log_weights = ens.log_weights + incr
            ens.iteration = r
            cur_ess = ens.ess()
            resampled = False
            if r < schedule.R and (not adaptive or cur_ess < ess_threshold * ens.size):
                idx = resample_indices(ens.log_weights, particle_stream(seed, _RESAMPLE, r), resampler)
                ens = ens.take(idx)
                loglik = loglik[idx]
                resampled = True
            if order == "weight-first":
                accepted, loglik = _sweep_particles(X, y, ens, hyper, phi, draws, move_planes, workers, pool)
            ens.history.append({
                "iteration": r, "phi": phi, "ess": cur_ess,
                "acceptance": float(accepted.mean()) if P else 0.0,
                "resampled": resampled, "seconds": time.perf_counter() - tic,
            })
            if callback is not None:
                callback(ens)
    finally:
        if pool is not None:
            pool.shutdown()
    return ens


@dataclass
class Chain:
    """States of one Markov chain, stored as arrays; indexing yields ModelParams."""

    normals: np.ndarray
    offsets: np.ndarray
    weights: np.ndarray
    sigma_sq: np.ndarray
    accepted: np.ndarray
    loglik: np.ndarray
    log_ratio: np.ndarray
    domain_radius: float = 1.0

    def __len__(self) -> int:
        return self.sigma_sq.size

    def __getitem__(self, s) -> ModelParams:
        planes = HyperplaneSet(self.normals[s], self.offsets[s], self.domain_radius,
                               _dim=self.normals.shape[2])
        return ModelParams(planes, self.weights[s], float(self.sigma_sq[s]))

    def __iter__(self):
        return (self[s] for s in range(len(self)))

    @property
    def acceptance_rate(self) -> float:
        return float(self.accepted.mean()) if len(self) else 0.0


def _run_chain(data, hyper: Hyperparams, iterations: int, rng, init: ModelParams | None,
               move_planes: bool, phi: float, block: int = 8192) -> Chain:
    if int(iterations) != iterations or iterations < 1:
        raise InferenceError(f"iterations must be a positive integer, got {iterations!r}")
    _check_phi(phi)
    rng = _rng(rng)
    X, y = _xy(data)
    _check_inputs(X, hyper)
    p = X.shape[1]
    theta = sample_prior(hyper, p, rng) if init is None else init
    P = len(theta.planes)
    normals = theta.planes.normals.reshape(P, p).copy()
    offsets = theta.planes.offsets.copy()
    weights = theta.weights.copy()
    T = int(iterations)
    out = Chain(np.empty((T, P, p)), np.empty((T, P)), np.empty((T, P + 1)), np.empty(T),
                np.zeros(T, dtype=np.bool_), np.empty(T), np.empty(T), hyper.domain_radius)
    shape = hyper.a0 + 0.5 * phi * y.size
    for start in range(0, T, block):
        sl = slice(start, min(T, start + block))
        n = sl.stop - sl.start
        d = _draw_sweep_randoms(rng, n, P, p, shape)
        _kernels.run_chain(X, y, normals, offsets, weights, phi, hyper.b0, hyper.mu0, hyper.sigma0_sq,
                           hyper.domain_radius, d.gam, d.zw, d.uj, d.zn, d.uo, d.ua, move_planes,
                           out.normals[sl], out.offsets[sl], out.weights[sl], out.sigma_sq[sl],
                           out.accepted[sl], out.loglik[sl], out.log_ratio[sl])
    return out


def mcmc_run(data, hyper: Hyperparams, iterations: int, rng, init: ModelParams | None = None,
             phi: float = 1.0) -> Chain:
    """Repeated :func:`mh_step` sweeps from a prior draw (or ``init``)."""
    return _run_chain(data, hyper, iterations, rng, init, True, phi)


def gibbs_run(data, hyper: Hyperparams, planes: HyperplaneSet, iterations: int, rng,
              phi: float = 1.0) -> Chain:
    """Gibbs sweeps over sigma_sq and the weights with the planes held fixed."""
    rng = _rng(rng)
    P = len(planes)
    init = ModelParams(
        planes,
        hyper.mu0 + math.sqrt(hyper.sigma0_sq) * rng.standard_normal(P + 1),
        hyper.b0 / rng.standard_gamma(hyper.a0),
    )
    return _run_chain(data, hyper, iterations, rng, init, False, phi)


# --------------------------------------------------------------------------
# snapshots

_FORMAT = "phpnn-ensemble"


def write_ensemble(ens: ParticleEnsemble, path) -> None:
    """Line-delimited JSON: one header record, then one record per particle with
    ``planes`` as ``[offset, [normal...]]`` pairs, ``weights``, ``sigma_sq`` and
    ``log_weight``. Floats are written with full round-trip precision."""
    with open(path, "w") as fh:
        header = {
            "format": _FORMAT, "version": 1, "particles": ens.size, "n_planes": ens.n_planes,
            "dim": ens.dim, "domain_radius": ens.domain_radius, "iteration": ens.iteration,
            "log_evidence": ens.log_evidence,
        }
        fh.write(json.dumps(header) + "\n")
        for t in range(ens.size):
            rec = {
                "planes": [[float(mu), [float(v) for v in n]]
                           for mu, n in zip(ens.offsets[t], ens.normals[t])],
                "weights": [float(v) for v in ens.weights[t]],
                "sigma_sq": float(ens.sigma_sq[t]),
                "log_weight": float(ens.log_weights[t]),
            }
            fh.write(json.dumps(rec) + "\n")


def read_ensemble(path) -> ParticleEnsemble:
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip()]
    if not lines:
        raise InferenceError(f"{path}: empty snapshot")
    header = json.loads(lines[0])
    if header.get("format") != _FORMAT:
        raise InferenceError(f"{path}: not an ensemble snapshot")
    P, p = header["n_planes"], header["dim"]
    recs = [json.loads(ln) for ln in lines[1:]]
    if len(recs) != header["particles"]:
        raise InferenceError(f"{path}: header announces {header['particles']} particles, found {len(recs)}")
    L = len(recs)
    normals = np.empty((L, P, p))
    offsets = np.empty((L, P))
    for t, rec in enumerate(recs):
        if len(rec["planes"]) != P:
            raise InferenceError(f"{path}: particle {t} has {len(rec['planes'])} planes, expected {P}")
        for j, (mu, n) in enumerate(rec["planes"]):
            offsets[t, j] = mu
            normals[t, j] = n
    return ParticleEnsemble(
        normals, offsets,
        np.array([rec["weights"] for rec in recs], dtype=float).reshape(L, P + 1),
        np.array([rec["sigma_sq"] for rec in recs], dtype=float),
        np.array([rec["log_weight"] for rec in recs], dtype=float),
        float(header["domain_radius"]), int(header["iteration"]), float(header["log_evidence"]),
    )
