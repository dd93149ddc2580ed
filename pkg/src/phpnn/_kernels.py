"""Compiled inner loops shared by the single-chain and particle samplers.

Every function takes its random numbers as arrays drawn beforehand, so the
result for particle ``t`` depends only on row ``t`` of those arrays. That is
what makes the particle loop independent of how it is split across threads.
"""
import numpy as np
from numba import njit

_FM = {"contract", "reassoc", "nsz", "arcp"}
_LOG_2PI = np.log(2.0 * np.pi)


@njit(cache=True, fastmath=_FM, nogil=True)
def _activations(X, normals, offsets, Z):
    N, p = X.shape
    P = offsets.shape[0]
    for j in range(P):
        mu = offsets[j]
        for i in range(N):
            s = -mu
            for k in range(p):
                s += X[i, k] * normals[j, k]
            Z[j, i] = s if s > 0.0 else 0.0


@njit(cache=True, fastmath=_FM, nogil=True)
def sweep_one(X, y, normals, offsets, weights, phi, b0, mu0, sigma0_sq, radius,
              gam, zw, uj, zn, uo, ua, move_planes, Z, r, znew, out):
    """One Gibbs(sigma_sq) + Gibbs(w_0..w_P) + independence-MH(plane) sweep at
    tempering power ``phi``.

    ``normals``, ``offsets`` and ``weights`` are updated in place. ``out``
    receives (new sigma_sq, accepted, log-likelihood after the sweep,
    untempered log-likelihood ratio of the plane proposal).
    """
    N = X.shape[0]
    P = offsets.shape[0]
    p = X.shape[1]
    _activations(X, normals, offsets, Z)
    for i in range(N):
        r[i] = y[i] - weights[0]
    for j in range(P):
        w = weights[j + 1]
        for i in range(N):
            r[i] -= Z[j, i] * w

    ss = 0.0
    for i in range(N):
        ss += r[i] * r[i]
    sig = (b0 + 0.5 * phi * ss) / gam
    teff = sig / phi

    # intercept: its feature column is identically one
    szr = 0.0
    for i in range(N):
        szr += r[i]
    w_old = weights[0]
    szr += w_old * N
    den = teff + sigma0_sq * N
    c = (mu0 * teff + sigma0_sq * szr) / den
    d = teff * sigma0_sq / den
    w_new = c + np.sqrt(d) * zw[0]
    dw = w_new - w_old
    for i in range(N):
        r[i] -= dw
    weights[0] = w_new

    for j in range(P):
        szz = 0.0
        szr = 0.0
        for i in range(N):
            z = Z[j, i]
            szz += z * z
            szr += z * r[i]
        w_old = weights[j + 1]
        szr += w_old * szz
        den = teff + sigma0_sq * szz
        c = (mu0 * teff + sigma0_sq * szr) / den
        d = teff * sigma0_sq / den
        w_new = c + np.sqrt(d) * zw[j + 1]
        dw = w_new - w_old
        if dw != 0.0:
            for i in range(N):
                r[i] -= Z[j, i] * dw
        weights[j + 1] = w_new

    ss = 0.0
    for i in range(N):
        ss += r[i] * r[i]

    accepted = 0.0
    log_ratio = 0.0
    if move_planes and P > 0:
        j = int(uj * P)
        if j >= P:
            j = P - 1
        nn = 0.0
        for k in range(p):
            nn += zn[k] * zn[k]
        nn = np.sqrt(nn)
        if nn > 0.0:
            mu = (1.0 - uo) * radius
            wj = weights[j + 1]
            ss_new = 0.0
            for i in range(N):
                s = -mu
                for k in range(p):
                    s += X[i, k] * (zn[k] / nn)
                z = s if s > 0.0 else 0.0
                znew[i] = z
                rn = r[i] + wj * (Z[j, i] - z)
                ss_new += rn * rn
            log_ratio = -0.5 * (ss_new - ss) / sig
            if np.log(ua) < phi * log_ratio:
                accepted = 1.0
                for k in range(p):
                    normals[j, k] = zn[k] / nn
                offsets[j] = mu
                for i in range(N):
                    r[i] += wj * (Z[j, i] - znew[i])
                ss = ss_new

    out[0] = sig
    out[1] = accepted
    out[2] = -0.5 * N * (_LOG_2PI + np.log(sig)) - 0.5 * ss / sig
    out[3] = log_ratio


@njit(cache=True, nogil=True)
def sweep_batch(X, y, normals, offsets, weights, sigma_sq, phi, b0, mu0, sigma0_sq, radius,
                gam, zw, uj, zn, uo, ua, move_planes, accepted, loglik):
    """Apply :func:`sweep_one` to every particle in the batch."""
    L, P = offsets.shape
    N = X.shape[0]
    Z = np.empty((P, N))
    r = np.empty(N)
    znew = np.empty(N)
    out = np.empty(4)
    for t in range(L):
        sweep_one(X, y, normals[t], offsets[t], weights[t], phi, b0, mu0, sigma0_sq,
                  radius, gam[t], zw[t], uj[t], zn[t], uo[t], ua[t], move_planes, Z, r, znew, out)
        sigma_sq[t] = out[0]
        accepted[t] = out[1] > 0.0
        loglik[t] = out[2]


@njit(cache=True, nogil=True)
def run_chain(X, y, normals, offsets, weights, phi, b0, mu0, sigma0_sq, radius,
              gam, zw, uj, zn, uo, ua, move_planes, out_normals, out_offsets, out_weights,
              out_sigma, out_accepted, out_loglik, out_ratio):
    """Run ``len(gam)`` sweeps of one chain from the given state, recording each state."""
    P = offsets.shape[0]
    N = X.shape[0]
    Z = np.empty((P, N))
    r = np.empty(N)
    znew = np.empty(N)
    out = np.empty(4)
    for s in range(gam.shape[0]):
        sweep_one(X, y, normals, offsets, weights, phi, b0, mu0, sigma0_sq, radius,
                  gam[s], zw[s], uj[s], zn[s], uo[s], ua[s], move_planes, Z, r, znew, out)
        out_normals[s] = normals
        out_offsets[s] = offsets
        out_weights[s] = weights
        out_sigma[s] = out[0]
        out_accepted[s] = out[1] > 0.0
        out_loglik[s] = out[2]
        out_ratio[s] = out[3]


@njit(cache=True, fastmath=_FM, nogil=True)
def predict_batch(X, normals, offsets, weights):
    """Mean response of every particle at every row: an ``(L, M)`` array."""
    L, P = offsets.shape
    M, p = X.shape
    out = np.empty((L, M))
    for t in range(L):
        for i in range(M):
            acc = weights[t, 0]
            for j in range(P):
                s = -offsets[t, j]
                for k in range(p):
                    s += X[i, k] * normals[t, j, k]
                if s > 0.0:
                    acc += weights[t, j + 1] * s
            out[t, i] = acc
    return out


@njit(cache=True, fastmath=_FM, nogil=True)
def loglik_batch(X, y, normals, offsets, weights, sigma_sq):
    L = offsets.shape[0]
    N = X.shape[0]
    pred = predict_batch(X, normals, offsets, weights)
    out = np.empty(L)
    for t in range(L):
        ss = 0.0
        for i in range(N):
            e = y[i] - pred[t, i]
            ss += e * e
        out[t] = -0.5 * N * (_LOG_2PI + np.log(sigma_sq[t])) - 0.5 * ss / sigma_sq[t]
    return out
