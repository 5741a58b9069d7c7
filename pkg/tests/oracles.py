"""Closed-form references, written independently of the package."""
from __future__ import annotations

import numpy as np


def heat_kernel(x, tau):
    return np.exp(-x ** 2 / (4 * tau)) / np.sqrt(4 * np.pi * tau)


def poisson_kernel(x, tau, period=None, images=200):
    out = tau / (tau ** 2 + x ** 2) / np.pi
    if period is not None:
        for n in range(1, images + 1):
            for s in (-1, 1):
                out = out + tau / (tau ** 2 + (x + s * n * period) ** 2) / np.pi
    return out


def mode_response(lam, t, rate=1.0):
    """int_0^t e^{-lam (t-s)} e^{-rate s} ds."""
    return (np.exp(-rate * t) - np.exp(-lam * t)) / (lam - rate)


def left_endpoint_scalar(lam, f, dt):
    """u_{j+1} = e^{-lam dt} (u_j + dt f_j), u_0 = 0 (complex lam allowed)."""
    u = np.zeros(len(f), dtype=complex)
    for j in range(len(f) - 1):
        u[j + 1] = np.exp(-lam * dt) * (u[j] + dt * f[j])
    return u


def brute_force_duhamel(mult_of_lag, F, dt, window=None):
    """u_j = sum_{i<j, j-i <= window} mult(i, j) F_i dt by direct double loop."""
    U = np.zeros_like(F, dtype=complex)
    n = F.shape[0]
    for j in range(n):
        for i in range(j):
            if window is not None and j - i > window:
                continue
            U[j] += mult_of_lag(i, j) * F[i] * dt
    return U


def direct_maximal_sharp(vals, gamma, dx, dt):
    """Enumerate every cube b = 2^k dx centred at a grid node; O(n^2) per cube."""
    vals = np.asarray(vals)
    shape = vals.shape
    d = vals.ndim - 1
    idx = np.stack(np.meshgrid(*[np.arange(s) for s in shape], indexing="ij"), -1).reshape(-1, d + 1)
    flat = vals.reshape(-1)
    M = np.zeros(flat.size)
    S = np.zeros(flat.size)
    span_t = (shape[0] - 1) * dt
    span_x = (shape[1] - 1) * dx * np.sqrt(d)
    k = 0
    while True:
        b = 2.0 ** k * dx
        for c in idx:
            off = idx - c
            inside = np.abs(off[:, 0]) * dt < b ** gamma - 1e-12
            inside &= np.sqrt(np.sum((off[:, 1:] * dx) ** 2, axis=1)) < b - 1e-12 if d == 2 else \
                np.abs(off[:, 1]) * dx < b - 1e-12
            v = flat[inside]
            M[inside] = np.maximum(M[inside], np.mean(np.abs(v)))
            S[inside] = np.maximum(S[inside], np.mean(np.abs(v[:, None] - v[None, :])))
        if b > span_x and b ** gamma > span_t:
            break
        k += 1
    return M.reshape(shape), S.reshape(shape)
