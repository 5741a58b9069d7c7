"""Exact-in-Fourier Duhamel solver, the cutoff operators K_{eps,T}, and Fourier multipliers on fields."""
from __future__ import annotations

import math

import numpy as np

from .errors import InputError
from .grid import Field, SpacetimeGrid, fft_space, ifft_space
from .kernel import fractional_multiplier
from .symbols import Symbol

CUTOFF_SLACK = 1e-12


def _check_aligned(symbol: Symbol, grid: SpacetimeGrid):
    if symbol.track is not None and not symbol.track.is_aligned(grid.dt):
        raise InputError("symbol track breakpoints are not grid times")


def _cumulative(symbol: Symbol, grid: SpacetimeGrid) -> np.ndarray:
    """C_j = int_0^{t_j} c(r) dr (complex)."""
    return symbol.coefficient_integral(np.zeros_like(grid.t), grid.t)


def lag_window(epsilon: float, Tcut: float, grid: SpacetimeGrid) -> int | None:
    """Number of kept lags (lag <= Tcut) or None when no cutoff applies."""
    if epsilon >= 1 or Tcut >= grid.T:
        return None
    if not Tcut > 0:
        raise InputError("Tcut must be positive")
    return int(math.floor((Tcut + CUTOFF_SLACK) / grid.dt))


def apply_K_epsilon(symbol: Symbol, f: Field, epsilon: float, Tcut: float = math.inf,
                    grid: SpacetimeGrid | None = None, adjoint: bool = False) -> Field:
    """Left-endpoint Duhamel sum with multiplier h |xi|^(eps gamma) exp(int_s^t psi).

    ``u_j = sum_{i<j} h(t_j - t_i) |xi|^(eps gamma) exp(C_j - C_i) f_i dt``.  The
    adjoint (w.r.t. the uniform discrete measure) sums anti-causally with the
    conjugate multiplier.
    """
    grid = grid or f.grid
    if f.layout != "spacetime":
        raise InputError("K acts on space-time fields")
    if not 0.0 <= epsilon <= 1.0:
        raise InputError("epsilon must lie in [0, 1]")
    _check_aligned(symbol, grid)
    F = fft_space(f.values, grid.d)
    base = symbol.base(grid.XI)
    C = _cumulative(symbol, grid)
    dt = grid.dt
    U = np.zeros_like(F)
    window = lag_window(epsilon, Tcut, grid)
    bshape = (-1,) + (1,) * grid.d
    if window is None:
        E = np.exp(np.diff(C).reshape(bshape) * base)
        if not adjoint:
            for j in range(grid.Nt):
                U[j + 1] = E[j] * (U[j] + dt * F[j])
        else:
            E = np.conj(E)
            for j in range(grid.Nt - 1, -1, -1):
                U[j] = E[j] * (U[j + 1] + dt * F[j + 1])
    else:
        for lag in range(1, min(window, grid.Nt) + 1):
            prop = np.exp((C[lag:] - C[:-lag]).reshape(bshape) * base)
            if not adjoint:
                U[lag:] += prop * F[:-lag] * dt
            else:
                U[:-lag] += np.conj(prop) * F[lag:] * dt
    if epsilon:
        U = U * fractional_multiplier(grid, epsilon * symbol.gamma)
    return Field(grid, ifft_space(U, grid.d))


def solve_cauchy(symbol: Symbol, f: Field, grid: SpacetimeGrid | None = None) -> Field:
    """Solution of du/dt = psi(t, -i grad) u + f, u(0) = 0, by the exact-in-xi Duhamel sum."""
    return apply_K_epsilon(symbol, f, 0.0, math.inf, grid)


def _multiply(field: Field, mult: np.ndarray) -> Field:
    d = field.grid.d
    return field.with_values(ifft_space(fft_space(field.values, d) * mult, d))


def fractional_laplacian(field: Field, nu: float) -> Field:
    """(-Delta)^(nu/2): multiplier |xi|^nu."""
    if nu < 0:
        raise InputError("nu must be non-negative")
    if nu == 0:
        return field.with_values(field.values.copy())
    return _multiply(field, fractional_multiplier(field.grid, nu))


def bessel_potential(field: Field, nu: float) -> Field:
    """(1-Delta)^(nu/2): multiplier (1+|xi|^2)^(nu/2)."""
    if nu == 0:
        return field.with_values(field.values.copy())
    return _multiply(field, (1.0 + field.grid.abs_xi ** 2) ** (nu / 2))


def apply_psi(symbol: Symbol, field: Field, t: float | None = None) -> Field:
    """psi(t, -i grad) applied slice-wise (``t`` is required for a single slice)."""
    grid = field.grid
    base = symbol.base(grid.XI)
    if field.layout == "spacetime":
        coef = symbol.coefficient(grid.t).reshape((-1,) + (1,) * grid.d)
    else:
        if t is None:
            raise InputError("a single-slice field needs t")
        coef = symbol.coefficient(t)
    return _multiply(field, coef * base)


def _spatial_l2(values: np.ndarray, grid: SpacetimeGrid) -> np.ndarray:
    axes = tuple(range(-grid.d, 0))
    return np.sqrt(np.sum(np.abs(values) ** 2, axis=axes) * grid.cell_volume)


def residual(symbol: Symbol, u: Field, f: Field) -> float:
    """max_j ||D+ u_j - psi(t_j) u_j - f_j|| / max_j ||f_j|| over interior times j = 1..Nt-1."""
    grid = u.grid
    fnorm = _spatial_l2(f.values, grid).max()
    if fnorm == 0:
        return 0.0 if not np.any(u.values) else math.inf
    dplus = (u.values[2:] - u.values[1:-1]) / grid.dt
    psi_u = apply_psi(symbol, u).values[1:-1]
    r = dplus - psi_u - f.values[1:-1]
    return float(_spatial_l2(r, grid).max() / fnorm)


def operator_matrix(symbol: Symbol, grid: SpacetimeGrid, epsilon: float, Tcut: float,
                    base_value: complex) -> np.ndarray:
    """(Nt+1)x(Nt+1) time matrix of K at one frequency with base(xi) = base_value."""
    C = _cumulative(symbol, grid)
    j = np.arange(grid.Nt + 1)
    lag = j[:, None] - j[None, :]
    keep = lag > 0
    window = lag_window(epsilon, Tcut, grid)
    if window is not None:
        keep &= lag <= window
    mag = abs(base_value) ** epsilon if epsilon else 1.0
    expo = np.where(keep, (C[:, None] - C[None, :]) * base_value, 0.0)
    return np.where(keep, grid.dt * mag * np.exp(expo), 0.0)


def operator_norm_exact(symbol: Symbol, grid: SpacetimeGrid, epsilon: float, Tcut: float) -> float:
    """Unweighted discrete L2 -> L2 norm of K via per-frequency SVD (frequencies decouple)."""
    _check_aligned(symbol, grid)
    values = np.unique(np.round(symbol.base(grid.XI).ravel(), 12))
    best = 0.0
    for b in values:
        best = max(best, float(np.linalg.norm(operator_matrix(symbol, grid, epsilon, Tcut, b), 2)))
    return best


def operator_norm_power(symbol: Symbol, grid: SpacetimeGrid, epsilon: float, Tcut: float,
                        weight: np.ndarray | None = None, iters: int = 60, seed: int = 0) -> float:
    """Power iteration on W^(1/2) K W^(-1/2) for the L2(w) operator norm (uniform discrete measure)."""
    rng = np.random.default_rng(seed)
    sq = np.ones(grid.shape) if weight is None else np.sqrt(np.broadcast_to(weight, grid.shape))
    g = rng.standard_normal(grid.shape)
    est = 0.0
    for _ in range(iters):
        g = g / np.linalg.norm(g)
        y = apply_K_epsilon(symbol, Field(grid, g / sq), epsilon, Tcut).values * sq
        est = float(np.linalg.norm(y))
        z = apply_K_epsilon(symbol, Field(grid, y * sq), epsilon, Tcut, adjoint=True).values / sq
        g = z
    return est
