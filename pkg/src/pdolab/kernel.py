"""Fundamental-solution slices on the periodic grid and their decay / Hörmander measurements."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError
from .grid import SpacetimeGrid, ifft_space
from .report import EstimateReport, ReportRow, fit_power_law, within
from .symbols import Symbol

TAIL_LIMIT = 1e-3
HIGH_FREQ_LIMIT = 1e-8
MIN_WIDTH_CELLS = 4.0


def symbol_time_integral(symbol: Symbol, s: float, t: float, xi) -> np.ndarray:
    """``int_s^t psi(r, xi) dr``, exact for piecewise-constant coefficient tracks."""
    return symbol.time_integral(s, t, xi)


def _alpha_tuple(alpha, d: int) -> tuple[int, ...]:
    if alpha is None:
        return (0,) * d
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != d:
        raise InputError("multi-index length must equal d")
    return alpha


def kernel_multiplier(symbol: Symbol, grid: SpacetimeGrid, t: float, s: float, epsilon: float = 0.0,
                      m: int = 0, alpha=None) -> np.ndarray:
    """``(i xi)^alpha |xi|^(eps*gamma) psi(t, xi)^m exp(int_s^t psi)`` on the FFT frequency grid."""
    if not 0.0 <= epsilon <= 1.0:
        raise InputError("epsilon must lie in [0, 1]")
    if m not in (0, 1):
        raise InputError("m must be 0 or 1")
    alpha = _alpha_tuple(alpha, grid.d)
    if sum(alpha) > 2:
        raise InputError("|alpha| <= 2 is supported")
    mult = np.exp(symbol.time_integral(s, t, grid.XI))
    if epsilon:
        mult = mult * fractional_multiplier(grid, epsilon * symbol.gamma)
    if m:
        mult = mult * symbol.eval(t, grid.XI)
    for i, a in enumerate(alpha):
        if a:
            mult = mult * (1j * grid.XI[..., i]) ** a
    return mult


def fractional_multiplier(grid: SpacetimeGrid, nu: float) -> np.ndarray:
    """``|xi|^nu`` with the value at xi = 0 set to its limit 0 (1 when nu = 0)."""
    if nu == 0:
        return np.ones(grid.spatial_shape)
    r = grid.abs_xi
    return np.where(r > 0, np.where(r > 0, r, 1.0) ** nu, 0.0)


def multiplier_to_kernel(mult: np.ndarray, grid: SpacetimeGrid) -> np.ndarray:
    """Inverse transform scaled so that the discrete convolution reproduces the multiplier action.

    Output is centred: spatial index N/2 is x = 0.  Works on trailing d axes.
    """
    axes = tuple(range(-grid.d, 0))
    return np.fft.fftshift(ifft_space(mult, grid.d), axes=axes) / grid.cell_volume


@dataclass(frozen=True)
class KernelSlice:
    grid: SpacetimeGrid
    t: float
    s: float
    epsilon: float
    m: int
    alpha: tuple[int, ...]
    values: np.ndarray = field(compare=False, repr=False)
    warning: str = ""

    @property
    def lag(self) -> float:
        return self.t - self.s

    def header(self) -> dict:
        g = self.grid
        return {"d": g.d, "L": g.L, "N": g.N, "t": self.t, "s": self.s,
                "epsilon": self.epsilon, "m": self.m, "alpha": list(self.alpha)}


def build_kernel_slice(symbol: Symbol, grid: SpacetimeGrid, t: float, s: float, epsilon: float = 0.0,
                       m: int = 0, alpha=None) -> KernelSlice:
    if not (0 <= s < t):
        raise InputError("kernel slices need 0 <= s < t")
    if m == 1 and t - s < 2 * grid.dt:
        raise InputError("m = 1 slices need t - s >= 2 dt")
    alpha = _alpha_tuple(alpha, grid.d)
    mult = kernel_multiplier(symbol, grid, t, s, epsilon, m, alpha)
    warning = ""
    if grid.xi_max ** symbol.gamma * (t - s) < 1:
        warning = "unresolved: |xi_max|^gamma (t-s) < 1"
    return KernelSlice(grid, float(t), float(s), float(epsilon), int(m), alpha,
                       multiplier_to_kernel(mult, grid), warning)


def _is_base(slc: KernelSlice) -> bool:
    return slc.epsilon == 0 and slc.m == 0 and not any(slc.alpha)


def l1_mass(slc: KernelSlice) -> float:
    if not _is_base(slc):
        raise InputError("l1_mass is defined for epsilon = m = |alpha| = 0 slices")
    return float(np.sum(np.abs(slc.values)) * slc.grid.cell_volume)


def tail_mass(slc: KernelSlice, radius: float | None = None) -> float:
    """Mass of |values| outside |x| <= radius (default L/2)."""
    radius = slc.grid.L / 2 if radius is None else radius
    outside = slc.grid.abs_x > radius
    return float(np.sum(np.abs(slc.values)[outside]) * slc.grid.cell_volume)


def lag_resolution(symbol: Symbol, grid: SpacetimeGrid, s: float, t: float,
                   tail_limit: float | None = TAIL_LIMIT) -> tuple[bool, str]:
    """Whether a lag is resolved: decayed Nyquist shell, kernel width >= 4 cells, small torus tail.

    ``tail_limit=None`` keeps only the two spectral rules.
    """
    mult = np.exp(symbol.time_integral(s, t, grid.XI))
    shell = np.zeros(grid.spatial_shape, dtype=bool)
    for i in range(grid.d):
        idx = [slice(None)] * grid.d
        idx[i] = grid.N // 2
        shell[tuple(idx)] = True
    if np.abs(mult[shell]).max() > HIGH_FREQ_LIMIT:
        return False, "high frequencies not decayed"
    eff = abs(float(np.real(symbol.coefficient_integral(s, t))))
    if eff ** (1 / symbol.gamma) < MIN_WIDTH_CELLS * grid.dx:
        return False, "kernel narrower than 4 cells"
    if tail_limit is None:
        return True, ""
    base = KernelSlice(grid, t, s, 0.0, 0, (0,) * grid.d, multiplier_to_kernel(mult, grid))
    if tail_mass(base) > tail_limit:
        return False, f"torus tail mass above {tail_limit:g}"
    return True, ""


def decay_theory(gamma: float, d: int, epsilon: float, m: int, order: int, n: float, p: float = math.inf) -> float:
    """Lag exponent -(m+eps) - (d+|alpha|-n)/gamma + d/(p gamma)."""
    extra = 0.0 if math.isinf(p) else d / (p * gamma)
    return -(m + epsilon) - (d + order - n) / gamma + extra


def kernel_lp_norm(slc: KernelSlice, p: float, n_plus_delta: float = 0.0) -> float:
    """Discrete L_p norm of |x|^(n+delta) * slice; p = inf gives the weighted sup."""
    if not p >= 1:
        raise InputError("p must lie in [1, inf]")
    vals = np.abs(slc.values)
    if n_plus_delta:
        vals = vals * slc.grid.abs_x ** n_plus_delta
    if math.isinf(p):
        return float(vals.max())
    return float((np.sum(vals ** p) * slc.grid.cell_volume) ** (1 / p))


def decay_exponent_fit(symbol: Symbol, grid: SpacetimeGrid, epsilon: float, m: int, alpha, n: float,
                       lag_sweep: Sequence[float], tol: float = 0.1, s: float = 0.0,
                       norms: Sequence[float] = (math.inf, 2.0)) -> EstimateReport:
    """Fit log Q(tau) against log tau, Q = || |x|^n slice ||_{L_p} for p in ``norms``."""
    alpha = _alpha_tuple(alpha, grid.d)
    order = sum(alpha)
    rep = EstimateReport("kernel_decay", metadata={"grid": grid.to_dict(), "symbol": symbol.to_dict()})
    kept, notes = [], []
    values = {p: [] for p in norms}
    for tau in lag_sweep:
        ok, why = lag_resolution(symbol, grid, s, s + tau)
        if not ok:
            notes.append(f"tau={tau:g} excluded ({why})")
            continue
        slc = build_kernel_slice(symbol, grid, s + tau, s, epsilon, m, alpha)
        kept.append(tau)
        for p in norms:
            values[p].append(kernel_lp_norm(slc, p, n))
    case_inputs = {"gamma": symbol.gamma, "d": grid.d, "epsilon": epsilon, "m": m, "alpha": list(alpha), "n": n}
    span_ok = len(kept) >= 3 and math.log10(max(kept) / min(kept)) >= 2 - 1e-9
    for p in norms:
        theory = decay_theory(symbol.gamma, grid.d, epsilon, m, order, n, p)
        label = "sup" if math.isinf(p) else f"L{p:g}"
        inputs = dict(case_inputs, norm=label, lags=list(kept))
        if not span_ok:
            rep.add(ReportRow(f"{label}", inputs, math.nan, theory, verdict="fail", tolerance=tol,
                              operation="decay_exponent_fit", reference=_decay_reference(p),
                              note="fewer than 2 decades of resolved lags; " + "; ".join(notes)))
            continue
        fit = fit_power_law(kept, values[p])
        rep.add(ReportRow(label, inputs, fit.slope, theory, fit.slope, fit.stderr,
                          within(fit.slope, theory, tol), operation="decay_exponent_fit",
                          reference=_decay_reference(p), tolerance=tol, note="; ".join(notes)))
    rep.metadata["values"] = {("sup" if math.isinf(p) else f"L{p:g}"): v for p, v in values.items()}
    return rep


def _decay_reference(p: float) -> str:
    base = "sup_x |x|^n |d_t^m D^alpha P_eps| <= N |t-s|^{-(m+eps)-(d+|alpha|-n)/gamma}"
    return base if math.isinf(p) else base + " (L_p: + d/(p gamma))"


def hormander_integral(symbol: Symbol, grid: SpacetimeGrid, epsilon: float, box, pair1, pair2,
                       Tcut: float, chunk: int = 256) -> float:
    """``int_{complement of A*} |K(t,s0,x-y0) h(t-s0) - K(t,s1,x-y1) h(t-s1)| dx dt`` on the grid.

    The time integral runs over grid times in (min(s0, s1), grid.T]; the cutoff
    keeps lags ``0 < t - s <= Tcut`` when epsilon < 1.
    """
    (s0, y0), (s1, y1) = pair1, pair2
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    y1 = np.atleast_1d(np.asarray(y1, dtype=float))
    if not (box.contains(s0, y0) and box.contains(s1, y1)):
        raise InputError("both pairs must lie in the box")
    t_lo, t_hi, corner, radius = box.enlarged()
    if radius >= grid.L or t_hi > grid.T or box.d != grid.d:
        raise InputError("the enlarged box does not fit on the grid")
    if s0 == s1 and np.array_equal(y0, y1):
        return 0.0
    times = grid.t[grid.t > min(s0, s1)]
    shifts = [np.exp(-1j * np.tensordot(grid.XI, y, axes=([-1], [0]))) for y in (y0, y1)]
    eps_mult = fractional_multiplier(grid, epsilon * symbol.gamma)
    inner_ball = np.linalg.norm(grid.X - corner, axis=-1) <= radius
    total = 0.0
    for c0 in range(0, times.size, chunk):
        tc = times[c0:c0 + chunk]
        diff = np.zeros((tc.size,) + grid.spatial_shape, dtype=complex)
        for sign, s, shift in ((1.0, s0, shifts[0]), (-1.0, s1, shifts[1])):
            lag = tc - s
            keep = lag > 0
            if epsilon < 1:
                keep &= lag <= Tcut + 1e-12
            if not np.any(keep):
                continue
            integ = symbol.coefficient_integral(np.full(keep.sum(), s), tc[keep])
            base = symbol.base(grid.XI)
            mult = np.exp(integ.reshape((-1,) + (1,) * grid.d) * base) * eps_mult * shift
            diff[keep] += sign * mult
        kern = multiplier_to_kernel(diff, grid)
        vals = np.abs(kern)
        in_star = (tc >= t_lo) & (tc <= t_hi)
        vals[in_star] = np.where(inner_ball, 0.0, vals[in_star])
        total += float(vals.sum()) * grid.cell_volume * grid.dt
    return total
