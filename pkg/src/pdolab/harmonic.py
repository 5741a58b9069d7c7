"""Parabolic geometry, dyadic boxes, maximal and sharp functions on grids.

Discrete cube family.  At level k the cubes have b = 2^k dx and are centred at
grid points; a cube covers the cells at index offsets (i, j) with
``|i| dt < b^gamma`` and ``|j| dx < b`` (Euclidean in j for d = 2), intersected
with the grid.  Levels run until one cube covers the whole grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .errors import InputError
from .grid import Field, SpacetimeGrid
from .norms import NormSpec, weighted_norm
from .report import EstimateReport, ReportRow, fit_power_law, within
from .solver import apply_K_epsilon
from .symbols import Symbol


def quasi_metric(p1, p2, gamma: float) -> float:
    """|t - s|^(1/gamma) + |x - y| for points (t, x)."""
    if not gamma > 0:
        raise InputError("gamma must be positive")
    (t, x), (s, y) = p1, p2
    dx = np.atleast_1d(np.asarray(x, dtype=float)) - np.atleast_1d(np.asarray(y, dtype=float))
    return float(abs(t - s) ** (1 / gamma) + np.linalg.norm(dx))


def quasi_triangle_constant(gamma: float) -> float:
    return max(1.0, 2.0 ** (1 / gamma - 1))


@dataclass(frozen=True)
class ParabolicCube:
    center: tuple[float, np.ndarray]
    b: float
    gamma: float

    def contains(self, t: float, x) -> bool:
        t0, x0 = self.center
        r = np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float)) - np.atleast_1d(x0))
        return abs(t - t0) < self.b ** self.gamma and r < self.b

    @property
    def d(self) -> int:
        return np.atleast_1d(self.center[1]).size

    @property
    def volume(self) -> float:
        d = self.d
        omega = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
        return 2 * self.b ** self.gamma * omega * self.b ** d


@dataclass(frozen=True)
class DyadicBox:
    """[i0 2^{-n gamma}, (i0+1) 2^{-n gamma}) x prod_k [i_k 2^{-n}, (i_k+1) 2^{-n})."""

    level: int
    indices: tuple[int, ...]
    gamma: float = 2.0

    @property
    def d(self) -> int:
        return len(self.indices) - 1

    @property
    def time_length(self) -> float:
        return 2.0 ** (-self.level * self.gamma)

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def corner(self) -> np.ndarray:
        return np.array(self.indices[1:], dtype=float) * self.side

    @property
    def t0(self) -> float:
        return self.indices[0] * self.time_length

    @property
    def volume(self) -> float:
        return self.time_length * self.side ** self.d

    @classmethod
    def containing(cls, level: int, t: float, x, gamma: float = 2.0) -> "DyadicBox":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        i0 = math.floor(t / 2.0 ** (-level * gamma))
        ik = [math.floor(v / 2.0 ** (-level)) for v in x]
        return cls(level, (i0, *ik), gamma)

    def contains(self, t: float, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo = self.corner
        return (self.t0 <= t < self.t0 + self.time_length) and bool(np.all((lo <= x) & (x < lo + self.side)))

    def parent(self) -> "DyadicBox":
        return DyadicBox.containing(self.level - 1, self.t0, self.corner, self.gamma)

    def enlarged(self) -> tuple[float, float, np.ndarray, float]:
        """A*: time [t0 - l, t0 + 2l] and the closed ball of radius 2^{-(n-1)} sqrt(d) at the corner."""
        lt = self.time_length
        return self.t0 - lt, self.t0 + 2 * lt, self.corner, 2.0 ** (-(self.level - 1)) * math.sqrt(self.d)


def dyadic_labels(grid: SpacetimeGrid, level: int, gamma: float) -> np.ndarray:
    """Integer box labels of every grid node at one level (time length snapped to the grid)."""
    steps = max(1, round(2.0 ** (-level * gamma) / grid.dt))
    it = np.floor(np.round(grid.t / grid.dt) / steps).astype(np.int64)
    ix = np.floor(grid.x / 2.0 ** (-level)).astype(np.int64)
    ix -= ix.min()
    span = int(ix.max()) + 1
    if grid.d == 1:
        return it[:, None] * span + ix[None, :]
    return (it[:, None, None] * span + ix[None, :, None]) * span + ix[None, None, :]


# -- cube family on the grid -------------------------------------------------
def cube_levels(shape: tuple[int, ...], gamma: float, dx: float, dt: float) -> Iterator[tuple[int, int]]:
    """(time half-width, space half-width) in cells for b = 2^k dx, k = 0, 1, ..."""
    nt, n = shape[0], shape[1]
    k = 0
    while True:
        b = 2.0 ** k * dx
        hx = min(2 ** k - 1, n - 1)
        ht = min(max(math.ceil(b ** gamma / dt - 1e-9) - 1, 0), nt - 1)
        yield ht, hx
        if hx >= n - 1 and ht >= nt - 1:
            return
        k += 1


def footprint(ht: int, hx: int, d: int) -> np.ndarray:
    j = np.arange(-hx, hx + 1)
    if d == 1:
        space = np.ones(j.size, dtype=bool)
    else:
        space = (j[:, None] ** 2 + j[None, :] ** 2) < (hx + 1) ** 2
    return np.broadcast_to(space, (2 * ht + 1,) + space.shape).copy()


def _spread_max(v: np.ndarray, fp: np.ndarray) -> np.ndarray:
    return ndimage.maximum_filter(v, footprint=fp, mode="constant", cval=-np.inf)


def _cube_means(a: np.ndarray, fp: np.ndarray) -> np.ndarray:
    s = ndimage.correlate(a, fp.astype(float), mode="constant", cval=0.0)
    c = ndimage.correlate(np.ones_like(a), fp.astype(float), mode="constant", cval=0.0)
    return s / c


def _box_means_1d(a: np.ndarray, ht: int, hx: int) -> np.ndarray:
    nt, n = a.shape
    c = np.zeros((nt + 1, n + 1))
    c[1:, 1:] = np.cumsum(np.cumsum(a, 0), 1)
    i, j = np.arange(nt), np.arange(n)
    i0, i1 = np.clip(i - ht, 0, nt), np.clip(i + ht + 1, 0, nt)
    j0, j1 = np.clip(j - hx, 0, n), np.clip(j + hx + 1, 0, n)
    s = c[i1][:, j1] - c[i0][:, j1] - c[i1][:, j0] + c[i0][:, j0]
    return s / ((i1 - i0)[:, None] * (j1 - j0)[None, :])


def _values(field) -> tuple[np.ndarray, int, float, float]:
    if isinstance(field, Field):
        return field.values, field.grid.d, field.grid.dx, field.grid.dt
    raise InputError("expected a Field")


def _realify(vals: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Drop an imaginary part that is round-off relative to the real part."""
    if not np.iscomplexobj(vals):
        return vals
    if np.max(np.abs(vals.imag), initial=0.0) <= rtol * np.max(np.abs(vals.real), initial=0.0):
        return np.ascontiguousarray(vals.real)
    return vals


def maximal_function(field: Field, gamma: float) -> np.ndarray:
    """sup over grid cubes containing the point of the cube average of |f|."""
    vals, d, dx, dt = _values(field)
    a = np.abs(vals)
    out = np.full(a.shape, -np.inf)
    for ht, hx in cube_levels(a.shape, gamma, dx, dt):
        fp = footprint(ht, hx, d)
        means = _box_means_1d(a, ht, hx) if d == 1 else _cube_means(a, fp)
        out = np.maximum(out, _spread_max(means, fp))
    return out


def _oscillation(vals: np.ndarray, fp: np.ndarray, chunk: int = 8) -> np.ndarray:
    """Double average of |f(a) - f(b)| over the cube centred at every grid point."""
    half = tuple(s // 2 for s in fp.shape)
    pad = np.pad(vals.astype(complex if np.iscomplexobj(vals) else float),
                 [(h, h) for h in half], constant_values=np.nan)
    win = sliding_window_view(pad, fp.shape)
    mask = fp.ravel()
    out = np.empty(vals.shape)
    for r0 in range(0, vals.shape[0], chunk):
        w = win[r0:r0 + chunk].reshape(win[r0:r0 + chunk].shape[:vals.ndim] + (-1,))[..., mask]
        if np.iscomplexobj(w):
            flat = w.reshape(-1, w.shape[-1])
            res = np.empty(flat.shape[0])
            for i, z in enumerate(flat):
                z = z[~np.isnan(z)]
                res[i] = np.abs(z[:, None] - z[None, :]).sum() / z.size ** 2
            out[r0:r0 + chunk] = res.reshape(w.shape[:-1])
        else:
            w = np.sort(w, axis=-1)  # NaN padding sorts to the end
            m = np.sum(~np.isnan(w), axis=-1)
            k = np.arange(w.shape[-1])
            coef = 2 * k - m[..., None] + 1
            out[r0:r0 + chunk] = 2 * np.nansum(coef * w, axis=-1) / m ** 2
    return out


def sharp_function(field: Field, gamma: float) -> np.ndarray:
    """sup over grid cubes containing the point of (1/|Q|^2) sum_{a,b in Q} |f(a) - f(b)|."""
    vals, d, dx, dt = _values(field)
    vals = _realify(vals)
    out = np.full(vals.shape, -np.inf)
    for ht, hx in cube_levels(vals.shape, gamma, dx, dt):
        fp = footprint(ht, hx, d)
        out = np.maximum(out, _spread_max(_oscillation(vals, fp), fp))
    return out


def fefferman_stein_ratios(fields: Sequence[Field], gamma: float, spec: NormSpec,
                           refined: Sequence[Field] | None = None, drift_tol: float = 0.25) -> EstimateReport:
    """max ||f|| / ||f^#|| and max ||M f|| / ||f|| over a family, with optional refinement drift."""
    rep = EstimateReport("maximal_audit", metadata={"norm": spec.to_dict(), "gamma": gamma})

    def ratios(family):
        sharp, maxi = [], []
        for f in family:
            nf = weighted_norm(f, spec)
            ns = weighted_norm(f.with_values(sharp_function(f, gamma)), spec)
            nm = weighted_norm(f.with_values(maximal_function(f, gamma)), spec)
            if ns > 0:
                sharp.append(nf / ns)
            if nf > 0:
                maxi.append(nm / nf)
        return max(sharp), max(maxi)

    s1, m1 = ratios(fields)
    ref = "||f|| <= N ||f^#||, ||M f|| <= N ||f||"
    rep.add(ReportRow("f_over_sharp", {"count": len(fields)}, s1, verdict="pass" if math.isfinite(s1) else "fail",
                      operation="fefferman_stein_ratios", reference=ref))
    rep.add(ReportRow("maximal_over_f", {"count": len(fields)}, m1,
                      verdict="pass" if math.isfinite(m1) and m1 >= 1 - 1e-12 else "fail",
                      operation="fefferman_stein_ratios", reference=ref))
    if refined is not None:
        s2, m2 = ratios(refined)
        for case, a, b in (("f_over_sharp_drift", s1, s2), ("maximal_over_f_drift", m1, m2)):
            drift = abs(b / a - 1)
            rep.add(ReportRow(case, {"coarse": a, "fine": b}, drift, verdict="pass" if drift <= drift_tol else "fail",
                              tolerance=drift_tol, operation="fefferman_stein_ratios", reference=ref))
    return rep


def sharp_maximal_ratio(symbol: Symbol, f: Field, epsilon: float, Tcut: float, p0: float,
                        guard: float = 1e-12) -> float:
    """max over points of (T f)^# / (M |f|^p0)^(1/p0), with points where M vanishes excluded."""
    u = apply_K_epsilon(symbol, f, epsilon, Tcut)
    gamma = symbol.gamma
    sharp = sharp_function(u, gamma)
    mx = maximal_function(f.with_values(np.abs(f.values) ** p0), gamma) ** (1 / p0)
    ok = mx > guard * mx.max() if mx.max() > 0 else np.zeros(mx.shape, dtype=bool)
    if not np.any(ok):
        return 0.0
    return float(np.max(sharp[ok] / mx[ok]))


def sharp_maximal_pointwise_check(symbol: Symbol, epsilon: float, tcuts: Sequence[float], p0: float,
                                  fields: Sequence[Field], tol: float = 0.2) -> EstimateReport:
    """Scaling of max (T f)^# / (M|f|^p0)^(1/p0) across Tcut against Tcut^(1 - eps)."""
    if not 1 < p0 <= 2:
        raise InputError("p0 must lie in (1, 2]")
    rep = EstimateReport("maximal_audit", metadata={"symbol": symbol.to_dict(), "p0": p0})
    ref = "(T_{eps,T} f)^# <= N T^{1-eps} (M|f|^{p0})^{1/p0}"
    best = []
    for tc in tcuts:
        r = max(sharp_maximal_ratio(symbol, f, epsilon, tc, p0) for f in fields)
        best.append(r)
        rep.add(ReportRow(f"Tcut={tc:g}", {"epsilon": epsilon, "Tcut": tc, "p0": p0}, r, verdict="info",
                          operation="sharp_maximal_pointwise_check", reference=ref))
    if all(b > 0 for b in best) and len(best) >= 2:
        fit = fit_power_law(tcuts, best)
        rep.add(ReportRow("slope", {"epsilon": epsilon, "tcuts": list(tcuts)}, fit.slope, 1 - epsilon,
                          fit.slope, fit.stderr, within(fit.slope, 1 - epsilon, tol),
                          operation="sharp_maximal_pointwise_check", reference=ref, tolerance=tol))
    else:
        rep.add(ReportRow("slope", {"epsilon": epsilon}, 0.0, 1 - epsilon, verdict="info",
                          operation="sharp_maximal_pointwise_check", reference=ref, note="all ratios zero"))
    return rep


def brute_force_maximal_sharp(field: Field, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Direct enumeration of every grid cube (reference for small grids, O(n^3) or worse)."""
    vals = _realify(field.values)
    d = field.grid.d
    shape = vals.shape
    pts = np.stack(np.meshgrid(*[np.arange(s) for s in shape], indexing="ij"), axis=-1).reshape(-1, d + 1)
    flat = vals.reshape(-1)
    M = np.full(flat.shape, -np.inf)
    S = np.full(flat.shape, -np.inf)
    for ht, hx in cube_levels(shape, gamma, field.grid.dx, field.grid.dt):
        for c in pts:
            off = pts - c
            inside = (np.abs(off[:, 0]) <= ht) & np.all(np.abs(off[:, 1:]) <= hx, axis=1)
            if d == 2:
                inside &= np.sum(off[:, 1:] ** 2, axis=1) < (hx + 1) ** 2
            v = flat[inside]
            mean = np.mean(np.abs(v))
            osc = np.sum(np.abs(v[:, None] - v[None, :])) / v.size ** 2
            M[inside] = np.maximum(M[inside], mean)
            S[inside] = np.maximum(S[inside], osc)
    return M.reshape(shape), S.reshape(shape)
