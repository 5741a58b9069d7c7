"""Muckenhoupt weights: evaluation, sampled A_p characteristics, regularity constants.

Power weights are treated as radial powers ``|z|^beta`` in their own dimension
``D``: ``|x|^alpha`` (D = d), ``|t|^alpha1`` (D = 1) and
``(t^2 + |x|^2)^(alpha/2)`` (D = d + 1).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate

from .errors import AdmissibilityError, CapabilityError, InputError
from .report import EstimateReport, ReportRow

KINDS = ("constant", "power_space", "power_time", "spacetime_power", "product_power", "tabulated")

RHO_FLOOR = 1e-8
P0_DELTA = 1e-9


@dataclass(frozen=True)
class WeightSpec:
    kind: str
    p: float
    dim: int
    alpha: float = 0.0
    alpha1: float = 0.0
    alpha2: float = 0.0
    q: float | None = None
    scale: float = 1.0
    table: np.ndarray | None = field(default=None, compare=False)
    table_extent: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown weight kind {self.kind!r}")
        if not (self.p > 1 and math.isfinite(self.p)):
            raise InputError("p must lie in (1, inf)")
        if self.dim < 1:
            raise InputError("dim must be positive")
        if not self.scale > 0:
            raise InputError("scale must be positive")
        if self.kind == "power_time" and self.dim != 1:
            raise InputError("power_time weights live on R (dim = 1)")
        if self.kind in ("spacetime_power", "product_power") and self.dim < 2:
            raise InputError(f"{self.kind} needs dim = d + 1 >= 2")
        if self.kind == "tabulated":
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim != self.dim:
                raise InputError("table rank must equal dim")
            if not np.all(np.isfinite(tab)) or np.any(tab <= 0):
                raise InputError("tabulated weights must be strictly positive and finite")
            object.__setattr__(self, "table", tab)

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, p: float, dim: int) -> "WeightSpec":
        return cls("constant", p, dim)

    @classmethod
    def power_space(cls, alpha: float, p: float, d: int) -> "WeightSpec":
        return cls("power_space", p, d, alpha=alpha)

    @classmethod
    def power_time(cls, alpha1: float, p: float) -> "WeightSpec":
        return cls("power_time", p, 1, alpha1=alpha1)

    @classmethod
    def spacetime_power(cls, alpha: float, p: float, d: int) -> "WeightSpec":
        return cls("spacetime_power", p, d + 1, alpha=alpha)

    @classmethod
    def product_power(cls, alpha1: float, alpha2: float, p: float, d: int, q: float | None = None) -> "WeightSpec":
        return cls("product_power", p, d + 1, alpha1=alpha1, alpha2=alpha2, q=q)

    @classmethod
    def tabulated(cls, table, p: float, extent: float) -> "WeightSpec":
        tab = np.asarray(table, dtype=float)
        return cls("tabulated", p, tab.ndim, table=tab, table_extent=extent)

    # -- structure ------------------------------------------------------------
    @property
    def space_dim(self) -> int:
        return self.dim - 1 if self.kind in ("spacetime_power", "product_power") else self.dim

    @property
    def exponent(self) -> float:
        """Radial power beta of a pure power weight in its own dimension."""
        if self.kind == "constant":
            return 0.0
        if self.kind in ("power_space", "spacetime_power"):
            return self.alpha
        if self.kind == "power_time":
            return self.alpha1
        raise CapabilityError(f"{self.kind} is not a single radial power")

    def components(self) -> tuple["WeightSpec", "WeightSpec"]:
        """(time weight in A_q(R), space weight in A_p(R^d)) of a product weight."""
        if self.kind != "product_power":
            raise CapabilityError("only product weights split into components")
        q = self.q if self.q is not None else self.p
        return WeightSpec.power_time(self.alpha1, q), WeightSpec.power_space(self.alpha2, self.p, self.dim - 1)

    def with_p(self, p: float) -> "WeightSpec":
        return replace(self, p=p)

    def admissible(self) -> bool:
        if self.kind in ("constant", "tabulated"):
            return True
        if self.kind == "product_power":
            return all(c.admissible() for c in self.components())
        D, b = self.dim, self.exponent
        return -D < b < D * (self.p - 1)

    def require_admissible(self):
        if not self.admissible():
            raise AdmissibilityError(f"{self.kind} weight with exponents "
                                     f"({self.alpha}, {self.alpha1}, {self.alpha2}) is outside A_{self.p}")

    # -- evaluation -----------------------------------------------------------
    def evaluate(self, point) -> np.ndarray:
        """w(point); ``point`` has shape (..., dim). Singular points give +inf."""
        z = np.asarray(point, dtype=float)
        if z.ndim == 0:
            z = z[None]
        if z.shape[-1] != self.dim:
            raise InputError(f"point dimension {z.shape[-1]} does not match weight dim {self.dim}")
        if self.kind == "constant":
            return np.full(z.shape[:-1], self.scale)
        if self.kind == "tabulated":
            n = np.array(self.table.shape)
            h = 2 * self.table_extent / n
            idx = np.floor((z + self.table_extent) / h).astype(int)
            idx = np.clip(idx, 0, n - 1)
            return self.scale * self.table[tuple(np.moveaxis(idx, -1, 0))]
        if self.kind == "product_power":
            t = np.abs(z[..., 0])
            r = np.linalg.norm(z[..., 1:], axis=-1)
            return self.scale * _pow(t, self.alpha1) * _pow(r, self.alpha2)
        r = np.linalg.norm(z, axis=-1)
        return self.scale * _pow(r, self.exponent)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "p": self.p, "dim": self.dim}
        if self.kind in ("power_space", "spacetime_power"):
            out["alpha"] = self.alpha
        if self.kind in ("power_time", "product_power"):
            out["alpha1"] = self.alpha1
        if self.kind == "product_power":
            out["alpha2"] = self.alpha2
            out["q"] = self.q if self.q is not None else self.p
        if self.kind == "tabulated":
            out["table"] = self.table.tolist()
            out["table_extent"] = self.table_extent
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "WeightSpec":
        kind = data["kind"]
        p = float(data["p"])
        if kind == "product_power":
            return cls.product_power(data.get("alpha1", 0.0), data.get("alpha2", 0.0), p,
                                     int(data["dim"]) - 1, q=data.get("q"))
        if kind == "tabulated":
            return cls.tabulated(data["table"], p, data.get("table_extent", 1.0))
        return cls(kind, p, int(data["dim"]), alpha=float(data.get("alpha", 0.0)),
                   alpha1=float(data.get("alpha1", 0.0)))


def _pow(r, b):
    r = np.asarray(r, dtype=float)
    if b == 0:
        return np.ones_like(r)
    at_zero = 0.0 if b > 0 else np.inf
    return np.where(r > 0, np.where(r > 0, r, 1.0) ** b, at_zero)


# -- ball families -----------------------------------------------------------
@dataclass(frozen=True)
class BallFamily:
    centers: np.ndarray
    radii: np.ndarray
    resolution: int = 65
    rho_floor: float = RHO_FLOOR

    @classmethod
    def default(cls, dim: int, seed: int = 0, n_centers: int = 64,
                radii_exp: tuple[int, int] = (-7, 7), resolution: int | None = None) -> "BallFamily":
        rng = np.random.default_rng(seed)
        centers = np.vstack([np.zeros((1, dim)), rng.uniform(-10, 10, (n_centers - 1, dim))])
        radii = 2.0 ** np.arange(radii_exp[0], radii_exp[1] + 1)
        if resolution is None:
            resolution = {1: 1025, 2: 129}.get(dim, 33)
        return cls(centers, radii, resolution)

    @classmethod
    def centered(cls, dim: int, radii, resolution: int | None = None) -> "BallFamily":
        if resolution is None:
            resolution = {1: 1025, 2: 129}.get(dim, 33)
        return cls(np.zeros((1, dim)), np.asarray(radii, dtype=float), resolution)

    def check(self):
        if math.log10(self.radii.max() / self.radii.min()) < 4 - 1e-9:
            raise InputError("ball family radii must span at least 4 decades")


def _unit_ball_volume(D: int) -> float:
    return math.pi ** (D / 2) / math.gamma(D / 2 + 1)


def _radial_primitive(a, b, rho):
    """int_rho^a r^b dr (elementwise, a >= rho)."""
    a = np.maximum(np.asarray(a, dtype=float), rho)
    if abs(b + 1) < 1e-14:
        return np.log(a / rho)
    return (a ** (b + 1) - rho ** (b + 1)) / (b + 1)


def _power_average_1d(c, r, b, rho):
    """Average of |x|^b over [c - r, c + r]; the gap (-rho, rho) is removed when b <= -1."""
    lo, hi = c - r, c + r
    if b > -1:
        F = lambda x: np.sign(x) * np.abs(x) ** (b + 1) / (b + 1)
        return (F(hi) - F(lo)) / (2 * r)
    H = lambda x: np.sign(x) * _radial_primitive(np.abs(x), b, rho)
    return (H(hi) - H(lo)) / (2 * r)


def _centered_power_average(r, b, D, rho):
    """Average of |z|^b over the ball B(0, r) in R^D (regularised below rho when b <= -D)."""
    if b > -D:
        return D * r ** b / (b + D)
    return D * r ** (-D) * _radial_primitive(r, b + D - 1, rho)


def _cell_average_grid(center, r, n, D):
    h = 2 * r / n
    axis = -r + h * (np.arange(n) + 0.5)
    mesh = np.stack(np.meshgrid(*([axis] * D), indexing="ij"), axis=-1).reshape(-1, D)
    inside = np.sum(mesh ** 2, axis=-1) <= r * r
    return center + mesh[inside], h


def _power_averages_nd(center, r, sigmas, b, D, n, rho):
    """Averages of |z|^(b*sigma) over B(center, r) for each sigma (midpoint cells)."""
    if np.all(center == 0):
        return [_centered_power_average(r, b * s, D, rho) for s in sigmas]
    pts, h = _cell_average_grid(center, r, n, D)
    rad = np.linalg.norm(pts, axis=-1)
    # the cell holding the origin gets the radial limit of an equal-volume ball
    holder = np.all(np.abs(pts) < h / 2, axis=-1)
    rho_c = h * _unit_ball_volume(D) ** (-1 / D)
    out = []
    for s in sigmas:
        e = b * s
        vals = np.where(holder, 0.0, np.where(rad > 0, rad, 1.0) ** e)
        if np.any(holder):
            vals = np.where(holder, _centered_power_average(rho_c, e, D, rho), vals)
        out.append(float(np.sum(vals) / vals.size))
    return out


def _table_averages(w: WeightSpec, center, r, sigmas, n):
    """Averages of w^sigma over B(center, r) for a step-function table."""
    tab = np.asarray(w.table, dtype=float) * w.scale
    ext = w.table_extent
    h = 2 * ext / np.array(tab.shape)
    out = []
    if w.dim == 1:
        lo = np.clip(center[0] - r, -ext, ext)
        hi = np.clip(center[0] + r, -ext, ext)
        edges = -ext + h[0] * np.arange(tab.size + 1)
        for s in sigmas:
            with np.errstate(over="ignore"):
                cum = np.concatenate([[0.0], np.cumsum(tab ** s * h[0])])
            prim = lambda x: np.interp(x, edges, cum)
            out.append(float((prim(hi) - prim(lo)) / (2 * r)))
        return out
    axes = [-ext + h[i] * (np.arange(tab.shape[i]) + 0.5) for i in range(w.dim)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    inside = np.sum((mesh - center) ** 2, axis=-1) <= r * r
    if np.count_nonzero(inside) < n:
        pts, _ = _cell_average_grid(center, r, n, w.dim)
        vals = w.evaluate(pts)
    else:
        vals = tab[inside]
    with np.errstate(over="ignore"):
        return [float(np.mean(vals ** s)) for s in sigmas]


def ap_products(w: WeightSpec, family: BallFamily) -> np.ndarray:
    """A_p products (avg w)(avg w^{-1/(p-1)})^{p-1}, shape (centers, radii)."""
    if w.kind == "product_power":
        raise CapabilityError("product weights are characterised through components()")
    family.check()
    p = w.p
    sig = -1.0 / (p - 1)
    out = np.empty((len(family.centers), len(family.radii)))
    for i, c in enumerate(family.centers):
        for j, r in enumerate(family.radii):
            if w.kind == "tabulated":
                a1, a2 = _table_averages(w, c, r, (1.0, sig), family.resolution)
            elif w.kind == "constant":
                a1, a2 = 1.0, 1.0
            elif w.dim == 1:
                b = w.exponent
                a1 = float(_power_average_1d(c[0], r, b, family.rho_floor))
                a2 = float(_power_average_1d(c[0], r, b * sig, family.rho_floor))
            else:
                a1, a2 = _power_averages_nd(c, r, (1.0, sig), w.exponent, w.dim,
                                            family.resolution, family.rho_floor)
            if w.kind != "tabulated":
                a1 *= w.scale
                a2 *= w.scale ** sig
            out[i, j] = a1 * a2 ** (p - 1)
    return out


def ap_characteristic(w: WeightSpec, family: BallFamily) -> float:
    """Sampled lower estimate of [w]_{A_p}: max of A_p products over the family."""
    return float(ap_products(w, family).max())


def tabulated_member(w: WeightSpec, family: BallFamily, max_growth: float = 0.05) -> bool:
    """Sampled A_p membership of a tabulated weight.

    Outside A_p the products are unbounded near a singularity.  A table cuts the
    singularity off at its spacing h, so the blow-up shows as growth like (r/h)^k
    in the radius; the test fits the log-log trend of the per-radius maximum over
    radii at least 32 table cells wide.
    """
    cell = 2 * w.table_extent / max(w.table.shape)
    radii = family.radii[family.radii >= 32 * cell]
    if radii.size < 3:
        raise InputError("the ball family needs at least 3 radii above 32 table cells")
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        prod = ap_products(w, BallFamily(family.centers, family.radii, family.resolution, family.rho_floor))
    per_radius = prod.max(axis=0)[family.radii >= 32 * cell]
    if not np.all(np.isfinite(per_radius)):
        return False
    slope = np.polyfit(np.log(radii), np.log(per_radius), 1)[0]
    return bool(slope <= max_growth)


def regularity_constant(w: WeightSpec, family: BallFamily | None = None,
                        max_growth: float = 0.05, tol: float = 1e-4) -> float:
    """R = sup{p0 in (1, 2] : w in A_{p/p0}} (closed forms for power weights, bisection for tables)."""
    if w.kind == "product_power":
        raise CapabilityError("use components() for product weights")
    w.require_admissible()
    p = w.p
    if w.kind == "constant":
        R = min(2.0, p)
    elif w.kind == "tabulated":
        family = family or BallFamily.default(w.dim)

        def member(p0):
            return p / p0 > 1 and tabulated_member(w.with_p(p / p0), family, max_growth)

        lo, hi = 1.0, 2.0
        if member(hi - 1e-9):
            R = hi
        else:
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                lo, hi = (mid, hi) if member(mid) else (lo, mid)
            R = lo
    else:
        D, b = w.dim, w.exponent
        R = min(2.0, p * D / (b + D)) if b + D > 0 else 2.0
    if R <= 1:
        raise AdmissibilityError(f"regularity constant {R} <= 1 is inconsistent with admissibility")
    return float(R)


def strict_p0(w: WeightSpec) -> float:
    """A p0 strictly inside (1, R) with the same smoothness floor."""
    return regularity_constant(w) - P0_DELTA


def _floor(x: float) -> int:
    return int(math.floor(x + 1e-12))


def required_smoothness_order(d: int, w: WeightSpec | None = None,
                              w1: WeightSpec | None = None, w2: WeightSpec | None = None) -> int:
    """floor(d/R)+2 for a space-time weight, or the max of the two floors + 2 for mixed weights."""
    if w is not None:
        if w.kind == "product_power":
            w1, w2 = w.components()
        else:
            if w.kind not in ("constant", "tabulated") and w.dim != d + 1:
                raise InputError("a space-time weight must have dim = d + 1")
            return _floor(d / regularity_constant(w)) + 2
    if w1 is None or w2 is None:
        raise InputError("give either a space-time weight or a (time, space) pair")
    if w1.dim != 1 or (w2.kind not in ("constant", "tabulated") and w2.dim != d):
        raise InputError("mixed weights need w1 on R and w2 on R^d")
    return max(_floor(d / regularity_constant(w1)), _floor(d / regularity_constant(w2))) + 2


def displayed_order_spacetime(d: int, p: float, alpha: float) -> int:
    """Closed form floor(d(alpha+d+1)/(p(d+1)))+2 for (t^2+|x|^2)^(alpha/2)."""
    return _floor(d * (alpha + d + 1) / (p * (d + 1))) + 2


def displayed_order_mixed(d: int, q: float, p: float, alpha1: float, alpha2: float) -> int:
    """Closed form floor(d(alpha1+1)/q) v floor((alpha2+d)/p) + 2 for t^alpha1 |x|^alpha2."""
    return max(_floor(d * (alpha1 + 1) / q), _floor((alpha2 + d) / p)) + 2


def displayed_order_constant(d: int) -> int:
    return d // 2 + 2


def _slice_average_1d(t, c, r, e):
    f = lambda x: (t * t + x * x) ** (e / 2)
    pts = [0.0] if c - r < 0 < c + r else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(f, c - r, c + r, points=pts, limit=200, epsabs=0.0, epsrel=1e-10)
    return val / (2 * r)


def slice_ap_products(alpha: float, p: float, d: int, family: BallFamily, t: float) -> np.ndarray:
    """A_p products of x -> (t^2 + |x|^2)^(alpha/2) over the family (shape centers x radii)."""
    sig = -1.0 / (p - 1)
    out = np.empty((len(family.centers), len(family.radii)))
    for i, c in enumerate(family.centers):
        for j, r in enumerate(family.radii):
            if alpha == 0:
                out[i, j] = 1.0
                continue
            if d == 1:
                a1 = _slice_average_1d(t, c[0], r, alpha)
                a2 = _slice_average_1d(t, c[0], r, alpha * sig)
            else:
                pts, _ = _cell_average_grid(c, r, family.resolution, d)
                base = t * t + np.sum(pts ** 2, axis=-1)
                a1 = float(np.mean(base ** (alpha / 2)))
                a2 = float(np.mean(base ** (alpha * sig / 2)))
            out[i, j] = a1 * a2 ** (p - 1)
    return out


def slice_uniform_ap_check(alpha: float, p: float, d: int, family: BallFamily, time_samples,
                           stable_factor: float = 4.0, max_growth: float = 0.15) -> EstimateReport:
    """Per-time A_p characteristics of the spatial slices of (t^2+|x|^2)^(alpha/2)."""
    rep = EstimateReport("weights_audit", metadata={"check": "slice_uniform_ap", "alpha": alpha, "p": p, "d": d})
    times = np.sort(np.asarray(time_samples, dtype=float))
    maxima = []
    for t in times:
        prod = slice_ap_products(alpha, p, d, family, t)
        maxima.append(float(prod.max()))
        rep.add(ReportRow(f"t={t:g}", {"t": float(t), "alpha": alpha, "p": p, "d": d}, maxima[-1],
                          verdict="info", operation="slice_uniform_ap_check",
                          reference="[w(t,.)]_{A_p(R^d)} for w=(t^2+|x|^2)^{alpha/2}"))
    maxima = np.array(maxima)
    spread = float(maxima.max() / maxima.min())
    # growth per decade of t at the small-t end; a bounded family levels off there
    trend = 0.0
    if times.size > 1:
        trend = float(np.log(maxima[0] / maxima[1]) / np.log10(times[1] / times[0]))
    bounded = bool(np.all(np.isfinite(maxima)) and spread <= stable_factor and trend <= max_growth)
    rep.add(ReportRow("uniform", {"alpha": alpha, "p": p, "d": d, "times": times.tolist()},
                      float(maxima.max()), slope=trend, verdict="pass" if bounded else "fail",
                      operation="slice_uniform_ap_check", tolerance=stable_factor,
                      reference="esssup_t [w(t,.)]_{A_p(R^d)} < inf",
                      note=f"max/min over t = {spread:.4g}; " + ("bounded" if bounded else "unbounded growth")))
    rep.metadata["bounded"] = bounded
    return rep
