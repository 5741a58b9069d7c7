"""Weighted and mixed norms on grids, and the Bessel-potential norm equivalence check."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import AdmissibilityError, InputError
from .grid import Field, SpacetimeGrid
from .report import EstimateReport, ReportRow
from .solver import bessel_potential, fractional_laplacian
from .weights import WeightSpec

FLAVORS = ("lp", "mixed", "bessel")


@dataclass(frozen=True)
class NormSpec:
    flavor: str
    p: float
    w: WeightSpec | None = None
    q: float | None = None
    w1: WeightSpec | None = None
    w2: WeightSpec | None = None
    nu: float = 0.0
    strict: bool = True

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise InputError(f"unknown norm flavor {self.flavor!r}")
        if not self.p > 1:
            raise InputError("p must lie in (1, inf)")
        if self.flavor == "mixed" and not (self.q and self.q > 1):
            raise InputError("mixed norms need q in (1, inf)")
        for w in (self.w, self.w1, self.w2):
            if self.strict and w is not None and not w.admissible():
                raise AdmissibilityError(f"weight {w.to_dict()} is not admissible")

    @classmethod
    def lp(cls, p: float, w: WeightSpec | None = None, strict: bool = True) -> "NormSpec":
        return cls("lp", p, w=w, strict=strict)

    @classmethod
    def mixed(cls, q: float, p: float, w1: WeightSpec | None = None, w2: WeightSpec | None = None) -> "NormSpec":
        return cls("mixed", p, q=q, w1=w1, w2=w2)

    @classmethod
    def bessel(cls, p: float, nu: float, w: WeightSpec | None = None) -> "NormSpec":
        return cls("bessel", p, w=w, nu=nu)

    def to_dict(self) -> dict:
        out = {"flavor": self.flavor, "p": self.p}
        for key in ("w", "w1", "w2"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key).to_dict()
        if self.q is not None:
            out["q"] = self.q
        if self.flavor == "bessel":
            out["nu"] = self.nu
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "NormSpec":
        ws = {k: WeightSpec.from_dict(data[k]) for k in ("w", "w1", "w2") if data.get(k)}
        return cls(data["flavor"], float(data["p"]), q=data.get("q"), nu=float(data.get("nu", 0.0)), **ws)


def time_quadrature(grid: SpacetimeGrid) -> np.ndarray:
    """Trapezoid weights on t_0..t_Nt (endpoints get dt/2)."""
    tau = np.full(grid.Nt + 1, grid.dt)
    tau[0] = tau[-1] = grid.dt / 2
    return tau


def _power_average_1d(b: float, lo: float, hi: float) -> float:
    F = lambda x: np.sign(x) * abs(x) ** (b + 1) / (b + 1)
    return float((F(hi) - F(lo)) / (hi - lo))


def _cell_average(w: WeightSpec, lo: np.ndarray, hi: np.ndarray) -> float:
    """Exact average of w over the box [lo, hi] (used for cells touching a singularity)."""
    D = lo.size
    if w.kind in ("power_space", "power_time") and D == 1:
        return w.scale * _power_average_1d(w.exponent, lo[0], hi[0])
    if w.kind == "product_power" and D == 2:
        return w.scale * _power_average_1d(w.alpha1, lo[0], hi[0]) * _power_average_1d(w.alpha2, lo[1], hi[1])
    vol = float(np.prod(hi - lo))
    fn = lambda *z: float(w.evaluate(np.array(z[::-1])))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.nquad(fn, [(lo[i], hi[i]) for i in reversed(range(D))],
                                 opts={"limit": 100, "epsrel": 1e-10, "epsabs": 0.0})
    return val / vol


def _singular_nodes(points: np.ndarray, w: WeightSpec) -> np.ndarray:
    vals = w.evaluate(points)
    return ~np.isfinite(vals) | (vals == 0)


_WEIGHT_CACHE: dict = {}


def weight_on_grid(w: WeightSpec | None, grid: SpacetimeGrid, role: str = "auto") -> np.ndarray:
    """Node values of w, broadcastable to ``grid.shape``.

    ``role`` picks the variables: 'spacetime' (t, x), 'space' (x), 'time' (t).
    Nodes where w vanishes or blows up get the exact average over their cell.
    Results are cached per (weight, grid, role); treat them as read-only.
    """
    if w is None or w.kind == "constant":
        return np.ones((1,) * (grid.d + 1)) * (w.scale if w is not None else 1.0)
    if w.kind == "tabulated":
        return _weight_on_grid(w, grid, role)
    key = (json.dumps(w.to_dict(), sort_keys=True), grid, role)
    if key not in _WEIGHT_CACHE:
        vals = _weight_on_grid(w, grid, role)
        vals.flags.writeable = False
        _WEIGHT_CACHE[key] = vals
    return _WEIGHT_CACHE[key]


def _weight_on_grid(w: WeightSpec, grid: SpacetimeGrid, role: str) -> np.ndarray:
    if w.kind == "product_power" and role in ("auto", "spacetime"):
        # separable: each factor is regularised on its own axis
        w1, w2 = w.components()
        return w.scale * weight_on_grid(w1, grid, "time") * weight_on_grid(w2, grid, "space")
    if role == "auto":
        role = {"spacetime_power": "spacetime", "product_power": "spacetime",
                "power_time": "time"}.get(w.kind, "space" if w.dim == grid.d else "spacetime")
    half = np.array([grid.dt / 2] + [grid.dx / 2] * grid.d)
    if role == "time":
        pts = grid.t[:, None]
        h = half[:1]
        shape = (-1,) + (1,) * grid.d
    elif role == "space":
        pts = grid.X.reshape(-1, grid.d)
        h = half[1:]
        shape = (1,) + grid.spatial_shape
    elif role == "spacetime":
        T = np.broadcast_to(grid.t.reshape((-1,) + (1,) * grid.d), grid.shape)
        X = np.broadcast_to(grid.X, grid.shape + (grid.d,))
        pts = np.concatenate([T[..., None], X], axis=-1).reshape(-1, grid.d + 1)
        h = half
        shape = grid.shape
    else:
        raise InputError(f"unknown role {role!r}")
    if pts.shape[1] != w.dim:
        raise InputError(f"weight dim {w.dim} does not fit role {role!r} on a d={grid.d} grid")
    vals = w.evaluate(pts)
    bad = _singular_nodes(pts, w)
    for k in np.flatnonzero(bad):
        vals[k] = _cell_average(w, pts[k] - h, pts[k] + h)
    return vals.reshape(shape)


def _spatial_sum(values: np.ndarray, d: int) -> np.ndarray:
    return np.sum(values, axis=tuple(range(-d, 0)))


def weighted_norm(field: Field, spec: NormSpec) -> float:
    grid = field.grid
    f = field
    if spec.flavor == "bessel" and spec.nu:
        f = bessel_potential(field, spec.nu)
    a = np.abs(f.values)
    dv = grid.cell_volume
    if field.layout == "single-slice":
        w = weight_on_grid(spec.w2 if spec.flavor == "mixed" else spec.w, grid, "space")[0]
        return float((np.sum(a ** spec.p * w) * dv) ** (1 / spec.p))
    tau = time_quadrature(grid)
    if spec.flavor == "mixed":
        w1 = weight_on_grid(spec.w1, grid, "time").reshape(-1) * np.ones(grid.Nt + 1)
        w2 = weight_on_grid(spec.w2, grid, "space")
        inner = (_spatial_sum(a ** spec.p * w2, grid.d) * dv) ** (spec.q / spec.p)
        return float(np.sum(inner * w1 * tau) ** (1 / spec.q))
    w = weight_on_grid(spec.w, grid)
    inner = _spatial_sum(a ** spec.p * w, grid.d) * dv
    return float(np.sum(inner * tau) ** (1 / spec.p))


def norm_equivalence_check(fields: Sequence[Field], p: float, nu: float, w: WeightSpec | None = None,
                           refined: Sequence[Field] | None = None, drift_tol: float = 0.25,
                           spread_limit: float = 10.0) -> EstimateReport:
    """Ratios r(f) = ||(1-Delta)^(nu/2) f|| / (||f|| + ||(-Delta)^(nu/2) f||) in L_p(w)."""
    spec = NormSpec.lp(p, w)
    rep = EstimateReport("norm_equivalence", metadata={"p": p, "nu": nu, "weight": w.to_dict() if w else None})

    def ratios(family):
        out = []
        for f in family:
            top = weighted_norm(bessel_potential(f, nu), spec)
            bot = weighted_norm(f, spec) + weighted_norm(fractional_laplacian(f, nu), spec)
            if bot > 0:
                out.append(top / bot)
        return np.array(out)

    r = ratios(fields)
    spread = float(r.max() / r.min())
    verdict = "pass" if np.all(np.isfinite(r)) and spread <= spread_limit else "fail"
    if nu == 0:
        verdict = "pass" if np.all((r >= 0.5 - 1e-12) & (r <= 1 + 1e-12)) else "fail"
    rep.add(ReportRow("ratio_range", {"count": int(r.size)}, spread, verdict=verdict,
                      operation="norm_equivalence_check", tolerance=spread_limit,
                      reference="||(1-Delta)^{nu/2} f|| ~ ||f|| + ||(-Delta)^{nu/2} f||",
                      note=f"min={r.min():.6g} max={r.max():.6g}"))
    rep.metadata["ratios"] = r.tolist()
    if refined is not None:
        r2 = ratios(refined)
        spread2 = float(r2.max() / r2.min())
        drift = abs(spread2 / spread - 1)
        rep.add(ReportRow("refinement_drift", {"count": int(r2.size)}, drift,
                          verdict="pass" if drift <= drift_tol else "fail", tolerance=drift_tol,
                          operation="norm_equivalence_check",
                          reference="max r / min r stable under refinement",
                          note=f"spread {spread:.6g} -> {spread2:.6g}"))
    return rep
