"""Time-measurable symbols psi(t, xi) and sampled certification of their structural bounds.

Every built-in symbol factors as ``psi(t, xi) = c(t) * base(xi)`` with a
piecewise-constant complex coefficient ``c`` and a homogeneous base
``base(xi) = -(sum_i w_i xi_i^2)^(gamma/2)``.  The factorisation makes the time
integral of ``psi`` exact and gives closed-form xi-derivatives of any order.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import CapabilityError, DomainError, InputError

KINDS = ("fractional_laplacian", "time_modulated", "anisotropic_power", "complex_shift")


@dataclass(frozen=True)
class PiecewiseConstantTrack:
    """Right-continuous step function on ``[breakpoints[0], breakpoints[-1]]``.

    Outside that interval the first/last value is extended as a constant.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise InputError("a track needs at least two breakpoints")
        if vals.size != bp.size - 1:
            raise InputError("a track needs exactly one value per interval")
        if not np.all(np.isfinite(bp)) or not np.all(np.isfinite(vals)):
            raise InputError("track breakpoints and values must be finite")
        if bp[0] != 0.0:
            raise InputError("the first breakpoint must be 0")
        if np.any(np.diff(bp) <= 0):
            raise InputError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in bp))
        object.__setattr__(self, "values", tuple(float(v) for v in vals))

    @classmethod
    def constant(cls, value: float, T: float) -> "PiecewiseConstantTrack":
        return cls((0.0, float(T)), (float(value),))

    @classmethod
    def random(cls, T: float, n_intervals: int, low: float, high: float,
               seed: int, step: float | None = None) -> "PiecewiseConstantTrack":
        """Seeded random track; interior breakpoints snap to multiples of ``step``."""
        rng = np.random.default_rng(seed)
        if step is None:
            inner = np.sort(rng.uniform(0.0, T, n_intervals - 1))
        else:
            n_slots = int(round(T / step))
            if n_slots < n_intervals:
                raise InputError("step too coarse for the requested number of intervals")
            slots = np.sort(rng.choice(np.arange(1, n_slots), n_intervals - 1, replace=False))
            inner = slots * step
        values = rng.uniform(low, high, n_intervals)
        return cls(tuple([0.0, *inner.tolist(), float(T)]), tuple(values.tolist()))

    @property
    def T(self) -> float:
        return self.breakpoints[-1]

    def value_at(self, t):
        bp = np.asarray(self.breakpoints)
        vals = np.asarray(self.values)
        idx = np.searchsorted(bp, np.asarray(t, dtype=float), side="right") - 1
        return vals[np.clip(idx, 0, vals.size - 1)]

    def antiderivative(self, t):
        """``int_0^t value(r) dr`` with constant extension outside the track."""
        t = np.asarray(t, dtype=float)
        bp = np.asarray(self.breakpoints)
        vals = np.asarray(self.values)
        cum = np.concatenate([[0.0], np.cumsum(vals * np.diff(bp))])
        idx = np.clip(np.searchsorted(bp, t, side="right") - 1, 0, vals.size - 1)
        return cum[idx] + vals[idx] * (t - bp[idx])

    def integral(self, s: float, t: float) -> float:
        """Exact ``int_s^t value(r) dr`` as a sum of value x overlap length."""
        bp = np.asarray(self.breakpoints)
        lo = np.concatenate([[-np.inf], bp[1:-1]])
        hi = np.concatenate([bp[1:-1], [np.inf]])
        overlap = np.clip(np.minimum(hi, t) - np.maximum(lo, s), 0.0, None)
        return float(np.dot(overlap, self.values))

    def interval_midpoints(self) -> np.ndarray:
        bp = np.asarray(self.breakpoints)
        return 0.5 * (bp[:-1] + bp[1:])

    def is_aligned(self, dt: float, rtol: float = 1e-9) -> bool:
        q = np.asarray(self.breakpoints) / dt
        return bool(np.all(np.abs(q - np.round(q)) <= rtol * np.maximum(1.0, np.abs(q))))

    def to_dict(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "values": list(self.values)}


def multi_indices(d: int, order: int) -> Iterator[tuple[int, ...]]:
    """All d-dimensional multi-indices with ``|alpha| == order``."""
    for combo in itertools.combinations_with_replacement(range(d), order):
        alpha = [0] * d
        for i in combo:
            alpha[i] += 1
        yield tuple(alpha)


def _falling(s: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= s - i
    return out


@dataclass(frozen=True)
class Symbol:
    kind: str
    gamma: float
    track: PiecewiseConstantTrack | None = None
    direction_weights: tuple[float, ...] | None = None
    max_derivative_order: int = 6
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown symbol kind {self.kind!r}")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise InputError("gamma must be a positive finite number")
        if self.kind in ("time_modulated", "complex_shift") and self.track is None:
            raise InputError(f"{self.kind} needs a coefficient track")
        if self.kind == "time_modulated" and min(self.track.values) <= 0:
            raise InputError("time-modulated coefficients must stay positive")
        if self.kind == "anisotropic_power":
            if not self.direction_weights or min(self.direction_weights) <= 0:
                raise InputError("anisotropic_power needs positive direction weights")
            object.__setattr__(self, "direction_weights",
                               tuple(float(w) for w in self.direction_weights))

    # -- constructors -------------------------------------------------------
    @classmethod
    def fractional_laplacian(cls, gamma: float) -> "Symbol":
        return cls("fractional_laplacian", gamma)

    @classmethod
    def time_modulated(cls, gamma: float, track: PiecewiseConstantTrack, **kw) -> "Symbol":
        return cls("time_modulated", gamma, track=track, **kw)

    @classmethod
    def complex_shift(cls, gamma: float, track: PiecewiseConstantTrack, **kw) -> "Symbol":
        return cls("complex_shift", gamma, track=track, **kw)

    @classmethod
    def anisotropic(cls, gamma: float, weights: Sequence[float]) -> "Symbol":
        return cls("anisotropic_power", gamma, direction_weights=tuple(weights))

    # -- coefficient c(t) ---------------------------------------------------
    @property
    def time_dependent(self) -> bool:
        return self.track is not None and len(set(self.track.values)) > 1

    @property
    def real_symmetric(self) -> bool:
        return self.kind != "complex_shift" or all(v == 0 for v in self.track.values)

    def coefficient(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "time_modulated":
            return self.track.value_at(t).astype(complex)
        if self.kind == "complex_shift":
            return 1.0 + 1j * self.track.value_at(t)
        return np.ones_like(t, dtype=complex)

    def coefficient_integral(self, s, t):
        """``int_s^t c(r) dr`` (exact; vectorised over s and t)."""
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        if self.kind == "time_modulated":
            return (self.track.antiderivative(t) - self.track.antiderivative(s)).astype(complex)
        if self.kind == "complex_shift":
            return (t - s) + 1j * (self.track.antiderivative(t) - self.track.antiderivative(s))
        return (t - s).astype(complex)

    # -- base(xi) -----------------------------------------------------------
    def _weights(self, d: int) -> np.ndarray:
        if self.direction_weights is None:
            return np.ones(d)
        if len(self.direction_weights) != d:
            raise InputError(f"symbol has {len(self.direction_weights)} direction weights, xi has dim {d}")
        return np.asarray(self.direction_weights)

    def quadratic_form(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return np.sum(self._weights(xi.shape[-1]) * xi ** 2, axis=-1)

    def base(self, xi) -> np.ndarray:
        """``-(sum_i w_i xi_i^2)^(gamma/2)``; ``xi`` has shape (..., d)."""
        xi = np.asarray(xi, dtype=float)
        if not np.all(np.isfinite(xi)):
            raise InputError("xi must be finite")
        return -self.quadratic_form(xi) ** (self.gamma / 2)

    def base_derivative(self, xi, alpha: Sequence[int]) -> np.ndarray:
        """Closed-form ``D^alpha base(xi)`` (Faa di Bruno on a diagonal quadratic)."""
        xi = np.asarray(xi, dtype=float)
        alpha = tuple(int(a) for a in alpha)
        d = xi.shape[-1]
        if len(alpha) != d:
            raise InputError("multi-index length must match the dimension of xi")
        order = sum(alpha)
        if order > self.max_derivative_order:
            raise CapabilityError(f"|alpha|={order} exceeds available order {self.max_derivative_order}")
        w = self._weights(d)
        s = self.gamma / 2
        q = self.quadratic_form(xi)
        at_origin = q == 0
        if np.any(at_origin) and self.gamma - order < 0:
            raise DomainError("derivative is singular at xi = 0 when gamma < |alpha|")
        q_safe = np.where(at_origin, 1.0, q)
        total = np.zeros(q.shape)
        origin_total = 0.0
        for js in itertools.product(*[range(a // 2 + 1) for a in alpha]):
            coef = 1.0
            poly = np.ones(q.shape)
            even = True
            for i, (a, j) in enumerate(zip(alpha, js)):
                m1 = a - 2 * j
                coef *= math.factorial(a) / (math.factorial(j) * math.factorial(m1)) * w[i] ** j
                if m1:
                    poly = poly * (2 * w[i] * xi[..., i]) ** m1
                    even = False
            k = order - sum(js)
            ff = _falling(s, k)
            if ff == 0.0:
                continue
            total = total + coef * ff * poly * q_safe ** (s - k)
            if even:
                # only the all-even term survives at xi = 0, scaled by 0^(s-k)
                origin_total += coef * ff * (1.0 if s - k == 0 else 0.0)
        return -np.where(at_origin, origin_total, total)

    # -- psi and its derivatives -------------------------------------------
    def eval(self, t, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if not np.all(np.isfinite(np.asarray(t, dtype=float))):
            raise InputError("t must be finite")
        return np.asarray(self.coefficient(t))[..., None] * self.base(xi)[None, ...] \
            if np.ndim(t) else self.coefficient(t) * self.base(xi)

    def eval_derivative(self, t, xi, alpha: Sequence[int]) -> np.ndarray:
        if not math.isfinite(float(t)):
            raise InputError("t must be finite")
        return self.coefficient(t) * self.base_derivative(xi, alpha)

    def time_integral(self, s: float, t: float, xi) -> np.ndarray:
        """``int_s^t psi(r, xi) dr``; exact for piecewise-constant coefficients."""
        if not (s < t):
            raise InputError("time integral needs s < t")
        return self.coefficient_integral(s, t) * self.base(xi)

    def ellipticity_constant(self) -> float:
        """Analytic kappa for the built-in kinds."""
        kappa = 1.0
        if self.kind == "time_modulated":
            kappa = min(self.track.values)
        if self.direction_weights is not None:
            kappa *= min(self.direction_weights) ** (self.gamma / 2)
        return kappa

    # -- serialisation ------------------------------------------------------
    def to_dict(self) -> dict:
        out = {"kind": self.kind, "gamma": self.gamma}
        if self.track is not None:
            out["track"] = self.track.to_dict()
        if self.direction_weights is not None:
            out["direction_weights"] = list(self.direction_weights)
        if self.seed is not None:
            out["seed"] = self.seed
        if self.max_derivative_order != 6:
            out["max_derivative_order"] = self.max_derivative_order
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Symbol":
        track = None
        raw = data.get("track")
        if raw is not None:
            if "random" in raw:
                spec = raw["random"]
                if "seed" not in data:
                    raise InputError("a random track needs a top-level seed")
                track = PiecewiseConstantTrack.random(
                    spec["T"], spec["n_intervals"], spec["low"], spec["high"],
                    seed=data["seed"], step=spec.get("step"))
            else:
                track = PiecewiseConstantTrack(tuple(raw["breakpoints"]), tuple(raw["values"]))
        weights = data.get("direction_weights")
        return cls(kind=data["kind"], gamma=float(data["gamma"]), track=track,
                   direction_weights=tuple(weights) if weights else None,
                   max_derivative_order=int(data.get("max_derivative_order", 6)),
                   seed=data.get("seed"))


@dataclass(frozen=True)
class SamplePlan:
    """Sampling grid for sup/inf certification: magnitudes x directions x times."""

    radii: np.ndarray
    directions: np.ndarray
    times: np.ndarray = field(default_factory=lambda: np.array([0.5]))

    @classmethod
    def default(cls, symbol: Symbol, d: int, n_radii: int = 41, n_directions: int = 16,
                n_times: int = 8, decades: tuple[float, float] = (-2.0, 2.0)) -> "SamplePlan":
        radii = np.logspace(decades[0], decades[1], n_radii)
        if d == 1:
            dirs = np.array([[1.0], [-1.0]])
        elif d == 2:
            theta = 2 * np.pi * np.arange(n_directions) / n_directions
            dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        else:
            raise InputError("sample plans are provided for d in {1, 2}")
        if symbol.track is None:
            times = (np.arange(n_times) + 0.5) / n_times
        else:
            bp = np.asarray(symbol.track.breakpoints)
            per = max(1, math.ceil(n_times / (bp.size - 1)))
            frac = (np.arange(per) + 0.5) / per
            times = (bp[:-1, None] + np.diff(bp)[:, None] * frac[None, :]).ravel()
        return cls(radii, dirs, times)

    def check(self, d: int):
        decades = math.log10(self.radii.max() / self.radii.min())
        if decades < 4 - 1e-9:
            raise InputError("sample plan must cover at least 4 decades of |xi|")
        if d >= 2 and len(self.directions) < 16:
            raise InputError("sample plan needs at least 16 directions for d >= 2")
        if len(self.times) < 8:
            raise InputError("sample plan needs at least 8 time samples")

    def points(self) -> np.ndarray:
        return (self.radii[:, None, None] * self.directions[None, :, :]).reshape(-1, self.directions.shape[1])


def ellipticity_margin(symbol: Symbol, plan: SamplePlan) -> float:
    """Sampled ``min Re[-psi(t, xi)] / |xi|^gamma``; <= 0 means the symbol is rejected."""
    d = plan.directions.shape[1]
    plan.check(d)
    pts = plan.points()
    mag = np.sum(pts ** 2, axis=-1) ** (symbol.gamma / 2)
    vals = np.real(-symbol.eval(plan.times, pts)) / mag[None, :]
    return float(vals.min())


def regular_upper_bound(symbol: Symbol, n: int, plan: SamplePlan) -> float:
    """Sampled ``max |D^alpha psi| |xi|^(|alpha| - gamma)`` over ``|alpha| <= n``."""
    if n > symbol.max_derivative_order:
        raise CapabilityError(f"n={n} exceeds available order {symbol.max_derivative_order}")
    d = plan.directions.shape[1]
    plan.check(d)
    pts = plan.points()
    mag = np.linalg.norm(pts, axis=-1)
    coeff = np.abs(symbol.coefficient(plan.times)).max()
    best = 0.0
    for order in range(n + 1):
        for alpha in multi_indices(d, order):
            vals = np.abs(symbol.base_derivative(pts, alpha)) * mag ** (order - symbol.gamma)
            best = max(best, float(vals.max()) * float(coeff))
    return best


def certify(symbol: Symbol, n: int, plan: SamplePlan) -> dict:
    """Ellipticity and n-times regular upper bound, labelled as sampled (not proven) bounds."""
    kappa = ellipticity_margin(symbol, plan)
    bound = regular_upper_bound(symbol, n, plan) if n <= symbol.max_derivative_order else math.inf
    return {
        "label": "sampled bound",
        "kappa": kappa,
        "elliptic": kappa > 0,
        "order": n,
        "M": bound,
        "regular": math.isfinite(bound),
        "ok": kappa > 0 and math.isfinite(bound),
    }
