"""Periodic space-time grids, fields on them, and seeded test data."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class SpacetimeGrid:
    """Torus ``[-L, L)^d`` with N points per axis times ``t_j = j*dt``, ``j = 0..Nt``."""

    d: int
    L: float
    N: int
    T: float
    Nt: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise InputError("d must be 1 or 2")
        if not (self.L > 0 and self.T > 0):
            raise InputError("L and T must be positive")
        if self.N < 2 or self.N & (self.N - 1):
            raise InputError("N must be a power of two")
        if self.Nt < 1:
            raise InputError("Nt must be positive")

    @property
    def dx(self) -> float:
        return 2 * self.L / self.N

    @property
    def dt(self) -> float:
        return self.T / self.Nt

    @property
    def cell_volume(self) -> float:
        return self.dx ** self.d

    @property
    def spatial_shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.Nt + 1,) + self.spatial_shape

    @cached_property
    def x(self) -> np.ndarray:
        """1D spatial axis; x = 0 sits at index N/2."""
        return -self.L + self.dx * np.arange(self.N)

    @cached_property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.Nt + 1)

    @cached_property
    def xi1(self) -> np.ndarray:
        """1D frequency axis in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.N, self.dx)

    @cached_property
    def X(self) -> np.ndarray:
        """Spatial points, shape (N,)*d + (d,)."""
        return np.stack(np.meshgrid(*([self.x] * self.d), indexing="ij"), axis=-1)

    @cached_property
    def XI(self) -> np.ndarray:
        """Frequency points in FFT order, shape (N,)*d + (d,)."""
        return np.stack(np.meshgrid(*([self.xi1] * self.d), indexing="ij"), axis=-1)

    @cached_property
    def abs_x(self) -> np.ndarray:
        return np.linalg.norm(self.X, axis=-1)

    @cached_property
    def abs_xi(self) -> np.ndarray:
        return np.linalg.norm(self.XI, axis=-1)

    @property
    def xi_max(self) -> float:
        return math.pi * self.N / (2 * self.L) * math.sqrt(self.d)

    def refined(self, space: int = 2, time: int = 2) -> "SpacetimeGrid":
        return SpacetimeGrid(self.d, self.L, self.N * space, self.T, self.Nt * time)

    def with_T(self, T: float, Nt: int | None = None) -> "SpacetimeGrid":
        return SpacetimeGrid(self.d, self.L, self.N, T, Nt if Nt is not None else self.Nt)

    def to_dict(self) -> dict:
        return {"d": self.d, "L": self.L, "N": self.N, "T": self.T, "Nt": self.Nt}

    @classmethod
    def from_dict(cls, data: dict) -> "SpacetimeGrid":
        return cls(int(data["d"]), float(data["L"]), int(data["N"]), float(data["T"]), int(data["Nt"]))


# spatial transforms over the trailing d axes
def fft_space(values: np.ndarray, d: int) -> np.ndarray:
    return np.fft.fftn(values, axes=tuple(range(-d, 0)))


def ifft_space(values: np.ndarray, d: int) -> np.ndarray:
    return np.fft.ifftn(values, axes=tuple(range(-d, 0)))


@dataclass
class Field:
    grid: SpacetimeGrid
    values: np.ndarray
    layout: str = "spacetime"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        expected = self.grid.shape if self.layout == "spacetime" else self.grid.spatial_shape
        if self.layout not in ("spacetime", "single-slice"):
            raise InputError(f"unknown layout {self.layout!r}")
        if self.values.shape != expected:
            raise InputError(f"field shape {self.values.shape} does not match grid {expected}")
        if not np.all(np.isfinite(self.values)):
            raise InputError("field values must be finite")

    @classmethod
    def zeros(cls, grid: SpacetimeGrid) -> "Field":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def from_function(cls, grid: SpacetimeGrid, fn) -> "Field":
        """``fn(t, X)`` with t of shape (Nt+1, 1, ...) and X of shape (N,)*d + (d,)."""
        t = grid.t.reshape((-1,) + (1,) * grid.d)
        return cls(grid, np.broadcast_to(fn(t, grid.X), grid.shape))

    def spectrum(self) -> np.ndarray:
        return fft_space(self.values, self.grid.d)

    def with_values(self, values) -> "Field":
        return Field(self.grid, values, self.layout)

    def __add__(self, other: "Field") -> "Field":
        return self.with_values(self.values + other.values)

    def __mul__(self, c) -> "Field":
        return self.with_values(self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class BandLimitedFamily:
    """Seeded continuous fields sum_k c_k(t) e^{i pi k.x / L} that resample on refined grids.

    ``kmax`` is an absolute mode cap (modes |k|_inf <= kmax), time profiles are
    smooth trigonometric sums on ``[0, T_profile]``.  Values are real.
    """

    seed: int
    kmax: int
    n_time_modes: int = 3
    T_profile: float = 1.0
    decay: float = 1.0

    def _coefficients(self, index: int, d: int):
        rng = np.random.default_rng([self.seed, index])
        ks = np.arange(-self.kmax, self.kmax + 1)
        shape = (len(ks),) * d
        kk = np.stack(np.meshgrid(*([ks] * d), indexing="ij"), axis=-1)
        amp = (rng.standard_normal(shape + (self.n_time_modes,))
               + 1j * rng.standard_normal(shape + (self.n_time_modes,)))
        amp /= (1.0 + np.linalg.norm(kk, axis=-1))[..., None] ** self.decay
        return kk, amp

    def sample(self, grid: SpacetimeGrid, index: int) -> Field:
        if 2 * self.kmax > grid.N // 2:
            raise InputError("kmax exceeds the N/4 band limit of the grid")
        kk, amp = self._coefficients(index, grid.d)
        phase = np.exp(1j * np.pi / grid.L * np.tensordot(grid.X, kk, axes=([-1], [-1])))
        m = np.arange(self.n_time_modes)
        prof = np.cos(np.pi * np.outer(grid.t, m) / self.T_profile + 0.3 * m)
        spatial = np.tensordot(phase, amp, axes=(list(range(grid.d, 2 * grid.d)), list(range(grid.d))))
        vals = np.tensordot(prof, np.moveaxis(spatial, -1, 0), axes=([1], [0]))
        return Field(grid, vals.real)

    def fields(self, grid: SpacetimeGrid, count: int) -> list[Field]:
        return [self.sample(grid, i) for i in range(count)]


def bump_field(grid: SpacetimeGrid, seed: int, n_bumps: int = 3, width: tuple[float, float] = (0.5, 2.0),
               center_box: float | None = None) -> Field:
    """Sum of seeded Gaussian space-time bumps (localized, smooth, real)."""
    rng = np.random.default_rng(seed)
    box = center_box if center_box is not None else grid.L / 2
    vals = np.zeros(grid.shape)
    t = grid.t.reshape((-1,) + (1,) * grid.d)
    for _ in range(n_bumps):
        c = rng.uniform(-box, box, grid.d)
        tc = rng.uniform(0.2, 0.8) * grid.T
        w = rng.uniform(*width)
        tw = rng.uniform(0.1, 0.3) * grid.T
        a = rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
        r2 = np.sum((grid.X - c) ** 2, axis=-1)
        vals = vals + a * np.exp(-r2 / w ** 2)[None] * np.exp(-((t - tc) / tw) ** 2)
    return Field(grid, vals)
