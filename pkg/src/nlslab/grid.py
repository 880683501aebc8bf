"""Periodic spectral grids, wave fields, densities, and conserved quantities.

The computational box is [-L, L)^d with N points per axis and spacing
h = 2L/N.  All integrals use the rectangle rule, which is spectrally
accurate for smooth periodic integrands on this lattice.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import BlowUpError, GridError, NormalizationError, ResolutionError


class Model(Enum):
    """Which evolution equation a field belongs to."""

    DIRECT = "direct"                  # i u_t + (1/2) Lap u = |u|^{2 sigma} u
    RESCALED = "rescaled"              # nonlinearity (|u|^{2 sigma} - 1) u / sigma
    LOG = "log"                        # nonlinearity u ln|u|^2
    RESCALED_LENS = "rescaled-lens"    # rescaled family in lens variables (tau_sigma envelope)
    DIRECT_LENS = "direct-lens"        # direct equation in lens variables (sqrt(1+t^2) envelope)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice with matched physical and frequency axes."""

    dim: int
    n: int
    half_length: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise GridError(f"dim must be 1 or 2, got {self.dim}")
        n = self.n
        if n < 8 or (n & (n - 1)) != 0:
            raise GridError(f"N must be a power of two >= 8, got {n}")
        if not (self.half_length > 0):
            raise GridError(f"half-length must be positive, got {self.half_length}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def shape(self):
        return (self.n,) * self.dim

    @cached_property
    def x(self) -> np.ndarray:
        """Physical axis, x_j = -L + j h."""
        return _frozen(-self.half_length + self.spacing * np.arange(self.n))

    @cached_property
    def k(self) -> np.ndarray:
        """Frequency axis (pi/L) * m for m in {-N/2..N/2-1}, FFT ordering."""
        m = np.fft.fftfreq(self.n, d=1.0 / self.n)
        return _frozen((np.pi / self.half_length) * m)

    @cached_property
    def coords(self):
        """Per-axis coordinate meshes (broadcastable)."""
        if self.dim == 1:
            return (self.x,)
        return tuple(np.meshgrid(self.x, self.x, indexing="ij", sparse=True))

    @cached_property
    def radius_sq(self) -> np.ndarray:
        r2 = sum(c**2 for c in self.coords)
        return _frozen(np.broadcast_to(r2, self.shape).copy())

    @cached_property
    def k_sq(self) -> np.ndarray:
        if self.dim == 1:
            return _frozen(self.k**2)
        kx, ky = np.meshgrid(self.k, self.k, indexing="ij", sparse=True)
        return _frozen(np.broadcast_to(kx**2 + ky**2, self.shape).copy())

    def integrate(self, values: np.ndarray) -> float | complex:
        return self.cell_volume * values.sum()

    def fft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.fftn(values)

    def ifft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(values)

    def gradient(self, values: np.ndarray):
        """Spectral gradient, one array per axis."""
        vhat = self.fft(values)
        if self.dim == 1:
            return (self.ifft(1j * self.k * vhat),)
        kx, ky = np.meshgrid(self.k, self.k, indexing="ij", sparse=True)
        return (self.ifft(1j * kx * vhat), self.ifft(1j * ky * vhat))


def make_grid(dim: int, n: int, half_length: float) -> Grid:
    """Build a periodic grid; rejects non-power-of-two N and unsupported dim."""
    return Grid(dim=dim, n=int(n), half_length=float(half_length))


@dataclass(frozen=True)
class WaveField:
    """Complex state on a grid, stamped with time and model parameters."""

    grid: Grid
    values: np.ndarray
    time: float
    sigma: float
    model: Model

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != self.grid.shape:
            raise GridError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not np.isfinite(v.real.sum()) or not np.isfinite(v.imag.sum()):
            raise BlowUpError("non-finite field values", time=self.time)
        if self.sigma < 0:
            raise GridError(f"sigma must be >= 0, got {self.sigma}")
        object.__setattr__(self, "values", _frozen(v))

    def with_values(self, values, time=None) -> "WaveField":
        return WaveField(self.grid, values, self.time if time is None else time,
                         self.sigma, self.model)

    def with_tags(self, sigma=None, model=None, time=None) -> "WaveField":
        return WaveField(self.grid, self.values,
                         self.time if time is None else time,
                         self.sigma if sigma is None else sigma,
                         self.model if model is None else model)


def gaussian_state(grid: Grid, width: float, center=0.0, phase_slope=0.0,
                   sigma: float = 1.0, model: Model = Model.DIRECT,
                   amplitude: float = 1.0) -> WaveField:
    """L2-normalized Gaussian exp(-|x-c|^2/(2 a^2) + i p.x), optionally rescaled.

    `amplitude` multiplies the normalized profile (mass = amplitude^2).
    """
    if not width > 0:
        raise GridError(f"width must be positive, got {width}")
    if width < 2.0 * grid.spacing:
        raise ResolutionError(
            f"width {width} under-resolved on spacing {grid.spacing}: "
            "fewer than 8 points sample the bump")
    center = np.broadcast_to(np.atleast_1d(np.asarray(center, dtype=float)), (grid.dim,))
    slope = np.broadcast_to(np.atleast_1d(np.asarray(phase_slope, dtype=float)), (grid.dim,))
    if np.any(np.abs(center) >= grid.half_length):
        raise GridError("center outside box")
    arg = np.zeros(grid.shape, dtype=np.complex128)
    for c, p, mesh in zip(center, slope, grid.coords):
        arg = arg - (mesh - c) ** 2 / (2.0 * width**2) + 1j * p * mesh
    values = np.exp(arg)
    norm = np.sqrt(grid.integrate(np.abs(values) ** 2).real)
    values *= amplitude / norm
    return WaveField(grid, values, time=0.0, sigma=sigma, model=model)


def mass(field: WaveField) -> float:
    """h^d sum |u|^2, conserved by every model's flow."""
    return float(field.grid.integrate(np.abs(field.values) ** 2).real)


def gradient_norm_sq(field: WaveField) -> float:
    """Spectral ||grad u||_{L2}^2 via Parseval."""
    g = field.grid
    uhat = g.fft(field.values)
    w = g.cell_volume / g.n**g.dim
    return float(w * (g.k_sq * np.abs(uhat) ** 2).sum())

def position_norm_sq(field: WaveField) -> float:
    """|| x u ||_{L2}^2 with grid-weighted coordinates."""
    g = field.grid
    return float(g.integrate(g.radius_sq * np.abs(field.values) ** 2).real)


def lp_norm(field: WaveField, p: float) -> float:
    g = field.grid
    return float(g.integrate(np.abs(field.values) ** p).real ** (1.0 / p))


def l2_distance(a: WaveField, b: WaveField) -> float:
    return float(np.sqrt(a.grid.integrate(np.abs(a.values - b.values) ** 2).real))


def _potential_density(rho: np.ndarray, sigma: float, model: Model,
                       log_floor: float = 1e-300) -> np.ndarray:
    """Potential-energy integrand G(rho) with G'(rho) the nonlinear multiplier."""
    if model is Model.DIRECT or model is Model.DIRECT_LENS:
        return rho ** (sigma + 1.0) / (sigma + 1.0)
    if model is Model.LOG or sigma == 0.0:
        return rho * (np.log(rho + log_floor) - 1.0)
    # rescaled family: G(rho) = (rho^{s+1} - (s+1) rho) / (s (s+1)), vacuum = 0
    return (rho ** (sigma + 1.0) - (sigma + 1.0) * rho) / (sigma * (sigma + 1.0))


def energy(field: WaveField, log_floor: float = 1e-300) -> float:
    """Conserved energy of the field's model (lens models: frozen tau = 1).

    Kinetic part is spectral; the potential part is quadrature of the
    antiderivative of the nonlinear multiplier, fixed so the vacuum has
    zero energy.
    """
    g = field.grid
    rho = np.abs(field.values) ** 2
    kin = 0.5 * gradient_norm_sq(field)
    pot = float(g.integrate(_potential_density(rho, field.sigma, field.model, log_floor)).real)
    if field.model is Model.RESCALED_LENS:
        return kin + 0.25 * position_norm_sq(field) + pot
    if field.model is Model.DIRECT_LENS:
        return kin + 0.5 * position_norm_sq(field) + pot
    return kin + pot


def edge_density(field: WaveField) -> float:
    """Max |u|^2 over the outermost cells of the box."""
    rho = np.abs(field.values) ** 2
    if field.grid.dim == 1:
        return float(max(rho[0], rho[-1]))
    return float(max(rho[0, :].max(), rho[-1, :].max(), rho[:, 0].max(), rho[:, -1].max()))


@dataclass(frozen=True)
class Density:
    """Nonnegative grid function integrating to one."""

    grid: Grid
    values: np.ndarray
    raw_integral: float  # measured integral before renormalization

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(np.asarray(self.values, dtype=float)))

    @classmethod
    def normalize(cls, grid: Grid, values: np.ndarray) -> "Density":
        values = np.asarray(values, dtype=float)
        if values.min() < -1e-12:
            raise NormalizationError(f"negative density values (min {values.min():.3e})")
        values = np.clip(values, 0.0, None)
        total = float(grid.integrate(values))
        if total <= 0:
            raise NormalizationError("cannot normalize a zero density")
        return cls(grid, values / total, raw_integral=total)

    def integral(self) -> float:
        return float(self.grid.integrate(self.values))
