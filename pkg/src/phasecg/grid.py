"""Periodic phase-space grids, quadrature and spectral kernels.

The position window ``[z_min, z_min + length_z)`` is sampled with ``n_z``
points.  The conjugate separation ``r`` uses spacing ``dr = 2*dz`` so that
``x = z + r/2`` and ``y = z - r/2`` are fine-lattice sites, and the momentum
grid is its discrete Fourier dual, ``dp = 2*pi / (n_p * dr)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

Axes = Literal["zp", "zr", "xy"]

TWO_PI = 2.0 * np.pi


class ConfigurationError(ValueError):
    """Raised when grid or state parameters violate a hard constraint."""


def _is_pow2(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    n_z: int
    n_p: int
    z_min: float
    length_z: float

    def __post_init__(self):
        if not _is_pow2(self.n_z):
            raise ConfigurationError(f"n_z={self.n_z} must be a power of two")
        if not _is_pow2(self.n_p):
            raise ConfigurationError(f"n_p={self.n_p} must be a power of two")
        if self.n_z < 4:
            raise ConfigurationError("n_z must be at least 4")
        if self.n_p != self.n_z // 2:
            raise ConfigurationError(
                f"n_p={self.n_p} must equal n_z/2={self.n_z // 2} "
                "(pair map (z,r)->(x,y) is a bijection only then)")
        if not self.length_z > 0:
            raise ConfigurationError("length_z must be positive")

    @classmethod
    def centered(cls, n_z: int, length_z: float) -> "GridSpec":
        return cls(n_z, n_z // 2, -0.5 * length_z, length_z)

    @property
    def dz(self) -> float:
        return self.length_z / self.n_z

    @property
    def dr(self) -> float:
        return 2.0 * self.dz

    @property
    def dp(self) -> float:
        return TWO_PI / (self.n_p * self.dr)

    @property
    def z(self) -> np.ndarray:
        return self.z_min + self.dz * np.arange(self.n_z)

    @property
    def p(self) -> np.ndarray:
        return (np.arange(self.n_p) - self.n_p // 2) * self.dp

    @property
    def r(self) -> np.ndarray:
        return (np.arange(self.n_p) - self.n_p // 2) * self.dr

    @property
    def kz(self) -> np.ndarray:
        """Angular wavenumbers of the z-FFT (numpy ordering)."""
        return TWO_PI * np.fft.fftfreq(self.n_z, self.dz)

    def mesh(self, axes: Axes = "zp"):
        second = self.p if axes == "zp" else self.r
        return np.meshgrid(self.z, second, indexing="ij")

    def weight(self, axes: Axes) -> float:
        if axes == "zp":
            return self.dz * self.dp / TWO_PI
        return self.dz * self.dr


@dataclass(frozen=True)
class Field2D:
    grid: GridSpec
    values: np.ndarray
    axes: Axes = "zp"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.axes not in ("zp", "zr", "xy"):
            raise ValueError(f"unknown axis tag {self.axes!r}")
        shape = (self.grid.n_z, self.grid.n_p)
        if np.shape(self.values) != shape:
            raise ValueError(f"field shape {np.shape(self.values)} != {shape}")

    def with_values(self, values, axes: Axes | None = None) -> "Field2D":
        return Field2D(self.grid, values, axes or self.axes)


def integrate(f: Field2D) -> complex:
    """Quadrature of ``f`` with the measure implied by its axis tag."""
    total = np.sum(f.values) * f.grid.weight(f.axes)
    if np.iscomplexobj(total) and total.imag == 0:
        return float(total.real)
    return total


def boundary_mass(f: Field2D, edge: int = 2) -> float:
    """Fraction of integrate(|f|^2) lying within ``edge`` cells of the z-edges."""
    a = np.abs(f.values) ** 2
    tot = a.sum()
    if tot == 0:
        return 0.0
    return float((a[:edge].sum() + a[-edge:].sum()) / tot)


def check_boundary(f: Field2D, tol: float = 1e-10, what: str = "field") -> float:
    mass = boundary_mass(f)
    if mass > tol:
        warnings.warn(f"{what}: boundary mass {mass:.3g} exceeds {tol:g}; "
                      "periodic wrap may contaminate results", RuntimeWarning)
    return mass


def _axis_index(axis: str) -> int:
    if axis in ("z", "x", 0):
        return 0
    if axis in ("p", "r", "y", 1):
        return 1
    raise ValueError(f"unknown axis {axis!r}")


def _wavenumbers(grid: GridSpec, axis: int, axes: Axes) -> np.ndarray:
    if axis == 0:
        return grid.kz
    step = grid.dp if axes == "zp" else grid.dr
    return TWO_PI * np.fft.fftfreq(grid.n_p, step)


def spectral_derivative(f: Field2D, axis="z", order: int = 1) -> Field2D:
    """``order``-th derivative along ``axis`` by Fourier multiplication."""
    if order < 1:
        raise ValueError("order must be >= 1")
    ax = _axis_index(axis)
    k = _wavenumbers(f.grid, ax, f.axes)
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult[len(k) // 2] = 0.0
    shape = (-1, 1) if ax == 0 else (1, -1)
    out = np.fft.ifft(np.fft.fft(f.values, axis=ax) * mult.reshape(shape), axis=ax)
    if np.isrealobj(f.values):
        out = out.real
    return f.with_values(out)


def spectral_tail_fraction(f: Field2D, axis="z", frac: float = 0.25) -> float:
    """Spectral power fraction in the top ``frac`` of |k| along ``axis``."""
    ax = _axis_index(axis)
    k = np.abs(_wavenumbers(f.grid, ax, f.axes))
    power = np.abs(np.fft.fft(f.values, axis=ax)) ** 2
    power = power.sum(axis=1 - ax)
    tail = k >= (1.0 - frac) * k.max()
    tot = power.sum()
    return float(power[tail].sum() / tot) if tot > 0 else 0.0


def fourier_p_to_r(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """sum_p exp(+i p r) f(p) dp/2pi along axis 1 (centered grids)."""
    n = grid.n_p
    out = np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(values, axes=1), axis=1), axes=1)
    return out * (n * grid.dp / TWO_PI)


def fourier_r_to_p(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """sum_r exp(-i p r) f(r) dr along axis 1 (centered grids)."""
    out = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(values, axes=1), axis=1), axes=1)
    return out * grid.dr


def axis_fourier(f: Field2D, axis="p", direction: str = "forward") -> Field2D:
    """One-axis transform between the momentum and separation representations.

    ``forward`` maps (z,p) -> (z,r) with kernel exp(+ipr) and weight dp/2pi;
    ``inverse`` maps (z,r) -> (z,p) with kernel exp(-ipr) and weight dr.
    """
    if _axis_index(axis) != 1:
        raise ValueError("axis_fourier acts on the momentum/separation axis only")
    if direction == "forward":
        if f.axes != "zp":
            raise ValueError(f"forward transform needs a (z,p) field, got {f.axes}")
        return Field2D(f.grid, fourier_p_to_r(f.values, f.grid), "zr")
    if direction == "inverse":
        if f.axes not in ("zr", "xy"):
            raise ValueError(f"inverse transform needs a (z,r) field, got {f.axes}")
        return Field2D(f.grid, fourier_r_to_p(f.values, f.grid), "zp")
    raise ValueError(f"direction must be 'forward' or 'inverse', not {direction!r}")


def pair_indices(grid: GridSpec):
    """Index tables linking the (z,r) grid with fine-lattice pairs.

    Returns ``(x_idx, y_idx)`` of shape (n_z, n_p): site indices of
    ``x = z + r/2`` and ``y = z - r/2`` for every (z_j, r_b).
    """
    j = np.arange(grid.n_z)[:, None]
    b = np.arange(grid.n_p)[None, :] - grid.n_p // 2
    return (j + b) % grid.n_z, (j - b) % grid.n_z


def block_indices(grid: GridSpec):
    """For each parity block, the (z,r) indices of every (x_i, y_m) pair.

    Returns a list of two ``(j_idx, b_idx)`` arrays of shape (n_z/2, n_z/2);
    block ``par`` covers fine sites ``par, par+2, ...``.
    """
    n = grid.n_z
    half = n // 2
    i = np.arange(half)
    out = []
    for par in (0, 1):
        d = i[:, None] - i[None, :]
        b = (d + grid.n_p // 2) % grid.n_p - grid.n_p // 2
        x = par + 2 * i[:, None]
        j = (x - b) % n
        out.append((j, b + grid.n_p // 2))
    return out
