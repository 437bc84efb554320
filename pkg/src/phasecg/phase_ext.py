"""Complex classical wave functions psi = sqrt(w) exp(i alpha)."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .evolution import PotentialSpec, _masked_log_terms, liouville_rhs
from .grid import Field2D, GridSpec, fourier_p_to_r, integrate, spectral_derivative
from .states import (ClassicalWaveFunction, InvalidStateError,
                     PositionBasisWaveFunction, WignerFunction)
from .transforms import _direct_fourfold, coarse_grain, quantum_transform_direct, wigner_of_density


@dataclass(frozen=True)
class PhasedClassicalWaveFunction:
    """Density w and phase alpha kept as separate real fields on (z, p)."""
    grid: GridSpec
    w: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        shape = (self.grid.n_z, self.grid.n_p)
        if np.shape(self.w) != shape or np.shape(self.alpha) != shape:
            raise ValueError("w and alpha must match the grid")
        if np.min(self.w) < -1e-12:
            raise InvalidStateError("w must be nonnegative")
        total = float(integrate(Field2D(self.grid, self.w, "zp")))
        if abs(total - 1.0) > 1e-8:
            raise InvalidStateError(f"w integrates to {total!r}")

    @classmethod
    def from_classical(cls, psi: ClassicalWaveFunction, alpha=None):
        a = np.zeros_like(psi.values) if alpha is None else np.asarray(alpha, dtype=float)
        return cls(psi.grid, psi.values ** 2, a)

    @property
    def has_phase_structure(self) -> bool:
        return bool(np.any(self.alpha != self.alpha.flat[0]))

    def amplitude(self) -> np.ndarray:
        return np.sqrt(np.clip(self.w, 0.0, None))

    def complex_values(self) -> np.ndarray:
        return self.amplitude() * np.exp(1j * self.alpha)

    def alpha_derivative(self, axis: int, order: int = 1) -> np.ndarray:
        """Finite-difference derivative of alpha (alpha is not periodic)."""
        step = self.grid.dz if axis == 0 else self.grid.dp
        d = self.alpha
        for _ in range(order):
            d = np.gradient(d, step, axis=axis, edge_order=2)
        return d


def _floor_ratio(num: np.ndarray, w: np.ndarray, floor: float, noise_floor: float):
    good = (w > floor) & (w > noise_floor * np.max(w))
    out = np.zeros_like(w)
    out[good] = num[good] / w[good]
    return out, float(np.mean(w <= floor))


@dataclass(frozen=True)
class PhasedMoments:
    p_mean: float
    p2: float


def phased_momentum_moments(state: PhasedClassicalWaveFunction, *, floor: float = 1e-300,
                            noise_floor: float = 1e-14) -> PhasedMoments:
    grid = state.grid
    wt = grid.weight("zp")
    shift = grid.p[None, :] + 0.5 * state.alpha_derivative(0)
    dzw = spectral_derivative(Field2D(grid, state.w, "zp"), "z").values
    fluct, frac = _floor_ratio(dzw ** 2, state.w, floor, noise_floor)
    if frac > 0.01:
        warnings.warn(f"masked fraction {frac:.3g} exceeds 1%", RuntimeWarning)
    p_mean = float(np.sum(state.w * shift) * wt)
    p2 = float(np.sum(state.w * shift ** 2 + fluct / 16.0) * wt)
    return PhasedMoments(p_mean, p2)


def phased_quantum_transform(state: PhasedClassicalWaveFunction,
                             method: str = "direct") -> WignerFunction:
    """Quantum transform of sqrt(w) exp(i alpha).

    ``direct`` evaluates the fourfold sum (small grids only); ``fast`` runs
    the complex partial Fourier, coarse graining and Wigner pipeline.
    """
    grid = state.grid
    if not state.has_phase_structure:
        real = ClassicalWaveFunction.from_values(grid, state.amplitude(), check=False)
        if method == "direct":
            return quantum_transform_direct(real)
        vals = real.values.astype(complex)
    else:
        vals = state.complex_values()
    if method == "direct":
        return WignerFunction(Field2D(grid, _direct_fourfold(vals, grid), "zp"))
    if method != "fast":
        raise ValueError("method must be 'direct' or 'fast'")
    tilde = PositionBasisWaveFunction(Field2D(grid, fourier_p_to_r(vals, grid), "zr"))
    return wigner_of_density(coarse_grain(tilde), grid)


def phased_evolution_rhs(state: PhasedClassicalWaveFunction, potential: PotentialSpec, *,
                         floor: float = 1e-300, noise_floor: float = 1e-14) -> np.ndarray:
    """d_t w for the modified law with a phase-carrying wave function."""
    grid = state.grid
    f = Field2D(grid, state.w, "zp")
    base = np.real(liouville_rhs(f, potential))
    lam = potential.lam if potential.kind == "quartic" else 0.0
    if lam == 0.0:
        return base
    d1, d2, d3 = (spectral_derivative(f, "p", k).values for k in (1, 2, 3))
    bracket, mask = _masked_log_terms(state.w, d1, d2, d3, floor, noise_floor)
    if mask.mean() > 0.01:
        warnings.warn(f"masked fraction {mask.mean():.3g} exceeds 1%", RuntimeWarning)
    if state.has_phase_structure:
        a1 = state.alpha_derivative(1)
        a2 = state.alpha_derivative(1, 2)
        bracket = bracket - 3.0 * d1 * a2 - 6.0 * state.w * a1 * a2
    return base - (lam / 8.0) * grid.z[:, None] * bracket
