"""Time propagation of classical and quantum wave functions.

Both classical laws are Strang-split into a z-advection that is diagonal in
(k, p) and a potential action that is diagonal in (z, r).  Each substep is an
exact phase multiplication, so norm and reality are preserved up to roundoff.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid import (TWO_PI, ConfigurationError, Field2D, GridSpec, fourier_p_to_r,
                   fourier_r_to_p, pair_indices, spectral_derivative)
from .states import ClassicalWaveFunction, QuantumWaveFunction, WignerFunction

LAWS = ("liouville", "h_w")


@dataclass(frozen=True)
class PotentialSpec:
    """V(z) for kinds free, harmonic (a + b z + c z^2/2), quartic (c z^2/2 + lam z^4/8)
    or tabulated on the z-grid."""
    kind: str = "free"
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    lam: float = 0.0
    mass: float = 1.0
    table: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("free", "harmonic", "quartic", "tabulated"):
            raise ConfigurationError(f"unknown potential kind {self.kind!r}")
        if not self.mass > 0:
            raise ConfigurationError("mass must be positive")
        if self.kind == "tabulated":
            if self.table is None:
                raise ConfigurationError("tabulated potential needs values")
            t = np.asarray(self.table, dtype=float)
            span = max(np.ptp(t), 1e-300)
            if abs(t[-1] - t[0]) > 1e-6 * span + 0.5 * np.max(np.abs(np.diff(t))):
                raise ConfigurationError("tabulated potential is not continuous across the wrap")

    @classmethod
    def harmonic(cls, c: float = 1.0, a: float = 0.0, b: float = 0.0, mass: float = 1.0):
        return cls("harmonic", a=a, b=b, c=c, mass=mass)

    @classmethod
    def quartic(cls, c: float = 1.0, lam: float = 1.0, mass: float = 1.0):
        return cls("quartic", c=c, lam=lam, mass=mass)

    @classmethod
    def tabulated(cls, values, mass: float = 1.0):
        return cls("tabulated", mass=mass, table=tuple(float(v) for v in values))

    @property
    def is_quadratic(self) -> bool:
        return self.kind in ("free", "harmonic") or (self.kind == "quartic" and self.lam == 0)

    def _tab(self, grid: GridSpec) -> np.ndarray:
        t = np.asarray(self.table, dtype=float)
        if t.shape != (grid.n_z,):
            raise ConfigurationError("tabulated potential does not match the grid")
        return t

    def value(self, x, grid: GridSpec | None = None):
        x = np.asarray(x, dtype=float)
        if self.kind == "free":
            return np.zeros_like(x)
        if self.kind == "harmonic":
            return self.a + self.b * x + 0.5 * self.c * x ** 2
        if self.kind == "quartic":
            return 0.5 * self.c * x ** 2 + self.lam / 8.0 * x ** 4
        raise ValueError("tabulated potentials are only defined on lattice sites")

    def on_grid(self, grid: GridSpec) -> np.ndarray:
        if self.kind == "tabulated":
            return self._tab(grid)
        return self.value(grid.z)

    def derivative(self, grid: GridSpec, order: int = 1) -> np.ndarray:
        """order-th derivative of V on the z-lattice."""
        z = grid.z
        if self.kind == "free":
            return np.zeros_like(z)
        if self.kind == "harmonic":
            return [self.b + self.c * z, np.full_like(z, self.c), np.zeros_like(z)][order - 1]
        if self.kind == "quartic":
            return [self.c * z + 0.5 * self.lam * z ** 3,
                    self.c + 1.5 * self.lam * z ** 2,
                    3.0 * self.lam * z][order - 1]
        f = Field2D(grid, np.repeat(self._tab(grid)[:, None], grid.n_p, axis=1), "zp")
        return spectral_derivative(f, "z", order).values[:, 0]

    def pair_difference(self, grid: GridSpec) -> np.ndarray:
        """V(z + r/2) - V(z - r/2) on the (z, r) grid."""
        if self.kind == "tabulated":
            t = self._tab(grid)
            x_idx, y_idx = pair_indices(grid)
            return t[x_idx] - t[y_idx]
        z, r = grid.mesh("zr")
        return self.value(z + 0.5 * r) - self.value(z - 0.5 * r)


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    n_steps: int
    law: str = "h_w"
    splitting: str = "strang"

    def __post_init__(self):
        if not self.dt != 0 or not math.isfinite(self.dt):
            raise ConfigurationError("dt must be finite and nonzero")
        if self.n_steps < 1:
            raise ConfigurationError("n_steps must be positive")
        if self.law not in LAWS:
            raise ConfigurationError(f"law must be one of {LAWS}")
        if self.splitting != "strang":
            raise ConfigurationError("only Strang splitting is supported")


def check_stability(grid: GridSpec, mass: float, dt: float) -> float:
    """Phase-advance guard; returns the guard value (must be < pi)."""
    g = abs(dt) * np.max(np.abs(grid.p)) / mass * (TWO_PI / grid.length_z)
    if not g < math.pi:
        raise ConfigurationError(f"time step too large: phase guard {g:.3g} >= pi")
    return g


def _nyquist_safe(phase: np.ndarray, axis: int, index: int) -> np.ndarray:
    """exp(-i phase), with the unpaired Nyquist slice replaced by cos(phase)."""
    out = np.exp(-1j * phase)
    sl = [slice(None), slice(None)]
    sl[axis] = index
    out[tuple(sl)] = np.cos(phase[tuple(sl)])
    return out


class ClassicalPropagator:
    """Strang-split propagator for psi_C with precomputed phase tables."""

    def __init__(self, grid: GridSpec, potential: PotentialSpec, dt: float, law: str = "h_w"):
        if law not in LAWS:
            raise ConfigurationError(f"law must be one of {LAWS}")
        check_stability(grid, potential.mass, dt)
        self.grid, self.potential, self.dt, self.law = grid, potential, dt, law
        k = grid.kz[:, None]
        kin_phase = k * grid.p[None, :] * (0.5 * dt / potential.mass)
        self.kinetic = _nyquist_safe(kin_phase, 0, grid.n_z // 2)
        if law == "liouville":
            z, r = grid.mesh("zr")
            pot_phase = potential.derivative(grid)[:, None] * r * dt
        else:
            pot_phase = potential.pair_difference(grid) * dt
        self.potential_phase = _nyquist_safe(pot_phase, 1, 0)

    def kinetic_half(self, values: np.ndarray) -> np.ndarray:
        return np.fft.ifft(np.fft.fft(values, axis=0) * self.kinetic, axis=0)

    def potential_full(self, values: np.ndarray) -> np.ndarray:
        tilde = fourier_p_to_r(values, self.grid) * self.potential_phase
        return fourier_r_to_p(tilde, self.grid)

    def step_values(self, values: np.ndarray) -> np.ndarray:
        v = self.kinetic_half(np.asarray(values, dtype=complex))
        v = self.potential_full(v)
        return self.kinetic_half(v)

    def run_values(self, values: np.ndarray, n_steps: int) -> np.ndarray:
        v = np.asarray(values, dtype=complex)
        for _ in range(n_steps):
            v = self.step_values(v)
        return v

    def step(self, psi: ClassicalWaveFunction, n_steps: int = 1) -> ClassicalWaveFunction:
        v = self.run_values(psi.values, n_steps)
        return _wrap_classical(self.grid, v)


def _wrap_classical(grid: GridSpec, v: np.ndarray) -> ClassicalWaveFunction:
    frac = float(np.max(np.abs(v.imag)) / max(np.max(np.abs(v.real)), 1e-300))
    return ClassicalWaveFunction.from_values(grid, v.real, check=False, imag_fraction=frac)


def liouville_step(psi: ClassicalWaveFunction, potential: PotentialSpec,
                   dt: float) -> ClassicalWaveFunction:
    return ClassicalPropagator(psi.grid, potential, dt, "liouville").step(psi)


def hw_step(psi: ClassicalWaveFunction, potential: PotentialSpec,
            dt: float) -> ClassicalWaveFunction:
    return ClassicalPropagator(psi.grid, potential, dt, "h_w").step(psi)


class SchrodingerPropagator:
    """Split-step Fourier propagator for psi_Q on the fine z-lattice."""

    def __init__(self, grid: GridSpec, potential: PotentialSpec, dt: float):
        check_stability(grid, potential.mass, dt)
        self.grid, self.potential, self.dt = grid, potential, dt
        k = grid.kz
        self.kinetic = np.exp(-1j * k ** 2 * dt / (4 * potential.mass))
        self.phase = np.exp(-1j * potential.on_grid(grid) * dt)

    def step_values(self, v: np.ndarray) -> np.ndarray:
        v = np.fft.ifft(np.fft.fft(v) * self.kinetic)
        v = v * self.phase
        return np.fft.ifft(np.fft.fft(v) * self.kinetic)

    def step(self, psi: QuantumWaveFunction, n_steps: int = 1) -> QuantumWaveFunction:
        v = np.asarray(psi.values, dtype=complex)
        for _ in range(n_steps):
            v = self.step_values(v)
        return QuantumWaveFunction(v, psi.dz, psi.x)


def schrodinger_step(psi: QuantumWaveFunction, potential: PotentialSpec, dt: float,
                     grid: GridSpec) -> QuantumWaveFunction:
    return SchrodingerPropagator(grid, potential, dt).step(psi)


def evolve(psi: ClassicalWaveFunction, potential: PotentialSpec, config: EvolutionConfig,
           sample_every: int = 0):
    """Yield (step, time, values) at step 0 and every ``sample_every`` steps."""
    prop = ClassicalPropagator(psi.grid, potential, config.dt, config.law)
    v = np.asarray(psi.values, dtype=complex)
    every = sample_every or config.n_steps
    yield 0, 0.0, v
    for n in range(1, config.n_steps + 1):
        v = prop.step_values(v)
        if n % every == 0 or n == config.n_steps:
            yield n, n * config.dt, v


# -- right-hand sides -------------------------------------------------------------

def liouville_rhs(f: Field2D, potential: PotentialSpec) -> np.ndarray:
    """-(p/m) d_z f + V'(z) d_p f."""
    grid = f.grid
    dz = spectral_derivative(f, "z", 1).values
    dp = spectral_derivative(f, "p", 1).values
    return (-grid.p[None, :] / potential.mass * dz
            + potential.derivative(grid)[:, None] * dp)


def moyal_rhs(wig: WignerFunction, potential: PotentialSpec, truncation_order=1) -> np.ndarray:
    f = wig.field
    grid = f.grid
    if truncation_order == 1:
        return np.real(liouville_rhs(f, potential))
    if truncation_order == 3:
        d3 = spectral_derivative(f, "p", 3).values
        return np.real(liouville_rhs(f, potential)
                       - potential.derivative(grid, 3)[:, None] / 24.0 * d3)
    if truncation_order == "exact":
        kin = -grid.p[None, :] / potential.mass * spectral_derivative(f, "z", 1).values
        tilde = fourier_p_to_r(np.asarray(f.values, dtype=complex), grid)
        action = -1j * potential.pair_difference(grid) * tilde
        action[:, 0] = 0.0
        return np.real(kin + fourier_r_to_p(action, grid))
    raise ValueError("truncation_order must be 1, 3 or 'exact'")


@dataclass
class CorrectionResult:
    values: np.ndarray
    masked_fraction: float
    warning: str | None = None


def _masked_log_terms(w: np.ndarray, d1, d2, d3, floor: float, noise_floor: float):
    """w''' - (3/2) w' w''/w + (3/4) w'^3/w^2 on the unmasked region."""
    mask = w <= floor
    small = w <= noise_floor * np.max(w)
    good = ~(mask | small)
    out = np.zeros_like(w)
    wg = w[good]
    out[good] = d3[good] - 1.5 * d1[good] * d2[good] / wg + 0.75 * d1[good] ** 3 / wg ** 2
    return out, mask


def quantum_correction_C(w: Field2D, potential: PotentialSpec, *, floor: float = 1e-300,
                         noise_floor: float = 1e-14) -> CorrectionResult:
    """C[w] = -(lam/8) z (u''' + 3/2 u'' u' + 1/4 u'^3) w with u = ln w, p-derivatives.

    Expanded in derivatives of w to avoid differentiating ln w spectrally.
    Entries with w below ``floor`` are masked; entries below
    ``noise_floor * max(w)`` are dropped as numerically zero.
    """
    if potential.kind not in ("quartic", "free", "harmonic"):
        raise ConfigurationError("quantum correction is defined for polynomial potentials")
    vals = np.real(np.asarray(w.values))
    lam = potential.lam if potential.kind == "quartic" else 0.0
    if lam == 0.0:
        return CorrectionResult(np.zeros_like(vals), 0.0)
    f = w.with_values(vals)
    d1, d2, d3 = (spectral_derivative(f, "p", k).values for k in (1, 2, 3))
    bracket, mask = _masked_log_terms(vals, d1, d2, d3, floor, noise_floor)
    frac = float(mask.mean())
    msg = None
    if frac > 0.01:
        msg = f"masked fraction {frac:.3g} exceeds 1%"
        warnings.warn(msg, RuntimeWarning)
    z = w.grid.z[:, None]
    return CorrectionResult(-(lam / 8.0) * z * bracket, frac, msg)


def quantum_correction_from_psi(psi: ClassicalWaveFunction, potential: PotentialSpec) -> np.ndarray:
    """Independent evaluation 2 psi d_t psi + L w, which reduces to -(lam/4) z psi psi'''."""
    lam = potential.lam if potential.kind == "quartic" else 0.0
    d3 = spectral_derivative(psi.field, "p", 3).values
    z = psi.grid.z[:, None]
    return -(lam / 4.0) * z * psi.values * d3
