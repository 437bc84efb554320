"""State representations and constructors."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_hermite

from .grid import ConfigurationError, Field2D, GridSpec, boundary_mass, integrate

REALITY_TOL = 1e-9


class InvalidStateError(ValueError):
    """A field does not satisfy the invariants of the requested state type."""


def _imag_fraction(values) -> float:
    values = np.asarray(values)
    if not np.iscomplexobj(values):
        return 0.0
    re = np.max(np.abs(values.real))
    im = np.max(np.abs(values.imag))
    if re == 0:
        return 0.0 if im == 0 else np.inf
    return float(im / re)


@dataclass(frozen=True)
class ClassicalWaveFunction:
    """Real root of the phase-space density, w = psi**2, on a (z,p) grid."""
    field: Field2D
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.field.axes != "zp":
            raise InvalidStateError("classical wave function lives on (z,p)")

    @classmethod
    def from_values(cls, grid: GridSpec, values, *, check: bool = True,
                    norm_tol: float = 1e-8, **meta) -> "ClassicalWaveFunction":
        values = np.asarray(values)
        frac = _imag_fraction(values)
        if check and frac > REALITY_TOL:
            raise InvalidStateError(f"imaginary fraction {frac:.3g} exceeds {REALITY_TOL}")
        meta.setdefault("imag_fraction", frac)
        psi = cls(Field2D(grid, np.real(values).astype(float), "zp"), meta)
        if check:
            n = psi.norm()
            if abs(n - 1.0) > norm_tol:
                raise InvalidStateError(f"normalization {n!r} differs from 1")
        return psi

    @property
    def grid(self) -> GridSpec:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def norm(self) -> float:
        return float(integrate(self.field.with_values(self.values ** 2)))

    def density(self) -> np.ndarray:
        return self.values ** 2


@dataclass(frozen=True)
class PositionBasisWaveFunction:
    """psi~(z, r), read as psi~(x, y) with x = z + r/2, y = z - r/2."""
    field: Field2D

    def __post_init__(self):
        if self.field.axes not in ("zr", "xy"):
            raise InvalidStateError("position-basis wave function lives on (z,r)")

    @property
    def grid(self) -> GridSpec:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def norm(self) -> float:
        return float(np.real(integrate(self.field.with_values(np.abs(self.values) ** 2))))

    def hermiticity_violation(self) -> float:
        """max |psi(z,r) - conj psi(z,-r)| relative to max |psi|."""
        v = self.values
        n = v.shape[1]
        mirror = np.roll(v[:, ::-1], 1, axis=1)  # b -> -b (mod n_p)
        scale = np.max(np.abs(v))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(v - np.conj(mirror))) / scale) if n else 0.0


@dataclass(frozen=True)
class QuantumWaveFunction:
    values: np.ndarray
    dz: float
    x: np.ndarray | None = None

    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.dz)

    def normalized(self) -> "QuantumWaveFunction":
        return QuantumWaveFunction(self.values / math.sqrt(self.norm()), self.dz, self.x)

    @classmethod
    def on_grid(cls, grid: GridSpec, values) -> "QuantumWaveFunction":
        psi = cls(np.asarray(values, dtype=complex), grid.dz, grid.z)
        return psi.normalized()


@dataclass(frozen=True)
class DensityMatrix:
    """Sampled density-matrix kernel rho(x, x') on the fine z-lattice.

    With ``sublattices=2`` only entries whose sites share parity are defined
    (others are stored as zero).  Each parity block, with spacing 2*dz, is a
    separate sampling of the same continuum operator, and scalar properties
    are averaged over the blocks.
    """
    matrix: np.ndarray
    dz: float
    sublattices: int = 1
    basis: str = "position"

    def __post_init__(self):
        if self.sublattices not in (1, 2):
            raise ValueError("sublattices must be 1 or 2")
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def blocks(self):
        """Yield (site indices, block, spacing) per sublattice."""
        s = self.sublattices
        for par in range(s):
            sites = np.arange(par, self.n, s)
            yield sites, self.matrix[np.ix_(sites, sites)], s * self.dz

    @classmethod
    def from_blocks(cls, blocks, dz: float) -> "DensityMatrix":
        s = len(blocks)
        n = s * blocks[0].shape[0]
        m = np.zeros((n, n), dtype=complex)
        for par, blk in enumerate(blocks):
            sites = np.arange(par, n, s)
            m[np.ix_(sites, sites)] = blk
        return cls(m, dz, s)

    @classmethod
    def pure(cls, psi: QuantumWaveFunction, sublattices: int = 1) -> "DensityMatrix":
        v = np.asarray(psi.values, dtype=complex)
        if sublattices == 1:
            return cls(np.outer(v, v.conj()), psi.dz, 1)
        blocks = []
        for par in range(sublattices):
            u = v[par::sublattices]
            u = u / math.sqrt(np.sum(np.abs(u) ** 2) * sublattices * psi.dz)
            blocks.append(np.outer(u, u.conj()))
        return cls.from_blocks(blocks, psi.dz)

    def _avg(self, fn):
        vals = [fn(sites, b, h) for sites, b, h in self.blocks()]
        return sum(vals) / len(vals)

    def trace(self) -> float:
        return float(np.real(self._avg(lambda s, b, h: np.trace(b) * h)))

    def purity(self) -> float:
        return float(self._avg(lambda s, b, h: np.sum(np.abs(b) ** 2) * h * h))

    def eigenvalues(self) -> list[np.ndarray]:
        """Eigenvalues (descending) of each block operator rho*h."""
        out = []
        for _, b, h in self.blocks():
            herm = 0.5 * (b + b.conj().T) * h
            out.append(np.linalg.eigvalsh(herm)[::-1])
        return out

    def hermiticity_violation(self) -> float:
        m = self.matrix
        scale = np.max(np.abs(m))
        return float(np.max(np.abs(m - m.conj().T)) / scale) if scale else 0.0

    def validate(self, trace_tol: float = 1e-8, eig_tol: float = 1e-8,
                 herm_tol: float = 1e-9) -> "DensityMatrix":
        if self.hermiticity_violation() > herm_tol:
            raise InvalidStateError("density matrix is not hermitian")
        tr = self.trace()
        if abs(tr - 1.0) > trace_tol:
            raise InvalidStateError(f"trace {tr!r} differs from 1")
        lo = min(ev.min() for ev in self.eigenvalues())
        if lo < -eig_tol:
            raise InvalidStateError(f"negative eigenvalue {lo:.3g}")
        return self

    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()

    def fidelity(self, psi: QuantumWaveFunction) -> float:
        """<psi|rho|psi> with psi renormalised on each sublattice."""
        v = np.asarray(psi.values, dtype=complex)

        def one(sites, b, h):
            u = v[sites]
            u = u / math.sqrt(np.sum(np.abs(u) ** 2) * h)
            return np.real(np.vdot(u, b @ u)) * h * h
        return float(self._avg(one))


@dataclass(frozen=True)
class WignerFunction:
    field: Field2D

    @property
    def grid(self) -> GridSpec:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def integral(self) -> float:
        return float(np.real(integrate(self.field)))

    def validate(self, norm_tol: float = 1e-8) -> "WignerFunction":
        if abs(self.integral() - 1.0) > norm_tol:
            raise InvalidStateError(f"Wigner function integrates to {self.integral()!r}")
        return self


# -- constructors --------------------------------------------------------------

def wavefunction_from_density(w: Field2D, sign=None, *, neg_tol: float = 1e-12,
                              renorm_tol: float = 1e-6) -> ClassicalWaveFunction:
    """Signed square root of a nonnegative phase-space density."""
    vals = np.real(np.asarray(w.values)).astype(float)
    if vals.min() < -neg_tol:
        idx = tuple(int(i) for i in np.unravel_index(np.argmin(vals), vals.shape))
        raise InvalidStateError(f"density negative ({vals[idx]:.3g}) at (z,p) index {idx}")
    total = float(integrate(w.with_values(vals)))
    if not total > 0:
        raise InvalidStateError("density integrates to zero; cannot normalise")
    if abs(total - 1.0) > renorm_tol:
        raise InvalidStateError(f"density integrates to {total!r}, not 1")
    psi = np.sqrt(np.clip(vals, 0.0, None) / total)
    if sign is not None:
        sign = np.asarray(sign)
        if not np.all(np.isin(sign, (-1, 1))):
            raise InvalidStateError("sign field must contain only +1/-1")
        psi = psi * sign
    return ClassicalWaveFunction.from_values(w.grid, psi, renorm_factor=1.0 / total)


def density_from_wavefunction(psi: ClassicalWaveFunction) -> Field2D:
    return Field2D(psi.grid, np.real(psi.values) ** 2, "zp")


def gaussian_packet(grid: GridSpec, x_mean: float, p_mean: float,
                    delta_x: float, delta_p: float, *,
                    boundary_tol: float = 1e-8) -> ClassicalWaveFunction:
    """Product Gaussian classical wave function with widths delta_x, delta_p."""
    if not (delta_x > 0 and delta_p > 0):
        raise ConfigurationError("widths must be positive")
    if delta_x <= 3 * grid.dz / 2 or delta_p <= 3 * grid.dp / 2:
        raise ConfigurationError(
            f"widths ({delta_x}, {delta_p}) not resolved by dz={grid.dz:.3g}, dp={grid.dp:.3g}")
    z, p = grid.mesh("zp")
    vals = (delta_x * delta_p) ** -0.5 * np.exp(
        -(z - x_mean) ** 2 / (4 * delta_x ** 2) - (p - p_mean) ** 2 / (4 * delta_p ** 2))
    f = Field2D(grid, vals, "zp")
    if boundary_mass(f) > boundary_tol or _p_edge_mass(vals) > boundary_tol:
        raise ConfigurationError("Gaussian packet does not fit the phase-space window")
    norm = float(integrate(f.with_values(vals ** 2)))
    return ClassicalWaveFunction.from_values(grid, vals / math.sqrt(norm),
                                             renorm_factor=1.0 / math.sqrt(norm))


def _p_edge_mass(vals: np.ndarray, edge: int = 2) -> float:
    a = vals ** 2
    return float((a[:, :edge].sum() + a[:, -edge:].sum()) / a.sum())


def harmonic_eigenstate(grid: GridSpec, n: int, m: float = 1.0, omega: float = 1.0,
                        center: float = 0.0, *, tail_tol: float = 1e-10) -> QuantumWaveFunction:
    """n-th eigenfunction of P^2/2m + m omega^2 X^2/2 sampled on the z-lattice."""
    if not (0 <= n <= 10):
        raise ConfigurationError("eigenstate index must be in 0..10")
    x = grid.z
    s = math.sqrt(m * omega)
    xi = s * (x - center)
    # classical turning point sqrt(2n+1)/s must be resolved
    if math.pi / s / max(1.0, math.sqrt(2 * n + 1)) < 3 * grid.dz:
        raise ConfigurationError("eigenstate oscillations not resolved on grid")
    coef = (s * s / math.pi) ** 0.25 / math.sqrt(2.0 ** n * math.factorial(n))
    vals = coef * eval_hermite(n, xi) * np.exp(-0.5 * xi ** 2)
    edge = (vals[:2] ** 2).sum() + (vals[-2:] ** 2).sum()
    if edge * grid.dz > tail_tol:
        raise ConfigurationError("eigenstate tails reach the window edge")
    return QuantumWaveFunction.on_grid(grid, vals)


def gaussian_wavefunction(grid: GridSpec, x_mean: float, p_mean: float,
                          sigma: float) -> QuantumWaveFunction:
    """Normalised Gaussian psi_Q with |psi|^2 of standard deviation sigma."""
    x = grid.z
    vals = np.exp(-(x - x_mean) ** 2 / (4 * sigma ** 2) + 1j * p_mean * x)
    return QuantumWaveFunction.on_grid(grid, vals)
