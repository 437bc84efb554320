"""Classical, statistical and quantum expectation values and distributions."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .grid import TWO_PI, Field2D, GridSpec, spectral_derivative
from .states import ClassicalWaveFunction, DensityMatrix, QuantumWaveFunction, WignerFunction
from .transforms import quantum_transform

MAX_DEGREE = 4


@dataclass(frozen=True)
class MomentRequest:
    """Polynomial sum_c coef * z^i * p^j of total degree at most four.

    Quantum evaluation against a Wigner function always yields the fully
    symmetrised operator expectation.
    """
    terms: tuple  # ((i, j, coef), ...)
    name: str = ""
    symmetrized: bool = True

    def __post_init__(self):
        for i, j, _ in self.terms:
            if i < 0 or j < 0 or i + j > MAX_DEGREE:
                raise ValueError(f"monomial z^{i} p^{j} exceeds degree {MAX_DEGREE}")

    @classmethod
    def monomial(cls, i: int, j: int, coef: float = 1.0) -> "MomentRequest":
        return cls(((i, j, float(coef)),), name=_monomial_name(i, j))

    @classmethod
    def parse(cls, text: str) -> "MomentRequest":
        """Parse e.g. ``z^2``, ``z*p``, ``0.5*p^2 + 2*z``, ``1``."""
        terms = []
        for raw in re.split(r"\+", text.replace(" ", "")):
            if not raw:
                raise ValueError(f"empty term in {text!r}")
            coef, i, j = 1.0, 0, 0
            for factor in raw.split("*"):
                m = re.fullmatch(r"([zp])(?:\^(\d+))?", factor)
                if m:
                    power = int(m.group(2) or 1)
                    if m.group(1) == "z":
                        i += power
                    else:
                        j += power
                    continue
                try:
                    coef *= float(factor)
                except ValueError:
                    raise ValueError(f"cannot parse factor {factor!r} in {text!r}") from None
            terms.append((i, j, coef))
        return cls(tuple(terms), name=text.strip())

    @property
    def degree(self) -> int:
        return max(i + j for i, j, _ in self.terms)

    def evaluate(self, z, p):
        out = 0.0
        for i, j, c in self.terms:
            out = out + c * z ** i * p ** j
        return out


def _monomial_name(i, j):
    parts = [s if k == 1 else f"{s}^{k}" for s, k in (("z", i), ("p", j)) if k]
    return "*".join(parts) or "1"


def _density(w) -> Field2D:
    if isinstance(w, ClassicalWaveFunction):
        return Field2D(w.grid, w.values ** 2, "zp")
    if isinstance(w, WignerFunction):
        return w.field
    return w


def classical_expectation(w, request: MomentRequest) -> float:
    f = _density(w)
    z, p = f.grid.mesh("zp")
    return float(np.real(np.sum(request.evaluate(z, p) * f.values)) * f.grid.weight("zp"))


def quantum_expectation(wigner: WignerFunction, request: MomentRequest) -> float:
    return classical_expectation(wigner.field, request)


@dataclass(frozen=True)
class StatisticalMoments:
    p2_s: float
    x2_s: float
    p_s: float  # int psi d_z psi; <P_s> = -i times this, zero without boundary terms
    x_s: float


def statistical_moments(psi: ClassicalWaveFunction) -> StatisticalMoments:
    f = psi.field
    wt = psi.grid.weight("zp")
    dz = spectral_derivative(f, "z").values
    dp = spectral_derivative(f, "p").values
    v = psi.values
    return StatisticalMoments(float(np.sum(dz ** 2) * wt), float(np.sum(dp ** 2) * wt),
                              float(np.sum(v * dz) * wt), float(np.sum(v * dp) * wt))


@dataclass(frozen=True)
class DispersionIdentity:
    p2_quantum: float
    p2_classical: float
    p2_statistical: float
    residual: float


def quantum_dispersion_identity(psi: ClassicalWaveFunction,
                                wigner: WignerFunction | None = None) -> DispersionIdentity:
    """<P_Q^2> from the Wigner moment against <p^2>_cl + <P_s^2>/4."""
    wig = wigner if wigner is not None else quantum_transform(psi)
    p2 = MomentRequest.monomial(0, 2)
    lhs = quantum_expectation(wig, p2)
    cl = classical_expectation(psi, p2)
    st = statistical_moments(psi).p2_s
    return DispersionIdentity(lhs, cl, st, abs(lhs - (cl + 0.25 * st)))


# -- density-matrix observables ---------------------------------------------------

def _block_momentum(blk: np.ndarray, h: float):
    """Momenta and diagonal of the block operator in the momentum basis."""
    n = blk.shape[0]
    f = np.fft.fft(np.eye(n), axis=0) / math.sqrt(n)
    diag = np.real(np.einsum("ij,jk,ik->i", f, blk * h, f.conj()))
    k = TWO_PI * np.fft.fftfreq(n, h)
    return k, diag


def block_coordinates(rho: DensityMatrix, grid: GridSpec):
    for sites, blk, h in rho.blocks():
        yield grid.z[sites], blk, h


def energy(rho: DensityMatrix, potential, grid: GridSpec) -> float:
    """Kinetic energy from the momentum diagonal plus sum V(x) rho(x,x) dz."""
    m = potential.mass
    vx = potential.on_grid(grid)
    total = 0.0
    for sites, blk, h in rho.blocks():
        k, diag = _block_momentum(blk, h)
        total += np.sum(k ** 2 / (2 * m) * diag) + np.sum(vx[sites] * np.real(np.diag(blk))) * h
    return float(total / rho.sublattices)


def position_distribution(rho: DensityMatrix) -> np.ndarray:
    """w_Q(x) = rho(x, x) on the fine lattice; sum * dz = 1."""
    return rho.diagonal()


def momentum_distribution(rho: DensityMatrix):
    """(p, w_Q(p)) with sum w_Q(p) dp/2pi = 1, averaged over sublattices."""
    acc, p = None, None
    for _, blk, h in rho.blocks():
        k, diag = _block_momentum(blk, h)
        length = blk.shape[0] * h
        order = np.argsort(k)
        vals = diag[order] * length
        acc = vals if acc is None else acc + vals
        p = k[order]
    return p, acc / rho.sublattices


@dataclass(frozen=True)
class Marginals:
    x: np.ndarray
    p: np.ndarray

    def norms(self, grid: GridSpec):
        return float(np.sum(self.x) * grid.dz), float(np.sum(self.p) * grid.dp / TWO_PI)


def classical_marginals(w) -> Marginals:
    f = _density(w)
    g = f.grid
    vals = np.real(f.values)
    return Marginals(vals.sum(axis=1) * g.dp / TWO_PI, vals.sum(axis=0) * g.dz)


def measurement_correlation(wigner: WignerFunction) -> float:
    """<P_Q X_Q>_m = int z p rho_w."""
    return quantum_expectation(wigner, MomentRequest.monomial(1, 1))


def momentum_operator(n: int, h: float) -> np.ndarray:
    """Spectral -i d/dx on a periodic lattice, Nyquist mode removed."""
    k = TWO_PI * np.fft.fftfreq(n, h)
    k[n // 2] = 0.0
    f = np.fft.fft(np.eye(n), axis=0)
    return np.fft.ifft(k[:, None] * f, axis=0)


def operator_expectation(rho: DensityMatrix, grid: GridSpec, builder) -> complex:
    """Block-averaged tr(O rho h) with O = builder(x, P) per sublattice."""
    acc = 0.0
    for x, blk, h in block_coordinates(rho, grid):
        op = builder(np.diag(x), momentum_operator(len(x), h))
        acc += np.trace(op @ blk) * h
    return acc / rho.sublattices


def operator_symmetrized_xp(rho: DensityMatrix, grid: GridSpec) -> float:
    """(1/2) tr({X, P} rho) on the lattice."""
    return float(np.real(operator_expectation(rho, grid, lambda X, P: 0.5 * (X @ P + P @ X))))


def commutator_witness(rho: DensityMatrix, grid: GridSpec) -> complex:
    """tr(rho [X, P]); i for resolved states away from the window edge."""
    return complex(operator_expectation(rho, grid, lambda X, P: X @ P - P @ X))


def sharpened_position_distribution(psi: QuantumWaveFunction, beta: float,
                                    grid: GridSpec) -> np.ndarray:
    """Interpolating position distribution between |psi_Q|^2 (beta=0) and the
    classical marginal (beta=pi/2); normalised so that sum * dz = 1."""
    if not (0.0 <= beta <= math.pi / 2 + 1e-12):
        raise ValueError("beta must lie in [0, pi/2]")
    dens = np.abs(np.asarray(psi.values)) ** 2
    n = grid.n_z
    s2, c2 = math.sin(beta) ** 2, math.cos(beta) ** 2
    r = grid.r  # spacing 2 dz, centred, spans the window
    x = grid.z

    def sample(shift):
        t = (x[:, None] + shift[None, :] - grid.z_min) / grid.dz
        i0 = np.floor(t)
        frac = t - i0
        i0 = i0.astype(int) % n
        return (1 - frac) * dens[i0] + frac * dens[(i0 + 1) % n]

    prof = np.sum(sample(0.5 * r * s2) * sample(-0.5 * r * (1 + c2)), axis=1) * grid.dr
    return prof / (np.sum(prof) * grid.dz)


def fringe_visibility(profile: np.ndarray, x: np.ndarray, k: float) -> float:
    """Contrast of a cos(k x) modulation: 2 |int p e^{-ikx}| / int p."""
    return float(2 * abs(np.sum(profile * np.exp(-1j * k * x))) / np.sum(profile))
