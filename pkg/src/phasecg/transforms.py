"""Maps between the phase-space, separation, density-matrix and Wigner pictures."""
from __future__ import annotations

import math
import warnings

import numpy as np

from .grid import (TWO_PI, ConfigurationError, Field2D, GridSpec, block_indices,
                   fourier_p_to_r, fourier_r_to_p, pair_indices)
from .states import (ClassicalWaveFunction, DensityMatrix, InvalidStateError,
                     PositionBasisWaveFunction, QuantumWaveFunction, WignerFunction)

DIRECT_MAX_POINTS = 64 * 64
HERMITICITY_TOL = 1e-6
CLIP_TOL = 1e-8


def _wrapc(t, n):
    return (np.asarray(t) + n // 2) % n - n // 2


def pair_representative(x, y, grid: GridSpec):
    """(z, r) grid indices holding the same-parity fine-lattice pair (x, y)."""
    b = _wrapc((np.asarray(x) - np.asarray(y)) // 2, grid.n_p)
    j = (np.asarray(x) - b) % grid.n_z
    return j, b + grid.n_p // 2


# -- partial Fourier ------------------------------------------------------------

def partial_fourier(psi: ClassicalWaveFunction) -> PositionBasisWaveFunction:
    vals = np.asarray(psi.values)
    if vals.dtype.kind != "c":
        vals = vals.astype(complex)
    return PositionBasisWaveFunction(Field2D(psi.grid, fourier_p_to_r(vals, psi.grid), "zr"))


def inverse_partial_fourier(psi_t: PositionBasisWaveFunction, *,
                            tol: float = HERMITICITY_TOL,
                            check_norm: bool = True) -> ClassicalWaveFunction:
    viol = psi_t.hermiticity_violation()
    if viol > tol:
        raise InvalidStateError(f"hermiticity violation {viol:.3g} exceeds {tol:g}")
    vals = fourier_r_to_p(psi_t.values, psi_t.grid)
    frac = float(np.max(np.abs(vals.imag)) / max(np.max(np.abs(vals.real)), 1e-300))
    return ClassicalWaveFunction.from_values(psi_t.grid, vals.real, check=check_norm,
                                             imag_fraction=frac)


# -- coarse graining and Wigner ----------------------------------------------

def block_amplitudes(psi_t: PositionBasisWaveFunction):
    """Per parity block, the matrix Psi[x, y] = psi~(x, y) over one sublattice."""
    return [psi_t.values[j, b] for j, b in block_indices(psi_t.grid)]


def coarse_grain(psi_t: PositionBasisWaveFunction) -> DensityMatrix:
    """Trace out y: rho(x, x') = sum_y psi~(x, y) psi~*(x', y) dr."""
    grid = psi_t.grid
    blocks = [amp @ amp.conj().T * grid.dr for amp in block_amplitudes(psi_t)]
    return DensityMatrix.from_blocks(blocks, grid.dz)


def wigner_of_density(rho: DensityMatrix, grid: GridSpec) -> WignerFunction:
    """rho_w(z, p) = sum_r exp(-ipr) rho(z + r/2, z - r/2) dr, real part."""
    if rho.basis != "position":
        raise ValueError("Wigner transform needs a position-basis density matrix")
    if rho.n != grid.n_z:
        raise ValueError("density matrix does not match grid")
    x_idx, y_idx = pair_indices(grid)
    vals = fourier_r_to_p(rho.matrix[x_idx, y_idx], grid)
    return WignerFunction(Field2D(grid, vals.real.copy(), "zp",
                                  {"imag_max": float(np.max(np.abs(vals.imag)))}))


def quantum_transform(psi: ClassicalWaveFunction) -> WignerFunction:
    """Fast path: partial Fourier, coarse graining, Wigner transform."""
    return wigner_of_density(coarse_grain(partial_fourier(psi)), psi.grid)


def quantum_transform_direct(psi: ClassicalWaveFunction) -> WignerFunction:
    """Brute-force fourfold sum defining the quantum transform.

    For every output point (z_j, p_k) sums over the separation r (index b),
    the traced coordinate y and the two momenta s, s' with kernel
    exp(i(s r1 - s' r2 - p r)).  Only meant as an oracle for small grids.
    """
    grid = psi.grid
    return WignerFunction(Field2D(grid, _direct_fourfold(np.asarray(psi.values), grid), "zp"))


def _direct_fourfold(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    if grid.n_z * grid.n_p > DIRECT_MAX_POINTS:
        raise ConfigurationError(
            f"direct quantum transform limited to n_z*n_p <= {DIRECT_MAX_POINTS}; "
            "use quantum_transform (fast pipeline) for larger grids")
    n, npp = grid.n_z, grid.n_p
    half = npp // 2
    p, r = grid.p, grid.r
    bs = np.arange(npp) - half
    ys = np.arange(npp)
    pref = grid.dr ** 2 * (grid.dp / TWO_PI) ** 2
    psi_c = np.conj(values)
    out = np.zeros((n, npp))
    for j in range(n):
        x = (j + bs)[:, None]
        xp = (j - bs)[:, None]
        y = ((j + bs) % 2)[:, None] + 2 * ys[None, :]
        z1, b1 = pair_representative(x, y, grid)
        z2, b2 = pair_representative(xp, y, grid)
        # a[b, y, s, s'] summed over y, s, s'
        ph1 = np.exp(1j * p[None, None, :] * r[b1][:, :, None])
        ph2 = np.exp(-1j * p[None, None, :] * r[b2][:, :, None])
        f1 = values[z1] * ph1          # (b, y, s)
        f2 = psi_c[z2] * ph2           # (b, y, s')
        g = np.einsum("bys,byt->b", f1, f2) * pref
        out[j] = np.real(np.exp(-1j * np.outer(p, r)) @ g)
    return out


# -- embeddings -----------------------------------------------------------------

def pure_state_embed(psi_q: QuantumWaveFunction, grid: GridSpec, *,
                     imag_tol: float = 1e-6) -> ClassicalWaveFunction:
    """psi_C(z,p) = sum_r exp(-ipr) psi_Q(z + r/2) psi_Q*(z - r/2) dr."""
    v = np.asarray(psi_q.values, dtype=complex)
    x_idx, y_idx = pair_indices(grid)
    vals = fourier_r_to_p(v[x_idx] * np.conj(v[y_idx]), grid)
    frac = float(np.max(np.abs(vals.imag)) / np.max(np.abs(vals.real)))
    if frac > imag_tol:
        warnings.warn(f"pure-state embed imaginary fraction {frac:.3g}", RuntimeWarning)
    re = vals.real
    norm = float(np.sum(re ** 2) * grid.weight("zp"))
    return ClassicalWaveFunction.from_values(grid, re / math.sqrt(norm),
                                             imag_fraction=frac,
                                             renorm_factor=1.0 / math.sqrt(norm))


def sqrt_psd(a: np.ndarray, clip_tol: float = CLIP_TOL) -> np.ndarray:
    """Principal square root of a hermitian positive semidefinite matrix."""
    herm = 0.5 * (a + a.conj().T)
    lam, vec = np.linalg.eigh(herm)
    if lam.min() < -clip_tol:
        raise InvalidStateError(f"eigenvalue {lam.min():.3g} below -{clip_tol:g}")
    root = np.sqrt(np.clip(lam, 0.0, None))
    return (vec * root) @ vec.conj().T


def mixed_state_embed(rho: DensityMatrix, grid: GridSpec) -> ClassicalWaveFunction:
    """Classical preimage using psi~ = principal root of rho on each sublattice."""
    if rho.sublattices != 2:
        raise ValueError("mixed_state_embed expects a coarse-grained (two-block) matrix")
    vals = np.zeros((grid.n_z, grid.n_p), dtype=complex)
    for (j, b), (_, blk, h) in zip(block_indices(grid), rho.blocks()):
        sigma = sqrt_psd(blk * h) / h
        vals[j, b] = sigma
    psi_t = PositionBasisWaveFunction(Field2D(grid, vals, "zr"))
    return inverse_partial_fourier(psi_t)


def momentum_trace_coarse_grain(psi: ClassicalWaveFunction) -> DensityMatrix:
    """rho~(z, z') = sum_p psi(z,p) psi(z',p) dp/2pi on the full lattice."""
    v = np.asarray(psi.values)
    m = v @ v.conj().T * (psi.grid.dp / TWO_PI)
    return DensityMatrix(m.astype(complex), psi.grid.dz, 1)


def momentum_trace_wigner_direct(psi: ClassicalWaveFunction) -> np.ndarray:
    """Brute-force Wigner transform of the momentum-traced matrix (small grids)."""
    grid = psi.grid
    if grid.n_z * grid.n_p > DIRECT_MAX_POINTS:
        raise ConfigurationError("brute-force oracle limited to small grids")
    v = np.asarray(psi.values)
    n = grid.n_z
    out = np.zeros((n, grid.n_p))
    for j in range(n):
        for k, pk in enumerate(grid.p):
            acc = 0.0
            for bi, rb in enumerate(grid.r):
                b = bi - grid.n_p // 2
                z1, z2 = (j + b) % n, (j - b) % n
                inner = np.sum(v[z1] * np.conj(v[z2])) * grid.dp / TWO_PI
                acc += np.exp(-1j * pk * rb) * inner * grid.dr
            out[j, k] = acc.real
    return out


def extract_pure_state(rho: DensityMatrix, grid: GridSpec) -> QuantumWaveFunction:
    """Leading eigenvector of each block, phase-aligned and interleaved."""
    vecs = []
    for _, blk, h in rho.blocks():
        lam, vec = np.linalg.eigh(0.5 * (blk + blk.conj().T) * h)
        u = vec[:, -1]
        k = np.argmax(np.abs(u))
        vecs.append(u * np.exp(-1j * np.angle(u[k])) * math.sqrt(lam[-1]))
    out = np.zeros(rho.n, dtype=complex)
    s = rho.sublattices
    for par, u in enumerate(vecs):
        out[par::s] = u
    if s == 2:
        # align the odd sublattice phase to interpolate the even one smoothly
        even, odd = out[0::2], out[1::2]
        ref = 0.5 * (even + np.roll(even, -1))
        ph = np.vdot(odd, ref)
        if abs(ph) > 0:
            out[1::2] *= ph / abs(ph)
    return QuantumWaveFunction(out, grid.dz, grid.z).normalized()
