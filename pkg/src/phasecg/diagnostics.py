"""Coarse-grained unitarity diagnostics: environment coupling, locality fits, purity."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evolution import ClassicalPropagator, PotentialSpec
from .grid import TWO_PI, GridSpec
from .states import ClassicalWaveFunction, DensityMatrix, PositionBasisWaveFunction
from .transforms import block_amplitudes, coarse_grain, partial_fourier


@dataclass(frozen=True)
class UnitarityReport:
    time: float
    purity: float
    trace_drift: float
    e_norm: float
    locality_residual: float
    epsilon_fit: np.ndarray


def _block_sites(grid: GridSpec):
    n = grid.n_z
    return [np.arange(par, n, 2) for par in (0, 1)]


def coupling_term_E(psi_t: PositionBasisWaveFunction, potential: PotentialSpec) -> np.ndarray:
    """E(x,x') = sum_y psi~*(x',y) [W(x,y) - W(x',y)] psi~(x,y) dr.

    W(x,y) = V'((x+y)/2)(y-x) + V(x) in window coordinates.  Returned on the
    fine lattice with cross-parity entries zero.
    """
    grid = psi_t.grid
    n = grid.n_z
    out = np.zeros((n, n), dtype=complex)
    if potential.kind == "tabulated":
        raise ValueError("coupling term needs an analytic potential")
    for sites, amp in zip(_block_sites(grid), block_amplitudes(psi_t)):
        x = grid.z[sites]
        mid = 0.5 * (x[:, None] + x[None, :])
        w = _dv(potential, mid) * (x[None, :] - x[:, None]) + potential.value(x)[:, None]
        aw = amp * w
        blk = (aw @ amp.conj().T - amp @ aw.conj().T) * grid.dr
        out[np.ix_(sites, sites)] = blk
    return out


def _dv(potential: PotentialSpec, x):
    if potential.kind == "free":
        return np.zeros_like(x)
    if potential.kind == "harmonic":
        return potential.b + potential.c * x
    return potential.c * x + 0.5 * potential.lam * x ** 3


@dataclass(frozen=True)
class LocalityFit:
    epsilon: np.ndarray  # over fine sites; nan where unsupported
    residual: float
    ill_conditioned: bool
    condition: float


def locality_fit(E: np.ndarray, rho: DensityMatrix, *, support_tol: float = 1e-10,
                 cond_limit: float = 1e10) -> LocalityFit:
    """Weighted least squares for E(x,x') ~ [eps(x) - eps(x')] rho(x,x').

    Each parity block is fitted separately, with eps fixed to zero at the
    leftmost site carrying weight (blocks do not couple, so each has its own
    additive constant).  Rows are weighted by |rho|.
    """
    n = rho.n
    eps = np.full(n, np.nan)
    model = np.zeros_like(E)
    ill, worst = False, 1.0
    e_norm = np.linalg.norm(E)
    for sites, blk, _ in rho.blocks():
        e_blk = E[np.ix_(sites, sites)]
        scale = np.max(np.abs(blk))
        if scale == 0:
            continue
        ii, jj = np.nonzero((np.abs(blk) > support_tol * scale)
                            & ~np.eye(len(sites), dtype=bool))
        if len(ii) == 0:
            ill = True
            continue
        used = np.unique(np.concatenate([ii, jj]))
        col = {s: c for c, s in enumerate(used[1:])}  # used[0] is the gauge site
        nrow = len(ii)
        a = np.zeros((nrow, len(used) - 1), dtype=complex)
        rv = blk[ii, jj]
        for r_idx, (i, j) in enumerate(zip(ii, jj)):
            if i in col:
                a[r_idx, col[i]] += rv[r_idx]
            if j in col:
                a[r_idx, col[j]] -= rv[r_idx]
        target = e_blk[ii, jj]
        a_real = np.vstack([a.real, a.imag])
        t_real = np.concatenate([target.real, target.imag])
        sol = np.zeros(len(used) - 1)
        if a_real.shape[1]:
            sol, _, rank, sv = np.linalg.lstsq(a_real, t_real, rcond=None)
            cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
            worst = max(worst, cond)
            if rank < a_real.shape[1] or cond > cond_limit:
                ill = True
        local = np.zeros(len(sites))
        local[used[1:]] = sol
        eps[sites[used]] = local[used]
        model[np.ix_(sites, sites)] = (local[:, None] - local[None, :]) * blk
    if e_norm < 1e-12:
        residual = 0.0
    else:
        residual = float(np.linalg.norm(E - model) / e_norm)
    return LocalityFit(eps, residual, ill, worst)


@dataclass(frozen=True)
class FactorizationReport:
    purity: float
    best_rank1_fidelity: float

    @property
    def is_pure(self) -> bool:
        return self.purity > 1 - 1e-6 and self.best_rank1_fidelity > 1 - 1e-6


def factorization_check(psi_t: PositionBasisWaveFunction) -> FactorizationReport:
    rho = coarse_grain(psi_t)
    lead = np.mean([ev[0] for ev in rho.eigenvalues()])
    return FactorizationReport(rho.purity(), float(lead))


def unitarity_monitor(psi: ClassicalWaveFunction, potential: PotentialSpec, law: str,
                      dt: float, n_steps: int, sample_every: int = 1, *,
                      with_locality: bool = True) -> list[UnitarityReport]:
    grid = psi.grid
    prop = ClassicalPropagator(grid, potential, dt, law)
    v = np.asarray(psi.values, dtype=complex)
    reports = []
    tr0 = None
    for step in range(n_steps + 1):
        if step > 0:
            v = prop.step_values(v)
        if step % sample_every and step != n_steps:
            continue
        state = ClassicalWaveFunction.from_values(grid, v.real, check=False)
        psi_t = partial_fourier(state)
        rho = coarse_grain(psi_t)
        tr = rho.trace()
        tr0 = tr if tr0 is None else tr0
        if potential.kind == "tabulated":
            e_norm, res, eps = math.nan, math.nan, np.full(grid.n_z, np.nan)
        else:
            E = coupling_term_E(psi_t, potential)
            e_norm = float(np.linalg.norm(E) * grid.dz * grid.dr)
            if with_locality:
                fit = locality_fit(E, rho)
                res, eps = fit.residual, fit.epsilon
            else:
                res, eps = math.nan, np.full(grid.n_z, np.nan)
        reports.append(UnitarityReport(step * dt, rho.purity(), tr - tr0, e_norm, res, eps))
    return reports


def quantum_hamiltonian_block(x: np.ndarray, h: float, potential: PotentialSpec,
                              v_values: np.ndarray) -> np.ndarray:
    n = len(x)
    k = TWO_PI * np.fft.fftfreq(n, h)
    f = np.fft.fft(np.eye(n), axis=0)
    kin = np.fft.ifft((k ** 2 / (2 * potential.mass))[:, None] * f, axis=0)
    return kin + np.diag(v_values)


def von_neumann_residual(rho_prev: DensityMatrix, rho_mid: DensityMatrix,
                         rho_next: DensityMatrix, potential: PotentialSpec,
                         grid: GridSpec, dt: float) -> float:
    """||d_t rho + i[H_Q, rho]|| * dt relative to ||rho||, block averaged."""
    vx = potential.on_grid(grid)
    worst = 0.0
    for (sites, a, h), (_, b, _), (_, c, _) in zip(rho_prev.blocks(), rho_mid.blocks(),
                                                    rho_next.blocks()):
        H = quantum_hamiltonian_block(grid.z[sites], h, potential, vx[sites])
        bh = b * h
        lhs = (c - a) * h / (2 * dt) + 1j * (H @ bh - bh @ H)
        worst = max(worst, float(np.linalg.norm(lhs) * dt / np.linalg.norm(bh)))
    return worst


def purity_series(reports) -> np.ndarray:
    return np.array([r.purity for r in reports])


__all__ = ["UnitarityReport", "coupling_term_E", "LocalityFit", "locality_fit",
           "FactorizationReport", "factorization_check", "unitarity_monitor",
           "von_neumann_residual", "quantum_hamiltonian_block", "purity_series"]
