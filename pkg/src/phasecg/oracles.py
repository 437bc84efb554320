"""Independent reference computations, runnable by name from the command line.

Every oracle returns an :class:`OracleResult` with a small table and a pass
flag computed at the tolerance stated in its docstring.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diagnostics import coupling_term_E
from .evolution import ClassicalPropagator, PotentialSpec, SchrodingerPropagator, moyal_rhs
from .grid import GridSpec
from .observables import (MomentRequest, classical_expectation, classical_marginals,
                          measurement_correlation, operator_symmetrized_xp,
                          quantum_expectation)
from .phase_ext import PhasedClassicalWaveFunction, phased_quantum_transform
from .states import (ClassicalWaveFunction, DensityMatrix, QuantumWaveFunction,
                     gaussian_packet, gaussian_wavefunction, harmonic_eigenstate)
from .transforms import (coarse_grain, momentum_trace_coarse_grain,
                         momentum_trace_wigner_direct, partial_fourier, pure_state_embed,
                         quantum_transform, quantum_transform_direct, wigner_of_density)

DEFAULT_GRID = GridSpec.centered(256, 40.0)


@dataclass
class OracleResult:
    name: str
    header: list
    rows: list
    passed: bool
    note: str = ""

    def table(self) -> str:
        width = 24
        out = ["  ".join(h.rjust(width) for h in self.header)]
        for row in self.rows:
            out.append("  ".join((format(v, ".12g") if isinstance(v, float) else str(v)).rjust(width)
                                 for v in row))
        out.append(f"{self.name}: {'PASS' if self.passed else 'FAIL'} {self.note}".rstrip())
        return "\n".join(out)


def _moments(wig_or_w, grid=None):
    x = classical_expectation(wig_or_w, MomentRequest.monomial(1, 0))
    p = classical_expectation(wig_or_w, MomentRequest.monomial(0, 1))
    x2 = classical_expectation(wig_or_w, MomentRequest.monomial(2, 0))
    p2 = classical_expectation(wig_or_w, MomentRequest.monomial(0, 2))
    return x, p, x2 - x * x, p2 - p * p


def width_law(grid: GridSpec = DEFAULT_GRID, deltas=(0.35, 0.5, 0.7, 1.0), tol=1e-5):
    """Quantum widths of Gaussian packets, Delta^2 + 1/(16 Delta^2), relative tol 1e-5."""
    rows, ok = [], True
    for d in deltas:
        wig = quantum_transform(gaussian_packet(grid, 0.0, 0.0, d, d))
        _, _, vx, vp = _moments(wig)
        expect = d * d + 1.0 / (16 * d * d)
        ex, ep = abs(vx / expect - 1), abs(vp / expect - 1)
        ok &= max(ex, ep) < tol
        rows.append([d, vx, vp, expect, max(ex, ep)])
    return OracleResult("width-law", ["delta", "var_x_Q", "var_p_Q", "expected", "rel_err"],
                        rows, ok)


def product_law(grid: GridSpec = DEFAULT_GRID, products=(1 / 16, 1 / 8, 1 / 4, 1 / 2, 1.0),
                tol=1e-5):
    """Quantum width product s + 1/(16 s) over a sweep of classical products s."""
    rows, ok = [], True
    for s in products:
        d = math.sqrt(s)
        wig = quantum_transform(gaussian_packet(grid, 0.0, 0.0, d, d))
        _, _, vx, vp = _moments(wig)
        prod = math.sqrt(vx * vp)
        expect = s + 1.0 / (16 * s)
        ok &= abs(prod - expect) < tol and prod >= 0.5 - 1e-6
        rows.append([s, prod, expect, abs(prod - expect)])
    return OracleResult("product-law", ["s", "product_Q", "expected", "abs_err"], rows, ok)


def random_real_state(grid: GridSpec, rng) -> ClassicalWaveFunction:
    v = rng.normal(size=(grid.n_z, grid.n_p))
    v /= math.sqrt(np.sum(v ** 2) * grid.weight("zp"))
    return ClassicalWaveFunction.from_values(grid, v)


def pipeline(sizes=(16, 32), n_states=10, seed=0, tol=1e-10):
    """Direct fourfold sum against the fast pipeline on random real states."""
    rng = np.random.default_rng(seed)
    rows, ok = [], True
    for n in sizes:
        grid = GridSpec.centered(n, n / 4.0)
        worst = 0.0
        for _ in range(n_states):
            psi = random_real_state(grid, rng)
            dev = np.max(np.abs(quantum_transform_direct(psi).values
                                - quantum_transform(psi).values))
            worst = max(worst, float(dev))
        ok &= worst < tol
        rows.append([f"{n}x{n // 2}", n_states, worst])
    return OracleResult("pipeline", ["grid", "states", "max_abs_dev"], rows, ok)


def free_spreading(grid: GridSpec = DEFAULT_GRID, sigma=0.7, mass=1.0, t_end=2.0, dt=1e-2,
                   tol=1e-5):
    """Free Gaussian: width^2(t) = width^2(0) + t^2 / (4 width^2(0) m^2)."""
    prop = SchrodingerPropagator(grid, PotentialSpec("free", mass=mass), dt)
    psi = gaussian_wavefunction(grid, 0.0, 0.0, sigma)
    rows, ok, t = [], True, 0.0
    n_sub = int(round(0.5 / dt))
    while t < t_end - 1e-12:
        psi = prop.step(psi, n_sub)
        t += n_sub * dt
        dens = np.abs(psi.values) ** 2 * grid.dz
        mean = np.sum(grid.z * dens)
        var = np.sum((grid.z - mean) ** 2 * dens)
        expect = sigma ** 2 + t ** 2 / (4 * sigma ** 2 * mass ** 2)
        ok &= abs(var - expect) < tol
        rows.append([t, var, expect, abs(var - expect)])
    return OracleResult("free-spreading", ["t", "width2", "expected", "abs_err"], rows, ok)


def characteristics(grid: GridSpec = DEFAULT_GRID, x0=1.0, p0=0.0, delta=0.5, n_steps=1000,
                    tol=1e-4):
    """Liouville flow in V = z^2/2 against an exactly rotated trajectory ensemble.

    The ensemble is the grid itself: each phase-space point carries weight
    w dz dp / 2pi and is moved along its exact trajectory.
    """
    t = math.pi / 2
    psi = gaussian_packet(grid, x0, p0, delta, delta)
    prop = ClassicalPropagator(grid, PotentialSpec.harmonic(1.0), t / n_steps, "liouville")
    out = prop.step(psi, n_steps)
    x, p, _, _ = _moments(out)
    z, pp = grid.mesh("zp")
    wt = psi.values ** 2 * grid.weight("zp")
    zt = z * math.cos(t) + pp * math.sin(t)
    pt = -z * math.sin(t) + pp * math.cos(t)
    xe, pe = float(np.sum(zt * wt)), float(np.sum(pt * wt))
    ok = abs(x - xe) < tol and abs(p - pe) < tol
    return OracleResult("characteristics", ["quantity", "propagated", "ensemble", "abs_err"],
                        [["<X_cl>", x, xe, abs(x - xe)], ["<P_cl>", p, pe, abs(p - pe)]], ok)


def coherent_state(grid: GridSpec = DEFAULT_GRID, x0=2.0, p0=1.0, dt=2 * math.pi / 4000,
                   tol=1e-6):
    """Harmonic coherent state returns to itself after one period."""
    psi0 = gaussian_wavefunction(grid, x0, p0, math.sqrt(0.5))
    prop = SchrodingerPropagator(grid, PotentialSpec.harmonic(1.0), dt)
    psi = prop.step(psi0, int(round(2 * math.pi / dt)))
    fid = abs(np.vdot(psi0.values, psi.values) * grid.dz) ** 2
    return OracleResult("coherent-state", ["period", "fidelity"], [[2 * math.pi, fid]],
                        fid > 1 - tol)


def coupling_sum(n_z=32, length=8.0, seed=1, tol=1e-10):
    """Quartic E(x,x') against an explicit loop over the polynomial kernel."""
    grid = GridSpec.centered(n_z, length)
    rng = np.random.default_rng(seed)
    psi_t = partial_fourier(random_real_state(grid, rng))
    lam = 1.0
    E = coupling_term_E(psi_t, PotentialSpec.quartic(0.7, lam))
    z, vals = grid.z, psi_t.values
    ref = np.zeros_like(E)
    half = grid.n_p // 2
    n = grid.n_z
    for x in range(n):
        for xp in range(x % 2, n, 2):
            acc = 0.0
            for y in range(x % 2, n, 2):
                bx = ((x - y) // 2 + half) % grid.n_p - half
                bxp = ((xp - y) // 2 + half) % grid.n_p - half
                a = vals[(x - bx) % n, bx + half]
                b = vals[(xp - bxp) % n, bxp + half]
                X, Xp, Y = z[x], z[xp], z[y]
                kern = lam / 16 * (2 * (X - Xp) * Y ** 3 - 2 * (X ** 3 - Xp ** 3) * Y
                                   + X ** 4 - Xp ** 4)
                acc += np.conj(b) * kern * a
            ref[x, xp] = acc * grid.dr
    dev = float(np.max(np.abs(E - ref)) / np.max(np.abs(ref)))
    return OracleResult("coupling-sum", ["grid", "rel_dev", "norm_E"],
                        [[f"{n_z}x{grid.n_p}", dev, float(np.linalg.norm(E))]], dev < tol)


def momentum_trace(n_z=16, length=6.0, seed=2, tol=1e-12):
    """Wigner transform of the momentum-traced matrix against a brute-force sum."""
    grid = GridSpec.centered(n_z, length)
    psi = random_real_state(grid, np.random.default_rng(seed))
    fast = wigner_of_density(momentum_trace_coarse_grain(psi), grid).values
    slow = momentum_trace_wigner_direct(psi)
    dev = float(np.max(np.abs(fast - slow)))
    return OracleResult("momentum-trace", ["grid", "max_abs_dev"], [[f"{n_z}x{grid.n_p}", dev]],
                        dev < tol)


def ground_wigner(grid: GridSpec = DEFAULT_GRID, tol=1e-8):
    """Oscillator ground state: Wigner function 2 exp(-z^2 - p^2)."""
    rho = DensityMatrix.pure(harmonic_eigenstate(grid, 0), 2)
    wig = wigner_of_density(rho, grid)
    z, p = grid.mesh("zp")
    dev = float(np.max(np.abs(wig.values - 2 * np.exp(-z ** 2 - p ** 2))))
    return OracleResult("ground-wigner", ["max_abs_dev"], [[dev]], dev < tol)


def translation(grid: GridSpec = DEFAULT_GRID, k0=0.75, tol=1e-8):
    """Phase alpha = 2 k0 z translates the quantum transform by k0 in momentum."""
    psi = gaussian_packet(grid, 0.0, 0.0, 0.6, 0.6)
    base = quantum_transform(psi)
    state = PhasedClassicalWaveFunction.from_classical(psi, 2 * k0 * grid.z[:, None]
                                                       * np.ones((1, grid.n_p)))
    shifted = phased_quantum_transform(state, "fast")
    rows = []
    ok = True
    for i, j in ((0, 1), (0, 2), (1, 1)):
        req = MomentRequest.monomial(i, j)
        got = quantum_expectation(shifted, req)
        # moments of the base Wigner function with p -> p + k0
        z, p = grid.mesh("zp")
        expect = float(np.sum(z ** i * (p + k0) ** j * base.values) * grid.weight("zp"))
        ok &= abs(got - expect) < tol
        rows.append([req.name, got, expect])
    return OracleResult("translation", ["moment", "phased", "shifted_base"], rows, ok)


def random_pure_state(grid: GridSpec, rng, n_modes=6) -> QuantumWaveFunction:
    c = rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)
    vals = sum(c[k] * harmonic_eigenstate(grid, k).values for k in range(n_modes))
    return QuantumWaveFunction.on_grid(grid, vals)


def matrix_trace(grid: GridSpec = DEFAULT_GRID, n_states=10, seed=3, tol=1e-8):
    """Wigner-side z p moment against (1/2) tr({X,P} rho) on random pure states."""
    rng = np.random.default_rng(seed)
    rows, ok = [], True
    for k in range(n_states):
        pc = pure_state_embed(random_pure_state(grid, rng), grid)
        wig = quantum_transform(pc)
        rho = coarse_grain(partial_fourier(pc))
        a, b = measurement_correlation(wig), operator_symmetrized_xp(rho, grid)
        ok &= abs(a - b) < tol
        rows.append([k, a, b, abs(a - b)])
    return OracleResult("matrix-trace", ["state", "wigner", "operator", "abs_err"], rows, ok)


def convolution_marginal(grid: GridSpec = DEFAULT_GRID, tol=1e-10):
    """Classical position marginal of a pure state as a direct convolution sum."""
    q = harmonic_eigenstate(grid, 0)
    pc = pure_state_embed(q, grid)
    wx = classical_marginals(pc).x
    dens = np.abs(q.values) ** 2
    n = grid.n_z
    ref = np.array([sum(dens[(j + b) % n] * dens[(j - b) % n]
                        for b in range(-grid.n_p // 2, grid.n_p // 2)) * grid.dr
                    for j in range(n)])
    dev = float(np.max(np.abs(wx - ref)))
    gap = float(np.sum(np.abs(wx - dens)) * grid.dz)
    return OracleResult("convolution-marginal", ["max_abs_dev", "L1(w_C - w_Q)"], [[dev, gap]],
                        dev < tol and gap > 0.01)


def propagator_consistency(grid: GridSpec = DEFAULT_GRID, dts=(1e-2, 1e-3, 1e-4)):
    """Exact Moyal right-hand side against a centred difference of the hw pipeline.

    The deviation must shrink as dt^2 (observed order within 0.2 of 2).
    """
    V = PotentialSpec.quartic(1.0, 1.0)
    pc = pure_state_embed(gaussian_wavefunction(grid, 0.8, 0.3, 0.7), grid)
    rhs = moyal_rhs(quantum_transform(pc), V, "exact")
    rows, devs = [], []
    for dt in dts:
        fwd = ClassicalPropagator(grid, V, dt, "h_w").step(pc)
        bwd = ClassicalPropagator(grid, V, -dt, "h_w").step(pc)
        fd = (quantum_transform(fwd).values - quantum_transform(bwd).values) / (2 * dt)
        devs.append(float(np.max(np.abs(fd - rhs)) / np.max(np.abs(rhs))))
        order = math.log(devs[-2] / devs[-1]) / math.log(dts[-2] / dts[-1]) if len(devs) > 1 else math.nan
        rows.append([dt, devs[-1], order])
    ok = all(abs(r[2] - 2) < 0.2 for r in rows[1:])
    return OracleResult("propagator-consistency", ["dt", "rel_dev", "order"], rows, ok)


def energy_ladder(grid: GridSpec = DEFAULT_GRID, tol=1e-6):
    """Oscillator eigenstates have energies n + 1/2."""
    from .observables import energy
    V = PotentialSpec.harmonic(1.0)
    rows, ok = [], True
    for n in range(5):
        rho = coarse_grain(partial_fourier(pure_state_embed(harmonic_eigenstate(grid, n), grid)))
        e = energy(rho, V, grid)
        ok &= abs(e - (n + 0.5)) < tol
        rows.append([n, e, n + 0.5])
    return OracleResult("energy-ladder", ["n", "energy", "expected"], rows, ok)


ORACLES = {
    "width-law": width_law,
    "product-law": product_law,
    "pipeline": pipeline,
    "free-spreading": free_spreading,
    "characteristics": characteristics,
    "coherent-state": coherent_state,
    "coupling-sum": coupling_sum,
    "momentum-trace": momentum_trace,
    "ground-wigner": ground_wigner,
    "translation": translation,
    "matrix-trace": matrix_trace,
    "convolution-marginal": convolution_marginal,
    "propagator-consistency": propagator_consistency,
    "energy-ladder": energy_ladder,
}


def run_oracle(name: str) -> OracleResult:
    if name not in ORACLES:
        raise KeyError(f"unknown oracle {name!r}; choose from {', '.join(sorted(ORACLES))}")
    return ORACLES[name]()
