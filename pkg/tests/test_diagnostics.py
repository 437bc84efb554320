import numpy as np
import pytest

from phasecg.diagnostics import (coupling_term_E, factorization_check, locality_fit,
                                 purity_series, unitarity_monitor, von_neumann_residual)
from phasecg.evolution import ClassicalPropagator, PotentialSpec
from phasecg.grid import GridSpec
from phasecg.states import DensityMatrix, QuantumWaveFunction, gaussian_packet, harmonic_eigenstate
from phasecg.transforms import coarse_grain, partial_fourier, pure_state_embed


def displaced(grid, x0=1.0):
    return QuantumWaveFunction.on_grid(grid, np.exp(-(grid.z - x0) ** 2 / 2))


def test_coupling_vanishes_for_harmonic(grid):
    tilde = partial_fourier(gaussian_packet(grid, 0.5, 0.2, 1.0, 1.0))
    E = coupling_term_E(tilde, PotentialSpec.harmonic(c=1.0, b=0.3))
    assert np.max(np.abs(E)) < 1e-12


def test_coupling_is_antihermitian(grid):
    tilde = partial_fourier(gaussian_packet(grid, 0.5, 0.2, 1.0, 1.0))
    E = coupling_term_E(tilde, PotentialSpec.quartic())
    assert np.max(np.abs(E)) > 1e-3
    assert np.max(np.abs(E + E.conj().T)) < 1e-12


def test_pure_state_is_local(grid):
    tilde = partial_fourier(pure_state_embed(displaced(grid), grid))
    E = coupling_term_E(tilde, PotentialSpec.quartic())
    fit = locality_fit(E, coarse_grain(tilde))
    assert fit.residual < 1e-6


def test_mixed_state_is_not_local(grid):
    tilde = partial_fourier(gaussian_packet(grid, 0.5, 0.0, 1.0, 1.0))
    fit = locality_fit(coupling_term_E(tilde, PotentialSpec.quartic()), coarse_grain(tilde))
    assert fit.residual > 0.01


def test_exact_local_coupling_is_recovered():
    grid = GridSpec.centered(128, 20.0)
    rho = DensityMatrix.pure(QuantumWaveFunction.on_grid(grid, np.exp(-0.45 * grid.z ** 2)), 2)
    eps = grid.z ** 4 / 16
    E = (eps[:, None] - eps[None, :]) * rho.matrix
    fit = locality_fit(E, rho, cond_limit=1e12)
    assert fit.residual < 1e-8
    centre = np.abs(grid.z) <= 5
    for par in (0, 1):
        sel = centre & (np.arange(grid.n_z) % 2 == par)
        diff = fit.epsilon[sel] - eps[sel]
        assert np.ptp(diff) < 1e-6 * np.ptp(eps[sel])


def test_factorization_check(grid):
    pure = factorization_check(partial_fourier(pure_state_embed(harmonic_eigenstate(grid, 2),
                                                                grid)))
    assert pure.is_pure
    mixed = factorization_check(partial_fourier(gaussian_packet(grid, 0, 0, 1.0, 1.0)))
    assert not mixed.is_pure


def test_unitarity_monitor_harmonic(grid):
    psi = pure_state_embed(displaced(grid), grid)
    reps = unitarity_monitor(psi, PotentialSpec.harmonic(), "h_w", 1e-2, 20, sample_every=10,
                             with_locality=False)
    assert [r.time for r in reps] == pytest.approx([0.0, 0.1, 0.2])
    assert np.max(np.abs(purity_series(reps) - 1)) < 1e-10
    assert max(abs(r.trace_drift) for r in reps) < 1e-12
    assert max(r.e_norm for r in reps) < 1e-12


def test_von_neumann_residual_for_modified_law(grid):
    v = PotentialSpec.quartic()
    dt = 1e-3
    prop = ClassicalPropagator(grid, v, dt, "h_w")
    psi = pure_state_embed(displaced(grid), grid)
    states = [psi, prop.step(psi), prop.step(psi, 2)]
    rhos = [coarse_grain(partial_fourier(s)) for s in states]
    assert von_neumann_residual(*rhos, v, grid, dt) < 1e-5
    lio = ClassicalPropagator(grid, v, dt, "liouville")
    rl = [coarse_grain(partial_fourier(s)) for s in (psi, lio.step(psi), lio.step(psi, 2))]
    assert von_neumann_residual(*rl, v, grid, dt) > 10 * von_neumann_residual(*rhos, v, grid, dt)


def test_symmetric_product_state_gives_quartic_epsilon():
    from phasecg.grid import Field2D, pair_indices
    from phasecg.states import PositionBasisWaveFunction
    grid = GridSpec.centered(128, 20.0)
    x_idx, y_idx = pair_indices(grid)
    f = lambda x: np.exp(-0.45 * x ** 2)  # noqa: E731
    vals = f(grid.z[x_idx]) * f(grid.z[y_idx])
    vals /= np.sqrt(np.sum(vals ** 2) * grid.weight("zr"))
    tilde = PositionBasisWaveFunction(Field2D(grid, vals.astype(complex), "zr"))
    fit = locality_fit(coupling_term_E(tilde, PotentialSpec.quartic(c=1.0, lam=1.0)),
                       coarse_grain(tilde), cond_limit=1e12)
    target = grid.z ** 4 / 16
    centre = np.abs(grid.z) <= 5
    for par in (0, 1):
        sites = np.arange(par, grid.n_z, 2)
        d = fit.epsilon[sites][centre[sites]] - target[sites][centre[sites]]
        assert np.max(np.abs(d - d.mean())) < 1e-3 * np.max(target[sites][centre[sites]])
