import numpy as np
import pytest

from phasecg.grid import ConfigurationError, Field2D, GridSpec
from phasecg.observables import MomentRequest, classical_expectation
from phasecg.states import (ClassicalWaveFunction, DensityMatrix, InvalidStateError,
                            QuantumWaveFunction, density_from_wavefunction, gaussian_packet,
                            harmonic_eigenstate, wavefunction_from_density)


def gaussian_w(grid, d=0.5):
    z, p = grid.mesh("zp")
    w = np.exp(-z ** 2 / (2 * d * d) - p ** 2 / (2 * d * d))
    return Field2D(grid, w / (np.sum(w) * grid.weight("zp")), "zp")


def test_root_of_gaussian_density(grid):
    psi = wavefunction_from_density(gaussian_w(grid))
    ref = gaussian_packet(grid, 0, 0, 0.5, 0.5)
    assert np.max(np.abs(psi.values - ref.values)) < 1e-12


def test_zero_density_rejected(grid):
    with pytest.raises(InvalidStateError):
        wavefunction_from_density(Field2D(grid, np.zeros((grid.n_z, grid.n_p)), "zp"))


def test_negative_density_reports_location(grid):
    w = gaussian_w(grid)
    vals = w.values.copy()
    vals[10, 3] = -1e-6
    with pytest.raises(InvalidStateError, match=r"\(10, 3\)"):
        wavefunction_from_density(w.with_values(vals))


def test_unnormalised_density_rejected(grid):
    w = gaussian_w(grid)
    with pytest.raises(InvalidStateError):
        wavefunction_from_density(w.with_values(2 * w.values))


def test_sign_field(grid):
    w = gaussian_w(grid)
    sign = np.where(grid.mesh("zp")[0] > 0, -1, 1)
    psi = wavefunction_from_density(w, sign)
    assert np.all(psi.values[grid.z > 0] <= 0)
    assert np.max(np.abs(density_from_wavefunction(psi).values - w.values)) < 1e-15
    with pytest.raises(InvalidStateError):
        wavefunction_from_density(w, np.zeros_like(sign))


def test_round_trip_is_idempotent(grid, rng):
    v = np.abs(rng.normal(size=(grid.n_z, grid.n_p)))
    v /= np.sqrt(np.sum(v ** 2) * grid.weight("zp"))
    psi = ClassicalWaveFunction.from_values(grid, v)
    w = density_from_wavefunction(psi)
    back = wavefunction_from_density(w)
    assert np.max(np.abs(back.values - psi.values)) < 1e-12
    assert np.array_equal(density_from_wavefunction(back).values, w.values) or \
        np.max(np.abs(density_from_wavefunction(back).values - w.values)) < 1e-14
    assert abs(np.sum(w.values) * grid.weight("zp") - 1) < 1e-10


def test_sign_flip_leaves_density(grid):
    psi = gaussian_packet(grid, 0.3, 0.1, 0.5, 0.7)
    flipped = ClassicalWaveFunction.from_values(grid, -psi.values)
    assert np.array_equal(density_from_wavefunction(flipped).values,
                          density_from_wavefunction(psi).values)


def test_packet_moments(grid):
    psi = gaussian_packet(grid, 0.0, 0.0, 0.5, 0.5)
    assert psi.norm() == pytest.approx(1.0, abs=1e-10)
    x2 = classical_expectation(psi, MomentRequest.monomial(2, 0))
    p2 = classical_expectation(psi, MomentRequest.monomial(0, 2))
    assert x2 == pytest.approx(0.25, abs=1e-6)
    assert p2 == pytest.approx(0.25, abs=1e-6)


def test_packet_density_matches_closed_form(grid):
    psi = gaussian_packet(grid, 0.4, -0.3, 0.6, 0.8)
    z, p = grid.mesh("zp")
    w = np.exp(-(z - 0.4) ** 2 / (2 * 0.36) - (p + 0.3) ** 2 / (2 * 0.64)) / (0.6 * 0.8)
    assert np.max(np.abs(density_from_wavefunction(psi).values - w)) < 1e-10


def test_unresolvable_or_clipped_packets(grid):
    with pytest.raises(ConfigurationError):
        gaussian_packet(grid, 0, 0, 0.05, 1.0)
    with pytest.raises(ConfigurationError):
        gaussian_packet(grid, 0, 0, 8.0, 0.5)
    with pytest.raises(ConfigurationError):
        gaussian_packet(grid, 0, 0, -1.0, 0.5)


def test_reality_tolerance(grid):
    psi = gaussian_packet(grid, 0, 0, 0.5, 0.5)
    with pytest.raises(InvalidStateError):
        ClassicalWaveFunction.from_values(grid, psi.values * (1 + 1e-6j))


def test_ground_state_closed_form(grid):
    q = harmonic_eigenstate(grid, 0)
    ref = np.pi ** -0.25 * np.exp(-grid.z ** 2 / 2)
    assert np.max(np.abs(q.values - ref)) < 1e-12


def test_first_excited_is_odd(grid):
    q = harmonic_eigenstate(grid, 1)
    i0 = np.argmin(np.abs(grid.z))
    assert grid.z[i0] == 0 and abs(q.values[i0]) < 1e-15
    assert np.max(np.abs(q.values[1:][::-1] + q.values[1:])) < 1e-12


def test_orthonormality(grid):
    states = [harmonic_eigenstate(grid, n).values for n in range(5)]
    gram = np.array([[np.vdot(a, b) * grid.dz for b in states] for a in states])
    assert np.max(np.abs(gram - np.eye(5))) < 1e-8


def test_eigenstate_limits(grid):
    with pytest.raises(ConfigurationError):
        harmonic_eigenstate(grid, 11)
    with pytest.raises(ConfigurationError):
        harmonic_eigenstate(GridSpec.centered(16, 6.0), 8)


def test_density_matrix_invariants(grid):
    q = harmonic_eigenstate(grid, 2)
    for s in (1, 2):
        rho = DensityMatrix.pure(q, s).validate()
        assert rho.trace() == pytest.approx(1, abs=1e-12)
        assert rho.purity() == pytest.approx(1, abs=1e-12)
        assert rho.fidelity(q) == pytest.approx(1, abs=1e-12)


def test_density_matrix_rejects_invalid(small_grid):
    n = small_grid.n_z
    bad = DensityMatrix(np.diag(np.r_[-1.0, np.full(n - 1, 2.0 / ((n - 1) * small_grid.dz))])
                        .astype(complex), small_grid.dz)
    with pytest.raises(InvalidStateError):
        bad.validate()
    m = np.eye(n, dtype=complex) / (n * small_grid.dz)
    m[0, 1] = 1.0
    with pytest.raises(InvalidStateError):
        DensityMatrix(m, small_grid.dz).validate()


def test_quantum_wavefunction_normalisation(grid):
    q = QuantumWaveFunction.on_grid(grid, np.exp(-grid.z ** 2) * (1 + 2j))
    assert q.norm() == pytest.approx(1, abs=1e-12)
