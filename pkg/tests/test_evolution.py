import numpy as np
import pytest
import sympy as sp

from phasecg.grid import ConfigurationError, Field2D, GridSpec
from phasecg.evolution import (ClassicalPropagator, EvolutionConfig, PotentialSpec,
                               SchrodingerPropagator, check_stability, evolve, hw_step,
                               liouville_rhs, liouville_step, moyal_rhs, quantum_correction_C,
                               quantum_correction_from_psi)
from phasecg.observables import MomentRequest, classical_expectation
from phasecg.states import (QuantumWaveFunction, density_from_wavefunction, gaussian_packet, harmonic_eigenstate)
from phasecg.transforms import (coarse_grain, partial_fourier, pure_state_embed,
                                quantum_transform)


def test_potential_values():
    v = PotentialSpec.quartic(c=2.0, lam=0.5)
    assert v.value(2.0) == pytest.approx(2.0 * 4 / 2 + 0.5 * 16 / 8)
    h = PotentialSpec.harmonic(c=1.0, a=0.5, b=-1.0)
    assert h.value(1.0) == pytest.approx(0.5 - 1.0 + 0.5)
    assert PotentialSpec("free").value(3.0) == 0.0


def test_derivatives_match_closed_form(grid):
    v = PotentialSpec.quartic(c=1.0, lam=1.0)
    z = grid.z
    assert np.allclose(v.derivative(grid, 1), z + z ** 3 / 2, atol=1e-9)
    assert np.allclose(v.derivative(grid, 3), 3 * z, atol=1e-9)


def test_pair_difference_is_linear_for_harmonic(grid):
    v = PotentialSpec.harmonic(c=1.3, b=0.2)
    z, r = grid.mesh("zr")
    assert np.max(np.abs(v.pair_difference(grid) - (1.3 * z + 0.2) * r)) < 1e-9


def test_invalid_potentials():
    with pytest.raises(ConfigurationError):
        PotentialSpec("cubic")
    with pytest.raises(ConfigurationError):
        PotentialSpec.harmonic(mass=0.0)
    with pytest.raises(ConfigurationError):
        PotentialSpec.tabulated(np.linspace(0, 10, 32))


def test_tabulated_matches_analytic(small_grid):
    vals = np.cos(2 * np.pi * small_grid.z / small_grid.length_z)
    tab = PotentialSpec.tabulated(vals)
    assert np.allclose(tab.on_grid(small_grid), vals)
    assert np.all(np.isfinite(tab.pair_difference(small_grid)))


def test_evolution_config_validation():
    with pytest.raises(ConfigurationError):
        EvolutionConfig(dt=0.0, n_steps=10)
    with pytest.raises(ConfigurationError):
        EvolutionConfig(dt=0.01, n_steps=0)
    with pytest.raises(ConfigurationError):
        EvolutionConfig(dt=0.01, n_steps=1, law="newton")


def test_stability_guard(grid):
    assert check_stability(grid, 1.0, 1e-3) < np.pi
    with pytest.raises(ConfigurationError, match="phase guard"):
        ClassicalPropagator(grid, PotentialSpec.harmonic(), 10.0)


@pytest.mark.parametrize("law", ["liouville", "h_w"])
def test_norm_and_reality_preserved(grid, law):
    psi = gaussian_packet(grid, 1.0, 0.5, 0.6, 0.7)
    # weak quartic term keeps the tails inside the momentum window
    prop = ClassicalPropagator(grid, PotentialSpec.quartic(lam=0.1), 1e-2, law)
    v = prop.run_values(psi.values, 200)
    wt = grid.weight("zp")
    assert abs(np.sum(np.abs(v) ** 2) * wt - 1) < 1e-12
    assert np.max(np.abs(v.imag)) / np.max(np.abs(v.real)) < 1e-10


def test_laws_agree_for_harmonic(grid):
    psi = gaussian_packet(grid, 1.0, -0.5, 0.6, 0.8)
    v = PotentialSpec.harmonic()
    a = ClassicalPropagator(grid, v, 1e-2, "liouville").run_values(psi.values, 100)
    b = ClassicalPropagator(grid, v, 1e-2, "h_w").run_values(psi.values, 100)
    assert np.max(np.abs(a - b)) < 1e-12


def test_free_streaming_classical_widths(grid):
    psi = gaussian_packet(grid, 0.0, 0.0, 0.5, 0.5)
    out = liouville_step(psi, PotentialSpec("free"), 1e-2)
    for _ in range(99):
        out = liouville_step(out, PotentialSpec("free"), 1e-2)
    x2 = classical_expectation(out, MomentRequest.monomial(2, 0))
    assert x2 == pytest.approx(0.25 + 0.25 * 1.0 ** 2, rel=1e-8)


def test_harmonic_rotation_quarter_period(grid):
    psi = gaussian_packet(grid, 2.0, 0.0, 0.5, 0.5)
    n = 1571
    out = ClassicalPropagator(grid, PotentialSpec.harmonic(), np.pi / 2 / n).step(psi, n)
    assert classical_expectation(out, MomentRequest.monomial(1, 0)) == pytest.approx(0, abs=1e-6)
    assert classical_expectation(out, MomentRequest.monomial(0, 1)) == pytest.approx(-2, abs=1e-6)


def test_hw_keeps_embedded_eigenstate_stationary(grid):
    q = harmonic_eigenstate(grid, 1)
    psi = pure_state_embed(q, grid)
    prop = ClassicalPropagator(grid, PotentialSpec.harmonic(), 1e-3, "h_w")
    out = prop.step(psi, 200)
    w0 = density_from_wavefunction(psi).values
    w1 = density_from_wavefunction(out).values
    assert np.max(np.abs(w1 - w0)) / np.max(w0) < 1e-6


def test_hw_matches_schrodinger_for_quartic(grid):
    q = QuantumWaveFunction.on_grid(grid, np.exp(-(grid.z - 1) ** 2 / 2 + 0.5j * grid.z))
    v = PotentialSpec.quartic(c=1.0, lam=1.0)
    dt, n = 1e-3, 300
    rho = coarse_grain(partial_fourier(ClassicalPropagator(grid, v, dt, "h_w")
                                       .step(pure_state_embed(q, grid), n)))
    ref = SchrodingerPropagator(grid, v, dt).step(q, n)
    assert rho.fidelity(ref) > 1 - 1e-6


def test_liouville_loses_purity_for_quartic(grid):
    q = QuantumWaveFunction.on_grid(grid, np.exp(-(grid.z - 1) ** 2 / 2))
    out = ClassicalPropagator(grid, PotentialSpec.quartic(), 1e-2, "liouville").step(
        pure_state_embed(q, grid), 100)
    assert coarse_grain(partial_fourier(out)).purity() < 0.999


def test_schrodinger_ground_state_phase(grid):
    q = harmonic_eigenstate(grid, 0)
    out = SchrodingerPropagator(grid, PotentialSpec.harmonic(), 1e-3).step(q, 1000)
    overlap = np.vdot(q.values, out.values) * grid.dz
    assert abs(overlap) == pytest.approx(1, abs=1e-8)
    assert np.angle(overlap) == pytest.approx(-0.5, abs=1e-6)


def test_evolve_yields_samples():
    psi = gaussian_packet(GridSpec.centered(64, 12.0), 0, 0, 0.6, 0.9)
    steps = [s for s, _, _ in evolve(psi, PotentialSpec.harmonic(),
                                     EvolutionConfig(1e-2, 10), sample_every=4)]
    assert steps == [0, 4, 8, 10]
    assert hw_step(psi, PotentialSpec.harmonic(), 1e-2).norm() == pytest.approx(1, abs=1e-12)


def test_liouville_rhs_matches_propagator(grid):
    psi = gaussian_packet(grid, 0.5, 0.3, 0.6, 0.7)
    v = PotentialSpec.quartic()
    w0 = density_from_wavefunction(psi)
    dt = 1e-4
    p = ClassicalPropagator(grid, v, dt, "liouville")
    wp = np.real(p.step_values(psi.values)) ** 2
    wm = np.real(ClassicalPropagator(grid, v, -dt, "liouville").step_values(psi.values)) ** 2
    fd = (wp - wm) / (2 * dt)
    rhs = np.real(liouville_rhs(w0, v))
    assert np.max(np.abs(fd - rhs)) / np.max(np.abs(rhs)) < 1e-6


def test_moyal_truncation_is_exact_for_quartic(grid):
    wig = quantum_transform(gaussian_packet(grid, 0.5, 0.3, 0.6, 0.7))
    v = PotentialSpec.quartic()
    exact = moyal_rhs(wig, v, "exact")
    third = moyal_rhs(wig, v, 3)
    first = moyal_rhs(wig, v, 1)
    assert np.max(np.abs(exact - third)) / np.max(np.abs(exact)) < 1e-10
    assert np.max(np.abs(exact - first)) / np.max(np.abs(exact)) > 1e-4
    with pytest.raises(ValueError):
        moyal_rhs(wig, v, 2)


def test_correction_two_evaluations_agree(grid):
    psi = gaussian_packet(grid, 0.5, 0.3, 0.6, 0.7)
    v = PotentialSpec.quartic(lam=1.0)
    c = quantum_correction_C(density_from_wavefunction(psi), v)
    ind = quantum_correction_from_psi(psi, v)
    assert c.masked_fraction < 0.01 and c.warning is None
    assert np.max(np.abs(c.values - ind)) / np.max(np.abs(ind)) < 1e-6


def test_correction_vanishes_without_quartic_term(grid):
    w = density_from_wavefunction(gaussian_packet(grid, 0, 0, 0.6, 0.7))
    assert not np.any(quantum_correction_C(w, PotentialSpec.harmonic()).values)
    with pytest.raises(ConfigurationError):
        quantum_correction_C(w, PotentialSpec.tabulated(np.zeros(grid.n_z)))


def test_correction_masks_zero_density(small_grid):
    z, p = small_grid.mesh("zp")
    w = np.where(p > 0, np.exp(-z ** 2 - p ** 2), 0.0)
    with pytest.warns(RuntimeWarning, match="masked fraction"):
        res = quantum_correction_C(Field2D(small_grid, w, "zp"), PotentialSpec.quartic())
    assert res.masked_fraction > 0.01
    assert np.all(np.isfinite(res.values))


def test_correction_formula_symbolically():
    p, lam, z = sp.symbols("p lam z")
    psi = sp.Function("psi")(p)
    w = psi ** 2
    u = sp.log(w)
    log_form = (sp.diff(u, p, 3) + sp.Rational(3, 2) * sp.diff(u, p, 2) * sp.diff(u, p)
                + sp.Rational(1, 4) * sp.diff(u, p) ** 3) * w
    expanded = (sp.diff(w, p, 3) - sp.Rational(3, 2) * sp.diff(w, p) * sp.diff(w, p, 2) / w
                + sp.Rational(3, 4) * sp.diff(w, p) ** 3 / w ** 2)
    assert sp.simplify(log_form - expanded) == 0
    assert sp.simplify(-lam / 8 * z * expanded + lam / 4 * z * psi * sp.diff(psi, p, 3)) == 0
