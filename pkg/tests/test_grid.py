import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasecg.grid import (ConfigurationError, Field2D, GridSpec, axis_fourier, block_indices,
                          boundary_mass, check_boundary, integrate, pair_indices,
                          spectral_derivative, spectral_tail_fraction)


def test_spacing_rules(grid):
    assert grid.dr == 2 * grid.dz
    assert np.isclose(grid.dp * grid.dr * grid.n_p, 2 * np.pi, rtol=0, atol=1e-14)
    assert grid.p[grid.n_p // 2] == 0 and grid.r[grid.n_p // 2] == 0


@pytest.mark.parametrize("n_z,n_p", [(100, 50), (64, 24), (64, 64), (2, 1)])
def test_rejects_bad_sizes(n_z, n_p):
    with pytest.raises(ConfigurationError):
        GridSpec(n_z, n_p, -1.0, 2.0)


def test_constant_field_integral(grid):
    f = Field2D(grid, np.ones((grid.n_z, grid.n_p)), "zp")
    expected = grid.length_z * grid.n_p * grid.dp / (2 * np.pi)
    assert integrate(f) == pytest.approx(expected, rel=1e-14)


def test_gaussian_and_odd_integrals(grid):
    z, p = grid.mesh("zp")
    d = 0.7
    w = np.exp(-z ** 2 / (2 * d * d) - p ** 2 / (2 * d * d)) / (d * d)
    assert integrate(Field2D(grid, w, "zp")) == pytest.approx(1.0, abs=1e-10)
    odd = p * np.exp(-z ** 2 - p ** 2)
    assert abs(integrate(Field2D(grid, odd, "zp"))) < 1e-12


def test_zr_measure(grid):
    f = Field2D(grid, np.ones((grid.n_z, grid.n_p)), "zr")
    assert integrate(f) == pytest.approx(grid.length_z * grid.n_p * grid.dr)


def test_derivative_of_sine(grid):
    z, _ = grid.mesh("zp")
    k = 2 * np.pi / grid.length_z
    f = Field2D(grid, np.sin(k * (z - grid.z_min)), "zp")
    d = spectral_derivative(f, "z").values
    assert np.max(np.abs(d - k * np.cos(k * (z - grid.z_min)))) < 1e-10


def test_derivative_of_constant(grid):
    f = Field2D(grid, np.full((grid.n_z, grid.n_p), 3.0), "zp")
    for order in (1, 2, 3):
        assert np.max(np.abs(spectral_derivative(f, "p", order).values)) < 1e-12


def test_derivative_against_finite_differences(grid):
    z, p = grid.mesh("zp")
    f = Field2D(grid, np.exp(-z ** 2 / 4 - p ** 2 / 3), "zp")
    spectral = spectral_derivative(f, "z").values
    h = grid.dz
    # fourth-order central differences
    v = f.values
    fd = (-np.roll(v, -2, 0) + 8 * np.roll(v, -1, 0) - 8 * np.roll(v, 1, 0) + np.roll(v, 2, 0)) / (12 * h)
    assert np.max(np.abs(spectral - fd)) / np.max(np.abs(spectral)) < 1e-3
    exact = -z / 2 * v
    assert np.max(np.abs(spectral - exact)) < 1e-12


def test_tail_fraction_flags_rough_fields(grid, rng):
    z, p = grid.mesh("zp")
    smooth = Field2D(grid, np.exp(-z ** 2 - p ** 2), "zp")
    rough = Field2D(grid, rng.normal(size=(grid.n_z, grid.n_p)), "zp")
    assert spectral_tail_fraction(smooth) < 1e-20
    assert spectral_tail_fraction(rough) > 0.1


def test_fourier_round_trip_and_parseval(grid, rng):
    v = rng.normal(size=(grid.n_z, grid.n_p)) + 1j * rng.normal(size=(grid.n_z, grid.n_p))
    f = Field2D(grid, v, "zp")
    g = axis_fourier(f, "p", "forward")
    assert g.axes == "zr"
    back = axis_fourier(g, "r", "inverse")
    assert np.max(np.abs(back.values - v)) < 1e-12
    n1 = integrate(f.with_values(np.abs(v) ** 2))
    n2 = integrate(g.with_values(np.abs(g.values) ** 2))
    assert n2 == pytest.approx(n1, rel=1e-12)


def test_gaussian_transform_closed_form(grid):
    z, p = grid.mesh("zp")
    dp_ = 0.6
    f = Field2D(grid, np.exp(-p ** 2 / (4 * dp_ ** 2)), "zp")
    _, r = grid.mesh("zr")
    g = axis_fourier(f, "p", "forward").values
    expected = dp_ / np.sqrt(np.pi) * np.exp(-dp_ ** 2 * r ** 2)
    assert np.max(np.abs(g - expected)) < 1e-12
    # width in r is 1 / (2 dp_)
    prof = np.abs(g[0]) ** 2
    width = np.sqrt(np.sum(grid.r ** 2 * prof) / np.sum(prof))
    assert width == pytest.approx(1 / (2 * dp_), rel=1e-8)


def test_single_mode_maps_to_single_bin(grid):
    z, p = grid.mesh("zp")
    k = 5
    v = np.exp(-1j * grid.p[None, :] * grid.r[k]) * np.ones((grid.n_z, 1))
    g = axis_fourier(Field2D(grid, v, "zp"), "p", "forward").values
    nz = np.abs(g[0]) > 1e-10
    assert nz.sum() == 1 and np.argmax(nz) == k


def test_wrong_axis_rejected(grid):
    f = Field2D(grid, np.zeros((grid.n_z, grid.n_p)), "zr")
    with pytest.raises(ValueError):
        axis_fourier(f, "p", "forward")
    with pytest.raises(ValueError):
        axis_fourier(f, "z", "inverse")


def test_derivative_commutes_with_fourier(grid, rng):
    z, p = grid.mesh("zp")
    f = Field2D(grid, np.exp(-z ** 2 / 3 - p ** 2 / 2) * (1 + 0.2 * np.cos(p)), "zp")
    a = axis_fourier(spectral_derivative(f, "z"), "p", "forward").values
    b = spectral_derivative(axis_fourier(f, "p", "forward"), "z").values
    assert np.max(np.abs(a - b)) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2 ** 31 - 1))
def test_kernels_are_linear(alpha, beta, seed):
    grid = GridSpec.centered(32, 8.0)
    r = np.random.default_rng(seed)
    f, g = (r.normal(size=(32, 16)) for _ in range(2))
    F, G = Field2D(grid, f, "zp"), Field2D(grid, g, "zp")
    H = Field2D(grid, alpha * f + beta * g, "zp")
    for op in (lambda x: spectral_derivative(x, "z", 2), lambda x: axis_fourier(x, "p", "forward")):
        lhs = op(H).values
        rhs = alpha * op(F).values + beta * op(G).values
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * (1 + np.max(np.abs(rhs)))


def test_pair_maps_are_consistent(small_grid):
    x_idx, y_idx = pair_indices(small_grid)
    seen = set()
    for par, (j, b) in enumerate(block_indices(small_grid)):
        xs = x_idx[j, b]
        ys = y_idx[j, b]
        sites = np.arange(par, small_grid.n_z, 2)
        assert np.array_equal(xs, np.repeat(sites[:, None], len(sites), 1))
        assert np.array_equal(ys, np.repeat(sites[None, :], len(sites), 0))
        seen.update(zip(j.ravel().tolist(), b.ravel().tolist()))
    assert len(seen) == small_grid.n_z * small_grid.n_p


def test_boundary_warning(grid):
    z, p = grid.mesh("zp")
    wide = Field2D(grid, np.exp(-z ** 2 / 200), "zp")
    assert boundary_mass(wide) > 1e-10
    with pytest.warns(RuntimeWarning):
        check_boundary(wide)
