"""Transform exactness, ladder operators, tail indicator, file round trips."""

import numpy as np
import pytest

from conftest import band_limited_field, mass_of
from nlslab.lattice import (
    COEFFICIENT,
    Field,
    Grid,
    PHYSICAL,
    from_coefficients,
    gaussian_field,
    gradient_y,
    gradient_z,
    multiply_y,
    read_field,
    spectral_tail,
    to_coefficients,
    write_field,
)


def test_basis_vector_maps_to_unit_coefficient(model_2d, grid_2d):
    y = grid_2d.nodes.reshape(-1, 1)
    z = grid_2d.z_coords[0].reshape(1, -1)
    length = grid_2d.z_axes[0][1]
    h0 = np.pi**-0.25 * np.exp(-(y**2) / 2)
    f = Field(model_2d, grid_2d, PHYSICAL, h0 * np.exp(2j * np.pi * z / length))
    c = to_coefficients(f)
    assert abs(c.data[0, 1] - 1.0) < 1e-12
    rest = np.abs(c.data).copy()
    rest[0, 1] = 0.0
    assert rest.max() < 1e-12


def test_zero_field_zero_coefficients(model_2d, grid_2d):
    f = Field(model_2d, grid_2d, PHYSICAL, np.zeros(grid_2d.shape))
    assert np.all(to_coefficients(f).data == 0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_round_trip_1z(model_2d, grid_2d, seed):
    f = band_limited_field(model_2d, grid_2d, seed=seed)
    rt = from_coefficients(to_coefficients(f))
    err = np.linalg.norm(rt.data - f.data) / np.linalg.norm(f.data)
    assert err < 1e-12


def test_round_trip_2z(model_3d, grid_3d):
    f = band_limited_field(model_3d, grid_3d, seed=7)
    rt = from_coefficients(to_coefficients(f))
    err = np.linalg.norm(rt.data - f.data) / np.linalg.norm(f.data)
    assert err < 1e-12


@pytest.mark.parametrize("seed", [0, 3])
def test_parseval_both_bases(model_2d, grid_2d, seed):
    f = band_limited_field(model_2d, grid_2d, seed=seed, normalize=0.0)
    phys = mass_of(f)
    coef = mass_of(to_coefficients(f))
    assert abs(phys - coef) / phys < 1e-12


def test_gradient_y_of_ground_mode(model_2d, grid_2d):
    # d/dy of pi^{-1/4} exp(-y^2/2) is -y times itself.
    y = grid_2d.nodes.reshape(-1, 1)
    h0 = (np.pi**-0.25 * np.exp(-(y**2) / 2)) * np.ones(grid_2d.shape)
    f = Field(model_2d, grid_2d, PHYSICAL, h0)
    g = gradient_y(f)
    assert np.abs(g.data + y * h0).max() < 1e-10


def test_multiply_y_norm_on_ground_mode(model_2d, grid_2d):
    y = grid_2d.nodes.reshape(-1, 1)
    z = grid_2d.z_coords[0].reshape(1, -1)
    zprof = np.exp(-(z**2) / 2) / (np.pi ** 0.25)
    h0 = (np.pi**-0.25 * np.exp(-(y**2) / 2)) * zprof
    f = Field(model_2d, grid_2d, PHYSICAL, h0)
    yf = multiply_y(f)
    assert abs(mass_of(f) - 1.0) < 1e-10
    assert abs(mass_of(yf) - 0.5) < 1e-10


def test_gradient_z_on_fourier_mode(model_2d, grid_2d):
    y = grid_2d.nodes.reshape(-1, 1)
    z = grid_2d.z_coords[0].reshape(1, -1)
    length = grid_2d.z_axes[0][1]
    f = Field(
        model_2d,
        grid_2d,
        PHYSICAL,
        np.exp(-(y**2) / 2) * np.exp(2j * np.pi * z / length),
    )
    (g,) = gradient_z(f)
    assert np.abs(g.data - (2j * np.pi / length) * f.data).max() < 1e-12


def test_gradient_z_two_axes(model_3d, grid_3d):
    f = band_limited_field(model_3d, grid_3d, seed=4)
    g1, g2 = gradient_z(f)
    assert g1.data.shape == f.data.shape
    assert g2.data.shape == f.data.shape
    assert not np.allclose(g1.data, g2.data)


def test_oscillator_coefficients_vs_collocation(model_2d, grid_2d):
    # (-d^2/dy^2 + y^2) f has coefficients (2m+1) c_m; compare with the
    # ladder-operator composition on a band-limited field.
    f = band_limited_field(model_2d, grid_2d, seed=5, y_frac=0.15)
    c = to_coefficients(f)
    m = np.arange(grid_2d.hermite_modes).reshape(-1, 1)
    via_coeff = from_coefficients(c.with_data(c.data * (2 * m + 1)))
    via_ladder = multiply_y(multiply_y(f)).data - gradient_y(gradient_y(f)).data
    rel = np.linalg.norm(via_ladder - via_coeff.data) / np.linalg.norm(via_coeff.data)
    assert rel < 1e-8


def test_spectral_tail_pure_and_zero(model_2d, grid_2d):
    f = band_limited_field(model_2d, grid_2d, seed=6)
    assert spectral_tail(f) == spectral_tail(f)
    assert spectral_tail(f) < 1e-8
    zero = Field(model_2d, grid_2d, PHYSICAL, np.zeros(grid_2d.shape))
    assert spectral_tail(zero) == 0.0


def test_grid_rejections():
    with pytest.raises(ValueError):
        Grid(hermite_modes=4, z_axes=((256, 32.0),))
    with pytest.raises(ValueError):
        Grid(hermite_modes=32, z_axes=((200, 32.0),))
    with pytest.raises(ValueError):
        Grid(hermite_modes=32, z_axes=((256, -1.0),))
    with pytest.raises(ValueError):
        Grid(hermite_modes=32, z_axes=())


def test_field_rejections(model_2d, grid_2d):
    bad = np.zeros(grid_2d.shape, dtype=np.complex128)
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        Field(model_2d, grid_2d, PHYSICAL, bad)
    bad[0, 0] = np.inf
    with pytest.raises(ValueError):
        Field(model_2d, grid_2d, PHYSICAL, bad)
    with pytest.raises(ValueError):
        Field(model_2d, grid_2d, PHYSICAL, np.zeros((3, 3)))
    with pytest.raises(ValueError):
        Field(model_2d, grid_2d, "spectral", np.zeros(grid_2d.shape))


def test_representation_guards(model_2d, grid_2d):
    f = band_limited_field(model_2d, grid_2d)
    with pytest.raises(ValueError):
        from_coefficients(f)
    with pytest.raises(ValueError):
        to_coefficients(to_coefficients(f))


def test_field_file_round_trip(tmp_path, model_2d, grid_2d):
    f = band_limited_field(model_2d, grid_2d, seed=9)
    path = tmp_path / "state.fld"
    write_field(f, path)
    g = read_field(path)
    assert g.params == f.params
    assert g.grid == f.grid
    assert g.representation == f.representation
    assert np.array_equal(g.data, f.data)


def test_field_file_round_trip_coefficients(tmp_path, model_3d, grid_3d):
    f = to_coefficients(band_limited_field(model_3d, grid_3d, seed=2))
    path = tmp_path / "state.fld"
    write_field(f, path)
    g = read_field(path)
    assert g.representation == COEFFICIENT
    assert np.array_equal(g.data, f.data)


def test_read_field_bad_magic(tmp_path):
    path = tmp_path / "junk.fld"
    path.write_bytes(b"NOTAFLD0" + b"\x00" * 64)
    with pytest.raises(ValueError):
        read_field(path)


def test_gaussian_field_mass(model_2d, grid_2d):
    # pi^{-1/2} exp(-(y^2+z^2)/2) has unit mass.
    f = gaussian_field(model_2d, grid_2d, amplitude=np.pi**-0.5)
    assert abs(mass_of(f) - 1.0) < 1e-12
