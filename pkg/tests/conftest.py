"""Shared builders: seeded smooth random fields that decay in both the
spectral and the physical sense, so boundary wrap and band-edge truncation
stay below test tolerances."""

from fractions import Fraction

import numpy as np
import pytest

from nlslab.lattice import (
    COEFFICIENT,
    Field,
    Grid,
    PHYSICAL,
    from_coefficients,
)
from nlslab.model import ModelParams


def mass_of(f: Field) -> float:
    """Physical-space L2 mass via the lattice quadrature."""
    if f.representation == PHYSICAL:
        w = f.grid.weights.reshape((-1,) + (1,) * f.grid.free_dim)
        return float((w * np.abs(f.data) ** 2).sum() * f.grid.cell_volume)
    return float((np.abs(f.data) ** 2).sum() * f.grid.box_volume)


def band_limited_field(
    params: ModelParams,
    grid: Grid,
    seed: int = 0,
    y_frac: float = 0.2,
    z_frac: float = 0.15,
    envelope_frac: float = 8.0,
    normalize: float = 1.0,
    real: bool = False,
    z_even: bool = False,
) -> Field:
    """Random coefficients with Gaussian spectral decay, then a physical
    Gaussian envelope along z (width L/envelope_frac) so the field also
    vanishes at the box edge.  Mass is scaled to `normalize` when set."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    if real:
        c = c.real.astype(np.complex128)
    m = np.arange(grid.hermite_modes, dtype=np.float64)
    c *= np.exp(-((m / (y_frac * grid.hermite_modes)) ** 2)).reshape(
        (-1,) + (1,) * grid.free_dim
    )
    for axis, zeta in zip(grid.z_axis_ids, grid.wavenumbers):
        cut = z_frac * np.abs(zeta).max()
        shape = [1] * len(grid.shape)
        shape[axis] = zeta.size
        c *= np.exp(-((zeta / cut) ** 2)).reshape(shape)
    f = from_coefficients(Field(params, grid, COEFFICIENT, c))
    data = f.data
    for mesh, (_, length) in zip(grid.z_mesh(), grid.z_axes):
        w = length / envelope_frac
        data = data * np.exp(-(mesh**2) / (2.0 * w**2))
    if z_even:
        for axis in grid.z_axis_ids:
            flipped = np.roll(np.flip(data, axis=axis), 1, axis=axis)
            data = 0.5 * (data + flipped)
    out = Field(params, grid, PHYSICAL, data, _copy=False)
    if normalize:
        out = out.with_data(out.data * np.sqrt(normalize / mass_of(out)))
    return out


@pytest.fixture
def model_2d():
    return ModelParams(d=2, n=1, sigma=Fraction(3), lam=-1)


@pytest.fixture(scope="session")
def ground_sigma3():
    """Documented (d=2, n=1, sigma=3) ground state on a z-converged grid."""
    from nlslab.ground_state import petviashvili

    params = ModelParams(d=2, n=1, sigma=Fraction(3), lam=-1)
    grid = Grid(hermite_modes=128, z_axes=((1024, 32.0),))
    return petviashvili(params, grid, tol=1e-13, max_iter=400)


@pytest.fixture(scope="session")
def ground_sigma3_coarse():
    """Same model on the small grid shared by the d^{a,b} cross-checks."""
    from nlslab.ground_state import petviashvili

    params = ModelParams(d=2, n=1, sigma=Fraction(3), lam=-1)
    grid = Grid(hermite_modes=64, z_axes=((256, 32.0),))
    return petviashvili(params, grid, tol=1e-13, max_iter=400)


@pytest.fixture
def grid_2d():
    return Grid(hermite_modes=32, z_axes=((256, 32.0),))


@pytest.fixture
def model_3d():
    return ModelParams(d=3, n=1, sigma=Fraction(3, 2), lam=-1)


@pytest.fixture
def grid_3d():
    return Grid(hermite_modes=16, z_axes=((64, 24.0), (64, 24.0)))
