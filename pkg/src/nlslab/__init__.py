"""Numerical laboratory for the nonlinear Schrodinger equation under
partial harmonic confinement.

The model is i u_t = H u + lambda |u|^{2 sigma} u on R^d = R^n_y x R^{d-n}_z
with H = -Delta_y + |y|^2 - Delta_z.  The package provides exact rational
index algebra, a Hermite/Fourier spectral lattice, conserved functionals,
ground-state solvers, a split-step propagator, and blow-up/scattering
diagnostics, wrapped in an HTTP service with a thin CLI client.
"""

from nlslab.model import ModelParams, ValidityReport, validate

__all__ = ["ModelParams", "ValidityReport", "validate"]

__version__ = "0.1.0"
