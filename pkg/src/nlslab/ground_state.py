"""Ground states and constrained scaling minima.

The stationary profile Q solves (H + 1) Q = |Q|^{2 sigma} Q with
H = -Delta_y + |y|^2 - Delta_z, normalized to frequency omega = 1.  It is
computed by a Petviashvili fixed-point iteration in the mixed basis, where
(H + 1) is diagonal.  The threshold beta = S(Q) is cross-checked against
constrained minima d^{a,b} = inf { B^{a,b}(f) : J^{a,b}(f) = 0 }, computed
by projected gradient descent on the scale-invariant extension of B^{a,b}.

Only the focusing sign is meaningful here; lam = +1 is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .functionals import (
    NONLINEAR_OVERSAMPLE,
    B_ab,
    ScaleParams,
    evaluate,
    scaling_derivative_coefficients,
)
from .lattice import (
    COEFFICIENT,
    PHYSICAL,
    Field,
    Grid,
    dealiased_hermite_rule,
    ensure_physical,
    from_coefficients,
    gaussian_field,
    linear_symbol,
    to_coefficients,
)
from .model import ModelParams, validate

__all__ = [
    "CollapseToZero",
    "GroundStateResult",
    "InvalidScalePair",
    "NonConvergence",
    "SolverError",
    "minimize_dab",
    "petviashvili",
    "project_symmetric",
]

COLLAPSE_NORM = 1e-12

ARMIJO_FACTOR = 0.5
ARMIJO_INIT_STEP = 0.1
ARMIJO_SLOPE = 1e-4
MAX_BACKTRACKS = 40
FLAT_STEPS_REQUIRED = 5


class SolverError(RuntimeError):
    """Base class for iterative-solver failures."""


class NonConvergence(SolverError):
    """Iteration budget exhausted before the stopping rule fired."""


class CollapseToZero(SolverError):
    """Iterate norm fell below the collapse threshold."""


class InvalidScalePair(ValueError):
    """The (a, b) pair is outside the admissible scaling cone."""


@dataclass(frozen=True)
class GroundStateResult:
    """Converged stationary profile and its threshold value.

    Q is real, positive, and even in y and in every z axis.  residual is
    the relative defect ||(H + 1) Q - |Q|^{2 sigma} Q|| / ||(H + 1) Q||
    in the coefficient norm.
    """

    Q: Field
    beta: float
    residual: float
    iterations: int
    converged: bool

    def as_dict(self) -> dict:
        return {
            "beta": self.beta,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _shifted_symbol(grid: Grid) -> np.ndarray:
    """(2m + 1) + |zeta|^2 + 1 on the coefficient lattice: (H + 1) diagonal."""
    return linear_symbol(grid) + 1.0


class _PowerAnalysis:
    """Dealiased analysis of |u|^{2 sigma} u and of the L^{2 sigma + 2} integral.

    Field values are re-expanded on an oversampled Gauss-Hermite rule before
    the pointwise power, so the analysis onto the M-mode band is free of the
    degree-(2 sigma + 2) M aliasing of the base rule.
    """

    def __init__(self, grid: Grid, sigma: float, factor: int = NONLINEAR_OVERSAMPLE):
        self.grid = grid
        self.sigma = sigma
        self.hvals, self.hweights = dealiased_hermite_rule(grid, factor)
        self.hanalysis = self.hvals * self.hweights
        self.points = 1
        for n, _ in grid.z_axes:
            self.points *= n

    def fine_values(self, phys_data: np.ndarray) -> np.ndarray:
        per_z = np.tensordot(self.grid.analysis, phys_data, axes=([1], [0]))
        return np.tensordot(self.hvals, per_z, axes=([0], [0]))

    def power_integral(self, fine: np.ndarray) -> float:
        """integral of |u|^{2 sigma + 2} from oversampled values."""
        dens = (fine * np.conj(fine)).real
        return float(
            np.tensordot(self.hweights, dens ** (self.sigma + 1.0), axes=([0], [0])).sum()
            * self.grid.cell_volume
        )

    def power_coefficients(self, fine: np.ndarray) -> np.ndarray:
        """Band coefficients of |u|^{2 sigma} u from oversampled values."""
        dens = (fine * np.conj(fine)).real
        nl = dens**self.sigma * fine
        per_z = np.tensordot(self.hanalysis, nl, axes=([1], [0]))
        c = np.fft.fftn(per_z, axes=self.grid.z_axis_ids) / self.points
        c *= self.grid.centering_signs()
        return c


def project_symmetric(f: Field) -> Field:
    """Project onto real fields, even in y and in every z axis.

    The fixed-point map and the descent flow both preserve this subspace
    and the minimizers live in it; projecting each step removes numerical
    drift into odd or imaginary directions.
    """
    phys = ensure_physical(f)
    data = phys.data.real.astype(np.complex128)
    for axis in range(1, data.ndim):
        # z_j = -L/2 + j dz, so reflection is flip followed by roll(1)
        data = 0.5 * (data + np.roll(np.flip(data, axis=axis), 1, axis=axis))
    coeffs = to_coefficients(phys.with_data(data, PHYSICAL))
    cdat = coeffs.data
    cdat[1::2] = 0.0
    out = from_coefficients(coeffs.with_data(cdat))
    return out.with_data(out.data.real.astype(np.complex128))


def _quadrature_norm_sq(grid: Grid, data: np.ndarray) -> float:
    dens = (data * np.conj(data)).real
    return float(np.tensordot(grid.weights, dens, axes=(0, 0)).sum() * grid.cell_volume)


def petviashvili(
    params: ModelParams,
    grid: Grid,
    guess: Optional[Field] = None,
    tol: float = 1e-12,
    max_iter: int = 1000,
) -> GroundStateResult:
    """Compute the ground state by Petviashvili iteration.

    Each step applies u -> gamma (H + 1)^{-1} [ |u|^{2 sigma} u ] with the
    stabilizing exponent gamma = (<(H + 1) u, u> / <|u|^{2 sigma} u, u>)
    raised to (2 sigma + 1)/(2 sigma).  Stops when the relative L^2 change
    between successive iterates falls below tol.

    Raises NonConvergence after max_iter steps, CollapseToZero if the
    iterate norm drops below 1e-12, and ValueError for defocusing input.
    """
    validate(params)
    if params.lam != -1:
        raise ValueError("ground states require the focusing sign (lambda = -1)")
    if guess is None:
        guess = gaussian_field(params, grid)

    sigma = float(params.sigma)
    gamma_exp = (2.0 * sigma + 1.0) / (2.0 * sigma)
    symbol = _shifted_symbol(grid)
    power = _PowerAnalysis(grid, sigma)
    box = grid.box_volume

    u = project_symmetric(guess)
    if np.sqrt(_quadrature_norm_sq(grid, u.data)) < COLLAPSE_NORM:
        raise CollapseToZero("initial guess has vanishing norm")

    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        fine = power.fine_values(u.data)
        c_nl = power.power_coefficients(fine)
        c_u = to_coefficients(u).data

        quad_b = box * float(np.sum(symbol * np.abs(c_u) ** 2))
        pairing = power.power_integral(fine)
        if pairing <= 0.0:
            raise CollapseToZero("nonlinear pairing vanished")
        gamma = (quad_b / pairing) ** gamma_exp

        solved = from_coefficients(
            u.with_data(gamma * c_nl / symbol, representation=COEFFICIENT)
        )
        nxt = project_symmetric(solved)

        diff = np.sqrt(_quadrature_norm_sq(grid, nxt.data - u.data))
        norm = np.sqrt(_quadrature_norm_sq(grid, nxt.data))
        u = nxt
        if norm < COLLAPSE_NORM:
            raise CollapseToZero(f"iterate collapsed at step {iterations}")
        if diff <= tol * norm:
            converged = True
            break
    if not converged:
        raise NonConvergence(f"no fixed point within {max_iter} iterations")

    # pin the global sign so Q > 0
    if float(u.data.real.sum()) < 0.0:
        u = u.with_data(-u.data)

    c_u = to_coefficients(u).data
    c_nl = power.power_coefficients(power.fine_values(u.data))
    defect = symbol * c_u - c_nl
    residual = float(
        np.sqrt(np.sum(np.abs(defect) ** 2) / np.sum(np.abs(symbol * c_u) ** 2))
    )

    return GroundStateResult(
        Q=u,
        beta=evaluate(u).S,
        residual=residual,
        iterations=iterations,
        converged=True,
    )


class _ConstraintProblem:
    """Coefficient-space workspace for the constrained minimization.

    On the constraint set {J^{a,b} = 0} the functional B^{a,b} equals the
    scale-invariant extension F(u) = r(u)^{1/sigma} B(u) with
    r = QuadJ / (kappa3 L), where QuadJ is the quadratic part of J and L
    the L^{2 sigma + 2} integral.  Descent on F stays inside the cone
    QuadJ > 0 and every accepted step is rescaled back onto the constraint.
    """

    def __init__(self, params: ModelParams, grid: Grid, a: float, b: float):
        self.params = params
        self.grid = grid
        self.sigma = float(params.sigma)
        k = params.free_dim

        kap1, kap2, kap3 = scaling_derivative_coefficients(params, a, b)
        denom = a * (2.0 * self.sigma + 2.0) + b * k
        alpha1 = 0.5 * (1.0 - (2.0 * a + b * k) / denom)
        alpha2 = 0.5 * (1.0 - (2.0 * a + b * (k - 2.0)) / denom)
        self.kap3 = kap3

        harmonic = np.zeros(grid.shape)
        harmonic += (2.0 * np.arange(grid.hermite_modes) + 2.0).reshape(
            (-1,) + (1,) * grid.free_dim
        )
        zsq = np.zeros(grid.shape)
        for axis, zeta in zip(grid.z_axis_ids, grid.wavenumbers):
            shape = [1] * (grid.free_dim + 1)
            shape[axis] = zeta.size
            zsq += (zeta**2).reshape(shape)
        # quadratic symbols of B and of the quadratic part of J
        self.w_b = alpha1 * harmonic + alpha2 * zsq
        self.v_j = kap1 * harmonic + kap2 * zsq
        self.precond = 1.0 / (self.w_b + 1.0)
        self.box = grid.box_volume
        self.power = _PowerAnalysis(grid, self.sigma)

    def _as_field(self, coeffs: np.ndarray) -> Field:
        return Field(self.params, self.grid, COEFFICIENT, coeffs, _copy=False)

    def physical(self, coeffs: np.ndarray) -> np.ndarray:
        return from_coefficients(self._as_field(coeffs)).data

    def quad_b(self, coeffs: np.ndarray) -> float:
        return self.box * float(np.sum(self.w_b * np.abs(coeffs) ** 2))

    def quad_j(self, coeffs: np.ndarray) -> float:
        return self.box * float(np.sum(self.v_j * np.abs(coeffs) ** 2))

    def rescale_onto_constraint(self, coeffs: np.ndarray) -> Optional[np.ndarray]:
        """Scale amplitude so J = 0; None if the trial left the cone."""
        lint = self.power.power_integral(self.power.fine_values(self.physical(coeffs)))
        qj = self.quad_j(coeffs)
        if lint <= 0.0 or qj <= 0.0:
            return None
        t = (qj / (self.kap3 * lint)) ** (1.0 / (2.0 * self.sigma))
        return t * coeffs

    def value_and_gradient(self, coeffs: np.ndarray) -> Tuple[float, np.ndarray]:
        """F and its gradient at a point already on the constraint.

        Gradients are arrays g with delta X = 2 box Re <g, delta c>."""
        fine = self.power.fine_values(self.physical(coeffs))
        lint = self.power.power_integral(fine)
        qj = self.quad_j(coeffs)
        bq = self.quad_b(coeffs)
        c_nl = self.power.power_coefficients(fine)
        grad = self.w_b * coeffs + (bq / self.sigma) * (
            self.v_j * coeffs / qj - (self.sigma + 1.0) * c_nl / lint
        )
        return bq, grad

    def symmetrize_on_constraint(self, coeffs: np.ndarray) -> Optional[np.ndarray]:
        proj = project_symmetric(self._as_field(coeffs))
        return self.rescale_onto_constraint(to_coefficients(proj).data)


def minimize_dab(
    params: ModelParams,
    grid: Grid,
    a: float,
    b: float,
    tol: float = 1e-10,
    max_iter: int = 4000,
) -> Tuple[Field, float]:
    """Minimize B^{a,b} over the constraint set {J^{a,b} = 0}.

    Projected descent: preconditioned gradient steps on the scale-invariant
    extension of B^{a,b}, each rescaled back onto the constraint, with
    Armijo backtracking (factor 0.5, initial step 0.1) and symmetry
    projection.  Returns (minimizer, dab).

    Raises InvalidScalePair for (a, b) outside the admissibility cone and
    NonConvergence if descent stalls before flatness is reached.
    """
    validate(params)
    if params.lam != -1:
        raise ValueError("scaling minima require the focusing sign (lambda = -1)")
    if not ScaleParams(a=a, b=b, lam=0.0).admissible(params):
        raise InvalidScalePair(
            f"(a, b) = ({a}, {b}) violates the admissibility cone for "
            f"sigma = {params.sigma}, d - n = {params.free_dim}"
        )

    problem = _ConstraintProblem(params, grid, a, b)

    start = project_symmetric(gaussian_field(params, grid))
    coeffs = problem.rescale_onto_constraint(to_coefficients(start).data)
    if coeffs is None:
        raise NonConvergence("initial guess cannot be scaled onto the constraint")

    value, grad = problem.value_and_gradient(coeffs)
    flat_streak = 0
    converged = False
    for _ in range(max_iter):
        direction = -problem.precond * grad
        slope = 2.0 * problem.box * float(np.sum((np.conj(grad) * direction).real))
        if slope >= 0.0:
            break

        step = ARMIJO_INIT_STEP
        trial = None
        trial_value = value
        accepted = False
        while step > ARMIJO_INIT_STEP * ARMIJO_FACTOR**MAX_BACKTRACKS:
            candidate = problem.rescale_onto_constraint(coeffs + step * direction)
            if candidate is not None:
                candidate = problem.symmetrize_on_constraint(candidate)
            if candidate is not None:
                candidate_value = problem.quad_b(candidate)
                if candidate_value <= value + ARMIJO_SLOPE * step * slope:
                    trial, trial_value, accepted = candidate, candidate_value, True
                    break
            step *= ARMIJO_FACTOR
        if not accepted:
            break

        drop = value - trial_value
        coeffs = trial
        value, grad = problem.value_and_gradient(coeffs)
        if drop <= tol * max(value, 1.0):
            flat_streak += 1
            if flat_streak >= FLAT_STEPS_REQUIRED:
                converged = True
                break
        else:
            flat_streak = 0

    if not converged:
        # a stalled line search at a flat point still counts as converged
        grad_scale = 2.0 * problem.box * float(
            np.sum((np.conj(grad) * problem.precond * grad).real)
        )
        if grad_scale > np.sqrt(tol) * max(value, 1.0):
            raise NonConvergence("projected descent stalled away from a minimum")

    minimizer = from_coefficients(
        Field(params, grid, COEFFICIENT, coeffs, _copy=False)
    )
    dab = B_ab(minimizer, a, b)
    action = evaluate(minimizer).S
    if not abs(action - dab) <= 1e-8 * abs(action):
        raise NonConvergence("exit identity S = B^{a,b} violated on the constraint")
    return minimizer, dab
