"""Parameter bookkeeping and validity windows for the confined NLS model.

The equation is i u_t = H u + lambda |u|^{2 sigma} u with
H = -Delta_y + |y|^2 - Delta_z acting on R^n_y x R^{d-n}_z.  Every window
check here is an exact rational comparison; floats never enter.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

RationalLike = Union[Fraction, int, str]

HALF = Fraction(1, 2)

# Dimension range covered by the nonlinear theory and the exponent tables.
D_MIN = 2
D_MAX = 5


@dataclass(frozen=True)
class ModelParams:
    """Immutable parameter tuple (d, n, sigma, lam).

    d: total spatial dimension, 2 <= d <= 5.
    n: number of harmonically confined directions, 1 <= n <= d-1.
    sigma: nonlinearity power, exact rational > 0.
    lam: sign of the nonlinearity, -1 (focusing) or +1 (defocusing).
    """

    d: int
    n: int
    sigma: Fraction
    lam: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigma", Fraction(self.sigma))

    @property
    def free_dim(self) -> int:
        """Number of unconfined directions, d - n."""
        return self.d - self.n

    def theorem_window(self) -> bool:
        """Focusing n = 1 dichotomy window.

        Requires lam = -1, n = 1, sigma >= 1/2 and
        2/(d-1) < sigma < 2/(d-2) (upper bound vacuous for d = 2).
        """
        if self.lam != -1 or self.n != 1:
            return False
        s = self.sigma
        if s < HALF or s * (self.d - 1) <= 2:
            return False
        return self._below_energy_critical()

    def strichartz_window(self) -> bool:
        """Dispersive-estimate window 2/(d-n) <= sigma < 2/(d-2)."""
        return self.sigma * self.free_dim >= 2 and self._below_energy_critical()

    def profile_window(self) -> bool:
        """Strict mass-supercriticality in the free directions, sigma > 2/(d-n)."""
        return self.sigma * self.free_dim > 2

    def _below_energy_critical(self) -> bool:
        # For d = 2 the upper bound 2/(d-2) is read as +infinity.
        return self.d == 2 or self.sigma * (self.d - 2) < 2


@dataclass(frozen=True)
class ValidityReport:
    """Window membership flags for a parameter tuple."""

    theorem_window: bool
    strichartz_window: bool
    profile_window: bool

    def as_dict(self) -> dict:
        return {
            "theorem_window": self.theorem_window,
            "strichartz_window": self.strichartz_window,
            "profile_window": self.profile_window,
        }


def validate(params: ModelParams) -> ValidityReport:
    """Range-check a parameter tuple and compute its window flags.

    Raises ValueError when d is outside [2, 5], n is outside [1, d-1],
    sigma <= 0, or lam is not a sign.
    """
    if not isinstance(params.d, int) or not (D_MIN <= params.d <= D_MAX):
        raise ValueError(f"d must be an integer in [{D_MIN}, {D_MAX}], got {params.d!r}")
    if not isinstance(params.n, int) or not (1 <= params.n <= params.d - 1):
        raise ValueError(f"n must be an integer in [1, {params.d - 1}], got {params.n!r}")
    if params.sigma <= 0:
        raise ValueError(f"sigma must be positive, got {params.sigma}")
    if params.lam not in (-1, 1):
        raise ValueError(f"lambda must be -1 or +1, got {params.lam!r}")
    return ValidityReport(
        theorem_window=params.theorem_window(),
        strichartz_window=params.strichartz_window(),
        profile_window=params.profile_window(),
    )
