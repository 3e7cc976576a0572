"""Exact rational Strichartz index algebra for the confined model.

Everything here is Fraction arithmetic.  The lone irrational is the
small-power admissibility threshold sigma_c(d), carried as the positive
root of 2 d s^2 + (d-2) s - 2 = 0 together with a float shadow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from nlslab.model import ModelParams, RationalLike, validate


class Infinity:
    """Exponent value +infinity: reciprocal 0, Lebesgue conjugate 1."""

    _instance = None

    def __new__(cls) -> "Infinity":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Infinity"

    def __float__(self) -> float:
        return math.inf


INF = Infinity()

Exponent = Union[Fraction, Infinity]


def reciprocal(x: Exponent) -> Fraction:
    """1/x with 1/infinity = 0."""
    if isinstance(x, Infinity):
        return Fraction(0)
    return 1 / Fraction(x)


def conjugate(x: Exponent) -> Exponent:
    """Lebesgue conjugate x' = x/(x-1); fixes 2, swaps 1 and infinity."""
    if isinstance(x, Infinity):
        return Fraction(1)
    x = Fraction(x)
    if x == 1:
        return INF
    return x / (x - 1)


def rational_repr(x: Exponent) -> str:
    """Serialize an exponent as "num/den" (or "inf")."""
    if isinstance(x, Infinity):
        return "inf"
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class SigmaCritical:
    """Positive root of 2 d s^2 + (d-2) s - 2 = 0.

    Below this power the dual-pair exponent q~ would leave the admissible
    range; above it (and sigma_c(d) < 2/d always) the full index family
    is well defined.
    """

    d: int

    @property
    def coefficients(self) -> tuple:
        """(a, b, c) of a s^2 + b s + c with integer entries."""
        return (2 * self.d, self.d - 2, -2)

    @property
    def value(self) -> float:
        d = self.d
        return (2.0 - d + math.sqrt(d * d + 12.0 * d + 4.0)) / (4.0 * d)

    def residual(self, s: float) -> float:
        a, b, c = self.coefficients
        return a * s * s + b * s + c

    def as_dict(self) -> dict:
        return {
            "quadratic": list(self.coefficients),
            "value": self.value,
        }


def sigma_c(d: int) -> float:
    """Small-power threshold: the positive root of 2 d s^2 + (d-2) s - 2."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    value = SigmaCritical(d).value
    assert value < 2.0 / d
    return value


@dataclass(frozen=True)
class ExponentSet:
    """The full rational index family attached to (d, n, sigma).

    r is the Lebesgue exponent of the nonlinearity, (q0, r) and (p0, q0, r)
    are the admissible time exponents, (p, q) the large dual pair and
    (p~, q~) its conjugate companion.  s is the Sobolev index of the
    critical embedding and delta the linear decay rate in the free
    directions.
    """

    d: int
    n: int
    sigma: Fraction
    q_tilde: Fraction
    p_tilde: Fraction
    p: Fraction
    q: Fraction
    r: Fraction
    p0: Fraction
    q0: Fraction
    s: Fraction
    delta: Fraction
    sigma_c: SigmaCritical

    def as_dict(self) -> dict:
        rationals = {
            "sigma": self.sigma,
            "q_tilde": self.q_tilde,
            "p_tilde": self.p_tilde,
            "p": self.p,
            "q": self.q,
            "r": self.r,
            "p0": self.p0,
            "q0": self.q0,
            "s": self.s,
            "delta": self.delta,
        }
        out = {"d": self.d, "n": self.n}
        out.update({k: rational_repr(v) for k, v in rationals.items()})
        out["float"] = {k: float(v) for k, v in rationals.items()}
        out["sigma_c"] = self.sigma_c.as_dict()
        return out


def exponent_set(d: int, n: int, sigma: RationalLike) -> ExponentSet:
    """Build the exact index family for (d, n, sigma).

    Requires 2/(d-n) <= sigma < 2/(d-2) (upper bound vacuous for d = 2);
    out-of-window sigma raises ValueError.  All defining identities are
    asserted at construction.
    """
    sigma = Fraction(sigma)
    params = ModelParams(d=d, n=n, sigma=sigma, lam=-1)
    report = validate(params)
    if not report.strichartz_window:
        raise ValueError(
            f"sigma={sigma} outside the window 2/(d-n) <= sigma < 2/(d-2) "
            f"for d={d}, n={n}"
        )
    k = d - n
    four_ss1 = 4 * sigma * (sigma + 1)

    r = 2 * sigma + 2
    q0 = (4 * sigma + 4) / (d * sigma)
    p0 = (4 * sigma + 4) / (k * sigma)
    q = four_ss1 / (2 * sigma + 2 - d * sigma)
    p = four_ss1 / (2 * sigma + 2 - k * sigma)
    q_tilde = four_ss1 / (2 * d * sigma**2 + sigma * (d - 2) - 2)
    p_tilde = four_ss1 / (2 * d * sigma**2 + sigma * (d - 2 - n) - 2 * (n * sigma**2 + 1))
    s = Fraction(1, 2) * (Fraction(d, 2) - 1 / sigma)
    delta = k * (Fraction(1, 2) - 1 / r)

    es = ExponentSet(
        d=d,
        n=n,
        sigma=sigma,
        q_tilde=q_tilde,
        p_tilde=p_tilde,
        p=p,
        q=q,
        r=r,
        p0=p0,
        q0=q0,
        s=s,
        delta=delta,
        sigma_c=SigmaCritical(d),
    )
    _assert_identities(es)
    return es


def _assert_identities(es: ExponentSet) -> None:
    """Construction-time consistency checks, all exact."""
    sigma, d, n = es.sigma, es.d, es.n
    k = d - n
    m = 2 * sigma + 1
    # Dual pairings x = (2 sigma + 1) x~' for x in {p, q, r}.
    assert es.q == m * conjugate(es.q_tilde)
    assert es.p == m * conjugate(es.p_tilde)
    assert es.r == m * conjugate(es.r)
    # Holder splittings of the dual admissible pair.
    assert reciprocal(conjugate(es.p0)) == reciprocal(es.p0) + 2 * sigma / es.p
    assert reciprocal(conjugate(es.q0)) == reciprocal(es.q0) + 2 * sigma / es.q
    # Direct form of 1/p~ used when trading one factor for a gradient.
    assert reciprocal(es.p_tilde) == Fraction(k * (2 * sigma + 1), 4 * sigma + 4) - reciprocal(2 * sigma)
    # Sobolev index sits strictly inside (0, 1/2) above the mass-critical power.
    if sigma * d > 2:
        assert 0 < es.s < Fraction(1, 2)
    # The large exponent dominates the admissible one in the window.
    if sigma * k >= 2:
        assert es.p >= es.p0
    # (q0, r) is admissible in d dimensions, (p0, r) in the free d-n.
    assert check_admissible(es.q0, es.r, d)
    assert check_admissible(es.p0, es.r, k)


def check_admissible(q: Exponent, r: Exponent, d: int) -> bool:
    """Schrodinger admissibility: 2/q = d(1/2 - 1/r) and 2 <= r < 2d/(d-2)."""
    if isinstance(r, Infinity):
        return False
    r = Fraction(r)
    if r < 2:
        return False
    if d > 2 and r >= Fraction(2 * d, d - 2):
        return False
    return 2 * reciprocal(q) == d * (Fraction(1, 2) - reciprocal(r))


@dataclass(frozen=True)
class AcceptabilityReport:
    """Truth of each acceptable-pair condition, reported separately."""

    scaling_identity: bool
    acceptable_p: bool
    acceptable_p_tilde: bool
    duality_sum: bool

    def all_ok(self) -> bool:
        return (
            self.scaling_identity
            and self.acceptable_p
            and self.acceptable_p_tilde
            and self.duality_sum
        )

    def as_dict(self) -> dict:
        return {
            "scaling_identity": self.scaling_identity,
            "acceptable_p": self.acceptable_p,
            "acceptable_p_tilde": self.acceptable_p_tilde,
            "duality_sum": self.duality_sum,
        }


def check_acceptable(
    p: Exponent, p_tilde: Exponent, r: Exponent, d: int, n: int
) -> AcceptabilityReport:
    """Check the acceptable-pair conditions for (p, p~) against r.

    scaling_identity: 2/p + 2/p~ = (d-n)(1 - 2/r);
    acceptable_*: 1/x + (d-n)/r < (d-n)/2 for x in {p, p~};
    duality_sum: 1/p + 1/p~ < 1.
    """
    k = d - n
    ip, ipt, ir = reciprocal(p), reciprocal(p_tilde), reciprocal(r)
    return AcceptabilityReport(
        scaling_identity=(2 * ip + 2 * ipt == k * (1 - 2 * ir)),
        acceptable_p=(ip + k * ir < Fraction(k, 2)),
        acceptable_p_tilde=(ipt + k * ir < Fraction(k, 2)),
        duality_sum=(ip + ipt < 1),
    )
