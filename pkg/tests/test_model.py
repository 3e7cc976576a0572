"""Window flags are exact rational predicates of (d, n, sigma, lambda)."""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlslab.model import ModelParams, validate

sigmas = st.fractions(min_value=Fraction(1, 100), max_value=10, max_denominator=100)


def flags(d, n, sigma, lam=-1):
    return validate(ModelParams(d=d, n=n, sigma=Fraction(sigma), lam=lam))


def test_interior_point_all_windows():
    rep = flags(3, 1, Fraction(3, 2))
    assert rep.theorem_window
    assert rep.strichartz_window
    assert rep.profile_window


def test_boundary_sigma_not_strict():
    # sigma = 2/(d-1) exactly: inside the dispersive window, outside the
    # dichotomy window (its lower bound is strict).
    rep = flags(3, 1, Fraction(1))
    assert not rep.theorem_window
    assert rep.strichartz_window


def test_d2_upper_bound_vacuous():
    rep = flags(2, 1, Fraction(3))
    assert rep.theorem_window
    assert rep.strichartz_window
    assert rep.profile_window
    # Even absurdly large powers stay below the (absent) upper bound.
    assert flags(2, 1, Fraction(1000)).theorem_window


def test_defocusing_never_in_theorem_window():
    rep = flags(3, 1, Fraction(3, 2), lam=+1)
    assert not rep.theorem_window
    assert rep.strichartz_window


def test_n2_never_in_theorem_window():
    rep = flags(3, 2, Fraction(3))
    assert not rep.theorem_window
    assert rep.profile_window


@pytest.mark.parametrize(
    "d,n,sigma,lam",
    [
        (1, 1, Fraction(1), -1),
        (6, 1, Fraction(1), -1),
        (3, 0, Fraction(1), -1),
        (3, 3, Fraction(1), -1),
        (3, 1, Fraction(0), -1),
        (3, 1, Fraction(-1, 2), -1),
        (3, 1, Fraction(1), 0),
        (3, 1, Fraction(1), 2),
    ],
)
def test_validate_rejects(d, n, sigma, lam):
    with pytest.raises(ValueError):
        validate(ModelParams(d=d, n=n, sigma=sigma, lam=lam))


@given(
    d=st.integers(min_value=2, max_value=5),
    sigma=sigmas,
)
def test_theorem_window_implies_profile_window(d, sigma):
    p = ModelParams(d=d, n=1, sigma=sigma, lam=-1)
    if p.theorem_window():
        assert p.profile_window()


@given(
    d=st.integers(min_value=2, max_value=5),
    n=st.integers(min_value=1, max_value=4),
    sigma=sigmas,
    lam=st.sampled_from([-1, 1]),
)
def test_flags_are_pure(d, n, sigma, lam):
    if not 1 <= n <= d - 1:
        return
    a = validate(ModelParams(d=d, n=n, sigma=sigma, lam=lam))
    b = validate(ModelParams(d=d, n=n, sigma=sigma, lam=lam))
    assert a == b


@given(sigma=sigmas)
def test_sigma_accepts_string_form(sigma):
    text = f"{sigma.numerator}/{sigma.denominator}"
    assert ModelParams(d=3, n=1, sigma=text, lam=-1).sigma == sigma
