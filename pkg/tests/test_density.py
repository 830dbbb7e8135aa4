from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hemiglue import circle_homeo as ch
from hemiglue.density import L_of_C, ball_area, bilip_bounds, density_sweep, f_bound, f_inverse, richardson
from hemiglue.errors import DomainError

# f values from an independent mpmath evaluation of arcsin(ε)/π + √(1−ε²)/(πε)
F_ORACLE = {0.25: 1.3132395113781659, 0.5: 0.7179955620884587, 0.75: 0.5506694767359124, 1.0: 0.5}


@pytest.mark.parametrize("eps,val", sorted(F_ORACLE.items()))
def test_f_values(eps, val):
    assert f_bound(eps) == pytest.approx(val, abs=1e-14)


def test_f_half_closed_form():
    assert f_bound(0.5) == pytest.approx(1 / 6 + math.sqrt(3) / math.pi, abs=1e-15)


def test_f_derivative_at_half():
    h = 1e-6
    assert (f_bound(0.5 + h) - f_bound(0.5 - h)) / (2 * h) == pytest.approx(-1.1026577908435841, abs=1e-6)


def test_f_inverse_oracle():
    assert f_inverse(1.0) == pytest.approx(0.3365084169183953, abs=1e-9)
    assert f_inverse(0.5) == 1.0


@given(st.floats(0.01, 1.0))
def test_f_inverse_roundtrip(eps):
    assert f_inverse(f_bound(eps)) == pytest.approx(eps, rel=1e-8)


@given(st.floats(0.5, 10.0))
def test_L_below_pi_C(c):
    assert L_of_C(c) <= math.pi * c + 1e-9


def test_f_domain():
    with pytest.raises(DomainError):
        f_bound(0.0)
    with pytest.raises(DomainError):
        f_inverse(0.4)


def test_bilip_bounds_at_half():
    b = bilip_bounds(0.5 + f_bound(0.5))
    assert b["L_C_minus_half"] == pytest.approx(2.0, rel=1e-8)


def test_richardson_exact_for_quadratic():
    r = np.array([0.2, 0.1, 0.05])
    vals = 0.7 + 3.0 * r**2
    assert np.allclose(richardson(vals, r), 0.7)


def test_identity_ball_area_is_cap():
    south, north = ball_area(ch.make_identity(), 1.0, 0.1, 120)
    cap = 2 * np.pi * (1 - np.cos(0.1))
    assert south == pytest.approx(cap / 2, rel=2e-3)
    assert north == pytest.approx(cap / 2, rel=2e-3)


def test_radius_domain():
    with pytest.raises(DomainError):
        ball_area(ch.make_identity(), 0.0, 1.0)


@pytest.mark.slow
def test_patch_density_half():
    rep = density_sweep(ch.make_density_patch(0.5), np.pi / 2, quadrature_resolution=120)
    assert rep.C1 == pytest.approx(F_ORACLE[0.5], rel=0.02)
    assert rep.C2 == pytest.approx(0.5, rel=0.02)
    assert rep.certified is False
