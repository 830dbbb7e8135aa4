from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hemiglue import circle_homeo as ch
from hemiglue.errors import DomainError, UndefinedValueError

TWO_PI = 2 * np.pi

FAMILIES = {
    "identity": lambda: ch.make_identity(),
    "rotation": lambda: ch.make_rotation(0.7),
    "power22": lambda: ch.make_power_homeo(2, 2),
    "power12": lambda: ch.make_power_homeo(1, 2),
    "cantor": lambda: ch.make_cantor_homeo(0.5, 5),
    "singular": lambda: ch.make_singular_homeo(0.3),
    "two_slope": lambda: ch.make_two_slope(0.5, 2.0),
    "patch": lambda: ch.make_density_patch(0.25),
}


@pytest.fixture(scope="module", params=sorted(FAMILIES))
def family(request):
    return FAMILIES[request.param]()


angles = st.floats(-10.0, 10.0, allow_nan=False)


def test_lift_periodic(family):
    t = np.linspace(-7, 7, 301)
    assert np.allclose(family.lift(t + TWO_PI) - family.lift(t), TWO_PI, atol=1e-12)


def test_lift_monotone(family):
    t = np.linspace(family.origin, family.origin + TWO_PI, 20001)
    assert np.all(np.diff(family.lift(t)) >= -1e-13)


def test_inverse_roundtrip(family):
    psi = np.linspace(-3, 3, 257)
    assert np.allclose(family.lift(family.inverse(psi)), psi, atol=1e-8)


@given(angles)
def test_inverse_property_power(t):
    g = FAMILIES["power22"]()
    assert float(g.inverse(g.lift(t))) == pytest.approx(t, abs=1e-8)


def test_lebesgue_decomposition_total(family):
    dec = family.decomposition()
    assert dec.total == pytest.approx(TWO_PI, abs=1e-8)


@pytest.mark.parametrize("name,singular", [("identity", 0.0), ("cantor", 0.0), ("singular", TWO_PI), ("power12", 0.0)])
def test_singular_mass(name, singular):
    g = FAMILIES[name]()
    assert g.singular_mass == pytest.approx(singular, abs=1e-12)
    assert g.decomposition().total_singular == pytest.approx(singular, abs=1e-8)


def test_power_formula():
    # G(φ) = π h⁻¹(φ/π) with h(x) = x^α (x ≥ 0), -(-x)^β (x < 0)
    g = ch.make_power_homeo(2, 3)
    assert float(g.lift(np.pi / 4)) == pytest.approx(np.pi * 0.25**0.5)
    assert float(g.lift(-np.pi / 8)) == pytest.approx(-np.pi * 0.125 ** (1 / 3))


def test_two_slope_speeds_and_constant():
    g = ch.make_two_slope(0.5, 2.0)
    a = TWO_PI * (2.0 - 1.0) / 1.5
    assert ch.metric_speed(g, a / 2) == pytest.approx(0.5)
    assert ch.metric_speed(g, (a + TWO_PI) / 2) == pytest.approx(2.0)
    fwd, inv = ch.lipschitz_constants(g, 4096)
    assert fwd == pytest.approx(2.0, rel=1e-9)
    assert inv == pytest.approx(2.0, rel=1e-9)


def test_speed_undefined_at_kink():
    g = ch.make_two_slope(0.5, 2.0)
    with pytest.raises(UndefinedValueError):
        ch.metric_speed(g, 0.0)


def test_speed_infinite_power_is_undefined():
    with pytest.raises(UndefinedValueError):
        ch.metric_speed(ch.make_power_homeo(2, 2), 0.0)


def test_cantor_speed_zero_on_E_and_gap_value():
    m = 0.5
    g = ch.make_cantor_homeo(m, 5)
    E = ch.fat_cantor_intervals(m, 5)
    inside = np.pi * 0.5 * (E[0, 0] + E[0, 1])
    gap = np.pi * 0.5 * (E[0, 1] + E[1, 0])
    assert ch.metric_speed(g, inside) == 0.0
    assert ch.metric_speed(g, gap) == pytest.approx(1.0 / (1.0 - m))


def test_singular_speed_undefined():
    with pytest.raises(UndefinedValueError):
        ch.metric_speed(ch.make_singular_homeo(), 1.0)


@pytest.mark.parametrize("m,k", [(0.5, 1), (0.5, 4), (0.25, 6), (0.8, 3)])
def test_fat_cantor_measure(m, k):
    E = ch.fat_cantor_intervals(m, k)
    assert len(E) == 2**k
    assert np.sum(E[:, 1] - E[:, 0]) == pytest.approx(m, abs=1e-13)
    assert E[0, 0] == 0.0 and E[-1, 1] == 1.0
    assert np.all(E[1:, 0] > E[:-1, 1])


def test_cantor_zero_fraction_is_identity():
    g = ch.make_cantor_homeo(0.0, 3)
    t = np.linspace(-3, 3, 51)
    assert np.allclose(g.lift(t), t, atol=1e-12)


def test_pwl_validation():
    with pytest.raises(DomainError, match="one period"):
        ch.make_pwl_homeo([(0, 0), (1, 2), (TWO_PI, 5.0)])
    with pytest.raises(DomainError):
        ch.make_pwl_homeo([(0, 0), (1, 2), (0.5, 3), (TWO_PI, TWO_PI)])


@given(st.floats(0.2, 0.95), st.floats(1.05, 5.0))
def test_two_slope_bilip_is_max_slope(low, high):
    if high - low < 1e-3:
        return
    g = ch.make_two_slope(low, high, table_size=1024)
    assert ch.bilip_constant(g, 2048) == pytest.approx(max(high, 1 / low), rel=1e-6)


def test_compose_with_inverse_direction():
    a = ch.make_two_slope(0.5, 2.0)
    b = ch.make_rotation(0.3)
    c = ch.compose(b, a)
    t = np.linspace(-2, 2, 21)
    assert np.allclose(c.lift(t), a.lift(t) + 0.3)


def test_descriptor_roundtrip(family):
    g2 = ch.from_descriptor(family.descriptor())
    t = np.linspace(-3, 3, 97)
    assert np.allclose(g2.lift(t), family.lift(t), atol=1e-12)


def test_unknown_family():
    with pytest.raises(DomainError):
        ch.from_descriptor({"family": "nope"})


def test_binomial_cdf_self_similar():
    x = np.linspace(0, 1, 33)
    p = 0.3
    f = ch.binomial_cdf(x, p)
    assert np.allclose(ch.binomial_cdf(x / 2, p), p * f, atol=1e-12)
    assert np.allclose(ch.binomial_cdf(0.5 + x / 2, p), p + (1 - p) * f, atol=1e-12)
