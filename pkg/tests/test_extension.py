from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hemiglue import circle_homeo as ch
from hemiglue.errors import DomainError, UndefinedValueError
from hemiglue.extension import (
    Gauge, beurling_ahlfors_extend, check_gauge, exp_integrability, extension_bilip,
    finite_difference_distortion, pointwise_distortion, radial_extend,
)
from hemiglue.sphere_geom import DiskPoint


def test_radial_boundary_values():
    g = ch.make_power_homeo(2, 3)
    ext = radial_extend(g)
    t = np.linspace(-3, 3, 41)
    uv = np.stack([np.cos(t), np.sin(t)], axis=1)
    out = ext.disk_map(uv)
    assert np.allclose(np.arctan2(out[:, 1], out[:, 0]), np.angle(np.exp(1j * g.lift(t))), atol=1e-12)


@given(st.floats(0.05, 0.95), st.floats(0.1, 4.0))
def test_radial_distortion_formula(r, t):
    g = ch.make_two_slope(0.5, 2.0)
    ext = radial_extend(g)
    uv = np.array([[r * np.cos(t), r * np.sin(t)]])
    k = pointwise_distortion(ext, DiskPoint(*uv[0]))
    assert k == pytest.approx(2.0)
    assert finite_difference_distortion(ext.disk_map, uv, 1e-7)[0] == pytest.approx(2.0, rel=1e-4)


def test_distortion_undefined_at_centre_for_variable_speed():
    with pytest.raises(UndefinedValueError):
        pointwise_distortion(radial_extend(ch.make_two_slope(0.5, 2.0)), DiskPoint(0.0, 0.0))
    assert pointwise_distortion(radial_extend(ch.make_rotation(0.4)), DiskPoint(0.0, 0.0)) == 1.0


def test_radial_bilip_preserved():
    b = extension_bilip(radial_extend(ch.make_two_slope(0.5, 2.0)).sphere_map, 5000)
    assert b == pytest.approx(2.0, rel=0.03)


def test_beurling_ahlfors_boundary_and_bound():
    g = ch.make_two_slope(0.5, 2.0)
    ext = beurling_ahlfors_extend(g)
    t = np.linspace(-3, 3, 13)
    uv = 0.999999 * np.stack([np.cos(t), np.sin(t)], axis=1)
    out = ext.disk_map(uv)
    assert np.allclose(np.angle(out[:, 0] + 1j * out[:, 1]), np.angle(np.exp(1j * g.lift(t))), atol=1e-4)
    r = np.linspace(0.1, 0.9, 5)
    grid = np.stack([np.outer(r, np.cos(t)).ravel(), np.outer(r, np.sin(t)).ravel()], axis=1)
    assert np.all(ext.distortion_array(grid) < 10)


def test_identity_integral_is_hemisphere_area():
    rep = exp_integrability(radial_extend(ch.make_identity()), Gauge("exp", 1.0), 64, refinements=1)
    assert rep.verdict == "finite"
    assert rep.value == pytest.approx(2 * np.pi, rel=1e-6)


def test_bilipschitz_integral_finite_and_stable():
    rep = exp_integrability(radial_extend(ch.make_two_slope(0.5, 2.0)), Gauge("exp", 1.0), 256)
    assert rep.verdict == "finite"
    assert rep.values[-1] == pytest.approx(rep.values[-2], rel=1e-2)


def test_strong_singularity_diverges():
    rep = exp_integrability(radial_extend(ch.make_power_homeo(1, 2)), Gauge("exp", 4.0), 256)
    assert rep.verdict == "divergent"


@pytest.mark.parametrize("gauge,msg", [
    (Gauge("exp", -1.0), "increasing"),
    (Gauge("table", t=(1.0, 2.0), a=(0.0, 1.0)), "three"),
    (Gauge("table", t=(1.5, 2.0, 3.0), a=(0.0, 1.0, 2.0)), "𝒜\\(1\\) = 0"),
    (Gauge("table", t=(1.0, 2.0, 3.0), a=(0.0, 2.0, 1.0)), "increasing"),
])
def test_gauge_violations(gauge, msg):
    with pytest.raises(DomainError, match=msg):
        check_gauge(gauge)


def test_table_gauge_crossover():
    gauge = Gauge("table", t=(1.0, 2.0, 4.0, 8.0), a=(0.0, 1.0, 3.0, 7.0))
    t0 = check_gauge(gauge)
    assert 1.0 <= t0 <= 8.0
