from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hemiglue.errors import ConfigError, DomainError, PoleError
from hemiglue.sphere_geom import (
    DiskPoint, SpherePoint, build_hemisphere_mesh, chart_to_sphere, conformal_factor, equator_xyz, sigma,
    sigma_array, sigma_to_equator, sphere_to_chart, stereo, stereo_inv,
)

unit = st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3).filter(lambda v: np.linalg.norm(v) > 0.1)


def test_sigma_right_angle():
    assert sigma(SpherePoint(1, 0, 0), SpherePoint(0, 0, 1)) == pytest.approx(np.pi / 2, abs=1e-15)


def test_sigma_oracle_value():
    # arccos(1/3) from mpmath
    a = SpherePoint.from_vector([1, 1, 1], normalize=True)
    b = SpherePoint.from_vector([1, -1, -1], normalize=True)
    assert sigma(a, b) == pytest.approx(np.pi - 1.23095941734077468, abs=1e-14)


def test_antipodes():
    assert sigma(SpherePoint(0, 0, 1), SpherePoint(0, 0, -1)) == pytest.approx(np.pi)


def test_not_unit_rejected():
    with pytest.raises(DomainError):
        SpherePoint(1.0, 1.0, 0.0)
    with pytest.raises(DomainError):
        SpherePoint.from_vector([0, 0, 0], normalize=True)


@given(unit, unit)
def test_sigma_symmetric_and_bounded(a, b):
    a = np.array(a) / np.linalg.norm(a)
    b = np.array(b) / np.linalg.norm(b)
    d = sigma_array(a, b)
    assert 0 <= d <= np.pi
    assert d == pytest.approx(float(sigma_array(b, a)), abs=1e-12)


@given(unit, unit, unit)
def test_sigma_triangle(a, b, c):
    a, b, c = (np.array(v) / np.linalg.norm(v) for v in (a, b, c))
    assert sigma_array(a, c) <= sigma_array(a, b) + sigma_array(b, c) + 1e-12


@pytest.mark.parametrize("hemi", ["south", "north"])
@given(r=st.floats(0, 0.999), t=st.floats(-np.pi, np.pi))
def test_chart_roundtrip(hemi, r, t):
    uv = np.array([r * np.cos(t), r * np.sin(t)])
    xyz = chart_to_sphere(uv, hemi)
    assert np.linalg.norm(xyz) == pytest.approx(1.0)
    assert np.allclose(sphere_to_chart(xyz, hemi), uv, atol=1e-10)
    if r < 1 and r > 0:
        assert (xyz[2] < 0) == (hemi == "south") or abs(xyz[2]) < 1e-12


def test_chart_boundary_is_equator():
    xyz = chart_to_sphere(np.array([np.cos(0.3), np.sin(0.3)]), "north")
    assert np.allclose(xyz, equator_xyz(0.3))


def test_pole_raises():
    with pytest.raises(PoleError):
        sphere_to_chart(np.array([0.0, 0.0, -1.0]), "north")
    with pytest.raises(DomainError):
        chart_to_sphere(np.zeros(2), "east")


def test_stereo_inverse_pair():
    p = DiskPoint(0.3, -0.4)
    q = stereo(stereo_inv(p))
    assert (q.u, q.v) == pytest.approx((0.3, -0.4))


def test_conformal_factor_centre_and_rim():
    assert conformal_factor(DiskPoint(0, 0)) == pytest.approx(4.0)
    assert conformal_factor(DiskPoint(1, 0)) == pytest.approx(1.0)


@given(st.floats(-np.pi, np.pi), st.floats(-1.5, 1.5), st.floats(-np.pi, np.pi))
def test_sigma_to_equator_matches_pointwise(lam, lat, phi):
    xyz = np.array([np.cos(lat) * np.cos(lam), np.cos(lat) * np.sin(lam), np.sin(lat)])
    assert sigma_to_equator(xyz, phi) == pytest.approx(float(sigma_array(xyz, equator_xyz(phi))), abs=1e-9)


@pytest.mark.parametrize("res", [8, 16, 32])
def test_hemisphere_area_converges(res):
    patch = build_hemisphere_mesh("south", res)
    err = abs(patch.mesh.total_area() - 2 * np.pi)
    assert err < 40.0 / res**2
    assert np.all(patch.points[:, 2] <= 1e-12)


def test_hemisphere_mesh_markers():
    patch = build_hemisphere_mesh("north", 8)
    eq = patch.mesh.markers["equator"]
    assert len(eq) == 32
    assert np.allclose(patch.points[eq, 2], 0.0)
    assert np.allclose(np.hypot(*patch.mesh.vertices[eq].T), 1.0)


def test_mesh_resolution_checked():
    with pytest.raises(ConfigError):
        build_hemisphere_mesh("south", 2)
