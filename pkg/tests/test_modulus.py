from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hemiglue import circle_homeo as ch
from hemiglue.errors import DomainError, InfeasibleError
from hemiglue.mesh import WeightedMesh
from hemiglue.modulus import (
    RECIPROCAL_FLOOR, annulus_capacity_profile, annulus_mesh, annulus_problem, check_quadrilateral,
    collapsed_plane_mesh, discrete_uniformizer, glued_sphere_mesh, horizontal_length, node_problem,
    path_rho_length, quadrilateral_problem, reciprocality_product, rectangle_mesh, rectangle_sides,
    solve_modulus, sphere_annulus_modulus, tensor_mesh, vertex_at,
)


def rect(a, b, nx, ny):
    mesh = rectangle_mesh(a, b, nx, ny)
    return mesh, rectangle_sides(mesh)


@pytest.mark.parametrize("a,b", [(1, 1), (1, 2), (1, 4), (3, 1)])
def test_rectangle_modulus(a, b):
    mesh, sides = rect(a, b, 40, 40)
    assert solve_modulus(quadrilateral_problem(mesh, sides)).value == pytest.approx(b / a, rel=1e-9)


def test_potential_is_linear_on_rectangle():
    mesh, sides = rect(2.0, 1.0, 20, 10)
    sol = solve_modulus(quadrilateral_problem(mesh, sides))
    assert np.allclose(sol.u, mesh.vertices[:, 0] / 2.0, atol=1e-12)
    assert np.allclose(sol.rho, 0.5)
    assert sol.solve_residual < 1e-10


def test_annulus_law():
    mesh = annulus_mesh(0.1, 1.0, 64, 256)
    m = solve_modulus(annulus_problem(mesh, (0, 0), 0.1, 1.0), n_paths=0).value
    assert m == pytest.approx(2 * np.pi / np.log(10.0), rel=0.03)


def test_annulus_convergence_second_order():
    ref = 2 * np.pi / np.log(10.0)
    errs = []
    for n in (8, 16):
        mesh = annulus_mesh(0.1, 1.0, n, 4 * n)
        errs.append(abs(solve_modulus(annulus_problem(mesh, (0, 0), 0.1, 1.0), n_paths=0).value - ref))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.25)


def test_exact_on_graded_square_grids():
    # linear potentials are reproduced exactly, so graded grids give 1 at every level
    def warped(n):
        x = np.linspace(0, 1, n + 1) ** 1.5
        return tensor_mesh(x, np.linspace(0, 1, n + 1))

    vals = []
    for n in (8, 16, 32):
        m = warped(n)
        vals.append(solve_modulus(quadrilateral_problem(m, rectangle_sides(m)), n_paths=0).value)
    assert all(v == pytest.approx(1.0, abs=1e-9) for v in vals)


@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0))
def test_duality_on_flat_rectangles(a, b):
    mesh, sides = rect(a, b, 12, 12)
    assert reciprocality_product(mesh, sides) == pytest.approx(1.0, rel=0.04)


@given(st.floats(0.1, 10.0))
def test_scale_invariance(s):
    mesh, sides = rect(1.0, 1.5, 10, 10)
    base = solve_modulus(quadrilateral_problem(mesh, sides), n_paths=0).value
    assert solve_modulus(quadrilateral_problem(mesh.scaled(s), sides), n_paths=0).value == pytest.approx(base, abs=1e-9)


@given(st.integers(1, 10), st.integers(0, 10))
def test_shrinking_boundary_never_increases(lo, span):
    mesh, sides = rect(1.0, 1.0, 10, 10)
    base = solve_modulus(quadrilateral_problem(mesh, sides), n_paths=0).value
    left = sides[0][lo - 1: lo + span]
    sub = solve_modulus(node_problem(mesh, left, sides[2]), n_paths=0).value
    assert sub <= base + 1e-9


@given(st.floats(0.2, 0.95))
def test_shrinking_carrier_never_increases(cut):
    mesh, sides = rect(1.0, 1.0, 10, 10)
    base = solve_modulus(quadrilateral_problem(mesh, sides), n_paths=0).value
    cy = mesh.face_coords[:, :, 1].mean(axis=1)
    sub = solve_modulus(quadrilateral_problem(mesh, sides, carrier=cy < cut), n_paths=0).value
    assert sub <= base + 1e-9


def test_admissibility_on_lattice_paths():
    n = 20
    mesh, sides = rect(1.0, 1.0, n, n)
    sol = solve_modulus(quadrilateral_problem(mesh, sides), n_paths=0)
    rng = np.random.default_rng(0)
    worst = np.inf
    for _ in range(1000):
        i, j = 0, int(rng.integers(0, n + 1))
        path = [j * (n + 1)]
        while i < n:
            step = rng.integers(0, 3)
            if step == 0 or (step == 1 and j == n) or (step == 2 and j == 0):
                i += 1
            else:
                j += 1 if step == 1 else -1
            path.append(j * (n + 1) + i)
        worst = min(worst, path_rho_length(mesh, sol.edge_rho, path))
    assert worst >= 0.98


def test_reported_residual_small():
    mesh, sides = rect(1.0, 2.0, 16, 16)
    assert solve_modulus(quadrilateral_problem(mesh, sides), n_paths=300).residual <= 0.02


def test_reciprocality_floor():
    mesh, sides = rect(1.0, 3.0, 8, 8)
    assert reciprocality_product(mesh, sides) >= RECIPROCAL_FLOOR - 0.02


def test_quadrilateral_validation():
    mesh, sides = rect(1.0, 1.0, 4, 4)
    with pytest.raises(DomainError):
        check_quadrilateral([sides[0], sides[2], sides[1], sides[3]])
    with pytest.raises(DomainError):
        check_quadrilateral(sides[:3])


def test_disconnected_sets_are_infeasible():
    mesh, sides = rect(1.0, 1.0, 4, 4)
    cx = mesh.face_coords[:, :, 0].mean(axis=1)
    with pytest.raises(InfeasibleError) as info:
        solve_modulus(quadrilateral_problem(mesh, sides, carrier=np.abs(cx - 0.5) > 0.2))
    assert info.value.modulus == 0.0


def test_overlapping_sets_rejected():
    mesh, sides = rect(1.0, 1.0, 4, 4)
    with pytest.raises(DomainError):
        node_problem(mesh, sides[0], sides[0])


def test_uniformizer_square():
    mesh, sides = rect(1.0, 1.0, 30, 30)
    U = discrete_uniformizer(mesh, sides)
    assert U.M == pytest.approx(1.0, rel=0.02)
    assert np.allclose(U.u, mesh.vertices[:, 0], atol=1e-9)
    assert np.allclose(U.v, mesh.vertices[:, 1], atol=1e-9)


@pytest.mark.parametrize("a,b", [(2.0, 1.0), (1.0, 3.0)])
def test_uniformizer_conjugacy(a, b):
    mesh, sides = rect(a, b, 40, 40)
    U = discrete_uniformizer(mesh, sides)
    assert U.M == pytest.approx(b / a, rel=0.02)
    assert U.conjugacy_error() <= 0.03


def test_uniformizer_conjugacy_on_annular_sector():
    # quadrilateral {1 <= |z| <= 2, 0 <= arg z <= π/2}: Mod(ξ1, ξ3) between the arcs
    radii = np.geomspace(1.0, 2.0, 25)
    ang = np.linspace(0.0, np.pi / 2, 41)
    base = tensor_mesh(np.log(radii), ang)
    xy = np.stack([np.exp(base.vertices[:, 0]) * np.cos(base.vertices[:, 1]),
                   np.exp(base.vertices[:, 0]) * np.sin(base.vertices[:, 1])], axis=1)
    mesh = WeightedMesh.build(xy, base.faces, markers=base.markers)
    U = discrete_uniformizer(mesh, rectangle_sides(mesh))
    assert U.M == pytest.approx((np.pi / 2) / np.log(2.0), rel=0.01)
    assert U.conjugacy_error() <= 0.03


def test_collapsed_mesh_without_E_is_euclidean():
    mesh = collapsed_plane_mesh(np.zeros((0, 2)), (0, 1, 0, 1), n_background=8)
    assert np.all(mesh.edge_length > 0)
    assert np.all(mesh.face_area > 0)
    assert mesh.total_area() == pytest.approx(1.0)


@pytest.mark.parametrize("k", [2, 4, 6])
def test_collapsed_horizontal_length(k):
    E = ch.fat_cantor_intervals(0.5, k)
    mesh = collapsed_plane_mesh(E, (0, 1, 0, 1))
    assert horizontal_length(mesh) == pytest.approx(0.5, abs=2.0**-k)


def test_strip_collapse_increases_modulus():
    E = ch.fat_cantor_intervals(0.5, 3)
    mesh = collapsed_plane_mesh(E, (0, 1, 0, 1), mode="strip", n_background=16)
    flat = collapsed_plane_mesh(np.zeros((0, 2)), (0, 1, 0, 1), mode="strip", n_background=16)
    collapsed = solve_modulus(quadrilateral_problem(mesh, rectangle_sides(mesh)), n_paths=0).value
    euclid = solve_modulus(quadrilateral_problem(flat, rectangle_sides(flat)), n_paths=0).value
    assert euclid == pytest.approx(1.0)
    # series conductance of the remaining gaps: 1/(1 - |E|)
    assert collapsed == pytest.approx(2.0, rel=1e-9)


def test_segment_collapse_exceeds_euclidean():
    E = ch.fat_cantor_intervals(0.5, 3)
    mesh = collapsed_plane_mesh(E, (0, 1, 0, 1))
    a, b = vertex_at(mesh, (0, 0)), vertex_at(mesh, (1, 0))
    collapsed = solve_modulus(node_problem(mesh, [a], [b]), n_paths=0).value
    mesh.edge_length = np.where(mesh.edge_length == 0, 1.0, mesh.edge_length)
    plain = solve_modulus(node_problem(mesh, [a], [b]), n_paths=0).value
    assert collapsed > plain > 0


def test_glued_sphere_mesh_area():
    gm = glued_sphere_mesh(ch.make_identity(), 0.0, [0.1, 0.05], background=600)
    assert gm.mesh.total_area() == pytest.approx(4 * np.pi, rel=0.01)
    assert np.all(gm.mesh.face_area > 0)


def test_identity_capacity_matches_caps():
    R = 0.5
    radii = R * 2.0 ** -np.arange(1, 6)
    prof = annulus_capacity_profile(ch.make_identity(), 0.0, R, radii)
    for r, m in prof:
        assert m == pytest.approx(sphere_annulus_modulus(r, R), rel=0.10)


def test_capacity_profile_validation():
    with pytest.raises(DomainError):
        annulus_capacity_profile(ch.make_identity(), 0.0, 0.5, [0.1, 0.2])


def test_json_dump_roundtrip():
    mesh, sides = rect(1.0, 1.0, 3, 3)
    sol = solve_modulus(quadrilateral_problem(mesh, sides), n_paths=5)
    blob = json.loads(json.dumps({"mesh": mesh.to_dict(), "solution": sol.to_dict()}))
    assert set(blob["mesh"]) >= {"vertices", "faces", "face_area", "edges", "edge_length"}
    assert blob["solution"]["modulus"] == pytest.approx(1.0)
    assert len(blob["solution"]["u"]) == mesh.n_vertices
    assert len(blob["solution"]["rho"]) == len(mesh.faces)
