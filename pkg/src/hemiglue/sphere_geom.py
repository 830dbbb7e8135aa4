"""Round-sphere primitives: great-circle distance, stereographic charts and
polar meshes of the two closed hemispheres.

Conventions.  The north chart is the stereographic projection from the south
pole, so the origin is the north pole and the unit circle is the equator.  The
south chart is its mirror image under ``z -> -z``.  Both charts fix the
equator pointwise, hence an equator point has the same polar angle in either
chart.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ConfigError, DomainError, PoleError
from .mesh import WeightedMesh, chart_triangle_area

Hemisphere = Literal["south", "north"]
HEMISPHERES: tuple[str, str] = ("south", "north")

UNIT_TOL = 1e-12


def _check_hemisphere(tag: str) -> None:
    if tag not in HEMISPHERES:
        raise DomainError(f"hemisphere must be 'south' or 'north', got {tag!r}")


@dataclass(frozen=True)
class SpherePoint:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        vals = (self.x, self.y, self.z)
        if not all(np.isfinite(vals)):
            raise DomainError("sphere point coordinates must be finite")
        if abs(self.x * self.x + self.y * self.y + self.z * self.z - 1.0) > UNIT_TOL:
            raise DomainError(f"not a unit vector: {vals}")

    @classmethod
    def from_vector(cls, v, normalize: bool = False) -> "SpherePoint":
        v = np.asarray(v, dtype=float)
        if normalize:
            n = np.linalg.norm(v)
            if n == 0:
                raise DomainError("cannot normalize the zero vector")
            v = v / n
        return cls(float(v[0]), float(v[1]), float(v[2]))

    @classmethod
    def on_equator(cls, phi: float) -> "SpherePoint":
        return cls(float(np.cos(phi)), float(np.sin(phi)), 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class DiskPoint:
    u: float
    v: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.u) and np.isfinite(self.v)):
            raise DomainError("chart coordinates must be finite")

    @property
    def radius(self) -> float:
        return float(np.hypot(self.u, self.v))

    @property
    def angle(self) -> float:
        return float(np.arctan2(self.v, self.u))

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v])


# ---------------------------------------------------------------- distances


def sigma_array(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Great-circle distance between broadcastable arrays of unit vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    for arr in (a, b):
        if np.any(np.abs(np.einsum("...i,...i->...", arr, arr) - 1.0) > tol):
            raise DomainError("sigma expects unit vectors")
    dot = np.einsum("...i,...i->...", a, b)
    # atan2 form keeps full precision for nearly equal or antipodal points
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    return np.arctan2(cross, dot)


def sigma(a: SpherePoint, b: SpherePoint) -> float:
    """Length distance on the unit sphere."""
    if not isinstance(a, SpherePoint):
        a = SpherePoint.from_vector(a)
    if not isinstance(b, SpherePoint):
        b = SpherePoint.from_vector(b)
    return float(sigma_array(a.as_array(), b.as_array()))


def equator_xyz(phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    return np.stack([np.cos(phi), np.sin(phi), np.zeros_like(phi)], axis=-1)


def sigma_to_equator(xyz: np.ndarray, phi) -> np.ndarray:
    """σ between points ``xyz`` (..., 3) and equator points at angles ``phi``.

    With (ρ, λ) the polar coordinates of the horizontal projection of ``p``,
    cos σ = ρ cos(φ − λ) and sin² σ = z² + ρ² sin²(φ − λ); shapes broadcast.
    """
    xyz = np.asarray(xyz, dtype=float)
    rho = np.hypot(xyz[..., 0], xyz[..., 1])
    lam = np.arctan2(xyz[..., 1], xyz[..., 0])
    z = xyz[..., 2]
    delta = np.asarray(phi) - lam
    return np.arctan2(np.hypot(z, rho * np.sin(delta)), rho * np.cos(delta))


# ---------------------------------------------------------------- charts


def chart_to_sphere(uv: np.ndarray, hemisphere: str = "north") -> np.ndarray:
    """Inverse stereographic map on arrays of shape (..., 2)."""
    _check_hemisphere(hemisphere)
    uv = np.asarray(uv, dtype=float)
    r2 = uv[..., 0] ** 2 + uv[..., 1] ** 2
    d = 1.0 + r2
    z = (1.0 - r2) / d
    if hemisphere == "south":
        z = -z
    return np.stack([2 * uv[..., 0] / d, 2 * uv[..., 1] / d, z], axis=-1)


def sphere_to_chart(xyz: np.ndarray, hemisphere: str = "north") -> np.ndarray:
    """Stereographic projection of arrays of shape (..., 3)."""
    _check_hemisphere(hemisphere)
    xyz = np.asarray(xyz, dtype=float)
    z = xyz[..., 2] if hemisphere == "north" else -xyz[..., 2]
    d = 1.0 + z
    if np.any(d <= 1e-300):
        raise PoleError("stereographic chart evaluated at its projection pole")
    return np.stack([xyz[..., 0] / d, xyz[..., 1] / d], axis=-1)


def conformal_factor_array(uv: np.ndarray) -> np.ndarray:
    uv = np.asarray(uv, dtype=float)
    r2 = uv[..., 0] ** 2 + uv[..., 1] ** 2
    return 4.0 / (1.0 + r2) ** 2


def stereo_inv(p: DiskPoint) -> SpherePoint:
    return SpherePoint.from_vector(chart_to_sphere(p.as_array()), normalize=True)


def stereo(p: SpherePoint) -> DiskPoint:
    if 1.0 + p.z <= 1e-15:
        raise PoleError("the south pole has no stereographic image")
    uv = sphere_to_chart(p.as_array())
    return DiskPoint(float(uv[0]), float(uv[1]))


def conformal_factor(p: DiskPoint) -> float:
    """Area weight 4/(1+r²)² of the round metric in the stereographic chart."""
    return float(conformal_factor_array(p.as_array()))


# ---------------------------------------------------------------- meshes


@dataclass(frozen=True, eq=False)
class HemispherePatch:
    hemisphere: str
    mesh: WeightedMesh
    resolution: int
    points: np.ndarray  # sphere images of the mesh vertices

    @property
    def equator(self) -> np.ndarray:
        return self.mesh.markers["equator"]


def polar_grid(n_rings: int, n_sectors: int) -> tuple[np.ndarray, np.ndarray]:
    """Vertices and faces of the regular polar grid on the closed unit disk.

    Vertex 0 is the centre; ring ``i`` (1-based) occupies indices
    ``1 + (i-1)*n_sectors ...``.  Faces are counter-clockwise.
    """
    radii = np.arange(1, n_rings + 1) / n_rings
    ang = 2 * np.pi * np.arange(n_sectors) / n_sectors
    rr, aa = np.meshgrid(radii, ang, indexing="ij")
    ring_pts = np.stack([rr * np.cos(aa), rr * np.sin(aa)], axis=-1).reshape(-1, 2)
    verts = np.vstack([[0.0, 0.0], ring_pts])

    def idx(i, j):
        return 1 + (i - 1) * n_sectors + (j % n_sectors)

    j = np.arange(n_sectors)
    faces = [np.stack([np.zeros_like(j), idx(1, j), idx(1, j + 1)], axis=1)]
    for i in range(1, n_rings):
        a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
        faces.append(np.stack([a, b, c], axis=1))
        faces.append(np.stack([a, c, d], axis=1))
    return verts, np.vstack(faces)


def build_hemisphere_mesh(tag: str, resolution: int) -> HemispherePatch:
    """Polar mesh of a closed hemisphere in its stereographic chart.

    ``resolution`` rings and ``4*resolution`` sectors.  Face weights are the
    conformal factor at the chart centroid times the chart area; edge lengths
    are great-circle distances between the sphere images of the endpoints.
    The outer ring is flagged as ``equator`` in counter-clockwise order.
    """
    _check_hemisphere(tag)
    if int(resolution) != resolution or resolution < 4:
        raise ConfigError("hemisphere mesh resolution must be an integer >= 4")
    n_rings, n_sectors = int(resolution), 4 * int(resolution)
    verts, faces = polar_grid(n_rings, n_sectors)
    pts = chart_to_sphere(verts, tag)
    coords = verts[faces]
    area = conformal_factor_array(coords.mean(axis=1)) * chart_triangle_area(coords)
    equator = 1 + (n_rings - 1) * n_sectors + np.arange(n_sectors)
    mesh = WeightedMesh.build(
        verts,
        faces,
        face_coords=coords,
        face_area=area,
        edge_length=lambda i, j: sigma_array(pts[i], pts[j]),
        markers={"equator": equator, "center": np.array([0])},
    )
    return HemispherePatch(tag, mesh, n_rings, pts)
