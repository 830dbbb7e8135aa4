"""Triangle meshes carrying per-face area weights and per-edge lengths.

A :class:`WeightedMesh` separates combinatorics from geometry.  Each face keeps
its own corner coordinates in a conformal chart (``face_coords``); the metric
enters only through ``face_area`` and ``edge_length``.  This lets one mesh mix
charts, which is how the two hemispheres of a glued sphere share seam vertices
whose neighbourhoods live in different charts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DomainError

# corner k of a face is opposite to the edge joining the other two corners
_OPPOSITE = ((1, 2), (2, 0), (0, 1))


def chart_triangle_area(coords: np.ndarray) -> np.ndarray:
    """Unsigned areas of triangles given as an (F, 3, 2) coordinate array."""
    e1 = coords[:, 1] - coords[:, 0]
    e2 = coords[:, 2] - coords[:, 0]
    return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


@dataclass(eq=False)
class WeightedMesh:
    vertices: np.ndarray
    faces: np.ndarray
    face_area: np.ndarray
    face_coords: np.ndarray
    edges: np.ndarray
    edge_length: np.ndarray
    face_edges: np.ndarray
    markers: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        vertices: np.ndarray,
        faces: np.ndarray,
        *,
        face_coords: np.ndarray | None = None,
        face_area: np.ndarray | None = None,
        edge_length: Any = None,
        markers: dict[str, np.ndarray] | None = None,
    ) -> "WeightedMesh":
        """Assemble a mesh, deriving missing geometry from the chart.

        ``edge_length`` may be an array aligned with the derived edge list, a
        callable ``(i, j) -> lengths`` on vertex index arrays, or ``None`` for
        Euclidean lengths of ``vertices``.
        """
        vertices = np.asarray(vertices, dtype=float)
        faces = np.asarray(faces, dtype=np.int64)
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise DomainError("faces must be an (F, 3) index array")
        if face_coords is None:
            face_coords = vertices[faces][:, :, :2]
        face_coords = np.asarray(face_coords, dtype=float)
        if face_area is None:
            face_area = chart_triangle_area(face_coords)
        face_area = np.asarray(face_area, dtype=float)

        n = len(vertices)
        corner_pairs = np.stack(
            [faces[:, list(p)] for p in _OPPOSITE], axis=1
        )  # (F, 3, 2)
        lo = corner_pairs.min(axis=2)
        hi = corner_pairs.max(axis=2)
        keys = lo.astype(np.int64) * n + hi
        uniq, inverse = np.unique(keys.ravel(), return_inverse=True)
        edges = np.stack([uniq // n, uniq % n], axis=1)
        face_edges = inverse.reshape(faces.shape)

        if edge_length is None:
            diff = vertices[edges[:, 0]] - vertices[edges[:, 1]]
            edge_length = np.linalg.norm(diff, axis=1)
        elif callable(edge_length):
            edge_length = edge_length(edges[:, 0], edges[:, 1])
        edge_length = np.asarray(edge_length, dtype=float)
        if edge_length.shape != (len(edges),):
            raise DomainError("edge_length does not match the edge list")

        mesh = cls(
            vertices=vertices,
            faces=faces,
            face_area=face_area,
            face_coords=face_coords,
            edges=edges,
            edge_length=edge_length,
            face_edges=face_edges,
            markers={k: np.asarray(v, dtype=np.int64) for k, v in (markers or {}).items()},
        )
        mesh.validate()
        return mesh

    def validate(self) -> None:
        for name in ("face_area", "edge_length"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise DomainError(f"{name} must be finite and non-negative")
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise DomainError("face index out of range")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def chart_area(self) -> np.ndarray:
        return chart_triangle_area(self.face_coords)

    def total_area(self) -> float:
        return float(self.face_area.sum())

    def scaled(self, s: float) -> "WeightedMesh":
        """Same mesh with lengths multiplied by ``s`` and areas by ``s**2``."""
        return WeightedMesh(
            vertices=self.vertices,
            faces=self.faces,
            face_area=self.face_area * s * s,
            face_coords=self.face_coords,
            edges=self.edges,
            edge_length=self.edge_length * s,
            face_edges=self.face_edges,
            markers=dict(self.markers),
        )

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready dump: vertices, faces, face weights, edges, edge lengths."""
        return {
            "vertices": self.vertices.tolist(),
            "faces": self.faces.tolist(),
            "face_area": self.face_area.tolist(),
            "edges": self.edges.tolist(),
            "edge_length": self.edge_length.tolist(),
            "markers": {k: v.tolist() for k, v in self.markers.items()},
        }
