"""Discrete conformal 2-modulus on weighted triangle meshes.

The modulus of the family of paths joining ``F1`` to ``F2`` is computed via
its dual: the Dirichlet energy of the discrete harmonic potential ``u`` with
``u = 0`` on ``F1`` and ``u = 1`` on ``F2``.  Conductances are the cotangent
weights of each face's chart triangle.  Since the 2-modulus is conformally
invariant, chart angles are all that is needed on meshes whose metric is
conformal to the chart; the metric enters through two degenerations:

* an edge of length zero identifies its endpoints (collapsed seam arcs,
  collapsed Cantor segments);
* a face of area zero carries no energy and contributes no conductance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve
from scipy.spatial import Delaunay

from .circle_homeo import TWO_PI
from .errors import DomainError, InfeasibleError
from .glued_metric import as_metric
from .mesh import WeightedMesh, chart_triangle_area
from .sphere_geom import chart_to_sphere, conformal_factor_array, equator_xyz, sigma_array, sphere_to_chart

KAPPA0 = (4.0 / np.pi) ** 2
RECIPROCAL_FLOOR = 1.0 / KAPPA0
ZERO_LENGTH = 1e-15


# ------------------------------------------------------------------ problems


@dataclass(eq=False)
class ModulusProblem:
    mesh: WeightedMesh
    F1: np.ndarray
    F2: np.ndarray
    family: dict[str, Any] = field(default_factory=dict)
    carrier: np.ndarray | None = None  # boolean face mask; None = all faces

    def __post_init__(self) -> None:
        self.F1 = np.unique(np.asarray(self.F1, dtype=np.int64))
        self.F2 = np.unique(np.asarray(self.F2, dtype=np.int64))
        if not len(self.F1) or not len(self.F2):
            raise DomainError("both boundary sets must be nonempty")
        if np.intersect1d(self.F1, self.F2).size:
            raise DomainError("boundary sets overlap")


def node_problem(mesh: WeightedMesh, F1, F2, carrier=None) -> ModulusProblem:
    return ModulusProblem(mesh, F1, F2, {"kind": "nodes"}, carrier)


def check_quadrilateral(sides: Sequence[np.ndarray]) -> None:
    """Four vertex sets in cyclic order: neighbours meet, opposites do not."""
    if len(sides) != 4:
        raise DomainError("a quadrilateral has four sides")
    sides = [np.asarray(s) for s in sides]
    for k in range(4):
        if not np.intersect1d(sides[k], sides[(k + 1) % 4]).size:
            raise DomainError(f"sides {k + 1} and {(k + 1) % 4 + 1} do not meet")
    for k in range(2):
        if np.intersect1d(sides[k], sides[k + 2]).size:
            raise DomainError(f"opposite sides {k + 1} and {k + 3} intersect")


def quadrilateral_problem(mesh: WeightedMesh, sides: Sequence[np.ndarray], pair: tuple[int, int] = (0, 2),
                          carrier=None) -> ModulusProblem:
    """Paths joining side ``pair[0]`` to side ``pair[1]`` (0-based).

    Corners shared with the other two sides are dropped from the boundary
    sets so that the two sets are disjoint.
    """
    check_quadrilateral(sides)
    a, b = (np.asarray(sides[i]) for i in pair)
    return ModulusProblem(mesh, a, b, {"kind": "quadrilateral", "pair": list(pair)}, carrier)


def annulus_problem(mesh: WeightedMesh, center, r: float, R: float) -> ModulusProblem:
    """Planar condenser between the closed disk of radius ``r`` and the
    complement of the open disk of radius ``R`` (Euclidean vertex positions)."""
    if not 0 < r < R:
        raise DomainError("need 0 < r < R")
    d = np.linalg.norm(mesh.vertices[:, :2] - np.asarray(center, dtype=float), axis=1)
    tol = 1e-12 * R
    return ModulusProblem(
        mesh, np.nonzero(d <= r + tol)[0], np.nonzero(d >= R - tol)[0],
        {"kind": "annulus", "center": list(map(float, center)), "r": r, "R": R},
    )


# ------------------------------------------------------------------ solver


@dataclass(eq=False)
class ModulusSolution:
    value: float
    u: np.ndarray  # per vertex
    rho: np.ndarray  # per face, in the mesh metric
    residual: float
    edge_rho: np.ndarray = field(repr=False)
    solve_residual: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "modulus": self.value,
            "u": self.u.tolist(),
            "rho": self.rho.tolist(),
            "residual": self.residual,
            "solve_residual": self.solve_residual,
        }


def cotan_weights(mesh: WeightedMesh, face_mask: np.ndarray | None = None) -> np.ndarray:
    """Per-edge cotangent conductances from the face chart triangles."""
    c = mesh.face_coords
    keep = (mesh.face_area > 0) & (mesh.chart_area > 0)
    if face_mask is not None:
        keep &= face_mask
    w = np.zeros(len(mesh.edges))
    for k in range(3):
        p = c[:, k]
        e1 = c[:, (k + 1) % 3] - p
        e2 = c[:, (k + 2) % 3] - p
        dot = np.einsum("ij,ij->i", e1, e2)
        cross = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        with np.errstate(divide="ignore", invalid="ignore"):
            cot = np.where(keep, dot / cross, 0.0)
        np.add.at(w, mesh.face_edges[:, k], 0.5 * cot)
    return w


def _labels(mesh: WeightedMesh) -> np.ndarray:
    """Vertex classes after identifying endpoints of zero-length edges."""
    zero = mesh.edge_length <= ZERO_LENGTH
    n = mesh.n_vertices
    e = mesh.edges[zero]
    g = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    _, labels = connected_components(g, directed=False)
    return labels


def face_gradients(mesh: WeightedMesh, u: np.ndarray) -> np.ndarray:
    """Chart gradient of the piecewise linear interpolant of ``u`` per face."""
    c = mesh.face_coords
    uf = u[mesh.faces]
    e1 = c[:, 1] - c[:, 0]
    e2 = c[:, 2] - c[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    du1 = uf[:, 1] - uf[:, 0]
    du2 = uf[:, 2] - uf[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        gx = (du1 * e2[:, 1] - du2 * e1[:, 1]) / det
        gy = (du2 * e1[:, 0] - du1 * e2[:, 0]) / det
    grad = np.stack([gx, gy], axis=1)
    grad[~np.isfinite(grad)] = 0.0
    return grad


def solve_modulus(problem: ModulusProblem, n_paths: int = 200, seed: int = 0) -> ModulusSolution:
    mesh = problem.mesh
    weights = cotan_weights(mesh, problem.carrier)
    labels = _labels(mesh)
    n_nodes = int(labels.max()) + 1
    a_lab = labels[mesh.edges[:, 0]]
    b_lab = labels[mesh.edges[:, 1]]
    live = (a_lab != b_lab) & (weights != 0)
    a_lab, b_lab, w = a_lab[live], b_lab[live], weights[live]

    f1 = np.unique(labels[problem.F1])
    f2 = np.unique(labels[problem.F2])
    if np.intersect1d(f1, f2).size:
        raise DomainError("boundary sets are joined by a path of length zero")

    adj = coo_matrix((np.ones(len(w)), (a_lab, b_lab)), shape=(n_nodes, n_nodes))
    _, comp = connected_components(adj, directed=False)
    if not np.intersect1d(comp[f1], comp[f2]).size:
        raise InfeasibleError("no path joins the boundary sets", modulus=0.0)

    value = np.full(n_nodes, np.nan)
    value[f1] = 0.0
    value[f2] = 1.0
    fixed = ~np.isnan(value)
    # components without Dirichlet nodes are pure Neumann: pin them to 0
    has_fixed = np.zeros(comp.max() + 1, dtype=bool)
    has_fixed[comp[fixed]] = True
    floating = ~has_fixed[comp]
    value[floating & ~fixed] = 0.0
    free = np.nonzero(np.isnan(value))[0]

    rows = np.concatenate([a_lab, b_lab, a_lab, b_lab])
    cols = np.concatenate([a_lab, b_lab, b_lab, a_lab])
    vals = np.concatenate([w, w, -w, -w])
    L = coo_matrix((vals, (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()
    solve_res = 0.0
    if len(free):
        known = np.nonzero(~np.isnan(value))[0]
        L_ff = L[free][:, free].tocsc()
        rhs = -L[free][:, known] @ value[known]
        sol = spsolve(L_ff, rhs)
        value[free] = sol
        denom = max(np.linalg.norm(rhs), 1e-300)
        solve_res = float(np.linalg.norm(L_ff @ sol - rhs) / denom)

    du = value[a_lab] - value[b_lab]
    mod = float(np.sum(w * du * du))
    u = value[labels]

    grad = face_gradients(mesh, u)
    gnorm = np.linalg.norm(grad, axis=1)
    area = mesh.face_area
    chart = mesh.chart_area
    positive = (area > 0) & (chart > 0)
    if problem.carrier is not None:
        positive &= problem.carrier
    rho = np.zeros(len(mesh.faces))
    rho[positive] = gnorm[positive] * np.sqrt(chart[positive] / area[positive])
    edge_rho = _edge_density(mesh, rho, positive, labels)
    residual = _path_residual(mesh, u, edge_rho, problem, n_paths, seed)
    return ModulusSolution(mod, u, rho, residual, edge_rho, solve_res)


def _edge_density(mesh: WeightedMesh, rho: np.ndarray, positive: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Edge density: largest density of an adjacent face of positive area.

    Edges whose faces all carry zero area inherit the largest value among
    edges joining the same pair of vertex classes, since after collapsing
    they represent the same curve.
    """
    er = np.zeros(len(mesh.edges))
    for k in range(3):
        np.maximum.at(er, mesh.face_edges[:, k], np.where(positive, rho, 0.0))
    covered = np.zeros(len(mesh.edges), dtype=bool)
    for k in range(3):
        covered[mesh.face_edges[positive, k]] = True
    if not covered.all():
        la, lb = labels[mesh.edges[:, 0]], labels[mesh.edges[:, 1]]
        key = np.minimum(la, lb) * (labels.max() + 1) + np.maximum(la, lb)
        uniq, inv = np.unique(key, return_inverse=True)
        best = np.zeros(len(uniq))
        np.maximum.at(best, inv, er)
        er = np.where(covered, er, best[inv])
    return er


def _vertex_neighbors(mesh: WeightedMesh) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    e = mesh.edges
    src = np.concatenate([e[:, 0], e[:, 1]])
    dst = np.concatenate([e[:, 1], e[:, 0]])
    eid = np.concatenate([np.arange(len(e)), np.arange(len(e))])
    order = np.argsort(src, kind="stable")
    src, dst, eid = src[order], dst[order], eid[order]
    start = np.searchsorted(src, np.arange(mesh.n_vertices + 1))
    return start, dst, eid


def path_rho_length(mesh: WeightedMesh, edge_rho: np.ndarray, path: Sequence[int]) -> float:
    """ρ-length ``Σ ρ_e ℓ_e`` of a vertex path along mesh edges."""
    path = np.asarray(path)
    a, b = np.minimum(path[:-1], path[1:]), np.maximum(path[:-1], path[1:])
    n = mesh.n_vertices
    keys = mesh.edges[:, 0] * n + mesh.edges[:, 1]
    idx = np.searchsorted(keys, a * n + b)
    if np.any(idx >= len(keys)) or np.any(keys[np.minimum(idx, len(keys) - 1)] != a * n + b):
        raise DomainError("path uses a non-edge")
    return float(np.sum(edge_rho[idx] * mesh.edge_length[idx]))


def _path_residual(mesh, u, edge_rho, problem, n_paths, seed) -> float:
    """Worst shortfall below 1 of ρ-lengths of random u-increasing walks."""
    if n_paths <= 0:
        return 0.0
    rng = np.random.default_rng(seed)
    start, dst, eid = _vertex_neighbors(mesh)
    in_f2 = np.zeros(mesh.n_vertices, dtype=bool)
    in_f2[problem.F2] = True
    worst = np.inf
    max_steps = 4 * mesh.n_vertices
    for _ in range(n_paths):
        v = int(rng.choice(problem.F1))
        length = 0.0
        for _ in range(max_steps):
            if in_f2[v]:
                break
            nb = dst[start[v]:start[v + 1]]
            ed = eid[start[v]:start[v + 1]]
            up = u[nb] > u[v] + 1e-14
            if not up.any():
                up = u[nb] >= u[v] - 1e-14
                if not up.any():
                    break
            k = rng.choice(np.nonzero(up)[0])
            length += edge_rho[ed[k]] * mesh.edge_length[ed[k]]
            v = int(nb[k])
        else:
            continue
        if in_f2[v]:
            worst = min(worst, length)
    return float(max(0.0, 1.0 - worst)) if np.isfinite(worst) else 0.0


# ------------------------------------------------------------------ flat meshes


def rectangle_mesh(a: float, b: float, nx: int, ny: int) -> WeightedMesh:
    """Right-triangle grid on ``[0, a] x [0, b]`` with ``nx x ny`` cells.

    Vertex ``(i, j)`` has index ``j * (nx + 1) + i``.  Markers ``left``,
    ``bottom``, ``right``, ``top`` list the sides (in cyclic order).
    """
    if nx < 1 or ny < 1 or a <= 0 or b <= 0:
        raise DomainError("rectangle needs positive sides and cell counts")
    x = np.linspace(0.0, a, nx + 1)
    y = np.linspace(0.0, b, ny + 1)
    return tensor_mesh(x, y)


def tensor_mesh(x: np.ndarray, y: np.ndarray) -> WeightedMesh:
    nx, ny = len(x) - 1, len(y) - 1
    xx, yy = np.meshgrid(x, y)
    verts = np.stack([xx.ravel(), yy.ravel()], axis=1)
    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    v00 = j * (nx + 1) + i
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1
    faces = np.concatenate([np.stack([v00, v10, v11], 1), np.stack([v00, v11, v01], 1)])
    col = np.arange(ny + 1) * (nx + 1)
    markers = {
        "left": col,
        "right": col + nx,
        "bottom": np.arange(nx + 1),
        "top": ny * (nx + 1) + np.arange(nx + 1),
    }
    return WeightedMesh.build(verts, faces, markers=markers)


def rectangle_sides(mesh: WeightedMesh) -> list[np.ndarray]:
    return [mesh.markers[k] for k in ("left", "bottom", "right", "top")]


def annulus_mesh(r: float, R: float, n_rings: int = 64, n_sectors: int = 256) -> WeightedMesh:
    """Planar annulus ``r <= |x| <= R`` with geometrically spaced rings."""
    if not 0 < r < R:
        raise DomainError("need 0 < r < R")
    radii = np.geomspace(r, R, n_rings + 1)
    ang = TWO_PI * np.arange(n_sectors) / n_sectors
    rr, aa = np.meshgrid(radii, ang, indexing="ij")
    verts = np.stack([rr * np.cos(aa), rr * np.sin(aa)], axis=-1).reshape(-1, 2)

    def idx(i, j):
        return i * n_sectors + (j % n_sectors)

    i, j = np.meshgrid(np.arange(n_rings), np.arange(n_sectors), indexing="ij")
    i, j = i.ravel(), j.ravel()
    a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
    faces = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    return WeightedMesh.build(
        verts, faces,
        markers={"inner": np.arange(n_sectors), "outer": n_rings * n_sectors + np.arange(n_sectors)},
    )


def reciprocality_product(mesh: WeightedMesh, sides: Sequence[np.ndarray], floor_tol: float = 0.02) -> float:
    """``Mod Γ(ξ1, ξ3) · Mod Γ(ξ2, ξ4)``; raises if below ``(π/4)² - tol``."""
    m13 = solve_modulus(quadrilateral_problem(mesh, sides, (0, 2)), n_paths=0).value
    m24 = solve_modulus(quadrilateral_problem(mesh, sides, (1, 3)), n_paths=0).value
    prod = m13 * m24
    if prod < RECIPROCAL_FLOOR - floor_tol:
        raise DomainError(f"reciprocality product {prod:.6g} below (π/4)²")
    return prod


# ------------------------------------------------------------------ uniformizer


@dataclass(eq=False)
class Uniformizer:
    u: np.ndarray
    v: np.ndarray
    M: float
    u_dual: np.ndarray

    def conjugacy_error(self) -> float:
        """sup |v - M u'| / M over the vertices."""
        return float(np.max(np.abs(self.v - self.M * self.u_dual)) / self.M)


def discrete_conjugate(mesh: WeightedMesh, u: np.ndarray, base_side: np.ndarray) -> np.ndarray:
    """Conjugate of a discrete harmonic ``u`` on vertices.

    The conjugate lives naturally on edge midpoints: within each face it
    changes by the rotated gradient ``J∇u`` dotted with midpoint
    differences.  Values are propagated face by face, averaged to vertices,
    and shifted to vanish on average over ``base_side``.
    """
    grad = face_gradients(mesh, u)
    rot = np.stack([-grad[:, 1], grad[:, 0]], axis=1)
    c = mesh.face_coords
    mids = np.stack([0.5 * (c[:, (k + 1) % 3] + c[:, (k + 2) % 3]) for k in range(3)], axis=1)
    fe = mesh.face_edges
    n_e = len(mesh.edges)
    # faces around each edge
    edge_faces = [[] for _ in range(n_e)]
    for f, row in enumerate(fe):
        for e in row:
            edge_faces[e].append(f)
    val = np.full(n_e, np.nan)
    done = np.zeros(len(fe), dtype=bool)
    for seed_face in range(len(fe)):
        if done[seed_face]:
            continue
        val[fe[seed_face, 0]] = 0.0 if np.isnan(val[fe[seed_face, 0]]) else val[fe[seed_face, 0]]
        stack = [seed_face]
        done[seed_face] = True
        while stack:
            f = stack.pop()
            known = [k for k in range(3) if not np.isnan(val[fe[f, k]])]
            k0 = known[0]
            for k in range(3):
                if np.isnan(val[fe[f, k]]):
                    val[fe[f, k]] = val[fe[f, k0]] + rot[f] @ (mids[f, k] - mids[f, k0])
            for k in range(3):
                for nf in edge_faces[fe[f, k]]:
                    if not done[nf]:
                        done[nf] = True
                        stack.append(nf)
    # a linear function takes value m_(k+1) + m_(k+2) - m_k at corner k,
    # where m_k is its value at the midpoint of the edge opposite corner k
    ev = val[fe]
    corner = ev.sum(axis=1, keepdims=True) - 2.0 * ev
    acc = np.zeros(mesh.n_vertices)
    cnt = np.zeros(mesh.n_vertices)
    np.add.at(acc, mesh.faces.ravel(), corner.ravel())
    np.add.at(cnt, mesh.faces.ravel(), 1.0)
    v = acc / np.maximum(cnt, 1)
    return v - v[np.asarray(base_side)].mean()


def discrete_uniformizer(mesh: WeightedMesh, sides: Sequence[np.ndarray]) -> Uniformizer:
    """Energy minimiser ``u`` for ``Γ(ξ1, ξ3)``, its conjugate ``v`` (zero on
    ``ξ2``), ``M = 2E(u) = Mod Γ(ξ1, ξ3)`` and the dual potential ``u'`` for
    ``Γ(ξ2, ξ4)``."""
    s13 = solve_modulus(quadrilateral_problem(mesh, sides, (0, 2)), n_paths=0)
    s24 = solve_modulus(quadrilateral_problem(mesh, sides, (1, 3)), n_paths=0)
    v = discrete_conjugate(mesh, s13.u, sides[1])
    if np.mean(v[np.asarray(sides[3])]) < 0:
        v = -v
    return Uniformizer(s13.u, v, s13.value, s24.u)


# ------------------------------------------------------------------ collapsed plane


def _graded_points(center: float, start: float, stop: float, ratio: float = 1.5) -> np.ndarray:
    """Points ``center ± start·ratio^j`` up to distance ``stop``."""
    if start <= 0 or stop <= start:
        return np.array([center])
    n = int(np.ceil(np.log(stop / start) / np.log(ratio))) + 1
    d = start * ratio ** np.arange(n)
    d = d[d <= stop]
    return np.concatenate([center - d, [center], center + d])


def _merge_nodes(points: np.ndarray, keep: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Sorted unique nodes; points within ``tol`` of a ``keep`` node or of
    each other are dropped in favour of it."""
    keep = np.unique(keep)
    pts = np.unique(points)
    k = np.clip(np.searchsorted(keep, pts), 1, len(keep) - 1) if len(keep) > 1 else np.zeros(len(pts), dtype=int)
    near = np.minimum(np.abs(pts - keep[k]), np.abs(pts - keep[np.maximum(k - 1, 0)]))
    pts = np.unique(np.concatenate([pts[near > tol], keep]))
    return pts[np.concatenate([[True], np.diff(pts) > tol])]


def collapsed_plane_mesh(E: np.ndarray, bounds: tuple[float, float, float, float] = (-1.0, 2.0, -1.5, 1.5),
                         mode: str = "segment", n_background: int = 48, grading: float = 1.5) -> WeightedMesh:
    """Tensor mesh of a rectangle in which a finite union of intervals ``E``
    is collapsed.

    ``mode="segment"`` collapses ``E × {0}``: horizontal edges on the x-axis
    inside ``E`` get length 0.  ``mode="strip"`` collapses ``E × R``
    horizontally: faces over ``E`` get area 0 and horizontal edges over
    ``E`` length 0.  The grid is refined geometrically around every gap of
    ``E`` and towards the x-axis.
    """
    x0, x1, y0, y1 = bounds
    E = np.asarray(E, dtype=float).reshape(-1, 2)
    xs = [np.linspace(x0, x1, n_background + 1), E.ravel()]
    if len(E):
        gaps = np.stack([E[:-1, 1], E[1:, 0]], axis=1)
        lengths = E[:, 1] - E[:, 0]
        for k, (a, b) in enumerate(gaps):
            g = b - a
            xs.append(np.linspace(a, b, 5))
            reach = max(lengths[k], lengths[k + 1])
            xs.append(_graded_points(0.5 * (a + b), g, reach, grading))
        g_min = float(np.min(gaps[:, 1] - gaps[:, 0])) if len(gaps) else float(np.min(lengths))
        for end in (E[0, 0], E[-1, 1]):
            xs.append(_graded_points(end, g_min / 2, 1.0, grading))
    else:
        g_min = (x1 - x0) / n_background
    x = _merge_nodes(np.clip(np.concatenate(xs), x0, x1), np.concatenate([E.ravel(), [x0, x1]]))
    if mode == "segment":
        ys = [np.linspace(y0, y1, n_background + 1), [0.0],
              _graded_points(0.0, g_min / 4, max(abs(y0), abs(y1)), grading)]
        y = np.clip(np.concatenate(ys), y0, y1)
    elif mode == "strip":
        y = np.linspace(y0, y1, n_background + 1)
    else:
        raise DomainError(f"unknown collapse mode {mode!r}")
    y = _merge_nodes(y, np.array([y0, 0.0, y1]) if y0 < 0 < y1 else np.array([y0, y1]))
    mesh = tensor_mesh(x, y)

    def in_E(t):
        if not len(E):
            return np.zeros_like(t, dtype=bool)
        k = np.clip(np.searchsorted(E[:, 0], t, side="right") - 1, 0, len(E) - 1)
        return (t >= E[k, 0] - 1e-14) & (t <= E[k, 1] + 1e-14)

    va, vb = mesh.vertices[mesh.edges[:, 0]], mesh.vertices[mesh.edges[:, 1]]
    horizontal = np.abs(va[:, 1] - vb[:, 1]) < 1e-15
    inside = in_E(va[:, 0]) & in_E(vb[:, 0]) & in_E(0.5 * (va[:, 0] + vb[:, 0]))
    if mode == "segment":
        collapse = horizontal & inside & (np.abs(va[:, 1]) < 1e-15)
    else:
        collapse = horizontal & inside
    mesh.edge_length = np.where(collapse, 0.0, mesh.edge_length)
    if mode == "strip" and len(E):
        cx = mesh.face_coords[:, :, 0].mean(axis=1)
        mesh.face_area = np.where(in_E(cx), 0.0, mesh.face_area)
    mesh.markers["collapsed_edges"] = np.nonzero(collapse)[0]
    return mesh


def vertex_at(mesh: WeightedMesh, point) -> int:
    d = np.linalg.norm(mesh.vertices[:, :2] - np.asarray(point, dtype=float), axis=1)
    k = int(np.argmin(d))
    if d[k] > 1e-12:
        raise DomainError(f"no mesh vertex at {point}")
    return k


def horizontal_length(mesh: WeightedMesh, x_range=(0.0, 1.0), y: float = 0.0) -> float:
    """Total length of the mesh edges on the line ``y`` between ``x_range``."""
    va, vb = mesh.vertices[mesh.edges[:, 0]], mesh.vertices[mesh.edges[:, 1]]
    on = (np.abs(va[:, 1] - y) < 1e-15) & (np.abs(vb[:, 1] - y) < 1e-15)
    lo, hi = x_range
    within = (np.minimum(va[:, 0], vb[:, 0]) >= lo - 1e-15) & (np.maximum(va[:, 0], vb[:, 0]) <= hi + 1e-15)
    return float(mesh.edge_length[on & within].sum())


# ------------------------------------------------------------------ glued sphere


def _fibonacci_hemisphere(n: int, north: bool) -> np.ndarray:
    k = np.arange(2 * n) + 0.5
    z = 1.0 - 2.0 * k / (2 * n)
    phi = np.pi * (1.0 + np.sqrt(5.0)) * k
    s = np.sqrt(1.0 - z * z)
    pts = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
    return pts[pts[:, 2] > 0] if north else pts[pts[:, 2] < 0]


def _polar_cap_points(center_angle: float, radii: np.ndarray, north: bool, ratio: float) -> np.ndarray:
    """Points on geodesic circles about an equator point, inside one open
    hemisphere; roughly square cells (arc spacing ≈ radial spacing)."""
    c = equator_xyz(center_angle)
    t = np.array([-np.sin(center_angle), np.cos(center_angle), 0.0])
    k = np.array([0.0, 0.0, 1.0 if north else -1.0])
    out = []
    for rho in radii:
        if rho >= np.pi / 2:
            continue
        spacing = rho * (ratio - 1.0)
        m = max(4, int(np.ceil(np.pi * np.sin(rho) / spacing)))
        beta = np.pi * np.arange(1, m) / m
        pts = np.cos(rho) * c + np.sin(rho) * (np.cos(beta)[:, None] * t + np.sin(beta)[:, None] * k)
        out.append(pts)
    return np.vstack(out) if out else np.zeros((0, 3))


def _inside_polygon_margin(uv: np.ndarray, boundary_angles: np.ndarray, margin: float) -> np.ndarray:
    """Chart points strictly inside the polygon inscribed in the unit circle
    with the given vertex angles, at least ``margin`` times the local chord
    length away from it."""
    a = np.sort(np.mod(boundary_angles, TWO_PI))
    nxt = np.concatenate([a[1:], [a[0] + TWO_PI]])
    mid = 0.5 * (a + nxt)
    half = 0.5 * (nxt - a)
    rho = np.hypot(uv[:, 0], uv[:, 1])
    ang = np.mod(np.arctan2(uv[:, 1], uv[:, 0]), TWO_PI)
    k = np.searchsorted(a, ang, side="right") - 1  # -1 wraps to the last gap
    proj = rho * np.cos(ang - mid[k])
    gap_dist = np.cos(half[k]) - proj
    return gap_dist > margin * 2.0 * np.sin(half[k])


@dataclass(eq=False)
class GluedSphereMesh:
    mesh: WeightedMesh
    seam_angles: np.ndarray  # south angle of seam vertex k (vertices 0..n_seam-1)
    north: np.ndarray  # per-vertex flag: interior vertex of the north hemisphere
    n_seam: int


def glued_sphere_mesh(glued, theta0: float, radii: Sequence[float], background: int = 600,
                      ratio: float = 1.25) -> GluedSphereMesh:
    """Delaunay mesh of the glued sphere graded about the seam point ``theta0``.

    Seam vertices are shared: south seam vertex ``w`` is the north seam vertex
    ``G(w)``.  Each hemisphere is triangulated in its own stereographic chart,
    and every face keeps its chart coordinates.  Seam edges get the seam
    distance as length (zero across collapsed arcs); other edges get σ.
    """
    metric = as_metric(glued)
    g = metric.g
    radii = np.asarray(radii, dtype=float)
    rho_min = float(radii.min()) / 4
    h_bg = np.sqrt(2 * np.pi / background)
    switch = min(np.pi / 2, h_bg / (ratio - 1.0))
    ring = np.unique(np.concatenate([np.geomspace(rho_min, switch, int(np.ceil(np.log(switch / rho_min) / np.log(ratio))) + 1), radii]))
    ring = ring[ring <= switch]
    psi0 = float(g.lift(theta0))

    # seam vertices (south angles)
    n_bg = int(np.ceil(TWO_PI / h_bg))
    uni = theta0 + TWO_PI * np.arange(n_bg) / n_bg
    uni = uni[circle_far(uni, theta0, switch)]
    uni_n = psi0 + TWO_PI * np.arange(n_bg) / n_bg
    uni_n = uni_n[circle_far(uni_n, psi0, switch)]
    w = np.concatenate([
        [theta0], theta0 + ring, theta0 - ring, uni,
        g.inverse(np.concatenate([psi0 + ring, psi0 - ring, uni_n])),
    ])
    w = theta0 + np.mod(w - theta0 + np.pi, TWO_PI) - np.pi
    w = np.unique(w)
    w = w[np.concatenate([[True], np.diff(w) > 1e-12])]
    psi = g.lift(w)
    n_seam = len(w)

    def hemisphere_points(center, north):
        bgp = _fibonacci_hemisphere(background, north)
        bgp = bgp[sigma_array(bgp, equator_xyz(center)[None, :]) > switch]
        cap = _polar_cap_points(center, ring, north, ratio)
        return np.vstack([bgp, cap])

    verts = [equator_xyz(w)]
    faces_all, coords_all = [], []
    north_flag = [np.zeros(n_seam, dtype=bool)]
    offset = n_seam
    for north, center, bangles in ((False, theta0, w), (True, psi0, psi)):
        side = "north" if north else "south"
        pts = hemisphere_points(center, north)
        uv = sphere_to_chart(pts, side)
        keep = _inside_polygon_margin(uv, bangles, 0.25)
        pts, uv = pts[keep], uv[keep]
        # boundary vertices: unique chart angles (collapsed arcs share one)
        b_ang = np.mod(bangles, TWO_PI)
        order = np.argsort(b_ang, kind="stable")
        sorted_ang = b_ang[order]
        uniq_mask = np.concatenate([[True], np.diff(sorted_ang) > 1e-13])
        b_idx = order[uniq_mask]  # seam vertex index of each unique boundary point
        b_uv = np.stack([np.cos(b_ang[b_idx]), np.sin(b_ang[b_idx])], axis=1)
        all_uv = np.vstack([b_uv, uv])
        tri = Delaunay(all_uv).simplices
        ids = np.concatenate([b_idx, offset + np.arange(len(pts))])
        f = ids[tri]
        c = all_uv[tri]
        area = chart_triangle_area(c)
        good = area > 1e-18
        faces_all.append(f[good])
        coords_all.append(c[good])
        verts.append(pts)
        north_flag.append(np.full(len(pts), north))
        offset += len(pts)

    vertices = np.vstack(verts)
    faces = np.vstack(faces_all)
    coords = np.vstack(coords_all)
    nflag = np.concatenate(north_flag)
    face_area = conformal_factor_array(coords.mean(axis=1)) * chart_triangle_area(coords)
    # position of every vertex as seen from the north side
    north_pos = vertices.copy()
    north_pos[:n_seam] = equator_xyz(psi)

    def lengths(i, j):
        seam_i, seam_j = i < n_seam, j < n_seam
        out = np.empty(len(i))
        both = seam_i & seam_j
        out[both] = metric.seam_distance(w[i[both]], w[j[both]])
        rest = ~both
        use_north = nflag[i] | nflag[j]
        pi = np.where(use_north[:, None], north_pos[i], vertices[i])
        pj = np.where(use_north[:, None], north_pos[j], vertices[j])
        out[rest] = sigma_array(pi[rest], pj[rest])
        return out

    mesh = WeightedMesh.build(
        vertices, faces, face_coords=coords, face_area=face_area, edge_length=lengths,
        markers={"seam": np.arange(n_seam)},
    )
    return GluedSphereMesh(mesh, w, nflag, n_seam)


def circle_far(angles: np.ndarray, center: float, dist: float) -> np.ndarray:
    d = np.mod(angles - center, TWO_PI)
    return np.minimum(d, TWO_PI - d) > dist


def glued_vertex_distances(glued, gmesh: GluedSphereMesh, theta0: float, radius: float) -> np.ndarray:
    """Glued distance from the seam point ``theta0`` to every mesh vertex;
    exact up to ``radius``, otherwise only known to exceed it."""
    metric = as_metric(glued)
    v = gmesh.mesh.vertices
    d = np.empty(len(v))
    n = gmesh.n_seam
    d[:n] = metric.seam_distance(theta0, gmesh.seam_angles)
    for north in (False, True):
        sel = np.nonzero((np.arange(len(v)) >= n) & (gmesh.north == north))[0]
        d[sel] = metric.distances_from_seam_point(theta0, v[sel], north, radius=radius)
    return d


def annulus_capacity_profile(glued, theta0: float, R: float, radii: Sequence[float],
                             background: int = 2000, ratio: float = 1.15) -> list[tuple[float, float]]:
    """Modulus of the condenser ``(B̄(y, r), Z \\ B(y, R))`` about the seam
    point ``y = theta0`` for each ``r`` in ``radii`` (decreasing, below ``R``).
    Balls are measured with the glued distance."""
    radii = np.asarray(radii, dtype=float)
    if np.any(radii >= R) or np.any(np.diff(radii) >= 0):
        raise DomainError("radii must decrease and stay below R")
    gmesh = glued_sphere_mesh(glued, theta0, np.concatenate([radii, [R]]), background, ratio)
    d = glued_vertex_distances(glued, gmesh, theta0, R)
    F2 = np.nonzero(d >= R * (1 - 1e-9))[0]
    out = []
    for r in radii:
        F1 = np.nonzero(d <= r * (1 + 1e-9))[0]
        sol = solve_modulus(ModulusProblem(gmesh.mesh, F1, F2, {"kind": "annulus", "r": float(r), "R": float(R)}), n_paths=0)
        out.append((float(r), sol.value))
    return out


def sphere_annulus_modulus(r: float, R: float) -> float:
    """Modulus between concentric spherical caps of radii ``r < R``."""
    return TWO_PI / np.log(np.tan(R / 2) / np.tan(r / 2))
