"""Distance on two round hemispheres glued along a circle homeomorphism.

A south seam point at angle ``θ`` is identified with the north seam point at
angle ``G(θ)``.  Distances between glued points are computed from the
structure of shortest chains: a chain either stays in one closed hemisphere
(and costs the great-circle distance) or enters the seam at some ``w``, runs
along it to some ``w'`` and leaves.  Travelling along the seam costs the seam
measure ``∫ min(1, v_g)``, which is tabulated once as a prefix sum.

The two optimisation variables ``(w, w')`` are located by an exact
min-plus sweep on a uniform seam grid, then polished by golden-section line
searches along the coordinate axes and both diagonals, since the objective has
kinks exactly along those directions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .circle_homeo import TWO_PI, CircleHomeo, circle_dist
from .errors import DomainError, ResourceError
from .sphere_geom import SpherePoint, equator_xyz, sigma_array, sigma_to_equator

SEAM_TOL = 1e-12
ORACLE_MAX_RESOLUTION = 2048
_GOLD = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GluedPoint:
    hemisphere: str
    position: SpherePoint

    def __post_init__(self) -> None:
        if self.hemisphere not in ("south", "north"):
            raise DomainError(f"unknown hemisphere {self.hemisphere!r}")
        z = self.position.z
        if (self.hemisphere == "south" and z > SEAM_TOL) or (self.hemisphere == "north" and z < -SEAM_TOL):
            raise DomainError("position is not in the closed tagged hemisphere")

    @classmethod
    def south(cls, xyz) -> "GluedPoint":
        return cls("south", _as_point(xyz))

    @classmethod
    def north(cls, xyz) -> "GluedPoint":
        return cls("north", _as_point(xyz))

    @classmethod
    def seam(cls, theta: float) -> "GluedPoint":
        """The seam point with south angle ``theta``."""
        return cls("south", SpherePoint.on_equator(theta))

    @property
    def on_seam(self) -> bool:
        return abs(self.position.z) <= SEAM_TOL

    @property
    def is_north(self) -> bool:
        return self.hemisphere == "north"


def _as_point(xyz) -> SpherePoint:
    if isinstance(xyz, SpherePoint):
        return xyz
    return SpherePoint.from_vector(xyz, normalize=True)


def _suffix_min(x: np.ndarray) -> np.ndarray:
    return np.minimum.accumulate(x[..., ::-1], axis=-1)[..., ::-1]


def _shift_left(x: np.ndarray, fill: float) -> np.ndarray:
    out = np.full_like(x, fill)
    out[..., :-1] = x[..., 1:]
    return out


def _shift_right(x: np.ndarray, fill: float) -> np.ndarray:
    out = np.full_like(x, fill)
    out[..., 1:] = x[..., :-1]
    return out


def seam_min_plus(cost: np.ndarray, s: np.ndarray, total: float) -> np.ndarray:
    """``out[..., j] = min_i cost[..., i] + sd(i, j)`` on a seam grid.

    ``s`` holds the nondecreasing seam coordinates of the grid nodes in
    ``[0, total)`` and ``sd`` is the circular seam distance.  Runs in linear
    time with prefix and suffix minima.
    """
    inf = np.inf
    m = cost - s
    fwd = s + np.minimum(np.minimum.accumulate(m, axis=-1), total + _shift_left(_suffix_min(m), inf))
    p = cost + s
    bwd = -s + np.minimum(_suffix_min(p), total + _shift_right(np.minimum.accumulate(p, axis=-1), inf))
    return np.minimum(fwd, bwd)


class GluedMetric:
    """The glued space for a fixed homeomorphism ``g``.

    Holds the seam density ``min(1, v_g)`` per table cell and its prefix sums.
    Families that know the exact seam primitive use it for evaluation; the
    table is then only used for reporting and window searches.
    """

    def __init__(self, g: CircleHomeo):
        self.g = g
        edges = g.cell_edges
        h = np.diff(edges)
        if g.seam_cdf is not None:
            cells = np.diff(g.seam_cdf(edges))
        else:
            cells = g.cell_integrals(lambda v: np.minimum(1.0, v))
        cells = np.clip(cells, 0.0, np.minimum(h, np.diff(g.lift_at_edges)))
        self.cell_edges = edges
        self.cell_measure = cells
        self.density = cells / h
        self.prefix = np.concatenate([[0.0], np.cumsum(cells)])
        self.total = float(self.prefix[-1])

    # ------------------------------------------------------------ seam

    def cumulative(self, theta) -> np.ndarray:
        """Unwrapped seam primitive S with S(θ + 2π) = S(θ) + total."""
        t, k = self.g._reduce(theta)
        if self.g.seam_cdf is not None:
            base = self.g.seam_cdf(t)
        else:
            base = np.interp(t, self.cell_edges, self.prefix)
        return base + k * self.total

    def seam_distance(self, theta1, theta2) -> np.ndarray:
        if self.total <= 0:
            return np.zeros(np.broadcast(np.asarray(theta1), np.asarray(theta2)).shape)
        x = np.mod(self.cumulative(theta2) - self.cumulative(theta1), self.total)
        return np.maximum(np.minimum(x, self.total - x), 0.0)

    # ------------------------------------------------------------ points

    def canonical(self, p: GluedPoint) -> GluedPoint:
        """Move north equator points to their south representative."""
        if p.is_north and p.on_seam:
            phi = np.arctan2(p.position.y, p.position.x)
            return GluedPoint.seam(float(self.g.inverse(phi)))
        return p

    def pack(self, points: Sequence[GluedPoint]) -> tuple[np.ndarray, np.ndarray]:
        pts = [self.canonical(p) for p in points]
        xyz = np.array([p.position.as_array() for p in pts]).reshape(-1, 3)
        north = np.array([p.is_north for p in pts], dtype=bool)
        return xyz, north

    def seam_grid(self, n: int, lo: float = 0.0, hi: float = TWO_PI) -> np.ndarray:
        """Sorted south angles in ``[lo, hi)`` that are uniform both in the
        south angle and in the north angle ``G(w)`` (``n`` of each kind).

        Sampling only in ``w`` would leave the north side sparse wherever
        ``G'`` is large.
        """
        w = lo + (hi - lo) * np.arange(n) / n
        glo, ghi = float(self.g.lift(lo)), float(self.g.lift(hi))
        psi = glo + (ghi - glo) * np.arange(n) / n
        w2 = self.g.inverse(psi)
        both = np.unique(np.concatenate([w, w2]))
        both = both[(both >= lo) & (both < hi)]
        # drop near-duplicates so the grid stays strictly increasing
        keep = np.concatenate([[True], np.diff(both) > 1e-13])
        return both[keep]

    def seam_xyz(self, w, north) -> np.ndarray:
        """Sphere position of the seam point ``w`` seen from either side."""
        w = np.asarray(w, dtype=float)
        return equator_xyz(np.where(north, self.g.lift(w), w))

    def _to_seam(self, xyz: np.ndarray, north: np.ndarray, w: np.ndarray) -> np.ndarray:
        """σ from each point to the seam point ``w`` in its own hemisphere.

        ``xyz`` (P, 3) and ``north`` (P,) broadcast against ``w`` (P, n) or (n,).
        """
        w = np.asarray(w, dtype=float)
        if w.ndim == 1:
            w = w[None, :]
        ang = np.where(north[:, None], self.g.lift(w), w)
        return sigma_to_equator(xyz[:, None, :], ang)

    # ------------------------------------------------------------ distance

    def predistance(self, a: GluedPoint, b: GluedPoint) -> float:
        a, b = self.canonical(a), self.canonical(b)
        if a.on_seam and b.on_seam:
            ta = np.arctan2(a.position.y, a.position.x)
            tb = np.arctan2(b.position.y, b.position.x)
            return float(min(circle_dist(ta, tb), circle_dist(self.g.lift(ta), self.g.lift(tb))))
        if not a.on_seam and not b.on_seam and a.is_north != b.is_north:
            return float("inf")
        side = "north" if (a.is_north or b.is_north) else "south"
        pa = self._side_position(a, side)
        pb = self._side_position(b, side)
        return float(sigma_array(pa, pb))

    def _side_position(self, p: GluedPoint, side: str) -> np.ndarray:
        if p.on_seam and side == "north":
            theta = np.arctan2(p.position.y, p.position.x)
            return equator_xyz(self.g.lift(theta))
        return p.position.as_array()

    def distance(self, a: GluedPoint, b: GluedPoint, seam_samples: int = 512) -> float:
        xa, na = self.pack([a])
        xb, nb = self.pack([b])
        return float(self.distances(xa, na, xb, nb, seam_samples)[0])

    def distances(
        self,
        xa: np.ndarray,
        na: np.ndarray,
        xb: np.ndarray,
        nb: np.ndarray,
        seam_samples: int = 512,
        candidates: int = 3,
        tol: float = 1e-10,
    ) -> np.ndarray:
        """Batched glued distance between point arrays ``a[i]`` and ``b[i]``.

        Points are given by unit vectors and a north flag; north equator
        points must already be canonical (see :meth:`canonical`).
        """
        if seam_samples < 16:
            raise DomainError("seam_samples must be at least 16")
        xa, xb = np.atleast_2d(xa), np.atleast_2d(xb)
        na, nb = np.asarray(na, dtype=bool).ravel(), np.asarray(nb, dtype=bool).ravel()
        w = self.seam_grid(int(seam_samples))
        n = len(w)
        s_raw = self.cumulative(w)
        s = s_raw - s_raw[0]
        total = self.total
        A = self._to_seam(xa, na, w)
        B = self._to_seam(xb, nb, w)
        phi = seam_min_plus(A, s, total)
        route = phi + B
        rows = np.arange(len(xa))
        gaps = np.diff(np.concatenate([w, [w[0] + TWO_PI]]))
        spacing = np.maximum(gaps, np.roll(gaps, 1))

        best = np.full(len(xa), np.inf)
        taken = np.zeros_like(route, dtype=bool)
        for _ in range(candidates):
            masked = np.where(taken, np.inf, route)
            j = np.argmin(masked, axis=1)
            for off in (-2, -1, 0, 1, 2):
                taken[rows, (j + off) % n] = True
            if total > 0:
                fwd = np.mod(s[j][:, None] - s[None, :], total)
                sd = np.minimum(fwd, total - fwd)
            else:
                sd = np.zeros_like(A)
            i = np.argmin(A + sd, axis=1)
            val = self._refine(xa, na, xb, nb, w[i], w[j], spacing[i], spacing[j], tol)
            best = np.minimum(best, np.minimum(val, route[rows, j]))

        # seam-to-seam pairs: the route entering and leaving at the points
        # themselves costs exactly the seam distance
        both = (~na) & (~nb) & (np.abs(xa[:, 2]) <= SEAM_TOL) & (np.abs(xb[:, 2]) <= SEAM_TOL)
        if np.any(both):
            ta = np.arctan2(xa[both, 1], xa[both, 0])
            tb = np.arctan2(xb[both, 1], xb[both, 0])
            best[both] = np.minimum(best[both], self.seam_distance(ta, tb))

        same = na == nb
        if np.any(same):
            direct = sigma_array(xa[same], xb[same])
            best[same] = np.minimum(best[same], direct)
        return best

    def _objective(self, xa, na, xb, nb, w1, w2) -> np.ndarray:
        ang_a = np.where(na, self.g.lift(w1), w1)
        ang_b = np.where(nb, self.g.lift(w2), w2)
        return (
            sigma_to_equator(xa, ang_a)
            + self.seam_distance(w1, w2)
            + sigma_to_equator(xb, ang_b)
        )

    def _refine(self, xa, na, xb, nb, w1, w2, d1, d2, tol, max_sweeps: int = 30) -> np.ndarray:
        """Golden-section polishing of ``(w, w')`` along four directions.

        ``d1`` and ``d2`` are per-row bracket half-widths for each coordinate.
        """
        f = lambda u, v: self._objective(xa, na, xb, nb, u, v)  # noqa: E731
        cur = f(w1, w2)
        directions = ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0))
        for _ in range(max_sweeps):
            start = cur.copy()
            for du, dv in directions:
                delta = np.maximum(du * d1, abs(dv) * d2)
                lo = -delta
                hi = delta.copy()
                x1 = hi - _GOLD * (hi - lo)
                x2 = lo + _GOLD * (hi - lo)
                f1 = f(w1 + du * x1, w2 + dv * x1)
                f2 = f(w1 + du * x2, w2 + dv * x2)
                while np.max(hi - lo) > tol:
                    left = f1 < f2
                    hi = np.where(left, x2, hi)
                    lo = np.where(left, lo, x1)
                    nx1 = hi - _GOLD * (hi - lo)
                    nx2 = lo + _GOLD * (hi - lo)
                    x1, x2 = np.where(left, nx1, x2), np.where(left, x1, nx2)
                    # exactly one new evaluation per side, vectorised over rows
                    fnew = f(w1 + du * np.where(left, x1, x2), w2 + dv * np.where(left, x1, x2))
                    f1, f2 = np.where(left, fnew, f2), np.where(left, f1, fnew)
                t = 0.5 * (lo + hi)
                ft = f(w1 + du * t, w2 + dv * t)
                better = ft < cur
                w1 = np.where(better, w1 + du * t, w1)
                w2 = np.where(better, w2 + dv * t, w2)
                cur = np.where(better, ft, cur)
            if np.max(start - cur) < 1e-13:
                break
        return cur

    # ------------------------------------------------------------ seam balls

    def seam_window(self, theta0: float, radius: float) -> tuple[float, float]:
        """Smallest arc around ``theta0`` containing all seam points within
        seam distance ``radius``; the full circle when the ball wraps."""
        if 2 * radius >= self.total:
            return theta0 - np.pi, theta0 + np.pi
        s0 = float(self.cumulative(theta0))

        # smallest θ >= θ0 with S(θ) >= S0 + r
        lo, hi = theta0, theta0 + TWO_PI
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if float(self.cumulative(mid)) >= s0 + radius:
                hi = mid
            else:
                lo = mid
        upper = hi
        # largest θ <= θ0 with S(θ) <= S0 - r
        lo, hi = theta0 - TWO_PI, theta0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if float(self.cumulative(mid)) <= s0 - radius:
                lo = mid
            else:
                hi = mid
        lower = lo
        lo, hi = lower, upper
        if hi - lo >= TWO_PI:
            return theta0 - np.pi, theta0 + np.pi
        return lo, hi

    def distances_from_seam_point(
        self,
        theta0: float,
        xyz: np.ndarray,
        north: np.ndarray,
        radius: float | None = None,
        n_window: int = 256,
        tol: float = 1e-11,
        chunk: int = 8192,
    ) -> np.ndarray:
        """Glued distance from the seam point ``theta0`` to many points.

        With ``radius`` given, only seam entry points within seam distance
        ``radius`` are searched; the result is then exact wherever it is at
        most ``radius`` and otherwise only known to exceed ``radius``.
        """
        xyz = np.atleast_2d(np.asarray(xyz, dtype=float))
        north = np.broadcast_to(np.asarray(north, dtype=bool), (len(xyz),))
        if radius is None:
            lo, hi = theta0 - np.pi, theta0 + np.pi
        else:
            lo, hi = self.seam_window(theta0, radius)
        out = np.empty(len(xyz))
        south_grid = np.unique(np.concatenate([np.linspace(lo, hi, n_window), [theta0]]))
        # on the north side the natural parameter is the image angle ψ = G(w)
        glo, ghi, g0 = (float(v) for v in self.g.lift(np.array([lo, hi, theta0])))
        psi = np.unique(np.concatenate([np.linspace(glo, ghi, n_window), [g0]]))
        for side, grid in ((False, south_grid), (True, psi)):
            idx_side = np.nonzero(north == side)[0]
            if not len(idx_side):
                continue
            if side:
                w = self.g.inverse(psi)
                w[np.argmin(np.abs(psi - g0))] = theta0
                ang = psi
            else:
                w = grid
                ang = grid
            sd = self.seam_distance(theta0, w)
            slack = 2.0 * float(np.max(np.diff(grid))) if len(grid) > 1 else np.inf
            for start in range(0, len(idx_side), chunk):
                sel = idx_side[start:start + chunk]
                cost = sd[None, :] + sigma_to_equator(xyz[sel][:, None, :], ang[None, :])
                j = np.argmin(cost, axis=1)
                val = cost[np.arange(len(j)), j]
                need = np.ones(len(j), dtype=bool) if radius is None else np.abs(val - radius) <= slack
                if np.any(need):
                    k = np.nonzero(need)[0]
                    a = grid[np.maximum(j[k] - 1, 0)]
                    b = grid[np.minimum(j[k] + 1, len(grid) - 1)]
                    val[k] = np.minimum(val[k], self._golden_seam(theta0, xyz[sel][k], side, a, b, tol))
                out[sel] = val
        return out

    def _golden_seam(self, theta0, xyz, north: bool, lo, hi, tol):
        """Minimise over one seam parameter: the south angle, or the north
        angle ψ when ``north`` is set (then both terms are 1-Lipschitz)."""
        def f(t):
            w = self.g.inverse(t) if north else t
            return self.seam_distance(theta0, w) + sigma_to_equator(xyz, t)

        lo, hi = lo.copy(), hi.copy()
        x1 = hi - _GOLD * (hi - lo)
        x2 = lo + _GOLD * (hi - lo)
        f1, f2 = f(x1), f(x2)
        while np.max(hi - lo) > tol:
            left = f1 < f2
            hi = np.where(left, x2, hi)
            lo = np.where(left, lo, x1)
            nx1 = hi - _GOLD * (hi - lo)
            nx2 = lo + _GOLD * (hi - lo)
            x1, x2 = np.where(left, nx1, x2), np.where(left, x1, nx2)
            fnew = f(np.where(left, x1, x2))
            f1, f2 = np.where(left, fnew, f2), np.where(left, f1, fnew)
        return np.minimum(f1, f2)


# ---------------------------------------------------------------- module API


def as_metric(g) -> GluedMetric:
    """Return the cached :class:`GluedMetric` of ``g`` (or ``g`` itself)."""
    if isinstance(g, GluedMetric):
        return g
    cached = getattr(g, "_glued_metric", None)
    if cached is None:
        cached = GluedMetric(g)
        object.__setattr__(g, "_glued_metric", cached)
    return cached


def predistance(g, a: GluedPoint, b: GluedPoint) -> float:
    """The one-step cost D(a, b): ∞ across open hemispheres, the smaller of
    the two chart distances for seam pairs, σ otherwise."""
    return as_metric(g).predistance(a, b)


def seam_distance(g, theta1, theta2):
    out = as_metric(g).seam_distance(theta1, theta2)
    return float(out) if np.ndim(out) == 0 else out


def glued_distance(g, a: GluedPoint, b: GluedPoint, seam_samples: int = 512) -> float:
    return as_metric(g).distance(a, b, seam_samples)


@dataclass(frozen=True, eq=False)
class ChainGraph:
    """Seam nodes plus query points.

    Seam nodes are uniform in the south angle and in the north angle (see
    :meth:`GluedMetric.seam_grid`); node ``k < n`` is the seam point ``w_k``,
    shared by both hemispheres.
    Consecutive seam nodes are joined with weight
    ``min(σ(w_k, w_k+1), σ(g w_k, g w_k+1))``; every query point is joined to
    every seam node by σ in its own hemisphere, and two query points in the
    same closed hemisphere are joined directly.
    """

    n_seam: int
    matrix: object

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]


def build_chain_graph(g, points: Sequence[GluedPoint], resolution: int) -> ChainGraph:
    metric = as_metric(g)
    n = int(resolution)
    if n < 8:
        raise DomainError("chain oracle resolution must be at least 8")
    if n > ORACLE_MAX_RESOLUTION:
        raise ResourceError(f"chain oracle resolution {n} exceeds {ORACLE_MAX_RESOLUTION}")
    w = metric.seam_grid(n)
    n = len(w)
    gw = metric.g.lift(w)
    k = np.arange(n)
    nxt = (k + 1) % n
    seam_w = np.minimum(circle_dist(w, w[nxt]), circle_dist(gw, gw[nxt]))
    rows, cols, vals = [k], [nxt], [seam_w]
    xyz, north = metric.pack(points)
    q = len(points)
    for idx in range(q):
        ang = gw if north[idx] else w
        d = sigma_to_equator(xyz[idx], ang)
        rows.append(np.full(n, n + idx))
        cols.append(k)
        vals.append(d)
        for jdx in range(idx + 1, q):
            if north[idx] == north[jdx]:
                rows.append(np.array([n + idx]))
                cols.append(np.array([n + jdx]))
                vals.append(np.array([sigma_array(xyz[idx], xyz[jdx])]))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    v = np.concatenate(vals)
    # zero weights would be dropped by the sparse format; keep them tiny
    v = np.maximum(v, 1e-300)
    mat = coo_matrix((v, (r, c)), shape=(n + q, n + q)).tocsr()
    return ChainGraph(n, mat)


def chain_oracle(g, a: GluedPoint, b: GluedPoint, resolution: int) -> float:
    """Shortest chain from ``a`` to ``b`` in the :class:`ChainGraph`.

    An upper bound for the glued distance that converges to it as the
    resolution grows; resolution is capped at ``ORACLE_MAX_RESOLUTION``.
    """
    graph = build_chain_graph(g, [a, b], resolution)
    dist = dijkstra(graph.matrix, directed=False, indices=graph.n_seam)
    return float(dist[graph.n_seam + 1])


def chain_oracle_many(g, pairs: Sequence[tuple[GluedPoint, GluedPoint]], resolution: int) -> np.ndarray:
    return np.array([chain_oracle(g, a, b, resolution) for a, b in pairs])


def quotient_classes(g, resolution: int = 2**16, rel_tol: float = 1e-9) -> list[tuple[float, float]]:
    """Maximal seam arcs of zero seam measure (the nontrivial fibres of the
    quotient map), as ``(start, end)`` south angles with ``end > start``.

    A whole-seam class is reported as one arc of length 2π.
    """
    metric = as_metric(g)
    n = int(resolution)
    edges = metric.g.origin + TWO_PI * np.arange(n + 1) / n
    s = metric.cumulative(edges)
    zero = np.diff(s) <= rel_tol * (TWO_PI / n)
    if zero.all():
        return [(float(edges[0]), float(edges[-1]))]
    if not zero.any():
        return []
    # rotate so that index 0 is a non-zero cell, then collect runs
    first = int(np.argmin(zero))
    rolled = np.roll(zero, -first)
    padded = np.concatenate([[False], rolled, [False]]).astype(int)
    starts = np.nonzero(np.diff(padded) == 1)[0]
    ends = np.nonzero(np.diff(padded) == -1)[0]
    h = TWO_PI / n
    out = []
    for a, b in zip(starts, ends):
        t0 = edges[0] + (a + first) * h
        out.append((float(t0), float(t0 + (b - a) * h)))
    return out
