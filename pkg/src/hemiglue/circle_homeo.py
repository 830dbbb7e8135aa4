"""Orientation-preserving circle homeomorphisms given by their lifts.

A homeomorphism ``g`` of the unit circle is stored through a lift
``G: R -> R`` with ``G(t + 2π) = G(t) + 2π``.  The lift is described on one
fundamental interval ``[origin, origin + 2π)`` and extended by periodicity.
Each instance also carries the a.e. derivative ``v_g`` (the density of the
absolutely continuous part of the pulled-back length measure), the points
where ``G`` fails to be differentiable, and a description of the arcs that
carry singular mass.

Built-in families:

* isometries (identity, rotations),
* two-sided power maps conjugated to the circle,
* fat-Cantor collapse maps (``v_g = 0`` on a Cantor set of positive length),
* a fully singular map whose lift is a self-similar devil's staircase,
* piecewise linear lifts given by knot lists,
* compositions of the above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .errors import DomainError, UndefinedValueError

TWO_PI = 2.0 * np.pi
DEFAULT_TABLE_SIZE = 2**16
KINK_TOL = 1e-12

# Gauss-Legendre rule used for cell integrals on smooth pieces
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def circle_dist(a, b) -> np.ndarray:
    """Arc-length distance between angles on the unit circle."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), TWO_PI)
    return np.minimum(d, TWO_PI - d)


@dataclass(frozen=True)
class LebesgueDecomposition:
    """Uniform-grid summary of the pulled-back length measure.

    ``density`` samples ``v_g`` at cell midpoints; ``ac_mass`` and
    ``singular_mass`` split the measure of each cell into its absolutely
    continuous and singular parts.
    """

    grid: np.ndarray
    density: np.ndarray
    ac_mass: np.ndarray
    singular_mass: np.ndarray

    @property
    def total_ac(self) -> float:
        return float(self.ac_mass.sum())

    @property
    def total_singular(self) -> float:
        return float(self.singular_mass.sum())

    @property
    def total(self) -> float:
        return self.total_ac + self.total_singular


@dataclass(frozen=True, eq=False)
class CircleHomeo:
    base_lift: Callable[[np.ndarray], np.ndarray]
    base_speed: Callable[[np.ndarray], np.ndarray]
    tag: str
    params: Mapping[str, Any] = field(default_factory=dict)
    origin: float = 0.0
    kinks: tuple[float, ...] = ()
    split_points: tuple[float, ...] = ()
    singular_support: tuple[tuple[float, float], ...] = ()
    singular_arc_mass: tuple[float, ...] = ()
    seam_cdf: Callable[[np.ndarray], np.ndarray] | None = None
    table_size: int = DEFAULT_TABLE_SIZE

    def __post_init__(self) -> None:
        if len(self.singular_arc_mass) not in (0, len(self.singular_support)):
            raise DomainError("one singular mass per singular arc is required")
        n = int(self.table_size)
        if n < 16:
            raise DomainError("table_size must be at least 16")
        edges = self.origin + TWO_PI * np.arange(n + 1) / n
        g_edges = self.lift(edges)
        if np.any(np.diff(g_edges) < 0):
            raise DomainError("lift is not monotone")
        object.__setattr__(self, "_edges", edges)
        object.__setattr__(self, "_g_edges", g_edges)
        object.__setattr__(self, "_decomposition", None)

    # ---------------------------------------------------------- evaluation

    def _reduce(self, theta) -> tuple[np.ndarray, np.ndarray]:
        theta = np.asarray(theta, dtype=float)
        k = np.floor((theta - self.origin) / TWO_PI)
        t = theta - TWO_PI * k
        # guard against t == origin + 2π from rounding
        over = t >= self.origin + TWO_PI
        t = np.where(over, t - TWO_PI, t)
        k = np.where(over, k + 1, k)
        return t, k

    def lift(self, theta) -> np.ndarray:
        t, k = self._reduce(theta)
        return self.base_lift(t) + TWO_PI * k

    def __call__(self, theta) -> np.ndarray:
        return self.lift(theta)

    def speed(self, theta) -> np.ndarray:
        """Vectorized a.e. derivative of the lift (no undefined-point checks)."""
        t, _ = self._reduce(theta)
        return self.base_speed(t)

    def inverse(self, psi, tol: float = 1e-12) -> np.ndarray:
        """Lift of the inverse map, by monotone bisection.

        On an arc that the lift collapses to a point the smallest preimage is
        returned.
        """
        psi = np.asarray(psi, dtype=float)
        g0 = float(self.base_lift(np.array(self.origin)))
        k = np.floor((psi - g0) / TWO_PI)
        target = psi - TWO_PI * k
        lo = np.full(target.shape, self.origin)
        hi = np.full(target.shape, self.origin + TWO_PI)
        n_iter = int(math.ceil(math.log2(TWO_PI / tol))) + 2
        for _ in range(n_iter):
            mid = 0.5 * (lo + hi)
            below = self.base_lift(mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return hi + TWO_PI * k

    @property
    def singular_mass(self) -> float:
        return float(sum(self.singular_arc_mass))

    def in_singular_interior(self, theta) -> np.ndarray:
        """Mask of angles inside an arc carrying positive singular mass."""
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape, dtype=bool)
        for (a, b), m in zip(self.singular_support, self.singular_arc_mass):
            if m <= 0:
                continue
            if b - a >= TWO_PI - 1e-15:
                return np.ones(theta.shape, dtype=bool)
            s = np.mod(theta - a, TWO_PI)
            out |= (s > 0) & (s < b - a)
        return out

    # ---------------------------------------------------------- tables

    @property
    def cell_edges(self) -> np.ndarray:
        return self._edges

    @property
    def lift_at_edges(self) -> np.ndarray:
        return self._g_edges

    def cell_integrals(self, integrand: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """∫ integrand(v_g) over each table cell.

        Cells are split at the kinks and split points of the family so that the
        Gauss-Legendre rule only sees smooth pieces.
        """
        edges = self._edges
        cuts = [np.mod(np.asarray(self.kinks + self.split_points) - self.origin, TWO_PI) + self.origin]
        nodes = np.unique(np.concatenate([edges] + cuts))
        a, b = nodes[:-1], nodes[1:]
        half = 0.5 * (b - a)
        x = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
        vals = integrand(self.speed(x))
        piece = half * (vals * _GL_W[None, :]).sum(axis=1)
        start = np.searchsorted(nodes, edges[:-1])
        return np.add.reduceat(piece, start)

    def decomposition(self) -> LebesgueDecomposition:
        if self._decomposition is not None:
            return self._decomposition
        edges = self._edges
        mid = 0.5 * (edges[:-1] + edges[1:])
        dg = np.diff(self._g_edges)
        if self.singular_mass == 0:
            ac = dg.copy()
        else:
            ac = np.minimum(self.cell_integrals(lambda v: v), dg)
        dec = LebesgueDecomposition(mid, self.speed(mid), ac, dg - ac)
        object.__setattr__(self, "_decomposition", dec)
        return dec

    # ---------------------------------------------------------- descriptor

    def descriptor(self) -> dict[str, Any]:
        return {"family": self.tag, **{k: _plain(v) for k, v in self.params.items()}}


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


# ---------------------------------------------------------------- queries


def metric_speed(g: CircleHomeo, theta: float) -> float:
    """Metric speed of ``g`` at ``theta``.

    Raises :class:`UndefinedValueError` at kinks of the lift and inside arcs
    that carry singular mass; returns 0 where the lift is locally constant.
    """
    theta = float(theta)
    if g.kinks and np.min(circle_dist(theta, np.asarray(g.kinks))) < KINK_TOL:
        raise UndefinedValueError(f"lift of {g.tag} is not differentiable at θ={theta!r}")
    if bool(g.in_singular_interior(theta)):
        raise UndefinedValueError(f"θ={theta!r} lies in an arc carrying singular mass")
    v = float(g.speed(theta))
    if not np.isfinite(v):
        raise UndefinedValueError(f"speed of {g.tag} is infinite at θ={theta!r}")
    return abs(v)


def lipschitz_constants(g: CircleHomeo, n_samples: int) -> tuple[float, float]:
    """Sampled Lipschitz constants of ``g`` and of its inverse.

    Pairs are taken at all dyadic index offsets of a uniform sample, which
    catches both local slopes and global stretching.  Both values are lower
    bounds for the true constants; the inverse value is ``inf`` when two
    distinct samples share an image.
    """
    if n_samples < 2:
        raise DomainError("n_samples must be at least 2")
    theta = g.origin + TWO_PI * (np.arange(n_samples) + 0.5) / n_samples
    gt = g.lift(theta)
    fwd, inv = 0.0, 0.0
    s = 1
    with np.errstate(divide="ignore", invalid="ignore"):
        while s <= n_samples // 2:
            j = (np.arange(n_samples) + s) % n_samples
            dx = circle_dist(theta, theta[j])
            dy = circle_dist(gt, gt[j])
            fwd = max(fwd, float(np.max(dy / dx)))
            ratio = np.where(dy > 0, dx / dy, np.inf)
            inv = max(inv, float(np.max(ratio)))
            s *= 2
    return fwd, inv


def bilip_constant(g: CircleHomeo, n_samples: int = 4096) -> float:
    """Sampled bi-Lipschitz constant max(Lip g, Lip g⁻¹); may be ``inf``."""
    return max(lipschitz_constants(g, n_samples))


# ---------------------------------------------------------------- families


def make_rotation(phi: float = 0.0, table_size: int = DEFAULT_TABLE_SIZE) -> CircleHomeo:
    phi = float(phi)
    return CircleHomeo(
        base_lift=lambda t: t + phi,
        base_speed=lambda t: np.ones_like(t),
        tag="isometry",
        params={"rotation": phi},
        seam_cdf=lambda t: t,
        table_size=table_size,
    )


def make_identity(table_size: int = DEFAULT_TABLE_SIZE) -> CircleHomeo:
    return make_rotation(0.0, table_size)


def _unit_crossing(a: float) -> float | None:
    """Point y in (0,1) where (1/a) y^(1/a - 1) = 1, if a > 1."""
    if a <= 1:
        return None
    return a ** (a / (1.0 - a))


def make_power_homeo(alpha: float, beta: float, table_size: int = DEFAULT_TABLE_SIZE) -> CircleHomeo:
    """Circle map conjugate to the two-sided power map on [-1, 1].

    With ``h(x) = x^α`` for ``x ≥ 0`` and ``-(-x)^β`` for ``x < 0`` and the
    parametrization ``t -> (cos πt, sin πt)``, the lift is
    ``G(φ) = π h⁻¹(φ/π)`` on ``[-π, π)``.  The critical point is angle 0.
    """
    alpha, beta = float(alpha), float(beta)
    if not (1.0 <= alpha <= beta) or not np.isfinite(beta):
        raise DomainError("power homeomorphism requires 1 <= alpha <= beta")
    ia, ib = 1.0 / alpha, 1.0 / beta

    def base(t):
        y = t / np.pi
        return np.pi * np.where(y >= 0, np.abs(y) ** ia, -(np.abs(y) ** ib))

    def speed(t):
        y = np.abs(t / np.pi)
        with np.errstate(divide="ignore"):
            pos = ia * y ** (ia - 1.0)
            neg = ib * y ** (ib - 1.0)
        return np.where(t >= 0, pos, neg)

    kinks = []
    if alpha > 1 or beta > 1:
        kinks.append(0.0)
    if alpha != beta:
        kinks.append(np.pi)
    splits = []
    ya, yb = _unit_crossing(alpha), _unit_crossing(beta)
    if ya is not None:
        splits.append(np.pi * ya)
    if yb is not None:
        splits.append(-np.pi * yb)
    return CircleHomeo(
        base_lift=base,
        base_speed=speed,
        tag="power",
        params={"alpha": alpha, "beta": beta},
        origin=-np.pi,
        kinks=tuple(kinks),
        split_points=tuple(splits) + (0.0,),
        table_size=table_size,
    )


def fat_cantor_intervals(fraction: float, levels: int) -> np.ndarray:
    """Closed intervals of the level-``levels`` fat Cantor set in [0, 1].

    Stage ``n`` removes a centred open interval from each of the ``2^(n-1)``
    current intervals; the stage-``n`` removals have total length
    ``(1 - fraction) 2^-n / (1 - 2^-levels)``, so after the last stage the
    remaining ``2^levels`` intervals have total length exactly ``fraction``.
    """
    if not (0.0 < fraction < 1.0):
        raise DomainError("cantor measure fraction must lie in (0, 1)")
    if int(levels) != levels or levels < 1:
        raise DomainError("levels must be a positive integer")
    levels = int(levels)
    norm = 1.0 - 2.0**-levels
    iv = np.array([[0.0, 1.0]])
    for n in range(1, levels + 1):
        gap = (1.0 - fraction) * 2.0**-n / norm / 2 ** (n - 1)
        mid = 0.5 * (iv[:, 0] + iv[:, 1])
        left = np.stack([iv[:, 0], mid - gap / 2], axis=1)
        right = np.stack([mid + gap / 2, iv[:, 1]], axis=1)
        iv = np.stack([left, right], axis=1).reshape(-1, 2)
    return iv


def _gap_measure_below(iv: np.ndarray, x: np.ndarray) -> np.ndarray:
    """|[0, x] \\ E| for E a sorted disjoint union of closed intervals in
    [0, 1] containing 0; monotone in ``x`` under floating point rounding."""
    x = np.asarray(x, dtype=float)
    gaps = iv[1:, 0] - iv[:-1, 1]
    cum = np.concatenate([[0.0], np.cumsum(gaps)])
    k = np.clip(np.searchsorted(iv[:, 0], x, side="right") - 1, 0, len(iv) - 1)
    return cum[k] + np.clip(x - iv[k, 1], 0.0, None)


def make_cantor_homeo(fraction: float, levels: int, table_size: int = DEFAULT_TABLE_SIZE) -> CircleHomeo:
    """Map collapsing a fat Cantor set on the upper half of the seam.

    ``E`` is the level-``levels`` fat Cantor set of measure ``fraction``,
    placed on the arc ``[0, π]`` via ``x -> πx``.  On that arc the lift is
    ``π h(φ/π)`` with ``h(x) = |[0, x] \\ E| / (1 - fraction)``; elsewhere it
    is the identity.  Hence ``v_g = 0`` on the image of ``E`` and
    ``1/(1 - fraction)`` on its gaps.  ``fraction = 0`` gives the identity.
    """
    fraction = float(fraction)
    if fraction == 0.0:
        iv = np.zeros((0, 2))
    else:
        iv = fat_cantor_intervals(fraction, levels)
    scale = 1.0 / (1.0 - fraction)

    def base(t):
        x = t / np.pi
        inside = (x > 0) & (x < 1)
        xc = np.clip(x, 0.0, 1.0)
        hx = _gap_measure_below(iv, xc) * scale if len(iv) else xc
        return np.where(inside, np.pi * hx, t)

    def speed(t):
        x = t / np.pi
        out = np.ones_like(np.asarray(t, dtype=float))
        if not len(iv):
            return out
        inside = (x >= 0) & (x <= 1)
        k = np.searchsorted(iv[:, 0], x, side="right") - 1
        in_e = (k >= 0) & (x <= iv[np.maximum(k, 0), 1])
        return np.where(inside, np.where(in_e, 0.0, scale), out)

    def seam_cdf(t):
        t = np.asarray(t, dtype=float)
        x = np.clip(t / np.pi, 0.0, 1.0)
        kept = _gap_measure_below(iv, x) if len(iv) else x
        return np.where(t < 0, t + np.pi, np.pi + np.pi * kept)

    ends = tuple((np.pi * iv).ravel().tolist())
    arcs = tuple((float(np.pi * a), float(np.pi * b)) for a, b in iv)
    return CircleHomeo(
        base_lift=base,
        base_speed=speed,
        tag="cantor",
        params={"fraction": fraction, "levels": int(levels)},
        origin=-np.pi,
        kinks=ends,
        singular_support=arcs,
        singular_arc_mass=tuple(0.0 for _ in arcs),
        seam_cdf=seam_cdf,
        table_size=table_size,
    )


def binomial_cdf(x: np.ndarray, p: float, digits: int = 60) -> np.ndarray:
    """Distribution function on [0, 1) of the self-similar measure giving the
    left half of every dyadic interval the fraction ``p`` of its mass."""
    x = np.asarray(x, dtype=float).copy()
    out = np.zeros_like(x)
    scale = np.ones_like(x)
    for _ in range(digits):
        x *= 2.0
        d = x >= 1.0
        x = np.where(d, x - 1.0, x)
        out += np.where(d, scale * p, 0.0)
        scale *= np.where(d, 1.0 - p, p)
    return out


def make_singular_homeo(p: float = 0.3, table_size: int = DEFAULT_TABLE_SIZE) -> CircleHomeo:
    """Homeomorphism whose lift is a devil's staircase of a doubling measure.

    ``G(θ) = 2π F(θ/2π)`` with ``F`` the distribution function of a
    self-similar binomial measure; for ``p ≠ 1/2`` this measure is singular,
    so ``v_g = 0`` a.e. and the whole circle carries singular mass 2π.
    """
    p = float(p)
    if not (0.0 < p < 1.0) or p == 0.5:
        raise DomainError("singular staircase needs p in (0, 1) with p != 1/2")
    return CircleHomeo(
        base_lift=lambda t: TWO_PI * binomial_cdf(t / TWO_PI, p),
        base_speed=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        tag="singular",
        params={"p": p},
        singular_support=((0.0, TWO_PI),),
        singular_arc_mass=(TWO_PI,),
        seam_cdf=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        table_size=table_size,
    )


def make_pwl_homeo(breakpoints: Sequence[tuple[float, float]], table_size: int = DEFAULT_TABLE_SIZE) -> CircleHomeo:
    """Piecewise linear lift through the knots ``(θ_i, G(θ_i))``.

    The knots must be strictly increasing in both coordinates and span
    exactly one period: ``θ_K = θ_0 + 2π`` and ``G_K = G_0 + 2π``.
    """
    pts = np.asarray(breakpoints, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise DomainError("breakpoints must be a list of (θ, G(θ)) pairs")
    th, gv = pts[:, 0], pts[:, 1]
    if np.any(np.diff(th) <= 0) or np.any(np.diff(gv) <= 0):
        raise DomainError("breakpoints must be strictly increasing in θ and G(θ)")
    if abs(th[-1] - th[0] - TWO_PI) > 1e-9 or abs(gv[-1] - gv[0] - TWO_PI) > 1e-9:
        raise DomainError("breakpoints must span one period (total increase 2π in θ and G)")
    th = th.copy()
    gv = gv.copy()
    th[-1] = th[0] + TWO_PI
    gv[-1] = gv[0] + TWO_PI
    slopes = np.diff(gv) / np.diff(th)
    seam_vals = np.concatenate([[0.0], np.cumsum(np.minimum(slopes, 1.0) * np.diff(th))])

    def speed(t):
        k = np.clip(np.searchsorted(th, t, side="right") - 1, 0, len(slopes) - 1)
        return slopes[k]

    kinks = tuple(float(t) for t, s0, s1 in zip(th[:-1], np.roll(slopes, 1), slopes) if s0 != s1)
    return CircleHomeo(
        base_lift=lambda t: np.interp(t, th, gv),
        base_speed=speed,
        tag="pwl",
        params={"breakpoints": pts.tolist()},
        origin=float(th[0]),
        kinks=kinks,
        seam_cdf=lambda t: np.interp(t, th, seam_vals),
        table_size=table_size,
    )


def make_density_patch(eps: float, center: float = np.pi / 2, width: float = np.pi,
                       table_size: int = DEFAULT_TABLE_SIZE) -> CircleHomeo:
    """PWL map with constant speed ``eps`` on the arc of length ``width``
    centred at ``center`` and constant speed on the complementary arc."""
    if not (0 < eps) or not (0 < width < TWO_PI):
        raise DomainError("need eps > 0 and 0 < width < 2π")
    a = center - width / 2
    knots = [(a, a), (a + width, a + eps * width), (a + TWO_PI, a + TWO_PI)]
    g = make_pwl_homeo(knots, table_size)
    params = {"eps": float(eps), "center": float(center), "width": float(width)}
    return replace(g, tag="patch", params=params)


def make_two_slope(low: float, high: float, table_size: int = DEFAULT_TABLE_SIZE) -> CircleHomeo:
    """PWL map with speed ``low`` on ``[0, a]`` and ``high`` on ``[a, 2π]``.

    ``a = 2π (high - 1)/(high - low)`` makes the total increase 2π; requires
    ``low < 1 < high``.  Its bi-Lipschitz constant is ``max(high, 1/low)``.
    """
    if not (0 < low < 1 < high):
        raise DomainError("two-slope map needs 0 < low < 1 < high")
    a = TWO_PI * (high - 1.0) / (high - low)
    return make_pwl_homeo([(0.0, 0.0), (a, low * a), (TWO_PI, TWO_PI)], table_size)


def compose(outer: CircleHomeo, inner: CircleHomeo, table_size: int = DEFAULT_TABLE_SIZE) -> CircleHomeo:
    """The homeomorphism ``outer ∘ inner``."""
    kinks = tuple(inner.kinks) + tuple(float(x) for x in inner.inverse(np.asarray(outer.kinks, dtype=float)))
    splits = tuple(inner.split_points) + tuple(
        float(x) for x in inner.inverse(np.asarray(outer.split_points, dtype=float))
    )
    return CircleHomeo(
        base_lift=lambda t: outer.lift(inner.lift(t)),
        base_speed=lambda t: outer.speed(inner.lift(t)) * inner.speed(t),
        tag="composed",
        params={"outer": outer.descriptor(), "inner": inner.descriptor()},
        origin=inner.origin,
        kinks=kinks,
        split_points=splits,
        singular_support=inner.singular_support,
        singular_arc_mass=inner.singular_arc_mass,
        table_size=table_size,
    )


_FAMILIES: dict[str, Callable[..., CircleHomeo]] = {
    "isometry": lambda rotation=0.0, **kw: make_rotation(rotation, **kw),
    "identity": lambda **kw: make_identity(**kw),
    "power": lambda alpha, beta, **kw: make_power_homeo(alpha, beta, **kw),
    "cantor": lambda fraction, levels, **kw: make_cantor_homeo(fraction, levels, **kw),
    "singular": lambda p=0.3, **kw: make_singular_homeo(p, **kw),
    "pwl": lambda breakpoints, **kw: make_pwl_homeo(breakpoints, **kw),
    "patch": lambda eps, center=np.pi / 2, width=np.pi, **kw: make_density_patch(eps, center, width, **kw),
}


def from_descriptor(desc: Mapping[str, Any], table_size: int = DEFAULT_TABLE_SIZE) -> CircleHomeo:
    """Rebuild a homeomorphism from the dictionary produced by ``descriptor``."""
    desc = dict(desc)
    family = desc.pop("family", None)
    if family == "composed":
        return compose(from_descriptor(desc["outer"], table_size), from_descriptor(desc["inner"], table_size), table_size)
    if family not in _FAMILIES:
        raise DomainError(f"unknown homeomorphism family {family!r}")
    try:
        return _FAMILIES[family](**desc, table_size=table_size)
    except TypeError as exc:
        raise DomainError(f"bad parameters for family {family!r}: {exc}") from None
