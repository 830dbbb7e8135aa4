"""Extensions of circle homeomorphisms to the northern hemisphere and their
distortion.

Two extensions are provided.  The radial extension ``re^{iθ} -> re^{iG(θ)}``
acts on the stereographic chart; its distortion at angle ``θ`` is
``max(G'(θ), 1/G'(θ))`` independently of the radius.  The Beurling-Ahlfors
extension averages the lift over symmetric windows in the upper half-plane
and is carried to the disk through ``w = e^{iz}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .circle_homeo import TWO_PI, CircleHomeo, metric_speed
from .errors import DomainError, UndefinedValueError
from .sphere_geom import DiskPoint, chart_to_sphere, sigma_array, sphere_to_chart


def _singular_value_ratio(jac: np.ndarray) -> np.ndarray:
    """σ_max/σ_min of 2x2 matrices stacked as (..., 2, 2)."""
    s = np.linalg.svd(jac, compute_uv=False)
    with np.errstate(divide="ignore"):
        return s[..., 0] / s[..., 1]


# ------------------------------------------------------------------ radial


@dataclass(frozen=True, eq=False)
class RadialExtension:
    g: CircleHomeo

    def disk_map(self, uv: np.ndarray) -> np.ndarray:
        uv = np.asarray(uv, dtype=float)
        r = np.hypot(uv[..., 0], uv[..., 1])
        ang = self.g.lift(np.arctan2(uv[..., 1], uv[..., 0]))
        return np.stack([r * np.cos(ang), r * np.sin(ang)], axis=-1)

    def __call__(self, p: DiskPoint) -> DiskPoint:
        out = self.disk_map(p.as_array())
        return DiskPoint(float(out[0]), float(out[1]))

    def sphere_map(self, xyz: np.ndarray) -> np.ndarray:
        """The induced map of the closed northern hemisphere."""
        return chart_to_sphere(self.disk_map(sphere_to_chart(xyz, "north")), "north")

    def distortion_array(self, uv: np.ndarray) -> np.ndarray:
        """Vectorised ``max(G', 1/G')`` at the angles of ``uv`` (no checks)."""
        uv = np.asarray(uv, dtype=float)
        v = np.abs(self.g.speed(np.arctan2(uv[..., 1], uv[..., 0])))
        with np.errstate(divide="ignore"):
            return np.maximum(v, 1.0 / v)


def radial_extend(g: CircleHomeo) -> RadialExtension:
    return RadialExtension(g)


def pointwise_distortion(ext: RadialExtension, p: DiskPoint) -> float:
    """Distortion ``K = max(|G'|, 1/|G'|)`` of the radial extension at ``p``.

    At the centre the value is defined only when the speed is constant; at
    angles where the lift is not differentiable :class:`UndefinedValueError`
    is raised.
    """
    if p.radius == 0.0:
        probe = ext.g.speed(ext.g.origin + TWO_PI * (np.arange(4096) + 0.5) / 4096)
        if np.ptp(probe) > 1e-12 or ext.g.kinks:
            raise UndefinedValueError("distortion at the centre is undefined for non-constant speed")
        v = float(probe[0])
    else:
        v = metric_speed(ext.g, p.angle)
    if v == 0.0:
        return float("inf")
    return max(v, 1.0 / v)


def finite_difference_distortion(mapping, uv: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Singular-value ratio of a central-difference Jacobian of a chart map."""
    uv = np.atleast_2d(np.asarray(uv, dtype=float))
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    dx = (mapping(uv + ex) - mapping(uv - ex)) / (2 * h)
    dy = (mapping(uv + ey) - mapping(uv - ey)) / (2 * h)
    jac = np.stack([dx, dy], axis=-1)
    return _singular_value_ratio(jac)


@dataclass
class DistortionField:
    radii: np.ndarray
    angles: np.ndarray
    K: np.ndarray  # (len(radii), len(angles))
    gauge: dict | None = None

    def rows(self) -> list[tuple[float, float, float]]:
        rr, aa = np.meshgrid(self.radii, self.angles, indexing="ij")
        return list(zip(rr.ravel().tolist(), aa.ravel().tolist(), self.K.ravel().tolist()))


def distortion_field(ext: RadialExtension, n_r: int = 8, n_theta: int = 256) -> DistortionField:
    radii = (np.arange(n_r) + 0.5) / n_r
    angles = TWO_PI * (np.arange(n_theta) + 0.5) / n_theta
    rr, aa = np.meshgrid(radii, angles, indexing="ij")
    uv = np.stack([rr * np.cos(aa), rr * np.sin(aa)], axis=-1)
    return DistortionField(radii, angles, ext.distortion_array(uv))


def extension_bilip(mapping, n_samples: int = 20000, seed: int = 0) -> float:
    """Sampled bi-Lipschitz constant of a map of the northern hemisphere.

    ``mapping`` takes (N, 3) unit vectors to (N, 3) unit vectors.  Pairs are
    drawn at log-uniform separations from 1e-5 to 1 around uniform base
    points, in uniformly random directions.
    """
    rng = np.random.default_rng(seed)
    z = rng.uniform(0.0, 1.0, n_samples)
    phi = rng.uniform(0.0, TWO_PI, n_samples)
    s = np.sqrt(1.0 - z * z)
    a = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
    # tangent step of length d in a random direction, projected back
    d = 10.0 ** rng.uniform(-5.0, 0.0, n_samples)
    t = rng.normal(size=(n_samples, 3))
    t -= np.einsum("ij,ij->i", t, a)[:, None] * a
    t /= np.linalg.norm(t, axis=1)[:, None]
    b = np.cos(d)[:, None] * a + np.sin(d)[:, None] * t
    b[:, 2] = np.abs(b[:, 2])
    b /= np.linalg.norm(b, axis=1)[:, None]
    src = sigma_array(a, b)
    dst = sigma_array(mapping(a), mapping(b))
    ok = src > 1e-12
    with np.errstate(divide="ignore"):
        ratio = dst[ok] / src[ok]
        return float(max(np.max(ratio), np.max(1.0 / ratio)))


# ------------------------------------------------------------------ gauges


@dataclass(frozen=True)
class Gauge:
    """Increasing function 𝒜 applied to the distortion before exponentiating.

    ``kind="exp"``: ``𝒜(t) = p (t - 1)``.  ``kind="table"``: monotone cubic
    interpolation of the knots ``(t, a)`` with linear continuation past the
    last knot.
    """

    kind: str = "exp"
    p: float = 1.0
    t: tuple[float, ...] = ()
    a: tuple[float, ...] = ()

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "exp":
            return self.p * (t - 1.0)
        knots = np.asarray(self.t)
        vals = np.asarray(self.a)
        interp = PchipInterpolator(knots, vals, extrapolate=False)
        slope = (vals[-1] - vals[-2]) / (knots[-1] - knots[-2])
        tail = vals[-1] + slope * (t - knots[-1])
        inner = interp(np.clip(t, knots[0], knots[-1]))
        return np.where(t > knots[-1], tail, inner)

    def describe(self) -> dict:
        if self.kind == "exp":
            return {"kind": "exp", "p": self.p}
        return {"kind": "table", "t": list(self.t), "a": list(self.a)}


def check_gauge(gauge: Gauge) -> float:
    """Validate admissibility and return the detected crossover ``t0``
    beyond which ``t 𝒜'(t)`` is increasing.

    Raises :class:`DomainError` naming the violated condition.
    """
    if gauge.kind == "exp":
        if not gauge.p > 0:
            raise DomainError("gauge not strictly increasing (need p > 0)")
        return 1.0
    if gauge.kind != "table":
        raise DomainError(f"unknown gauge kind {gauge.kind!r}")
    t = np.asarray(gauge.t, dtype=float)
    a = np.asarray(gauge.a, dtype=float)
    if len(t) < 3 or len(t) != len(a):
        raise DomainError("gauge table needs at least three (t, a) knots")
    if abs(t[0] - 1.0) > 1e-12 or abs(a[0]) > 1e-12:
        raise DomainError("gauge condition 𝒜(1) = 0 violated")
    if np.any(np.diff(t) <= 0) or np.any(np.diff(a) <= 0):
        raise DomainError("gauge not strictly increasing")
    if (a[-1] - a[-2]) <= 0:
        raise DomainError("gauge tail gives ∫ t⁻²𝒜(t) dt < ∞")
    ts = np.geomspace(1.0, t[-1] * 4, 2048)
    h = 1e-6 * ts
    ta = ts * (gauge(ts + h) - gauge(ts - np.minimum(h, ts - 1.0 + 1e-15))) / (h + np.minimum(h, ts - 1.0 + 1e-15))
    bad = np.nonzero(np.diff(ta) < -1e-9 * np.abs(ta[1:]))[0]
    return float(ts[bad[-1] + 1]) if len(bad) else 1.0


# ------------------------------------------------------------------ integrability


@dataclass
class IntegrabilityReport:
    resolutions: list[int]
    values: list[float]
    verdict: str  # "finite" | "divergent" | "inconclusive"
    crossover: float
    growth: list[float] = field(default_factory=list)

    @property
    def value(self) -> float:
        return self.values[-1]


def _disk_integral(distortion, gauge: Gauge, n_theta: int, n_r: int) -> float:
    # Gauss-Legendre in r (the radial weight is smooth), midpoints in θ so
    # that no node sits on a critical angle
    xr, wr = np.polynomial.legendre.leggauss(n_r)
    radii = 0.5 * (xr + 1.0)
    angles = TWO_PI * (np.arange(n_theta) + 0.5) / n_theta
    rr, aa = np.meshgrid(radii, angles, indexing="ij")
    uv = np.stack([rr * np.cos(aa), rr * np.sin(aa)], axis=-1)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.exp(gauge(distortion(uv)))
    weight = 4.0 * rr / (1.0 + rr * rr) ** 2 * (0.5 * wr)[:, None] * (TWO_PI / n_theta)
    total = float(np.sum(vals * weight))
    return total if np.isfinite(total) else float("inf")


def exp_integrability(ext: RadialExtension, gauge: Gauge, quadrature_resolution: int = 1024,
                      refinements: int = 3, n_r: int = 12, rel_tol: float = 1e-2,
                      growth_factor: float = 1.5) -> IntegrabilityReport:
    """``∫ exp(𝒜(K))`` over the hemisphere in the spherical area, under
    dyadic refinement of the angular midpoint grid.

    Declared divergent when each of ``refinements`` successive doublings
    grows the value by at least ``growth_factor``; finite when the last
    doubling changes it by less than ``rel_tol``.
    """
    t0 = check_gauge(gauge)
    res = [int(quadrature_resolution) * 2**k for k in range(refinements + 1)]
    values = [_disk_integral(ext.distortion_array, gauge, n, n_r) for n in res]
    growth = []
    for prev, cur in zip(values[:-1], values[1:]):
        growth.append(float("inf") if not np.isfinite(cur) else cur / prev)
    if all(gr >= growth_factor for gr in growth):
        verdict = "divergent"
    elif np.isfinite(values[-1]) and abs(values[-1] - values[-2]) <= rel_tol * abs(values[-1]):
        verdict = "finite"
    else:
        verdict = "inconclusive"
    return IntegrabilityReport(res, values, verdict, t0, growth)


def integrability_threshold(ext: RadialExtension, p_max: float = 10.0, quadrature_resolution: int = 1024,
                            refinements: int = 3, iterations: int = 40, n_r: int = 4) -> float:
    """Smallest exponent ``p`` of the gauge ``p(t - 1)`` declared divergent at
    the given base resolution, by bisection; ``inf`` if ``p_max`` is not."""

    def divergent(p):
        rep = exp_integrability(ext, Gauge("exp", p), quadrature_resolution, refinements, n_r)
        return rep.verdict == "divergent"

    if not divergent(p_max):
        return float("inf")
    lo, hi = 0.0, p_max
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if divergent(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ------------------------------------------------------------------ Beurling-Ahlfors

_BA_X, _BA_W = np.polynomial.legendre.leggauss(64)
_BA_T = 0.5 * (_BA_X + 1.0)
_BA_W = 0.5 * _BA_W


@dataclass(frozen=True, eq=False)
class BeurlingAhlforsExtension:
    """Average-based extension of the lift to the upper half-plane.

    ``F(x + iy) = ½∫₀¹ (G(x+ty) + G(x−ty)) dt + i ∫₀¹ (G(x+ty) − G(x−ty)) dt``.
    Periodicity of the lift makes ``F(z + 2π) = F(z) + 2π``, so ``F``
    descends through ``w = e^{iz}`` to a self-map of the unit disk.
    """

    g: CircleHomeo

    def half_plane(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)[..., None]
        y = np.asarray(y, dtype=float)[..., None]
        if np.any(y < 0):
            raise DomainError("the extension is defined on the closed upper half-plane")
        plus = self.g.lift(x + _BA_T * y)
        minus = self.g.lift(x - _BA_T * y)
        re = 0.5 * np.sum((plus + minus) * _BA_W, axis=-1)
        im = np.sum((plus - minus) * _BA_W, axis=-1)
        return re, im

    def disk_map(self, uv: np.ndarray) -> np.ndarray:
        uv = np.asarray(uv, dtype=float)
        r = np.hypot(uv[..., 0], uv[..., 1])
        centre = r == 0
        x = np.arctan2(uv[..., 1], uv[..., 0])
        with np.errstate(divide="ignore"):
            y = np.where(centre, 0.0, -np.log(np.where(centre, 1.0, r)))
        re, im = self.half_plane(x, np.maximum(y, 0.0))
        mod = np.where(centre, 0.0, np.exp(-im))
        return np.stack([mod * np.cos(re), mod * np.sin(re)], axis=-1)

    def sphere_map(self, xyz: np.ndarray) -> np.ndarray:
        return chart_to_sphere(self.disk_map(sphere_to_chart(xyz, "north")), "north")

    def distortion_array(self, uv: np.ndarray, h: float = 1e-6) -> np.ndarray:
        """Distortion from a central-difference Jacobian of ``F`` in the
        half-plane coordinates (the exponential chart is conformal)."""
        uv = np.atleast_2d(np.asarray(uv, dtype=float))
        r = np.hypot(uv[..., 0], uv[..., 1])
        x = np.arctan2(uv[..., 1], uv[..., 0])
        y = -np.log(r)
        step = np.minimum(h, 0.5 * y) if np.all(y > 0) else h
        fx = [(a - b) / (2 * step) for a, b in zip(self.half_plane(x + step, y), self.half_plane(x - step, y))]
        fy = [(a - b) / (2 * step) for a, b in zip(self.half_plane(x, y + step), self.half_plane(x, y - step))]
        jac = np.stack([np.stack([fx[0], fy[0]], -1), np.stack([fx[1], fy[1]], -1)], -2)
        return _singular_value_ratio(jac)


def beurling_ahlfors_extend(g: CircleHomeo) -> BeurlingAhlforsExtension:
    return BeurlingAhlforsExtension(g)


def threshold_ladder(ext: RadialExtension, bases: Sequence[int], **kw) -> list[float]:
    """Thresholds from :func:`integrability_threshold` at several base
    resolutions, for judging their stability under refinement."""
    return [integrability_threshold(ext, quadrature_resolution=b, **kw) for b in bases]
