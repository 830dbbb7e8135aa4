"""Area densities of small balls centred on the seam.

For a seam point ``y`` the ratio ``H²(B̄(y, r)) / πr²`` is split into the part
of the ball lying in each hemisphere.  Each part is at least one half in the
limit, and the limits control the bi-Lipschitz constant of ``g``.  When
``v_g = ε < 1`` near ``y`` the south part tends to ``f(ε)`` below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circle_homeo import bilip_constant
from .errors import DomainError
from .glued_metric import as_metric
from .sphere_geom import chart_to_sphere

DEFAULT_RADII = tuple(0.2 * 2.0**-k for k in range(7))


def f_bound(eps: float) -> float:
    """Sharp lower density of a half ball whose boundary speed is ``eps``:
    ``arcsin(ε)/π + √(1 − ε²)/(πε)``."""
    eps = float(eps)
    if not (0.0 < eps <= 1.0):
        raise DomainError("f_bound needs 0 < eps <= 1")
    return math.asin(eps) / math.pi + math.sqrt(max(0.0, 1.0 - eps * eps)) / (math.pi * eps)


def f_inverse(c: float, tol: float = 1e-10) -> float:
    """The ``ε`` in (0, 1] with ``f(ε) = c``, by bisection."""
    c = float(c)
    if not c >= 0.5:
        raise DomainError("f takes values in [1/2, ∞); need C >= 1/2")
    if c == 0.5:
        return 1.0
    # f(ε) >= 1/(πε) gives f(1/(2πc)) >= 2c > c
    lo, hi = 1.0 / (2.0 * math.pi * c), 1.0
    while hi - lo > tol * lo:
        mid = 0.5 * (lo + hi)
        if f_bound(mid) > c:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def L_of_C(c: float) -> float:
    """Bi-Lipschitz constant certified by total density ``C``: 1/f⁻¹(C)."""
    return 1.0 / f_inverse(c)


# ------------------------------------------------------------------ balls


def _side_area(metric, theta0: float, r: float, north: bool, n: int) -> float:
    lo, hi = metric.seam_window(theta0, r)
    if north:
        lo, hi = (float(v) for v in metric.g.lift(np.array([lo, hi])))
    full = hi - lo >= 2 * math.pi - 1e-12
    if full:
        a0, a1 = theta0 - math.pi, theta0 + math.pi
    else:
        # longitude differs from the nearest window point by at most r
        a0, a1 = lo - r, hi + r
    rho0 = max(0.0, 1.0 - r)  # chart distance to the circle is at most σ
    n_rho = int(n)
    n_ang = int(min(8 * n, max(n, math.ceil(n * (a1 - a0) / (2 * r)))))
    if full:
        n_ang = 4 * n
    rho = rho0 + (1.0 - rho0) * (np.arange(n_rho) + 0.5) / n_rho
    ang = a0 + (a1 - a0) * (np.arange(n_ang) + 0.5) / n_ang
    drho = (1.0 - rho0) / n_rho
    dang = (a1 - a0) / n_ang
    rr, aa = np.meshgrid(rho, ang, indexing="ij")
    uv = np.stack([rr * np.cos(aa), rr * np.sin(aa)], axis=-1).reshape(-1, 2)
    weight = (4.0 * rr / (1.0 + rr * rr) ** 2).ravel() * drho * dang
    xyz = chart_to_sphere(uv, "north" if north else "south")
    d = metric.distances_from_seam_point(theta0, xyz, north, radius=r)
    return float(weight[d <= r * (1 + 1e-12)].sum())


def ball_area(g, theta0: float, r: float, quadrature_resolution: int = 200) -> tuple[float, float]:
    """South and north parts of the area of the closed glued ball of radius
    ``r`` about the seam point ``theta0``.

    Midpoint quadrature in polar chart coordinates over the band of the chart
    that can meet the ball; the chart boundary is a grid line, so only the
    ball's own boundary is approximated.
    """
    if not (0.0 < r < math.pi / 4):
        raise DomainError("ball radius must lie in (0, π/4)")
    metric = as_metric(g)
    south = _side_area(metric, theta0, r, False, quadrature_resolution)
    north = _side_area(metric, theta0, r, True, quadrature_resolution)
    return south, north


def richardson(ratios: np.ndarray, radii: np.ndarray, order: float = 2.0) -> np.ndarray:
    """Extrapolate consecutive pairs assuming ``ratio(r) = C + c r^order``."""
    ratios = np.asarray(ratios, dtype=float)
    radii = np.asarray(radii, dtype=float)
    q = (radii[:-1] / radii[1:]) ** order
    return (q * ratios[1:] - ratios[:-1]) / (q - 1.0)


@dataclass
class DensityReport:
    theta0: float
    radii: np.ndarray
    south: np.ndarray
    north: np.ndarray
    C1: float
    C2: float
    extrapolated_south: np.ndarray = field(repr=False)
    extrapolated_north: np.ndarray = field(repr=False)
    certified: bool = False  # liminf values are estimates, never certificates

    @property
    def total(self) -> np.ndarray:
        return self.south + self.north

    @property
    def ratio_south(self) -> np.ndarray:
        return self.south / (math.pi * self.radii**2)

    @property
    def ratio_north(self) -> np.ndarray:
        return self.north / (math.pi * self.radii**2)

    @property
    def ratio(self) -> np.ndarray:
        return self.ratio_south + self.ratio_north

    @property
    def C(self) -> float:
        return self.C1 + self.C2

    def rows(self) -> list[tuple[float, float, float, float, float]]:
        return [
            (self.theta0, float(r), float(s), float(n), float(q))
            for r, s, n, q in zip(self.radii, self.south, self.north, self.ratio)
        ]


def density_sweep(g, theta0: float, radii: Sequence[float] = DEFAULT_RADII,
                  quadrature_resolution: int = 200) -> DensityReport:
    """Ball areas over a decreasing radius ladder and the extrapolated lower
    densities ``C1`` (south), ``C2`` (north).

    Each liminf is estimated as the minimum over the last three Richardson
    extrapolants of consecutive radii (fewer if the ladder is short).
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) < 2:
        raise DomainError("need at least two radii")
    if np.any(np.diff(radii) >= 0):
        raise DomainError("radii must be strictly decreasing")
    metric = as_metric(g)
    areas = np.array([ball_area(metric, theta0, r, quadrature_resolution) for r in radii])
    south, north = areas[:, 0], areas[:, 1]
    base = math.pi * radii**2
    ext_s = richardson(south / base, radii)
    ext_n = richardson(north / base, radii)
    return DensityReport(
        theta0=float(theta0),
        radii=radii,
        south=south,
        north=north,
        C1=float(np.min(ext_s[-3:])),
        C2=float(np.min(ext_n[-3:])),
        extrapolated_south=ext_s,
        extrapolated_north=ext_n,
    )


@dataclass
class PipelineReport:
    densities: list[DensityReport]
    C_prime: float
    bounds: dict[str, float]
    measured_bilip: float
    tolerance: float

    @property
    def checks(self) -> dict[str, bool]:
        return {k: self.measured_bilip <= v * (1.0 + self.tolerance) for k, v in self.bounds.items()}

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def bilip_bounds(c_prime: float) -> dict[str, float]:
    """The three bi-Lipschitz bounds implied by a total lower density ``C'``:
    ``πC'``, ``(C' − 1/2)π`` and ``L(C' − 1/2)``."""
    excess = max(c_prime - 0.5, 0.5)
    return {
        "pi_C": math.pi * c_prime,
        "pi_C_minus_half": math.pi * (c_prime - 0.5),
        "L_C_minus_half": L_of_C(excess),
    }


def bilip_pipeline(g, sample_points: Sequence[float], radii: Sequence[float] = DEFAULT_RADII,
                       quadrature_resolution: int = 200, n_bilip: int = 8192,
                       tolerance: float = 0.05) -> PipelineReport:
    """From measured seam densities to certified bi-Lipschitz bounds.

    ``C'`` is the largest extrapolated total density over the sample points.
    The measured constant of ``g`` is compared to each bound with relative
    ``tolerance``.
    """
    if len(sample_points) == 0:
        raise DomainError("need at least one sample point")
    metric = as_metric(g)
    reports = [density_sweep(metric, t, radii, quadrature_resolution) for t in sample_points]
    c_prime = max(r.C for r in reports)
    return PipelineReport(reports, c_prime, bilip_bounds(c_prime), bilip_constant(metric.g, n_bilip), tolerance)
