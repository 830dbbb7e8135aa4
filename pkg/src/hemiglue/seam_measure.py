"""Length measure of the seam in the glued space.

The one-dimensional Hausdorff measure of the image of a seam arc ``B`` equals
``∫_B min(1, v_g)``.  This module evaluates that integral from the prefix
table of :class:`~hemiglue.glued_metric.GluedMetric`, compares it with the
length of inscribed polylines, and scans the seam for collapsing arcs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .circle_homeo import TWO_PI
from .errors import DomainError
from .glued_metric import GluedMetric, as_metric, quotient_classes

COLLAPSE_REL_TOL = 1e-9

Arc = tuple[float, float]


@dataclass(frozen=True)
class SeamProfile:
    grid: np.ndarray  # table cell edges (south angles)
    density: np.ndarray  # min(1, v_g) averaged per cell
    prefix: np.ndarray
    collapsed: tuple[Arc, ...]

    @property
    def total(self) -> float:
        return float(self.prefix[-1])


def seam_profile(g) -> SeamProfile:
    m = as_metric(g)
    return SeamProfile(m.cell_edges, m.density, m.prefix, tuple(quotient_classes(m)))


def normalize_arcs(arcs: Iterable[Arc]) -> list[Arc]:
    """Validate a union of arcs ``(start, end)`` with ``start <= end``.

    Arcs may not overlap (touching endpoints are allowed) and together cover
    at most one full turn.
    """
    out = []
    for a, b in arcs:
        a, b = float(a), float(b)
        if not (np.isfinite(a) and np.isfinite(b)) or b < a:
            raise DomainError(f"arc ({a}, {b}) must satisfy start <= end")
        if b - a > TWO_PI + 1e-12:
            raise DomainError(f"arc ({a}, {b}) is longer than the circle")
        out.append((a, b))
    if len(out) > 1:
        starts = np.array([np.mod(a, TWO_PI) for a, _ in out])
        order = np.argsort(starts)
        s = starts[order]
        lengths = np.array([b - a for a, b in out])[order]
        ends = s + lengths
        nxt = np.concatenate([s[1:], [s[0] + TWO_PI]])
        if np.any(ends > nxt + 1e-12):
            raise DomainError("arcs overlap")
    return out


def seam_h1(g, arcs: Sequence[Arc]) -> float:
    """``∫_B min(1, v_g)`` over a disjoint union of arcs ``B``."""
    m = as_metric(g)
    arcs = normalize_arcs(arcs)
    if not arcs:
        return 0.0
    a = np.array([x for x, _ in arcs])
    b = np.array([y for _, y in arcs])
    return float(np.sum(m.cumulative(b) - m.cumulative(a)))


def _intersect(arc: Arc, other: Arc) -> list[Arc]:
    """Intersection of two arcs of length < 2π, as arcs in ``arc``'s chart."""
    a, b = arc
    out = []
    c0 = other[0] + TWO_PI * np.floor((a - other[0]) / TWO_PI)
    for shift in (-TWO_PI, 0.0, TWO_PI):
        lo = max(a, c0 + shift)
        hi = min(b, c0 + shift + (other[1] - other[0]))
        if hi > lo:
            out.append((lo, hi))
    return out


def nu_abs(g, arcs: Sequence[Arc]) -> float:
    """Seam measure with the singular support removed from ``B``.

    ``∫_B min(1, v_g) χ_{S¹ \\ B₀}`` where ``B₀`` is the recorded singular
    support.  On every built-in family the density already vanishes on
    ``B₀``, so this agrees with :func:`seam_h1`; the two are computed
    separately so the agreement is a real check.
    """
    m = as_metric(g)
    arcs = normalize_arcs(arcs)
    total = seam_h1(m, arcs)
    removed = 0.0
    for arc in arcs:
        for sing in m.g.singular_support:
            for lo, hi in _intersect(arc, sing):
                removed += float(m.cumulative(hi) - m.cumulative(lo))
    return total - removed


@dataclass(frozen=True)
class WindowVerdict:
    arc: Arc
    h1: float
    verdict: str  # "collapsing" | "surviving"


def mutual_singularity_scan(g, window: float, step: float | None = None) -> list[WindowVerdict]:
    """Slide an arc of length ``window`` around the seam (step ``window/4``
    by default) and label it collapsing when its seam measure is below
    ``1e-9 * window``."""
    if not window > 0:
        raise DomainError("window must be positive")
    m = as_metric(g)
    step = window / 4 if step is None else float(step)
    starts = m.g.origin + np.arange(0.0, TWO_PI, step)
    h1 = m.cumulative(starts + window) - m.cumulative(starts)
    return [
        WindowVerdict((float(a), float(a + window)), float(v), "collapsing" if v <= COLLAPSE_REL_TOL * window else "surviving")
        for a, v in zip(starts, h1)
    ]


def polyline_seam_length(g, arcs: Sequence[Arc], resolution: int, seam_samples: int = 256) -> float:
    """Sum of glued distances between consecutive points of a partition of
    each arc into ``resolution - 1`` equal pieces."""
    if resolution < 2:
        raise DomainError("need at least two partition points per arc")
    m = as_metric(g)
    total = 0.0
    for a, b in normalize_arcs(arcs):
        t = np.linspace(a, b, int(resolution))
        total += float(np.sum(seam_step_distances(m, t, seam_samples)))
    return total


def seam_step_distances(m: GluedMetric, t: np.ndarray, seam_samples: int = 256) -> np.ndarray:
    """Glued distances between consecutive seam points ``t[i]``, ``t[i+1]``."""
    xyz = np.stack([np.cos(t), np.sin(t), np.zeros_like(t)], axis=1)
    south = np.zeros(len(t), dtype=bool)
    return m.distances(xyz[:-1], south[:-1], xyz[1:], south[1:], seam_samples=seam_samples, candidates=1)
