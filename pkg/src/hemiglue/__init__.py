"""Metrics on two hemispheres glued along the equator by a circle homeomorphism.

Modules: ``sphere_geom`` (hemisphere charts and meshes), ``circle_homeo``
(homeomorphism families), ``glued_metric`` (the glued distance and chain
oracle), ``seam_measure`` (length of the seam), ``density`` (ball areas at
seam points), ``extension`` (extensions to the disk and their distortion),
``modulus`` (discrete conformal modulus) and ``cli``.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .circle_homeo import CircleHomeo, from_descriptor
from .errors import (
    ConfigError, DomainError, HemiglueError, InfeasibleError, PoleError, ResourceError, UndefinedValueError,
)
from .glued_metric import GluedMetric, GluedPoint, glued_distance, seam_distance

__all__ = [
    "CircleHomeo", "from_descriptor", "GluedMetric", "GluedPoint", "glued_distance", "seam_distance",
    "HemiglueError", "DomainError", "PoleError", "ConfigError", "ResourceError", "UndefinedValueError",
    "InfeasibleError", "__version__",
]
