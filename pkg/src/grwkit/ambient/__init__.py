"""Generalized Robertson-Walker spacetimes: warping, fiber and curvature."""

from .fiber import Chart, Fiber, FiberPoint, QuadratureGrid, make_fiber, perturbed_sphere, sphere, torus
from .spacetime import (AmbientVector, ConstantCurvatureReport, ConvergenceMargin, GRWSpacetime,
                        SpacetimePoint, make_spacetime)
from .warping import WarpingFunction, make_warping

__all__ = [
    "AmbientVector", "Chart", "ConstantCurvatureReport", "ConvergenceMargin", "Fiber",
    "FiberPoint", "GRWSpacetime", "QuadratureGrid", "SpacetimePoint", "WarpingFunction",
    "make_fiber", "make_spacetime", "make_warping", "perturbed_sphere", "sphere", "torus",
]
