"""Integrals over compact graphs and the Minkowski integral identities.

Each identity is evaluated as ``lhs - rhs`` and normalised by the L1
mass of its individual terms (before any cancellation), so tolerances do
not depend on the scale of f and stay meaningful when the integrands
vanish pointwise.
Sums use ``math.fsum`` in fixed node order, which makes every integral
bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb
from typing import Callable

import numpy as np

from . import operators as ops
from .ambient.fiber import QuadratureGrid
from .errors import IndexRangeError, UnsupportedError
from .hypersurface import GraphHypersurface, PointGeometry, pointwise_geometry

__all__ = [
    "FORMULAS", "MinkowskiResidual", "QuadratureGrid", "integrate", "integrands",
    "mf1_residual", "mf2_residual", "mf_general_residual", "mfk_residual", "surface_grid",
    "refinement", "convergence_order", "term_magnitude",
]

FORMULAS = ("mf1", "mf2", "mfk", "mf_general")
ROUNDOFF = 1e-12


def surface_grid(surface: GraphHypersurface, level: int) -> QuadratureGrid:
    if not surface.fiber.compact:
        raise UnsupportedError("integration needs a compact fiber")
    return surface.fiber.quadrature(level)


def _values(surface, grid, integrand, orientation):
    geo = pointwise_geometry(surface, grid.nodes, grid.chart, orientation)
    vals = integrand(geo) if callable(integrand) else np.broadcast_to(
        np.asarray(integrand, dtype=float), geo.h.shape)
    return geo, np.asarray(vals, dtype=float)


def integrate(surface: GraphHypersurface, grid: QuadratureGrid,
              integrand: Callable[[PointGeometry], np.ndarray] | float | np.ndarray,
              orientation: str = "future") -> float:
    """Integral over the surface of ``integrand`` (a function of the geometry,
    a constant, or an array of node values)."""
    if not surface.fiber.compact:
        raise UnsupportedError("integration needs a compact fiber")
    geo, vals = _values(surface, grid, integrand, orientation)
    return math.fsum((grid.weights * geo.density * vals).tolist())


def integrands(geo: PointGeometry, formula: str, k: int | None = None):
    """Pointwise (lhs, rhs) integrands of a Minkowski identity."""
    n = geo.n
    if formula == "mf1":
        return geo.df + geo.N_K * geo.Hk(1), np.zeros_like(geo.h)
    if formula == "mf2":
        lhs = n * (n - 1) * (geo.df * geo.Hk(1) + geo.N_K * geo.Hk(2))
        return lhs, geo.N_K * ops.ricci_term(geo)
    if formula == "mfk":
        kappa = geo.surface.fiber.kappa
        if kappa is None:
            raise UnsupportedError("mfk needs a fiber of constant curvature; use mf_general")
        if n < 3 or not 2 <= k <= n - 1:
            raise IndexRangeError(f"mfk needs n >= 3 and 2 <= k <= n-1, got n={n}, k={k}")
        lhs = comb(n, k) * (geo.df * geo.Hk(k) + geo.N_K * geo.Hk(k + 1))
        factor = kappa / geo.f ** 2 - geo.L2
        quad = np.einsum("...i,...ij,...j->...", geo.grad_h, geo.Pk(k - 1), geo.grad_h)
        return lhs, factor * geo.N_K * quad
    if formula == "mf_general":
        if not 0 <= k <= n - 1:
            raise IndexRangeError(f"mf_general needs 0 <= k <= {n - 1}, got {k}")
        ck = geo.newton.c[k]
        lhs = ck * (geo.df * geo.Hk(k) + geo.N_K * geo.Hk(k + 1))
        return lhs, geo.f * ops.divPk_pairing_general(geo, k)
    raise IndexRangeError(f"unknown formula {formula!r}; expected one of {FORMULAS}")


def term_magnitude(geo: PointGeometry, formula: str, k: int | None = None):
    """Pointwise sum of the absolute values of every term of the identity."""
    n = geo.n
    aNK = np.abs(geo.N_K)
    if formula == "mf1":
        return np.abs(geo.df) + aNK * np.abs(geo.Hk(1))
    if formula == "mf2":
        ric = np.abs(ops.ricci_term(geo)) + (n - 1) * np.abs(geo.L2) * geo.grad_h_norm2
        return (n * (n - 1) * (np.abs(geo.df * geo.Hk(1)) + aNK * np.abs(geo.Hk(2)))
                + aNK * ric)
    left, right = integrands(geo, formula, k)
    if formula == "mfk":
        return comb(n, k) * (np.abs(geo.df * geo.Hk(k)) + aNK * np.abs(geo.Hk(k + 1))) + np.abs(right)
    ck = geo.newton.c[k]
    return ck * (np.abs(geo.df * geo.Hk(k)) + aNK * np.abs(geo.Hk(k + 1))) + np.abs(right)


@dataclass(frozen=True)
class MinkowskiResidual:
    formula: str
    k: int
    level: int
    lhs: float
    rhs: float
    residual: float
    scale: float
    trace: tuple = field(default=())

    @property
    def normalized(self) -> float:
        return abs(self.residual) / self.scale if self.scale > 0 else abs(self.residual)

    def row(self) -> dict:
        return {"k": self.k, "level": self.level, "lhs": self.lhs, "rhs": self.rhs,
                "residual": self.residual, "scale": self.scale}


def _residual(surface, grid, formula, k, orientation="future") -> MinkowskiResidual:
    geo = pointwise_geometry(surface, grid.nodes, grid.chart, orientation)
    left, right = integrands(geo, formula, k)
    w = grid.weights * geo.density
    lhs = math.fsum((w * left).tolist())
    rhs = math.fsum((w * right).tolist())
    scale = math.fsum((w * term_magnitude(geo, formula, k)).tolist())
    kk = {"mf1": 0, "mf2": 1}.get(formula, k)
    return MinkowskiResidual(formula, int(kk), grid.level, lhs, rhs, lhs - rhs, scale)


def mf1_residual(surface: GraphHypersurface, grid: QuadratureGrid) -> MinkowskiResidual:
    """int (f'(h) + <N,K> H_1) against 0."""
    return _residual(surface, grid, "mf1", 0)


def mf2_residual(surface: GraphHypersurface, grid: QuadratureGrid) -> MinkowskiResidual:
    """n(n-1) int (f' H_1 + <N,K> H_2) against int <N,K>(Ric_M(N*,N*) - (n-1)(log f)''|grad h|^2)."""
    return _residual(surface, grid, "mf2", 1)


def mfk_residual(surface: GraphHypersurface, grid: QuadratureGrid, k: int) -> MinkowskiResidual:
    return _residual(surface, grid, "mfk", k)


def mf_general_residual(surface: GraphHypersurface, grid: QuadratureGrid,
                        k: int) -> MinkowskiResidual:
    return _residual(surface, grid, "mf_general", k)


def convergence_order(trace, floor: float = ROUNDOFF) -> float:
    """Empirical order of the normalised residuals across refinement levels.

    Levels halve the grid spacing.  The rate is measured from the coarsest
    level to the first level whose residual reaches ``floor`` (or to the
    finest level); residuals are clamped to ``floor``, so a rate measured
    into the floor is a lower bound.  When the coarsest residual is already
    at the floor the order is ``inf`` (converged to rounding).
    """
    if len(trace) < 2:
        return float("nan")
    first = trace[0]
    r0 = max(first.normalized, floor)
    if r0 <= floor:
        return float("inf")
    stop = trace[-1]
    for r in trace[1:]:
        if r.normalized <= floor:
            stop = r
            break
    r1 = max(stop.normalized, floor)
    return math.log2(r0 / r1) / (stop.level - first.level)


def refinement(surface: GraphHypersurface, formula: str, k: int | None = None,
               levels=(2, 3, 4)) -> tuple[MinkowskiResidual, float]:
    """Residual at each level; returns the finest with its trace, and the order."""
    trace = []
    for lev in levels:
        trace.append(_residual(surface, surface_grid(surface, lev), formula, k))
    last = trace[-1]
    final = MinkowskiResidual(last.formula, last.k, last.level, last.lhs, last.rhs,
                              last.residual, last.scale, tuple(trace))
    return final, convergence_order(trace)
