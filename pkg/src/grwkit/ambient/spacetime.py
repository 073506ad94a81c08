"""The warped product -I x_f M^n and its curvature.

Tangent vectors are stored split as ``a d/dt + v`` with ``v`` in fiber
chart components, so ``<U, d/dt> = -a`` and
``<U, V> = -a_U a_V + f^2 g_M(u, v)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import ContractError, UnsupportedError
from ..jets import Jet, stack_matrix
from . import tensors
from .fiber import Fiber, FiberPoint
from .warping import WarpingFunction

NCC_KINDS = ("NCC-Ricci", "NCC-RW", "strong-NCC")
STRICT_EPS = 1e-12
KAPPA_TOL = 1e-9


@dataclass(frozen=True)
class AmbientVector:
    """``a d/dt + v`` at the base point ``(t, x)`` of chart ``chart``."""

    t: np.ndarray
    x: np.ndarray
    a: np.ndarray
    v: np.ndarray
    chart: str | None = None

    def same_base(self, other: "AmbientVector", tol: float = 1e-12) -> bool:
        return (self.chart == other.chart
                and np.allclose(self.t, other.t, rtol=0, atol=tol)
                and np.allclose(self.x, other.x, rtol=0, atol=tol))


class SpacetimePoint:
    """Warping and fiber data evaluated once at a batch of base points.

    Vectors are passed as ``(a, v)`` pairs of arrays so hot loops avoid
    re-evaluating the fiber curvature.
    """

    def __init__(self, spacetime: "GRWSpacetime", t, x, chart=None, fiber_point=None):
        self.spacetime = spacetime
        self.n = spacetime.n
        self.t = np.asarray(t, dtype=float)
        self.x = np.asarray(x, dtype=float)
        self.chart = chart or spacetime.fiber.default_chart
        self.fp: FiberPoint = fiber_point or spacetime.fiber.at(self.x, self.chart)
        w = spacetime.warping
        self.f, self.df, self.ddf = w.derivatives(self.t)
        self.L1 = w.log_d1(self.t)
        self.L2 = w.log_d2(self.t)

    def fiber_inner(self, u, v):
        return np.einsum("...i,...ij,...j->...", u, self.fp.G, v)

    def inner(self, U, V):
        (au, u), (av, v) = U, V
        return -au * av + self.f ** 2 * self.fiber_inner(u, v)

    def curvature(self, U, V, W):
        """R(U, V) W as an ``(a, v)`` pair."""
        (au, u), (av, v), (aw, w) = U, V, W
        uw = self.inner(U, W)
        vw = self.inner(V, W)
        l1sq = self.L1 ** 2
        L2 = self.L2
        rm = tensors.apply_riemann(self.fp.riem, u, v, w)
        c_u = -l1sq * vw + L2 * aw * av
        c_v = l1sq * uw - L2 * aw * au
        a_out = c_u * au + c_v * av + L2 * (av * uw - au * vw)
        v_out = rm + c_u[..., None] * u + c_v[..., None] * v
        return a_out, v_out

    def ricci(self, U, V):
        (au, u), (av, v) = U, V
        n = self.n
        ric_m = np.einsum("...i,...ij,...j->...", u, self.fp.ric, v)
        return (ric_m + (n * self.L1 ** 2 + self.L2) * self.inner(U, V)
                - (n - 1) * self.L2 * au * av)

    def conformal_field(self):
        """K = f d/dt."""
        return self.f, np.zeros_like(self.x)

    def covariant_derivative_K(self, Z):
        """nabla_Z K from the warped-product connection; equals f' Z."""
        az, z = Z
        # nabla_Z (f d/dt) = Z(f) d/dt + f nabla_Z d/dt,  nabla_Z d/dt = (f'/f) z
        return self.df * az, self.df[..., None] * z


@dataclass(frozen=True)
class ConvergenceMargin:
    kind: str
    margin: float
    strict: bool
    fiber_term: float
    sup_expansion: float
    argmax_t: float
    argmin_x: list | None = None
    low_confidence: bool = False
    window: tuple = ()
    notes: str = ""


@dataclass(frozen=True)
class ConstantCurvatureReport:
    residual: float
    kbar: float
    kbar_spread: float
    argmax_t: float


@dataclass(frozen=True)
class GRWSpacetime:
    warping: WarpingFunction
    fiber: Fiber
    slab: tuple | None = None
    extras: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.fiber.dim

    def point(self, t, x, chart=None) -> SpacetimePoint:
        return SpacetimePoint(self, t, x, chart)

    def vector(self, t, x, a, v, chart=None) -> AmbientVector:
        return AmbientVector(np.asarray(t, float), np.asarray(x, float),
                             np.asarray(a, float), np.asarray(v, float),
                             chart or self.fiber.default_chart)

    def _common_point(self, *vectors: AmbientVector) -> SpacetimePoint:
        first = vectors[0]
        for other in vectors[1:]:
            if not first.same_base(other):
                raise ContractError("ambient vectors must share a base point")
        return self.point(first.t, first.x, first.chart)

    def inner(self, U: AmbientVector, V: AmbientVector):
        p = self._common_point(U, V)
        return p.inner((U.a, U.v), (V.a, V.v))

    def ambient_curvature(self, U: AmbientVector, V: AmbientVector,
                          W: AmbientVector) -> AmbientVector:
        p = self._common_point(U, V, W)
        a, v = p.curvature((U.a, U.v), (V.a, V.v), (W.a, W.v))
        return AmbientVector(U.t, U.x, a, v, U.chart)

    def ambient_ricci(self, U: AmbientVector, V: AmbientVector):
        p = self._common_point(U, V)
        return p.ricci((U.a, U.v), (V.a, V.v))

    # -- full (n+1)-metric, used as an independent check -------------------
    def metric_jet(self, t, x, chart=None):
        """2-jet of -dt^2 + f^2 g_M in coordinates (t, x^1..x^n)."""
        ch = self.fiber.chart(chart)
        tx = np.concatenate([np.asarray(t, float)[..., None], np.asarray(x, float)], axis=-1)
        jets = Jet.variables(tx)
        fj = self.warping.jet(jets[0])
        gm = ch.metric(jets[1:])
        f2 = fj * fj
        zero = Jet.constant(0.0, jets[0])
        rows = [[Jet.constant(-1.0, jets[0])] + [zero] * self.n]
        for i in range(self.n):
            rows.append([zero] + [f2 * gm[i][j] for j in range(self.n)])
        return stack_matrix(rows)

    def full_curvature(self, t, x, chart=None):
        G, dG, ddG = self.metric_jet(t, x, chart)
        return G, tensors.christoffel(G, dG), tensors.riemann(G, dG, ddG)

    # -- convergence conditions ------------------------------------------
    def _sup_expansion(self, window):
        lo, hi = window
        m = 4096
        k = np.arange(m)
        ts = 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos(np.pi * (k + 0.5) / m)
        vals = self.warping.null_expansion(ts)
        i = int(np.argmax(vals))
        best_t, best = float(ts[i]), float(vals[i])
        # refine between the neighbouring samples
        order = np.argsort(ts)
        pos = int(np.nonzero(order == i)[0][0])
        a = float(ts[order[max(pos - 1, 0)]])
        b = float(ts[order[min(pos + 1, m - 1)]])
        if b > a:
            res = minimize_scalar(lambda s: -float(self.warping.null_expansion(s)),
                                  bounds=(a, b), method="bounded",
                                  options={"xatol": 1e-13})
            if res.success and -res.fun > best:
                best_t, best = float(res.x), float(-res.fun)
        return best, best_t

    def _window(self, slab):
        if slab is not None:
            return (float(slab[0]), float(slab[1])), False
        lo, hi = self.warping.interval
        if lo is not None and hi is not None:
            return (float(lo), float(hi)), False
        return (lo if lo is not None else -10.0, hi if hi is not None else 10.0), True

    def _fiber_term(self, kind, level=2):
        fb = self.fiber
        if kind == "NCC-RW":
            if fb.kappa is None:
                raise UnsupportedError("NCC-RW needs a fiber with constant curvature")
            return float(fb.kappa), None
        chart, nodes = fb.sample_points(level)
        fp = fb.at(nodes, chart)
        if kind == "NCC-Ricci":
            vals = fb.min_ricci_eigenvalue(fp) / max(self.n - 1, 1)
        else:
            vals = fb.min_sectional_curvature(fp)
        i = int(np.argmin(vals))
        val = float(vals[i])
        if fb.kappa is not None:
            if abs(val - fb.kappa) > KAPPA_TOL * (1 + abs(fb.kappa)):
                raise ContractError(
                    f"declared kappa={fb.kappa} disagrees with chart curvature {val}")
            val = float(fb.kappa)
        return val, nodes[i].tolist()

    def sup_null_expansion(self, slab=None):
        """(sup, argmax, window, unbounded) of ff''-f'^2 over the slab or interval."""
        window, unbounded = self._window(slab if slab is not None else self.slab)
        sup, t_star = self._sup_expansion(window)
        return sup, t_star, window, unbounded

    def ncc_margin(self, kind: str = "NCC-RW", slab=None) -> ConvergenceMargin:
        if kind not in NCC_KINDS:
            raise ContractError(f"unknown convergence kind {kind!r}; expected {NCC_KINDS}")
        fiber_term, where = self._fiber_term(kind)
        window, unbounded = self._window(slab if slab is not None else self.slab)
        sup, t_star = self._sup_expansion(window)
        low = False
        notes = ""
        if unbounded:
            wide = tuple(2.0 * w for w in window)
            sup_wide, t_wide = self._sup_expansion(wide)
            if sup_wide > sup + 1e-9 * (1 + abs(sup)):
                low = True
                notes = (f"sup over {window} = {sup!r} but over {wide} = {sup_wide!r}; "
                         "supremum over the unbounded interval not converged")
                sup, t_star = sup_wide, t_wide
        margin = fiber_term - sup
        return ConvergenceMargin(kind, float(margin), bool(margin > STRICT_EPS),
                                 fiber_term, sup, t_star, where, low,
                                 tuple(float(w) for w in window), notes)

    def constant_curvature_check(self, slab=None, samples: int = 4096) -> ConstantCurvatureReport:
        """sup_t |f''/f - (f'^2 + kappa)/f^2| over sampled t.

        Evaluated as |(log f)'' - kappa / f^2|, which is algebraically the
        same quantity without the cancellation in f''/f - (f'/f)^2.
        """
        kappa = self.fiber.kappa
        if kappa is None:
            raise UnsupportedError("constant-curvature check needs a fiber with constant kappa")
        window, _ = self._window(slab if slab is not None else self.slab)
        ts = np.linspace(window[0], window[1], samples)
        f = self.warping.f(ts)
        res = np.abs(self.warping.log_d2(ts) - kappa / f ** 2)
        kbar = self.warping.ddf(ts) / f
        i = int(np.argmax(res))
        return ConstantCurvatureReport(float(res[i]), float(np.mean(kbar)),
                                       float(np.ptp(kbar)), float(ts[i]))

    def curvature_factor(self, t):
        """kappa / f^2 - (log f)'' (zero exactly when the RW has constant curvature)."""
        if self.fiber.kappa is None:
            raise UnsupportedError("curvature factor needs a fiber with constant kappa")
        t = np.asarray(t, float)
        return self.fiber.kappa / self.warping.f(t) ** 2 - self.warping.log_d2(t)


def make_spacetime(warping: WarpingFunction, fiber: Fiber, slab=None) -> GRWSpacetime:
    if slab is not None:
        lo, hi = float(slab[0]), float(slab[1])
        if not lo < hi:
            raise ContractError(f"slab must satisfy t1 < t2, got {slab}")
        wlo, whi = warping.interval
        if (wlo is not None and lo < wlo) or (whi is not None and hi > whi):
            raise ContractError(f"slab {slab} lies outside the warping interval {warping.interval}")
        warping = warping.with_reference(0.5 * (lo + hi))
        slab = (lo, hi)
    return GRWSpacetime(warping, fiber, slab)
