"""Compact Riemannian fibers described by charts with metric 2-jets.

Built-in fibers:

* ``torus``  flat T^n = (R / 2 pi Z)^n, one periodic chart, kappa = 0.
* ``sphere`` round S^n(r), n in {2, 3}: a polar chart for n = 2 (a Hopf
  chart for n = 3) plus two stereographic charts.  kappa = 1 / r^2.
* ``perturbed-sphere``  S^2 with metric (1 + eps Y) g_round, Y a
  polynomial in the unit embedding coordinates.  Its curvature is not
  constant and is only ever computed from the metric 2-jet.

Curvature always comes out of :mod:`grwkit.ambient.tensors` applied to
the chart metric jet, for every fiber; a declared ``kappa`` is a claim
that tests compare against, never a shortcut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import jets as J
from ..errors import ContractError, UnsupportedError
from ..jets import Jet, stack_matrix
from . import tensors

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Chart:
    name: str
    dim: int
    lo: tuple
    hi: tuple
    periodic: tuple
    metric: Callable  # list[Jet] -> n x n nested list of Jet
    embed: Callable  # list[Jet] -> list[Jet] (coordinates seen by surface bases)
    from_embedding: Callable  # ndarray (..., e) -> ndarray (..., n)

    def contains(self, x, margin: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ok = np.ones(x.shape[:-1], dtype=bool)
        for i in range(self.dim):
            if self.periodic[i]:
                continue
            lo, hi = self.lo[i], self.hi[i]
            if lo is not None:
                ok &= x[..., i] > lo + margin
            if hi is not None:
                ok &= x[..., i] < hi - margin
        return ok


@dataclass(frozen=True)
class QuadratureGrid:
    """Chart nodes and coordinate weights; multiply by the surface density.

    ``weights`` integrate functions against the chart Lebesgue measure
    ``dx``, so ``sum(w * F)`` approximates ``int F dx``.
    """

    chart: str
    nodes: np.ndarray
    weights: np.ndarray
    level: int
    shape: tuple
    spacing: float

    @property
    def size(self) -> int:
        return self.nodes.shape[0]


@dataclass(frozen=True)
class FiberPoint:
    """Metric jet and curvature of a fiber at a batch of chart points."""

    chart: str
    x: np.ndarray
    G: np.ndarray
    dG: np.ndarray
    ddG: np.ndarray
    gamma: np.ndarray
    riem: np.ndarray
    ric: np.ndarray


@dataclass(frozen=True)
class Fiber:
    kind: str
    dim: int
    charts: dict
    default_chart: str
    kappa: float | None = None
    compact: bool = True
    volume: float | None = None
    params: dict = field(default_factory=dict)
    basis: str = "fourier"

    def chart(self, name: str | None = None) -> Chart:
        name = name or self.default_chart
        try:
            return self.charts[name]
        except KeyError:
            raise ContractError(f"fiber {self.kind} has no chart {name!r}; "
                                f"charts: {sorted(self.charts)}") from None

    def metric_jet(self, x, chart: str | None = None):
        ch = self.chart(chart)
        xj = Jet.variables(x)
        return stack_matrix(ch.metric(xj))

    def embedding(self, x, chart: str | None = None) -> np.ndarray:
        ch = self.chart(chart)
        return np.stack([e.val for e in ch.embed(Jet.variables(x))], axis=-1)

    def transfer(self, x, source: str, target: str) -> np.ndarray:
        """Coordinates in chart ``target`` of the points ``x`` of ``source``."""
        return self.chart(target).from_embedding(self.embedding(x, source))

    def at(self, x, chart: str | None = None) -> FiberPoint:
        name = chart or self.default_chart
        x = np.asarray(x, dtype=float)
        G, dG, ddG = self.metric_jet(x, name)
        gamma = tensors.christoffel(G, dG)
        riem = tensors.riemann(G, dG, ddG)
        ric = tensors.ricci(G, riem)
        return FiberPoint(name, x, G, dG, ddG, gamma, riem, ric)

    def sectional_curvature(self, x, u, v, chart: str | None = None):
        fp = self.at(x, chart)
        return tensors.sectional(fp.G, fp.riem, np.asarray(u, float), np.asarray(v, float))

    def min_ricci_eigenvalue(self, fp: FiberPoint) -> np.ndarray:
        """Smallest eigenvalue of Ric relative to g (Ric(v,v) >= lam g(v,v))."""
        L = np.linalg.cholesky(fp.G)
        Linv = np.linalg.inv(L)
        S = Linv @ fp.ric @ np.swapaxes(Linv, -1, -2)
        return np.linalg.eigvalsh(0.5 * (S + np.swapaxes(S, -1, -2)))[..., 0]

    def min_sectional_curvature(self, fp: FiberPoint, rng=None, samples: int = 256):
        """Smallest sectional curvature at each point.

        Exact for n = 2 (Gaussian curvature) and n = 3 (where the
        curvature of the plane orthogonal to a unit e is
        scal/2 - Ric(e, e)).  For n >= 4 planes are sampled, so the value
        is an upper bound on the true minimum.
        """
        n = self.dim
        L = np.linalg.cholesky(fp.G)
        Linv = np.linalg.inv(L)
        ric_on = Linv @ fp.ric @ np.swapaxes(Linv, -1, -2)
        ric_on = 0.5 * (ric_on + np.swapaxes(ric_on, -1, -2))
        eig = np.linalg.eigvalsh(ric_on)
        if n == 2:
            return eig[..., 0]
        if n == 3:
            scal = np.sum(eig, axis=-1)
            return 0.5 * scal - eig[..., -1]
        rng = rng or np.random.default_rng(0)
        best = np.full(fp.G.shape[:-2], np.inf)
        frame = np.swapaxes(Linv, -1, -2)  # columns: orthonormal frame in chart comps
        for _ in range(samples):
            a = rng.normal(size=n)
            b = rng.normal(size=n)
            u = frame @ a
            v = frame @ b
            best = np.minimum(best, tensors.sectional(fp.G, fp.riem, u, v))
        return best

    def sample_points(self, level: int = 2) -> tuple[str, np.ndarray]:
        grid = self.quadrature(level)
        return grid.chart, grid.nodes

    def quadrature(self, level: int) -> QuadratureGrid:
        if level < 1:
            raise ContractError(f"grid level must be >= 1, got {level}")
        return _QUADRATURE[self.kind](self, level)


# --- torus -----------------------------------------------------------------

def _flat_metric(xj):
    n = len(xj)
    one = Jet.constant(1.0, xj[0])
    zero = Jet.constant(0.0, xj[0])
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def _wrap_angles(E):
    return np.mod(np.asarray(E, dtype=float), TWO_PI)


def torus(dim: int) -> Fiber:
    if dim < 1:
        raise ContractError("torus dimension must be >= 1")
    chart = Chart("angles", dim, (0.0,) * dim, (TWO_PI,) * dim, (True,) * dim,
                  _flat_metric, lambda xj: list(xj), _wrap_angles)
    return Fiber("torus", dim, {"angles": chart}, "angles", kappa=0.0,
                 volume=TWO_PI ** dim, basis="fourier")


def _torus_quadrature(fiber: Fiber, level: int) -> QuadratureGrid:
    n = fiber.dim
    m = 2 ** (level + 1)
    h = TWO_PI / m
    axes = [np.arange(m) * h] * n
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    w = np.full(mesh.shape[0], h ** n)
    return QuadratureGrid("angles", mesh, w, level, (m,) * n, h)


# --- spheres ---------------------------------------------------------------

def _stereo_embed(sign):
    # sign=+1: projection from the north pole, sign=-1: from the south pole
    def embed(yj):
        r2 = yj[0] * yj[0]
        for y in yj[1:]:
            r2 = r2 + y * y
        den = (r2 + 1.0).reciprocal()
        coords = [2.0 * y * den for y in yj]
        coords.append(sign * (r2 - 1.0) * den)
        return coords
    return embed


def _stereo_from(sign):
    def inverse(E):
        E = np.asarray(E, dtype=float)
        return E[..., :-1] / (1.0 - sign * E[..., -1:])
    return inverse


def _stereo_metric(radius):
    def metric(yj):
        r2 = yj[0] * yj[0]
        for y in yj[1:]:
            r2 = r2 + y * y
        conf = 4.0 * radius ** 2 * ((r2 + 1.0) ** 2).reciprocal()
        zero = Jet.constant(0.0, yj[0])
        n = len(yj)
        return [[conf if i == j else zero for j in range(n)] for i in range(n)]
    return metric


def _polar_embed(xj):
    th, ph = xj
    s = J.sin(th)
    return [s * J.cos(ph), s * J.sin(ph), J.cos(th)]


def _polar_from(E):
    E = np.asarray(E, dtype=float)
    th = np.arccos(np.clip(E[..., 2], -1.0, 1.0))
    ph = np.mod(np.arctan2(E[..., 1], E[..., 0]), TWO_PI)
    return np.stack([th, ph], axis=-1)


def _polar_metric(radius):
    def metric(xj):
        th, _ = xj
        s = J.sin(th)
        r2 = radius ** 2
        zero = Jet.constant(0.0, th)
        return [[Jet.constant(r2, th), zero], [zero, r2 * s * s]]
    return metric


def _hopf_embed(xj):
    eta, x1, x2 = xj
    s, c = J.sin(eta), J.cos(eta)
    return [s * J.cos(x1), s * J.sin(x1), c * J.cos(x2), c * J.sin(x2)]


def _hopf_from(E):
    E = np.asarray(E, dtype=float)
    eta = np.arctan2(np.hypot(E[..., 0], E[..., 1]), np.hypot(E[..., 2], E[..., 3]))
    x1 = np.mod(np.arctan2(E[..., 1], E[..., 0]), TWO_PI)
    x2 = np.mod(np.arctan2(E[..., 3], E[..., 2]), TWO_PI)
    return np.stack([eta, x1, x2], axis=-1)


def _hopf_metric(radius):
    def metric(xj):
        eta = xj[0]
        s, c = J.sin(eta), J.cos(eta)
        r2 = radius ** 2
        zero = Jet.constant(0.0, eta)
        return [[Jet.constant(r2, eta), zero, zero],
                [zero, r2 * s * s, zero],
                [zero, zero, r2 * c * c]]
    return metric


def _sphere_charts(dim, radius, scale=None):
    """Charts of S^dim(radius); ``scale(embedding jets) -> Jet`` multiplies
    the metric conformally when given."""
    def conformal(metric, embed):
        if scale is None:
            return metric

        def scaled(xj):
            factor = scale(embed(xj))
            return [[factor * e for e in row] for row in metric(xj)]
        return scaled

    big = 1e300
    charts = {}
    if dim == 2:
        charts["polar"] = Chart("polar", 2, (0.0, 0.0), (math.pi, TWO_PI), (False, True),
                                conformal(_polar_metric(radius), _polar_embed),
                                _polar_embed, _polar_from)
    elif dim == 3:
        charts["hopf"] = Chart("hopf", 3, (0.0, 0.0, 0.0), (math.pi / 2, TWO_PI, TWO_PI),
                               (False, True, True),
                               conformal(_hopf_metric(radius), _hopf_embed),
                               _hopf_embed, _hopf_from)
    else:
        raise UnsupportedError(f"sphere fibers are built for dim 2 or 3, got {dim}")
    for name, sign in (("stereo-north", 1.0), ("stereo-south", -1.0)):
        emb = _stereo_embed(sign)
        charts[name] = Chart(name, dim, (-big,) * dim, (big,) * dim, (False,) * dim,
                             conformal(_stereo_metric(radius), emb), emb, _stereo_from(sign))
    return charts


def sphere(dim: int, radius: float = 1.0) -> Fiber:
    if radius <= 0:
        raise ContractError("sphere radius must be positive")
    charts = _sphere_charts(dim, radius)
    default = "polar" if dim == 2 else "hopf"
    vol = (4.0 * math.pi if dim == 2 else 2.0 * math.pi ** 2) * radius ** dim
    return Fiber("sphere", dim, charts, default, kappa=1.0 / radius ** 2,
                 volume=vol, params={"radius": radius}, basis="harmonic")


def _monomial_jet(E, exps):
    out = None
    for e, p in zip(E, exps):
        if p == 0:
            continue
        term = e ** int(p)
        out = term if out is None else out * term
    if out is None:
        out = Jet.constant(1.0, E[0])
    return out


def polynomial_on_embedding(E, terms):
    """Sum of c * prod_i E_i^{p_i} over ``terms = [(exponents, c), ...]``."""
    total = Jet.constant(0.0, E[0])
    for exps, c in terms:
        total = total + c * _monomial_jet(E, exps)
    return total


def perturbed_sphere(radius: float = 1.0, eps: float = 0.1, terms=None) -> Fiber:
    """S^2 with metric (1 + eps * Y) g_round, Y = sum of monomials in X, Y, Z."""
    terms = [((0, 0, 1), 1.0)] if terms is None else [(tuple(e), float(c)) for e, c in terms]
    bound = sum(abs(c) for _, c in terms)
    if abs(eps) * bound >= 1.0:
        raise ContractError("perturbation too large: 1 + eps * Y must stay positive")

    def scale(E):
        return 1.0 + eps * polynomial_on_embedding(E, terms)

    charts = _sphere_charts(2, radius, scale)
    # exact volume: integral of (1 + eps Y) over the round sphere
    vol = 4.0 * math.pi * radius ** 2 * (1.0 + eps * sum(c * _sphere_moment(e) for e, c in terms))
    return Fiber("perturbed-sphere", 2, charts, "polar", kappa=None, volume=vol,
                 params={"radius": radius, "eps": eps,
                         "terms": [[list(e), c] for e, c in terms]},
                 basis="harmonic")


def _sphere_moment(exps) -> float:
    """Average of X^a Y^b Z^c over the unit 2-sphere."""
    a, b, c = (int(p) for p in exps)
    if a % 2 or b % 2 or c % 2:
        return 0.0
    # mean of x^a y^b z^c = Gamma-function formula
    g = math.gamma
    num = 2.0 * g((a + 1) / 2) * g((b + 1) / 2) * g((c + 1) / 2)
    return num / g((a + b + c + 3) / 2) / (4.0 * math.pi)


def _sphere_quadrature(fiber: Fiber, level: int) -> QuadratureGrid:
    if fiber.dim == 2:
        nz, nphi = 2 ** (level + 1), 2 ** (level + 2)
        z, wz = np.polynomial.legendre.leggauss(nz)
        th = np.arccos(z)
        hphi = TWO_PI / nphi
        ph = np.arange(nphi) * hphi
        T, P = np.meshgrid(th, ph, indexing="ij")
        W = (wz / np.sin(th))[:, None] * hphi * np.ones_like(P)
        nodes = np.stack([T, P], axis=-1).reshape(-1, 2)
        return QuadratureGrid("polar", nodes, W.ravel(), level, (nz, nphi), hphi)
    ns = nx = 2 ** (level + 1)
    s, ws = np.polynomial.legendre.leggauss(ns)
    s = 0.5 * (s + 1.0)
    ws = 0.5 * ws
    eta = np.arcsin(np.sqrt(s))
    hx = TWO_PI / nx
    xi = np.arange(nx) * hx
    E, X1, X2 = np.meshgrid(eta, xi, xi, indexing="ij")
    # ds = 2 sin(eta) cos(eta) d eta
    weta = ws / (2.0 * np.sin(eta) * np.cos(eta))
    W = weta[:, None, None] * hx * hx * np.ones_like(X1)
    nodes = np.stack([E, X1, X2], axis=-1).reshape(-1, 3)
    return QuadratureGrid("hopf", nodes, W.ravel(), level, (ns, nx, nx), hx)


_QUADRATURE = {
    "torus": _torus_quadrature,
    "sphere": _sphere_quadrature,
    "perturbed-sphere": _sphere_quadrature,
}


def make_fiber(kind: str, dim: int, params: dict | None = None) -> Fiber:
    params = dict(params or {})
    if kind == "torus":
        if params:
            raise ContractError(f"torus takes no parameters, got {sorted(params)}")
        return torus(dim)
    if kind == "sphere":
        unknown = set(params) - {"radius"}
        if unknown:
            raise ContractError(f"unknown sphere parameters {sorted(unknown)}")
        return sphere(dim, params.get("radius", 1.0))
    if kind == "perturbed-sphere":
        if dim != 2:
            raise UnsupportedError("perturbed-sphere fiber is two-dimensional")
        unknown = set(params) - {"radius", "eps", "terms"}
        if unknown:
            raise ContractError(f"unknown perturbed-sphere parameters {sorted(unknown)}")
        return perturbed_sphere(params.get("radius", 1.0), params.get("eps", 0.1),
                                params.get("terms"))
    raise UnsupportedError(f"unknown fiber kind {kind!r}")
