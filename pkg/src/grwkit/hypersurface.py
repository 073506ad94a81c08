"""Spacelike graphs t = u(x) over the fiber and their extrinsic geometry.

The height ``u`` is a finite expansion: Fourier modes on the torus,
monomials in the unit embedding coordinates on spheres.  Both give exact
2-jets, so the shape operator is computed from exact second derivatives.

Conventions: the graph map is ``psi(x) = (u(x), x)`` with tangents
``d_i psi = (u_i, e_i)``; the future unit normal is
``N = a (d/dt + G^{-1} du / f^2)`` with ``a = 1 / sqrt(1 - |du|^2 / f^2)``;
the shape operator is ``A = -(nabla N)^T``, so ``<AX, Y> = <N, nabla_X Y>``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import curvalg
from .ambient.fiber import QuadratureGrid
from .ambient.spacetime import GRWSpacetime
from .errors import ContractError, DegenerateMetricError
from .jets import Jet

ORIENTATIONS = ("future", "past")


class EvaluationCounter:
    """Counts surface points pushed through :func:`pointwise_geometry`."""

    def __init__(self):
        self.points = 0

    def reset(self) -> None:
        self.points = 0


evaluations = EvaluationCounter()


def _fourier_modes(n: int, degree: int):
    """Half of the nonzero integer vectors with entries in [-degree, degree]."""
    modes = []
    for m in itertools.product(range(-degree, degree + 1), repeat=n):
        if any(m) and m > tuple(-c for c in m):
            modes.append(m)
    return modes


def _monomials(nvars: int, degree: int):
    out = []
    for d in range(1, degree + 1):
        for exps in itertools.product(range(d + 1), repeat=nvars):
            if sum(exps) == d:
                out.append(exps)
    return out


@dataclass(frozen=True)
class GraphHypersurface:
    """The graph ``t = t0 + sum_j c_j phi_j(x)`` in ``spacetime``.

    ``terms`` are basis labels: ``("cos", m)`` / ``("sin", m)`` with an
    integer vector ``m`` for Fourier bases, exponent tuples for monomial
    bases.  A slice has no terms.
    """

    spacetime: GRWSpacetime
    t0: float
    terms: tuple = ()
    coeffs: tuple = ()
    label: str = "graph"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.terms) != len(self.coeffs):
            raise ContractError("terms and coeffs must have equal length")

    @property
    def fiber(self):
        return self.spacetime.fiber

    @property
    def n(self) -> int:
        return self.fiber.dim

    @property
    def is_slice(self) -> bool:
        return not any(c != 0.0 for c in self.coeffs)

    # -- height ------------------------------------------------------------
    def height(self, x, chart: str | None = None):
        """Value, chart gradient and chart Hessian of u at ``x``."""
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        val = np.full(x.shape[:-1], float(self.t0))
        d = np.zeros(x.shape)
        dd = np.zeros(x.shape + (n,))
        if self.is_slice:
            return val, d, dd
        if self.fiber.basis == "fourier":
            chart = chart or self.fiber.default_chart
            if chart != "angles":
                raise ContractError("Fourier heights are defined on the angle chart")
            cos_m = [(c, np.asarray(m, float)) for (kind, m), c in zip(self.terms, self.coeffs)
                     if kind == "cos"]
            sin_m = [(c, np.asarray(m, float)) for (kind, m), c in zip(self.terms, self.coeffs)
                     if kind == "sin"]
            for group, is_cos in ((cos_m, True), (sin_m, False)):
                if not group:
                    continue
                c = np.array([g[0] for g in group])
                M = np.stack([g[1] for g in group])
                ph = x @ M.T
                s, co = np.sin(ph), np.cos(ph)
                v0, v1 = (co, -s) if is_cos else (s, co)
                val = val + v0 @ c
                d = d + (v1 * c) @ M
                dd = dd - np.einsum("...j,jk,jl->...kl", v0 * c, M, M)
            return val, d, dd
        u = self.height_jet(Jet.variables(x), chart)
        return u.val, u.d, u.dd

    def height_jet(self, xj, chart: str | None = None) -> Jet:
        """u as a jet in the chart coordinates ``xj`` (monomial bases only)."""
        E = self.fiber.chart(chart).embed(xj)
        total = Jet.constant(float(self.t0), xj[0])
        powers = {}
        for exps, c in zip(self.terms, self.coeffs):
            term = None
            for i, p in enumerate(exps):
                if p == 0:
                    continue
                key = (i, p)
                if key not in powers:
                    powers[key] = E[i] ** int(p)
                term = powers[key] if term is None else term * powers[key]
            total = total + c * term
        return total

    def height_range(self, level: int = 4) -> tuple[float, float]:
        grid = self.fiber.quadrature(level)
        h = self.height(grid.nodes, grid.chart)[0]
        return float(np.min(h)), float(np.max(h))

    # -- geometry ----------------------------------------------------------
    def induced_metric(self, x, chart: str | None = None):
        """g = f(u)^2 g_M - du du^T in chart coordinates."""
        x = np.asarray(x, dtype=float)
        h, du, _ = self.height(x, chart)
        G = self.fiber.metric_jet(x, chart)[0]
        f = self.spacetime.warping.f(h)
        _check_spacelike(x, f, du, G)
        return f[..., None, None] ** 2 * G - du[..., :, None] * du[..., None, :]

    def geometry(self, x, chart: str | None = None,
                 orientation: str = "future") -> "PointGeometry":
        return pointwise_geometry(self, x, chart, orientation)


def _check_spacelike(x, f, du, G):
    grad2 = np.einsum("...i,...i->...", du, np.linalg.solve(G, du[..., None])[..., 0])
    margin = f ** 2 - grad2
    bad = margin <= 1e-12 * f ** 2
    if np.any(bad):
        i = np.unravel_index(int(np.argmin(margin)), np.shape(margin))
        raise DegenerateMetricError(
            f"surface is not spacelike at x={np.asarray(x)[i].tolist()}: "
            f"f(u)^2 - |du|^2 = {float(np.asarray(margin)[i])!r}",
            point=np.asarray(x)[i].tolist(), margin=float(np.asarray(margin)[i]))
    return margin


@dataclass(frozen=True)
class PointGeometry:
    """Extrinsic data at a batch of surface points (leading dims ``B``).

    Frame quantities (``A``, ``grad_h``, ``K_top``, ``P``) are expressed in
    the orthonormal frame whose chart components are the columns of
    ``frame``.  ``N`` is stored as ``(a, v)``: ``a d/dt + v``.
    """

    surface: GraphHypersurface
    chart: str
    orientation: str
    x: np.ndarray
    h: np.ndarray
    du: np.ndarray
    ddu: np.ndarray
    G: np.ndarray
    dG: np.ndarray
    gamma_M: np.ndarray
    fiber_point: object
    f: np.ndarray
    df: np.ndarray
    ddf: np.ndarray
    L1: np.ndarray
    L2: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    frame: np.ndarray
    density: np.ndarray
    spacelike_margin: np.ndarray
    N: tuple
    II: np.ndarray
    A: np.ndarray
    newton: curvalg.NewtonFamily
    grad_h_chart: np.ndarray
    grad_h: np.ndarray
    N_dt: np.ndarray
    N_K: np.ndarray
    K_top_chart: np.ndarray
    K_top: np.ndarray

    @property
    def n(self) -> int:
        return self.G.shape[-1]

    @property
    def kappa(self) -> np.ndarray:
        return self.newton.eigenvalues

    @property
    def H(self) -> np.ndarray:
        return self.newton.H.H

    def Hk(self, k: int):
        return self.newton.H.Hk(k)

    def Pk(self, k: int) -> np.ndarray:
        return self.newton.Pk(k)

    @property
    def grad_h_norm2(self) -> np.ndarray:
        return np.sum(self.grad_h ** 2, axis=-1)

    def tangent(self, X):
        """Ambient ``(a, v)`` form of frame-component tangent vectors ``X``."""
        chart_comp = np.einsum("...ij,...j->...i", self.frame, X)
        return np.einsum("...i,...i->...", self.du, chart_comp), chart_comp

    def frame_vectors(self):
        """The orthonormal tangent frame E_1..E_n as ambient ``(a, v)`` pairs."""
        a = np.einsum("...i,...ij->...j", self.du, self.frame)
        return [(a[..., j], self.frame[..., :, j]) for j in range(self.n)]

    def to_frame(self, chart_vec):
        """Frame components of a tangent vector given in chart components."""
        return np.einsum("...ji,...jk,...k->...i", self.frame, self.g, chart_vec)

    def fiber_part_of_normal(self):
        """N* = N + <N, d/dt> d/dt, as chart components of a fiber vector."""
        return self.N[1]

    def umbilicity(self) -> np.ndarray:
        n = self.n
        tr = np.trace(self.A, axis1=-2, axis2=-1)
        dev = self.A - (tr / n)[..., None, None] * np.eye(n)
        return np.linalg.norm(dev, axis=(-2, -1))


def pointwise_geometry(surface: GraphHypersurface, x, chart: str | None = None,
                       orientation: str = "future") -> PointGeometry:
    if orientation not in ORIENTATIONS:
        raise ContractError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")
    st = surface.spacetime
    fiber = st.fiber
    chart = chart or fiber.default_chart
    x = np.asarray(x, dtype=float)
    evaluations.points += int(np.prod(x.shape[:-1]))
    h, du, ddu = surface.height(x, chart)
    fp = fiber.at(x, chart)
    G, dG, gam = fp.G, fp.dG, fp.gamma
    f, df, ddf = st.warping.derivatives(h)
    L1, L2 = st.warping.log_d1(h), st.warping.log_d2(h)
    margin = _check_spacelike(x, f, du, G)

    n = x.shape[-1]
    Ginv = np.linalg.inv(G)
    Ginv_du = np.einsum("...ij,...j->...i", Ginv, du)
    q = np.einsum("...i,...i->...", du, Ginv_du) / f ** 2
    a = 1.0 / np.sqrt(1.0 - q)
    Na = a
    Nv = (a / f ** 2)[..., None] * Ginv_du

    f2 = f ** 2
    g = f2[..., None, None] * G - du[..., :, None] * du[..., None, :]
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    ginv = np.linalg.inv(g)
    try:
        L = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMetricError(f"induced metric not positive-definite: {exc}") from exc
    frame = np.swapaxes(np.linalg.inv(L), -1, -2)
    density = np.prod(np.diagonal(L, axis1=-2, axis2=-1), axis=-1)

    # ambient nabla_{d_i psi} d_j psi
    ffp = f * df
    Vt = ddu + ffp[..., None, None] * G
    lf = df / f
    eye = np.eye(n)
    Vx = (lf[..., None, None, None]
          * (du[..., :, None, None] * eye[None, :, :] + du[..., None, :, None] * eye[:, None, :])
          + np.moveaxis(gam, -3, -1))  # Vx[..., i, j, k] = k-component
    II = -a[..., None, None] * Vt + np.einsum("...k,...ijk->...ij", a[..., None] * du, Vx)
    II = 0.5 * (II + np.swapaxes(II, -1, -2))

    future = orientation == "future"
    if not future:
        Na, Nv, II = -Na, -Nv, -II
    A = np.swapaxes(frame, -1, -2) @ II @ frame
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    fam = curvalg.newton_family(A, future)

    grad_chart = np.einsum("...ij,...j->...i", ginv, du)
    grad = np.einsum("...ji,...j->...i", frame, du)
    N_dt = -Na
    N_K = -f * Na
    # K^T = K + <K, N> N, pulled back to chart components
    K_top_chart = N_K[..., None] * Nv
    K_top = np.einsum("...ji,...jk,...k->...i", frame, g, K_top_chart)
    return PointGeometry(surface, chart, orientation, x, h, du, ddu, G, dG, gam, fp,
                         f, df, ddf, L1, L2, g, ginv, frame, density, margin,
                         (Na, Nv), II, A, fam, grad_chart, grad, N_dt, N_K,
                         K_top_chart, K_top)


# -- constructors ----------------------------------------------------------

def slice_surface(spacetime: GRWSpacetime, t0: float) -> GraphHypersurface:
    return GraphHypersurface(spacetime, float(t0), (), (), label="slice")


def graph_surface(spacetime: GRWSpacetime, t0: float, terms, coeffs,
                  label: str = "graph") -> GraphHypersurface:
    basis = spacetime.fiber.basis
    norm_terms = []
    for term in terms:
        if basis == "fourier":
            kind, m = term
            if kind not in ("cos", "sin"):
                raise ContractError(f"Fourier term kind must be cos or sin, got {kind!r}")
            m = tuple(int(v) for v in m)
            if len(m) != spacetime.n:
                raise ContractError(f"mode {m} has wrong dimension for n={spacetime.n}")
            norm_terms.append((kind, m))
        else:
            exps = tuple(int(v) for v in term)
            nemb = spacetime.n + 1
            if len(exps) != nemb or min(exps) < 0:
                raise ContractError(f"monomial exponents {exps} must be {nemb} non-negative ints")
            norm_terms.append(exps)
    return GraphHypersurface(spacetime, float(t0), tuple(norm_terms),
                             tuple(float(c) for c in coeffs), label=label)


def random_graph(spacetime: GRWSpacetime, t0: float, amplitude: float = 0.05,
                 degree: int = 2, seed: int = 0) -> GraphHypersurface:
    """Random analytic graph with ``|u - t0| <= amplitude`` everywhere.

    Coefficients are normalised to ``sum |c| = amplitude``; every basis
    function is bounded by 1, which gives the bound.
    """
    if degree < 1:
        raise ContractError("degree must be >= 1")
    rng = np.random.default_rng(seed)
    n = spacetime.n
    if spacetime.fiber.basis == "fourier":
        terms = [(kind, m) for m in _fourier_modes(n, degree) for kind in ("cos", "sin")]
    else:
        terms = _monomials(n + 1, degree)
    c = rng.normal(size=len(terms))
    c *= amplitude / np.sum(np.abs(c))
    return graph_surface(spacetime, t0, terms, c, label=f"random(seed={seed})")


# -- scans -----------------------------------------------------------------

@dataclass(frozen=True)
class UmbilicityDeficit:
    deficit: float
    location: list
    chart: str


def umbilicity_deficit(surface: GraphHypersurface, grid: QuadratureGrid,
                       orientation: str = "future") -> UmbilicityDeficit:
    geo = pointwise_geometry(surface, grid.nodes, grid.chart, orientation)
    dev = geo.umbilicity()
    i = int(np.argmax(dev))
    return UmbilicityDeficit(float(dev[i]), grid.nodes[i].tolist(), grid.chart)


@dataclass(frozen=True)
class EllipticScan:
    status: str  # "ok" | "hypothesis-violated"
    sign: int  # sign of f' on the height range
    orientation: str
    location: list = field(default_factory=list)
    h_extreme: float = float("nan")
    principal: list = field(default_factory=list)
    bound: float = float("nan")
    grid_tol: float = 5e-2
    margin: float = float("nan")
    holds: bool = False
    elliptic_found: bool = False
    elliptic_count: int = 0
    refined_location: list = field(default_factory=list)
    refined_chart: str = ""
    refined_principal: list = field(default_factory=list)
    refined_bound: float = float("nan")
    refined_margin: float = float("nan")
    reason: str = ""


def refine_extremum(surface, x0, chart, maximize):
    """Newton steps on grad u = 0 in a chart that is regular near ``x0``."""
    fiber = surface.fiber
    if fiber.basis != "fourier":
        E = fiber.embedding(x0[None], chart)[0]
        chart2 = "stereo-south" if E[-1] >= 0 else "stereo-north"
        x = fiber.chart(chart2).from_embedding(E[None])[0]
    else:
        chart2, x = chart, np.array(x0, dtype=float)
    for _ in range(30):
        _, d, dd = surface.height(x[None], chart2)
        d, dd = d[0], dd[0]
        try:
            step = np.linalg.solve(dd, d)
        except np.linalg.LinAlgError:
            break
        if np.linalg.norm(step) > 0.5:
            step *= 0.5 / np.linalg.norm(step)
        x = x - step
        if np.linalg.norm(step) < 1e-14:
            break
    _, d, dd = surface.height(x[None], chart2)
    eig = np.linalg.eigvalsh(dd[0])
    ok = np.linalg.norm(d) < 1e-9 and (np.all(eig < 0) if maximize else np.all(eig > 0))
    return (x, chart2) if ok else (None, chart2)


def elliptic_point_scan(surface: GraphHypersurface, grid: QuadratureGrid,
                        orientation: str | None = None, grid_tol: float = 5e-2) -> EllipticScan:
    """Check the principal curvatures at the extremum of the height.

    With ``f' > 0`` on the height range the minimum of ``h`` is used with
    the future normal, bound ``-(log f)'(h_min)``; with ``f' < 0`` the
    maximum with the past normal, bound ``(log f)'(h_max)``.
    """
    w = surface.spacetime.warping
    lo, hi = surface.height_range(max(grid.level, 4))
    ts = np.linspace(lo, hi, 257)
    dfs = w.df(ts)
    if np.all(dfs > 0):
        sign = 1
    elif np.all(dfs < 0):
        sign = -1
    else:
        return EllipticScan("hypothesis-violated", 0, orientation or "future", grid_tol=grid_tol,
                            reason="f' vanishes or changes sign on the height range "
                                   f"[{lo!r}, {hi!r}]")
    orientation = orientation or ("future" if sign > 0 else "past")
    geo = pointwise_geometry(surface, grid.nodes, grid.chart, orientation)
    i = int(np.argmin(geo.h) if sign > 0 else np.argmax(geo.h))
    h_ext = float(geo.h[i])
    bound = float(-w.log_d1(h_ext) if sign > 0 else w.log_d1(h_ext))
    kap = geo.kappa[i]
    margin = float(bound - np.max(kap))
    elliptic = np.all(geo.kappa < 0, axis=-1)
    scan = dict(status="ok", sign=sign, orientation=orientation,
                location=grid.nodes[i].tolist(), h_extreme=h_ext, principal=kap.tolist(),
                bound=bound, grid_tol=grid_tol, margin=margin,
                holds=bool(margin >= -grid_tol),
                elliptic_found=bool(np.any(elliptic)), elliptic_count=int(np.sum(elliptic)))
    if not surface.is_slice:
        xr, chart2 = refine_extremum(surface, grid.nodes[i], grid.chart, sign < 0)
        if xr is not None:
            g2 = pointwise_geometry(surface, xr[None], chart2, orientation)
            h2 = float(g2.h[0])
            b2 = float(-w.log_d1(h2) if sign > 0 else w.log_d1(h2))
            scan.update(refined_location=xr.tolist(), refined_chart=chart2,
                        refined_principal=g2.kappa[0].tolist(), refined_bound=b2,
                        refined_margin=float(b2 - np.max(g2.kappa[0])))
    return EllipticScan(**scan)
