"""Second-order operators on a spacelike graph: Hessians, L_k, div P_k.

Most quantities are available two ways, one by direct differentiation
and one through a closed form that uses only first-order data plus the
shape operator.  Tests compare the two.

Everything here works on a :class:`~grwkit.hypersurface.PointGeometry`
batch; frame components refer to its orthonormal frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .ambient import tensors
from .ambient.spacetime import SpacetimePoint
from .errors import ContractError, IndexRangeError, UnsupportedError
from .hypersurface import GraphHypersurface, PointGeometry, pointwise_geometry

FIELDS = ("height", "g-of-height", "support", "user")
SUPPORT_VARIANTS = ("general-RN", "space-form-fiber", "sectional-sum")
GAP_TOL = 1e-6


@dataclass(frozen=True)
class ScalarFieldOnSurface:
    """A scalar field sampled with its gradient and Hessian (frame components)."""

    provenance: str
    value: np.ndarray
    grad: np.ndarray
    hessian: np.ndarray
    method: str = "direct-trace"


@dataclass(frozen=True)
class OperatorValue:
    k: int
    value: np.ndarray
    method: str
    low_confidence: np.ndarray | bool = False


def _check_k(geo: PointGeometry, k: int, lo: int = 0, hi: int | None = None):
    hi = geo.n - 1 if hi is None else hi
    if not lo <= k <= hi:
        raise IndexRangeError(f"k must satisfy {lo} <= k <= {hi}, got {k}")


def _to_frame_op(geo, M):
    return np.swapaxes(geo.frame, -1, -2) @ M @ geo.frame


def _frame_inner(a, b):
    return np.einsum("...i,...i->...", a, b)


def _quad(P, v):
    return np.einsum("...i,...ij,...j->...", v, P, v)


# -- induced connection ----------------------------------------------------

def induced_christoffel(geo: PointGeometry) -> np.ndarray:
    """Gamma^k_ij of the induced metric, ``[..., k, i, j]``."""
    du, ddu, G, dG = geo.du, geo.ddu, geo.G, geo.dG
    f2 = geo.f ** 2
    ffp = geo.f * geo.df
    # dg[..., i, j, k] = d_k g_ij
    dg = (-(ddu[..., :, None, :] * du[..., None, :, None]
            + du[..., :, None, None] * ddu[..., None, :, :])
          + 2.0 * ffp[..., None, None, None] * G[..., :, :, None] * du[..., None, None, :]
          + f2[..., None, None, None] * dG)
    return tensors.christoffel(geo.g, dg)


def covariant_hessian(geo: PointGeometry, d, dd) -> np.ndarray:
    """Hessian in the orthonormal frame from chart first/second derivatives."""
    gam = induced_christoffel(geo)
    hess = dd - np.einsum("...kij,...k->...ij", gam, d)
    hess = 0.5 * (hess + np.swapaxes(hess, -1, -2))
    return _to_frame_op(geo, hess)


def _fd_derivatives(fn, x, delta):
    """Centered differences of a pointwise function: value, gradient, Hessian."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    eye = np.eye(n)
    offsets = [np.zeros(n)]
    for i in range(n):
        offsets += [delta * eye[i], -delta * eye[i]]
    for i in range(n):
        for j in range(i + 1, n):
            for si in (1, -1):
                for sj in (1, -1):
                    offsets.append(delta * (si * eye[i] + sj * eye[j]))
    offsets = np.array(offsets)
    X = x[..., None, :] + offsets
    vals = fn(X.reshape(-1, n)).reshape(X.shape[:-1])
    v0 = vals[..., 0]
    d = np.empty(x.shape)
    dd = np.empty(x.shape + (n,))
    for i in range(n):
        p, m = vals[..., 1 + 2 * i], vals[..., 2 + 2 * i]
        d[..., i] = (p - m) / (2 * delta)
        dd[..., i, i] = (p - 2 * v0 + m) / delta ** 2
    pos = 1 + 2 * n
    for i in range(n):
        for j in range(i + 1, n):
            pp, pm, mp, mm = (vals[..., pos + s] for s in range(4))
            pos += 4
            dd[..., i, j] = dd[..., j, i] = (pp - pm - mp + mm) / (4 * delta ** 2)
    return v0, d, dd


def support_function(surface: GraphHypersurface, chart: str, orientation: str):
    """x -> <N, K> as a plain pointwise function."""
    def fn(X):
        return pointwise_geometry(surface, X, chart, orientation).N_K
    return fn


def hessian_on_surface(geo: PointGeometry, field: str = "height", fn=None,
                       delta: float = 1e-3) -> ScalarFieldOnSurface:
    """Hessian operator of ``field`` at the points of ``geo``.

    ``height`` and ``g-of-height`` use exact jets of u.  ``support``
    (<N, K>) would need third derivatives of u, so it is routed to centered
    finite differences, as is a ``user`` callable ``fn(x) -> values``.
    """
    if field not in FIELDS:
        raise ContractError(f"field must be one of {FIELDS}, got {field!r}")
    if field == "height":
        val, d, dd = geo.h, geo.du, geo.ddu
        method = "direct-trace"
    elif field == "g-of-height":
        w = geo.surface.spacetime.warping
        val = w.primitive(geo.h)
        d = geo.f[..., None] * geo.du
        dd = (geo.f[..., None, None] * geo.ddu
              + geo.df[..., None, None] * geo.du[..., :, None] * geo.du[..., None, :])
        method = "direct-trace"
    else:
        if field == "support":
            fn = support_function(geo.surface, geo.chart, geo.orientation)
        elif fn is None:
            raise ContractError("a user field needs a callable")
        val, d, dd = _fd_derivatives(fn, geo.x, delta)
        method = "finite-difference"
    grad = np.einsum("...ji,...j->...i", geo.frame, d)
    return ScalarFieldOnSurface(field, val, grad, covariant_hessian(geo, d, dd), method)


def hessian_height_formula(geo: PointGeometry) -> np.ndarray:
    """-(log f)'(h)(X + <grad h, X> grad h) + <N, d/dt> A X."""
    n = geo.n
    gh = geo.grad_h
    return (-geo.L1[..., None, None] * (np.eye(n) + gh[..., :, None] * gh[..., None, :])
            + geo.N_dt[..., None, None] * geo.A)


def hessian_g_formula(geo: PointGeometry) -> np.ndarray:
    """-f'(h) X + <N, K> A X."""
    return -geo.df[..., None, None] * np.eye(geo.n) + geo.N_K[..., None, None] * geo.A


# -- L_k ---------------------------------------------------------------------

def Lk_direct(geo: PointGeometry, field, k: int, **kwargs) -> OperatorValue:
    """trace(P_k o Hess(phi)); ``field`` is a name or a precomputed field."""
    _check_k(geo, k)
    sf = field if isinstance(field, ScalarFieldOnSurface) else hessian_on_surface(geo, field, **kwargs)
    val = np.einsum("...ij,...ji->...", geo.Pk(k), sf.hessian)
    return OperatorValue(k, val, sf.method)


def Lk_height_formula(geo: PointGeometry, k: int) -> OperatorValue:
    _check_k(geo, k)
    ck = geo.newton.c[k]
    val = (-geo.L1 * (ck * geo.Hk(k) + _quad(geo.Pk(k), geo.grad_h))
           - geo.N_dt * ck * geo.Hk(k + 1))
    return OperatorValue(k, val, "closed-form")


def Lk_g_formula(geo: PointGeometry, k: int) -> OperatorValue:
    _check_k(geo, k)
    ck = geo.newton.c[k]
    val = -ck * (geo.df * geo.Hk(k) + geo.N_K * geo.Hk(k + 1))
    return OperatorValue(k, val, "closed-form")


# -- divergence of P_k -------------------------------------------------------

def _spacetime_point(geo: PointGeometry):
    return SpacetimePoint(geo.surface.spacetime, geo.h, geo.x, geo.chart, geo.fiber_point)


def divPk_pairing_general(geo: PointGeometry, k: int, X=None) -> np.ndarray:
    """<div P_k, X> = sum_{j<k} sum_i <R(E_i, A^{k-1-j} X) N, P_j E_i>.

    ``X`` defaults to grad h (frame components).
    """
    _check_k(geo, k)
    X = geo.grad_h if X is None else X
    if k == 0:
        return np.zeros(X.shape[:-1])
    sp = _spacetime_point(geo)
    frame = geo.frame_vectors()
    N = geo.N
    # powers A^m X for m = 0..k-1
    powers = [X]
    for _ in range(k - 1):
        powers.append(np.einsum("...ij,...j->...i", geo.A, powers[-1]))
    total = np.zeros(X.shape[:-1])
    for i, Ei in enumerate(frame):
        for j in range(k):
            Y = geo.tangent(powers[k - 1 - j])
            R = sp.curvature(Ei, Y, N)
            PjEi = geo.tangent(geo.Pk(j)[..., :, i])
            total = total + sp.inner(R, PjEi)
    return total


def ricci_normal_gradient(geo: PointGeometry) -> np.ndarray:
    """Ric(N, grad h) from the ambient Ricci formula."""
    sp = _spacetime_point(geo)
    return sp.ricci(geo.N, geo.tangent(geo.grad_h))


def _kappa(geo: PointGeometry):
    fiber = geo.surface.fiber
    if fiber.kappa is None:
        raise UnsupportedError(f"fiber {fiber.kind!r} does not have constant sectional curvature")
    return fiber.kappa


def divPk_pairing_rw(geo: PointGeometry, k: int) -> np.ndarray:
    """(n-k)(kappa/f^2 - (log f)'') <N, d/dt> <P_{k-1} grad h, grad h>."""
    _check_k(geo, k, 1)
    kappa = _kappa(geo)
    factor = kappa / geo.f ** 2 - geo.L2
    return (geo.n - k) * factor * geo.N_dt * _quad(geo.Pk(k - 1), geo.grad_h)


# -- L_k of the support function ----------------------------------------------

def grad_Hk_fd(surface: GraphHypersurface, x, chart: str, j: int,
               orientation: str = "future", delta: float = 1e-4) -> np.ndarray:
    """Chart gradient of H_j by centered differences (second order)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if surface.is_slice:
        return np.zeros(x.shape)
    eye = np.eye(n)
    X = np.concatenate([x[..., None, :] + delta * eye, x[..., None, :] - delta * eye], axis=-2)
    geo = pointwise_geometry(surface, X.reshape(-1, n), chart, orientation)
    Hj = np.asarray(geo.newton.H.Hk(j)).reshape(X.shape[:-1])
    return (Hj[..., :n] - Hj[..., n:]) / (2 * delta)


def tr_Pk_RN(geo: PointGeometry, k: int) -> np.ndarray:
    """trace(P_k o R_N) with R_N(X) = (R(N, X) N)^T."""
    sp = _spacetime_point(geo)
    total = np.zeros(geo.h.shape)
    for i, Ei in enumerate(geo.frame_vectors()):
        R = sp.curvature(geo.N, Ei, geo.N)
        total = total + sp.inner(R, geo.tangent(geo.Pk(k)[..., :, i]))
    return total


def _fiber_gaussian_or_kappa(geo: PointGeometry):
    fiber = geo.surface.fiber
    if geo.n == 2:
        return fiber.min_sectional_curvature(geo.fiber_point)
    return _kappa(geo)


def Lk_support_formula(geo: PointGeometry, k: int, variant: str = "general-RN",
                       grad_H=None, delta: float = 1e-4) -> OperatorValue:
    """L_k <N, K> from first-order data, ``A`` and curvature.

    ``grad_H`` is the chart gradient of H_{k+1}; when omitted it is
    finite-differenced.  ``sectional-sum`` needs an eigenframe of A and is
    flagged low-confidence where two principal curvatures nearly coincide.
    """
    _check_k(geo, k)
    if variant not in SUPPORT_VARIANTS:
        raise ContractError(f"variant must be one of {SUPPORT_VARIANTS}, got {variant!r}")
    n = geo.n
    ck = geo.newton.c[k]
    b = comb(n, k + 1)
    if grad_H is None:
        grad_H = grad_Hk_fd(geo.surface, geo.x, geo.chart, k + 1, geo.orientation, delta)
    grad_H_frame = np.einsum("...ji,...j->...i", geo.frame, grad_H)
    NK = geo.N_K
    base = (b * _frame_inner(grad_H_frame, geo.K_top)
            + geo.df * ck * geo.Hk(k + 1)
            + b * NK * (n * geo.Hk(1) * geo.Hk(k + 1) - (n - k - 1) * geo.Hk(k + 2)))
    gh2 = geo.grad_h_norm2
    mixed = ck * geo.Hk(k) * gh2 - _quad(geo.Pk(k), geo.grad_h)
    low = np.zeros(geo.h.shape, dtype=bool)
    if variant == "general-RN":
        tail = NK * (tr_Pk_RN(geo, k) + geo.ddf / geo.f * ck * geo.Hk(k))
    elif variant == "space-form-fiber":
        kappa = _fiber_gaussian_or_kappa(geo)
        tail = NK * (kappa / geo.f ** 2 - geo.L2) * mixed
    else:
        acc, low = sectional_sum(geo, k)
        tail = NK / geo.f ** 2 * acc - NK * geo.L2 * mixed
    return OperatorValue(k, base + tail, f"closed-form:{variant}", low)


def sectional_sum(geo: PointGeometry, k: int):
    """sum_i mu_{i,k} K_M(N* ^ E_i*) ||N* ^ E_i*||^2 over an eigenframe of A.

    Uses ||N* ^ E_i*||^2 = ||grad h||^2 - <E_i, grad h>^2.  Returns the sum
    and a flag marking points where two principal curvatures are closer
    than the gap tolerance, where the eigenframe is not determined.
    """
    n = geo.n
    kap, vecs = geo.newton.eigenvalues, geo.newton.eigenvectors
    low = np.zeros(geo.h.shape, dtype=bool)
    if n > 1:
        gap = np.min(np.diff(kap, axis=-1), axis=-1)
        low = gap < GAP_TOL * (1 + np.max(np.abs(kap), axis=-1))
    mu = np.einsum("...ji,...jk,...ki->...i", vecs, geo.Pk(k), vecs)
    Nstar = geo.N[1]
    fp = geo.fiber_point
    gh2 = geo.grad_h_norm2
    acc = np.zeros(geo.h.shape)
    for i in range(n):
        Ei_frame = vecs[..., :, i]
        Ei_star = np.einsum("...ab,...b->...a", geo.frame, Ei_frame)
        wedge = gh2 - _frame_inner(Ei_frame, geo.grad_h) ** 2
        Q = (_quad(fp.G, Nstar) * _quad(fp.G, Ei_star)
             - np.einsum("...a,...ab,...b->...", Nstar, fp.G, Ei_star) ** 2)
        num = np.einsum("...a,...ab,...b->...",
                        tensors.apply_riemann(fp.riem, Nstar, Ei_star, Nstar), fp.G, Ei_star)
        safe = Q > 1e-300
        KM = np.where(safe, num / np.where(safe, Q, 1.0), 0.0)
        acc = acc + mu[..., i] * KM * wedge
    return acc, low


def theta_term(geo: PointGeometry, j: int) -> np.ndarray:
    """sum_i mu_{i,j} K_M ||N* ^ E_i*||^2 / f^2 - (log f)''(c_j H_j ||grad h||^2 - <P_j grad h, grad h>)."""
    acc, _ = sectional_sum(geo, j)
    mixed = geo.newton.c[j] * geo.Hk(j) * geo.grad_h_norm2 - _quad(geo.Pk(j), geo.grad_h)
    return acc / geo.f ** 2 - geo.L2 * mixed


def laplacian_support_formula(geo: PointGeometry, grad_H=None, delta: float = 1e-4) -> np.ndarray:
    """Delta <N, K> via Ric_M(N*, N*), with ||A||^2 = n^2 H^2 - n(n-1) H_2."""
    n = geo.n
    if grad_H is None:
        grad_H = grad_Hk_fd(geo.surface, geo.x, geo.chart, 1, geo.orientation, delta)
    grad_H_frame = np.einsum("...ji,...j->...i", geo.frame, grad_H)
    H = geo.Hk(1)
    normA2 = n * n * H * H - n * (n - 1) * geo.Hk(2)
    return (n * _frame_inner(grad_H_frame, geo.K_top) + n * geo.df * H
            + geo.N_K * normA2 + geo.N_K * ricci_term(geo))


def ricci_term(geo: PointGeometry) -> np.ndarray:
    """Ric_M(N*, N*) - (n-1)(log f)''(h) ||grad h||^2."""
    Nstar = geo.N[1]
    ric = _quad(geo.fiber_point.ric, Nstar)
    return ric - (geo.n - 1) * geo.L2 * geo.grad_h_norm2


def Lk_support_fd(geo: PointGeometry, k: int, delta: float = 1e-3) -> OperatorValue:
    """Finite-difference oracle for L_k <N, K>."""
    return Lk_direct(geo, "support", k, delta=delta)


# -- Codazzi and divergence checks --------------------------------------------

def _shape_chart(surface, X, chart, orientation):
    geo = pointwise_geometry(surface, X, chart, orientation)
    return geo, np.einsum("...ij,...jk->...ik", geo.ginv, geo.II)


def codazzi_residual(surface: GraphHypersurface, x, chart: str | None = None,
                     orientation: str = "future", delta: float = 1e-4) -> np.ndarray:
    """max_{i,j} |(R(d_i, d_j) N)^T - ((nabla_i A) d_j - (nabla_j A) d_i)|, normalised.

    Derivatives of A are centered differences; the result is relative to
    ``1 + max|A|``.
    """
    chart = chart or surface.fiber.default_chart
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    geo, Ach = _shape_chart(surface, x, chart, orientation)
    eye = np.eye(n)
    dA = np.empty(Ach.shape + (n,))  # dA[..., a, b, i] = d_i A^a_b
    for i in range(n):
        _, Ap = _shape_chart(surface, x + delta * eye[i], chart, orientation)
        _, Am = _shape_chart(surface, x - delta * eye[i], chart, orientation)
        dA[..., i] = (Ap - Am) / (2 * delta)
    gam = induced_christoffel(geo)
    # (nabla_i A)^a_b = d_i A^a_b + Gam^a_ic A^c_b - Gam^c_ib A^a_c
    nabA = (dA + np.einsum("...aic,...cb->...abi", gam, Ach)
            - np.einsum("...cib,...ac->...abi", gam, Ach))
    lhs_codazzi = nabA - np.swapaxes(nabA, -1, -2)  # [a, j, i] = (nabla_i A)d_j - (nabla_j A)d_i
    sp = _spacetime_point(geo)
    worst = np.zeros(x.shape[:-1])
    tangents = [(geo.du[..., i], np.broadcast_to(eye[i], x.shape)) for i in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            R = sp.curvature(tangents[i], tangents[j], geo.N)
            comps = np.stack([sp.inner(R, t) for t in tangents], axis=-1)
            Rtop = np.einsum("...ab,...b->...a", geo.ginv, comps)
            diff = Rtop - lhs_codazzi[..., :, j, i]
            worst = np.maximum(worst, np.max(np.abs(diff), axis=-1))
    return worst / (1.0 + np.max(np.abs(Ach), axis=(-2, -1)))


def divergence_decomposition_fd(surface: GraphHypersurface, x, k: int,
                                chart: str | None = None, orientation: str = "future",
                                delta: float = 1e-4):
    """(div(P_k grad g(h)), <div P_k, grad g(h)> + L_k(g(h))) at ``x``.

    The divergence is (1/sqrt det g) d_i(sqrt det g V^i) with the chart
    derivative finite-differenced.
    """
    chart = chart or surface.fiber.default_chart
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]

    def flux(X):
        geo = pointwise_geometry(surface, X, chart, orientation)
        V_frame = geo.f[..., None] * np.einsum("...ij,...j->...i", geo.Pk(k), geo.grad_h)
        V = np.einsum("...ij,...j->...i", geo.frame, V_frame)
        return geo.density[..., None] * V

    eye = np.eye(n)
    div = np.zeros(x.shape[:-1])
    for i in range(n):
        div = div + (flux(x + delta * eye[i])[..., i] - flux(x - delta * eye[i])[..., i]) / (2 * delta)
    geo = pointwise_geometry(surface, x, chart, orientation)
    div = div / geo.density
    rhs = geo.f * divPk_pairing_general(geo, k) + Lk_g_formula(geo, k).value
    return div, rhs
